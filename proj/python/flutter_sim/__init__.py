"""Blink/Flutter discrete-event simulator."""

import json

from ._core import (
    BudgetExceeded,
    ConfigError,
    behaviors,
    bet_for,
    compare_tuples,
    lock_time,
)
from . import _core

__all__ = [
    "BudgetExceeded",
    "ConfigError",
    "behaviors",
    "bet_for",
    "compare_tuples",
    "lock_time",
    "run_scenario",
    "run_campaign",
]


def _text(scenario):
    return scenario if isinstance(scenario, str) else json.dumps(scenario)


def run_scenario(scenario):
    """Run a scenario (dict or JSON text). Returns (report dict, list of trace events)."""
    report, trace = _core.run_scenario(_text(scenario))
    return json.loads(report), [json.loads(line) for line in trace.splitlines()]


def run_campaign(scenario, seeds, behaviors=None, parallel=1):
    """Run an inclusive (first, last) seed range over the given behavior ids (default all)."""
    first, last = seeds
    ids = list(behaviors) if behaviors is not None else _core.behaviors()
    return json.loads(_core.run_campaign(_text(scenario), first, last, ids, parallel))
