// Python module flutter_sim._core. Scenarios, reports and summaries cross the
// boundary as JSON text.

#include "flutter/flutter_server.hpp"
#include "flutter/scenario.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace flutter;

namespace
{
    Scenario scenario_from(const std::string &text)
    {
        nlohmann::json doc;
        try
        {
            doc = nlohmann::json::parse(text);
        }
        catch (const nlohmann::json::exception &e)
        {
            throw ConfigError(e.what());
        }
        return parse_scenario(doc);
    }

    std::optional<std::int64_t> from_time(SimTime t)
    {
        return t.is_neg_infinity() ? std::nullopt : std::optional{t.ticks};
    }

    BroadcastTuple tuple_from(const py::tuple &t)
    {
        if (t.size() != 3)
        {
            throw py::value_error("expected (client, message, bet)");
        }
        return {ProcessId::client(t[0].cast<std::uint32_t>()), t[1].cast<std::string>(), SimTime{t[2].cast<std::int64_t>()}};
    }

    std::vector<Behavior> behaviors_from(const std::vector<std::string> &ids)
    {
        std::vector<Behavior> out;
        for (const auto &id : ids)
        {
            const auto b = parse_behavior(id);
            if (!b)
            {
                throw ConfigError("unknown behavior '" + id + "'");
            }
            out.push_back(*b);
        }
        return out;
    }
}

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Blink/Flutter discrete-event simulator";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<BudgetExceeded>(m, "BudgetExceeded", PyExc_RuntimeError);

    m.def(
        "compare_tuples",
        [](const py::tuple &a, const py::tuple &b) {
            const auto c = compare_tuples(tuple_from(a), tuple_from(b));
            return c < 0 ? -1 : (c > 0 ? 1 : 0);
        },
        py::arg("a"), py::arg("b"), "Order of two (client index, message, bet) tuples: -1, 0 or 1.");

    m.def(
        "lock_time",
        [](const std::vector<std::optional<std::int64_t>> &times, std::size_t f) {
            std::vector<SimTime> v;
            for (const auto &t : times)
            {
                v.push_back(t ? SimTime{*t} : SimTime::neg_infinity());
            }
            return from_time(lock_time_of(v, f));
        },
        py::arg("remote_times"), py::arg("f"), "Lock time of announced times; None stands for -infinity.");

    m.def(
        "bet_for",
        [](std::int64_t local, std::uint32_t retry, std::int64_t delta_estimate, std::int64_t epsilon) {
            ClientParams p{SimTime{delta_estimate}, SimTime{epsilon}};
            p.validate();
            return bet_for(SimTime{local}, retry, p).ticks;
        },
        py::arg("local_time"), py::arg("retry"), py::arg("delta_estimate"), py::arg("epsilon"));

    m.def("behaviors", [] {
        std::vector<std::string> out;
        for (const auto &info : builtin_behaviors())
        {
            out.emplace_back(info.id);
        }
        return out;
    });

    m.def(
        "run_scenario",
        [](const std::string &scenario_json) {
            const auto sc = scenario_from(scenario_json);
            RunOutcome out;
            {
                py::gil_scoped_release release;
                out = run_scenario(sc);
            }
            std::ostringstream trace;
            write_jsonl(trace, out.trace);
            return py::make_tuple(report_json(sc, out).dump(), trace.str());
        },
        py::arg("scenario_json"), "Runs a scenario; returns (report JSON, trace JSONL).");

    m.def(
        "run_campaign",
        [](const std::string &scenario_json, std::uint64_t first_seed, std::uint64_t last_seed,
           const std::vector<std::string> &behaviors, unsigned parallel) {
            const auto base = scenario_from(scenario_json);
            CampaignSpec spec{first_seed, last_seed, behaviors_from(behaviors), parallel};
            CampaignSummary summary;
            {
                py::gil_scoped_release release;
                summary = run_campaign(base, spec);
            }
            return to_json(summary).dump();
        },
        py::arg("scenario_json"), py::arg("first_seed"), py::arg("last_seed"), py::arg("behaviors"),
        py::arg("parallel") = 1, "Runs seeds x behaviors; returns the summary JSON.");
}
