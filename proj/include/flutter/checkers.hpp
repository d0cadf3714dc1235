#pragma once

#include "flutter/trace.hpp"
#include "flutter/types.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace flutter
{
    enum class Verdict : std::uint8_t
    {
        Pass,
        Fail,
        NotApplicable,
    };

    const char *to_string(Verdict v) noexcept;

    // A Fail always carries a witness: a sub-sequence of the trace on which the same
    // check, with the same configuration, fails again.
    struct CheckReport
    {
        std::string property;
        Verdict verdict = Verdict::Pass;
        std::string detail;
        Trace witness;
    };

    // The correct-process sets come from the scenario; they are never inferred.
    struct CheckConfig
    {
        std::size_t n = 0;
        std::size_t f = 0;
        SimTime delta{10};
        std::set<ProcessId> correct_servers;
        std::set<ProcessId> correct_clients;
        std::map<ProcessId, SimTime> client_delta_estimate;
        std::map<ProcessId, SimTime> client_epsilon;
        // The run drained every event (liveness properties are only decidable then).
        bool quiescent = true;
        // Exact delays of delta, zero drift, no faults, clients estimating delta exactly.
        bool good_case = false;
    };

    // No Duplication, Integrity, Agreement & Total Order, Validity.
    std::vector<CheckReport> check_tob(const Trace &trace, const CheckConfig &config);

    // Integrity, Agreement, Termination, Representative Validity and fast/slow
    // consistency of one consensus instance.
    std::vector<CheckReport> check_consensus(const Trace &trace, const CheckConfig &config, const InstanceTag &instance);

    // check_consensus over every instance in the trace, one report per property.
    std::vector<CheckReport> check_all_consensus(const Trace &trace, const CheckConfig &config);

    // Weak validity, agreement, integrity and termination of the dep oracle.
    std::vector<CheckReport> check_dep(const Trace &trace, const CheckConfig &config);

    // FIFO order, delay bounds and clock monotonicity as observed on the links.
    std::vector<CheckReport> check_links(const Trace &trace, const CheckConfig &config);

    // Good-case latency of broadcasts (exactly t + 2 delta + epsilon) and of unanimous
    // consensus instances (within delta of the last proposal).
    std::vector<CheckReport> check_latency(const Trace &trace, const CheckConfig &config);

    // Every check above.
    std::vector<CheckReport> check_run(const Trace &trace, const CheckConfig &config);

    bool no_failures(const std::vector<CheckReport> &reports) noexcept;

    // Instances mentioned by Propose/Decide/DepPropose/DepDecide events, in order.
    std::vector<InstanceTag> instances_in(const Trace &trace);
}
