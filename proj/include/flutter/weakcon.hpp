#pragma once

#include "flutter/types.hpp"

#include <map>
#include <optional>
#include <set>
#include <vector>

namespace flutter
{
    // Underlying weak binary consensus used by the Blink slow path, modelled as an
    // oracle that the adversary parameterises. It only ever decides values some
    // correct server proposed, decides once per instance, and indicates the decision
    // at most once to every correct server.
    enum class DepMode : std::uint8_t
    {
        // Decide the first correct proposal.
        FirstProposal,
        // Decide the allowed value with the fewest correct proposers (ties -> False).
        AdversarialValue,
        // AdversarialValue, plus per-server extra delays on the decide indications.
        AdversarialTiming,
    };

    const char *to_string(DepMode m) noexcept;

    struct DepPolicy
    {
        DepMode mode = DepMode::FirstProposal;
        // Decision point, measured from the last correct proposal.
        SimTime latency{10};
        // Every indication is delivered within this bound of the last correct proposal.
        SimTime budget{30};
        // AdversarialTiming: server index -> extra ticks past the decision point.
        std::map<std::uint32_t, std::int64_t> extra_delay;
        // AdversarialTiming without a table: extras drawn from this seed.
        std::optional<std::uint64_t> timing_seed;
        // Test-harness override of the decided value; must be an allowed value.
        std::optional<Value> forced;

        void validate() const;
    };

    struct OracleViolation : std::logic_error
    {
        using std::logic_error::logic_error;
    };

    struct DepIndication
    {
        ProcessId server;
        SimTime at;
        Value value;
    };

    struct DepInstanceState
    {
        std::map<ProcessId, Value> proposals;
        std::optional<Value> first_proposal;
        SimTime last_proposal;
        std::optional<Value> decided;
        std::map<ProcessId, SimTime> deliveries;

        // Values proposed by at least one correct server.
        std::set<Value> allowed() const;
    };

    class DepOracle
    {
    public:
        DepOracle(DepPolicy policy, std::vector<ProcessId> correct_servers);

        // Records a correct server's proposal. Once every correct server has proposed,
        // returns the decide indications to deliver; otherwise returns nothing.
        std::vector<DepIndication> propose(const InstanceTag &instance, const ProcessId &server, Value v, SimTime now);

        const DepInstanceState *instance(const InstanceTag &instance) const;
        const std::map<InstanceTag, DepInstanceState> &instances() const noexcept { return m_instances; }
        const DepPolicy &policy() const noexcept { return m_policy; }

    private:
        Value choose(const DepInstanceState &st) const;
        std::int64_t extra_for(const ProcessId &server, std::uint64_t ordinal) const;

        DepPolicy m_policy;
        std::set<ProcessId> m_correct;
        std::map<InstanceTag, DepInstanceState> m_instances;
        std::uint64_t m_decided_count = 0;
    };
}
