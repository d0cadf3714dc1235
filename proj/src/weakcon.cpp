#include "flutter/weakcon.hpp"

#include <algorithm>
#include <random>

namespace flutter
{
    const char *to_string(DepMode m) noexcept
    {
        switch (m)
        {
        case DepMode::FirstProposal:
            return "first_proposal";
        case DepMode::AdversarialValue:
            return "adversarial_value";
        case DepMode::AdversarialTiming:
            return "adversarial_timing";
        }
        return "?";
    }

    void DepPolicy::validate() const
    {
        if (latency.ticks < 0)
        {
            throw ConfigError("dep latency must be non-negative");
        }
        if (budget < latency)
        {
            throw ConfigError("dep budget must be at least the dep latency");
        }
        for (const auto &[server, extra] : extra_delay)
        {
            if (extra < 0)
            {
                throw ConfigError("dep extra delay for s" + std::to_string(server) + " is negative");
            }
        }
    }

    std::set<Value> DepInstanceState::allowed() const
    {
        std::set<Value> out;
        for (const auto &[server, v] : proposals)
        {
            out.insert(v);
        }
        return out;
    }

    DepOracle::DepOracle(DepPolicy policy, std::vector<ProcessId> correct_servers)
        : m_policy(std::move(policy)), m_correct(correct_servers.begin(), correct_servers.end())
    {
        m_policy.validate();
    }

    const DepInstanceState *DepOracle::instance(const InstanceTag &instance) const
    {
        auto it = m_instances.find(instance);
        return it == m_instances.end() ? nullptr : &it->second;
    }

    Value DepOracle::choose(const DepInstanceState &st) const
    {
        const auto allowed = st.allowed();
        if (m_policy.forced)
        {
            if (!allowed.contains(*m_policy.forced))
            {
                throw OracleViolation(std::string("forced dep value ") + to_string(*m_policy.forced) +
                                      " was proposed by no correct server");
            }
            return *m_policy.forced;
        }
        if (m_policy.mode == DepMode::FirstProposal)
        {
            return *st.first_proposal;
        }
        std::size_t trues = 0;
        for (const auto &[server, v] : st.proposals)
        {
            trues += v == Value::True ? 1 : 0;
        }
        const std::size_t falses = st.proposals.size() - trues;
        if (trues == 0)
        {
            return Value::False;
        }
        if (falses == 0)
        {
            return Value::True;
        }
        return trues < falses ? Value::True : Value::False;
    }

    std::int64_t DepOracle::extra_for(const ProcessId &server, std::uint64_t ordinal) const
    {
        if (m_policy.mode != DepMode::AdversarialTiming)
        {
            return 0;
        }
        const std::int64_t slack = (m_policy.budget - m_policy.latency).ticks;
        if (auto it = m_policy.extra_delay.find(server.index); it != m_policy.extra_delay.end())
        {
            return std::min(it->second, slack);
        }
        if (m_policy.timing_seed && slack > 0)
        {
            std::seed_seq seq{*m_policy.timing_seed, ordinal, static_cast<std::uint64_t>(server.index)};
            std::mt19937_64 rng(seq);
            return std::uniform_int_distribution<std::int64_t>(0, slack)(rng);
        }
        return 0;
    }

    std::vector<DepIndication> DepOracle::propose(const InstanceTag &instance, const ProcessId &server, Value v,
                                                  SimTime now)
    {
        if (!m_correct.contains(server))
        {
            return {};
        }
        auto &st = m_instances[instance];
        if (st.proposals.contains(server))
        {
            throw ProtocolBug("correct server " + label(server) + " proposed twice to dep instance " + render(instance));
        }
        st.proposals.emplace(server, v);
        if (!st.first_proposal)
        {
            st.first_proposal = v;
        }
        st.last_proposal = now;
        if (st.proposals.size() < m_correct.size() || st.decided)
        {
            return {};
        }

        const Value decided = choose(st);
        st.decided = decided;
        const auto ordinal = m_decided_count++;
        const SimTime point = now + m_policy.latency;
        std::vector<DepIndication> out;
        for (const auto &s : m_correct)
        {
            const SimTime at = point + SimTime{extra_for(s, ordinal)};
            st.deliveries.emplace(s, at);
            out.push_back(DepIndication{s, at, decided});
        }
        return out;
    }
}
