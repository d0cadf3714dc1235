#include "flutter/weakcon.hpp"

#include <doctest.h>

using namespace flutter;

namespace
{
    std::vector<ProcessId> servers(std::uint32_t n)
    {
        std::vector<ProcessId> out;
        for (std::uint32_t i = 0; i < n; ++i)
        {
            out.push_back(ProcessId::server(i));
        }
        return out;
    }

    std::vector<DepIndication> propose_all(DepOracle &oracle, const std::vector<Value> &values, SimTime at = SimTime{0})
    {
        std::vector<DepIndication> out;
        for (std::uint32_t i = 0; i < values.size(); ++i)
        {
            out = oracle.propose(InstanceTag::numbered(0), ProcessId::server(i), values[i], at);
        }
        return out;
    }

    const auto T = Value::True;
    const auto F = Value::False;
}

TEST_SUITE("weakcon")
{
    TEST_CASE("unanimous proposals force the value under every policy")
    {
        for (auto mode : {DepMode::FirstProposal, DepMode::AdversarialValue, DepMode::AdversarialTiming})
        {
            DepPolicy p;
            p.mode = mode;
            p.timing_seed = 1;
            DepOracle oracle(p, servers(5));
            const auto ind = propose_all(oracle, {T, T, T, T, T});
            REQUIRE(ind.size() == 5);
            for (const auto &i : ind)
            {
                CHECK(i.value == T);
            }
        }
    }

    TEST_CASE("no decision before every correct server proposed")
    {
        DepOracle oracle(DepPolicy{}, servers(5));
        CHECK(propose_all(oracle, {T, F, T, F}).empty());
        CHECK_FALSE(oracle.instance(InstanceTag::numbered(0))->decided.has_value());
        CHECK(oracle.instance(InstanceTag::numbered(1)) == nullptr);
    }

    TEST_CASE("adversarial value picks the minority allowed value")
    {
        // Allowed set for {T x3, F x2} is {T, F}; the adversary picks the rarer one.
        DepPolicy p;
        p.mode = DepMode::AdversarialValue;
        DepOracle oracle(p, servers(5));
        const auto ind = propose_all(oracle, {T, T, T, F, F});
        REQUIRE_FALSE(ind.empty());
        CHECK(ind.front().value == F);
        CHECK(oracle.instance(InstanceTag::numbered(0))->allowed() == std::set<Value>{T, F});
    }

    TEST_CASE("first proposal policy")
    {
        DepOracle oracle(DepPolicy{}, servers(3));
        const auto ind = propose_all(oracle, {F, T, T});
        CHECK(ind.front().value == F);
    }

    TEST_CASE("indications land at latency after the last proposal, within the budget")
    {
        DepPolicy p;
        p.mode = DepMode::AdversarialTiming;
        p.latency = SimTime{10};
        p.budget = SimTime{60};
        p.extra_delay[1] = 50;
        p.extra_delay[2] = 500;
        DepOracle oracle(p, servers(3));
        const auto ind = propose_all(oracle, {T, T, T}, SimTime{7});
        REQUIRE(ind.size() == 3);
        CHECK(ind[0].at == SimTime{17});
        CHECK(ind[1].at == SimTime{67});
        CHECK(ind[2].at == SimTime{67});
    }

    TEST_CASE("seeded timing stays inside the budget")
    {
        DepPolicy p;
        p.mode = DepMode::AdversarialTiming;
        p.timing_seed = 99;
        DepOracle oracle(p, servers(5));
        for (const auto &i : propose_all(oracle, {T, F, T, F, T}, SimTime{3}))
        {
            CHECK(i.at >= SimTime{13});
            CHECK(i.at <= SimTime{33});
        }
    }

    TEST_CASE("forcing a value nobody proposed is an oracle violation")
    {
        DepPolicy p;
        p.forced = F;
        DepOracle oracle(p, servers(2));
        oracle.propose(InstanceTag::numbered(0), ProcessId::server(0), T, SimTime{0});
        CHECK_THROWS_AS(oracle.propose(InstanceTag::numbered(0), ProcessId::server(1), T, SimTime{0}), OracleViolation);
    }

    TEST_CASE("double proposal is a protocol bug")
    {
        DepOracle oracle(DepPolicy{}, servers(2));
        oracle.propose(InstanceTag::numbered(0), ProcessId::server(0), T, SimTime{0});
        CHECK_THROWS_AS(oracle.propose(InstanceTag::numbered(0), ProcessId::server(0), F, SimTime{0}), ProtocolBug);
    }

    TEST_CASE("proposals from outside the correct set are ignored")
    {
        DepOracle oracle(DepPolicy{}, servers(2));
        CHECK(oracle.propose(InstanceTag::numbered(0), ProcessId::server(5), F, SimTime{0}).empty());
        CHECK(oracle.instance(InstanceTag::numbered(0)) == nullptr);
    }

    TEST_CASE("budget below latency is rejected")
    {
        DepPolicy p;
        p.budget = SimTime{5};
        CHECK_THROWS_AS(DepOracle(p, servers(1)), ConfigError);
    }
}
