#include "flutter/checkers.hpp"
#include "flutter/scenario.hpp"

#include <doctest.h>

#include <algorithm>

using namespace flutter;

namespace
{
    const auto T = Value::True;
    const auto F = Value::False;
    const ProcessId c0 = ProcessId::client(0);

    ProcessId s(std::uint32_t i)
    {
        return ProcessId::server(i);
    }

    CheckConfig config(std::size_t n = 6, std::size_t f = 1)
    {
        CheckConfig cfg;
        cfg.n = n;
        cfg.f = f;
        for (std::uint32_t i = 0; i < n; ++i)
        {
            cfg.correct_servers.insert(s(i));
        }
        cfg.correct_clients.insert(c0);
        cfg.client_delta_estimate[c0] = SimTime{10};
        cfg.client_epsilon[c0] = SimTime{1};
        return cfg;
    }

    TraceEvent broadcast(std::int64_t t, Bytes m)
    {
        TraceEvent e;
        e.time = SimTime{t};
        e.process = c0;
        e.kind = TraceKind::Broadcast;
        e.bytes = std::move(m);
        return e;
    }

    TraceEvent app(std::int64_t t, std::uint32_t server, Bytes m)
    {
        TraceEvent e;
        e.time = SimTime{t};
        e.process = s(server);
        e.kind = TraceKind::AppDeliver;
        e.peer = c0;
        e.bytes = std::move(m);
        return e;
    }

    TraceEvent consensus(TraceKind kind, std::int64_t t, std::uint32_t server, Value v, std::uint64_t inst = 0,
                         std::string note = {})
    {
        TraceEvent e;
        e.time = SimTime{t};
        e.process = s(server);
        e.kind = kind;
        e.instance = InstanceTag::numbered(inst);
        e.value = v;
        e.note = std::move(note);
        return e;
    }

    TraceEvent link(TraceKind kind, std::int64_t t, std::uint32_t src, std::uint32_t dst, WireMessage msg)
    {
        TraceEvent e;
        e.time = SimTime{t};
        e.kind = kind;
        e.process = kind == TraceKind::Send ? s(src) : s(dst);
        e.peer = kind == TraceKind::Send ? s(dst) : s(src);
        e.message = std::move(msg);
        return e;
    }

    const CheckReport &find(const std::vector<CheckReport> &reports, const std::string &property)
    {
        auto it = std::find_if(reports.begin(), reports.end(), [&](const CheckReport &r) { return r.property == property; });
        REQUIRE(it != reports.end());
        return *it;
    }

    // Fails, carries a witness, and the witness fails the same property on its own.
    void expect_fail(const std::vector<CheckReport> &reports, const std::string &property, const CheckConfig &cfg)
    {
        const auto &r = find(reports, property);
        CHECK_MESSAGE(r.verdict == Verdict::Fail, property);
        CHECK_FALSE(r.witness.empty());
        const auto again = check_run(r.witness, cfg);
        CHECK_MESSAGE(find(again, property).verdict == Verdict::Fail, "witness does not re-fail " << property);
    }

    Trace unanimous_instance(Value v, std::uint64_t inst = 0)
    {
        Trace t;
        for (std::uint32_t i = 0; i < 6; ++i)
        {
            t.push_back(consensus(TraceKind::Propose, 0, i, v, inst));
        }
        for (std::uint32_t i = 0; i < 6; ++i)
        {
            t.push_back(consensus(TraceKind::Decide, 10, i, v, inst, "fast"));
        }
        return t;
    }

    Trace goodcase_trace(int broadcasts)
    {
        Scenario sc;
        ClientSpec c;
        c.name = "c0";
        for (int i = 0; i < broadcasts; ++i)
        {
            c.broadcasts.push_back({SimTime{5 * i}, "m" + std::to_string(i)});
        }
        sc.clients.push_back(c);
        return run_scenario(sc).trace;
    }
}

TEST_SUITE("checkers")
{
    TEST_CASE("good-case run passes every check")
    {
        const auto trace = goodcase_trace(1);
        auto cfg = config();
        cfg.good_case = true;
        for (const auto &r : check_run(trace, cfg))
        {
            CHECK_MESSAGE(r.verdict == Verdict::Pass, r.property << ": " << r.detail);
        }
    }

    TEST_CASE("swapped delivery order fails total order")
    {
        Trace t{broadcast(0, "a"), broadcast(0, "b")};
        for (std::uint32_t i = 0; i < 6; ++i)
        {
            t.push_back(app(20, i, i == 3 ? "b" : "a"));
            t.push_back(app(21, i, i == 3 ? "a" : "b"));
        }
        const auto cfg = config();
        const auto reports = check_tob(t, cfg);
        expect_fail(reports, "AgreementTotalOrder", cfg);
        const auto &r = find(reports, "AgreementTotalOrder");
        CHECK(r.witness.size() == 2);
        for (const auto &e : r.witness)
        {
            CHECK(e.kind == TraceKind::AppDeliver);
        }
    }

    TEST_CASE("a cutoff with one server ahead is prefix compatible")
    {
        const auto full = goodcase_trace(2);
        // Cut right after the first server delivers the second message.
        std::size_t cut = 0;
        std::size_t seen = 0;
        for (std::size_t i = 0; i < full.size(); ++i)
        {
            if (full[i].kind == TraceKind::AppDeliver && ++seen == 7)
            {
                cut = i + 1;
                break;
            }
        }
        REQUIRE(cut > 0);
        const Trace truncated(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(cut));
        auto cfg = config();
        cfg.quiescent = false;
        const auto reports = check_tob(truncated, cfg);
        CHECK(find(reports, "AgreementTotalOrder").verdict == Verdict::Pass);
        CHECK(find(reports, "Validity").verdict == Verdict::NotApplicable);
        // The same cut claimed as quiescent is a disagreement.
        cfg.quiescent = true;
        expect_fail(check_tob(truncated, cfg), "AgreementTotalOrder", cfg);
    }

    TEST_CASE("duplicate delivery")
    {
        Trace t{broadcast(0, "a"), app(20, 0, "a"), app(30, 0, "a")};
        const auto cfg = config();
        expect_fail(check_tob(t, cfg), "NoDuplication", cfg);
    }

    TEST_CASE("delivery of a message a correct client never broadcast")
    {
        Trace t{app(20, 0, "ghost")};
        const auto cfg = config();
        expect_fail(check_tob(t, cfg), "Integrity", cfg);
    }

    TEST_CASE("undelivered broadcast at quiescence fails validity")
    {
        Trace t{broadcast(0, "a")};
        for (std::uint32_t i = 0; i < 5; ++i)
        {
            t.push_back(app(20, i, "a"));
        }
        const auto cfg = config();
        expect_fail(check_tob(t, cfg), "Validity", cfg);
    }

    TEST_CASE("validity does not apply to a zero delay estimate")
    {
        Trace t{broadcast(0, "a")};
        auto cfg = config();
        cfg.client_delta_estimate[c0] = SimTime{0};
        CHECK(find(check_tob(t, cfg), "Validity").verdict == Verdict::NotApplicable);
    }

    TEST_CASE("unanimous instance passes with the proposed value")
    {
        const auto cfg = config();
        for (const auto &r : check_consensus(unanimous_instance(T), cfg, InstanceTag::numbered(0)))
        {
            CHECK_MESSAGE(r.verdict == Verdict::Pass, r.property);
        }
    }

    TEST_CASE("two decided values fail agreement")
    {
        auto t = unanimous_instance(T);
        t.back().value = F;
        const auto cfg = config();
        expect_fail(check_consensus(t, cfg, InstanceTag::numbered(0)), "Consensus.Agreement", cfg);
    }

    TEST_CASE("a value with only f correct proposers fails representative validity")
    {
        Trace t;
        for (std::uint32_t i = 0; i < 6; ++i)
        {
            t.push_back(consensus(TraceKind::Propose, 0, i, i == 0 ? F : T));
        }
        for (std::uint32_t i = 0; i < 6; ++i)
        {
            t.push_back(consensus(TraceKind::Decide, 30, i, F, 0, "slow"));
        }
        const auto cfg = config();
        expect_fail(check_consensus(t, cfg, InstanceTag::numbered(0)), "Consensus.RepresentativeValidity", cfg);
    }

    TEST_CASE("double decide fails integrity; missing decide fails termination")
    {
        auto t = unanimous_instance(T);
        t.push_back(t.back());
        const auto cfg = config();
        expect_fail(check_all_consensus(t, cfg), "Consensus.Integrity", cfg);

        auto u = unanimous_instance(T);
        u.pop_back();
        expect_fail(check_all_consensus(u, cfg), "Consensus.Termination", cfg);
        auto cut = cfg;
        cut.quiescent = false;
        CHECK(find(check_all_consensus(u, cut), "Consensus.Termination").verdict == Verdict::NotApplicable);
    }

    TEST_CASE("fast decision against an opposite dep proposal")
    {
        auto t = unanimous_instance(T);
        t.push_back(consensus(TraceKind::DepPropose, 10, 2, F));
        const auto cfg = config();
        expect_fail(check_all_consensus(t, cfg), "Consensus.FastSlowConsistency", cfg);
    }

    TEST_CASE("faulty servers are outside every consensus property")
    {
        auto t = unanimous_instance(T);
        t.push_back(consensus(TraceKind::Decide, 10, 5, F, 0, "fast"));
        auto cfg = config();
        cfg.correct_servers.erase(s(5));
        CHECK(no_failures(check_all_consensus(t, cfg)));
    }

    TEST_CASE("dep properties")
    {
        const auto cfg = config();
        Trace t;
        for (std::uint32_t i = 0; i < 6; ++i)
        {
            t.push_back(consensus(TraceKind::DepPropose, 0, i, T));
        }
        for (std::uint32_t i = 0; i < 6; ++i)
        {
            t.push_back(consensus(TraceKind::DepDecide, 10, i, T));
        }
        CHECK(no_failures(check_dep(t, cfg)));

        auto invalid = t;
        for (auto &e : invalid)
        {
            if (e.kind == TraceKind::DepDecide)
            {
                e.value = F;
            }
        }
        expect_fail(check_dep(invalid, cfg), "Dep.WeakValidity", cfg);

        auto split = t;
        split.back().value = F;
        split[0].value = F;
        expect_fail(check_dep(split, cfg), "Dep.Agreement", cfg);

        auto twice = t;
        twice.push_back(t.back());
        expect_fail(check_dep(twice, cfg), "Dep.Integrity", cfg);

        auto missing = t;
        missing.pop_back();
        expect_fail(check_dep(missing, cfg), "Dep.Termination", cfg);
    }

    TEST_CASE("link properties")
    {
        const auto cfg = config();
        const WireMessage a = wire::Time{SimTime{1}};
        const WireMessage b = wire::Time{SimTime{2}};
        Trace fine{link(TraceKind::Send, 0, 0, 1, a), link(TraceKind::Send, 1, 0, 1, b), link(TraceKind::Deliver, 10, 0, 1, a),
                   link(TraceKind::Deliver, 10, 0, 1, b)};
        const auto ok = check_links(fine, cfg);
        CHECK(no_failures(ok));

        Trace swapped{link(TraceKind::Send, 0, 0, 1, a), link(TraceKind::Send, 1, 0, 1, b),
                      link(TraceKind::Deliver, 5, 0, 1, b), link(TraceKind::Deliver, 10, 0, 1, a)};
        expect_fail(check_links(swapped, cfg), "Link.FIFO", cfg);

        Trace slow{link(TraceKind::Send, 0, 0, 1, a), link(TraceKind::Deliver, 11, 0, 1, a)};
        expect_fail(check_links(slow, cfg), "Link.DelayBound", cfg);

        Trace instant{link(TraceKind::Send, 0, 0, 1, a), link(TraceKind::Deliver, 0, 0, 1, a)};
        expect_fail(check_links(instant, cfg), "Link.DelayBound", cfg);

        Trace lost{link(TraceKind::Send, 0, 0, 1, a)};
        expect_fail(check_links(lost, cfg), "Link.FIFO", cfg);

        Trace backwards{link(TraceKind::Send, 0, 0, 1, b), link(TraceKind::Send, 1, 0, 2, a),
                        link(TraceKind::Deliver, 10, 0, 1, b), link(TraceKind::Deliver, 11, 0, 2, a)};
        expect_fail(check_links(backwards, cfg), "Clock.Monotone", cfg);
    }

    TEST_CASE("latency bounds")
    {
        auto cfg = config();
        CHECK(find(check_latency(goodcase_trace(1), cfg), "Latency.Broadcast").verdict == Verdict::NotApplicable);
        cfg.good_case = true;
        CHECK(no_failures(check_latency(goodcase_trace(3), cfg)));

        Trace late{broadcast(0, "a")};
        for (std::uint32_t i = 0; i < 6; ++i)
        {
            late.push_back(app(i == 2 ? 22 : 21, i, "a"));
        }
        expect_fail(check_latency(late, cfg), "Latency.Broadcast", cfg);

        auto slow = unanimous_instance(T);
        slow.back().time = SimTime{11};
        expect_fail(check_latency(slow, cfg), "Latency.Consensus", cfg);
    }

    TEST_CASE("checkers are pure")
    {
        const auto trace = goodcase_trace(2);
        const auto cfg = config();
        const auto a = check_run(trace, cfg);
        const auto b = check_run(trace, cfg);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i)
        {
            CHECK(a[i].property == b[i].property);
            CHECK(a[i].verdict == b[i].verdict);
        }
    }

    TEST_CASE("instances in a trace")
    {
        auto t = unanimous_instance(T, 1);
        const auto more = unanimous_instance(F, 0);
        t.insert(t.end(), more.begin(), more.end());
        CHECK(instances_in(t) == std::vector<InstanceTag>{InstanceTag::numbered(0), InstanceTag::numbered(1)});
    }
}
