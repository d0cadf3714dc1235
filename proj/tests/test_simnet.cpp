#include "flutter/simnet.hpp"
#include "flutter/weakcon.hpp"

#include "support.hpp"

#include <doctest.h>

#include <sstream>

using namespace flutter;

namespace
{
    // Sends a Time message to `peer` whenever it is told to via call_at.
    class Echo : public Process
    {
    public:
        std::vector<std::pair<SimTime, WireMessage>> inbox;
        std::vector<std::pair<SimTime, TimerToken>> fired;

        void on_deliver(Context &ctx, const ProcessId &, const WireMessage &msg) override
        {
            inbox.emplace_back(ctx.now(), msg);
        }
        void on_timer(Context &ctx, TimerToken token) override { fired.emplace_back(ctx.now(), token); }
    };

    // Keeps messaging itself forever.
    class Chatter : public Process
    {
    public:
        void on_start(Context &ctx) override { ctx.send(ctx.self(), wire::Time{ctx.now()}); }
        void on_deliver(Context &ctx, const ProcessId &, const WireMessage &) override
        {
            ctx.send(ctx.self(), wire::Time{ctx.now()});
        }
    };

    const ProcessId s0 = ProcessId::server(0);
    const ProcessId s1 = ProcessId::server(1);

    std::unique_ptr<Simulator> pair_sim(NetworkStrategy net, ClockModel clocks = {})
    {
        auto sim = std::make_unique<Simulator>(std::move(net), std::move(clocks));
        sim->add_process(s0, std::make_unique<Echo>(), true);
        sim->add_process(s1, std::make_unique<Echo>(), true);
        return sim;
    }

    void send_at(Simulator &sim, SimTime at, WireMessage msg)
    {
        sim.call_at(s0, at, [msg](Process &, Context &ctx) { ctx.send(s1, msg); });
    }

    std::string jsonl(const Trace &t)
    {
        std::ostringstream out;
        write_jsonl(out, t);
        return out.str();
    }
}

TEST_SUITE("simnet")
{
    TEST_CASE("exact delta delivers after delta")
    {
        NetworkStrategy net;
        net.delta = SimTime{10};
        auto owned = pair_sim(net);
        auto &sim = *owned;
        send_at(sim, SimTime{0}, wire::Time{SimTime{0}});
        const auto r = sim.run();
        CHECK(r.quiescent);
        const auto &echo = sim.process_as<Echo>(s1);
        REQUIRE(echo.inbox.size() == 1);
        CHECK(echo.inbox[0].first == SimTime{10});
    }

    TEST_CASE("FIFO repair holds a fast message behind a slow one")
    {
        NetworkStrategy net;
        net.mode = NetworkMode::Scripted;
        net.delta = SimTime{10};
        net.script[{s0, s1}] = {10, 2};
        auto owned = pair_sim(net);
        auto &sim = *owned;
        send_at(sim, SimTime{0}, wire::Time{SimTime{1}});
        send_at(sim, SimTime{1}, wire::Time{SimTime{2}});
        sim.run();
        const auto &inbox = sim.process_as<Echo>(s1).inbox;
        REQUIRE(inbox.size() == 2);
        // max(1 + 2, 10) = 10, and send order is preserved.
        CHECK(inbox[0].first == SimTime{10});
        CHECK(inbox[1].first == SimTime{10});
        CHECK(std::get<wire::Time>(inbox[0].second).time == SimTime{1});
        CHECK(std::get<wire::Time>(inbox[1].second).time == SimTime{2});
    }

    TEST_CASE("scripted delays outside [1, delta] are rejected")
    {
        NetworkStrategy net;
        net.mode = NetworkMode::Scripted;
        net.script[{s0, s1}] = {0};
        CHECK_THROWS_AS(Simulator(net, ClockModel{}), ConfigError);
        net.script[{s0, s1}] = {11};
        CHECK_THROWS_AS(Simulator(net, ClockModel{}), ConfigError);
    }

    TEST_CASE("timers fire at the global time their local time is reached")
    {
        ClockModel clocks;
        clocks.max_drift = SimTime{2};
        clocks.offsets[s1] = 2;
        auto owned = pair_sim(NetworkStrategy{}, clocks);
        auto &sim = *owned;
        sim.call_at(s0, SimTime{0}, [](Process &, Context &ctx) { ctx.schedule_timer(SimTime{11}, 1, "t"); });
        sim.call_at(s1, SimTime{0}, [](Process &, Context &ctx) { ctx.schedule_timer(SimTime{11}, 2, "t"); });
        sim.run();
        CHECK(sim.process_as<Echo>(s0).fired == std::vector<std::pair<SimTime, TimerToken>>{{SimTime{11}, 1}});
        // local = global + 2, so local 11 is global 9.
        CHECK(sim.process_as<Echo>(s1).fired == std::vector<std::pair<SimTime, TimerToken>>{{SimTime{9}, 2}});
    }

    TEST_CASE("a timer in the past fires in the current step")
    {
        auto owned = pair_sim(NetworkStrategy{});
        auto &sim = *owned;
        sim.call_at(s0, SimTime{5}, [](Process &, Context &ctx) { ctx.schedule_timer(SimTime{1}, 7, "late"); });
        sim.run();
        CHECK(sim.process_as<Echo>(s0).fired == std::vector<std::pair<SimTime, TimerToken>>{{SimTime{5}, 7}});
    }

    TEST_CASE("offsets beyond the drift bound are rejected")
    {
        ClockModel clocks;
        clocks.max_drift = SimTime{1};
        clocks.offsets[s0] = -2;
        CHECK_THROWS_AS(Simulator(NetworkStrategy{}, clocks), ConfigError);
    }

    TEST_CASE("empty simulation is immediately quiescent")
    {
        Simulator sim(NetworkStrategy{}, ClockModel{});
        const auto r = sim.run();
        CHECK(r.quiescent);
        CHECK(sim.trace().empty());
    }

    TEST_CASE("cutoff preserves pending events")
    {
        auto owned = pair_sim(NetworkStrategy{});
        auto &sim = *owned;
        send_at(sim, SimTime{0}, wire::Time{SimTime{0}});
        const auto r = sim.run(SimTime{5});
        CHECK_FALSE(r.quiescent);
        CHECK(sim.pending_events() == 1);
        CHECK(sim.next_event_time() == SimTime{10});
        CHECK(testing::count_kind(sim.trace(), TraceKind::Deliver) == 0);
        CHECK(sim.run().quiescent);
        CHECK(testing::count_kind(sim.trace(), TraceKind::Deliver) == 1);
    }

    TEST_CASE("step budget")
    {
        Simulator sim(NetworkStrategy{}, ClockModel{});
        sim.add_process(s0, std::make_unique<Chatter>(), true);
        CHECK_THROWS_AS(sim.run(std::nullopt, 100), BudgetExceeded);
    }

    TEST_CASE("sending to an unknown process is a configuration error")
    {
        auto owned = pair_sim(NetworkStrategy{});
        auto &sim = *owned;
        sim.call_at(s0, SimTime{0}, [](Process &, Context &ctx) { ctx.send(ProcessId::server(9), wire::Time{}); });
        CHECK_THROWS_AS(sim.run(), ConfigError);
    }

    TEST_CASE("messages naming unknown clients are malformed")
    {
        auto owned = pair_sim(NetworkStrategy{});
        auto &sim = *owned;
        const BroadcastTuple t{ProcessId::client(3), "m", SimTime{4}};
        send_at(sim, SimTime{0}, wire::Observe{t});
        CHECK_THROWS_AS(sim.run(), ConfigError);
    }

    TEST_CASE("crashed processes see deliveries in the trace but do not handle them")
    {
        auto owned = pair_sim(NetworkStrategy{});
        auto &sim = *owned;
        sim.call_at(s1, SimTime{0}, [](Process &, Context &ctx) { ctx.crash(); });
        send_at(sim, SimTime{1}, wire::Time{SimTime{1}});
        sim.run();
        CHECK(sim.is_crashed(s1));
        CHECK(sim.process_as<Echo>(s1).inbox.empty());
        CHECK(testing::count_kind(sim.trace(), TraceKind::Deliver) == 1);
    }

    TEST_CASE("seeded random delays are reproducible and within bounds")
    {
        auto run_once = [](std::uint64_t seed) {
            NetworkStrategy net;
            net.mode = NetworkMode::SeededRandom;
            net.seed = seed;
            auto owned = pair_sim(net);
            auto &sim = *owned;
            for (int i = 0; i < 50; ++i)
            {
                send_at(sim, SimTime{i}, wire::Time{SimTime{i}});
            }
            sim.run();
            return sim.take_trace();
        };
        const auto a = run_once(7);
        CHECK(jsonl(a) == jsonl(run_once(7)));
        CHECK(jsonl(a) != jsonl(run_once(8)));
        std::vector<SimTime> sends;
        std::vector<SimTime> delivers;
        for (const auto &e : a)
        {
            (e.kind == TraceKind::Send ? sends : delivers).push_back(e.time);
        }
        REQUIRE(sends.size() == delivers.size());
        for (std::size_t i = 0; i < sends.size(); ++i)
        {
            CHECK(delivers[i] - sends[i] >= SimTime{1});
            if (i > 0)
            {
                CHECK(delivers[i] >= delivers[i - 1]);
                // Beyond delta only when pinned to the previous delivery.
                if (delivers[i] - sends[i] > SimTime{10})
                {
                    CHECK(delivers[i] == delivers[i - 1]);
                }
            }
        }
    }

    TEST_CASE("trace is ordered by time")
    {
        NetworkStrategy net;
        net.mode = NetworkMode::SeededRandom;
        net.seed = 3;
        auto owned = pair_sim(net);
        auto &sim = *owned;
        for (int i = 0; i < 20; ++i)
        {
            send_at(sim, SimTime{i}, wire::Time{SimTime{i}});
        }
        sim.run();
        const auto &t = sim.trace();
        CHECK(std::is_sorted(t.begin(), t.end(), [](const TraceEvent &a, const TraceEvent &b) { return a.time < b.time; }));
    }
}
