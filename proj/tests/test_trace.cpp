#include "flutter/scenario.hpp"
#include "flutter/trace.hpp"

#include <doctest.h>

#include <filesystem>
#include <random>
#include <sstream>

using namespace flutter;

namespace
{
    std::string text(const Trace &t)
    {
        std::ostringstream out;
        write_jsonl(out, t);
        return out.str();
    }

    Trace reparse(const Trace &t)
    {
        std::istringstream in(text(t));
        return read_jsonl(in);
    }

    Bytes random_bytes(std::mt19937_64 &rng)
    {
        Bytes b(rng() % 6, '\0');
        for (auto &ch : b)
        {
            ch = static_cast<char>(rng() % 256);
        }
        return b;
    }
}

TEST_SUITE("trace")
{
    TEST_CASE("jsonl line layout")
    {
        TraceEvent e;
        e.time = SimTime{21};
        e.process = ProcessId::server(3);
        e.kind = TraceKind::AppDeliver;
        e.peer = ProcessId::client(0);
        e.bytes = "m";
        CHECK(to_jsonl_line(e) == R"({"time":21,"process":"s3","kind":"AppDeliver","payload":"c0 \"m\""})");
    }

    TEST_CASE("payload renderings")
    {
        TraceEvent e;
        e.kind = TraceKind::Send;
        e.peer = ProcessId::server(1);
        e.message = wire::Time{SimTime{11}};
        CHECK(e.payload() == "to s1 Time(11)");
        e.kind = TraceKind::Decide;
        e.instance = InstanceTag::numbered(2);
        e.value = Value::True;
        e.note = "fast";
        CHECK(e.payload() == "#2 True fast");
    }

    TEST_CASE("simulated traces round-trip")
    {
        for (const char *name : {"goodcase", "partial_dissemination", "equivocator", "retry", "campaign_base"})
        {
            const auto path = std::filesystem::path(FLUTTER_SCENARIO_DIR) / (std::string(name) + ".json");
            const auto trace = run_scenario(load_scenario(path)).trace;
            const auto back = reparse(trace);
            CHECK(back == trace);
            CHECK(text(back) == text(trace));
        }
    }

    TEST_CASE("random events round-trip")
    {
        std::mt19937_64 rng(77);
        Trace trace;
        for (int i = 0; i < 2000; ++i)
        {
            const auto client = ProcessId::client(static_cast<std::uint32_t>(rng() % 3), random_bytes(rng));
            const BroadcastTuple tuple{client, random_bytes(rng), SimTime{static_cast<std::int64_t>(rng() % 1000)}};
            const auto tag = rng() % 2 ? InstanceTag::numbered(rng() % 100) : InstanceTag::of(tuple);
            const auto v = rng() % 2 ? Value::True : Value::False;
            const WireMessage messages[] = {wire::Suggest{tag, v}, wire::Time{SimTime{static_cast<std::int64_t>(rng() % 99) - 5}},
                                            wire::Observe{tuple}, wire::Message{tuple.message, tuple.bet},
                                            wire::Decision{tuple.message, tuple.bet, v}};
            TraceEvent e;
            e.time = SimTime{i};
            e.process = ProcessId::server(static_cast<std::uint32_t>(rng() % 7));
            e.kind = static_cast<TraceKind>(rng() % 9);
            switch (e.kind)
            {
            case TraceKind::Send:
            case TraceKind::Deliver:
                e.peer = rng() % 2 ? ProcessId::server(2) : client;
                e.message = messages[rng() % 5];
                break;
            case TraceKind::Decide:
                e.note = rng() % 2 ? "fast" : "slow";
                [[fallthrough]];
            case TraceKind::Propose:
            case TraceKind::DepPropose:
            case TraceKind::DepDecide:
                e.instance = tag;
                e.value = v;
                break;
            case TraceKind::AppDeliver:
                e.peer = client;
                e.bytes = tuple.message;
                break;
            case TraceKind::Broadcast:
                e.process = client;
                e.bytes = random_bytes(rng);
                break;
            case TraceKind::TimerFire:
                e.note = "expiry " + render(tuple);
                break;
            }
            trace.push_back(e);
        }
        const auto back = reparse(trace);
        REQUIRE(back.size() == trace.size());
        for (std::size_t i = 0; i < trace.size(); ++i)
        {
            CHECK_MESSAGE(back[i] == trace[i], to_jsonl_line(trace[i]));
        }
        CHECK(text(back) == text(trace));
    }

    TEST_CASE("malformed lines are reported")
    {
        std::istringstream bad_kind(R"({"time":1,"process":"s0","kind":"Nope","payload":""})");
        CHECK_THROWS_AS(read_jsonl(bad_kind), TraceParseError);
        std::istringstream bad_payload(R"({"time":1,"process":"s0","kind":"Broadcast","payload":"unquoted"})");
        CHECK_THROWS_AS(read_jsonl(bad_payload), TraceParseError);
        std::istringstream bad_process(R"({"time":1,"process":"x9","kind":"Broadcast","payload":"\"m\""})");
        CHECK_THROWS_AS(read_jsonl(bad_process), TraceParseError);
        CHECK(parse_trace_kind("DepDecide") == TraceKind::DepDecide);
    }
}
