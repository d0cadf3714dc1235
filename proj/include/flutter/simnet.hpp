#pragma once

#include "flutter/trace.hpp"
#include "flutter/types.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <utility>
#include <variant>
#include <vector>

namespace flutter
{
    class DepOracle;

    using TimerToken = std::uint64_t;

    // Shared memory for colluding Byzantine processes.
    struct AdversaryScratchpad
    {
        std::map<std::string, std::int64_t> values;
    };

    // What a process may do while one of its handlers runs. Sends are always
    // attributed to self(); a process cannot choose its sender identity.
    class Context
    {
    public:
        virtual ~Context() = default;

        virtual const ProcessId &self() const = 0;
        virtual SimTime now() const = 0;
        virtual SimTime local_time() const = 0;
        virtual const std::vector<ProcessId> &servers() const = 0;
        virtual const std::vector<ProcessId> &clients() const = 0;

        virtual void send(const ProcessId &dst, const WireMessage &msg) = 0;
        virtual void schedule_timer(SimTime fire_at_local, TimerToken token, std::string label) = 0;
        virtual void dep_propose(const InstanceTag &instance, Value v) = 0;
        // Appends a Propose/Decide/AppDeliver/Broadcast event stamped with now() and self().
        virtual void record(TraceEvent event) = 0;
        // Stops this process: later deliveries and timers are traced but not handled.
        virtual void crash() = 0;

        // Adaptive-adversary surface.
        virtual const Trace &trace() const = 0;
        virtual AdversaryScratchpad &scratchpad() = 0;

        void send_to_servers(const WireMessage &msg)
        {
            for (const auto &s : servers())
            {
                send(s, msg);
            }
        }
    };

    // Forwards everything to an inner context; behaviors override what they tamper with.
    class ForwardingContext : public Context
    {
    public:
        explicit ForwardingContext(Context &inner) : m_inner(inner) {}

        const ProcessId &self() const override { return m_inner.self(); }
        SimTime now() const override { return m_inner.now(); }
        SimTime local_time() const override { return m_inner.local_time(); }
        const std::vector<ProcessId> &servers() const override { return m_inner.servers(); }
        const std::vector<ProcessId> &clients() const override { return m_inner.clients(); }
        void send(const ProcessId &dst, const WireMessage &msg) override { m_inner.send(dst, msg); }
        void schedule_timer(SimTime at, TimerToken token, std::string label) override
        {
            m_inner.schedule_timer(at, token, std::move(label));
        }
        void dep_propose(const InstanceTag &instance, Value v) override { m_inner.dep_propose(instance, v); }
        void record(TraceEvent event) override { m_inner.record(std::move(event)); }
        void crash() override { m_inner.crash(); }
        const Trace &trace() const override { return m_inner.trace(); }
        AdversaryScratchpad &scratchpad() override { return m_inner.scratchpad(); }

    protected:
        Context &inner() { return m_inner; }

    private:
        Context &m_inner;
    };

    class Process
    {
    public:
        virtual ~Process() = default;

        virtual void on_start(Context &) {}
        virtual void on_deliver(Context &ctx, const ProcessId &from, const WireMessage &msg) = 0;
        virtual void on_timer(Context &, TimerToken) {}
        virtual void on_dep_decide(Context &, const InstanceTag &, Value) {}
    };

    enum class NetworkMode : std::uint8_t
    {
        ExactDelta,
        SeededRandom,
        Scripted,
    };

    // Delay assignment. Every assigned delay d satisfies 1 <= d <= delta; scripted
    // delays are consumed per link in send order and fall back to delta once exhausted.
    struct NetworkStrategy
    {
        NetworkMode mode = NetworkMode::ExactDelta;
        SimTime delta{10};
        std::uint64_t seed = 0;
        std::map<std::pair<ProcessId, ProcessId>, std::vector<std::int64_t>> script;

        void validate() const;
    };

    // Static per-process clock offsets, |offset| <= max_drift.
    struct ClockModel
    {
        SimTime max_drift{0};
        std::map<ProcessId, std::int64_t> offsets;

        std::int64_t offset(const ProcessId &p) const;
        SimTime local_time(const ProcessId &p, SimTime global) const { return SimTime{global.ticks + offset(p)}; }
        SimTime global_time(const ProcessId &p, SimTime local) const { return SimTime{local.ticks - offset(p)}; }
        void validate() const;
    };

    struct BudgetExceeded : std::runtime_error
    {
        using std::runtime_error::runtime_error;
    };

    struct RunResult
    {
        bool quiescent = false;
        SimTime end_time;
        std::size_t steps = 0;
    };

    // Deterministic discrete-event simulator: reliable authenticated FIFO links, drifted
    // local clocks, local-time timers, the dep oracle, and a complete trace. Events are
    // processed in (time, sequence) order; sequence numbers are assigned at enqueue.
    class Simulator
    {
    public:
        Simulator(NetworkStrategy network, ClockModel clocks);
        ~Simulator();

        Simulator(const Simulator &) = delete;
        Simulator &operator=(const Simulator &) = delete;

        void add_process(const ProcessId &id, std::unique_ptr<Process> process, bool correct);
        void set_dep_oracle(std::unique_ptr<DepOracle> oracle);

        // Runs `fn` as a handler of `target` at global time `at` (scenario inputs).
        void call_at(const ProcessId &target, SimTime at, std::function<void(Process &, Context &)> fn);

        // Processes events until quiescence or until the next event lies after `until`.
        // Throws BudgetExceeded when more than `step_budget` events would be needed.
        RunResult run(std::optional<SimTime> until = std::nullopt, std::size_t step_budget = 10'000'000);

        const Trace &trace() const noexcept { return m_trace; }
        Trace take_trace() { return std::move(m_trace); }
        std::size_t pending_events() const noexcept { return m_queue.size(); }
        std::optional<SimTime> next_event_time() const;
        SimTime now() const noexcept { return m_now; }

        const std::vector<ProcessId> &servers() const noexcept { return m_servers; }
        const std::vector<ProcessId> &clients() const noexcept { return m_clients; }
        bool is_correct(const ProcessId &p) const;
        bool is_crashed(const ProcessId &p) const;
        bool has_process(const ProcessId &p) const { return m_processes.contains(p); }
        Process &process(const ProcessId &p);
        const DepOracle *dep_oracle() const noexcept { return m_oracle.get(); }
        const ClockModel &clocks() const noexcept { return m_clocks; }

        template <typename T>
        T &process_as(const ProcessId &p)
        {
            return dynamic_cast<T &>(process(p));
        }

    private:
        class ProcessContext;
        friend class ProcessContext;

        struct Delivery
        {
            ProcessId src;
            ProcessId dst;
            WireMessage msg;
        };
        struct TimerFire
        {
            ProcessId owner;
            TimerToken token;
            std::string label;
        };
        struct DepDecision
        {
            ProcessId server;
            InstanceTag instance;
            Value value;
        };
        struct Call
        {
            ProcessId target;
            std::function<void(Process &, Context &)> fn;
        };

        struct Event
        {
            SimTime time;
            std::uint64_t seq = 0;
            std::variant<Delivery, TimerFire, DepDecision, Call> body;
        };
        struct EventAfter
        {
            bool operator()(const Event &a, const Event &b) const noexcept
            {
                if (a.time != b.time)
                {
                    return a.time > b.time;
                }
                return a.seq > b.seq;
            }
        };

        struct Slot
        {
            std::unique_ptr<Process> process;
            bool correct = true;
            bool crashed = false;
        };

        void enqueue(SimTime at, decltype(Event::body) body);
        void dispatch(Event &ev);
        void with_context(const ProcessId &p, const std::function<void(Process &, Context &)> &fn);

        // Operations exposed to processes through their context.
        void send(const ProcessId &src, const ProcessId &dst, const WireMessage &msg);
        void schedule_timer(const ProcessId &p, SimTime fire_at_local, TimerToken token, std::string label);
        void dep_propose(const ProcessId &p, const InstanceTag &instance, Value v);
        void record(const ProcessId &p, TraceEvent event);
        void validate_wire(const WireMessage &msg) const;
        SimTime assign_delay(const ProcessId &src, const ProcessId &dst);

        NetworkStrategy m_network;
        ClockModel m_clocks;
        std::mt19937_64 m_rng;
        std::map<ProcessId, Slot> m_processes;
        std::vector<ProcessId> m_servers;
        std::vector<ProcessId> m_clients;
        std::map<std::pair<ProcessId, ProcessId>, SimTime> m_last_delivery;
        std::map<std::pair<ProcessId, ProcessId>, std::size_t> m_script_cursor;
        std::priority_queue<Event, std::vector<Event>, EventAfter> m_queue;
        std::unique_ptr<DepOracle> m_oracle;
        AdversaryScratchpad m_scratchpad;
        Trace m_trace;
        SimTime m_now{0};
        std::uint64_t m_seq = 0;
        bool m_started = false;
    };
}
