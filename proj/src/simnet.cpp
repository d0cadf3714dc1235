#include "flutter/simnet.hpp"

#include "flutter/weakcon.hpp"

#include <algorithm>
#include <cstdlib>

namespace flutter
{
    void NetworkStrategy::validate() const
    {
        if (delta.ticks < 1)
        {
            throw ConfigError("delta must be at least 1 tick");
        }
        for (const auto &[link, delays] : script)
        {
            for (auto d : delays)
            {
                if (d < 1 || d > delta.ticks)
                {
                    throw ConfigError("scripted delay " + std::to_string(d) + " on " + label(link.first) + "->" +
                                      label(link.second) + " is outside [1, delta]");
                }
            }
        }
    }

    std::int64_t ClockModel::offset(const ProcessId &p) const
    {
        auto it = offsets.find(p);
        return it == offsets.end() ? 0 : it->second;
    }

    void ClockModel::validate() const
    {
        if (max_drift.ticks < 0)
        {
            throw ConfigError("drift bound must be non-negative");
        }
        for (const auto &[p, off] : offsets)
        {
            if (std::llabs(off) > max_drift.ticks)
            {
                throw ConfigError("clock offset of " + label(p) + " exceeds the drift bound");
            }
        }
    }

    class Simulator::ProcessContext final : public Context
    {
    public:
        ProcessContext(Simulator &sim, const ProcessId &self) : m_sim(sim), m_self(self) {}

        const ProcessId &self() const override { return m_self; }
        SimTime now() const override { return m_sim.m_now; }
        SimTime local_time() const override { return m_sim.m_clocks.local_time(m_self, m_sim.m_now); }
        const std::vector<ProcessId> &servers() const override { return m_sim.m_servers; }
        const std::vector<ProcessId> &clients() const override { return m_sim.m_clients; }
        void send(const ProcessId &dst, const WireMessage &msg) override { m_sim.send(m_self, dst, msg); }
        void schedule_timer(SimTime at, TimerToken token, std::string label) override
        {
            m_sim.schedule_timer(m_self, at, token, std::move(label));
        }
        void dep_propose(const InstanceTag &instance, Value v) override { m_sim.dep_propose(m_self, instance, v); }
        void record(TraceEvent event) override { m_sim.record(m_self, std::move(event)); }
        void crash() override { m_sim.m_processes.at(m_self).crashed = true; }
        const Trace &trace() const override { return m_sim.m_trace; }
        AdversaryScratchpad &scratchpad() override { return m_sim.m_scratchpad; }

    private:
        Simulator &m_sim;
        ProcessId m_self;
    };

    Simulator::Simulator(NetworkStrategy network, ClockModel clocks)
        : m_network(std::move(network)), m_clocks(std::move(clocks)), m_rng(m_network.seed)
    {
        m_network.validate();
        m_clocks.validate();
    }

    Simulator::~Simulator() = default;

    void Simulator::add_process(const ProcessId &id, std::unique_ptr<Process> process, bool correct)
    {
        if (m_started)
        {
            throw ConfigError("processes must be added before the run starts");
        }
        if (m_processes.contains(id))
        {
            throw ConfigError("duplicate process " + label(id));
        }
        m_processes.emplace(id, Slot{std::move(process), correct, false});
        enqueue(m_now, Call{id, [](Process &p, Context &ctx) { p.on_start(ctx); }});
        auto &list = id.is_server() ? m_servers : m_clients;
        list.insert(std::upper_bound(list.begin(), list.end(), id), id);
    }

    void Simulator::set_dep_oracle(std::unique_ptr<DepOracle> oracle)
    {
        m_oracle = std::move(oracle);
    }

    bool Simulator::is_correct(const ProcessId &p) const
    {
        auto it = m_processes.find(p);
        return it != m_processes.end() && it->second.correct;
    }

    bool Simulator::is_crashed(const ProcessId &p) const
    {
        auto it = m_processes.find(p);
        return it != m_processes.end() && it->second.crashed;
    }

    Process &Simulator::process(const ProcessId &p)
    {
        auto it = m_processes.find(p);
        if (it == m_processes.end())
        {
            throw ConfigError("unknown process " + label(p));
        }
        return *it->second.process;
    }

    std::optional<SimTime> Simulator::next_event_time() const
    {
        if (m_queue.empty())
        {
            return std::nullopt;
        }
        return m_queue.top().time;
    }

    void Simulator::call_at(const ProcessId &target, SimTime at, std::function<void(Process &, Context &)> fn)
    {
        if (!m_processes.contains(target))
        {
            throw ConfigError("call scheduled for unknown process " + label(target));
        }
        enqueue(std::max(at, m_now), Call{target, std::move(fn)});
    }

    void Simulator::enqueue(SimTime at, decltype(Event::body) body)
    {
        m_queue.push(Event{at, m_seq++, std::move(body)});
    }

    SimTime Simulator::assign_delay(const ProcessId &src, const ProcessId &dst)
    {
        switch (m_network.mode)
        {
        case NetworkMode::ExactDelta:
            return m_network.delta;
        case NetworkMode::SeededRandom:
            return SimTime{std::uniform_int_distribution<std::int64_t>(1, m_network.delta.ticks)(m_rng)};
        case NetworkMode::Scripted:
        {
            const auto link = std::make_pair(src, dst);
            auto it = m_network.script.find(link);
            if (it == m_network.script.end())
            {
                return m_network.delta;
            }
            auto &cursor = m_script_cursor[link];
            if (cursor >= it->second.size())
            {
                return m_network.delta;
            }
            return SimTime{it->second[cursor++]};
        }
        }
        return m_network.delta;
    }

    void Simulator::validate_wire(const WireMessage &msg) const
    {
        const BroadcastTuple *tuple = nullptr;
        if (const auto *o = std::get_if<wire::Observe>(&msg))
        {
            tuple = &o->tuple;
        }
        else if (const auto *s = std::get_if<wire::Suggest>(&msg))
        {
            tuple = s->instance.tuple();
        }
        if (tuple != nullptr)
        {
            if (!tuple->client.is_client() || !m_processes.contains(tuple->client))
            {
                throw ConfigError("malformed message names unknown client: " + render(msg));
            }
        }
    }

    void Simulator::send(const ProcessId &src, const ProcessId &dst, const WireMessage &msg)
    {
        if (!m_processes.contains(dst))
        {
            throw ConfigError("send from " + label(src) + " to unknown process " + label(dst));
        }
        validate_wire(msg);

        const auto link = std::make_pair(src, dst);
        SimTime at = m_now + assign_delay(src, dst);
        if (auto it = m_last_delivery.find(link); it != m_last_delivery.end())
        {
            at = std::max(at, it->second);
        }
        m_last_delivery[link] = at;

        TraceEvent e;
        e.time = m_now;
        e.process = src;
        e.kind = TraceKind::Send;
        e.peer = dst;
        e.message = msg;
        m_trace.push_back(std::move(e));

        enqueue(at, Delivery{src, dst, msg});
    }

    void Simulator::schedule_timer(const ProcessId &p, SimTime fire_at_local, TimerToken token, std::string label)
    {
        const SimTime at = std::max(m_clocks.global_time(p, fire_at_local), m_now);
        enqueue(at, TimerFire{p, token, std::move(label)});
    }

    void Simulator::dep_propose(const ProcessId &p, const InstanceTag &instance, Value v)
    {
        if (!is_correct(p))
        {
            // The oracle abstracts an algorithm run among correct servers only.
            return;
        }
        if (!m_oracle)
        {
            throw ConfigError("dep proposal without a configured dep oracle");
        }
        TraceEvent e;
        e.kind = TraceKind::DepPropose;
        e.instance = instance;
        e.value = v;
        record(p, std::move(e));
        for (auto &ind : m_oracle->propose(instance, p, v, m_now))
        {
            enqueue(ind.at, DepDecision{ind.server, instance, ind.value});
        }
    }

    void Simulator::record(const ProcessId &p, TraceEvent event)
    {
        event.time = m_now;
        event.process = p;
        m_trace.push_back(std::move(event));
    }

    void Simulator::with_context(const ProcessId &p, const std::function<void(Process &, Context &)> &fn)
    {
        auto &slot = m_processes.at(p);
        if (slot.crashed)
        {
            return;
        }
        ProcessContext ctx(*this, p);
        fn(*slot.process, ctx);
    }

    void Simulator::dispatch(Event &ev)
    {
        struct Dispatcher
        {
            Simulator &sim;

            void operator()(Delivery &d) const
            {
                TraceEvent e;
                e.kind = TraceKind::Deliver;
                e.peer = d.src;
                e.message = d.msg;
                sim.record(d.dst, std::move(e));
                sim.with_context(d.dst, [&](Process &p, Context &ctx) { p.on_deliver(ctx, d.src, d.msg); });
            }
            void operator()(TimerFire &t) const
            {
                if (sim.is_crashed(t.owner))
                {
                    return;
                }
                TraceEvent e;
                e.kind = TraceKind::TimerFire;
                e.note = t.label;
                sim.record(t.owner, std::move(e));
                sim.with_context(t.owner, [&](Process &p, Context &ctx) { p.on_timer(ctx, t.token); });
            }
            void operator()(DepDecision &d) const
            {
                TraceEvent e;
                e.kind = TraceKind::DepDecide;
                e.instance = d.instance;
                e.value = d.value;
                sim.record(d.server, std::move(e));
                sim.with_context(d.server, [&](Process &p, Context &ctx) { p.on_dep_decide(ctx, d.instance, d.value); });
            }
            void operator()(Call &c) const { sim.with_context(c.target, c.fn); }
        };
        std::visit(Dispatcher{*this}, ev.body);
    }

    RunResult Simulator::run(std::optional<SimTime> until, std::size_t step_budget)
    {
        m_started = true;
        RunResult result;
        while (!m_queue.empty())
        {
            if (until && m_queue.top().time > *until)
            {
                break;
            }
            if (result.steps == step_budget)
            {
                throw BudgetExceeded("step budget of " + std::to_string(step_budget) + " events exceeded at t=" +
                                     to_string(m_now));
            }
            // priority_queue::top is const; the event is moved out before popping.
            Event ev = std::move(const_cast<Event &>(m_queue.top()));
            m_queue.pop();
            m_now = ev.time;
            dispatch(ev);
            ++result.steps;
        }
        result.quiescent = m_queue.empty();
        result.end_time = m_now;
        return result;
    }
}
