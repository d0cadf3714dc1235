#include "flutter/flutter_server.hpp"

#include <algorithm>
#include <functional>

namespace flutter
{
    SimTime lock_time_of(std::span<const SimTime> remote_times, std::size_t f)
    {
        const std::size_t k = quorum::fast(remote_times.size(), f);
        if (remote_times.size() < k)
        {
            return SimTime::neg_infinity();
        }
        std::vector<SimTime> sorted(remote_times.begin(), remote_times.end());
        std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end(),
                         std::greater<>{});
        return sorted[k - 1];
    }

    FlutterServer::FlutterServer(std::size_t n, std::size_t f, FlutterServerOptions options)
        : m_n(n), m_f(f), m_options(options), m_consensus(f, n)
    {
    }

    void FlutterServer::on_start(Context &ctx)
    {
        for (const auto &s : ctx.servers())
        {
            m_remote_times.emplace(s, SimTime::neg_infinity());
        }
        if (m_options.beat_period > 0)
        {
            schedule(ctx, TimerKind::PeriodicBeat, ctx.local_time() + SimTime{m_options.beat_period}, nullptr);
        }
    }

    SimTime FlutterServer::lock_time() const
    {
        std::vector<SimTime> values;
        values.reserve(m_n);
        for (const auto &[s, t] : m_remote_times)
        {
            values.push_back(t);
        }
        return lock_time_of(values, m_f);
    }

    void FlutterServer::schedule(Context &ctx, TimerKind kind, SimTime at_local, const BroadcastTuple *tuple)
    {
        const TimerToken token = m_next_token++;
        std::string label;
        switch (kind)
        {
        case TimerKind::Beat:
            label = "beat " + render(*tuple);
            break;
        case TimerKind::Expiry:
            label = "expiry " + render(*tuple);
            break;
        case TimerKind::PeriodicBeat:
            label = "periodic-beat";
            break;
        }
        m_timers.emplace(token, std::make_pair(kind, tuple ? std::optional<BroadcastTuple>(*tuple) : std::nullopt));
        ctx.schedule_timer(at_local, token, std::move(label));
    }

    void FlutterServer::on_timer(Context &ctx, TimerToken token)
    {
        auto it = m_timers.find(token);
        if (it == m_timers.end())
        {
            return;
        }
        auto [kind, tuple] = std::move(it->second);
        m_timers.erase(it);
        switch (kind)
        {
        case TimerKind::Beat:
            beat(ctx);
            break;
        case TimerKind::Expiry:
            on_expiry_check(ctx, *tuple);
            break;
        case TimerKind::PeriodicBeat:
            beat(ctx);
            schedule(ctx, TimerKind::PeriodicBeat, ctx.local_time() + SimTime{m_options.beat_period}, nullptr);
            break;
        }
    }

    void FlutterServer::beat(Context &ctx)
    {
        ctx.send_to_servers(wire::Time{ctx.local_time()});
    }

    void FlutterServer::note_lock_time(Context &ctx)
    {
        const SimTime lt = lock_time();
        if (lt < m_last_lock_time)
        {
            throw ProtocolBug(label(ctx.self()) + ": lock time decreased");
        }
        m_last_lock_time = lt;
        if (m_options.check_lock_time_bound && lt > ctx.local_time())
        {
            throw ProtocolBug(label(ctx.self()) + ": lock time " + to_string(lt) + " ahead of local time " +
                              to_string(ctx.local_time()));
        }
    }

    void FlutterServer::on_time(Context &ctx, const ProcessId &from, SimTime t)
    {
        if (!from.is_server())
        {
            return;
        }
        auto &slot = m_remote_times.try_emplace(from, SimTime::neg_infinity()).first->second;
        slot = std::max(slot, t);
        note_lock_time(ctx);
        process_next(ctx);
    }

    void FlutterServer::spot(Context &ctx, const BroadcastTuple &tuple)
    {
        if (tuple.bet > lock_time())
        {
            if (m_last_processed && !(tuple > *m_last_processed))
            {
                throw ProtocolBug(label(ctx.self()) + ": new candidate " + render(tuple) + " not above last processed");
            }
            m_candidates.insert(tuple);
        }
        if (!m_observed.contains(tuple))
        {
            ctx.send_to_servers(wire::Observe{tuple});
            schedule(ctx, TimerKind::Beat, tuple.bet, &tuple);
            schedule(ctx, TimerKind::Expiry, tuple.bet, &tuple);
            m_observed.insert(tuple);
        }
        process_next(ctx);
    }

    void FlutterServer::propose(Context &ctx, const BroadcastTuple &tuple, Value v)
    {
        m_proposed.insert(tuple);
        m_consensus.propose(ctx, InstanceTag::of(tuple), v);
    }

    void FlutterServer::on_message(Context &ctx, const ProcessId &client, const Bytes &message, SimTime bet)
    {
        if (!client.is_client())
        {
            return;
        }
        const BroadcastTuple tuple{client, message, bet};
        spot(ctx, tuple);
        if (!m_proposed.contains(tuple))
        {
            const bool in_time = bet > ctx.local_time();
            propose(ctx, tuple, to_value(in_time));
        }
    }

    void FlutterServer::on_expiry_check(Context &ctx, const BroadcastTuple &tuple)
    {
        if (tuple.bet > ctx.local_time())
        {
            return;
        }
        if (m_observed.contains(tuple) && !m_proposed.contains(tuple))
        {
            propose(ctx, tuple, Value::False);
        }
    }

    void FlutterServer::on_consensus_decide(Context &ctx, const BroadcastTuple &tuple, Value v)
    {
        ctx.send(tuple.client, wire::Decision{tuple.message, tuple.bet, v});
        m_decisions[tuple] = v;
        process_next(ctx);
    }

    void FlutterServer::process_next(Context &ctx)
    {
        while (true)
        {
            auto it = m_last_processed ? m_candidates.upper_bound(*m_last_processed) : m_candidates.begin();
            if (it == m_candidates.end())
            {
                return;
            }
            auto decision = m_decisions.find(*it);
            if (decision == m_decisions.end() || it->bet > lock_time())
            {
                return;
            }
            if (decision->second == Value::True)
            {
                order(ctx, *it);
            }
            m_last_processed = *it;
            m_processed_log.push_back(*it);
        }
    }

    void FlutterServer::order(Context &ctx, const BroadcastTuple &tuple)
    {
        if (m_delivered.emplace(tuple.client, tuple.message).second)
        {
            TraceEvent e;
            e.kind = TraceKind::AppDeliver;
            e.peer = tuple.client;
            e.bytes = tuple.message;
            ctx.record(std::move(e));
        }
    }

    void FlutterServer::on_deliver(Context &ctx, const ProcessId &from, const WireMessage &msg)
    {
        struct Handler
        {
            FlutterServer &self;
            Context &ctx;
            const ProcessId &from;

            void operator()(const wire::Time &t) const { self.on_time(ctx, from, t.time); }
            void operator()(const wire::Observe &o) const
            {
                if (from.is_server())
                {
                    self.spot(ctx, o.tuple);
                }
            }
            void operator()(const wire::Message &m) const { self.on_message(ctx, from, m.message, m.bet); }
            void operator()(const wire::Suggest &s) const
            {
                self.m_consensus.on_suggest(ctx, from, s.instance, s.value,
                                            [this](Context &c, const InstanceTag &tag, Value v) {
                                                if (const auto *t = tag.tuple())
                                                {
                                                    self.on_consensus_decide(c, *t, v);
                                                }
                                            });
            }
            void operator()(const wire::Decision &) const {}
        };
        std::visit(Handler{*this, ctx, from}, msg);
    }

    void FlutterServer::on_dep_decide(Context &ctx, const InstanceTag &instance, Value v)
    {
        m_consensus.on_dep_decide(ctx, instance, v, [this](Context &c, const InstanceTag &tag, Value d) {
            if (const auto *t = tag.tuple())
            {
                on_consensus_decide(c, *t, d);
            }
        });
    }
}
