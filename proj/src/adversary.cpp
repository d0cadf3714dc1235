#include "flutter/adversary.hpp"

#include <algorithm>

namespace flutter
{
    namespace
    {
        constexpr TimerToken own_timer_bit = TimerToken{1} << 63;

        const std::vector<BehaviorInfo> catalog = {
            {Behavior::Mute, "mute", false, "sends nothing; correct servers must progress on 4f+1 quorums alone"},
            {Behavior::Equivocator, "equivocator", false,
             "suggests True to some servers and False to others; targets the fast/slow quorum intersection"},
            {Behavior::TimeLiar, "time_liar", false,
             "announces times far in the future; targets the max guard on remote times and the lock time"},
            {Behavior::ObserveForger, "observe_forger", false,
             "relays tuples their client never issued and suggests delivering them; targets integrity"},
            {Behavior::StaleRelay, "stale_relay", false,
             "announces a time at or past the bet before relaying a tuple; targets FIFO reasoning on candidates"},
            {Behavior::PartialDisseminator, "partial_disseminator", true,
             "client that reaches a strict subset of servers then crashes"},
        };

        class Mute final : public Process
        {
        public:
            void on_deliver(Context &, const ProcessId &, const WireMessage &) override {}
        };

        // Runs a correct inner state machine behind a context that rewrites its sends.
        class ByzantineServer : public Process
        {
        public:
            ByzantineServer(BehaviorParams params, std::unique_ptr<Process> inner)
                : m_params(std::move(params)), m_inner(std::move(inner))
            {
            }

            void on_start(Context &ctx) override
            {
                auto t = tamper(ctx);
                m_inner->on_start(*t);
                start(ctx);
            }
            void on_deliver(Context &ctx, const ProcessId &from, const WireMessage &msg) override
            {
                auto t = tamper(ctx);
                m_inner->on_deliver(*t, from, msg);
            }
            void on_timer(Context &ctx, TimerToken token) override
            {
                if ((token & own_timer_bit) != 0)
                {
                    own_timer(ctx, token & ~own_timer_bit);
                    return;
                }
                auto t = tamper(ctx);
                m_inner->on_timer(*t, token);
            }
            void on_dep_decide(Context &ctx, const InstanceTag &instance, Value v) override
            {
                auto t = tamper(ctx);
                m_inner->on_dep_decide(*t, instance, v);
            }

            void drive(Context &ctx, const std::function<void(Process &, Context &)> &fn)
            {
                auto t = tamper(ctx);
                fn(*m_inner, *t);
            }

        protected:
            virtual std::unique_ptr<Context> tamper(Context &ctx) = 0;
            virtual void start(Context &) {}
            virtual void own_timer(Context &, TimerToken) {}

            void schedule_own(Context &ctx, SimTime at_global, TimerToken token, std::string label)
            {
                const SimTime local = at_global + (ctx.local_time() - ctx.now());
                ctx.schedule_timer(local, token | own_timer_bit, std::move(label));
            }

            const BehaviorParams &params() const noexcept { return m_params; }

        private:
            BehaviorParams m_params;
            std::unique_ptr<Process> m_inner;
        };

        // Rewrites single sends through a callback.
        class RewritingContext final : public ForwardingContext
        {
        public:
            using Rewrite = std::function<void(Context &inner, const ProcessId &dst, const WireMessage &msg)>;

            RewritingContext(Context &inner, Rewrite rewrite) : ForwardingContext(inner), m_rewrite(std::move(rewrite)) {}

            void send(const ProcessId &dst, const WireMessage &msg) override { m_rewrite(inner(), dst, msg); }

        private:
            Rewrite m_rewrite;
        };

        class Equivocator final : public ByzantineServer
        {
        public:
            using ByzantineServer::ByzantineServer;

        protected:
            std::unique_ptr<Context> tamper(Context &ctx) override
            {
                // Colluding equivocators share one split so their lies line up.
                auto &shared = ctx.scratchpad().values;
                const auto split =
                    shared
                        .try_emplace("equivocator.split", static_cast<std::int64_t>(params().split.value_or(
                                                              static_cast<std::uint32_t>(ctx.servers().size() / 2))))
                        .first->second;
                return std::make_unique<RewritingContext>(ctx, [split](Context &inner, const ProcessId &dst,
                                                                       const WireMessage &msg) {
                    if (const auto *s = std::get_if<wire::Suggest>(&msg))
                    {
                        const Value lie = to_value(static_cast<std::int64_t>(dst.index) < split);
                        inner.send(dst, wire::Suggest{s->instance, lie});
                        return;
                    }
                    inner.send(dst, msg);
                });
            }
        };

        class TimeLiar final : public ByzantineServer
        {
        public:
            using ByzantineServer::ByzantineServer;

        protected:
            std::unique_ptr<Context> tamper(Context &ctx) override
            {
                const auto skew = params().time_skew;
                return std::make_unique<RewritingContext>(ctx, [skew](Context &inner, const ProcessId &dst,
                                                                      const WireMessage &msg) {
                    if (const auto *t = std::get_if<wire::Time>(&msg))
                    {
                        inner.send(dst, wire::Time{t->time + SimTime{skew}});
                        return;
                    }
                    inner.send(dst, msg);
                });
            }
        };

        class StaleRelay final : public ByzantineServer
        {
        public:
            using ByzantineServer::ByzantineServer;

        protected:
            std::unique_ptr<Context> tamper(Context &ctx) override
            {
                return std::make_unique<RewritingContext>(ctx, [](Context &inner, const ProcessId &dst,
                                                                  const WireMessage &msg) {
                    if (const auto *o = std::get_if<wire::Observe>(&msg))
                    {
                        inner.send(dst, wire::Time{std::max(o->tuple.bet, inner.local_time())});
                    }
                    inner.send(dst, msg);
                });
            }
        };

        class ObserveForger final : public ByzantineServer
        {
        public:
            using ByzantineServer::ByzantineServer;

        protected:
            std::unique_ptr<Context> tamper(Context &ctx) override
            {
                return std::make_unique<ForwardingContext>(ctx);
            }

            void start(Context &ctx) override
            {
                const auto &forgeries = params().forgeries;
                for (std::size_t i = 0; i < forgeries.size(); ++i)
                {
                    schedule_own(ctx, forgeries[i].at, i, "forge " + std::to_string(i));
                }
            }

            void own_timer(Context &ctx, TimerToken token) override
            {
                const auto &forgery = params().forgeries.at(token);
                const auto &clients = ctx.clients();
                auto it = std::find_if(clients.begin(), clients.end(),
                                       [&](const ProcessId &c) { return c.index == forgery.client; });
                if (it == clients.end())
                {
                    throw ConfigError("forgery names unknown client c" + std::to_string(forgery.client));
                }
                const BroadcastTuple tuple{*it, forgery.message, ctx.now() + SimTime{forgery.bet_offset}};
                ctx.send_to_servers(wire::Observe{tuple});
                ctx.send_to_servers(wire::Suggest{InstanceTag::of(tuple), Value::True});
            }
        };
    }

    const std::vector<BehaviorInfo> &builtin_behaviors()
    {
        return catalog;
    }

    const BehaviorInfo &behavior_info(Behavior b)
    {
        return catalog.at(static_cast<std::size_t>(b));
    }

    std::optional<Behavior> parse_behavior(std::string_view id)
    {
        for (const auto &info : catalog)
        {
            if (info.id == id)
            {
                return info.behavior;
            }
        }
        return std::nullopt;
    }

    std::unique_ptr<Process> make_byzantine_server(Behavior behavior, const BehaviorParams &params,
                                                   std::unique_ptr<Process> inner)
    {
        switch (behavior)
        {
        case Behavior::Mute:
            return std::make_unique<Mute>();
        case Behavior::Equivocator:
            return std::make_unique<Equivocator>(params, std::move(inner));
        case Behavior::TimeLiar:
            return std::make_unique<TimeLiar>(params, std::move(inner));
        case Behavior::ObserveForger:
            return std::make_unique<ObserveForger>(params, std::move(inner));
        case Behavior::StaleRelay:
            return std::make_unique<StaleRelay>(params, std::move(inner));
        case Behavior::PartialDisseminator:
            break;
        }
        throw ConfigError(std::string("behavior '") + std::string(behavior_info(behavior).id) +
                          "' cannot be assigned to a server");
    }

    void drive_inner(Process &byzantine, Context &ctx, const std::function<void(Process &, Context &)> &fn)
    {
        if (auto *b = dynamic_cast<ByzantineServer *>(&byzantine))
        {
            b->drive(ctx, fn);
        }
    }

    void PartialDisseminator::broadcast(Context &ctx, const Bytes &message)
    {
        TraceEvent e;
        e.kind = TraceKind::Broadcast;
        e.bytes = message;
        ctx.record(std::move(e));
        const SimTime bet = bet_for(ctx.local_time(), 0, m_client);
        for (const auto &s : ctx.servers())
        {
            if (std::find(m_reach.begin(), m_reach.end(), s.index) != m_reach.end())
            {
                ctx.send(s, wire::Message{message, bet});
            }
        }
        ctx.crash();
    }
}
