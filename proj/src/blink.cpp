#include "flutter/blink.hpp"

namespace flutter
{
    Value BlinkInstance::propose(Value v)
    {
        if (m_own)
        {
            throw ProtocolBug("second proposal to a Blink instance");
        }
        m_own = v;
        return v;
    }

    std::size_t BlinkInstance::count(Value v) const noexcept
    {
        std::size_t n = 0;
        for (const auto &[from, s] : m_suggestions)
        {
            n += s == v ? 1 : 0;
        }
        return n;
    }

    BlinkInstance::Step BlinkInstance::on_suggest(const ProcessId &from, Value v)
    {
        m_suggestions[from] = v;

        Step step;
        if (!m_dep_proposed && m_suggestions.size() >= m_quorum)
        {
            // At 4f+1 suggestions exactly one value has 2f+1 of them. A tie is only
            // possible above 5f+1 servers and rules out a fast decision anywhere.
            step.dep_proposal = to_value(count(Value::True) >= count(Value::False));
            m_dep_proposed = true;
        }
        if (!m_decision)
        {
            for (Value candidate : {Value::True, Value::False})
            {
                if (count(candidate) >= m_quorum)
                {
                    m_decision = candidate;
                    step.fast_decision = candidate;
                    break;
                }
            }
        }
        return step;
    }

    std::optional<Value> BlinkInstance::on_dep_decide(Value v)
    {
        if (m_decision)
        {
            return std::nullopt;
        }
        m_decision = v;
        return v;
    }

    BlinkInstance &BlinkHost::get(const InstanceTag &tag)
    {
        return m_instances.try_emplace(tag, m_f, m_n).first->second;
    }

    const BlinkInstance *BlinkHost::instance(const InstanceTag &tag) const
    {
        auto it = m_instances.find(tag);
        return it == m_instances.end() ? nullptr : &it->second;
    }

    void BlinkHost::propose(Context &ctx, const InstanceTag &instance, Value v)
    {
        const Value suggestion = get(instance).propose(v);
        TraceEvent e;
        e.kind = TraceKind::Propose;
        e.instance = instance;
        e.value = v;
        ctx.record(std::move(e));
        ctx.send_to_servers(wire::Suggest{instance, suggestion});
    }

    void BlinkHost::emit_decide(Context &ctx, const InstanceTag &instance, Value v, const char *path,
                                const DecideFn &decide)
    {
        TraceEvent e;
        e.kind = TraceKind::Decide;
        e.instance = instance;
        e.value = v;
        e.note = path;
        ctx.record(std::move(e));
        if (decide)
        {
            decide(ctx, instance, v);
        }
    }

    void BlinkHost::on_suggest(Context &ctx, const ProcessId &from, const InstanceTag &instance, Value v,
                               const DecideFn &decide)
    {
        if (!from.is_server())
        {
            return;
        }
        const auto step = get(instance).on_suggest(from, v);
        if (step.dep_proposal)
        {
            ctx.dep_propose(instance, *step.dep_proposal);
        }
        if (step.fast_decision)
        {
            emit_decide(ctx, instance, *step.fast_decision, "fast", decide);
        }
    }

    void BlinkHost::on_dep_decide(Context &ctx, const InstanceTag &instance, Value v, const DecideFn &decide)
    {
        if (auto d = get(instance).on_dep_decide(v))
        {
            emit_decide(ctx, instance, *d, "slow", decide);
        }
    }

    void BlinkServer::on_deliver(Context &ctx, const ProcessId &from, const WireMessage &msg)
    {
        if (const auto *s = std::get_if<wire::Suggest>(&msg))
        {
            m_host.on_suggest(ctx, from, s->instance, s->value, {});
        }
    }

    void BlinkServer::on_dep_decide(Context &ctx, const InstanceTag &instance, Value v)
    {
        m_host.on_dep_decide(ctx, instance, v, {});
    }
}
