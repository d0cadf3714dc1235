#include "flutter/flutter_client.hpp"

#include <limits>

namespace flutter
{
    void ClientParams::validate() const
    {
        if (delta_estimate.ticks < 0)
        {
            throw ConfigError("client delay estimate must be non-negative");
        }
        if (epsilon.ticks < 1)
        {
            throw ConfigError("bet margin must be at least one tick");
        }
    }

    SimTime bet_for(SimTime local_time, std::uint32_t retry, const ClientParams &params)
    {
        constexpr auto max = std::numeric_limits<std::int64_t>::max();
        if (retry >= 62)
        {
            throw ProtocolBug("retry count overflows the bet");
        }
        const std::int64_t scale = std::int64_t{1} << retry;
        if (params.delta_estimate.ticks != 0 && scale > max / params.delta_estimate.ticks)
        {
            throw ProtocolBug("bet margin overflows");
        }
        const std::int64_t margin = scale * params.delta_estimate.ticks + params.epsilon.ticks;
        if (local_time.ticks > max - margin)
        {
            throw ProtocolBug("bet overflows");
        }
        return SimTime{local_time.ticks + margin};
    }

    FlutterClient::FlutterClient(std::size_t f, ClientParams params) : m_f(f), m_params(params)
    {
        m_params.validate();
    }

    void FlutterClient::broadcast(Context &ctx, const Bytes &message)
    {
        if (!m_broadcast.insert(message).second)
        {
            throw ProtocolBug("correct client broadcast " + quote_bytes(message) + " twice");
        }
        TraceEvent e;
        e.kind = TraceKind::Broadcast;
        e.bytes = message;
        ctx.record(std::move(e));
        submit(ctx, message, 0);
    }

    void FlutterClient::submit(Context &ctx, const Bytes &message, std::uint32_t retry)
    {
        const SimTime bet = bet_for(ctx.local_time(), retry, m_params);
        if (auto it = m_submissions.find(message); it != m_submissions.end() && !(bet > it->second.bet))
        {
            throw ProtocolBug("resubmission of " + quote_bytes(message) + " did not increase the bet");
        }
        ctx.send_to_servers(wire::Message{message, bet});
        m_submissions[message] = Submission{retry, bet};
        ++m_submit_count;
    }

    void FlutterClient::on_decision(Context &ctx, const ProcessId &server, const Bytes &message, SimTime bet, Value v)
    {
        m_decisions[{message, bet, server}] = v;

        auto it = m_submissions.find(message);
        if (it == m_submissions.end() || it->second.bet != bet)
        {
            return;
        }
        std::size_t rejections = 0;
        for (const auto &s : ctx.servers())
        {
            auto d = m_decisions.find({message, bet, s});
            rejections += (d != m_decisions.end() && d->second == Value::False) ? 1 : 0;
        }
        if (rejections >= quorum::retry(m_f))
        {
            submit(ctx, message, it->second.retry + 1);
        }
    }

    void FlutterClient::on_deliver(Context &ctx, const ProcessId &from, const WireMessage &msg)
    {
        if (const auto *d = std::get_if<wire::Decision>(&msg); d != nullptr && from.is_server())
        {
            on_decision(ctx, from, d->message, d->bet, d->value);
        }
    }
}
