#pragma once

#include "flutter/simnet.hpp"
#include "flutter/types.hpp"

#include <map>
#include <set>
#include <tuple>

namespace flutter
{
    struct ClientParams
    {
        // Message delay estimate used to place bets.
        SimTime delta_estimate{10};
        // Bet margin, at least one tick.
        SimTime epsilon{1};

        void validate() const;
    };

    // local_time + 2^r * delta_estimate + epsilon. Throws ProtocolBug on overflow.
    SimTime bet_for(SimTime local_time, std::uint32_t retry, const ClientParams &params);

    // Client side of the broadcast: bet, disseminate, and resubmit with a doubled
    // margin once f+1 servers report the current bet rejected.
    class FlutterClient : public Process
    {
    public:
        struct Submission
        {
            std::uint32_t retry = 0;
            SimTime bet;
        };

        FlutterClient(std::size_t f, ClientParams params);

        void broadcast(Context &ctx, const Bytes &message);
        void submit(Context &ctx, const Bytes &message, std::uint32_t retry);
        void on_decision(Context &ctx, const ProcessId &server, const Bytes &message, SimTime bet, Value v);

        void on_deliver(Context &ctx, const ProcessId &from, const WireMessage &msg) override;

        const std::map<Bytes, Submission> &submissions() const noexcept { return m_submissions; }
        const ClientParams &params() const noexcept { return m_params; }
        std::size_t submit_count() const noexcept { return m_submit_count; }

    private:
        std::size_t m_f;
        ClientParams m_params;
        std::set<Bytes> m_broadcast;
        std::map<Bytes, Submission> m_submissions;
        std::map<std::tuple<Bytes, SimTime, ProcessId>, Value> m_decisions;
        std::size_t m_submit_count = 0;
    };
}
