#pragma once

#include "flutter/blink.hpp"
#include "flutter/simnet.hpp"
#include "flutter/types.hpp"

#include <map>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

namespace flutter
{
    // Largest t such that at least 4f+1 entries are >= t: the (4f+1)-th largest
    // entry, or -infinity when there are fewer entries than that. With more than
    // 5f+1 entries the threshold is all but f of them.
    SimTime lock_time_of(std::span<const SimTime> remote_times, std::size_t f);

    struct FlutterServerOptions
    {
        // Throw ProtocolBug if lock_time() ever exceeds local_time(). Only sound when
        // every Time sender is correct and clocks are not drifted.
        bool check_lock_time_bound = false;
        // Extra beat() every `beat_period` ticks of local time; 0 disables it.
        std::int64_t beat_period = 0;
    };

    // Server side of the leaderless total-order broadcast.
    //
    // Clients bet a delivery rank for each message. Servers relay what they see,
    // announce their local time when a bet comes due, run one Blink instance per
    // (client, message, bet) tuple to agree on whether the bet was in time, and
    // deliver accepted tuples in ascending tuple order once 4f+1 servers have
    // announced reaching the bet (the lock time).
    class FlutterServer : public Process
    {
    public:
        FlutterServer(std::size_t n, std::size_t f, FlutterServerOptions options = {});

        void on_start(Context &ctx) override;
        void on_deliver(Context &ctx, const ProcessId &from, const WireMessage &msg) override;
        void on_timer(Context &ctx, TimerToken token) override;
        void on_dep_decide(Context &ctx, const InstanceTag &instance, Value v) override;

        SimTime lock_time() const;

        void beat(Context &ctx);
        void on_time(Context &ctx, const ProcessId &from, SimTime t);
        void spot(Context &ctx, const BroadcastTuple &tuple);
        void on_message(Context &ctx, const ProcessId &client, const Bytes &message, SimTime bet);
        void on_expiry_check(Context &ctx, const BroadcastTuple &tuple);
        void on_consensus_decide(Context &ctx, const BroadcastTuple &tuple, Value v);
        void process_next(Context &ctx);

        const std::set<BroadcastTuple> &observed() const noexcept { return m_observed; }
        const std::set<BroadcastTuple> &proposed() const noexcept { return m_proposed; }
        const std::set<BroadcastTuple> &candidates() const noexcept { return m_candidates; }
        const std::set<std::pair<ProcessId, Bytes>> &delivered() const noexcept { return m_delivered; }
        const std::map<ProcessId, SimTime> &remote_times() const noexcept { return m_remote_times; }
        const std::map<BroadcastTuple, Value> &decisions() const noexcept { return m_decisions; }
        const std::optional<BroadcastTuple> &last_processed() const noexcept { return m_last_processed; }
        // Arguments of every processed tuple, in processing order.
        const std::vector<BroadcastTuple> &processed_log() const noexcept { return m_processed_log; }
        const BlinkHost &consensus() const noexcept { return m_consensus; }

    private:
        enum class TimerKind : std::uint8_t
        {
            Beat,
            Expiry,
            PeriodicBeat,
        };

        void propose(Context &ctx, const BroadcastTuple &tuple, Value v);
        void order(Context &ctx, const BroadcastTuple &tuple);
        void schedule(Context &ctx, TimerKind kind, SimTime at_local, const BroadcastTuple *tuple);
        void note_lock_time(Context &ctx);

        std::size_t m_n;
        std::size_t m_f;
        FlutterServerOptions m_options;

        std::set<BroadcastTuple> m_observed;
        std::set<BroadcastTuple> m_proposed;
        std::set<BroadcastTuple> m_candidates;
        std::set<std::pair<ProcessId, Bytes>> m_delivered;
        std::map<ProcessId, SimTime> m_remote_times;
        std::map<BroadcastTuple, Value> m_decisions;
        std::optional<BroadcastTuple> m_last_processed;
        std::vector<BroadcastTuple> m_processed_log;

        BlinkHost m_consensus;
        std::map<TimerToken, std::pair<TimerKind, std::optional<BroadcastTuple>>> m_timers;
        TimerToken m_next_token = 0;
        SimTime m_last_lock_time = SimTime::neg_infinity();
    };
}
