#pragma once

#include "flutter/types.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flutter
{
    enum class TraceKind : std::uint8_t
    {
        Send,
        Deliver,
        Propose,
        Decide,
        AppDeliver,
        Broadcast,
        TimerFire,
        DepPropose,
        DepDecide,
    };

    const char *to_string(TraceKind k) noexcept;
    std::optional<TraceKind> parse_trace_kind(std::string_view s) noexcept;

    // One observable action. Which optional fields are populated depends on `kind`:
    //   Send/Deliver          peer (dst / src), message
    //   Propose/DepPropose    instance, value
    //   Decide                instance, value, note ("fast" | "slow")
    //   DepDecide             instance, value
    //   AppDeliver            peer (client), bytes
    //   Broadcast             bytes
    //   TimerFire             note
    struct TraceEvent
    {
        SimTime time;
        ProcessId process;
        TraceKind kind = TraceKind::Send;
        std::optional<ProcessId> peer;
        std::optional<WireMessage> message;
        std::optional<InstanceTag> instance;
        std::optional<Value> value;
        Bytes bytes;
        std::string note;

        std::string payload() const;

        friend bool operator==(const TraceEvent &, const TraceEvent &) = default;
    };

    using Trace = std::vector<TraceEvent>;

    struct TraceParseError : std::runtime_error
    {
        using std::runtime_error::runtime_error;
    };

    // Rebuilds the structured fields of an event from its canonical payload.
    TraceEvent parse_event(SimTime time, const ProcessId &process, TraceKind kind, std::string_view payload);
    ProcessId parse_process_label(std::string_view label);

    // JSONL: one {"time","process","kind","payload"} object per line, in that key order.
    std::string to_jsonl_line(const TraceEvent &e);
    void write_jsonl(std::ostream &out, const Trace &trace);
    Trace read_jsonl(std::istream &in);
}
