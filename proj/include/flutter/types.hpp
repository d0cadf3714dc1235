#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

namespace flutter
{
    // Integer-tick time. The minimum representable value stands for -infinity
    // (the initial remote time / lock time of a server).
    struct SimTime
    {
        std::int64_t ticks = 0;

        static constexpr SimTime neg_infinity() noexcept { return SimTime{std::numeric_limits<std::int64_t>::min()}; }
        constexpr bool is_neg_infinity() const noexcept { return ticks == std::numeric_limits<std::int64_t>::min(); }

        friend constexpr auto operator<=>(SimTime, SimTime) = default;
        friend constexpr SimTime operator+(SimTime a, SimTime b) noexcept { return SimTime{a.ticks + b.ticks}; }
        friend constexpr SimTime operator-(SimTime a, SimTime b) noexcept { return SimTime{a.ticks - b.ticks}; }
    };

    std::string to_string(SimTime t);

    enum class ProcessKind : std::uint8_t
    {
        Server,
        Client,
    };

    // Identity of a simulated process. Equality and map ordering use (kind, index);
    // `name` is the opaque byte string clients are ordered by inside broadcast tuples.
    struct ProcessId
    {
        ProcessKind kind = ProcessKind::Server;
        std::uint32_t index = 0;
        std::string name;

        static ProcessId server(std::uint32_t index);
        static ProcessId client(std::uint32_t index);
        static ProcessId client(std::uint32_t index, std::string name);

        bool is_server() const noexcept { return kind == ProcessKind::Server; }
        bool is_client() const noexcept { return kind == ProcessKind::Client; }

        friend bool operator==(const ProcessId &a, const ProcessId &b) noexcept
        {
            return a.kind == b.kind && a.index == b.index;
        }
        friend std::strong_ordering operator<=>(const ProcessId &a, const ProcessId &b) noexcept
        {
            if (auto c = a.kind <=> b.kind; c != 0)
            {
                return c;
            }
            return a.index <=> b.index;
        }
    };

    // "s3" / "c0": the label used in traces and scenario files.
    std::string label(const ProcessId &p);

    // Binary consensus value.
    enum class Value : std::uint8_t
    {
        False = 0,
        True = 1,
    };

    constexpr Value operator!(Value v) noexcept { return v == Value::True ? Value::False : Value::True; }
    constexpr Value to_value(bool b) noexcept { return b ? Value::True : Value::False; }
    const char *to_string(Value v) noexcept;

    // Application payloads are opaque bytes; std::string is used as the byte container.
    using Bytes = std::string;

    // (client, message, bet): the unit the broadcast layer agrees on.
    struct BroadcastTuple
    {
        ProcessId client;
        Bytes message;
        SimTime bet;
    };

    // Lexicographic over (bet, client name bytes, message bytes).
    std::strong_ordering compare_tuples(const BroadcastTuple &a, const BroadcastTuple &b) noexcept;

    inline std::strong_ordering operator<=>(const BroadcastTuple &a, const BroadcastTuple &b) noexcept
    {
        return compare_tuples(a, b);
    }
    inline bool operator==(const BroadcastTuple &a, const BroadcastTuple &b) noexcept
    {
        return compare_tuples(a, b) == 0;
    }

    // Consensus instance key: a numbered standalone instance or the tuple a broadcast
    // attempt is keyed by.
    struct InstanceTag
    {
        std::variant<std::uint64_t, BroadcastTuple> key;

        static InstanceTag numbered(std::uint64_t n) { return InstanceTag{n}; }
        static InstanceTag of(BroadcastTuple t) { return InstanceTag{std::move(t)}; }

        const BroadcastTuple *tuple() const noexcept { return std::get_if<BroadcastTuple>(&key); }

        friend bool operator==(const InstanceTag &, const InstanceTag &) = default;
        friend std::strong_ordering operator<=>(const InstanceTag &a, const InstanceTag &b) noexcept;
    };

    namespace wire
    {
        struct Suggest
        {
            InstanceTag instance;
            Value value;
            friend bool operator==(const Suggest &, const Suggest &) = default;
        };
        struct Time
        {
            SimTime time;
            friend bool operator==(const Time &, const Time &) = default;
        };
        struct Observe
        {
            BroadcastTuple tuple;
            friend bool operator==(const Observe &, const Observe &) = default;
        };
        struct Message
        {
            Bytes message;
            SimTime bet;
            friend bool operator==(const Message &, const Message &) = default;
        };
        struct Decision
        {
            Bytes message;
            SimTime bet;
            Value value;
            friend bool operator==(const Decision &, const Decision &) = default;
        };
    }

    using WireMessage = std::variant<wire::Suggest, wire::Time, wire::Observe, wire::Message, wire::Decision>;

    const char *type_name(const WireMessage &m) noexcept;

    // Canonical textual renderings used in traces. Every rendering can be parsed
    // back by the functions in trace_format.hpp.
    std::string quote_bytes(const Bytes &b);
    // Label, followed by /"name" when the name differs from the label.
    std::string render_process(const ProcessId &p);
    std::string render(const BroadcastTuple &t);
    std::string render(const InstanceTag &tag);
    std::string render(const WireMessage &m);

    // Quorum thresholds for a system tolerating f Byzantine servers.
    namespace quorum
    {
        constexpr std::size_t min_servers(std::size_t f) noexcept { return 5 * f + 1; }
        constexpr std::size_t fast(std::size_t f) noexcept { return 4 * f + 1; }
        // With more than 5f+1 servers, all but f; equal to 4f+1 at n = 5f+1.
        constexpr std::size_t fast(std::size_t n, std::size_t f) noexcept
        {
            return n > 5 * f + 1 ? n - f : fast(f);
        }
        constexpr std::size_t majority(std::size_t f) noexcept { return 2 * f + 1; }
        constexpr std::size_t retry(std::size_t f) noexcept { return f + 1; }
    }

    // Errors. A configuration error means a malformed scenario; a protocol bug means a
    // correct state machine was driven outside its contract.
    struct ConfigError : std::runtime_error
    {
        using std::runtime_error::runtime_error;
    };
    struct ProtocolBug : std::logic_error
    {
        using std::logic_error::logic_error;
    };
}
