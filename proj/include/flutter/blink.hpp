#pragma once

#include "flutter/simnet.hpp"
#include "flutter/types.hpp"

#include <functional>
#include <map>
#include <optional>

namespace flutter
{
    // One representative binary consensus instance, as seen by one server.
    //
    // The server broadcasts its proposal as a suggestion. After collecting 4f+1
    // suggestions it proposes the value backed by at least 2f+1 of them to the
    // underlying weak consensus (slow path); whenever 4f+1 suggestions match it
    // decides immediately (fast path). With n > 5f+1 servers both thresholds are
    // n-f suggestions and the slow path takes the more frequent value. A dep decision is adopted unless the
    // instance already decided.
    //
    // This class is a pure state machine; BlinkHost wires it to a Context.
    class BlinkInstance
    {
    public:
        struct Step
        {
            std::optional<Value> dep_proposal;
            std::optional<Value> fast_decision;
        };

        // `n` = 0 stands for 5f+1 servers.
        explicit BlinkInstance(std::size_t f, std::size_t n = 0)
            : m_quorum(quorum::fast(n == 0 ? quorum::min_servers(f) : n, f))
        {
        }

        // Returns the value to suggest to every server. Throws ProtocolBug on a second call.
        Value propose(Value v);

        // A later suggestion from the same sender overwrites the earlier one.
        Step on_suggest(const ProcessId &from, Value v);

        // Returns the decision this indication produces, if any.
        std::optional<Value> on_dep_decide(Value v);

        bool has_proposed() const noexcept { return m_own.has_value(); }
        std::optional<Value> own_proposal() const noexcept { return m_own; }
        bool dep_proposed() const noexcept { return m_dep_proposed; }
        std::optional<Value> decision() const noexcept { return m_decision; }
        std::size_t count(Value v) const noexcept;
        const std::map<ProcessId, Value> &suggestions() const noexcept { return m_suggestions; }

    private:
        std::size_t m_quorum;
        std::optional<Value> m_own;
        std::map<ProcessId, Value> m_suggestions;
        bool m_dep_proposed = false;
        std::optional<Value> m_decision;
    };

    // Owns a server's Blink instances and performs their effects: Suggest sends,
    // dep proposals and Propose/Decide trace events.
    class BlinkHost
    {
    public:
        using DecideFn = std::function<void(Context &, const InstanceTag &, Value)>;

        explicit BlinkHost(std::size_t f, std::size_t n = 0) : m_f(f), m_n(n) {}

        void propose(Context &ctx, const InstanceTag &instance, Value v);
        void on_suggest(Context &ctx, const ProcessId &from, const InstanceTag &instance, Value v, const DecideFn &decide);
        void on_dep_decide(Context &ctx, const InstanceTag &instance, Value v, const DecideFn &decide);

        const BlinkInstance *instance(const InstanceTag &tag) const;
        const std::map<InstanceTag, BlinkInstance> &instances() const noexcept { return m_instances; }

    private:
        BlinkInstance &get(const InstanceTag &tag);
        void emit_decide(Context &ctx, const InstanceTag &instance, Value v, const char *path, const DecideFn &decide);

        std::size_t m_f;
        std::size_t m_n;
        std::map<InstanceTag, BlinkInstance> m_instances;
    };

    // A server running standalone Blink instances; proposals arrive as scenario inputs.
    class BlinkServer : public Process
    {
    public:
        explicit BlinkServer(std::size_t f, std::size_t n = 0) : m_host(f, n) {}

        void propose(Context &ctx, const InstanceTag &instance, Value v) { m_host.propose(ctx, instance, v); }

        void on_deliver(Context &ctx, const ProcessId &from, const WireMessage &msg) override;
        void on_dep_decide(Context &ctx, const InstanceTag &instance, Value v) override;

        const BlinkHost &host() const noexcept { return m_host; }

    private:
        BlinkHost m_host;
    };
}
