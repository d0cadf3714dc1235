#pragma once

// A scripted Context for driving one state machine by hand.

#include "flutter/simnet.hpp"

#include <string>
#include <utility>
#include <vector>

namespace flutter::testing
{
    struct SentMessage
    {
        ProcessId dst;
        WireMessage msg;
    };

    struct ScheduledTimer
    {
        SimTime at_local;
        TimerToken token;
        std::string label;
    };

    class FakeContext : public Context
    {
    public:
        FakeContext(ProcessId self, std::size_t n, std::size_t clients = 1) : m_self(std::move(self))
        {
            for (std::uint32_t i = 0; i < n; ++i)
            {
                m_servers.push_back(ProcessId::server(i));
            }
            for (std::uint32_t i = 0; i < clients; ++i)
            {
                m_clients.push_back(ProcessId::client(i));
            }
        }

        SimTime global{0};
        std::int64_t offset = 0;
        std::vector<SentMessage> sent;
        std::vector<ScheduledTimer> timers;
        std::vector<std::pair<InstanceTag, Value>> dep_proposals;
        Trace records;
        bool crashed = false;

        const ProcessId &self() const override { return m_self; }
        SimTime now() const override { return global; }
        SimTime local_time() const override { return SimTime{global.ticks + offset}; }
        const std::vector<ProcessId> &servers() const override { return m_servers; }
        const std::vector<ProcessId> &clients() const override { return m_clients; }
        void send(const ProcessId &dst, const WireMessage &msg) override { sent.push_back({dst, msg}); }
        void schedule_timer(SimTime at, TimerToken token, std::string label) override
        {
            timers.push_back({at, token, std::move(label)});
        }
        void dep_propose(const InstanceTag &instance, Value v) override { dep_proposals.emplace_back(instance, v); }
        void record(TraceEvent e) override
        {
            e.time = global;
            e.process = m_self;
            records.push_back(std::move(e));
        }
        void crash() override { crashed = true; }
        const Trace &trace() const override { return records; }
        AdversaryScratchpad &scratchpad() override { return m_pad; }

        template <typename T>
        std::vector<std::pair<ProcessId, T>> sent_of() const
        {
            std::vector<std::pair<ProcessId, T>> out;
            for (const auto &s : sent)
            {
                if (const auto *m = std::get_if<T>(&s.msg))
                {
                    out.emplace_back(s.dst, *m);
                }
            }
            return out;
        }

        std::vector<TraceEvent> records_of(TraceKind kind) const
        {
            std::vector<TraceEvent> out;
            for (const auto &e : records)
            {
                if (e.kind == kind)
                {
                    out.push_back(e);
                }
            }
            return out;
        }

        void clear()
        {
            sent.clear();
            timers.clear();
            dep_proposals.clear();
            records.clear();
        }

    private:
        ProcessId m_self;
        std::vector<ProcessId> m_servers;
        std::vector<ProcessId> m_clients;
        AdversaryScratchpad m_pad;
    };

    inline std::size_t count_kind(const Trace &trace, TraceKind kind)
    {
        std::size_t n = 0;
        for (const auto &e : trace)
        {
            n += e.kind == kind ? 1 : 0;
        }
        return n;
    }
}
