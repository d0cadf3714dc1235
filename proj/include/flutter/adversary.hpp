#pragma once

#include "flutter/flutter_client.hpp"
#include "flutter/simnet.hpp"
#include "flutter/types.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flutter
{
    enum class Behavior : std::uint8_t
    {
        Mute,
        Equivocator,
        TimeLiar,
        ObserveForger,
        StaleRelay,
        PartialDisseminator,
    };

    struct BehaviorInfo
    {
        Behavior behavior;
        std::string_view id;
        // Server behaviors replace a server; client behaviors replace a client.
        bool client_side;
        std::string_view target;
    };

    const std::vector<BehaviorInfo> &builtin_behaviors();
    const BehaviorInfo &behavior_info(Behavior b);
    std::optional<Behavior> parse_behavior(std::string_view id);

    // A forged Observe: at global time `at`, claim that client `client` issued
    // `message` with bet `at + bet_offset`.
    struct Forgery
    {
        SimTime at;
        std::uint32_t client = 0;
        Bytes message;
        std::int64_t bet_offset = 30;
    };

    struct BehaviorParams
    {
        // Equivocator: servers with index < split receive True, the rest False.
        // Defaults to n/2.
        std::optional<std::uint32_t> split;
        // TimeLiar: added to every announced time.
        std::int64_t time_skew = 1000;
        // ObserveForger
        std::vector<Forgery> forgeries;
        // PartialDisseminator: indices of the servers the Message reaches.
        std::vector<std::uint32_t> reach{0};
    };

    // Wraps the correct state machine `inner` (or discards it, for Mute) into a
    // Byzantine server. The wrapper tampers with what `inner` sends and may send
    // on its own, always under its authenticated identity.
    std::unique_ptr<Process> make_byzantine_server(Behavior behavior, const BehaviorParams &params,
                                                   std::unique_ptr<Process> inner);

    // Runs `fn` on the correct state machine wrapped by a Byzantine server, behind
    // the wrapper's tampering context (scenario inputs such as Blink proposals).
    // A Mute server swallows the input.
    void drive_inner(Process &byzantine, Context &ctx, const std::function<void(Process &, Context &)> &fn);

    // A client that computes a bet like a correct client but sends its Message to
    // the servers in params.reach only, then crashes.
    class PartialDisseminator : public Process
    {
    public:
        PartialDisseminator(ClientParams client, std::vector<std::uint32_t> reach)
            : m_client(client), m_reach(std::move(reach))
        {
        }

        void broadcast(Context &ctx, const Bytes &message);
        void on_deliver(Context &, const ProcessId &, const WireMessage &) override {}

    private:
        ClientParams m_client;
        std::vector<std::uint32_t> m_reach;
    };
}
