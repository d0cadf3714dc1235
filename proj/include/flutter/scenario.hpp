#pragma once

#include "flutter/adversary.hpp"
#include "flutter/checkers.hpp"
#include "flutter/flutter_client.hpp"
#include "flutter/simnet.hpp"
#include "flutter/trace.hpp"
#include "flutter/weakcon.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace flutter
{
    enum class Protocol : std::uint8_t
    {
        Flutter,
        Blink,
    };

    struct ScheduledBroadcast
    {
        SimTime at;
        Bytes message;
    };

    struct ClientSpec
    {
        std::string name;
        ClientParams params;
        std::vector<ScheduledBroadcast> broadcasts;
        std::optional<SimTime> crash_at;
        // Only client-side behaviors are accepted here.
        std::optional<Behavior> behavior;
        BehaviorParams behavior_params;
    };

    struct ServerFault
    {
        Behavior behavior = Behavior::Mute;
        BehaviorParams params;
    };

    // Standalone Blink inputs: values[i] is proposed by server i at `at`.
    struct ProposalSpec
    {
        std::uint64_t instance = 0;
        SimTime at;
        std::vector<Value> values;
    };

    struct Scenario
    {
        std::string name;
        Protocol protocol = Protocol::Flutter;
        std::size_t n = 6;
        std::size_t f = 1;
        SimTime delta{10};
        SimTime drift{0};
        SimTime epsilon{1};
        NetworkStrategy network;
        ClockModel clocks;
        DepPolicy dep;
        std::map<std::uint32_t, ServerFault> faults;
        std::vector<ClientSpec> clients;
        std::vector<ProposalSpec> proposals;
        std::int64_t beat_period = 0;
        std::size_t step_budget = 10'000'000;
        std::optional<SimTime> until;

        // Throws ConfigError.
        void validate() const;
        // ExactDelta, no drift, no faulty process, every client estimating delta exactly.
        bool good_case() const;
        std::set<ProcessId> correct_servers() const;
        std::set<ProcessId> correct_clients() const;
        ProcessId client_id(std::size_t index) const;
    };

    // Throws ConfigError on malformed input (including n < 5f+1).
    Scenario parse_scenario(const nlohmann::json &doc);
    Scenario load_scenario(const std::filesystem::path &path);

    struct BroadcastLatency
    {
        ProcessId client;
        Bytes message;
        SimTime broadcast_at;
        std::optional<SimTime> first_delivery;
        std::optional<SimTime> last_delivery;
        std::size_t delivered_by = 0;
    };

    struct Metrics
    {
        std::vector<BroadcastLatency> latencies;
        std::map<std::string, std::size_t> sends_by_type;
        std::uint64_t total_bits = 0;
        std::size_t instances = 0;
        // Suggest sends by correct servers.
        std::size_t max_suggest_per_instance = 0;
        std::size_t total_suggests = 0;
        std::size_t app_deliveries = 0;
    };

    // Bit accounting: a fixed header per send, plus the payload bytes for Message,
    // Observe and Decision.
    constexpr std::uint64_t header_bits = 64;
    std::uint64_t bits_of(const WireMessage &msg);

    Metrics compute_metrics(const Trace &trace, const Scenario &scenario);

    struct RunOutcome
    {
        Trace trace;
        RunResult result;
        CheckConfig config;
        std::vector<CheckReport> reports;
        Metrics metrics;

        bool ok() const noexcept { return no_failures(reports); }
    };

    CheckConfig check_config_for(const Scenario &scenario, bool quiescent);

    // Builds and runs the simulation, then every checker. Throws BudgetExceeded,
    // ProtocolBug or OracleViolation when the run itself breaks down.
    RunOutcome run_scenario(const Scenario &scenario);

    nlohmann::ordered_json to_json(const CheckReport &report);
    nlohmann::ordered_json to_json(const Metrics &metrics);
    nlohmann::ordered_json report_json(const Scenario &scenario, const RunOutcome &outcome);

    struct CampaignSpec
    {
        std::uint64_t first_seed = 0;
        std::uint64_t last_seed = 0;
        std::vector<Behavior> behaviors;
        unsigned parallel = 1;
    };

    struct PropertyTally
    {
        std::size_t pass = 0;
        std::size_t fail = 0;
        std::size_t not_applicable = 0;
    };

    struct CampaignFailure
    {
        Behavior behavior;
        std::uint64_t seed = 0;
        std::string property;
        std::string detail;
    };

    struct BehaviorSummary
    {
        std::size_t runs = 0;
        std::map<std::string, PropertyTally> properties;
        std::size_t instances = 0;
        std::size_t suggests = 0;
        std::size_t max_suggest_per_instance = 0;
        std::size_t app_deliveries = 0;
    };

    struct CampaignSummary
    {
        std::size_t n = 0;
        std::map<Behavior, BehaviorSummary> behaviors;
        std::vector<CampaignFailure> failures;

        bool ok() const noexcept { return failures.empty(); }
    };

    // The base scenario with one behavior injected and everything the seed controls
    // drawn: random delays, dep policy, clock offsets, broadcast jitter and behavior
    // parameters. Server behaviors take over f servers; client behaviors add one client.
    Scenario campaign_variant(const Scenario &base, Behavior behavior, std::uint64_t seed);

    // Runs seeds x behaviors on up to `parallel` threads. The summary does not depend
    // on scheduling. Every run also checks Suggest volume per instance against n^2.
    CampaignSummary run_campaign(const Scenario &base, const CampaignSpec &spec);

    nlohmann::ordered_json to_json(const CampaignSummary &summary);
}
