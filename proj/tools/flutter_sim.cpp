// flutter-sim: run scenario files and seeded property campaigns.

#include "flutter/scenario.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace flutter;

namespace
{
    fs::path default_out_dir()
    {
        const char *env = std::getenv("FLUTTER_SIM_OUT");
        return env != nullptr && *env != '\0' ? fs::path(env) : fs::path(".");
    }

    void write_file(const fs::path &path, const std::string &text)
    {
        if (path.has_parent_path())
        {
            fs::create_directories(path.parent_path());
        }
        std::ofstream out(path, std::ios::binary);
        if (!out)
        {
            throw ConfigError("cannot write " + path.string());
        }
        out << text;
    }

    std::pair<std::uint64_t, std::uint64_t> parse_seeds(const std::string &s)
    {
        const auto dots = s.find("..");
        try
        {
            if (dots == std::string::npos)
            {
                const auto v = std::stoull(s);
                return {v, v};
            }
            return {std::stoull(s.substr(0, dots)), std::stoull(s.substr(dots + 2))};
        }
        catch (const std::exception &)
        {
            throw ConfigError("seed range must look like A..B, got '" + s + "'");
        }
    }

    std::vector<Behavior> parse_behaviors(const std::string &list)
    {
        std::vector<Behavior> out;
        if (list == "all")
        {
            for (const auto &info : builtin_behaviors())
            {
                out.push_back(info.behavior);
            }
            return out;
        }
        std::size_t start = 0;
        while (start <= list.size())
        {
            const auto comma = std::min(list.find(',', start), list.size());
            const auto id = list.substr(start, comma - start);
            auto b = parse_behavior(id);
            if (!b)
            {
                throw ConfigError("unknown behavior '" + id + "'");
            }
            out.push_back(*b);
            start = comma + 1;
        }
        return out;
    }

    int cmd_run(const std::string &scenario_path, std::string trace_path, std::string report_path)
    {
        const auto scenario = load_scenario(scenario_path);
        const auto outcome = run_scenario(scenario);
        const auto stem = fs::path(scenario_path).stem().string();
        if (trace_path.empty())
        {
            trace_path = (default_out_dir() / (stem + ".trace.jsonl")).string();
        }
        if (report_path.empty())
        {
            report_path = (default_out_dir() / (stem + ".report.json")).string();
        }
        std::ostringstream trace;
        write_jsonl(trace, outcome.trace);
        write_file(trace_path, trace.str());
        write_file(report_path, report_json(scenario, outcome).dump(2) + "\n");

        for (const auto &r : outcome.reports)
        {
            std::cout << to_string(r.verdict) << "  " << r.property;
            if (!r.detail.empty())
            {
                std::cout << "  (" << r.detail << ")";
            }
            std::cout << "\n";
        }
        for (const auto &l : outcome.metrics.latencies)
        {
            std::cout << "latency " << render_process(l.client) << " " << quote_bytes(l.message) << ": "
                      << (l.last_delivery ? std::to_string((*l.last_delivery - l.broadcast_at).ticks) : "undelivered")
                      << "\n";
        }
        std::cout << "trace  " << trace_path << "\nreport " << report_path << "\n";
        return outcome.ok() ? 0 : 1;
    }

    int cmd_campaign(const std::string &scenario_path, const std::string &seeds, const std::string &behaviors,
                     unsigned parallel, std::string summary_path)
    {
        const auto base = load_scenario(scenario_path);
        CampaignSpec spec;
        std::tie(spec.first_seed, spec.last_seed) = parse_seeds(seeds);
        spec.behaviors = parse_behaviors(behaviors);
        spec.parallel = parallel;
        const auto summary = run_campaign(base, spec);
        const auto j = to_json(summary);
        if (summary_path.empty())
        {
            summary_path = (default_out_dir() / (fs::path(scenario_path).stem().string() + ".campaign.json")).string();
        }
        write_file(summary_path, j.dump(2) + "\n");

        std::cout << "behavior               runs   fails  max-suggest/instance (n^2=" << base.n * base.n << ")\n";
        for (const auto &[behavior, b] : summary.behaviors)
        {
            std::size_t fails = 0;
            for (const auto &[name, t] : b.properties)
            {
                fails += t.fail;
            }
            std::cout << std::left << std::setw(22) << behavior_info(behavior).id << " " << std::setw(6) << b.runs << " "
                      << std::setw(6) << fails << " " << b.max_suggest_per_instance << "\n";
        }
        for (std::size_t i = 0; i < summary.failures.size() && i < 20; ++i)
        {
            const auto &f = summary.failures[i];
            std::cout << "FAIL " << behavior_info(f.behavior).id << " seed " << f.seed << " " << f.property << ": "
                      << f.detail << "\n";
        }
        std::cout << "summary " << summary_path << "\n";
        return summary.ok() ? 0 : 1;
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"Blink/Flutter discrete-event simulator"};
    app.require_subcommand(1);

    std::string scenario;
    std::string trace_path;
    std::string report_path;
    auto *run = app.add_subcommand("run", "run one scenario, write its trace and check report");
    run->add_option("scenario", scenario, "scenario JSON file")->required()->check(CLI::ExistingFile);
    run->add_option("--trace", trace_path, "JSONL trace output");
    run->add_option("--report", report_path, "JSON report output");

    std::string seeds;
    std::string behaviors = "all";
    unsigned parallel = 1;
    std::string summary_path;
    auto *campaign = app.add_subcommand("campaign", "run seeds x behaviors and aggregate checker verdicts");
    campaign->add_option("scenario", scenario, "base scenario JSON file")->required()->check(CLI::ExistingFile);
    campaign->add_option("--seeds", seeds, "inclusive seed range A..B")->required();
    campaign->add_option("--behaviors", behaviors, "comma-separated behavior ids, or 'all'");
    campaign->add_option("--parallel", parallel, "worker threads")->check(CLI::PositiveNumber);
    campaign->add_option("--summary", summary_path, "JSON summary output");

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (*run)
        {
            return cmd_run(scenario, trace_path, report_path);
        }
        return cmd_campaign(scenario, seeds, behaviors, parallel, summary_path);
    }
    catch (const ConfigError &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    catch (const BudgetExceeded &e)
    {
        std::cerr << "step budget exceeded: " << e.what() << "\n";
        return 3;
    }
    catch (const std::exception &e)
    {
        std::cerr << "run aborted: " << e.what() << "\n";
        return 4;
    }
}
