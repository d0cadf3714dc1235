#include "flutter/scenario.hpp"

#include "flutter/blink.hpp"
#include "flutter/flutter_server.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <numeric>
#include <random>
#include <thread>

namespace flutter
{
    namespace
    {
        using json = nlohmann::json;

        SimTime ticks(const json &j, const char *key, SimTime fallback)
        {
            return j.contains(key) ? SimTime{j.at(key).get<std::int64_t>()} : fallback;
        }

        ProcessId parse_label(const std::string &s)
        {
            try
            {
                return parse_process_label(s);
            }
            catch (const TraceParseError &e)
            {
                throw ConfigError("bad process label '" + s + "'");
            }
        }

        NetworkStrategy parse_network(const json &j, SimTime delta)
        {
            NetworkStrategy net;
            net.delta = delta;
            const auto mode = j.value("mode", std::string("exact"));
            if (mode == "exact")
            {
                net.mode = NetworkMode::ExactDelta;
            }
            else if (mode == "random")
            {
                net.mode = NetworkMode::SeededRandom;
            }
            else if (mode == "scripted")
            {
                net.mode = NetworkMode::Scripted;
            }
            else
            {
                throw ConfigError("unknown network mode '" + mode + "'");
            }
            net.seed = j.value("seed", std::uint64_t{0});
            if (j.contains("script"))
            {
                for (const auto &[key, delays] : j.at("script").items())
                {
                    const auto arrow = key.find("->");
                    if (arrow == std::string::npos)
                    {
                        throw ConfigError("script key '" + key + "' is not of the form src->dst");
                    }
                    net.script[{parse_label(key.substr(0, arrow)), parse_label(key.substr(arrow + 2))}] =
                        delays.get<std::vector<std::int64_t>>();
                }
            }
            return net;
        }

        DepPolicy parse_dep(const json &j, SimTime delta)
        {
            DepPolicy dep;
            dep.latency = delta;
            dep.budget = SimTime{3 * delta.ticks};
            const auto policy = j.value("policy", std::string("first_proposal"));
            if (policy == "first_proposal")
            {
                dep.mode = DepMode::FirstProposal;
            }
            else if (policy == "adversarial_value")
            {
                dep.mode = DepMode::AdversarialValue;
            }
            else if (policy == "adversarial_timing")
            {
                dep.mode = DepMode::AdversarialTiming;
            }
            else
            {
                throw ConfigError("unknown dep policy '" + policy + "'");
            }
            dep.latency = ticks(j, "latency", dep.latency);
            dep.budget = ticks(j, "budget", dep.budget);
            if (j.contains("extra_delays"))
            {
                for (const auto &[key, extra] : j.at("extra_delays").items())
                {
                    dep.extra_delay[parse_label(key).index] = extra.get<std::int64_t>();
                }
            }
            if (j.contains("seed"))
            {
                dep.timing_seed = j.at("seed").get<std::uint64_t>();
            }
            if (j.contains("forced"))
            {
                dep.forced = to_value(j.at("forced").get<bool>());
            }
            return dep;
        }

        Behavior parse_behavior_id(const std::string &id)
        {
            auto b = parse_behavior(id);
            if (!b)
            {
                throw ConfigError("unknown behavior '" + id + "'");
            }
            return *b;
        }

        BehaviorParams parse_behavior_params(const json &j)
        {
            BehaviorParams p;
            if (j.contains("split"))
            {
                p.split = j.at("split").get<std::uint32_t>();
            }
            p.time_skew = j.value("time_skew", p.time_skew);
            if (j.contains("forgeries"))
            {
                for (const auto &fj : j.at("forgeries"))
                {
                    Forgery forgery;
                    forgery.at = SimTime{fj.at("at").get<std::int64_t>()};
                    forgery.client = fj.value("client", std::uint32_t{0});
                    forgery.message = fj.at("message").get<std::string>();
                    forgery.bet_offset = fj.value("bet_offset", forgery.bet_offset);
                    p.forgeries.push_back(std::move(forgery));
                }
            }
            if (j.contains("reach"))
            {
                p.reach = j.at("reach").get<std::vector<std::uint32_t>>();
            }
            return p;
        }

        Scenario parse(const json &doc)
        {
            Scenario s;
            s.name = doc.value("name", std::string("scenario"));
            const auto protocol = doc.value("protocol", std::string("flutter"));
            if (protocol == "flutter")
            {
                s.protocol = Protocol::Flutter;
            }
            else if (protocol == "blink")
            {
                s.protocol = Protocol::Blink;
            }
            else
            {
                throw ConfigError("unknown protocol '" + protocol + "'");
            }
            s.n = doc.at("n").get<std::size_t>();
            s.f = doc.at("f").get<std::size_t>();
            s.delta = ticks(doc, "delta", s.delta);
            s.drift = ticks(doc, "drift", s.drift);
            s.epsilon = ticks(doc, "epsilon", s.epsilon);
            s.beat_period = doc.value("beat_period", s.beat_period);
            s.network = parse_network(doc.value("network", json::object()), s.delta);
            s.clocks.max_drift = s.drift;
            if (doc.contains("clock_offsets"))
            {
                for (const auto &[key, off] : doc.at("clock_offsets").items())
                {
                    s.clocks.offsets[parse_label(key)] = off.get<std::int64_t>();
                }
            }
            s.dep = parse_dep(doc.value("dep", json::object()), s.delta);
            if (doc.contains("servers"))
            {
                for (const auto &[key, sj] : doc.at("servers").items())
                {
                    const auto id = parse_label(key);
                    if (!id.is_server())
                    {
                        throw ConfigError("'" + key + "' is not a server");
                    }
                    ServerFault fault;
                    fault.behavior = parse_behavior_id(sj.at("behavior").get<std::string>());
                    fault.params = parse_behavior_params(sj.value("params", json::object()));
                    s.faults[id.index] = std::move(fault);
                }
            }
            if (doc.contains("clients"))
            {
                for (const auto &cj : doc.at("clients"))
                {
                    ClientSpec c;
                    c.name = cj.value("name", "c" + std::to_string(s.clients.size()));
                    c.params.delta_estimate = ticks(cj, "delta_estimate", s.delta);
                    c.params.epsilon = ticks(cj, "epsilon", s.epsilon);
                    for (const auto &bj : cj.value("broadcasts", json::array()))
                    {
                        c.broadcasts.push_back({SimTime{bj.at("time").get<std::int64_t>()}, bj.at("message").get<std::string>()});
                    }
                    if (cj.contains("crash_at"))
                    {
                        c.crash_at = SimTime{cj.at("crash_at").get<std::int64_t>()};
                    }
                    if (cj.contains("behavior"))
                    {
                        c.behavior = parse_behavior_id(cj.at("behavior").get<std::string>());
                    }
                    c.behavior_params = parse_behavior_params(cj.value("params", json::object()));
                    s.clients.push_back(std::move(c));
                }
            }
            for (const auto &pj : doc.value("proposals", json::array()))
            {
                ProposalSpec p;
                p.instance = pj.at("instance").get<std::uint64_t>();
                p.at = SimTime{pj.at("time").get<std::int64_t>()};
                for (const auto &v : pj.at("values"))
                {
                    p.values.push_back(to_value(v.get<bool>()));
                }
                s.proposals.push_back(std::move(p));
            }
            s.step_budget = doc.value("step_budget", s.step_budget);
            if (doc.contains("until"))
            {
                s.until = SimTime{doc.at("until").get<std::int64_t>()};
            }
            return s;
        }

        std::unique_ptr<Process> correct_server(const Scenario &s)
        {
            if (s.protocol == Protocol::Blink)
            {
                return std::make_unique<BlinkServer>(s.f, s.n);
            }
            FlutterServerOptions opts;
            opts.beat_period = s.beat_period;
            // Lies about time legitimately push the lock time past local time.
            opts.check_lock_time_bound =
                s.drift.ticks == 0 && std::none_of(s.faults.begin(), s.faults.end(), [](const auto &kv) {
                    return kv.second.behavior == Behavior::TimeLiar || kv.second.behavior == Behavior::StaleRelay;
                });
            return std::make_unique<FlutterServer>(s.n, s.f, opts);
        }

        std::int64_t uniform(std::mt19937_64 &rng, std::int64_t lo, std::int64_t hi)
        {
            return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
        }

        json witness_json(const Trace &trace)
        {
            auto out = json::array();
            for (const auto &e : trace)
            {
                out.push_back(json::parse(to_jsonl_line(e)));
            }
            return out;
        }
    }

    void Scenario::validate() const
    {
        if (n < quorum::min_servers(f))
        {
            throw ConfigError("n=" + std::to_string(n) + " is below 5f+1=" + std::to_string(quorum::min_servers(f)));
        }
        if (n == 0)
        {
            throw ConfigError("at least one server is required");
        }
        if (faults.size() > f)
        {
            throw ConfigError("more than f faulty servers");
        }
        for (const auto &[index, fault] : faults)
        {
            if (index >= n)
            {
                throw ConfigError("faulty server s" + std::to_string(index) + " does not exist");
            }
            if (behavior_info(fault.behavior).client_side)
            {
                throw ConfigError(std::string("behavior '") + std::string(behavior_info(fault.behavior).id) +
                                  "' cannot be assigned to a server");
            }
        }
        std::set<std::string> names;
        for (const auto &c : clients)
        {
            c.params.validate();
            if (!names.insert(c.name).second)
            {
                throw ConfigError("duplicate client name '" + c.name + "'");
            }
            if (c.behavior && !behavior_info(*c.behavior).client_side)
            {
                throw ConfigError(std::string("behavior '") + std::string(behavior_info(*c.behavior).id) +
                                  "' cannot be assigned to a client");
            }
            std::set<Bytes> messages;
            for (const auto &b : c.broadcasts)
            {
                if (!c.behavior && !messages.insert(b.message).second)
                {
                    throw ConfigError("client '" + c.name + "' broadcasts " + quote_bytes(b.message) + " twice");
                }
            }
        }
        for (const auto &p : proposals)
        {
            if (p.values.size() != n)
            {
                throw ConfigError("proposal for instance " + std::to_string(p.instance) + " must list n values");
            }
        }
        if (protocol == Protocol::Blink && !clients.empty())
        {
            throw ConfigError("standalone blink scenarios take proposals, not clients");
        }
        if (protocol == Protocol::Flutter && !proposals.empty())
        {
            throw ConfigError("flutter scenarios take client broadcasts, not proposals");
        }
        if (epsilon.ticks < 1)
        {
            throw ConfigError("bet margin must be at least one tick");
        }
        for (const auto &[p, off] : clocks.offsets)
        {
            if (p.is_server() ? p.index >= n : p.index >= clients.size())
            {
                throw ConfigError("clock offset for unknown process " + label(p));
            }
        }
        network.validate();
        clocks.validate();
        dep.validate();
    }

    bool Scenario::good_case() const
    {
        return network.mode == NetworkMode::ExactDelta && drift.ticks == 0 && faults.empty() &&
               std::all_of(clients.begin(), clients.end(), [&](const ClientSpec &c) {
                   return !c.behavior && !c.crash_at && c.params.delta_estimate == delta;
               });
    }

    std::set<ProcessId> Scenario::correct_servers() const
    {
        std::set<ProcessId> out;
        for (std::uint32_t i = 0; i < n; ++i)
        {
            if (!faults.contains(i))
            {
                out.insert(ProcessId::server(i));
            }
        }
        return out;
    }

    std::set<ProcessId> Scenario::correct_clients() const
    {
        std::set<ProcessId> out;
        for (std::size_t i = 0; i < clients.size(); ++i)
        {
            if (!clients[i].behavior && !clients[i].crash_at)
            {
                out.insert(client_id(i));
            }
        }
        return out;
    }

    ProcessId Scenario::client_id(std::size_t index) const
    {
        return ProcessId::client(static_cast<std::uint32_t>(index), clients.at(index).name);
    }

    Scenario parse_scenario(const nlohmann::json &doc)
    {
        Scenario s;
        try
        {
            s = parse(doc);
        }
        catch (const nlohmann::json::exception &e)
        {
            throw ConfigError(std::string("malformed scenario: ") + e.what());
        }
        s.validate();
        return s;
    }

    Scenario load_scenario(const std::filesystem::path &path)
    {
        std::ifstream in(path);
        if (!in)
        {
            throw ConfigError("cannot open scenario " + path.string());
        }
        json doc;
        try
        {
            doc = json::parse(in);
        }
        catch (const json::parse_error &e)
        {
            throw ConfigError(path.string() + ": " + e.what());
        }
        auto s = parse_scenario(doc);
        if (!doc.contains("name"))
        {
            s.name = path.stem().string();
        }
        return s;
    }

    std::uint64_t bits_of(const WireMessage &msg)
    {
        return std::visit(
            [](const auto &m) -> std::uint64_t {
                using T = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<T, wire::Message> || std::is_same_v<T, wire::Decision>)
                {
                    return header_bits + 8 * m.message.size();
                }
                else if constexpr (std::is_same_v<T, wire::Observe>)
                {
                    return header_bits + 8 * m.tuple.message.size();
                }
                else
                {
                    return header_bits;
                }
            },
            msg);
    }

    Metrics compute_metrics(const Trace &trace, const Scenario &scenario)
    {
        Metrics m;
        const auto correct = scenario.correct_servers();
        std::map<std::pair<ProcessId, Bytes>, std::size_t> by_key;
        std::set<InstanceTag> instances;
        std::map<InstanceTag, std::size_t> suggests;
        for (const auto &e : trace)
        {
            switch (e.kind)
            {
            case TraceKind::Send:
                ++m.sends_by_type[type_name(*e.message)];
                m.total_bits += bits_of(*e.message);
                // Byzantine servers may send any number of suggestions; only correct volume is bounded.
                if (const auto *s = std::get_if<wire::Suggest>(&*e.message); s != nullptr && correct.contains(e.process))
                {
                    ++suggests[s->instance];
                    ++m.total_suggests;
                }
                break;
            case TraceKind::Propose:
                instances.insert(*e.instance);
                break;
            case TraceKind::Broadcast:
                by_key.try_emplace({e.process, e.bytes}, m.latencies.size());
                m.latencies.push_back({e.process, e.bytes, e.time, std::nullopt, std::nullopt, 0});
                break;
            case TraceKind::AppDeliver:
                if (correct.contains(e.process))
                {
                    ++m.app_deliveries;
                    if (auto it = by_key.find({*e.peer, e.bytes}); it != by_key.end())
                    {
                        auto &l = m.latencies[it->second];
                        l.first_delivery = l.first_delivery ? std::min(*l.first_delivery, e.time) : e.time;
                        l.last_delivery = l.last_delivery ? std::max(*l.last_delivery, e.time) : e.time;
                        ++l.delivered_by;
                    }
                }
                break;
            default:
                break;
            }
        }
        m.instances = instances.size();
        for (const auto &[tag, count] : suggests)
        {
            m.max_suggest_per_instance = std::max(m.max_suggest_per_instance, count);
        }
        return m;
    }

    CheckConfig check_config_for(const Scenario &s, bool quiescent)
    {
        CheckConfig cfg;
        cfg.n = s.n;
        cfg.f = s.f;
        cfg.delta = s.delta;
        cfg.correct_servers = s.correct_servers();
        cfg.correct_clients = s.correct_clients();
        for (std::size_t i = 0; i < s.clients.size(); ++i)
        {
            cfg.client_delta_estimate[s.client_id(i)] = s.clients[i].params.delta_estimate;
            cfg.client_epsilon[s.client_id(i)] = s.clients[i].params.epsilon;
        }
        cfg.quiescent = quiescent;
        cfg.good_case = s.good_case();
        return cfg;
    }

    RunOutcome run_scenario(const Scenario &s)
    {
        s.validate();
        Simulator sim(s.network, s.clocks);

        for (std::uint32_t i = 0; i < s.n; ++i)
        {
            const auto id = ProcessId::server(i);
            if (auto fault = s.faults.find(i); fault != s.faults.end())
            {
                sim.add_process(id, make_byzantine_server(fault->second.behavior, fault->second.params, correct_server(s)),
                                false);
            }
            else
            {
                sim.add_process(id, correct_server(s), true);
            }
        }
        for (std::size_t i = 0; i < s.clients.size(); ++i)
        {
            const auto &c = s.clients[i];
            const auto id = s.client_id(i);
            if (c.behavior)
            {
                sim.add_process(id, std::make_unique<PartialDisseminator>(c.params, c.behavior_params.reach), false);
            }
            else
            {
                sim.add_process(id, std::make_unique<FlutterClient>(s.f, c.params), !c.crash_at.has_value());
            }
        }

        const auto correct = s.correct_servers();
        sim.set_dep_oracle(std::make_unique<DepOracle>(s.dep, std::vector<ProcessId>(correct.begin(), correct.end())));

        // Byzantine inputs are enqueued first so that they win ties (rushing adversary).
        for (const bool byzantine_pass : {true, false})
        {
            for (const auto &p : s.proposals)
            {
                for (std::uint32_t i = 0; i < s.n; ++i)
                {
                    const auto id = ProcessId::server(i);
                    if (correct.contains(id) == byzantine_pass)
                    {
                        continue;
                    }
                    const auto tag = InstanceTag::numbered(p.instance);
                    const Value v = p.values[i];
                    auto propose = [tag, v](Process &proc, Context &ctx) {
                        dynamic_cast<BlinkServer &>(proc).propose(ctx, tag, v);
                    };
                    if (byzantine_pass)
                    {
                        sim.call_at(id, p.at, [propose](Process &proc, Context &ctx) { drive_inner(proc, ctx, propose); });
                    }
                    else
                    {
                        sim.call_at(id, p.at, propose);
                    }
                }
            }
        }

        for (std::size_t i = 0; i < s.clients.size(); ++i)
        {
            const auto id = s.client_id(i);
            for (const auto &b : s.clients[i].broadcasts)
            {
                sim.call_at(id, b.at, [message = b.message](Process &proc, Context &ctx) {
                    if (auto *client = dynamic_cast<FlutterClient *>(&proc))
                    {
                        client->broadcast(ctx, message);
                    }
                    else
                    {
                        dynamic_cast<PartialDisseminator &>(proc).broadcast(ctx, message);
                    }
                });
            }
            if (const auto crash = s.clients[i].crash_at)
            {
                sim.call_at(id, *crash, [](Process &, Context &ctx) { ctx.crash(); });
            }
        }

        RunOutcome out;
        out.result = sim.run(s.until, s.step_budget);
        out.trace = sim.take_trace();
        out.config = check_config_for(s, out.result.quiescent);
        out.reports = check_run(out.trace, out.config);
        out.metrics = compute_metrics(out.trace, s);
        return out;
    }

    nlohmann::ordered_json to_json(const CheckReport &r)
    {
        nlohmann::ordered_json j;
        j["property"] = r.property;
        j["verdict"] = to_string(r.verdict);
        if (!r.detail.empty())
        {
            j["detail"] = r.detail;
        }
        if (r.verdict == Verdict::Fail)
        {
            j["witness"] = witness_json(r.witness);
        }
        return j;
    }

    nlohmann::ordered_json to_json(const Metrics &m)
    {
        nlohmann::ordered_json j;
        auto latencies = nlohmann::ordered_json::array();
        for (const auto &l : m.latencies)
        {
            nlohmann::ordered_json e;
            e["client"] = render_process(l.client);
            e["message"] = l.message;
            e["broadcast_at"] = l.broadcast_at.ticks;
            e["delivered_by"] = l.delivered_by;
            if (l.last_delivery)
            {
                e["first_delivery"] = l.first_delivery->ticks;
                e["last_delivery"] = l.last_delivery->ticks;
                e["latency"] = (*l.last_delivery - l.broadcast_at).ticks;
            }
            else
            {
                e["latency"] = nullptr;
            }
            latencies.push_back(std::move(e));
        }
        j["latencies"] = std::move(latencies);
        nlohmann::ordered_json sends;
        for (const auto &[type, count] : m.sends_by_type)
        {
            sends[type] = count;
        }
        j["sends_by_type"] = std::move(sends);
        j["total_bits"] = m.total_bits;
        j["instances"] = m.instances;
        j["suggests"] = m.total_suggests;
        j["max_suggest_per_instance"] = m.max_suggest_per_instance;
        j["app_deliveries"] = m.app_deliveries;
        return j;
    }

    nlohmann::ordered_json report_json(const Scenario &s, const RunOutcome &o)
    {
        nlohmann::ordered_json j;
        j["scenario"] = s.name;
        j["ok"] = o.ok();
        j["quiescent"] = o.result.quiescent;
        j["end_time"] = o.result.end_time.ticks;
        j["steps"] = o.result.steps;
        auto reports = nlohmann::ordered_json::array();
        for (const auto &r : o.reports)
        {
            reports.push_back(to_json(r));
        }
        j["reports"] = std::move(reports);
        j["metrics"] = to_json(o.metrics);
        return j;
    }

    Scenario campaign_variant(const Scenario &base, Behavior behavior, std::uint64_t seed)
    {
        Scenario s = base;
        s.name = base.name + "/" + std::string(behavior_info(behavior).id) + "/" + std::to_string(seed);
        std::seed_seq sseq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                           static_cast<std::uint32_t>(behavior)};
        std::mt19937_64 rng(sseq);
        const auto d = s.delta.ticks;

        s.network.mode = NetworkMode::SeededRandom;
        s.network.seed = rng();
        s.network.script.clear();

        s.dep.mode = seed % 2 == 0 ? DepMode::AdversarialValue : DepMode::AdversarialTiming;
        s.dep.extra_delay.clear();
        s.dep.timing_seed = rng();
        s.dep.forced.reset();

        s.clocks.offsets.clear();
        if (s.drift.ticks > 0)
        {
            for (std::uint32_t i = 0; i < s.n; ++i)
            {
                s.clocks.offsets[ProcessId::server(i)] = uniform(rng, -s.drift.ticks, s.drift.ticks);
            }
        }
        for (auto &c : s.clients)
        {
            for (auto &b : c.broadcasts)
            {
                b.at = b.at + SimTime{uniform(rng, 0, 2 * d)};
            }
        }

        const auto &info = behavior_info(behavior);
        if (info.client_side)
        {
            ClientSpec c;
            c.name = "byz";
            c.params.delta_estimate = s.delta;
            c.params.epsilon = s.epsilon;
            c.behavior = behavior;
            c.broadcasts.push_back({SimTime{uniform(rng, 0, 4 * d)}, "partial"});
            std::vector<std::uint32_t> servers(s.n);
            std::iota(servers.begin(), servers.end(), 0U);
            std::shuffle(servers.begin(), servers.end(), rng);
            servers.resize(static_cast<std::size_t>(uniform(rng, 1, static_cast<std::int64_t>(s.n) - 1)));
            std::sort(servers.begin(), servers.end());
            c.behavior_params.reach = servers;
            if (s.drift.ticks > 0)
            {
                s.clocks.offsets[ProcessId::client(static_cast<std::uint32_t>(s.clients.size()), c.name)] =
                    uniform(rng, -s.drift.ticks, s.drift.ticks);
            }
            s.clients.push_back(std::move(c));
            return s;
        }

        std::vector<std::uint32_t> servers(s.n);
        std::iota(servers.begin(), servers.end(), 0U);
        std::shuffle(servers.begin(), servers.end(), rng);
        s.faults.clear();
        for (std::size_t k = 0; k < s.f; ++k)
        {
            ServerFault fault;
            fault.behavior = behavior;
            switch (behavior)
            {
            case Behavior::Equivocator:
                fault.params.split = static_cast<std::uint32_t>(uniform(rng, 0, static_cast<std::int64_t>(s.n)));
                break;
            case Behavior::TimeLiar:
                fault.params.time_skew = uniform(rng, -5 * d, 20 * d);
                break;
            case Behavior::ObserveForger:
                if (!s.clients.empty())
                {
                    for (int j = 0; j < 2; ++j)
                    {
                        Forgery forgery;
                        forgery.at = SimTime{uniform(rng, 0, 6 * d)};
                        forgery.client = static_cast<std::uint32_t>(
                            uniform(rng, 0, static_cast<std::int64_t>(s.clients.size()) - 1));
                        forgery.message = "forged-" + std::to_string(k) + "-" + std::to_string(j);
                        forgery.bet_offset = uniform(rng, 1, 4 * d);
                        fault.params.forgeries.push_back(std::move(forgery));
                    }
                }
                break;
            default:
                break;
            }
            s.faults[servers[k]] = std::move(fault);
        }
        return s;
    }

    CampaignSummary run_campaign(const Scenario &base, const CampaignSpec &spec)
    {
        base.validate();
        if (spec.last_seed < spec.first_seed)
        {
            throw ConfigError("empty seed range");
        }
        struct Job
        {
            Behavior behavior;
            std::uint64_t seed;
        };
        struct JobResult
        {
            std::vector<CheckReport> reports;
            Metrics metrics;
            std::optional<std::string> error;
        };

        std::vector<Job> jobs;
        for (auto b : spec.behaviors)
        {
            for (std::uint64_t seed = spec.first_seed;; ++seed)
            {
                jobs.push_back({b, seed});
                if (seed == spec.last_seed)
                {
                    break;
                }
            }
        }

        std::vector<JobResult> results(jobs.size());
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i = next++; i < jobs.size(); i = next++)
            {
                auto &r = results[i];
                try
                {
                    const auto s = campaign_variant(base, jobs[i].behavior, jobs[i].seed);
                    auto outcome = run_scenario(s);
                    r.reports = std::move(outcome.reports);
                    r.metrics = std::move(outcome.metrics);
                }
                catch (const std::exception &e)
                {
                    r.error = e.what();
                }
            }
        };
        const unsigned threads = std::max(1U, std::min<unsigned>(spec.parallel, static_cast<unsigned>(jobs.size())));
        if (threads == 1)
        {
            worker();
        }
        else
        {
            std::vector<std::jthread> pool;
            for (unsigned t = 0; t < threads; ++t)
            {
                pool.emplace_back(worker);
            }
        }

        CampaignSummary summary;
        summary.n = base.n;
        const std::size_t bound = base.n * base.n;
        for (std::size_t i = 0; i < jobs.size(); ++i)
        {
            const auto &job = jobs[i];
            const auto &r = results[i];
            auto &b = summary.behaviors[job.behavior];
            ++b.runs;
            if (r.error)
            {
                ++b.properties["Run"].fail;
                summary.failures.push_back({job.behavior, job.seed, "Run", *r.error});
                continue;
            }
            ++b.properties["Run"].pass;
            for (const auto &rep : r.reports)
            {
                auto &t = b.properties[rep.property];
                switch (rep.verdict)
                {
                case Verdict::Pass:
                    ++t.pass;
                    break;
                case Verdict::NotApplicable:
                    ++t.not_applicable;
                    break;
                case Verdict::Fail:
                    ++t.fail;
                    summary.failures.push_back({job.behavior, job.seed, rep.property, rep.detail});
                    break;
                }
            }
            auto &complexity = b.properties["SuggestComplexity"];
            if (r.metrics.max_suggest_per_instance <= bound)
            {
                ++complexity.pass;
            }
            else
            {
                ++complexity.fail;
                summary.failures.push_back({job.behavior, job.seed, "SuggestComplexity",
                                            std::to_string(r.metrics.max_suggest_per_instance) + " Suggest sends in one instance"});
            }
            b.instances += r.metrics.instances;
            b.suggests += r.metrics.total_suggests;
            b.max_suggest_per_instance = std::max(b.max_suggest_per_instance, r.metrics.max_suggest_per_instance);
            b.app_deliveries += r.metrics.app_deliveries;
        }
        return summary;
    }

    nlohmann::ordered_json to_json(const CampaignSummary &summary)
    {
        nlohmann::ordered_json j;
        j["ok"] = summary.ok();
        j["n"] = summary.n;
        nlohmann::ordered_json behaviors;
        for (const auto &[behavior, b] : summary.behaviors)
        {
            nlohmann::ordered_json bj;
            bj["runs"] = b.runs;
            nlohmann::ordered_json props;
            for (const auto &[name, t] : b.properties)
            {
                props[name] = {{"pass", t.pass}, {"fail", t.fail}, {"not_applicable", t.not_applicable}};
            }
            bj["properties"] = std::move(props);
            nlohmann::ordered_json complexity;
            complexity["instances"] = b.instances;
            complexity["suggests"] = b.suggests;
            complexity["mean_suggest_per_instance"] =
                b.instances == 0 ? 0.0 : static_cast<double>(b.suggests) / static_cast<double>(b.instances);
            complexity["max_suggest_per_instance"] = b.max_suggest_per_instance;
            complexity["n_squared"] = summary.n * summary.n;
            bj["complexity"] = std::move(complexity);
            bj["app_deliveries"] = b.app_deliveries;
            behaviors[std::string(behavior_info(behavior).id)] = std::move(bj);
        }
        j["behaviors"] = std::move(behaviors);
        auto failures = nlohmann::ordered_json::array();
        for (const auto &f : summary.failures)
        {
            failures.push_back({{"behavior", std::string(behavior_info(f.behavior).id)},
                                {"seed", f.seed},
                                {"property", f.property},
                                {"detail", f.detail}});
        }
        j["failures"] = std::move(failures);
        return j;
    }
}
