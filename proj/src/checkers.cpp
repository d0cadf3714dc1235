#include "flutter/checkers.hpp"

#include <algorithm>
#include <optional>
#include <utility>

namespace flutter
{
    namespace
    {
        using AppKey = std::pair<ProcessId, Bytes>;

        CheckReport pass(std::string property, std::string detail = {})
        {
            return CheckReport{std::move(property), Verdict::Pass, std::move(detail), {}};
        }

        CheckReport not_applicable(std::string property, std::string reason)
        {
            return CheckReport{std::move(property), Verdict::NotApplicable, std::move(reason), {}};
        }

        CheckReport fail(std::string property, std::string detail, Trace witness)
        {
            return CheckReport{std::move(property), Verdict::Fail, std::move(detail), std::move(witness)};
        }

        bool is_correct_server(const CheckConfig &cfg, const ProcessId &p)
        {
            return cfg.correct_servers.contains(p);
        }

        // Merges per-instance reports: the first Fail wins, then Pass over NotApplicable.
        std::vector<CheckReport> merge(const std::vector<std::vector<CheckReport>> &per_instance)
        {
            std::vector<CheckReport> out;
            std::map<std::string, std::size_t> index;
            for (const auto &reports : per_instance)
            {
                for (const auto &r : reports)
                {
                    auto [it, fresh] = index.try_emplace(r.property, out.size());
                    if (fresh)
                    {
                        out.push_back(r);
                        continue;
                    }
                    auto &current = out[it->second];
                    if (current.verdict == Verdict::Fail)
                    {
                        continue;
                    }
                    if (r.verdict == Verdict::Fail || current.verdict == Verdict::NotApplicable)
                    {
                        current = r;
                    }
                }
            }
            return out;
        }

        // ---- consensus ------------------------------------------------------------

        std::vector<CheckReport> consensus_reports(const std::vector<const TraceEvent *> &events, const CheckConfig &cfg,
                                                   const InstanceTag &instance)
        {
            const std::string where = " in instance " + render(instance);
            std::map<ProcessId, std::vector<const TraceEvent *>> decides;
            std::map<ProcessId, const TraceEvent *> proposals;
            std::vector<const TraceEvent *> fast_decides;
            std::vector<const TraceEvent *> dep_proposals;
            for (const auto *e : events)
            {
                if (!is_correct_server(cfg, e->process))
                {
                    continue;
                }
                switch (e->kind)
                {
                case TraceKind::Decide:
                    decides[e->process].push_back(e);
                    if (e->note == "fast")
                    {
                        fast_decides.push_back(e);
                    }
                    break;
                case TraceKind::Propose:
                    proposals.try_emplace(e->process, e);
                    break;
                case TraceKind::DepPropose:
                    dep_proposals.push_back(e);
                    break;
                default:
                    break;
                }
            }

            std::vector<CheckReport> out;

            {
                std::optional<CheckReport> r;
                for (const auto &[p, ds] : decides)
                {
                    if (ds.size() > 1)
                    {
                        r = fail("Consensus.Integrity", label(p) + " decided twice" + where, {*ds[0], *ds[1]});
                        break;
                    }
                }
                out.push_back(r ? *r : pass("Consensus.Integrity"));
            }

            {
                const TraceEvent *first = nullptr;
                std::optional<CheckReport> r;
                for (const auto &[p, ds] : decides)
                {
                    for (const auto *d : ds)
                    {
                        if (first == nullptr)
                        {
                            first = d;
                        }
                        else if (*d->value != *first->value && !r)
                        {
                            r = fail("Consensus.Agreement", label(first->process) + " and " + label(d->process) +
                                                                " decided differently" + where,
                                     {*first, *d});
                        }
                    }
                }
                out.push_back(r ? *r : pass("Consensus.Agreement"));
            }

            if (!cfg.quiescent)
            {
                out.push_back(not_applicable("Consensus.Termination", "run did not reach quiescence"));
            }
            else if (proposals.size() < cfg.correct_servers.size())
            {
                out.push_back(not_applicable("Consensus.Termination", "not every correct server proposed" + where));
            }
            else
            {
                std::optional<CheckReport> r;
                for (const auto &p : cfg.correct_servers)
                {
                    if (!decides.contains(p))
                    {
                        Trace witness;
                        for (const auto &[q, e] : proposals)
                        {
                            witness.push_back(*e);
                        }
                        r = fail("Consensus.Termination", label(p) + " never decided" + where, std::move(witness));
                        break;
                    }
                }
                out.push_back(r ? *r : pass("Consensus.Termination"));
            }

            {
                std::optional<CheckReport> r;
                for (const auto &[p, ds] : decides)
                {
                    const Value v = *ds.front()->value;
                    Trace witness{*ds.front()};
                    std::size_t backers = 0;
                    for (const auto &[q, e] : proposals)
                    {
                        if (*e->value == v)
                        {
                            ++backers;
                            witness.push_back(*e);
                        }
                    }
                    if (backers < quorum::retry(cfg.f))
                    {
                        r = fail("Consensus.RepresentativeValidity",
                                 std::string(to_string(v)) + " decided with only " + std::to_string(backers) +
                                     " correct proposers" + where,
                                 std::move(witness));
                        break;
                    }
                }
                out.push_back(r ? *r : pass("Consensus.RepresentativeValidity"));
            }

            {
                std::optional<CheckReport> r;
                for (const auto *fd : fast_decides)
                {
                    for (const auto *dp : dep_proposals)
                    {
                        if (*dp->value != *fd->value)
                        {
                            r = fail("Consensus.FastSlowConsistency",
                                     label(fd->process) + " fast-decided " + to_string(*fd->value) + " but " +
                                         label(dp->process) + " proposed the opposite to dep" + where,
                                     {*fd, *dp});
                            break;
                        }
                    }
                    if (r)
                    {
                        break;
                    }
                }
                out.push_back(r ? *r : pass("Consensus.FastSlowConsistency"));
            }
            return out;
        }

        std::vector<CheckReport> dep_reports(const std::vector<const TraceEvent *> &events, const CheckConfig &cfg,
                                             const InstanceTag &instance)
        {
            const std::string where = " in instance " + render(instance);
            std::vector<const TraceEvent *> proposals;
            std::map<ProcessId, std::vector<const TraceEvent *>> decides;
            for (const auto *e : events)
            {
                if (!is_correct_server(cfg, e->process))
                {
                    continue;
                }
                if (e->kind == TraceKind::DepPropose)
                {
                    proposals.push_back(e);
                }
                else if (e->kind == TraceKind::DepDecide)
                {
                    decides[e->process].push_back(e);
                }
            }

            std::vector<CheckReport> out;
            {
                std::optional<CheckReport> r;
                for (const auto &[p, ds] : decides)
                {
                    for (const auto *d : ds)
                    {
                        const bool backed = std::any_of(proposals.begin(), proposals.end(),
                                                        [&](const TraceEvent *q) { return *q->value == *d->value; });
                        if (!backed && !r)
                        {
                            Trace witness{*d};
                            for (const auto *q : proposals)
                            {
                                witness.push_back(*q);
                            }
                            r = fail("Dep.WeakValidity", "dep decided a value no correct server proposed" + where,
                                     std::move(witness));
                        }
                    }
                }
                out.push_back(r ? *r : pass("Dep.WeakValidity"));
            }
            {
                std::optional<CheckReport> agreement;
                std::optional<CheckReport> integrity;
                const TraceEvent *first = nullptr;
                for (const auto &[p, ds] : decides)
                {
                    if (ds.size() > 1 && !integrity)
                    {
                        integrity = fail("Dep.Integrity", label(p) + " received two dep decisions" + where, {*ds[0], *ds[1]});
                    }
                    for (const auto *d : ds)
                    {
                        if (first == nullptr)
                        {
                            first = d;
                        }
                        else if (*first->value != *d->value && !agreement)
                        {
                            agreement = fail("Dep.Agreement", "dep decided two values" + where, {*first, *d});
                        }
                    }
                }
                out.push_back(agreement ? *agreement : pass("Dep.Agreement"));
                out.push_back(integrity ? *integrity : pass("Dep.Integrity"));
            }
            {
                std::set<ProcessId> proposers;
                for (const auto *q : proposals)
                {
                    proposers.insert(q->process);
                }
                if (!cfg.quiescent)
                {
                    out.push_back(not_applicable("Dep.Termination", "run did not reach quiescence"));
                }
                else if (proposers.size() < cfg.correct_servers.size())
                {
                    out.push_back(not_applicable("Dep.Termination", "not every correct server proposed to dep" + where));
                }
                else
                {
                    std::optional<CheckReport> r;
                    for (const auto &p : cfg.correct_servers)
                    {
                        if (!decides.contains(p))
                        {
                            Trace witness;
                            for (const auto *q : proposals)
                            {
                                witness.push_back(*q);
                            }
                            r = fail("Dep.Termination", label(p) + " never received a dep decision" + where,
                                     std::move(witness));
                            break;
                        }
                    }
                    out.push_back(r ? *r : pass("Dep.Termination"));
                }
            }
            return out;
        }

        std::map<InstanceTag, std::vector<const TraceEvent *>> group_by_instance(const Trace &trace)
        {
            std::map<InstanceTag, std::vector<const TraceEvent *>> out;
            for (const auto &e : trace)
            {
                if (e.instance)
                {
                    out[*e.instance].push_back(&e);
                }
            }
            return out;
        }
    }

    const char *to_string(Verdict v) noexcept
    {
        switch (v)
        {
        case Verdict::Pass:
            return "Pass";
        case Verdict::Fail:
            return "Fail";
        case Verdict::NotApplicable:
            return "NotApplicable";
        }
        return "?";
    }

    bool no_failures(const std::vector<CheckReport> &reports) noexcept
    {
        return std::none_of(reports.begin(), reports.end(), [](const CheckReport &r) { return r.verdict == Verdict::Fail; });
    }

    std::vector<InstanceTag> instances_in(const Trace &trace)
    {
        std::vector<InstanceTag> out;
        for (const auto &[tag, events] : group_by_instance(trace))
        {
            out.push_back(tag);
        }
        return out;
    }

    std::vector<CheckReport> check_tob(const Trace &trace, const CheckConfig &cfg)
    {
        std::map<ProcessId, std::vector<const TraceEvent *>> deliveries;
        std::map<AppKey, const TraceEvent *> broadcasts;
        for (const auto &e : trace)
        {
            if (e.kind == TraceKind::AppDeliver && is_correct_server(cfg, e.process))
            {
                deliveries[e.process].push_back(&e);
            }
            else if (e.kind == TraceKind::Broadcast)
            {
                broadcasts.try_emplace(AppKey{e.process, e.bytes}, &e);
            }
        }
        auto key_of = [](const TraceEvent *e) { return AppKey{*e->peer, e->bytes}; };

        std::vector<CheckReport> out;

        {
            std::optional<CheckReport> r;
            for (const auto &[p, ds] : deliveries)
            {
                std::map<AppKey, const TraceEvent *> seen;
                for (const auto *d : ds)
                {
                    auto [it, fresh] = seen.try_emplace(key_of(d), d);
                    if (!fresh)
                    {
                        r = fail("NoDuplication", label(p) + " delivered " + quote_bytes(d->bytes) + " twice",
                                 {*it->second, *d});
                        break;
                    }
                }
                if (r)
                {
                    break;
                }
            }
            out.push_back(r ? *r : pass("NoDuplication"));
        }

        {
            std::optional<CheckReport> r;
            for (const auto &[p, ds] : deliveries)
            {
                for (const auto *d : ds)
                {
                    if (!cfg.correct_clients.contains(*d->peer))
                    {
                        continue;
                    }
                    auto b = broadcasts.find(key_of(d));
                    if (b == broadcasts.end() || b->second->time > d->time)
                    {
                        r = fail("Integrity",
                                 label(p) + " delivered " + quote_bytes(d->bytes) + " which " + label(*d->peer) +
                                     " never broadcast",
                                 {*d});
                        break;
                    }
                }
                if (r)
                {
                    break;
                }
            }
            out.push_back(r ? *r : pass("Integrity"));
        }

        {
            std::optional<CheckReport> r;
            const std::vector<const TraceEvent *> none;
            auto seq = [&](const ProcessId &p) -> const std::vector<const TraceEvent *> & {
                auto it = deliveries.find(p);
                return it == deliveries.end() ? none : it->second;
            };
            std::vector<ProcessId> servers(cfg.correct_servers.begin(), cfg.correct_servers.end());
            for (std::size_t i = 0; i < servers.size() && !r; ++i)
            {
                for (std::size_t j = i + 1; j < servers.size() && !r; ++j)
                {
                    const auto &a = seq(servers[i]);
                    const auto &b = seq(servers[j]);
                    const std::size_t common = std::min(a.size(), b.size());
                    std::size_t k = 0;
                    while (k < common && key_of(a[k]) == key_of(b[k]))
                    {
                        ++k;
                    }
                    const bool diverged = k < common;
                    const bool unequal = a.size() != b.size();
                    if (diverged || (cfg.quiescent && unequal))
                    {
                        Trace witness;
                        for (std::size_t x = 0; x <= k && x < a.size(); ++x)
                        {
                            witness.push_back(*a[x]);
                        }
                        for (std::size_t x = 0; x <= k && x < b.size(); ++x)
                        {
                            witness.push_back(*b[x]);
                        }
                        r = fail("AgreementTotalOrder",
                                 label(servers[i]) + " and " + label(servers[j]) +
                                     (diverged ? " delivered different messages at position " + std::to_string(k)
                                               : " delivered different numbers of messages"),
                                 std::move(witness));
                    }
                }
            }
            out.push_back(r ? *r : pass("AgreementTotalOrder"));
        }

        if (!cfg.quiescent)
        {
            out.push_back(not_applicable("Validity", "run did not reach quiescence"));
        }
        else
        {
            std::optional<CheckReport> r;
            bool applicable = false;
            for (const auto &[key, b] : broadcasts)
            {
                const auto &client = key.first;
                auto est = cfg.client_delta_estimate.find(client);
                if (!cfg.correct_clients.contains(client) || est == cfg.client_delta_estimate.end() || est->second.ticks < 1)
                {
                    continue;
                }
                applicable = true;
                for (const auto &s : cfg.correct_servers)
                {
                    auto it = deliveries.find(s);
                    const bool got = it != deliveries.end() &&
                                     std::any_of(it->second.begin(), it->second.end(),
                                                 [&](const TraceEvent *d) { return key_of(d) == key; });
                    if (!got)
                    {
                        r = fail("Validity", label(s) + " never delivered " + quote_bytes(key.second) + " from " + label(client),
                                 {*b});
                        break;
                    }
                }
                if (r)
                {
                    break;
                }
            }
            if (r)
            {
                out.push_back(*r);
            }
            else
            {
                out.push_back(applicable ? pass("Validity")
                                         : not_applicable("Validity", "no broadcast by a correct client with a positive delay estimate"));
            }
        }
        return out;
    }

    std::vector<CheckReport> check_consensus(const Trace &trace, const CheckConfig &config, const InstanceTag &instance)
    {
        std::vector<const TraceEvent *> events;
        for (const auto &e : trace)
        {
            if (e.instance && *e.instance == instance)
            {
                events.push_back(&e);
            }
        }
        return consensus_reports(events, config, instance);
    }

    std::vector<CheckReport> check_all_consensus(const Trace &trace, const CheckConfig &config)
    {
        std::vector<std::vector<CheckReport>> all;
        for (const auto &[tag, events] : group_by_instance(trace))
        {
            all.push_back(consensus_reports(events, config, tag));
        }
        return merge(all);
    }

    std::vector<CheckReport> check_dep(const Trace &trace, const CheckConfig &config)
    {
        std::vector<std::vector<CheckReport>> all;
        for (const auto &[tag, events] : group_by_instance(trace))
        {
            all.push_back(dep_reports(events, config, tag));
        }
        return merge(all);
    }

    std::vector<CheckReport> check_links(const Trace &trace, const CheckConfig &cfg)
    {
        using Link = std::pair<ProcessId, ProcessId>;
        std::map<Link, std::vector<const TraceEvent *>> sends;
        std::map<Link, std::vector<const TraceEvent *>> delivers;
        std::map<ProcessId, const TraceEvent *> last_time_send;
        std::optional<CheckReport> clock;
        for (const auto &e : trace)
        {
            if (e.kind == TraceKind::Send)
            {
                sends[{e.process, *e.peer}].push_back(&e);
                if (const auto *t = std::get_if<wire::Time>(&*e.message); t != nullptr && is_correct_server(cfg, e.process))
                {
                    auto [it, fresh] = last_time_send.try_emplace(e.process, &e);
                    if (!fresh)
                    {
                        const auto prev = std::get<wire::Time>(*it->second->message).time;
                        if (t->time < prev && !clock)
                        {
                            clock = fail("Clock.Monotone", label(e.process) + " announced a time below an earlier one",
                                         {*it->second, e});
                        }
                        it->second = &e;
                    }
                }
            }
            else if (e.kind == TraceKind::Deliver)
            {
                delivers[{*e.peer, e.process}].push_back(&e);
            }
        }

        std::optional<CheckReport> fifo;
        std::optional<CheckReport> delay;
        for (const auto &[link, ss] : sends)
        {
            const auto &ds = delivers[link];
            if (ds.size() > ss.size() && !fifo)
            {
                fifo = fail("Link.FIFO", "more deliveries than sends on " + label(link.first) + "->" + label(link.second),
                            {*ds[ss.size()]});
            }
            if (cfg.quiescent && ds.size() < ss.size() && !fifo)
            {
                fifo = fail("Link.FIFO", "undelivered message on " + label(link.first) + "->" + label(link.second),
                            {*ss[ds.size()]});
            }
            for (std::size_t k = 0; k < std::min(ss.size(), ds.size()); ++k)
            {
                if (*ss[k]->message != *ds[k]->message)
                {
                    if (!fifo)
                    {
                        fifo = fail("Link.FIFO", "delivery order differs from send order on " + label(link.first) + "->" +
                                                     label(link.second),
                                    {*ss[k], *ds[k]});
                    }
                    break;
                }
                const auto d = (ds[k]->time - ss[k]->time).ticks;
                const bool repaired = k > 0 && ds[k]->time == ds[k - 1]->time;
                if ((d < 1 || (d > cfg.delta.ticks && !repaired)) && !delay)
                {
                    delay = fail("Link.DelayBound", "delay " + std::to_string(d) + " on " + label(link.first) + "->" +
                                                        label(link.second),
                                 {*ss[k], *ds[k]});
                }
            }
        }
        for (const auto &[link, ds] : delivers)
        {
            if (!sends.contains(link) && !fifo)
            {
                fifo = fail("Link.FIFO", "delivery without a send on " + label(link.first) + "->" + label(link.second),
                            {*ds.front()});
            }
        }

        return {fifo ? *fifo : pass("Link.FIFO"), delay ? *delay : pass("Link.DelayBound"),
                clock ? *clock : pass("Clock.Monotone")};
    }

    std::vector<CheckReport> check_latency(const Trace &trace, const CheckConfig &cfg)
    {
        if (!cfg.good_case)
        {
            return {not_applicable("Latency.Broadcast", "not a good-case scenario"),
                    not_applicable("Latency.Consensus", "not a good-case scenario")};
        }
        std::vector<CheckReport> out;

        {
            std::map<AppKey, std::vector<const TraceEvent *>> delivered;
            std::vector<const TraceEvent *> broadcasts;
            SimTime end{0};
            for (const auto &e : trace)
            {
                end = std::max(end, e.time);
                if (e.kind == TraceKind::Broadcast)
                {
                    broadcasts.push_back(&e);
                }
                else if (e.kind == TraceKind::AppDeliver && is_correct_server(cfg, e.process))
                {
                    delivered[{*e.peer, e.bytes}].push_back(&e);
                }
            }
            std::optional<CheckReport> r;
            bool applicable = false;
            for (const auto *b : broadcasts)
            {
                auto eps = cfg.client_epsilon.find(b->process);
                if (eps == cfg.client_epsilon.end())
                {
                    continue;
                }
                const SimTime due = b->time + cfg.delta + cfg.delta + eps->second;
                const auto &ds = delivered[{b->process, b->bytes}];
                for (const auto *d : ds)
                {
                    if (d->time != due && !r)
                    {
                        r = fail("Latency.Broadcast",
                                 label(d->process) + " delivered at " + to_string(d->time) + ", expected " + to_string(due),
                                 {*b, *d});
                    }
                }
                if (cfg.quiescent || end >= due)
                {
                    applicable = true;
                    if (ds.size() < cfg.correct_servers.size() && !r)
                    {
                        r = fail("Latency.Broadcast", "not every server delivered " + quote_bytes(b->bytes) + " by " + to_string(due),
                                 {*b});
                    }
                }
            }
            out.push_back(r ? *r : applicable ? pass("Latency.Broadcast") : not_applicable("Latency.Broadcast", "no broadcast"));
        }

        {
            std::optional<CheckReport> r;
            bool applicable = false;
            for (const auto &[tag, events] : group_by_instance(trace))
            {
                std::map<ProcessId, const TraceEvent *> proposals;
                std::vector<const TraceEvent *> decides;
                for (const auto *e : events)
                {
                    if (!is_correct_server(cfg, e->process))
                    {
                        continue;
                    }
                    if (e->kind == TraceKind::Propose)
                    {
                        proposals.try_emplace(e->process, e);
                    }
                    else if (e->kind == TraceKind::Decide)
                    {
                        decides.push_back(e);
                    }
                }
                if (proposals.size() < cfg.correct_servers.size())
                {
                    continue;
                }
                const Value v = *proposals.begin()->second->value;
                SimTime last{0};
                bool unanimous = true;
                for (const auto &[p, e] : proposals)
                {
                    unanimous = unanimous && *e->value == v;
                    last = std::max(last, e->time);
                }
                if (!unanimous)
                {
                    continue;
                }
                applicable = true;
                const SimTime due = last + cfg.delta;
                std::set<ProcessId> decided;
                for (const auto *d : decides)
                {
                    decided.insert(d->process);
                    if ((d->time > due || *d->value != v) && !r)
                    {
                        Trace witness;
                        for (const auto &[p, e] : proposals)
                        {
                            witness.push_back(*e);
                        }
                        witness.push_back(*d);
                        r = fail("Latency.Consensus",
                                 label(d->process) + " decided " + to_string(*d->value) + " at " + to_string(d->time) +
                                     " in " + render(tag) + ", bound " + to_string(due),
                                 std::move(witness));
                    }
                }
                if (decided.size() < cfg.correct_servers.size() && (cfg.quiescent) && !r)
                {
                    Trace witness;
                    for (const auto &[p, e] : proposals)
                    {
                        witness.push_back(*e);
                    }
                    r = fail("Latency.Consensus", "unanimous instance " + render(tag) + " left a server undecided",
                             std::move(witness));
                }
            }
            out.push_back(r ? *r : applicable ? pass("Latency.Consensus")
                                              : not_applicable("Latency.Consensus", "no unanimous instance"));
        }
        return out;
    }

    std::vector<CheckReport> check_run(const Trace &trace, const CheckConfig &config)
    {
        std::vector<CheckReport> out;
        auto append = [&out](std::vector<CheckReport> rs) {
            for (auto &r : rs)
            {
                out.push_back(std::move(r));
            }
        };
        append(check_tob(trace, config));
        append(check_all_consensus(trace, config));
        append(check_dep(trace, config));
        append(check_links(trace, config));
        append(check_latency(trace, config));
        return out;
    }
}
