#include "olive/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <queue>
#include <set>

namespace olive::baselines {

using engine::Decision;
using engine::RunResult;
using model::Application;
using model::EfficiencyMap;
using model::Embedding;
using model::LoadLedger;
using model::NodeIdx;
using model::Request;
using model::RequestStatus;
using model::SubstrateNetwork;

engine::RunResult run_quickg(const SubstrateNetwork& net, const std::vector<Application>& apps,
                             const EfficiencyMap& eta, const std::vector<Request>& requests,
                             int slots, bool verify) {
    planner::Plan empty;
    engine::EngineConfig cfg;
    cfg.use_plan = false;
    cfg.quickg_short_circuit = true;
    cfg.verify_each_slot = verify;
    return engine::run(net, apps, eta, empty, requests, slots, cfg);
}

namespace {

// min-cost path for one vlink between two substrate nodes, subject to the
// vlink's own demand fitting each traversed link
struct PathFinder {
    const SubstrateNetwork& net;
    const LoadLedger& ledger;
    std::vector<double> link_load;   // demand this vlink puts on each link
    std::vector<char> usable;

    PathFinder(const SubstrateNetwork& n, const LoadLedger& lg, const Request& r,
               const Application& app, const EfficiencyMap& eta, int vlink)
        : net(n), ledger(lg), link_load(n.link_count(), 0.0), usable(n.link_count(), 1) {
        int velem = app.vnode_count() + vlink;
        for (int l = 0; l < net.link_count(); ++l) {
            double ef = eta.eta(r.app, velem, net.link_elem(l));
            if (std::isinf(ef)) {
                usable[l] = 0;
                continue;
            }
            link_load[l] = r.size * app.vlinks[vlink].size * ef;
            if (ledger.load(net.link_elem(l)) + link_load[l] >
                net.links[l].capacity + kResidualEps)
                usable[l] = 0;
        }
    }

    // returns (cost, path) or nullopt; Dijkstra from src, deterministic
    std::optional<std::pair<double, std::vector<model::LinkIdx>>> path(NodeIdx src, NodeIdx dst) {
        if (src == dst) return std::make_pair(0.0, std::vector<model::LinkIdx>{});
        const double inf = std::numeric_limits<double>::infinity();
        std::vector<double> dist(net.node_count(), inf);
        std::vector<std::pair<NodeIdx, model::LinkIdx>> parent(net.node_count(), {-1, -1});
        dist[src] = 0;
        using Item = std::pair<double, NodeIdx>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
        pq.push({0, src});
        while (!pq.empty()) {
            auto [d, v] = pq.top();
            pq.pop();
            if (d > dist[v]) continue;
            for (auto [w, l] : net.adj[v]) {
                if (!usable[l]) continue;
                double nd = d + link_load[l] * net.links[l].unit_cost;
                if (nd < dist[w] - 1e-15) {
                    dist[w] = nd;
                    parent[w] = {v, l};
                    pq.push({nd, w});
                }
            }
        }
        if (dist[dst] == inf) return std::nullopt;
        std::vector<model::LinkIdx> path;
        for (NodeIdx at = dst; at != src; at = parent[at].first) path.push_back(parent[at].second);
        std::reverse(path.begin(), path.end());
        return std::make_pair(dist[dst], path);
    }
};

}  // namespace

std::optional<engine::GreedyResult> fullg_embed(const Request& r, const Application& app,
                                                const EfficiencyMap& eta,
                                                const SubstrateNetwork& net,
                                                const LoadLedger& ledger, long budget,
                                                bool* timeout) {
    const int V = net.node_count();
    const int nv = app.vnode_count();
    if (timeout) *timeout = false;

    // per-vnode node demand and admissibility
    std::vector<std::vector<double>> node_load(nv, std::vector<double>(V, 0.0));
    std::vector<std::vector<char>> node_ok(nv, std::vector<char>(V, 1));
    for (int q = 1; q < nv; ++q)
        for (NodeIdx v = 0; v < V; ++v) {
            double e = eta.eta(r.app, q, net.node_elem(v));
            if (std::isinf(e)) {
                node_ok[q][v] = 0;
                continue;
            }
            node_load[q][v] = r.size * app.vnodes[q].size * e;
        }

    // per-vlink path caches keyed by source node
    std::vector<PathFinder> finders;
    finders.reserve(app.vlink_count());
    for (int e = 0; e < app.vlink_count(); ++e) finders.emplace_back(net, ledger, r, app, eta, e);
    std::vector<std::map<std::pair<NodeIdx, NodeIdx>,
                         std::optional<std::pair<double, std::vector<model::LinkIdx>>>>>
        path_cache(app.vlink_count());
    auto link_path = [&](int e, NodeIdx a, NodeIdx b) {
        auto key = std::make_pair(a, b);
        auto it = path_cache[e].find(key);
        if (it == path_cache[e].end()) it = path_cache[e].emplace(key, finders[e].path(a, b)).first;
        return it->second;
    };

    std::vector<NodeIdx> assign(nv, -1);
    assign[app.root()] = r.origin;
    std::vector<double> used_node(V, 0.0);  // node CU consumed by earlier vnodes of this candidate

    double best_cost = std::numeric_limits<double>::infinity();
    Embedding best_emb;
    bool found = false;
    long evaluated = 0;
    bool out_of_budget = false;

    // vlinks whose endpoints are both decided once vnode q is assigned
    std::vector<std::vector<int>> ready_links(nv);
    for (int e = 0; e < app.vlink_count(); ++e)
        ready_links[std::max(app.vlinks[e].parent, app.vlinks[e].child)].push_back(e);

    Embedding cur;
    cur.node_map = assign;
    cur.link_paths.assign(app.vlink_count(), {});

    std::function<void(int, double)> dfs = [&](int q, double cost) {
        if (out_of_budget || cost >= best_cost) return;
        // every partial or complete assignment counts against the budget
        if (++evaluated > budget) {
            out_of_budget = true;
            return;
        }
        if (q == nv) {
            // joint feasibility of the assembled candidate
            std::vector<model::UnitLoad> unit = model::unit_loads(net, app, eta, r.app, cur);
            if (!ledger.fits(unit, r.size)) return;
            if (cost < best_cost) {
                best_cost = cost;
                best_emb = cur;
                found = true;
            }
            return;
        }
        for (NodeIdx v = 0; v < V; ++v) {
            if (!node_ok[q][v]) continue;
            if (ledger.load(net.node_elem(v)) + used_node[v] + node_load[q][v] >
                net.nodes[v].capacity + kResidualEps)
                continue;
            double add = node_load[q][v] * net.nodes[v].unit_cost;
            double link_cost = 0;
            bool feasible = true;
            std::vector<std::pair<int, std::vector<model::LinkIdx>>> paths;
            cur.node_map[q] = v;
            for (int e : ready_links[q]) {
                NodeIdx pa = cur.node_map[app.vlinks[e].parent];
                NodeIdx ch = cur.node_map[app.vlinks[e].child];
                auto p = link_path(e, pa, ch);
                if (!p) {
                    feasible = false;
                    break;
                }
                link_cost += p->first;
                paths.emplace_back(e, p->second);
            }
            if (feasible) {
                for (auto& [e, p] : paths) cur.link_paths[e] = p;
                used_node[v] += node_load[q][v];
                dfs(q + 1, cost + add + link_cost);
                used_node[v] -= node_load[q][v];
                for (auto& [e, p] : paths) cur.link_paths[e].clear();
            }
            cur.node_map[q] = -1;
            if (out_of_budget) return;
        }
    };
    dfs(1, 0.0);

    if (out_of_budget) {
        if (timeout) *timeout = true;
        return std::nullopt;
    }
    if (!found) return std::nullopt;
    engine::GreedyResult res;
    res.emb = std::move(best_emb);
    res.unit = model::unit_loads(net, app, eta, r.app, res.emb);
    res.cost = best_cost;
    return res;
}

engine::RunResult run_fullg(const SubstrateNetwork& net, const std::vector<Application>& apps,
                            const EfficiencyMap& eta, const std::vector<Request>& requests,
                            int slots, const FullgConfig& cfg, bool verify) {
    planner::Plan empty;
    engine::EngineConfig ecfg;
    ecfg.use_plan = false;
    ecfg.quickg_short_circuit = false;
    ecfg.verify_each_slot = verify;
    // timeouts are flagged on the outcome after the run from the shared flag
    auto timeouts = std::make_shared<std::vector<int>>();
    ecfg.fallback = [&net, &apps, &eta, &cfg, timeouts](const Request& r,
                                                        const LoadLedger& ledger) {
        bool to = false;
        auto res = fullg_embed(r, apps[r.app], eta, net, ledger, cfg.budget, &to);
        if (to) timeouts->push_back(r.id);
        return res;
    };
    engine::RunResult out = engine::run(net, apps, eta, empty, requests, slots, ecfg);
    for (int id : *timeouts) out.outcomes[id].timeout = true;
    return out;
}

engine::RunResult run_slotoff(const SubstrateNetwork& net, const std::vector<Application>& apps,
                              const EfficiencyMap& eta, const std::vector<Request>& requests,
                              int slots, const SlotoffConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    RunResult out;
    out.slots = slots;
    out.slot_cost.assign(slots, 0.0);
    out.slot_loads.assign(slots, {});
    out.slot_arrived_demand.assign(slots, 0.0);
    out.slot_allocated_demand.assign(slots, 0.0);
    out.slot_arrived_count.assign(slots, 0);
    out.slot_allocated_count.assign(slots, 0);

    std::vector<std::vector<const Request*>> arrivals(slots);
    for (const auto& r : requests) {
        invariant(r.arrival >= 0 && r.arrival < slots, "slotoff: arrival outside the horizon");
        arrivals[r.arrival].push_back(&r);
        out.outcomes[r.id] = {};
    }

    // per-app psi resolved once
    std::vector<double> app_psi(apps.size(), cfg.plan.psi_override);
    if (cfg.plan.psi_override < 0)
        for (size_t a = 0; a < apps.size(); ++a)
            app_psi[a] = planner::default_psi(apps[a], static_cast<int>(a), eta, net);

    std::set<int> gone;           // rejected or dropped, never reconsidered
    std::vector<const Request*> active;
    lp::Basis warm;
    size_t warm_cols = 0, warm_rows = 0;

    for (int t = 0; t < slots; ++t) {
        // refresh the active set: departures out, new arrivals in
        std::vector<const Request*> next;
        for (const Request* r : active)
            if (t < r->arrival + r->duration && !gone.count(r->id)) next.push_back(r);
        for (const Request* r : arrivals[t]) {
            next.push_back(r);
            out.slot_arrived_demand[t] += r->size;
            out.slot_arrived_count[t]++;
        }
        active = std::move(next);
        std::sort(active.begin(), active.end(), [](const Request* a, const Request* b) {
            if (a->arrival != b->arrival) return a->arrival < b->arrival;
            return a->id < b->id;
        });

        LoadLedger ledger(net);
        if (!active.empty()) {
            std::vector<planner::AggregateRequest> aggs = planner::aggregate_active(active);
            for (auto& agg : aggs) agg.psi = app_psi[agg.app];
            planner::PvneModel m = planner::build_pvne(net, apps, eta, aggs, cfg.plan);
            lp::SimplexOptions sopts;
            if (warm_cols == static_cast<size_t>(m.lp.num_cols()) &&
                warm_rows == static_cast<size_t>(m.lp.num_rows()) && !warm.empty()) {
                sopts.warm = &warm;
                // stale bases occasionally stall on these degenerate models;
                // give up early and re-solve cold instead of crawling
                sopts.max_iters = 6000;
            }
            lp::SolveResult sol = lp::solve(m.lp, sopts);
            if (sol.status != lp::SolveStatus::Optimal && sopts.warm) {
                // a stale basis can stall; retry from scratch
                sol = lp::solve(m.lp);
            }
            if (sol.status != lp::SolveStatus::Optimal)
                throw SolverError("slotoff: per-slot LP failed at slot " + std::to_string(t));
            warm = sol.basis;
            warm_cols = m.lp.num_cols();
            warm_rows = m.lp.num_rows();
            planner::Plan slot_plan =
                planner::extract_templates(m, sol, net, apps, eta, aggs, cfg.plan);

            // FCFS packing into templates, best-fit
            std::vector<std::vector<double>> res_w(slot_plan.aggregates.size());
            for (size_t i = 0; i < slot_plan.aggregates.size(); ++i) {
                res_w[i].resize(slot_plan.aggregates[i].templates.size());
                for (size_t k = 0; k < res_w[i].size(); ++k)
                    res_w[i][k] = slot_plan.aggregates[i].templates[k].weight;
            }
            for (const Request* r : active) {
                int agg = slot_plan.find(r->app, r->origin);
                invariant(agg >= 0, "slotoff: active request lost its aggregate");
                const auto& pa = slot_plan.aggregates[agg];
                int best = -1;
                double best_res = 0;
                for (size_t k = 0; k < pa.templates.size(); ++k) {
                    double cap = res_w[agg][k] * pa.agg.expected_demand;
                    if (cap + kResidualEps < r->size) continue;
                    if (!ledger.fits(pa.templates[k].unit, r->size)) continue;
                    if (best < 0 || res_w[agg][k] < best_res) {
                        best = static_cast<int>(k);
                        best_res = res_w[agg][k];
                    }
                }
                auto& oc = out.outcomes[r->id];
                if (best >= 0) {
                    res_w[agg][best] -= r->size / pa.agg.expected_demand;
                    ledger.allocate({r->id, r->size, r->arrival + r->duration, true,
                                     pa.templates[best].unit});
                    if (r->arrival == t) {
                        oc.status = RequestStatus::Allocated;
                        oc.decision = Decision::SlotoffAssigned;
                        const Application& app = apps[r->app];
                        out.events.push_back(
                            {t, r->id, Decision::SlotoffAssigned,
                             engine::format_node_map(net, app, pa.templates[best].emb),
                             engine::format_paths(net, app, pa.templates[best].emb),
                             0.0});
                        out.slot_allocated_demand[t] += r->size;
                        out.slot_allocated_count[t]++;
                    }
                } else if (r->arrival == t) {
                    gone.insert(r->id);
                    oc.status = RequestStatus::Rejected;
                    oc.decision = Decision::Rejected;
                    out.events.push_back({t, r->id, Decision::Rejected, "", "", 0.0});
                } else {
                    // an ongoing request that no longer packs is dropped and
                    // charged like a rejection
                    gone.insert(r->id);
                    oc.status = RequestStatus::Preempted;
                    oc.preempt_slot = t;
                    out.events.push_back({t, r->id, Decision::Preempted, "", "", 0.0});
                }
            }
            if (cfg.verify) ledger.verify_consistency();
        }
        double rate = 0;
        for (model::ElemIdx s = 0; s < net.element_count(); ++s)
            rate += ledger.load(s) * net.unit_cost(s);
        out.slot_cost[t] = rate;
        out.slot_loads[t] = ledger.loads();
        out.resource_cost += rate;
    }
    for (auto& [id, oc] : out.outcomes)
        if (oc.status == RequestStatus::Allocated) oc.status = RequestStatus::Departed;
    out.runtime_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

}  // namespace olive::baselines
