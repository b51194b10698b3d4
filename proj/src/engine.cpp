#include "olive/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <queue>

namespace olive::engine {

using model::Application;
using model::EfficiencyMap;
using model::Embedding;
using model::LoadLedger;
using model::NodeIdx;
using model::Request;
using model::RequestStatus;
using model::SubstrateNetwork;
using model::UnitLoad;

const char* decision_name(Decision d) {
    switch (d) {
        case Decision::Planned: return "planned";
        case Decision::Borrowed: return "borrowed";
        case Decision::Greedy: return "greedy";
        case Decision::Rejected: return "rejected";
        case Decision::Preempted: return "preempted";
        case Decision::SlotoffAssigned: return "slotoff-assigned";
    }
    return "?";
}

std::string format_node_map(const SubstrateNetwork& net, const Application& app,
                            const Embedding& emb) {
    std::string out;
    for (int q = 0; q < app.vnode_count(); ++q) {
        if (q) out += '|';
        out += app.vnodes[q].id + ':' + net.nodes[emb.node_map[q]].id;
    }
    return out;
}

std::string format_paths(const SubstrateNetwork& net, const Application& app,
                         const Embedding& emb) {
    std::string out;
    for (int e = 0; e < app.vlink_count(); ++e) {
        if (e) out += '|';
        out += app.vnodes[app.vlinks[e].parent].id + '-' + app.vnodes[app.vlinks[e].child].id + ':';
        const auto& path = emb.link_paths[e];
        for (size_t k = 0; k < path.size(); ++k) {
            if (k) out += '-';
            out += net.links[path[k]].id;
        }
    }
    return out;
}

void events_to_csv(const std::vector<Event>& events, std::ostream& os) {
    os << "slot,request_id,decision,node_map,paths,cost_delta\n";
    char buf[64];
    for (const auto& e : events) {
        snprintf(buf, sizeof buf, "%.17g", e.cost_delta);
        os << e.slot << ',' << e.request_id << ',' << decision_name(e.decision) << ','
           << e.node_map << ',' << e.paths << ',' << buf << "\n";
    }
}

std::optional<GreedyResult> greedy_embed(const Request& r, const Application& app,
                                         const EfficiencyMap& eta, const SubstrateNetwork& net,
                                         const LoadLedger& ledger) {
    const int V = net.node_count();
    const NodeIdx origin = r.origin;

    // combined demand of root-incident vlinks per substrate link
    std::vector<int> root_links;
    for (int e = 0; e < app.vlink_count(); ++e)
        if (app.vlinks[e].parent == app.root()) root_links.push_back(e);

    std::vector<double> link_load(net.link_count(), 0.0);
    std::vector<char> link_usable(net.link_count(), 1);
    for (int l = 0; l < net.link_count(); ++l) {
        double need = 0;
        for (int e : root_links) {
            double ef = eta.eta(r.app, app.vnode_count() + e, net.link_elem(l));
            if (std::isinf(ef)) {
                link_usable[l] = 0;
                break;
            }
            need += r.size * app.vlinks[e].size * ef;
        }
        if (!link_usable[l]) continue;
        link_load[l] = need;
        if (ledger.load(net.link_elem(l)) + need >
            net.links[l].capacity + kResidualEps)
            link_usable[l] = 0;
    }

    // cost-weighted shortest paths from the origin over usable links
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(V, inf);
    std::vector<std::pair<NodeIdx, model::LinkIdx>> parent(V, {-1, -1});
    dist[origin] = 0;
    using Item = std::pair<double, NodeIdx>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    pq.push({0.0, origin});
    while (!pq.empty()) {
        auto [d, v] = pq.top();
        pq.pop();
        if (d > dist[v]) continue;
        for (auto [w, l] : net.adj[v]) {
            if (!link_usable[l]) continue;
            double nd = d + link_load[l] * net.links[l].unit_cost;
            if (nd < dist[w] - 1e-15) {
                dist[w] = nd;
                parent[w] = {v, l};
                pq.push({nd, w});
            }
        }
    }

    int best_w = -1;
    double best_total = inf, best_node_cost = 0;
    for (NodeIdx w = 0; w < V; ++w) {
        if (dist[w] == inf) continue;
        double node_load = 0, node_cost = 0;
        bool feasible = true;
        for (int q = 1; q < app.vnode_count(); ++q) {
            double e = eta.eta(r.app, q, net.node_elem(w));
            if (std::isinf(e)) {
                feasible = false;
                break;
            }
            node_load += r.size * app.vnodes[q].size * e;
        }
        if (!feasible) continue;
        if (ledger.load(net.node_elem(w)) + node_load >
            net.nodes[w].capacity + kResidualEps)
            continue;
        node_cost = node_load * net.nodes[w].unit_cost;
        double total = node_cost + dist[w];
        if (total < best_total - 1e-15) {
            best_total = total;
            best_w = w;
            best_node_cost = node_cost;
        }
    }
    (void)best_node_cost;
    if (best_w < 0) return std::nullopt;

    GreedyResult res;
    res.emb.node_map.assign(app.vnode_count(), best_w);
    res.emb.node_map[app.root()] = origin;
    res.emb.link_paths.assign(app.vlink_count(), {});
    std::vector<model::LinkIdx> path;
    for (NodeIdx at = best_w; at != origin; at = parent[at].first) path.push_back(parent[at].second);
    std::reverse(path.begin(), path.end());
    for (int e : root_links) res.emb.link_paths[e] = path;
    res.unit = model::unit_loads(net, app, eta, r.app, res.emb);
    res.cost = best_total;
    return res;
}

namespace {

struct PlannedAlloc {
    int agg = -1;
    int tmpl = -1;
    double consumed = 0;  // template weight units
};

class Engine {
public:
    Engine(const SubstrateNetwork& net, const std::vector<Application>& apps,
           const EfficiencyMap& eta, const planner::Plan& plan, const EngineConfig& cfg)
        : net_(net), apps_(apps), eta_(eta), plan_(plan), cfg_(cfg), ledger_(net) {
        res_w_.resize(plan.aggregates.size());
        for (size_t i = 0; i < plan.aggregates.size(); ++i) {
            res_w_[i].resize(plan.aggregates[i].templates.size());
            for (size_t t = 0; t < res_w_[i].size(); ++t)
                res_w_[i][t] = plan.aggregates[i].templates[t].weight;
        }
    }

    RunResult run(const std::vector<Request>& requests, int slots) {
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
            invariant(r.arrival >= 0 && r.arrival < slots, "engine: arrival outside the horizon");
            invariant(r.size > 0 && r.duration >= 1, "engine: bad request parameters");
            arrivals[r.arrival].push_back(&r);
            out.outcomes[r.id] = {};
        }

        for (int t = 0; t < slots; ++t) {
            for (auto& gone : ledger_.release_departures(t)) on_departure(out, gone);
            slot_full_ = false;
            for (const Request* r : arrivals[t]) {
                out.slot_arrived_demand[t] += r->size;
                out.slot_arrived_count[t]++;
                process(out, *r, t);
            }
            out.slot_cost[t] = cost_rate_;
            out.slot_loads[t] = ledger_.loads();
            out.resource_cost += cost_rate_;
            if (cfg_.verify_each_slot) verify(t);
        }
        out.runtime_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        return out;
    }

private:
    const SubstrateNetwork& net_;
    const std::vector<Application>& apps_;
    const EfficiencyMap& eta_;
    const planner::Plan& plan_;
    EngineConfig cfg_;
    LoadLedger ledger_;
    std::vector<std::vector<double>> res_w_;          // residual template weights
    std::unordered_map<int, PlannedAlloc> planned_;   // request -> plan consumption
    double cost_rate_ = 0;
    bool slot_full_ = false;

    void on_departure(RunResult& out, const LoadLedger::Entry& gone) {
        cost_rate_ -= unit_cost_rate(gone.unit, gone.demand);
        auto it = planned_.find(gone.request_id);
        if (it != planned_.end()) {
            auto& w = res_w_[it->second.agg][it->second.tmpl];
            w += it->second.consumed;
            double cap = plan_.aggregates[it->second.agg].templates[it->second.tmpl].weight;
            invariant(w <= cap + 1e-9, "engine: plan residual exceeds template weight");
            planned_.erase(it);
        }
        out.outcomes[gone.request_id].status = RequestStatus::Departed;
    }

    double unit_cost_rate(const std::vector<UnitLoad>& unit, double demand) const {
        double c = 0;
        for (const auto& ul : unit) c += ul.cu * demand * net_.unit_cost(ul.elem);
        return c;
    }

    void allocate(RunResult& out, const Request& r, int t, const Embedding& emb,
                  const std::vector<UnitLoad>& unit, Decision decision, int agg, int tmpl) {
        bool planned = decision == Decision::Planned;
        ledger_.allocate({r.id, r.size, r.arrival + r.duration, planned, unit});
        if (planned) {
            const auto& pa = plan_.aggregates[agg];
            double delta = r.size / pa.agg.expected_demand;
            auto& w = res_w_[agg][tmpl];
            w -= delta;
            invariant(w > -1e-9, "engine: template residual went negative");
            if (w < 0) w = 0;
            planned_[r.id] = {agg, tmpl, delta};
        }
        double dc = unit_cost_rate(unit, r.size);
        cost_rate_ += dc;
        auto& oc = out.outcomes[r.id];
        oc.status = RequestStatus::Allocated;
        oc.decision = decision;
        oc.planned = planned;
        const Application& app = apps_[r.app];
        out.events.push_back({t, r.id, decision, format_node_map(net_, app, emb),
                              format_paths(net_, app, emb), dc});
        out.slot_allocated_demand[t] += r.size;
        out.slot_allocated_count[t]++;
    }

    void reject(RunResult& out, const Request& r, int t, bool timeout = false) {
        auto& oc = out.outcomes[r.id];
        oc.status = RequestStatus::Rejected;
        oc.decision = Decision::Rejected;
        oc.timeout = timeout;
        out.events.push_back({t, r.id, Decision::Rejected, "", "", 0.0});
    }

    // best-fit sufficient template: smallest residual capacity that still
    // covers the whole request
    int pick_full_template(int agg, double demand) const {
        const auto& pa = plan_.aggregates[agg];
        int best = -1;
        double best_res = 0;
        for (size_t t = 0; t < pa.templates.size(); ++t) {
            double cap = res_w_[agg][t] * pa.agg.expected_demand;
            if (cap + kResidualEps < demand) continue;
            if (best < 0 || res_w_[agg][t] < best_res) {
                best = static_cast<int>(t);
                best_res = res_w_[agg][t];
            }
        }
        return best;
    }

    // borrowed partial fit: any template with positive residual whose full
    // embedding fits the substrate; most-underused template first
    int pick_borrow_template(int agg, double demand) const {
        const auto& pa = plan_.aggregates[agg];
        std::vector<int> order;
        for (size_t t = 0; t < pa.templates.size(); ++t)
            if (res_w_[agg][t] > 1e-12) order.push_back(static_cast<int>(t));
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (res_w_[agg][a] != res_w_[agg][b]) return res_w_[agg][a] > res_w_[agg][b];
            return a < b;
        });
        for (int t : order)
            if (ledger_.fits(pa.templates[t].unit, demand)) return t;
        return -1;
    }

    bool preempt(RunResult& out, int t, const std::vector<UnitLoad>& unit, double demand) {
        // deficit per element if the candidate were added now
        std::map<model::ElemIdx, double> deficit;
        for (const auto& ul : unit) {
            double over = ledger_.load(ul.elem) + ul.cu * demand -
                          net_.capacity(ul.elem) - kResidualEps;
            if (over > 0) deficit[ul.elem] = over;
        }
        if (deficit.empty()) return true;

        // candidate victims: active non-planned allocations on deficit
        // elements, in id order (one pass over the active set)
        std::vector<std::pair<int, const LoadLedger::Entry*>> pool;
        for (const auto& [id, entry] : ledger_.active()) {
            if (entry.planned) continue;
            for (const auto& ul : entry.unit)
                if (deficit.count(ul.elem)) {
                    pool.emplace_back(id, &entry);
                    break;
                }
        }

        std::vector<int> victims;
        while (!deficit.empty()) {
            size_t best = pool.size();
            double best_contrib = 0;
            for (size_t k = 0; k < pool.size(); ++k) {
                if (!pool[k].second) continue;
                double contrib = 0;
                for (const auto& ul : pool[k].second->unit) {
                    auto it = deficit.find(ul.elem);
                    if (it != deficit.end())
                        contrib += std::min(ul.cu * pool[k].second->demand, it->second);
                }
                if (contrib > best_contrib + 1e-12) {
                    best_contrib = contrib;
                    best = k;
                }
            }
            if (best == pool.size()) return false;  // insufficient: free nothing
            victims.push_back(pool[best].first);
            const LoadLedger::Entry* chosen = pool[best].second;
            pool[best].second = nullptr;
            for (const auto& ul : chosen->unit) {
                auto it = deficit.find(ul.elem);
                if (it == deficit.end()) continue;
                it->second -= ul.cu * chosen->demand;
                if (it->second <= 1e-12) deficit.erase(it);
            }
        }

        for (int id : victims) {
            LoadLedger::Entry entry = ledger_.remove(id);
            cost_rate_ -= unit_cost_rate(entry.unit, entry.demand);
            auto& oc = out.outcomes[id];
            oc.status = RequestStatus::Preempted;
            oc.preempt_slot = t;
            out.events.push_back({t, id, Decision::Preempted, "", "",
                                  -unit_cost_rate(entry.unit, entry.demand)});
        }
        return true;
    }

    void process(RunResult& out, const Request& r, int t) {
        if (cfg_.quickg_short_circuit && slot_full_) {
            reject(out, r, t);
            return;
        }

        int agg = cfg_.use_plan ? plan_.find(r.app, r.origin) : -1;
        if (agg >= 0 && plan_.aggregates[agg].agg.expected_demand > 0 &&
            !plan_.aggregates[agg].templates.empty()) {
            const auto& pa = plan_.aggregates[agg];
            int full = pick_full_template(agg, r.size);
            if (full >= 0) {
                const planner::Template& tp = pa.templates[full];
                if (ledger_.fits(tp.unit, r.size) || preempt(out, t, tp.unit, r.size)) {
                    allocate(out, r, t, tp.emb, tp.unit, Decision::Planned, agg, full);
                    return;
                }
            }
            int borrow = pick_borrow_template(agg, r.size);
            if (borrow >= 0) {
                const planner::Template& tp = pa.templates[borrow];
                allocate(out, r, t, tp.emb, tp.unit, Decision::Borrowed, agg, borrow);
                return;
            }
        }

        auto fallback = cfg_.fallback
                            ? cfg_.fallback(r, ledger_)
                            : greedy_embed(r, apps_[r.app], eta_, net_, ledger_);
        if (fallback) {
            invariant(ledger_.fits(fallback->unit, r.size),
                      "engine: fallback produced an embedding that does not fit");
            allocate(out, r, t, fallback->emb, fallback->unit, Decision::Greedy, -1, -1);
            return;
        }
        if (cfg_.quickg_short_circuit && !slot_full_) {
            slot_full_ = true;
            for (NodeIdx v = 0; v < net_.node_count(); ++v)
                if (ledger_.residual(net_.node_elem(v)) > kResidualEps) {
                    slot_full_ = false;
                    break;
                }
        }
        reject(out, r, t);
    }

    void verify(int /*t*/) const {
        ledger_.verify_consistency();
        for (size_t a = 0; a < res_w_.size(); ++a)
            for (size_t t2 = 0; t2 < res_w_[a].size(); ++t2) {
                double w = res_w_[a][t2];
                double cap = plan_.aggregates[a].templates[t2].weight;
                invariant(w > -1e-9 && w <= cap + 1e-9, "engine: template residual out of range");
            }
    }
};

}  // namespace

RunResult run(const SubstrateNetwork& net, const std::vector<Application>& apps,
              const EfficiencyMap& eta, const planner::Plan& plan,
              const std::vector<Request>& requests, int slots, const EngineConfig& cfg) {
    Engine engine(net, apps, eta, plan, cfg);
    return engine.run(requests, slots);
}

}  // namespace olive::engine
