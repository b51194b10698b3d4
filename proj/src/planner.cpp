#include "olive/planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <ostream>

#include "json.hpp"

namespace olive::planner {

using model::Application;
using model::EfficiencyMap;
using model::NodeIdx;
using model::Request;
using model::SubstrateNetwork;

int Plan::find(int app, model::NodeIdx origin) const {
    for (size_t i = 0; i < aggregates.size(); ++i)
        if (aggregates[i].agg.app == app && aggregates[i].agg.origin == origin)
            return static_cast<int>(i);
    return -1;
}

std::vector<AggregateRequest> aggregate_history(const std::vector<Request>& history,
                                                int history_slots) {
    std::map<std::pair<int, NodeIdx>, AggregateRequest> by_key;
    for (const auto& r : history) {
        auto& agg = by_key[{r.app, r.origin}];
        agg.app = r.app;
        agg.origin = r.origin;
        agg.member_ids.push_back(r.id);
        if (agg.demand_series.empty()) agg.demand_series.assign(history_slots, 0.0);
        int from = std::max(0, r.arrival);
        int to = std::min(history_slots, r.arrival + r.duration);
        for (int t = from; t < to; ++t) agg.demand_series[t] += r.size;
    }
    std::vector<AggregateRequest> out;
    out.reserve(by_key.size());
    for (auto& [k, agg] : by_key) out.push_back(std::move(agg));
    return out;
}

std::vector<AggregateRequest> aggregate_active(const std::vector<const Request*>& active) {
    std::map<std::pair<int, NodeIdx>, AggregateRequest> by_key;
    for (const Request* r : active) {
        auto& agg = by_key[{r->app, r->origin}];
        agg.app = r->app;
        agg.origin = r->origin;
        agg.member_ids.push_back(r->id);
        agg.expected_demand += r->size;
    }
    std::vector<AggregateRequest> out;
    out.reserve(by_key.size());
    for (auto& [k, agg] : by_key) out.push_back(std::move(agg));
    return out;
}

namespace {
// linear interpolation percentile on a sorted sample
double percentile_sorted(const std::vector<double>& sorted, double alpha) {
    if (sorted.empty()) return 0;
    if (sorted.size() == 1) return sorted[0];
    double rank = (sorted.size() - 1) * alpha / 100.0;
    size_t lo = static_cast<size_t>(rank);
    if (lo >= sorted.size() - 1) return sorted.back();
    double frac = rank - static_cast<double>(lo);
    return sorted[lo] * (1 - frac) + sorted[lo + 1] * frac;
}
}  // namespace

BootstrapEstimate bootstrap_expected_demand(const std::vector<double>& series,
                                            const PlanConfig& cfg, Rng& rng) {
    if (!(cfg.alpha > 0 && cfg.alpha <= 100))
        throw std::runtime_error("plan: percentile must lie in (0, 100]");
    if (cfg.bootstrap_resamples < 100)
        throw std::runtime_error("plan: need at least 100 bootstrap resamples");
    BootstrapEstimate out;
    if (series.empty()) return out;
    const size_t n = series.size();
    std::vector<double> resample(n), stats(cfg.bootstrap_resamples);
    for (int b = 0; b < cfg.bootstrap_resamples; ++b) {
        for (size_t i = 0; i < n; ++i) resample[i] = series[rng.below(n)];
        std::sort(resample.begin(), resample.end());
        stats[b] = percentile_sorted(resample, cfg.alpha);
    }
    double mean = 0;
    for (double s : stats) mean += s;
    out.estimate = mean / stats.size();
    std::sort(stats.begin(), stats.end());
    out.ci_lo = percentile_sorted(stats, 2.5);
    out.ci_hi = percentile_sorted(stats, 97.5);
    return out;
}

double default_psi(const Application& app, int app_idx, const EfficiencyMap& eta,
                   const SubstrateNetwork& net) {
    double total = 0;
    for (int q = 0; q < app.velem_count(); ++q) {
        double size = app.elem_size(q);
        if (size == 0) continue;
        double worst = -1;
        bool is_node = q < app.vnode_count();
        int e_lo = is_node ? 0 : net.node_count();
        int e_hi = is_node ? net.node_count() : net.element_count();
        for (model::ElemIdx s = e_lo; s < e_hi; ++s) {
            double e = eta.eta(app_idx, q, s);
            if (std::isinf(e)) continue;
            worst = std::max(worst, net.unit_cost(s) * e);
        }
        if (worst < 0)
            throw std::runtime_error("application " + app.id +
                                     ": element has no admissible substrate placement");
        total += size * worst;
    }
    return total;
}

PvneModel build_pvne(const SubstrateNetwork& net, const std::vector<Application>& apps,
                     const EfficiencyMap& eta, const std::vector<AggregateRequest>& aggs,
                     const PlanConfig& cfg) {
    if (cfg.quantiles < 1) throw std::runtime_error("plan: quantile count must be >= 1");
    PvneModel m;
    m.V = net.node_count();
    m.L = net.link_count();
    m.P = cfg.quantiles;

    const double inv_p = 1.0 / m.P;

    for (size_t ai = 0; ai < aggs.size(); ++ai) {
        const AggregateRequest& agg = aggs[ai];
        if (agg.expected_demand <= 0) continue;
        const Application& app = apps.at(agg.app);
        const double dem = agg.expected_demand;
        PvneModel::Block b;
        b.agg = static_cast<int>(ai);
        b.nv = app.vnode_count();
        b.nl = app.vlink_count();
        std::string tag = "a" + std::to_string(agg.app) + "o" + std::to_string(agg.origin);

        b.root_col = m.lp.add_col(0.0, 0.0, 1.0, "y_" + tag + "_root");
        b.vnode_col0 = m.lp.num_cols();
        for (int q = 1; q < b.nv; ++q)
            for (NodeIdx v = 0; v < m.V; ++v) {
                double e = eta.eta(agg.app, q, net.node_elem(v));
                bool forbid = std::isinf(e);
                double obj = forbid ? 0.0
                                    : dem * app.vnodes[q].size * e * net.nodes[v].unit_cost;
                m.lp.add_col(obj, 0.0, forbid ? 0.0 : 1.0,
                             "y_" + tag + "_q" + std::to_string(q) + "_v" + std::to_string(v));
            }
        b.flow_col0 = m.lp.num_cols();
        for (int e = 0; e < b.nl; ++e) {
            int velem = b.nv + e;
            for (int l = 0; l < m.L; ++l) {
                double ef = eta.eta(agg.app, velem, net.link_elem(l));
                bool forbid = std::isinf(ef);
                double obj = forbid ? 0.0
                                    : dem * app.vlinks[e].size * ef * net.links[l].unit_cost;
                for (int dir = 0; dir < 2; ++dir)
                    m.lp.add_col(obj, 0.0, forbid ? 0.0 : 1.0,
                                 "f_" + tag + "_e" + std::to_string(e) + "_l" + std::to_string(l) +
                                     (dir ? "r" : "f"));
            }
        }
        b.layer_col0 = m.lp.num_cols();
        for (int p = 1; p <= m.P; ++p)
            m.lp.add_col(agg.psi * dem * p, 0.0, inv_p, "rej_" + tag + "_p" + std::to_string(p));

        // allocated fraction is the complement of the rejected quantiles
        int alloc_row = m.lp.add_row(lp::Sense::EQ, 1.0, "alloc_" + tag);
        m.lp.add_entry(alloc_row, b.root_col, 1.0);
        for (int p = 1; p <= m.P; ++p) m.lp.add_entry(alloc_row, m.layer_col(b, p), 1.0);

        // flow conservation for every vlink at every substrate node
        for (int e = 0; e < b.nl; ++e) {
            int i = app.vlinks[e].parent, j = app.vlinks[e].child;
            for (NodeIdx v = 0; v < m.V; ++v) {
                int row = m.lp.add_row(lp::Sense::EQ, 0.0,
                                       "flow_" + tag + "_e" + std::to_string(e) + "_v" +
                                           std::to_string(v));
                m.lp.add_entry(row, m.vnode_col(b, j, v), 1.0);
                if (i == app.root()) {
                    if (v == agg.origin) m.lp.add_entry(row, b.root_col, -1.0);
                } else {
                    m.lp.add_entry(row, m.vnode_col(b, i, v), -1.0);
                }
                for (auto [w, l] : net.adj[v]) {
                    // arc 2l+0 runs links[l].a -> links[l].b
                    int arc_out = 2 * l + (net.links[l].a == v ? 0 : 1);
                    int arc_in = 2 * l + (net.links[l].a == v ? 1 : 0);
                    m.lp.add_entry(row, m.flow_col(b, e, arc_in), -1.0);
                    m.lp.add_entry(row, m.flow_col(b, e, arc_out), 1.0);
                }
            }
        }
        m.blocks.push_back(b);
    }

    // shared capacity rows
    m.capacity_row.assign(net.element_count(), -1);
    auto cap_row = [&](model::ElemIdx s) {
        if (m.capacity_row[s] < 0)
            m.capacity_row[s] =
                m.lp.add_row(lp::Sense::LE, net.capacity(s), "cap_" + net.elem_id(s));
        return m.capacity_row[s];
    };
    for (const auto& b : m.blocks) {
        const AggregateRequest& agg = aggs[b.agg];
        const Application& app = apps.at(agg.app);
        const double dem = agg.expected_demand;
        for (int q = 1; q < b.nv; ++q) {
            if (app.vnodes[q].size == 0) continue;
            for (NodeIdx v = 0; v < m.V; ++v) {
                double e = eta.eta(agg.app, q, net.node_elem(v));
                if (std::isinf(e) || e == 0) continue;
                m.lp.add_entry(cap_row(net.node_elem(v)), m.vnode_col(b, q, v),
                               dem * app.vnodes[q].size * e);
            }
        }
        for (int e = 0; e < b.nl; ++e) {
            if (app.vlinks[e].size == 0) continue;
            int velem = b.nv + e;
            for (int l = 0; l < m.L; ++l) {
                double ef = eta.eta(agg.app, velem, net.link_elem(l));
                if (std::isinf(ef) || ef == 0) continue;
                double coeff = dem * app.vlinks[e].size * ef;
                int row = cap_row(net.link_elem(l));
                m.lp.add_entry(row, m.flow_col(b, e, 2 * l), coeff);
                m.lp.add_entry(row, m.flow_col(b, e, 2 * l + 1), coeff);
            }
        }
    }
    return m;
}

namespace {

constexpr double kMassEps = 1e-10;

struct Remainder {
    double root = 0;
    std::vector<std::vector<double>> vnode;  // [q-1][v]
    std::vector<std::vector<double>> flow;   // [e][arc]
};

// first positive-flow simple path src -> dst in (neighbor id, link id) DFS
// order; empty path when src == dst
bool find_path(const SubstrateNetwork& net, const std::vector<double>& flow, NodeIdx src,
               NodeIdx dst, std::vector<model::LinkIdx>& out) {
    out.clear();
    if (src == dst) return true;
    std::vector<char> visited(net.node_count(), 0);
    std::vector<model::LinkIdx> stack;
    std::function<bool(NodeIdx)> dfs = [&](NodeIdx at) -> bool {
        if (at == dst) return true;
        visited[at] = 1;
        for (auto [w, l] : net.adj[at]) {
            if (visited[w]) continue;
            int arc = 2 * l + (net.links[l].a == at ? 0 : 1);
            if (flow[arc] <= kMassEps) continue;
            stack.push_back(l);
            if (dfs(w)) return true;
            stack.pop_back();
        }
        return false;
    };
    if (!dfs(src)) return false;
    out = stack;
    return true;
}

}  // namespace

Plan extract_templates(const PvneModel& m, const lp::SolveResult& sol,
                       const SubstrateNetwork& net, const std::vector<Application>& apps,
                       const EfficiencyMap& eta, const std::vector<AggregateRequest>& aggs,
                       const PlanConfig& cfg) {
    Plan plan;
    plan.config = cfg;
    plan.lp_objective = sol.objective;
    plan.aggregates.resize(aggs.size());
    for (size_t ai = 0; ai < aggs.size(); ++ai) plan.aggregates[ai].agg = aggs[ai];

    for (const auto& b : m.blocks) {
        PlanAggregate& pa = plan.aggregates[b.agg];
        const Application& app = apps.at(pa.agg.app);

        Remainder rem;
        rem.root = std::max(0.0, sol.x[b.root_col]);
        rem.vnode.assign(b.nv - 1, std::vector<double>(m.V, 0.0));
        for (int q = 1; q < b.nv; ++q)
            for (NodeIdx v = 0; v < m.V; ++v) {
                double val = sol.x[m.vnode_col(b, q, v)];
                rem.vnode[q - 1][v] = val > kMassEps ? val : 0.0;
            }
        rem.flow.assign(b.nl, std::vector<double>(2 * m.L, 0.0));
        for (int e = 0; e < b.nl; ++e)
            for (int a = 0; a < 2 * m.L; ++a) {
                double val = sol.x[m.flow_col(b, e, a)];
                rem.flow[e][a] = val > kMassEps ? val : 0.0;
            }
        pa.allocated_fraction = rem.root;

        // vlinks in parent-before-child order
        std::vector<int> order;
        {
            std::vector<char> placed(b.nv, 0);
            placed[app.root()] = 1;
            std::vector<char> done(b.nl, 0);
            for (int round = 0; round < b.nl; ++round)
                for (int e = 0; e < b.nl; ++e)
                    if (!done[e] && placed[app.vlinks[e].parent]) {
                        done[e] = 1;
                        placed[app.vlinks[e].child] = 1;
                        order.push_back(e);
                    }
            invariant(static_cast<int>(order.size()) == b.nl, "plan: vlinks are not a rooted tree");
        }

        size_t guard = 0, guard_max = 16 + 4 * static_cast<size_t>(m.lp.num_cols() / std::max(1, (int)m.blocks.size()));
        while (rem.root > kMassEps) {
            if (++guard > guard_max) break;
            model::Embedding emb;
            emb.node_map.assign(b.nv, -1);
            emb.link_paths.assign(b.nl, {});
            emb.node_map[app.root()] = pa.agg.origin;
            double w = rem.root;
            bool ok = true;
            for (int e : order) {
                int i = app.vlinks[e].parent, j = app.vlinks[e].child;
                NodeIdx src = emb.node_map[i];
                bool found = false;
                for (NodeIdx host = 0; host < m.V && !found; ++host) {
                    if (rem.vnode[j - 1][host] <= kMassEps) continue;
                    if (find_path(net, rem.flow[e], src, host, emb.link_paths[e])) {
                        emb.node_map[j] = host;
                        found = true;
                    }
                }
                if (!found) {
                    ok = false;
                    break;
                }
                w = std::min(w, rem.vnode[j - 1][emb.node_map[j]]);
                NodeIdx at = src;
                for (model::LinkIdx l : emb.link_paths[e]) {
                    int arc = 2 * l + (net.links[l].a == at ? 0 : 1);
                    w = std::min(w, rem.flow[e][arc]);
                    at = (net.links[l].a == at) ? net.links[l].b : net.links[l].a;
                }
            }
            if (!ok || w <= kMassEps) break;

            // subtract the template everywhere it draws mass
            rem.root -= w;
            for (int e : order) {
                int j = app.vlinks[e].child;
                auto& mass = rem.vnode[j - 1][emb.node_map[j]];
                mass -= w;
                if (mass < kMassEps) mass = 0;
                NodeIdx at = emb.node_map[app.vlinks[e].parent];
                for (model::LinkIdx l : emb.link_paths[e]) {
                    int arc = 2 * l + (net.links[l].a == at ? 0 : 1);
                    rem.flow[e][arc] -= w;
                    if (rem.flow[e][arc] < kMassEps) rem.flow[e][arc] = 0;
                    at = (net.links[l].a == at) ? net.links[l].b : net.links[l].a;
                }
            }
            if (rem.root < kMassEps) rem.root = 0;

            Template t;
            t.emb = std::move(emb);
            t.weight = w;
            t.unit = model::unit_loads(net, app, eta, pa.agg.app, t.emb);
            pa.templates.push_back(std::move(t));
        }
        pa.undecomposed = rem.root;
        if (pa.undecomposed > 1e-4)
            throw InvariantError("plan decomposition left " + std::to_string(pa.undecomposed) +
                                 " unassigned mass (flow conservation bug)");
    }
    return plan;
}

Plan build_plan(const SubstrateNetwork& net, const std::vector<Application>& apps,
                const EfficiencyMap& eta, const std::vector<Request>& history,
                int history_slots, const PlanConfig& cfg, PlanBuildInfo* info) {
    std::vector<AggregateRequest> aggs = aggregate_history(history, history_slots);
    Rng rng(mix_seed(cfg.seed, 0x626f6f74));
    for (auto& agg : aggs) {
        BootstrapEstimate est = bootstrap_expected_demand(agg.demand_series, cfg, rng);
        agg.expected_demand = est.estimate;
        agg.ci_lo = est.ci_lo;
        agg.ci_hi = est.ci_hi;
        agg.psi = cfg.psi_override >= 0 ? cfg.psi_override
                                        : default_psi(apps.at(agg.app), agg.app, eta, net);
    }
    PvneModel m = build_pvne(net, apps, eta, aggs, cfg);
    auto t0 = std::chrono::steady_clock::now();
    lp::SolveResult sol = lp::solve(m.lp);
    auto t1 = std::chrono::steady_clock::now();
    if (sol.status != lp::SolveStatus::Optimal)
        throw SolverError("plan LP did not reach a certified optimum (status " +
                          std::to_string(static_cast<int>(sol.status)) + ", " +
                          std::to_string(sol.iterations) + " iterations)");
    if (info) {
        info->lp_objective = sol.objective;
        info->lp_iterations = sol.iterations;
        info->solve_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        info->variables = m.lp.num_cols();
        info->constraints = m.lp.num_rows();
    }
    return extract_templates(m, sol, net, apps, eta, aggs, cfg);
}

using nlohmann::json;

void plan_to_json(const Plan& plan, const SubstrateNetwork& net, std::ostream& os) {
    json j;
    j["alpha"] = plan.config.alpha;
    j["quantiles"] = plan.config.quantiles;
    j["bootstrap_resamples"] = plan.config.bootstrap_resamples;
    j["psi_override"] = plan.config.psi_override;
    j["seed"] = plan.config.seed;
    j["lp_objective"] = plan.lp_objective;
    j["substrate"] = net.name;
    j["aggregates"] = json::array();
    for (const auto& pa : plan.aggregates) {
        json ja{{"app", pa.agg.app},
                {"origin", net.nodes[pa.agg.origin].id},
                {"expected_demand", pa.agg.expected_demand},
                {"ci", json::array({pa.agg.ci_lo, pa.agg.ci_hi})},
                {"psi", pa.agg.psi},
                {"allocated_fraction", pa.allocated_fraction},
                {"undecomposed", pa.undecomposed}};
        ja["templates"] = json::array();
        for (const auto& t : pa.templates) {
            json jt{{"weight", t.weight}};
            jt["nodes"] = json::array();
            for (NodeIdx v : t.emb.node_map) jt["nodes"].push_back(net.nodes[v].id);
            jt["paths"] = json::array();
            for (const auto& path : t.emb.link_paths) {
                json jp = json::array();
                for (model::LinkIdx l : path) jp.push_back(net.links[l].id);
                jt["paths"].push_back(jp);
            }
            ja["templates"].push_back(jt);
        }
        j["aggregates"].push_back(ja);
    }
    os << j.dump(1) << "\n";
}

Plan plan_from_json(std::istream& is, const SubstrateNetwork& net,
                    const std::vector<Application>& apps, const EfficiencyMap& eta) {
    json j = json::parse(is);
    Plan plan;
    plan.config.alpha = j.at("alpha").get<double>();
    plan.config.quantiles = j.at("quantiles").get<int>();
    plan.config.bootstrap_resamples = j.at("bootstrap_resamples").get<int>();
    plan.config.psi_override = j.at("psi_override").get<double>();
    plan.config.seed = j.at("seed").get<uint64_t>();
    plan.lp_objective = j.at("lp_objective").get<double>();

    std::unordered_map<std::string, model::LinkIdx> link_by_id;
    for (model::LinkIdx l = 0; l < net.link_count(); ++l) link_by_id[net.links[l].id] = l;

    for (const auto& ja : j.at("aggregates")) {
        PlanAggregate pa;
        pa.agg.app = ja.at("app").get<int>();
        pa.agg.origin = net.node_index(ja.at("origin").get<std::string>());
        pa.agg.expected_demand = ja.at("expected_demand").get<double>();
        pa.agg.ci_lo = ja.at("ci")[0].get<double>();
        pa.agg.ci_hi = ja.at("ci")[1].get<double>();
        pa.agg.psi = ja.at("psi").get<double>();
        pa.allocated_fraction = ja.at("allocated_fraction").get<double>();
        pa.undecomposed = ja.at("undecomposed").get<double>();
        const Application& app = apps.at(pa.agg.app);
        for (const auto& jt : ja.at("templates")) {
            Template t;
            t.weight = jt.at("weight").get<double>();
            for (const auto& jn : jt.at("nodes"))
                t.emb.node_map.push_back(net.node_index(jn.get<std::string>()));
            for (const auto& jp : jt.at("paths")) {
                std::vector<model::LinkIdx> path;
                for (const auto& jl : jp) path.push_back(link_by_id.at(jl.get<std::string>()));
                t.emb.link_paths.push_back(std::move(path));
            }
            model::validate_embedding(net, app, t.emb, pa.agg.origin);
            t.unit = model::unit_loads(net, app, eta, pa.agg.app, t.emb);
            pa.templates.push_back(std::move(t));
        }
        plan.aggregates.push_back(std::move(pa));
    }
    return plan;
}

}  // namespace olive::planner
