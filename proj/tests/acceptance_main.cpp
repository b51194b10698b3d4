// Acceptance suite: every release criterion runs end to end and prints one
// pass/fail line. Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "olive/baselines.hpp"
#include "olive/engine.hpp"
#include "olive/experiment.hpp"
#include "olive/metrics.hpp"
#include "olive/planner.hpp"
#include "olive/workload.hpp"
#include "support/fixture.hpp"
#include "support/lp_check.hpp"
#include "support/oracles.hpp"

using namespace olive;
using testsupport::make_scenario;
using testsupport::make_two_node;

namespace {

int failures = 0;

void report(const char* id, bool pass, const std::string& detail) {
    std::printf("[%s] %s: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

struct Stats {
    double mean = 0, ci95 = 0;
    size_t n = 0;
};

Stats stats_of(const std::vector<double>& v) {
    Stats s;
    s.n = v.size();
    for (double x : v) s.mean += x;
    s.mean /= v.size();
    if (v.size() > 1) {
        double var = 0;
        for (double x : v) var += (x - s.mean) * (x - s.mean);
        var /= (v.size() - 1);
        s.ci95 = 1.96 * std::sqrt(var / v.size());
    }
    return s;
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    vsnprintf(buf, sizeof buf, f, args);
    va_end(args);
    return buf;
}

// ---- random small PVNE instances shared by criteria 3 and 4 ----

struct SmallInstance {
    model::SubstrateNetwork net;
    std::vector<model::Application> apps;
    model::EfficiencyMap eta;
    std::vector<planner::AggregateRequest> aggs;
};

SmallInstance small_instance(uint64_t seed) {
    Rng rng(seed);
    SmallInstance ri;
    int nodes = 4 + int(rng.below(3));
    for (int v = 0; v < nodes; ++v)
        ri.net.nodes.push_back({"n" + std::to_string(v), model::Tier::Edge,
                                rng.uniform(400, 4000), rng.uniform(1, 20), false});
    for (int v = 1; v < nodes; ++v)
        ri.net.links.push_back({"l" + std::to_string(v - 1), int(rng.below(v)), v,
                                model::Tier::Edge, rng.uniform(300, 3000), rng.uniform(0.2, 3)});
    if (rng.uniform() < 0.6 && nodes > 2)
        ri.net.links.push_back({"x0", 0, nodes - 1, model::Tier::Edge, rng.uniform(300, 3000),
                                rng.uniform(0.2, 3)});
    ri.net.name = "small" + std::to_string(seed);
    ri.net.finalize();

    int napps = 1 + int(rng.below(2));
    for (int a = 0; a < napps; ++a) {
        model::Application app;
        app.id = "app" + std::to_string(a);
        app.vnodes.push_back({"u", 0.0});
        int vnfs = 1 + int(rng.below(3));
        for (int i = 1; i <= vnfs; ++i) {
            app.vnodes.push_back({"f" + std::to_string(i), rng.uniform(5, 60)});
            app.vlinks.push_back({i - 1, i, rng.uniform(5, 60)});
        }
        app.validate();
        ri.apps.push_back(app);
    }
    int naggs = 2 + int(rng.below(4));
    for (int k = 0; k < naggs; ++k) {
        planner::AggregateRequest agg;
        agg.app = int(rng.below(ri.apps.size()));
        agg.origin = int(rng.below(nodes));
        agg.expected_demand = rng.uniform(2, 30);
        bool dup = false;
        for (auto& other : ri.aggs)
            if (other.app == agg.app && other.origin == agg.origin) dup = true;
        if (dup) continue;
        agg.psi = planner::default_psi(ri.apps[agg.app], agg.app, ri.eta, ri.net);
        ri.aggs.push_back(agg);
    }
    return ri;
}

std::vector<double> solution_loads(const planner::PvneModel& m, const lp::SolveResult& sol,
                                   const model::SubstrateNetwork& net,
                                   const std::vector<model::Application>& apps,
                                   const model::EfficiencyMap& eta,
                                   const std::vector<planner::AggregateRequest>& aggs) {
    std::vector<double> load(net.element_count(), 0.0);
    for (const auto& b : m.blocks) {
        const auto& agg = aggs[b.agg];
        const auto& app = apps[agg.app];
        for (int q = 1; q < b.nv; ++q)
            for (model::NodeIdx v = 0; v < net.node_count(); ++v) {
                double e = eta.eta(agg.app, q, net.node_elem(v));
                if (std::isinf(e)) continue;
                load[net.node_elem(v)] +=
                    agg.expected_demand * sol.x[m.vnode_col(b, q, v)] * app.vnodes[q].size * e;
            }
        for (int e = 0; e < b.nl; ++e)
            for (int l = 0; l < net.link_count(); ++l) {
                double ef = eta.eta(agg.app, b.nv + e, net.link_elem(l));
                if (std::isinf(ef)) continue;
                load[net.link_elem(l)] +=
                    agg.expected_demand *
                    (sol.x[m.flow_col(b, e, 2 * l)] + sol.x[m.flow_col(b, e, 2 * l + 1)]) *
                    app.vlinks[e].size * ef;
            }
    }
    return load;
}

// ---- the standard desk-scale scenario for the statistical criteria ----

constexpr double kLambda = 5.0;
constexpr int kHistory = 400;
constexpr int kTest = 360;
const metrics::Window kWindow{60, 359};

struct CellRun {
    metrics::RunReport report;
    double runtime_ms = 0;
};

CellRun run_algo(const testsupport::Scenario& s, const std::string& algo,
                 const planner::Plan* plan, int slots, const metrics::Window& win) {
    engine::RunResult run;
    if (algo == "olive") {
        engine::EngineConfig cfg;
        cfg.verify_each_slot = true;
        run = engine::run(s.net, s.apps.apps, s.eta, *plan, s.test, slots, cfg);
    } else if (algo == "quickg") {
        run = baselines::run_quickg(s.net, s.apps.apps, s.eta, s.test, slots, true);
    } else {
        baselines::SlotoffConfig cfg;
        cfg.verify = true;
        run = baselines::run_slotoff(s.net, s.apps.apps, s.eta, s.test, slots, cfg);
    }
    CellRun out;
    out.runtime_ms = run.runtime_ms;
    out.report =
        metrics::build_report(run, s.test, s.net, int(s.apps.apps.size()), s.psi, win);
    return out;
}

// ---- criteria ----

void c1_capacity_safety() {
    auto t0 = std::chrono::steady_clock::now();
    long violations = 0;
    int runs = 0;
    try {
        for (uint64_t seed : {1, 2}) {
            for (double util : {1.0, 1.4}) {
                auto s = make_scenario(seed, util, kLambda, kHistory, 600);
                planner::PlanConfig pc;
                pc.seed = mix_seed(seed, 0x91A0);
                auto plan = planner::build_plan(s.net, s.apps.apps, s.eta, s.history,
                                                s.tspec.history_slots, pc);
                for (const char* algo : {"olive", "quickg", "slotoff"}) {
                    engine::RunResult run;
                    if (std::string(algo) == "olive") {
                        engine::EngineConfig cfg;
                        cfg.verify_each_slot = true;
                        run = engine::run(s.net, s.apps.apps, s.eta, plan, s.test, 600, cfg);
                    } else if (std::string(algo) == "quickg") {
                        run = baselines::run_quickg(s.net, s.apps.apps, s.eta, s.test, 600, true);
                    } else {
                        baselines::SlotoffConfig cfg;
                        cfg.verify = true;
                        run = baselines::run_slotoff(s.net, s.apps.apps, s.eta, s.test, 600, cfg);
                    }
                    ++runs;
                    for (int t = 0; t < run.slots; ++t)
                        for (model::ElemIdx e = 0; e < s.net.element_count(); ++e)
                            if (run.slot_loads[t][e] > s.net.capacity(e) + kResidualEps)
                                ++violations;
                }
            }
        }
    } catch (const std::exception& e) {
        report("C1 capacity-safety", false, std::string("aborted: ") + e.what());
        return;
    }
    double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool pass = violations == 0 && runs == 12 && secs < 300.0;
    report("C1 capacity-safety", pass,
           fmt("%d runs x 600 slots, %ld violations (eps 1e-9 CU), %.0fs of 300s budget", runs,
               violations, secs));
}

void c2_lp_correctness() {
    auto t = make_two_node();
    planner::AggregateRequest agg;
    agg.app = 0;
    agg.origin = 0;
    agg.expected_demand = 10.0;
    agg.psi = planner::default_psi(t.apps[0], 0, t.eta, t.net);
    planner::PlanConfig cfg;
    auto m = planner::build_pvne(t.net, t.apps, t.eta, {agg}, cfg);
    auto sol = lp::solve(m.lp);
    bool obj_ok = sol.status == lp::SolveStatus::Optimal &&
                  std::abs(sol.objective - 1000.0) <= 1e-5;

    auto t2 = make_two_node(250.0);
    t2.eta.forbid(0, 1, t2.net.node_elem(0));
    planner::AggregateRequest agg2 = agg;
    agg2.psi = 100.0;
    planner::PlanConfig cfg2;
    cfg2.quantiles = 2;
    auto m2 = planner::build_pvne(t2.net, t2.apps, t2.eta, {agg2}, cfg2);
    auto sol2 = lp::solve(m2.lp);
    double alloc = sol2.x[m2.blocks[0].root_col];
    double rejection = agg2.psi * agg2.expected_demand *
                       (1 * sol2.x[m2.layer_col(m2.blocks[0], 1)] +
                        2 * sol2.x[m2.layer_col(m2.blocks[0], 2)]);
    bool quant_ok = sol2.status == lp::SolveStatus::Optimal &&
                    std::abs(alloc - 0.5) <= 1e-6 && std::abs(rejection - 500.0) <= 1e-4;
    report("C2 lp-correctness", obj_ok && quant_ok,
           fmt("two-node objective %.9f (want 1000 +- 1e-5); allocated %.9f (want 0.5 +- 1e-6), "
               "rejection cost %.7f (want 500 +- 1e-4)",
               sol.objective, alloc, rejection));
}

void c3_c4_waterfill_and_templates() {
    int instances = 0;
    int wf_bad = 0, recon_bad = 0;
    double worst_resid = 0, worst_recon = 0;
    planner::PlanConfig cfg;
    cfg.quantiles = 10;
    for (uint64_t seed = 1; instances < 50; ++seed) {
        auto ri = small_instance(seed);
        if (ri.aggs.empty()) continue;
        ++instances;
        auto m = planner::build_pvne(ri.net, ri.apps, ri.eta, ri.aggs, cfg);
        auto sol = lp::solve(m.lp);
        if (sol.status != lp::SolveStatus::Optimal) {
            ++wf_bad;
            continue;
        }
        for (const auto& b : m.blocks)
            for (int p = 1; p <= cfg.quantiles; ++p)
                if (sol.x[m.layer_col(b, p)] > 1e-6)
                    for (int q = 1; q < p; ++q)
                        if (std::abs(sol.x[m.layer_col(b, q)] - 0.1) > 1e-6) ++wf_bad;

        auto plan = planner::extract_templates(m, sol, ri.net, ri.apps, ri.eta, ri.aggs, cfg);
        auto lp_load = solution_loads(m, sol, ri.net, ri.apps, ri.eta, ri.aggs);
        std::vector<double> tpl_load(ri.net.element_count(), 0.0);
        for (const auto& pa : plan.aggregates) {
            worst_resid = std::max(worst_resid, pa.undecomposed);
            for (const auto& tp : pa.templates)
                for (const auto& ul : tp.unit)
                    tpl_load[ul.elem] += tp.weight * pa.agg.expected_demand * ul.cu;
        }
        for (model::ElemIdx s = 0; s < ri.net.element_count(); ++s) {
            double rel = std::abs(tpl_load[s] - lp_load[s]) / (1.0 + std::abs(lp_load[s]));
            worst_recon = std::max(worst_recon, rel);
            if (rel > 1e-6) ++recon_bad;
        }
    }
    report("C3 water-filling", wf_bad == 0,
           fmt("%d instances at P=10, %d quantile violations beyond 1e-6", instances, wf_bad));
    report("C4 template-fidelity", recon_bad == 0 && worst_resid < 1e-6,
           fmt("%d instances: worst load mismatch %.2e (tol 1e-6 rel), worst undecomposed "
               "%.2e (tol 1e-6)",
               instances, worst_recon, worst_resid));
}

void c5_greedy_oracle() {
    int mismatches = 0, found = 0;
    for (uint64_t seed = 1; seed <= 100; ++seed) {
        Rng rng(seed);
        model::SubstrateNetwork net;
        net.name = "g";
        const int nodes = 5;
        for (int v = 0; v < nodes; ++v)
            net.nodes.push_back({"n" + std::to_string(v), model::Tier::Edge,
                                 rng.uniform(100, 2000), rng.uniform(0.5, 40), false});
        for (int v = 1; v < nodes; ++v)
            net.links.push_back({"l" + std::to_string(v), int(rng.below(v)), v,
                                 model::Tier::Edge, rng.uniform(100, 1500),
                                 rng.uniform(0.2, 4)});
        if (rng.uniform() < 0.7)
            net.links.push_back(
                {"x", 0, 4, model::Tier::Edge, rng.uniform(100, 1500), rng.uniform(0.2, 4)});
        net.finalize();
        model::Application app;
        app.id = "a";
        app.vnodes.push_back({"u", 0.0});
        int vnfs = 1 + int(rng.below(3));
        for (int i = 1; i <= vnfs; ++i) {
            app.vnodes.push_back({"f" + std::to_string(i), rng.uniform(2, 30)});
            app.vlinks.push_back({i - 1, i, rng.uniform(2, 30)});
        }
        app.validate();
        model::EfficiencyMap eta;
        if (rng.uniform() < 0.3) eta.forbid(0, 1, net.node_elem(int(rng.below(nodes))));
        model::LoadLedger ledger(net);
        for (model::ElemIdx s = 0; s < net.element_count(); ++s)
            if (rng.uniform() < 0.5)
                ledger.allocate({1000 + s, 1.0, 100, false,
                                 {{s, rng.uniform(0.0, net.capacity(s) * 0.9)}}});
        model::Request r{0, 0, int(rng.below(nodes)), rng.uniform(0.5, 4), 0, 1};
        auto mine = engine::greedy_embed(r, app, eta, net, ledger);
        auto oracle = testsupport::greedy_oracle(r, app, eta, net, ledger);
        if (mine.has_value() != oracle.has_value()) {
            ++mismatches;
            continue;
        }
        if (mine) {
            ++found;
            if (mine->cost != *oracle) ++mismatches;
        }
    }
    report("C5 greedy-vs-oracle", mismatches == 0,
           fmt("100 five-node instances, %d embedded, %d mismatches (exact comparison)", found,
               mismatches));
}

struct SweepResult {
    std::vector<double> olive_rej, quickg_rej, slotoff_rej;
    std::vector<double> balance_p1, balance_p10;
};

void c6_c7_c8_statistics() {
    const int seeds = 30;
    SweepResult high, low;
    try {
        for (int seed = 1; seed <= seeds; ++seed) {
            // 140% cells: plan-based at P=10 and P=1, plus the greedy baseline
            auto s = make_scenario(seed, 1.4, kLambda, kHistory, kTest);
            planner::PlanConfig p10;
            p10.seed = mix_seed(seed, 0x91A0);
            auto plan10 = planner::build_plan(s.net, s.apps.apps, s.eta, s.history,
                                              s.tspec.history_slots, p10);
            planner::PlanConfig p1 = p10;
            p1.quantiles = 1;
            auto plan1 = planner::build_plan(s.net, s.apps.apps, s.eta, s.history,
                                             s.tspec.history_slots, p1);
            auto olive10 = run_algo(s, "olive", &plan10, kTest, kWindow);
            auto olive1 = run_algo(s, "olive", &plan1, kTest, kWindow);
            auto quickg = run_algo(s, "quickg", nullptr, kTest, kWindow);
            high.olive_rej.push_back(olive10.report.rejection_rate_demand);
            high.quickg_rej.push_back(quickg.report.rejection_rate_demand);
            high.balance_p10.push_back(olive10.report.balance_index);
            high.balance_p1.push_back(olive1.report.balance_index);

            // 100% cells: plan-based vs the clairvoyant per-slot baseline
            auto s2 = make_scenario(seed, 1.0, kLambda, kHistory, kTest);
            planner::PlanConfig pc2;
            pc2.seed = mix_seed(seed, 0x91A0);
            auto plan2 = planner::build_plan(s2.net, s2.apps.apps, s2.eta, s2.history,
                                             s2.tspec.history_slots, pc2);
            low.olive_rej.push_back(
                run_algo(s2, "olive", &plan2, kTest, kWindow).report.rejection_rate_demand);
            low.slotoff_rej.push_back(
                run_algo(s2, "slotoff", nullptr, kTest, kWindow).report.rejection_rate_demand);
        }
    } catch (const std::exception& e) {
        report("C6 plan-benefit", false, std::string("aborted: ") + e.what());
        report("C7 near-lower-bound", false, "aborted");
        report("C8 quantile-fairness", false, "aborted");
        return;
    }

    Stats o = stats_of(high.olive_rej), q = stats_of(high.quickg_rej);
    bool direction = o.mean < q.mean;
    bool margin = (q.mean - o.mean) / q.mean >= 0.10;
    bool separated = o.mean + o.ci95 < q.mean - q.ci95;
    report("C6 plan-benefit", direction && margin && separated,
           fmt("140%% util, %d seeds: plan-based %.4f +- %.4f vs greedy %.4f +- %.4f "
               "(relative gap %.0f%%, CIs %s)",
               seeds, o.mean, o.ci95, q.mean, q.ci95, 100 * (q.mean - o.mean) / q.mean,
               separated ? "disjoint" : "overlap"));

    Stats lo = stats_of(low.olive_rej), ls = stats_of(low.slotoff_rej);
    bool near = lo.mean - ls.mean <= 0.05;
    report("C7 near-lower-bound", near,
           fmt("100%% util, %d seeds: online %.4f vs clairvoyant per-slot %.4f "
               "(gap %.2f pp, limit 5 pp)",
               seeds, lo.mean, ls.mean, 100 * (lo.mean - ls.mean)));

    Stats b1 = stats_of(high.balance_p1), b10 = stats_of(high.balance_p10);
    report("C8 quantile-fairness", b10.mean - b1.mean >= 0.10,
           fmt("140%% util, %d seeds: balance %.3f at P=10 vs %.3f at P=1 (diff %.3f, need "
               ">= 0.10)",
               seeds, b10.mean, b1.mean, b10.mean - b1.mean));
}

void c9_runtime_scaling() {
    std::vector<double> rates{5.0, 10.0, 20.0};
    std::vector<double> runtime;
    try {
        for (double rate : rates) {
            auto s = make_scenario(7, 1.0, rate, kHistory, kTest);
            planner::PlanConfig pc;
            pc.seed = 77;
            auto plan = planner::build_plan(s.net, s.apps.apps, s.eta, s.history,
                                            s.tspec.history_slots, pc);
            double best = 1e300;
            for (int rep = 0; rep < 3; ++rep) {
                auto run = engine::run(s.net, s.apps.apps, s.eta, plan, s.test, kTest, {});
                best = std::min(best, run.runtime_ms);
            }
            runtime.push_back(best);
        }
    } catch (const std::exception& e) {
        report("C9 runtime-scaling", false, std::string("aborted: ") + e.what());
        return;
    }
    double r1 = runtime[1] / runtime[0], r2 = runtime[2] / runtime[1];
    report("C9 runtime-scaling", r1 <= 2.5 && r2 <= 2.5,
           fmt("rate 5/10/20 per node: %.1f / %.1f / %.1f ms; doubling ratios %.2f and %.2f "
               "(limit 2.5)",
               runtime[0], runtime[1], runtime[2], r1, r2));
}

void c10_bootstrap_calibration() {
    const double z80 = 0.8416212335729143;
    const double true_q = 100.0 + 20.0 * z80;
    const int trials = 200, n = 300;
    int covered = 0;
    planner::PlanConfig cfg;  // alpha 80, 1000 resamples
    Rng data_rng(0xB00757AA);
    for (int trial = 0; trial < trials; ++trial) {
        std::vector<double> series(n);
        for (int i = 0; i < n; ++i) series[i] = data_rng.normal(100.0, 20.0);
        Rng boot_rng(mix_seed(0xB00757AA, trial));
        auto est = planner::bootstrap_expected_demand(series, cfg, boot_rng);
        if (est.ci_lo <= true_q && true_q <= est.ci_hi) ++covered;
    }
    report("C10 bootstrap-calibration", covered >= 180,
           fmt("95%% interval covered the true 80th percentile in %d of %d stationary trials "
               "(need >= 180)",
               covered, trials));
}

void c11_determinism() {
    namespace fs = std::filesystem;
    auto slurp = [](const fs::path& p) {
        std::ifstream f(p);
        std::stringstream ss;
        ss << f.rdbuf();
        return ss.str();
    };
    fs::path base = fs::temp_directory_path() / "olive_acceptance_det";
    std::error_code ec;
    fs::remove_all(base, ec);
    bool pass = true;
    std::string detail;
    try {
        std::vector<std::string> dumps;
        for (int rep = 0; rep < 2; ++rep) {
            experiment::ExperimentConfig cfg;
            cfg.out_dir = (base / ("rep" + std::to_string(rep))).string();
            cfg.topology_seed = 7;
            cfg.trace.history_slots = 120;
            cfg.trace.test_slots = 100;
            cfg.trace.lambda_per_node = 3.0;
            cfg.plan.bootstrap_resamples = 300;
            cfg.algorithms = {"olive", "quickg", "slotoff"};
            cfg.seeds = {1};
            cfg.utilizations = {1.2};
            cfg.window = {20, 99};
            cfg.emit_runtime = false;
            if (experiment::run_pipeline(cfg) != 0) throw std::runtime_error("pipeline failed");
            std::string all;
            for (const auto& algo : cfg.algorithms)
                all += slurp(experiment::events_path(cfg, algo, 1, 1.2));
            all += slurp(experiment::results_path(cfg));
            all += slurp(experiment::plan_path(cfg, 1, 1.2));
            dumps.push_back(all);
        }
        pass = dumps[0] == dumps[1] && !dumps[0].empty();
        detail = fmt("two pipeline replays, %zu bytes of event logs, plans and results: %s",
                     dumps[0].size(), pass ? "byte-identical" : "DIFFER");
    } catch (const std::exception& e) {
        pass = false;
        detail = std::string("aborted: ") + e.what();
    }
    fs::remove_all(base, ec);
    report("C11 determinism", pass, detail);
}

}  // namespace

int main() {
    std::printf("acceptance suite\n================\n");
    auto t0 = std::chrono::steady_clock::now();
    c1_capacity_safety();
    c2_lp_correctness();
    c3_c4_waterfill_and_templates();
    c5_greedy_oracle();
    c6_c7_c8_statistics();
    c9_runtime_scaling();
    c10_bootstrap_calibration();
    c11_determinism();
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("================\n%s (%.0fs total)\n",
                failures ? "FAILURES" : "all criteria passed", secs);
    return failures;
}
