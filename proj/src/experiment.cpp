#include "olive/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "json.hpp"
#include "olive/baselines.hpp"
#include "olive/engine.hpp"

namespace olive::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

uint64_t apps_seed(uint64_t s) { return mix_seed(s, 0xA115); }
uint64_t trace_seed(uint64_t s) { return mix_seed(s, 0x7ACE); }
uint64_t plan_seed(uint64_t s) { return mix_seed(s, 0x91A0); }

namespace {
int util_pct(double u) { return static_cast<int>(std::lround(u * 100)); }

std::string cell_tag(uint64_t seed, double util) {
    return "s" + std::to_string(seed) + "_u" + std::to_string(util_pct(util));
}
}  // namespace

std::string topology_path(const ExperimentConfig& c) { return c.out_dir + "/topology.json"; }
std::string apps_path(const ExperimentConfig& c, uint64_t seed) {
    return c.out_dir + "/apps_s" + std::to_string(seed) + ".json";
}
std::string trace_path(const ExperimentConfig& c, uint64_t seed, double util) {
    return c.out_dir + "/trace_" + cell_tag(seed, util) + ".csv";
}
std::string plan_path(const ExperimentConfig& c, uint64_t seed, double util) {
    return c.out_dir + "/plan_" + cell_tag(seed, util) + ".json";
}
std::string events_path(const ExperimentConfig& c, const std::string& algo, uint64_t seed,
                        double util) {
    return c.out_dir + "/events_" + algo + "_" + cell_tag(seed, util) + ".csv";
}
std::string slots_path(const ExperimentConfig& c, const std::string& algo, uint64_t seed,
                       double util) {
    return c.out_dir + "/slots_" + algo + "_" + cell_tag(seed, util) + ".csv";
}
std::string results_path(const ExperimentConfig& c) { return c.out_dir + "/results.csv"; }
std::string report_path(const ExperimentConfig& c) { return c.out_dir + "/report.csv"; }

ExperimentConfig config_from_json(std::istream& is) {
    json j = json::parse(is);
    ExperimentConfig c;
    if (j.contains("topology")) {
        const auto& t = j["topology"];
        c.topology_preset = t.value("preset", c.topology_preset);
        c.topology_file = t.value("file", c.topology_file);
        c.topology_seed = t.value("seed", c.topology_seed);
    }
    if (j.contains("apps")) {
        const auto& a = j["apps"];
        c.appgen.chains = a.value("chains", c.appgen.chains);
        c.appgen.trees = a.value("trees", c.appgen.trees);
        c.appgen.accelerators = a.value("accelerators", c.appgen.accelerators);
        c.appgen.gpu_chains = a.value("gpu_chains", c.appgen.gpu_chains);
        c.appgen.vnf_lo = a.value("vnf_lo", c.appgen.vnf_lo);
        c.appgen.vnf_hi = a.value("vnf_hi", c.appgen.vnf_hi);
        c.appgen.elem_size_mean = a.value("elem_size_mean", c.appgen.elem_size_mean);
        c.appgen.elem_size_std = a.value("elem_size_std", c.appgen.elem_size_std);
        c.appgen.accel_link_factor = a.value("accel_link_factor", c.appgen.accel_link_factor);
    }
    if (j.contains("trace")) {
        const auto& t = j["trace"];
        c.trace.history_slots = t.value("history_slots", c.trace.history_slots);
        c.trace.test_slots = t.value("test_slots", c.trace.test_slots);
        c.trace.lambda_per_node = t.value("lambda_per_node", c.trace.lambda_per_node);
        c.trace.size_mean = t.value("size_mean", c.trace.size_mean);
        c.trace.size_std = t.value("size_std", c.trace.size_std);
        c.trace.duration_mean = t.value("duration_mean", c.trace.duration_mean);
        c.trace.zipf_alpha = t.value("zipf_alpha", c.trace.zipf_alpha);
        if (t.contains("mmpp")) {
            const auto& m = t["mmpp"];
            c.trace.mmpp.high_factor = m.value("high_factor", c.trace.mmpp.high_factor);
            c.trace.mmpp.low_factor = m.value("low_factor", c.trace.mmpp.low_factor);
            c.trace.mmpp.p_high_to_low = m.value("p_high_to_low", c.trace.mmpp.p_high_to_low);
            c.trace.mmpp.p_low_to_high = m.value("p_low_to_high", c.trace.mmpp.p_low_to_high);
        }
    }
    if (j.contains("plan")) {
        const auto& p = j["plan"];
        c.plan.alpha = p.value("alpha", c.plan.alpha);
        c.plan.bootstrap_resamples = p.value("bootstrap_resamples", c.plan.bootstrap_resamples);
        c.plan.quantiles = p.value("quantiles", c.plan.quantiles);
        c.plan.psi_override = p.value("psi", c.plan.psi_override);
    }
    if (j.contains("simulate")) {
        const auto& s = j["simulate"];
        if (s.contains("algorithms")) c.algorithms = s["algorithms"].get<std::vector<std::string>>();
        if (s.contains("seeds")) c.seeds = s["seeds"].get<std::vector<uint64_t>>();
        if (s.contains("utilizations"))
            c.utilizations = s["utilizations"].get<std::vector<double>>();
        if (s.contains("window"))
            c.window = {s["window"][0].get<int>(), s["window"][1].get<int>()};
        c.jobs = s.value("jobs", c.jobs);
        c.verify = s.value("verify", c.verify);
        c.emit_runtime = s.value("emit_runtime", c.emit_runtime);
        c.fullg_budget = s.value("fullg_budget", c.fullg_budget);
    }
    c.out_dir = j.value("out_dir", c.out_dir);
    std::set<uint64_t> uniq(c.seeds.begin(), c.seeds.end());
    if (uniq.size() != c.seeds.size()) throw std::runtime_error("config: seeds must be unique");
    return c;
}

ExperimentConfig config_from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw MissingArtifactError("config file not found: " + path);
    ExperimentConfig c = config_from_json(f);
    apply_env_overrides(c);
    return c;
}

void apply_env_overrides(ExperimentConfig& cfg) {
    if (const char* s = std::getenv("OLIVE_SEEDS")) {
        cfg.seeds.clear();
        std::stringstream ss(s);
        std::string tok;
        while (std::getline(ss, tok, ',')) cfg.seeds.push_back(std::stoull(tok));
    }
    if (const char* o = std::getenv("OLIVE_OUT")) cfg.out_dir = o;
}

namespace {

model::SubstrateNetwork load_topology(const ExperimentConfig& cfg) {
    std::string path = cfg.topology_file.empty() ? topology_path(cfg) : cfg.topology_file;
    std::ifstream f(path);
    if (!f) throw MissingArtifactError("topology not found: " + path +
                                       " (run gen-topology first)");
    return workload::topology_from_json(f);
}

std::pair<workload::AppSet, model::EfficiencyMap> load_apps(const ExperimentConfig& cfg,
                                                            uint64_t seed,
                                                            const model::SubstrateNetwork& net) {
    std::ifstream f(apps_path(cfg, seed));
    if (!f)
        throw MissingArtifactError("apps not found: " + apps_path(cfg, seed) +
                                   " (run gen-trace first)");
    return workload::apps_from_json(f, net);
}

workload::Trace load_trace(const ExperimentConfig& cfg, uint64_t seed, double util,
                           const model::SubstrateNetwork& net) {
    std::ifstream f(trace_path(cfg, seed, util));
    if (!f)
        throw MissingArtifactError("trace not found: " + trace_path(cfg, seed, util) +
                                   " (run gen-trace first)");
    workload::Trace t = workload::trace_from_csv(f, net);
    t.spec = cfg.trace;
    return t;
}

std::vector<model::Request> test_segment(const workload::Trace& trace, int history_slots) {
    std::vector<model::Request> out;
    for (const auto& r : trace.requests)
        if (r.arrival >= history_slots) {
            model::Request c = r;
            c.arrival -= history_slots;
            out.push_back(c);
        }
    return out;
}

std::vector<model::Request> history_segment(const workload::Trace& trace, int history_slots) {
    std::vector<model::Request> out;
    for (const auto& r : trace.requests)
        if (r.arrival < history_slots) out.push_back(r);
    return out;
}

std::vector<double> resolve_app_psi(const ExperimentConfig& cfg, const workload::AppSet& apps,
                                    const model::EfficiencyMap& eta,
                                    const model::SubstrateNetwork& net) {
    std::vector<double> psi(apps.apps.size(), cfg.plan.psi_override);
    if (cfg.plan.psi_override < 0)
        for (size_t a = 0; a < apps.apps.size(); ++a)
            psi[a] = planner::default_psi(apps.apps[a], static_cast<int>(a), eta, net);
    return psi;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const SolverError*>(&e)) return 2;
    if (dynamic_cast<const MissingArtifactError*>(&e)) return 3;
    if (dynamic_cast<const InvariantError*>(&e)) return 4;
    return 1;
}

struct Cell {
    std::string algo;
    uint64_t seed;
    double util;
};

std::string cell_key(const std::string& algo, uint64_t seed, double util) {
    return algo + "," + std::to_string(seed) + "," + std::to_string(util_pct(util));
}

}  // namespace

int run_gen_topology(const ExperimentConfig& cfg) {
    try {
        fs::create_directories(cfg.out_dir);
        model::SubstrateNetwork net;
        if (!cfg.topology_file.empty()) {
            std::ifstream f(cfg.topology_file);
            if (!f) throw MissingArtifactError("topology file not found: " + cfg.topology_file);
            net = workload::topology_from_json(f);
        } else {
            auto spec = workload::preset_topology(cfg.topology_preset);
            if (!spec) throw std::runtime_error("unknown preset: " + cfg.topology_preset);
            spec->seed = cfg.topology_seed;
            net = workload::build_topology(*spec);
        }
        std::ofstream out(topology_path(cfg));
        workload::topology_to_json(net, out);
        std::cout << "topology: " << net.node_count() << " nodes, " << net.link_count()
                  << " links -> " << topology_path(cfg) << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "gen-topology: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

int run_gen_trace(const ExperimentConfig& cfg) {
    try {
        model::SubstrateNetwork net = load_topology(cfg);
        for (uint64_t seed : cfg.seeds) {
            Rng app_rng(apps_seed(seed));
            workload::AppSet apps = workload::gen_applications(cfg.appgen, app_rng);
            model::EfficiencyMap eta = workload::build_efficiency_map(net, apps);
            {
                std::ofstream out(apps_path(cfg, seed));
                workload::apps_to_json(apps, eta, net, out);
            }
            for (double util : cfg.utilizations) {
                workload::TraceSpec spec =
                    workload::scale_to_utilization(cfg.trace, util, net, apps);
                spec.seed = trace_seed(seed);
                workload::Trace trace = workload::gen_mmpp_trace(spec, net, apps.mixture);
                std::ofstream out(trace_path(cfg, seed, util));
                workload::trace_to_csv(trace, net, out);
                std::cout << "trace " << cell_tag(seed, util) << ": " << trace.requests.size()
                          << " requests\n";
            }
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "gen-trace: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

int run_plan(const ExperimentConfig& cfg) {
    try {
        model::SubstrateNetwork net = load_topology(cfg);
        for (uint64_t seed : cfg.seeds) {
            auto [apps, eta] = load_apps(cfg, seed, net);
            for (double util : cfg.utilizations) {
                workload::Trace trace = load_trace(cfg, seed, util, net);
                std::vector<model::Request> history =
                    history_segment(trace, cfg.trace.history_slots);
                planner::PlanConfig pc = cfg.plan;
                pc.seed = plan_seed(seed);
                planner::PlanBuildInfo info;
                planner::Plan plan = planner::build_plan(net, apps.apps, eta, history,
                                                         cfg.trace.history_slots, pc, &info);
                std::ofstream out(plan_path(cfg, seed, util));
                planner::plan_to_json(plan, net, out);
                std::cout << "plan " << cell_tag(seed, util) << ": objective " << info.lp_objective
                          << ", " << info.variables << " vars, " << info.constraints
                          << " rows, solve " << info.solve_ms << " ms\n";
            }
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "plan: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

namespace {

engine::RunResult run_cell(const ExperimentConfig& cfg, const model::SubstrateNetwork& net,
                           const workload::AppSet& apps, const model::EfficiencyMap& eta,
                           const Cell& cell, const std::vector<model::Request>& test) {
    if (cell.algo == "olive") {
        std::ifstream pf(plan_path(cfg, cell.seed, cell.util));
        if (!pf)
            throw MissingArtifactError("plan not found: " + plan_path(cfg, cell.seed, cell.util) +
                                       " (run plan first)");
        planner::Plan plan = planner::plan_from_json(pf, net, apps.apps, eta);
        engine::EngineConfig ecfg;
        ecfg.verify_each_slot = cfg.verify;
        return engine::run(net, apps.apps, eta, plan, test, cfg.trace.test_slots, ecfg);
    }
    if (cell.algo == "quickg")
        return baselines::run_quickg(net, apps.apps, eta, test, cfg.trace.test_slots, cfg.verify);
    if (cell.algo == "fullg") {
        baselines::FullgConfig fc;
        fc.budget = cfg.fullg_budget;
        return baselines::run_fullg(net, apps.apps, eta, test, cfg.trace.test_slots, fc,
                                    cfg.verify);
    }
    if (cell.algo == "slotoff") {
        baselines::SlotoffConfig sc;
        sc.plan = cfg.plan;
        sc.verify = cfg.verify;
        return baselines::run_slotoff(net, apps.apps, eta, test, cfg.trace.test_slots, sc);
    }
    throw std::runtime_error("unknown algorithm: " + cell.algo);
}

}  // namespace

int run_simulate(const ExperimentConfig& cfg) {
    try {
        model::SubstrateNetwork net = load_topology(cfg);
        fs::create_directories(cfg.out_dir);

        // resume: skip cells with an existing results row
        std::set<std::string> done;
        std::vector<std::string> existing_rows;
        {
            std::ifstream f(results_path(cfg));
            std::string line;
            bool first = true;
            while (f && std::getline(f, line)) {
                if (first) {
                    first = false;
                    continue;
                }
                if (line.empty()) continue;
                existing_rows.push_back(line);
                std::stringstream ss(line);
                std::string algo, seed, util;
                std::getline(ss, algo, ',');
                std::getline(ss, seed, ',');
                std::getline(ss, util, ',');
                done.insert(cell_key(algo, std::stoull(seed),
                                     std::stod(util)));
            }
        }

        std::vector<Cell> todo;
        for (const auto& algo : cfg.algorithms)
            for (uint64_t seed : cfg.seeds)
                for (double util : cfg.utilizations)
                    if (!done.count(cell_key(algo, seed, util))) todo.push_back({algo, seed, util});

        std::mutex io_mutex;
        std::vector<std::string> new_rows;
        std::ofstream append(results_path(cfg), std::ios::app);
        if (existing_rows.empty() && done.empty()) {
            append << metrics::kResultsHeader << "\n";
            append.flush();
        }

        std::atomic<size_t> next{0};
        std::atomic<int> failure{0};
        int jobs = cfg.jobs > 0 ? cfg.jobs
                                : static_cast<int>(std::thread::hardware_concurrency());
        if (jobs < 1) jobs = 1;
        jobs = std::min<int>(jobs, std::max<size_t>(todo.size(), 1));

        auto worker = [&]() {
            for (;;) {
                size_t i = next.fetch_add(1);
                if (i >= todo.size() || failure.load()) return;
                const Cell& cell = todo[i];
                try {
                    auto [apps, eta] = load_apps(cfg, cell.seed, net);
                    workload::Trace trace = load_trace(cfg, cell.seed, cell.util, net);
                    std::vector<model::Request> test =
                        test_segment(trace, cfg.trace.history_slots);
                    engine::RunResult run = run_cell(cfg, net, apps, eta, cell, test);
                    std::vector<double> psi = resolve_app_psi(cfg, apps, eta, net);
                    metrics::Window win = cfg.window;
                    win.hi = std::min(win.hi, cfg.trace.test_slots - 1);
                    metrics::RunReport rep = metrics::build_report(
                        run, test, net, static_cast<int>(apps.apps.size()), psi, win);
                    std::string row = metrics::results_row(cell.algo, cell.seed, cell.util, rep,
                                                           cfg.emit_runtime);
                    {
                        std::ofstream ef(events_path(cfg, cell.algo, cell.seed, cell.util));
                        engine::events_to_csv(run.events, ef);
                        std::ofstream sf(slots_path(cfg, cell.algo, cell.seed, cell.util));
                        metrics::slot_series_to_csv(run, sf);
                    }
                    std::lock_guard<std::mutex> lock(io_mutex);
                    new_rows.push_back(row);
                    append << row << "\n";
                    append.flush();
                    std::cout << "cell " << cell.algo << " " << cell_tag(cell.seed, cell.util)
                              << ": rejection " << rep.rejection_rate_demand << "\n";
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lock(io_mutex);
                    std::cerr << "cell " << cell.algo << " " << cell_tag(cell.seed, cell.util)
                              << ": " << e.what() << "\n";
                    failure.store(exit_code_for(e));
                }
            }
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
        if (failure.load()) return failure.load();

        // canonical rewrite keeps the file deterministic regardless of
        // completion order
        append.close();
        std::vector<std::string> all = existing_rows;
        all.insert(all.end(), new_rows.begin(), new_rows.end());
        std::sort(all.begin(), all.end(), [](const std::string& a, const std::string& b) {
            auto key = [](const std::string& row) {
                std::stringstream ss(row);
                std::string algo, seed, util;
                std::getline(ss, algo, ',');
                std::getline(ss, seed, ',');
                std::getline(ss, util, ',');
                return std::make_tuple(algo, std::stoull(seed), std::stod(util));
            };
            return key(a) < key(b);
        });
        std::ofstream out(results_path(cfg), std::ios::trunc);
        out << metrics::kResultsHeader << "\n";
        for (const auto& row : all) out << row << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "simulate: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

int run_report(const ExperimentConfig& cfg) {
    try {
        std::ifstream f(results_path(cfg));
        if (!f) throw MissingArtifactError("results not found: " + results_path(cfg));
        std::string line;
        std::getline(f, line);  // header
        struct Group {
            std::vector<double> rej_d, rej_c, res_cost, rej_cost, balance, runtime;
        };
        std::map<std::pair<std::string, double>, Group> groups;
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            std::stringstream ss(line);
            std::string tok;
            std::vector<std::string> cols;
            while (std::getline(ss, tok, ',')) cols.push_back(tok);
            if (cols.size() < 9) continue;
            Group& g = groups[{cols[0], std::stod(cols[2])}];
            g.rej_d.push_back(std::stod(cols[3]));
            g.rej_c.push_back(std::stod(cols[4]));
            g.res_cost.push_back(std::stod(cols[5]));
            g.rej_cost.push_back(std::stod(cols[6]));
            g.balance.push_back(std::stod(cols[7]));
            g.runtime.push_back(std::stod(cols[8]));
        }
        auto mean = [](const std::vector<double>& v) {
            double s = 0;
            for (double x : v) s += x;
            return v.empty() ? 0.0 : s / v.size();
        };
        auto ci95 = [&](const std::vector<double>& v) {
            if (v.size() < 2) return 0.0;
            double m = mean(v), var = 0;
            for (double x : v) var += (x - m) * (x - m);
            var /= (v.size() - 1);
            return 1.96 * std::sqrt(var / v.size());
        };
        std::ofstream out(report_path(cfg));
        out << "algorithm,utilization,n,rejection_rate_demand_mean,rejection_rate_demand_ci95,"
               "rejection_rate_count_mean,rejection_rate_count_ci95,resource_cost_mean,"
               "rejection_cost_mean,balance_index_mean,balance_index_ci95,runtime_ms_mean\n";
        char buf[512];
        for (const auto& [key, g] : groups) {
            snprintf(buf, sizeof buf, "%s,%.6g,%zu,%.8g,%.8g,%.8g,%.8g,%.8g,%.8g,%.8g,%.8g,%.3f",
                     key.first.c_str(), key.second, g.rej_d.size(), mean(g.rej_d), ci95(g.rej_d),
                     mean(g.rej_c), ci95(g.rej_c), mean(g.res_cost), mean(g.rej_cost),
                     mean(g.balance), ci95(g.balance), mean(g.runtime));
            out << buf << "\n";
        }
        std::cout << "report: " << groups.size() << " groups -> " << report_path(cfg) << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "report: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

int run_pipeline(const ExperimentConfig& cfg) {
    int rc = run_gen_topology(cfg);
    if (rc) return rc;
    rc = run_gen_trace(cfg);
    if (rc) return rc;
    bool needs_plan = false;
    for (const auto& a : cfg.algorithms) needs_plan |= (a == "olive");
    if (needs_plan) {
        rc = run_plan(cfg);
        if (rc) return rc;
    }
    rc = run_simulate(cfg);
    if (rc) return rc;
    return run_report(cfg);
}

}  // namespace olive::experiment
