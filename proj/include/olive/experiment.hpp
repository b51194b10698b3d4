#pragma once

#include <string>
#include <vector>

#include "olive/metrics.hpp"
#include "olive/planner.hpp"
#include "olive/workload.hpp"

namespace olive::experiment {

// One structured config drives every pipeline stage. Seeds and the output
// directory can be overridden through OLIVE_SEEDS / OLIVE_OUT.
struct ExperimentConfig {
    std::string topology_preset = "tiered10";
    std::string topology_file;  // when set, loaded instead of generated
    uint64_t topology_seed = 1;
    workload::AppGenSpec appgen;
    workload::TraceSpec trace;  // size_mean is rescaled per utilization point
    planner::PlanConfig plan;
    std::vector<std::string> algorithms{"olive", "quickg", "slotoff"};
    std::vector<uint64_t> seeds{1};
    std::vector<double> utilizations{1.0};
    metrics::Window window{100, 500};
    int jobs = 0;  // 0: hardware concurrency
    bool verify = true;
    bool emit_runtime = true;  // false writes runtime_ms = 0 into results rows
    long fullg_budget = 1000000;
    std::string out_dir = "out";
};

ExperimentConfig config_from_json(std::istream& is);
ExperimentConfig config_from_file(const std::string& path);
void apply_env_overrides(ExperimentConfig& cfg);

// derived artifact paths
std::string topology_path(const ExperimentConfig& c);
std::string apps_path(const ExperimentConfig& c, uint64_t seed);
std::string trace_path(const ExperimentConfig& c, uint64_t seed, double util);
std::string plan_path(const ExperimentConfig& c, uint64_t seed, double util);
std::string events_path(const ExperimentConfig& c, const std::string& algo, uint64_t seed,
                        double util);
std::string slots_path(const ExperimentConfig& c, const std::string& algo, uint64_t seed,
                       double util);
std::string results_path(const ExperimentConfig& c);
std::string report_path(const ExperimentConfig& c);

// pipeline stages; each returns a process exit code (0 ok, 2 solver failure,
// 3 missing artifact, 4 invariant violation)
int run_gen_topology(const ExperimentConfig& cfg);
int run_gen_trace(const ExperimentConfig& cfg);
int run_plan(const ExperimentConfig& cfg);
int run_simulate(const ExperimentConfig& cfg);
int run_report(const ExperimentConfig& cfg);
int run_pipeline(const ExperimentConfig& cfg);

// per-seed derived streams
uint64_t apps_seed(uint64_t sweep_seed);
uint64_t trace_seed(uint64_t sweep_seed);
uint64_t plan_seed(uint64_t sweep_seed);

}  // namespace olive::experiment
