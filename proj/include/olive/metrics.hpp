#pragma once

#include <iosfwd>
#include <map>
#include <vector>

#include "olive/engine.hpp"
#include "olive/model.hpp"

namespace olive::metrics {

// Arrival-slot measurement window, both ends inclusive.
struct Window {
    int lo = 100;
    int hi = 500;
};

struct RunReport {
    double resource_cost = 0;   // whole run
    double rejection_cost = 0;  // whole run, rejected and preempted requests
    double rejection_rate_demand = 0;  // window
    double rejection_rate_count = 0;   // window
    double balance_index = 1;
    bool balance_defined = false;  // false when the window saw no rejections
    int arrived = 0, accepted = 0, rejected = 0, preempted = 0;  // window counts
    double runtime_ms = 0;
    std::map<engine::Decision, int> decision_histogram;  // whole run
};

// Sum over slots and elements of load * unit cost; recomputation route used
// to cross-check the engine's incremental accounting.
double resource_cost(const std::vector<std::vector<double>>& slot_loads,
                     const model::SubstrateNetwork& net);

// d* . duration . psi(app) summed over rejected and preempted requests;
// durations are taken from the trace (known post hoc).
double rejection_cost(const std::vector<model::Request>& requests,
                      const std::unordered_map<int, engine::RequestOutcome>& outcomes,
                      const std::vector<double>& app_psi);

// (demand-weighted, count-weighted) over requests arriving in the window;
// preempted requests count as rejections in both.
std::pair<double, double> rejection_rate(const std::vector<model::Request>& requests,
                                         const std::unordered_map<int, engine::RequestOutcome>& outcomes,
                                         const Window& win);

// Weighted Jain-style index over per-node, per-app rejection counts. Nodes
// without rejections are excluded from the weighted average; all-zero input
// reports 1 with defined=false.
double balance_index(const std::vector<std::vector<double>>& rejections_per_node_app,
                     const std::vector<double>& requests_per_node, bool* defined = nullptr);

RunReport build_report(const engine::RunResult& run, const std::vector<model::Request>& requests,
                       const model::SubstrateNetwork& net, int app_count,
                       const std::vector<double>& app_psi, const Window& win);

// results row: algorithm,seed,utilization,rejection_rate_demand,
// rejection_rate_count,resource_cost,rejection_cost,balance_index,runtime_ms
extern const char* kResultsHeader;
std::string results_row(const std::string& algorithm, uint64_t seed, double utilization,
                        const RunReport& report, bool emit_runtime);

// per-slot CSV: slot,arrived_demand,allocated_demand,arrived_count,allocated_count
void slot_series_to_csv(const engine::RunResult& run, std::ostream& os);

}  // namespace olive::metrics
