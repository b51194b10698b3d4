#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "olive/lp.hpp"
#include "olive/model.hpp"
#include "olive/rng.hpp"

namespace olive::planner {

// All history requests sharing (application, origin), with the per-slot
// total demand of active members over the observation window.
struct AggregateRequest {
    int app = -1;
    model::NodeIdx origin = -1;
    std::vector<int> member_ids;
    std::vector<double> demand_series;
    double expected_demand = 0;  // CU; bootstrap percentile of the series
    double ci_lo = 0, ci_hi = 0;
    double psi = 0;  // base rejection cost factor
};

struct PlanConfig {
    double alpha = 80;             // demand percentile, in (0, 100]
    int bootstrap_resamples = 1000;
    int quantiles = 10;            // P
    double psi_override = -1;      // < 0: per-application default_psi
    uint64_t seed = 1;
};

// One integral embedding produced by decomposing the fractional plan.
struct Template {
    model::Embedding emb;
    double weight = 0;                  // fraction of the aggregate's expected demand
    std::vector<model::UnitLoad> unit;  // CU per unit of request demand
};

struct PlanAggregate {
    AggregateRequest agg;
    double allocated_fraction = 0;  // LP mass kept at the root, complement of rejection
    std::vector<Template> templates;
    double undecomposed = 0;
};

struct Plan {
    PlanConfig config;
    double lp_objective = 0;
    std::vector<PlanAggregate> aggregates;  // sorted by (app, origin)

    int find(int app, model::NodeIdx origin) const;  // -1 when absent
    bool empty() const { return aggregates.empty(); }
};

// Groups history by (app, origin); series length = history_slots. Demand of
// requests active past the window end is counted up to the window end only.
std::vector<AggregateRequest> aggregate_history(const std::vector<model::Request>& history,
                                                int history_slots);

// Aggregates a snapshot of currently active requests with their actual
// total demand (per-slot offline baseline input).
std::vector<AggregateRequest> aggregate_active(const std::vector<const model::Request*>& active);

struct BootstrapEstimate {
    double estimate = 0;
    double ci_lo = 0, ci_hi = 0;  // 95% percentile interval
};

// Resamples the per-slot series with replacement, takes the alpha percentile
// of each resample; returns the mean estimate and the central 95% interval.
BootstrapEstimate bootstrap_expected_demand(const std::vector<double>& series,
                                            const PlanConfig& cfg, Rng& rng);

// Cost of hosting every element of the application on its costliest
// admissible substrate element.
double default_psi(const model::Application& app, int app_idx, const model::EfficiencyMap& eta,
                   const model::SubstrateNetwork& net);

// LP for the expected aggregated demand. Fractions of each aggregate map
// its elements onto the substrate; rejected mass is split into P equal
// quantiles with penalty growing linearly in the quantile index, which
// water-fills rejection across aggregates. Forbidden pairs become columns
// fixed to zero. Each undirected link expands to two directed arcs whose
// capacity is shared.
struct PvneModel {
    lp::LinearProgram lp;
    struct Block {
        int agg = -1;        // index into the aggregate vector used for the build
        int root_col = -1;   // allocated fraction at the origin
        int vnode_col0 = -1; // (q-1)*V + v for q in [1, nv)
        int flow_col0 = -1;  // e*2L + arc
        int layer_col0 = -1; // P rejection quantiles
        int nv = 0, nl = 0;
    };
    std::vector<Block> blocks;
    std::vector<int> capacity_row;  // per substrate element; -1 if no load possible
    int V = 0, L = 0, P = 1;

    int vnode_col(const Block& b, int q, model::NodeIdx v) const {
        return b.vnode_col0 + (q - 1) * V + v;
    }
    int flow_col(const Block& b, int e, int arc) const { return b.flow_col0 + e * 2 * L + arc; }
    int layer_col(const Block& b, int p) const { return b.layer_col0 + p - 1; }  // p in [1, P]
};

PvneModel build_pvne(const model::SubstrateNetwork& net,
                     const std::vector<model::Application>& apps,
                     const model::EfficiencyMap& eta,
                     const std::vector<AggregateRequest>& aggs, const PlanConfig& cfg);

// Iterative flow decomposition of the fractional solution into weighted
// integral templates. Deterministic: smallest host node id first, then the
// first positive-flow simple path in (node id, link id) DFS order.
Plan extract_templates(const PvneModel& model, const lp::SolveResult& sol,
                       const model::SubstrateNetwork& net,
                       const std::vector<model::Application>& apps,
                       const model::EfficiencyMap& eta,
                       const std::vector<AggregateRequest>& aggs, const PlanConfig& cfg);

struct PlanBuildInfo {
    double lp_objective = 0;
    int lp_iterations = 0;
    double solve_ms = 0;
    int variables = 0, constraints = 0;
};

// History aggregation, bootstrap, LP solve and decomposition in one call.
Plan build_plan(const model::SubstrateNetwork& net, const std::vector<model::Application>& apps,
                const model::EfficiencyMap& eta, const std::vector<model::Request>& history,
                int history_slots, const PlanConfig& cfg, PlanBuildInfo* info = nullptr);

void plan_to_json(const Plan& plan, const model::SubstrateNetwork& net, std::ostream& os);
Plan plan_from_json(std::istream& is, const model::SubstrateNetwork& net,
                    const std::vector<model::Application>& apps, const model::EfficiencyMap& eta);

}  // namespace olive::planner
