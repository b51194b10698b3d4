#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "olive/model.hpp"
#include "olive/rng.hpp"

namespace olive::workload {

// Tiered topology construction. Per-tier parameters default to the standard
// edge/transport/core profile: node capacities 200K/600K/1.8M CU, link
// capacities 100K/300K/900K CU (successive-tier ratio 3), mean node costs
// 50/10/1 per CU with per-node jitter in [50%, 150%], link cost 1.
struct TierParams {
    double node_capacity = 0;
    double node_cost_mean = 0;
    double link_capacity = 0;
    double link_cost = 1.0;
};

struct TopologySpec {
    std::string name = "custom";
    int edge_nodes = 6;
    int transport_nodes = 3;
    int core_nodes = 1;
    int links = 13;  // must be >= spanning structure (ring of cores + one uplink per other node)
    TierParams edge{200000, 50, 100000, 1};
    TierParams transport{600000, 10, 300000, 1};
    TierParams core{1800000, 1, 900000, 1};
    double cost_jitter_lo = 0.5, cost_jitter_hi = 1.5;  // node cost spread around tier mean
    uint64_t seed = 1;
};

// Named presets. Sizes follow the evaluated topologies (node/link counts);
// edge lists are produced by the generator below since the original graphs
// are external data.
std::optional<TopologySpec> preset_topology(const std::string& name);
std::vector<std::string> preset_names();

// Deterministic under spec.seed. Grows a connected tiered graph: cores in a
// ring, every transport attached to a core, every edge node to a transport,
// then extra cross links until spec.links is reached.
model::SubstrateNetwork build_topology(const TopologySpec& spec);

// Marks GPU-capable nodes: all cores plus `edge_count` random edge nodes.
void mark_gpu_nodes(model::SubstrateNetwork& net, int edge_count, Rng& rng);

enum class AppKind { Chain, Tree, Accelerator, GpuChain };
const char* app_kind_name(AppKind k);

struct AppGenSpec {
    int chains = 2;
    int trees = 1;
    int accelerators = 1;
    int gpu_chains = 0;
    int vnf_lo = 3, vnf_hi = 5;          // VNFs per application ~ U(lo, hi)
    double elem_size_mean = 50, elem_size_std = 30;
    double size_floor = 0.1;             // normal draws clamped here
    double accel_link_factor = 0.3;      // downstream link shrunk to 30%
};

struct AppSet {
    std::vector<model::Application> apps;
    std::vector<AppKind> kinds;
    std::vector<int> gpu_vnf;            // -1 when the app has no GPU stage
    std::vector<double> mixture;         // arrival mixture weights
};

AppSet gen_applications(const AppGenSpec& spec, Rng& rng);

// Efficiency map for an app set on a substrate: GPU stages forbidden on
// non-GPU nodes; non-GPU vnodes forbidden on GPU nodes.
model::EfficiencyMap build_efficiency_map(const model::SubstrateNetwork& net, const AppSet& apps);

struct MmppParams {
    double high_factor = 1.5;   // lambda_h = factor * lambda
    double low_factor = 0.5;
    double p_high_to_low = 0.05;  // per-slot switch probabilities
    double p_low_to_high = 0.05;
};

struct TraceSpec {
    int history_slots = 400;
    int test_slots = 600;
    double lambda_per_node = 10;   // mean arrivals per edge node per slot
    MmppParams mmpp;
    double size_mean = 10, size_std = 2;  // request demand d*, truncated > 0
    double duration_mean = 10;            // slots; discretized exponential (geometric)
    double zipf_alpha = 1.0;              // edge-node popularity
    uint64_t seed = 1;

    int horizon() const { return history_slots + test_slots; }
};

struct Trace {
    TraceSpec spec;
    std::vector<model::Request> requests;  // sorted by (arrival, per-slot order)
};

// Arrivals originate exclusively at edge nodes; one global two-state chain
// modulates all nodes so bursts are network-wide. Applications are drawn
// proportionally to the mixture weights.
Trace gen_mmpp_trace(const TraceSpec& spec, const model::SubstrateNetwork& net,
                     const std::vector<double>& app_mixture);

// Zipf popularity weights over the edge nodes, normalized to sum 1.
std::vector<double> zipf_weights(int n, double alpha);

// Rescales spec.size_mean so that the expected steady-state active node
// demand equals target * (total edge-node capacity). Target in [0.2, 2.0].
TraceSpec scale_to_utilization(const TraceSpec& spec, double target,
                               const model::SubstrateNetwork& net, const AppSet& apps);

// Expected per-request node demand (CU per unit of d*) over the app mixture.
double mean_app_node_demand(const AppSet& apps);

// serialization
void topology_to_json(const model::SubstrateNetwork& net, std::ostream& os);
model::SubstrateNetwork topology_from_json(std::istream& is);
void apps_to_json(const AppSet& apps, const model::EfficiencyMap& eta,
                  const model::SubstrateNetwork& net, std::ostream& os);
// eta override triples reference substrate elements by id, so loading needs
// the substrate they were written against.
std::pair<AppSet, model::EfficiencyMap> apps_from_json(std::istream& is,
                                                       const model::SubstrateNetwork& net);

// Trace CSV: request_id,arrival_slot,duration,origin,app,size
void trace_to_csv(const Trace& trace, const model::SubstrateNetwork& net, std::ostream& os);
Trace trace_from_csv(std::istream& is, const model::SubstrateNetwork& net);

}  // namespace olive::workload
