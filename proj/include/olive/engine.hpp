#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "olive/model.hpp"
#include "olive/planner.hpp"

namespace olive::engine {

enum class Decision { Planned, Borrowed, Greedy, Rejected, Preempted, SlotoffAssigned };
const char* decision_name(Decision d);

struct Event {
    int slot = 0;
    int request_id = -1;
    Decision decision = Decision::Rejected;
    std::string node_map;  // "u:e0|f1:c0"
    std::string paths;     // "u-f1:l2-l5|f1-f2:"
    double cost_delta = 0; // change in the per-slot resource cost rate
};

struct RequestOutcome {
    model::RequestStatus status = model::RequestStatus::Pending;
    Decision decision = Decision::Rejected;
    bool planned = false;
    bool timeout = false;     // exact-search budget exhausted
    int preempt_slot = -1;
};

struct RunResult {
    int slots = 0;
    std::vector<Event> events;
    std::unordered_map<int, RequestOutcome> outcomes;
    std::vector<double> slot_cost;                 // resource cost rate at each slot
    std::vector<std::vector<double>> slot_loads;   // element loads at slot end
    std::vector<double> slot_arrived_demand, slot_allocated_demand;
    std::vector<int> slot_arrived_count, slot_allocated_count;
    double resource_cost = 0;
    double runtime_ms = 0;
};

struct GreedyResult {
    model::Embedding emb;
    std::vector<model::UnitLoad> unit;
    double cost = 0;  // added per-slot resource cost rate
};

// Cheapest collocated candidate: root at the origin, every other vnode on a
// single node w, root-incident vlinks routed together along one min-cost
// path with enough residual for their combined demand. w may equal the
// origin (empty path). Forbidden pairs exclude candidates.
std::optional<GreedyResult> greedy_embed(const model::Request& r, const model::Application& app,
                                         const model::EfficiencyMap& eta,
                                         const model::SubstrateNetwork& net,
                                         const model::LoadLedger& ledger);

using FallbackEmbedder = std::function<std::optional<GreedyResult>(
    const model::Request&, const model::LoadLedger&)>;

struct EngineConfig {
    bool use_plan = true;
    bool quickg_short_circuit = false;  // reject the rest of a slot once all nodes are full
    bool verify_each_slot = false;      // ledger recomputation + plan residual checks
    FallbackEmbedder fallback;          // defaults to greedy_embed
};

// Online loop over the request stream: per slot, departures are released
// first, then arrivals are processed one by one in trace order. Acceptance
// priority: planned full fit, preemption to enable a planned fit, borrowed
// partial fit, greedy fallback, reject.
RunResult run(const model::SubstrateNetwork& net, const std::vector<model::Application>& apps,
              const model::EfficiencyMap& eta, const planner::Plan& plan,
              const std::vector<model::Request>& requests, int slots,
              const EngineConfig& cfg = {});

std::string format_node_map(const model::SubstrateNetwork& net, const model::Application& app,
                            const model::Embedding& emb);
std::string format_paths(const model::SubstrateNetwork& net, const model::Application& app,
                         const model::Embedding& emb);

void events_to_csv(const std::vector<Event>& events, std::ostream& os);

}  // namespace olive::engine
