#pragma once

#include <optional>

#include "olive/engine.hpp"
#include "olive/model.hpp"
#include "olive/planner.hpp"

namespace olive::baselines {

// Greedy-only online run: empty plan plus the full-slot rejection
// short-circuit.
engine::RunResult run_quickg(const model::SubstrateNetwork& net,
                             const std::vector<model::Application>& apps,
                             const model::EfficiencyMap& eta,
                             const std::vector<model::Request>& requests, int slots,
                             bool verify = false);

struct FullgConfig {
    long budget = 1000000;  // candidate node maps evaluated per request
};

// Exact least-cost embedding without the collocation restriction: exhaustive
// node maps (root pinned) with per-vlink min-cost feasible paths, pruned on
// partial cost and node capacity; the assembled candidate must fit jointly.
std::optional<engine::GreedyResult> fullg_embed(const model::Request& r,
                                                const model::Application& app,
                                                const model::EfficiencyMap& eta,
                                                const model::SubstrateNetwork& net,
                                                const model::LoadLedger& ledger, long budget,
                                                bool* timeout = nullptr);

engine::RunResult run_fullg(const model::SubstrateNetwork& net,
                            const std::vector<model::Application>& apps,
                            const model::EfficiencyMap& eta,
                            const std::vector<model::Request>& requests, int slots,
                            const FullgConfig& cfg = {}, bool verify = false);

struct SlotoffConfig {
    planner::PlanConfig plan;  // quantile count and psi policy
    bool verify = false;
};

// Clairvoyant per-slot baseline: each slot solves the aggregate LP for the
// actual active demand, decomposes it, and packs the active requests into
// templates first-come-first-served. Requests that cannot be packed in
// their arrival slot are rejected for good; ongoing requests repacked every
// slot may land on different embeddings and are dropped (preempted) if they
// no longer fit.
engine::RunResult run_slotoff(const model::SubstrateNetwork& net,
                              const std::vector<model::Application>& apps,
                              const model::EfficiencyMap& eta,
                              const std::vector<model::Request>& requests, int slots,
                              const SlotoffConfig& cfg);

}  // namespace olive::baselines
