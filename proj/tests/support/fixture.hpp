#pragma once

// Shared scenario builders for the test suites.

#include "olive/baselines.hpp"
#include "olive/engine.hpp"
#include "olive/metrics.hpp"
#include "olive/planner.hpp"
#include "olive/workload.hpp"

namespace testsupport {

using namespace olive;

struct Scenario {
    model::SubstrateNetwork net;
    workload::AppSet apps;
    model::EfficiencyMap eta;
    workload::TraceSpec tspec;
    std::vector<model::Request> history;  // arrivals in [0, history_slots)
    std::vector<model::Request> test;     // rebased to [0, test_slots)
    std::vector<double> psi;
};

inline Scenario make_scenario(uint64_t seed, double util, double lambda = 5.0,
                              int history_slots = 400, int test_slots = 360,
                              const std::string& preset = "tiered10") {
    Scenario s;
    auto tspec = *workload::preset_topology(preset);
    tspec.seed = 42;
    s.net = workload::build_topology(tspec);

    Rng apprng(mix_seed(seed, 0xA115));
    workload::AppGenSpec aspec;
    s.apps = workload::gen_applications(aspec, apprng);
    s.eta = workload::build_efficiency_map(s.net, s.apps);

    s.tspec.history_slots = history_slots;
    s.tspec.test_slots = test_slots;
    s.tspec.lambda_per_node = lambda;
    s.tspec = workload::scale_to_utilization(s.tspec, util, s.net, s.apps);
    s.tspec.seed = mix_seed(seed, 0x7ACE);
    workload::Trace trace = workload::gen_mmpp_trace(s.tspec, s.net, s.apps.mixture);
    for (const auto& r : trace.requests) {
        if (r.arrival < history_slots) {
            s.history.push_back(r);
        } else {
            model::Request c = r;
            c.arrival -= history_slots;
            s.test.push_back(c);
        }
    }
    s.psi.resize(s.apps.apps.size());
    for (size_t a = 0; a < s.apps.apps.size(); ++a)
        s.psi[a] = planner::default_psi(s.apps.apps[a], static_cast<int>(a), s.eta, s.net);
    return s;
}

// two nodes A (expensive) and B (cheap) joined by one link; one single-VNF
// application rooted at A
struct TwoNode {
    model::SubstrateNetwork net;
    std::vector<model::Application> apps;
    model::EfficiencyMap eta;
};

inline TwoNode make_two_node(double cap_b = 1e9) {
    TwoNode t;
    t.net.name = "two-node";
    t.net.nodes.push_back({"A", model::Tier::Edge, 1e9, 50.0, false});
    t.net.nodes.push_back({"B", model::Tier::Transport, cap_b, 1.0, false});
    t.net.links.push_back({"AB", 0, 1, model::Tier::Edge, 1e9, 1.0});
    t.net.finalize();
    model::Application app;
    app.id = "single";
    app.vnodes.push_back({"u", 0.0});
    app.vnodes.push_back({"f", 50.0});
    app.vlinks.push_back({0, 1, 50.0});
    app.validate();
    t.apps.push_back(app);
    return t;
}

}  // namespace testsupport
