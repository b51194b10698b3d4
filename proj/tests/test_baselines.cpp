#include <cmath>

#include "doctest.h"
#include "olive/baselines.hpp"
#include "support/fixture.hpp"

using namespace olive;
using namespace olive::baselines;
using engine::Decision;
using testsupport::make_scenario;
using testsupport::make_two_node;

namespace {
model::Request req(int id, double size, int arrival, int duration, int app = 0, int origin = 0) {
    return {id, app, origin, size, arrival, duration};
}
}  // namespace

TEST_CASE("quickg delegates to the greedy embedder") {
    auto t = make_two_node();
    std::vector<model::Request> rs{req(0, 10.0, 0, 1)};
    auto run = run_quickg(t.net, t.apps, t.eta, rs, 2);
    REQUIRE(run.events.size() == 1);
    CHECK(run.events[0].decision == Decision::Greedy);
    CHECK(run.events[0].cost_delta == doctest::Approx(1000.0));
}

TEST_CASE("quickg never plans or borrows") {
    auto s = make_scenario(17, 1.2, 2.0, 100, 80);
    auto run = run_quickg(s.net, s.apps.apps, s.eta, s.test, s.tspec.test_slots);
    for (const auto& ev : run.events) {
        CHECK(ev.decision != Decision::Planned);
        CHECK(ev.decision != Decision::Borrowed);
    }
}

TEST_CASE("quickg short-circuits a fully saturated slot") {
    auto t = make_two_node(/*cap_b=*/100.0);
    t.net.nodes[0].capacity = 100.0;
    t.net.finalize();
    // one request exhausts nothing (no host fits), so the slot saturates and
    // the rest are rejected without a search
    std::vector<model::Request> rs{req(0, 10.0, 0, 5), req(1, 10.0, 0, 5), req(2, 10.0, 0, 5)};
    auto run = run_quickg(t.net, t.apps, t.eta, rs, 2);
    for (int id = 0; id < 3; ++id)
        CHECK(run.outcomes.at(id).status == model::RequestStatus::Rejected);
}

TEST_CASE("fullg equals greedy for single-VNF applications") {
    auto t = make_two_node();
    model::LoadLedger ledger(t.net);
    model::Request r{0, 0, 0, 10.0, 0, 1};
    auto greedy = engine::greedy_embed(r, t.apps[0], t.eta, t.net, ledger);
    bool timeout = false;
    auto full = fullg_embed(r, t.apps[0], t.eta, t.net, ledger, 1000000, &timeout);
    REQUIRE(greedy);
    REQUIRE(full);
    CHECK_FALSE(timeout);
    CHECK(full->cost == doctest::Approx(greedy->cost));
    CHECK(full->emb.node_map == greedy->emb.node_map);
}

TEST_CASE("fullg beats collocation when splitting pays") {
    // two VNFs of 50 CU each at demand 1; B and C each hold exactly one;
    // collocation must fall back to the expensive origin A
    model::SubstrateNetwork net;
    net.name = "split-pays";
    net.nodes.push_back({"A", model::Tier::Edge, 1000.0, 50, false});
    net.nodes.push_back({"B", model::Tier::Transport, 50.0, 1, false});
    net.nodes.push_back({"C", model::Tier::Transport, 50.0, 1, false});
    net.links.push_back({"AB", 0, 1, model::Tier::Edge, 1e6, 1});
    net.links.push_back({"BC", 1, 2, model::Tier::Transport, 1e6, 1});
    net.finalize();
    model::Application app;
    app.id = "pair";
    app.vnodes.push_back({"u", 0.0});
    app.vnodes.push_back({"f1", 50.0});
    app.vnodes.push_back({"f2", 50.0});
    app.vlinks.push_back({0, 1, 1.0});
    app.vlinks.push_back({1, 2, 1.0});
    app.validate();
    model::EfficiencyMap eta;
    model::LoadLedger ledger(net);
    model::Request r{0, 0, 0, 1.0, 0, 1};

    auto greedy = engine::greedy_embed(r, app, eta, net, ledger);
    bool timeout = false;
    auto full = fullg_embed(r, app, eta, net, ledger, 1000000, &timeout);
    REQUIRE(greedy);
    REQUIRE(full);
    // collocation: everything on A costs 100*50 = 5000 (B/C too small for both)
    CHECK(greedy->cost == doctest::Approx(5000.0));
    // exact search: f1 on B, f2 on C, links A-B and B-C
    CHECK(full->cost == doctest::Approx(50.0 + 50.0 + 1.0 + 1.0));
    CHECK(full->emb.node_map[1] != full->emb.node_map[2]);
}

TEST_CASE("fullg cost never exceeds quickg cost on random states") {
    for (uint64_t seed = 1; seed <= 15; ++seed) {
        Rng rng(seed);
        auto s = make_scenario(seed, 1.0, 2.0, 50, 30);
        model::LoadLedger ledger(s.net);
        for (model::ElemIdx e = 0; e < s.net.element_count(); ++e)
            if (rng.uniform() < 0.5)
                ledger.allocate({1000 + e, 1.0, 99, false,
                                 {{e, rng.uniform(0.0, s.net.capacity(e) * 0.8)}}});
        auto edges = s.net.tier_nodes(model::Tier::Edge);
        model::Request r{0, int(rng.below(s.apps.apps.size())),
                         edges[rng.below(edges.size())], rng.uniform(1, 30), 0, 1};
        auto greedy = engine::greedy_embed(r, s.apps.apps[r.app], s.eta, s.net, ledger);
        bool timeout = false;
        auto full =
            fullg_embed(r, s.apps.apps[r.app], s.eta, s.net, ledger, 5000000, &timeout);
        REQUIRE_FALSE(timeout);
        if (greedy) {
            REQUIRE(full);
            CHECK(full->cost <= greedy->cost + 1e-9);
        }
    }
}

TEST_CASE("fullg flags a timeout when the budget runs out") {
    auto s = make_scenario(23, 1.0, 2.0, 50, 30);
    model::LoadLedger ledger(s.net);
    model::Request r{0, 0, s.net.tier_nodes(model::Tier::Edge)[0], 1.0, 0, 1};
    bool timeout = false;
    auto full = fullg_embed(r, s.apps.apps[0], s.eta, s.net, ledger, 1, &timeout);
    CHECK(timeout);
    CHECK_FALSE(full.has_value());

    std::vector<model::Request> rs{r};
    FullgConfig fc;
    fc.budget = 1;
    auto run = run_fullg(s.net, s.apps.apps, s.eta, rs, 5, fc);
    CHECK(run.outcomes.at(0).status == model::RequestStatus::Rejected);
    CHECK(run.outcomes.at(0).timeout);
}

TEST_CASE("slotoff assigns a lone request like the planner would") {
    auto t = make_two_node();
    SlotoffConfig cfg;
    std::vector<model::Request> rs{req(0, 10.0, 0, 1)};
    auto run = run_slotoff(t.net, t.apps, t.eta, rs, 2, cfg);
    REQUIRE(run.events.size() == 1);
    CHECK(run.events[0].decision == Decision::SlotoffAssigned);
    // the per-slot optimum hosts the function on B
    CHECK(run.events[0].node_map.find("f:B") != std::string::npos);
    CHECK(run.resource_cost == doctest::Approx(1000.0));
}

TEST_CASE("slotoff rejections are permanent even when capacity frees up") {
    auto t = make_two_node(/*cap_b=*/500.0);
    t.net.nodes[0].capacity = 0.0;  // only B can host, and only one function
    t.net.finalize();
    SlotoffConfig cfg;
    cfg.plan.psi_override = 1e9;  // force the LP to allocate whatever fits
    // slot 0: the first request fills B, the second is rejected; from slot 2
    // B is free again yet the rejection stands
    std::vector<model::Request> rs{req(0, 10.0, 0, 2), req(1, 10.0, 0, 5)};
    auto run = run_slotoff(t.net, t.apps, t.eta, rs, 6, cfg);
    CHECK(run.outcomes.at(0).status == model::RequestStatus::Departed);
    CHECK(run.outcomes.at(1).status == model::RequestStatus::Rejected);
    // cost accrues for the first request's two slots only
    CHECK(run.resource_cost == doctest::Approx(2 * (500.0 * 1 + 500.0 * 1)));
}

TEST_CASE("slotoff per-slot loads respect capacity like the LP does") {
    auto s = make_scenario(29, 1.3, 3.0, 120, 60);
    SlotoffConfig cfg;
    cfg.verify = true;  // per-slot ledger verification inside the run
    auto run = run_slotoff(s.net, s.apps.apps, s.eta, s.test, s.tspec.test_slots, cfg);
    for (int t = 0; t < run.slots; ++t)
        for (model::ElemIdx e = 0; e < s.net.element_count(); ++e)
            CHECK(run.slot_loads[t][e] <= s.net.capacity(e) + 1e-6);
}

TEST_CASE("slotoff is deterministic") {
    auto s = make_scenario(31, 1.0, 2.0, 80, 40);
    SlotoffConfig cfg;
    auto a = run_slotoff(s.net, s.apps.apps, s.eta, s.test, s.tspec.test_slots, cfg);
    auto b = run_slotoff(s.net, s.apps.apps, s.eta, s.test, s.tspec.test_slots, cfg);
    REQUIRE(a.events.size() == b.events.size());
    for (size_t i = 0; i < a.events.size(); ++i) {
        CHECK(a.events[i].request_id == b.events[i].request_id);
        CHECK(a.events[i].decision == b.events[i].decision);
        CHECK(a.events[i].node_map == b.events[i].node_map);
    }
}
