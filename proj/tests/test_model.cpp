#include <cmath>

#include "doctest.h"
#include "olive/model.hpp"
#include "olive/rng.hpp"

using namespace olive;
using namespace olive::model;

namespace {

SubstrateNetwork tiny_net(double cap_a = 200000, double cap_b = 200000, double cap_link = 100000) {
    SubstrateNetwork net;
    net.name = "tiny";
    net.nodes.push_back({"A", Tier::Edge, cap_a, 50, false});
    net.nodes.push_back({"B", Tier::Transport, cap_b, 1, false});
    net.nodes.push_back({"C", Tier::Core, 1800000, 1, false});
    net.links.push_back({"AB", 0, 1, Tier::Edge, cap_link, 1});
    net.links.push_back({"BC", 1, 2, Tier::Transport, 300000, 1});
    net.finalize();
    return net;
}

Application one_vnf_app() {
    Application app;
    app.id = "single";
    app.vnodes.push_back({"u", 0.0});
    app.vnodes.push_back({"f", 50.0});
    app.vlinks.push_back({0, 1, 50.0});
    app.validate();
    return app;
}

}  // namespace

TEST_CASE("element_load follows the per-element product") {
    SubstrateNetwork net = tiny_net();
    Application app = one_vnf_app();
    EfficiencyMap eta;
    Request r{0, 0, 0, 10.0, 0, 1};
    Embedding emb;
    emb.node_map = {0, 1};
    emb.link_paths = {{0}};  // path via link AB

    // mapped vnode: x=1, d*=10, D=50, eta=1
    CHECK(element_load(r, app, eta, emb, 1, net.node_elem(1), net) == 500.0);
    // unmapped substrate node: x=0
    CHECK(element_load(r, app, eta, emb, 1, net.node_elem(2), net) == 0.0);
    // shrunk link coefficient
    eta.set(0, 2, net.link_elem(0), 0.3);
    CHECK(element_load(r, app, eta, emb, 2, net.link_elem(0), net) == doctest::Approx(150.0));
    // forbidden pair on a used element
    eta.forbid(0, 1, net.node_elem(1));
    CHECK_THROWS_AS(element_load(r, app, eta, emb, 1, net.node_elem(1), net), InvariantError);
}

TEST_CASE("a vlink path loads every traversed link independently") {
    SubstrateNetwork net = tiny_net();
    Application app = one_vnf_app();
    EfficiencyMap eta;
    Request r{0, 0, 0, 2.0, 0, 1};
    Embedding emb;
    emb.node_map = {0, 2};
    emb.link_paths = {{0, 1}};  // A-B-C
    auto unit = unit_loads(net, app, eta, 0, emb);
    double ab = 0, bc = 0, c_node = 0;
    for (auto& ul : unit) {
        if (ul.elem == net.link_elem(0)) ab = ul.cu;
        if (ul.elem == net.link_elem(1)) bc = ul.cu;
        if (ul.elem == net.node_elem(2)) c_node = ul.cu;
    }
    CHECK(ab == 50.0);
    CHECK(bc == 50.0);
    CHECK(c_node == 50.0);
}

TEST_CASE("residual arithmetic") {
    SubstrateNetwork net = tiny_net();
    LoadLedger ledger(net);
    CHECK(ledger.residual(net.node_elem(0)) == 200000.0);
    ledger.allocate({1, 10.0, 5, false, {{net.node_elem(0), 50.0}}});
    CHECK(ledger.residual(net.node_elem(0)) == doctest::Approx(199500.0));
}

TEST_CASE("incremental ledger equals recomputation on random load") {
    SubstrateNetwork net = tiny_net();
    LoadLedger ledger(net);
    Rng rng(11);
    int id = 0;
    for (int round = 0; round < 200; ++round) {
        std::vector<UnitLoad> unit;
        for (ElemIdx s = 0; s < net.element_count(); ++s)
            if (rng.uniform() < 0.5) unit.push_back({s, rng.uniform(0.1, 20.0)});
        if (unit.empty()) continue;
        ledger.allocate({id++, rng.uniform(0.5, 3.0), int(rng.below(50)) + 1, false, unit});
        if (rng.uniform() < 0.3 && ledger.active_count() > 0) {
            auto ids = ledger.active_ids_sorted();
            ledger.remove(ids[rng.below(ids.size())]);
        }
        ledger.verify_consistency();
    }
}

TEST_CASE("fit check holds at the boundary") {
    SubstrateNetwork net = tiny_net(500.0);
    LoadLedger ledger(net);
    CHECK(ledger.fits({{net.node_elem(0), 500.0}}, 1.0));
    CHECK_FALSE(ledger.fits({{net.node_elem(0), 501.0}}, 1.0));
}

TEST_CASE("fit fails when any element of a multi-link path overflows") {
    SubstrateNetwork net = tiny_net(200000, 200000, 100.0);  // AB capacity 100
    LoadLedger ledger(net);
    ledger.allocate({1, 1.0, 10, false, {{net.link_elem(0), 100.0}}});  // saturate AB
    std::vector<UnitLoad> two_link_path{{net.link_elem(0), 10.0}, {net.link_elem(1), 10.0}};
    CHECK_FALSE(ledger.fits(two_link_path, 1.0));
    ledger.remove(1);
    CHECK(ledger.fits(two_link_path, 1.0));
}

TEST_CASE("departures release at arrival + duration") {
    SubstrateNetwork net = tiny_net();
    LoadLedger ledger(net);
    CHECK(ledger.release_departures(5).empty());
    ledger.allocate({7, 1.0, /*departure*/ 3, false, {{0, 10.0}}});  // arrival 1, duration 2
    CHECK(ledger.release_departures(2).empty());
    auto departed = ledger.release_departures(3);
    REQUIRE(departed.size() == 1);
    CHECK(departed[0].request_id == 7);
    CHECK(ledger.load(0) == 0.0);
}

TEST_CASE("all departures drain the ledger to zero") {
    SubstrateNetwork net = tiny_net();
    LoadLedger ledger(net);
    Rng rng(13);
    for (int id = 0; id < 100; ++id) {
        std::vector<UnitLoad> unit{{ElemIdx(rng.below(net.element_count())), rng.uniform(1, 30)}};
        int arrival = int(rng.below(40));
        ledger.allocate({id, rng.uniform(0.5, 2.0), arrival + 1 + int(rng.below(10)), false, unit});
    }
    ledger.release_departures(1000);
    CHECK(ledger.active_count() == 0);
    for (ElemIdx s = 0; s < net.element_count(); ++s) CHECK(ledger.load(s) == 0.0);
}

TEST_CASE("allocation beyond capacity aborts") {
    SubstrateNetwork net = tiny_net(100.0);
    LoadLedger ledger(net);
    CHECK_THROWS_AS(ledger.allocate({1, 1.0, 5, false, {{net.node_elem(0), 101.0}}}),
                    InvariantError);
}

TEST_CASE("double allocation of one request aborts") {
    SubstrateNetwork net = tiny_net();
    LoadLedger ledger(net);
    ledger.allocate({1, 1.0, 5, false, {{0, 1.0}}});
    CHECK_THROWS_AS(ledger.allocate({1, 1.0, 6, false, {{0, 1.0}}}), InvariantError);
}

TEST_CASE("embedding validation") {
    SubstrateNetwork net = tiny_net();
    Application app = one_vnf_app();
    Embedding good;
    good.node_map = {0, 2};
    good.link_paths = {{0, 1}};
    validate_embedding(net, app, good, 0);

    Embedding wrong_root = good;
    wrong_root.node_map[0] = 1;
    CHECK_THROWS_AS(validate_embedding(net, app, wrong_root, 0), InvariantError);

    Embedding broken_path = good;
    broken_path.link_paths = {{1}};  // BC does not start at A
    CHECK_THROWS_AS(validate_embedding(net, app, broken_path, 0), InvariantError);

    Embedding wrong_end = good;
    wrong_end.link_paths = {{0}};  // stops at B, vnf mapped to C
    CHECK_THROWS_AS(validate_embedding(net, app, wrong_end, 0), InvariantError);

    Embedding collocated;
    collocated.node_map = {0, 0};
    collocated.link_paths = {{}};
    validate_embedding(net, app, collocated, 0);  // empty path, zero link load
    EfficiencyMap eta;
    auto unit = unit_loads(net, app, eta, 0, collocated);
    for (auto& ul : unit) CHECK(net.is_node_elem(ul.elem));
}

TEST_CASE("application shape rules") {
    Application app;
    app.id = "bad";
    app.vnodes.push_back({"u", 1.0});  // root must have size 0
    CHECK_THROWS(app.validate());
    app.vnodes[0].size = 0;
    app.validate();

    app.vnodes.push_back({"f1", 10.0});
    app.vnodes.push_back({"f2", 10.0});
    app.vlinks.push_back({0, 1, 5.0});
    CHECK_THROWS(app.validate());  // f2 unattached
    app.vlinks.push_back({1, 2, 5.0});
    app.validate();
    app.vlinks.push_back({2, 1, 5.0});  // second parent for f1's child
    CHECK_THROWS(app.validate());
}

TEST_CASE("substrate validation") {
    SubstrateNetwork net;
    net.nodes.push_back({"A", Tier::Edge, 1, 1, false});
    net.nodes.push_back({"B", Tier::Edge, 1, 1, false});
    CHECK_THROWS(net.finalize());  // disconnected
    net.links.push_back({"AB", 0, 1, Tier::Edge, 1, 1});
    net.finalize();
    net.nodes.push_back({"A", Tier::Edge, 1, 1, false});
    CHECK_THROWS(net.finalize());  // duplicate id
}
