#include "olive/workload.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace olive::workload {

using model::Application;
using model::EfficiencyMap;
using model::NodeIdx;
using model::Request;
using model::SubstrateNetwork;
using model::Tier;

std::optional<TopologySpec> preset_topology(const std::string& name) {
    TopologySpec s;
    s.name = name;
    if (name == "tiered10") {
        s.edge_nodes = 7; s.transport_nodes = 2; s.core_nodes = 1; s.links = 12;
    } else if (name == "iris") {
        s.edge_nodes = 31; s.transport_nodes = 13; s.core_nodes = 6; s.links = 64;
    } else if (name == "citta-studi") {
        s.edge_nodes = 18; s.transport_nodes = 8; s.core_nodes = 4; s.links = 35;
    } else if (name == "5gen") {
        s.edge_nodes = 49; s.transport_nodes = 20; s.core_nodes = 9; s.links = 100;
    } else if (name == "100n150e") {
        s.edge_nodes = 63; s.transport_nodes = 25; s.core_nodes = 12; s.links = 150;
    } else {
        return std::nullopt;
    }
    return s;
}

std::vector<std::string> preset_names() {
    return {"tiered10", "iris", "citta-studi", "5gen", "100n150e"};
}

namespace {
Tier link_tier(Tier a, Tier b) {
    // a link inherits the lower tier of its endpoints
    auto rank = [](Tier t) { return t == Tier::Edge ? 0 : (t == Tier::Transport ? 1 : 2); };
    return rank(a) < rank(b) ? a : b;
}

const TierParams& tier_params(const TopologySpec& s, Tier t) {
    return t == Tier::Edge ? s.edge : (t == Tier::Transport ? s.transport : s.core);
}
}  // namespace

model::SubstrateNetwork build_topology(const TopologySpec& spec) {
    if (spec.edge_nodes < 1 || spec.core_nodes < 1 || spec.transport_nodes < 1)
        throw std::runtime_error("topology: each tier needs at least one node");
    Rng rng(spec.seed);
    SubstrateNetwork net;
    net.name = spec.name;

    auto add_node = [&](Tier t, int i) {
        model::SubstrateNode n;
        const char* prefix = t == Tier::Edge ? "e" : (t == Tier::Transport ? "t" : "c");
        n.id = prefix + std::to_string(i);
        n.tier = t;
        const TierParams& p = tier_params(spec, t);
        n.capacity = p.node_capacity;
        n.unit_cost = p.node_cost_mean * rng.uniform(spec.cost_jitter_lo, spec.cost_jitter_hi);
        net.nodes.push_back(n);
        return static_cast<NodeIdx>(net.nodes.size() - 1);
    };

    std::vector<NodeIdx> cores, transports, edges;
    for (int i = 0; i < spec.core_nodes; ++i) cores.push_back(add_node(Tier::Core, i));
    for (int i = 0; i < spec.transport_nodes; ++i) transports.push_back(add_node(Tier::Transport, i));
    for (int i = 0; i < spec.edge_nodes; ++i) edges.push_back(add_node(Tier::Edge, i));

    std::set<std::pair<NodeIdx, NodeIdx>> used;
    auto add_link = [&](NodeIdx a, NodeIdx b) {
        if (a == b) return false;
        auto key = std::minmax(a, b);
        if (!used.insert(key).second) return false;
        model::SubstrateLink l;
        l.id = "l" + std::to_string(net.links.size());
        l.a = a;
        l.b = b;
        l.tier = link_tier(net.nodes[a].tier, net.nodes[b].tier);
        const TierParams& p = tier_params(spec, l.tier);
        l.capacity = p.link_capacity;
        l.unit_cost = p.link_cost;
        net.links.push_back(l);
        return true;
    };

    // spanning structure
    if (cores.size() == 2) add_link(cores[0], cores[1]);
    if (cores.size() > 2)
        for (size_t i = 0; i < cores.size(); ++i) add_link(cores[i], cores[(i + 1) % cores.size()]);
    for (size_t i = 0; i < transports.size(); ++i)
        add_link(transports[i], cores[rng.below(cores.size())]);
    for (size_t i = 0; i < edges.size(); ++i)
        add_link(edges[i], transports[rng.below(transports.size())]);

    if (static_cast<int>(net.links.size()) > spec.links)
        throw std::runtime_error("topology: link budget below spanning structure");

    // extra cross links: second uplinks and intra-tier shortcuts
    int guard = 0;
    while (static_cast<int>(net.links.size()) < spec.links) {
        if (++guard > 100000) throw std::runtime_error("topology: cannot place requested links");
        switch (rng.below(4)) {
            case 0: add_link(edges[rng.below(edges.size())], transports[rng.below(transports.size())]); break;
            case 1: add_link(transports[rng.below(transports.size())], transports[rng.below(transports.size())]); break;
            case 2: add_link(transports[rng.below(transports.size())], cores[rng.below(cores.size())]); break;
            default: add_link(cores[rng.below(cores.size())], cores[rng.below(cores.size())]); break;
        }
    }
    net.finalize();
    return net;
}

void mark_gpu_nodes(model::SubstrateNetwork& net, int edge_count, Rng& rng) {
    std::vector<NodeIdx> edges = net.tier_nodes(Tier::Edge);
    for (auto& n : net.nodes)
        if (n.tier == Tier::Core) n.gpu = true;
    for (int k = 0; k < edge_count && !edges.empty(); ++k) {
        size_t i = rng.below(edges.size());
        net.nodes[edges[i]].gpu = true;
        edges.erase(edges.begin() + i);
    }
}

const char* app_kind_name(AppKind k) {
    switch (k) {
        case AppKind::Chain: return "chain";
        case AppKind::Tree: return "tree";
        case AppKind::Accelerator: return "accelerator";
        case AppKind::GpuChain: return "gpu-chain";
    }
    return "?";
}

namespace {
AppKind app_kind_from_name(const std::string& s) {
    if (s == "chain") return AppKind::Chain;
    if (s == "tree") return AppKind::Tree;
    if (s == "accelerator") return AppKind::Accelerator;
    if (s == "gpu-chain") return AppKind::GpuChain;
    throw std::runtime_error("unknown application kind: " + s);
}

double draw_size(const AppGenSpec& spec, Rng& rng) {
    return std::max(spec.size_floor, rng.normal(spec.elem_size_mean, spec.elem_size_std));
}

Application make_chain(const std::string& id, int vnfs, const AppGenSpec& spec, Rng& rng) {
    Application a;
    a.id = id;
    a.vnodes.push_back({"u", 0.0});
    for (int i = 1; i <= vnfs; ++i) {
        a.vnodes.push_back({"f" + std::to_string(i), draw_size(spec, rng)});
        a.vlinks.push_back({i - 1, i, draw_size(spec, rng)});
    }
    return a;
}
}  // namespace

AppSet gen_applications(const AppGenSpec& spec, Rng& rng) {
    AppSet out;
    auto push = [&](Application a, AppKind k, int gpu_vnf) {
        a.validate();
        out.apps.push_back(std::move(a));
        out.kinds.push_back(k);
        out.gpu_vnf.push_back(gpu_vnf);
    };

    for (int c = 0; c < spec.chains; ++c) {
        int vnfs = rng.uniform_int(spec.vnf_lo, spec.vnf_hi);
        push(make_chain("chain" + std::to_string(c), vnfs, spec, rng), AppKind::Chain, -1);
    }
    for (int t = 0; t < spec.trees; ++t) {
        // root -> f1, then the remaining VNFs split into two branches under f1
        int vnfs = rng.uniform_int(spec.vnf_lo, spec.vnf_hi);
        Application a;
        a.id = "tree" + std::to_string(t);
        a.vnodes.push_back({"u", 0.0});
        a.vnodes.push_back({"f1", draw_size(spec, rng)});
        a.vlinks.push_back({0, 1, draw_size(spec, rng)});
        int first_branch = (vnfs - 1 + 1) / 2;
        int tip_a = 1, tip_b = 1;
        for (int i = 2; i <= vnfs; ++i) {
            a.vnodes.push_back({"f" + std::to_string(i), draw_size(spec, rng)});
            int& tip = (i - 2 < first_branch) ? tip_a : tip_b;
            a.vlinks.push_back({tip, i, draw_size(spec, rng)});
            tip = i;
        }
        push(std::move(a), AppKind::Tree, -1);
    }
    for (int c = 0; c < spec.accelerators; ++c) {
        int vnfs = rng.uniform_int(spec.vnf_lo, spec.vnf_hi);
        Application a = make_chain("acc" + std::to_string(c), vnfs, spec, rng);
        // the accelerator stage shrinks its downstream link; any VNF with a
        // downstream link qualifies
        int stage = rng.uniform_int(1, vnfs - 1);
        a.vlinks[stage].size *= spec.accel_link_factor;  // vlink[i] goes f_i -> f_{i+1}
        push(std::move(a), AppKind::Accelerator, -1);
    }
    for (int c = 0; c < spec.gpu_chains; ++c) {
        int vnfs = rng.uniform_int(spec.vnf_lo, spec.vnf_hi);
        Application a = make_chain("gpu" + std::to_string(c), vnfs, spec, rng);
        int gpu_stage = rng.uniform_int(1, vnfs);
        push(std::move(a), AppKind::GpuChain, gpu_stage);
    }
    out.mixture.assign(out.apps.size(), 1.0);
    return out;
}

model::EfficiencyMap build_efficiency_map(const model::SubstrateNetwork& net, const AppSet& apps) {
    EfficiencyMap eta;
    std::vector<NodeIdx> gpu_nodes, plain_nodes;
    for (NodeIdx v = 0; v < net.node_count(); ++v)
        (net.nodes[v].gpu ? gpu_nodes : plain_nodes).push_back(v);
    if (gpu_nodes.empty()) return eta;
    for (size_t ai = 0; ai < apps.apps.size(); ++ai) {
        const Application& a = apps.apps[ai];
        int gv = apps.gpu_vnf[ai];
        for (int q = 1; q < a.vnode_count(); ++q) {
            if (q == gv) {
                for (NodeIdx v : plain_nodes) eta.forbid(static_cast<int>(ai), q, net.node_elem(v));
            } else {
                for (NodeIdx v : gpu_nodes) eta.forbid(static_cast<int>(ai), q, net.node_elem(v));
            }
        }
    }
    return eta;
}

std::vector<double> zipf_weights(int n, double alpha) {
    std::vector<double> w(n);
    double total = 0;
    for (int i = 0; i < n; ++i) {
        w[i] = 1.0 / std::pow(i + 1, alpha);
        total += w[i];
    }
    for (double& x : w) x /= total;
    return w;
}

Trace gen_mmpp_trace(const TraceSpec& spec, const model::SubstrateNetwork& net,
                     const std::vector<double>& app_mixture) {
    if (app_mixture.empty()) throw std::runtime_error("trace: no applications");
    const MmppParams& mm = spec.mmpp;
    if (!(mm.high_factor > mm.low_factor) || mm.low_factor < 0)
        throw std::runtime_error("trace: bad MMPP rate factors");
    if (mm.p_high_to_low <= 0 || mm.p_high_to_low >= 1 || mm.p_low_to_high <= 0 ||
        mm.p_low_to_high >= 1)
        throw std::runtime_error("trace: switch probabilities must lie in (0,1)");

    Rng rng(spec.seed);
    std::vector<NodeIdx> edges = net.tier_nodes(Tier::Edge);
    if (edges.empty()) throw std::runtime_error("trace: substrate has no edge nodes");
    std::vector<double> pop = zipf_weights(static_cast<int>(edges.size()), spec.zipf_alpha);

    // stationary start so the history window is not biased by the initial state
    double p_high = mm.p_low_to_high / (mm.p_high_to_low + mm.p_low_to_high);
    bool high = rng.uniform() < p_high;

    Trace out;
    out.spec = spec;
    int next_id = 0;
    for (int t = 0; t < spec.horizon(); ++t) {
        if (t > 0) {
            double u = rng.uniform();
            if (high && u < mm.p_high_to_low) high = false;
            else if (!high && u < mm.p_low_to_high) high = true;
        }
        double state_rate = spec.lambda_per_node * (high ? mm.high_factor : mm.low_factor);
        for (size_t i = 0; i < edges.size(); ++i) {
            double rate = state_rate * static_cast<double>(edges.size()) * pop[i];
            int arrivals = rng.poisson(rate);
            for (int k = 0; k < arrivals; ++k) {
                Request r;
                r.id = next_id++;
                r.app = static_cast<int>(rng.categorical(app_mixture));
                r.origin = edges[i];
                r.size = std::max(0.1, rng.normal(spec.size_mean, spec.size_std));
                r.arrival = t;
                r.duration = rng.geometric(spec.duration_mean);
                out.requests.push_back(r);
            }
        }
    }
    return out;
}

double mean_app_node_demand(const AppSet& apps) {
    double total_w = 0, acc = 0;
    for (size_t i = 0; i < apps.apps.size(); ++i) {
        double node_sum = 0;
        for (const auto& vn : apps.apps[i].vnodes) node_sum += vn.size;
        acc += apps.mixture[i] * node_sum;
        total_w += apps.mixture[i];
    }
    if (total_w == 0) throw std::runtime_error("empty application mixture");
    return acc / total_w;
}

TraceSpec scale_to_utilization(const TraceSpec& spec, double target,
                               const model::SubstrateNetwork& net, const AppSet& apps) {
    if (!(target >= 0.2 && target <= 2.0))
        throw std::runtime_error("utilization target must lie in [0.2, 2.0]");
    double edge_capacity = 0;
    int edge_count = 0;
    for (const auto& n : net.nodes)
        if (n.tier == Tier::Edge) {
            edge_capacity += n.capacity;
            ++edge_count;
        }
    if (edge_count == 0) throw std::runtime_error("substrate has no edge nodes");
    double demand_per_unit = mean_app_node_demand(apps);
    double expected_active = spec.lambda_per_node * edge_count * spec.duration_mean;
    if (demand_per_unit <= 0 || expected_active <= 0)
        throw std::runtime_error("cannot scale: zero expected demand");
    TraceSpec out = spec;
    out.size_mean = target * edge_capacity / (expected_active * demand_per_unit);
    return out;
}

// ------------------------- serialization -------------------------

using nlohmann::json;

void topology_to_json(const model::SubstrateNetwork& net, std::ostream& os) {
    json j;
    j["name"] = net.name;
    j["nodes"] = json::array();
    for (const auto& n : net.nodes) {
        json jn{{"id", n.id},
                {"tier", model::tier_name(n.tier)},
                {"capacity", n.capacity},
                {"cost", n.unit_cost}};
        if (n.gpu) jn["gpu"] = true;
        j["nodes"].push_back(jn);
    }
    j["links"] = json::array();
    for (const auto& l : net.links)
        j["links"].push_back(json{{"id", l.id},
                                  {"a", net.nodes[l.a].id},
                                  {"b", net.nodes[l.b].id},
                                  {"tier", model::tier_name(l.tier)},
                                  {"capacity", l.capacity},
                                  {"cost", l.unit_cost}});
    os << j.dump(1) << "\n";
}

model::SubstrateNetwork topology_from_json(std::istream& is) {
    json j = json::parse(is);
    SubstrateNetwork net;
    net.name = j.value("name", "unnamed");
    std::unordered_map<std::string, NodeIdx> index;
    for (const auto& jn : j.at("nodes")) {
        model::SubstrateNode n;
        n.id = jn.at("id").get<std::string>();
        n.tier = model::tier_from_name(jn.at("tier").get<std::string>());
        n.capacity = jn.at("capacity").get<double>();
        n.unit_cost = jn.at("cost").get<double>();
        n.gpu = jn.value("gpu", false);
        index[n.id] = static_cast<NodeIdx>(net.nodes.size());
        net.nodes.push_back(n);
    }
    for (const auto& jl : j.at("links")) {
        model::SubstrateLink l;
        l.id = jl.at("id").get<std::string>();
        l.a = index.at(jl.at("a").get<std::string>());
        l.b = index.at(jl.at("b").get<std::string>());
        l.tier = model::tier_from_name(jl.at("tier").get<std::string>());
        l.capacity = jl.at("capacity").get<double>();
        l.unit_cost = jl.at("cost").get<double>();
        net.links.push_back(l);
    }
    net.finalize();
    return net;
}

void apps_to_json(const AppSet& apps, const model::EfficiencyMap& eta,
                  const model::SubstrateNetwork& net, std::ostream& os) {
    json j;
    j["apps"] = json::array();
    for (size_t i = 0; i < apps.apps.size(); ++i) {
        const Application& a = apps.apps[i];
        json ja{{"id", a.id},
                {"kind", app_kind_name(apps.kinds[i])},
                {"gpu_vnf", apps.gpu_vnf[i]},
                {"mixture", apps.mixture[i]}};
        ja["nodes"] = json::array();
        for (const auto& vn : a.vnodes) ja["nodes"].push_back(json{{"id", vn.id}, {"size", vn.size}});
        ja["links"] = json::array();
        for (const auto& vl : a.vlinks)
            ja["links"].push_back(json{{"parent", vl.parent}, {"child", vl.child}, {"size", vl.size}});
        j["apps"].push_back(ja);
    }
    // sparse eta overrides as [app, virtual element, substrate element id, value];
    // forbidden pairs serialize as -1
    j["eta"] = json::array();
    for (const auto& [app, velem, selem, value] : eta.entries())
        j["eta"].push_back(json::array(
            {app, velem, net.elem_id(selem), std::isinf(value) ? -1.0 : value}));
    os << j.dump(1) << "\n";
}

std::pair<AppSet, model::EfficiencyMap> apps_from_json(std::istream& is,
                                                       const model::SubstrateNetwork& net) {
    json j = json::parse(is);
    AppSet apps;
    for (const auto& ja : j.at("apps")) {
        Application a;
        a.id = ja.at("id").get<std::string>();
        for (const auto& jn : ja.at("nodes"))
            a.vnodes.push_back({jn.at("id").get<std::string>(), jn.at("size").get<double>()});
        for (const auto& jl : ja.at("links"))
            a.vlinks.push_back({jl.at("parent").get<int>(), jl.at("child").get<int>(),
                                jl.at("size").get<double>()});
        a.validate();
        apps.apps.push_back(std::move(a));
        apps.kinds.push_back(app_kind_from_name(ja.at("kind").get<std::string>()));
        apps.gpu_vnf.push_back(ja.at("gpu_vnf").get<int>());
        apps.mixture.push_back(ja.value("mixture", 1.0));
    }
    EfficiencyMap eta;
    if (j.contains("eta")) {
        std::unordered_map<std::string, model::ElemIdx> by_id;
        for (model::ElemIdx e = 0; e < net.element_count(); ++e) by_id[net.elem_id(e)] = e;
        for (const auto& je : j.at("eta")) {
            double v = je.at(3).get<double>();
            eta.set(je.at(0).get<int>(), je.at(1).get<int>(), by_id.at(je.at(2).get<std::string>()),
                    v < 0 ? EfficiencyMap::kForbidden : v);
        }
    }
    return {std::move(apps), std::move(eta)};
}

void trace_to_csv(const Trace& trace, const model::SubstrateNetwork& net, std::ostream& os) {
    os << "request_id,arrival_slot,duration,origin,app,size\n";
    char buf[64];
    for (const auto& r : trace.requests) {
        snprintf(buf, sizeof buf, "%.17g", r.size);
        os << r.id << ',' << r.arrival << ',' << r.duration << ',' << net.nodes[r.origin].id << ','
           << r.app << ',' << buf << "\n";
    }
}

Trace trace_from_csv(std::istream& is, const model::SubstrateNetwork& net) {
    Trace out;
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("trace csv: empty file");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        Request r;
        std::getline(ss, field, ','); r.id = std::stoi(field);
        std::getline(ss, field, ','); r.arrival = std::stoi(field);
        std::getline(ss, field, ','); r.duration = std::stoi(field);
        std::getline(ss, field, ','); r.origin = net.node_index(field);
        std::getline(ss, field, ','); r.app = std::stoi(field);
        std::getline(ss, field, ','); r.size = std::stod(field);
        out.requests.push_back(r);
    }
    return out;
}

}  // namespace olive::workload
