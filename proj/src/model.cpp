#include "olive/model.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace olive::model {

const char* tier_name(Tier t) {
    switch (t) {
        case Tier::Edge: return "edge";
        case Tier::Transport: return "transport";
        case Tier::Core: return "core";
    }
    return "?";
}

Tier tier_from_name(const std::string& name) {
    if (name == "edge") return Tier::Edge;
    if (name == "transport") return Tier::Transport;
    if (name == "core") return Tier::Core;
    throw std::runtime_error("unknown tier: " + name);
}

void SubstrateNetwork::finalize() {
    node_by_id_.clear();
    for (int v = 0; v < node_count(); ++v) {
        if (nodes[v].capacity < 0 || nodes[v].unit_cost < 0)
            throw std::runtime_error("node " + nodes[v].id + ": negative capacity or cost");
        if (!node_by_id_.emplace(nodes[v].id, v).second)
            throw std::runtime_error("duplicate node id: " + nodes[v].id);
    }
    std::set<std::string> link_ids;
    adj.assign(node_count(), {});
    for (int l = 0; l < link_count(); ++l) {
        const auto& lk = links[l];
        if (lk.a < 0 || lk.a >= node_count() || lk.b < 0 || lk.b >= node_count() || lk.a == lk.b)
            throw std::runtime_error("link " + lk.id + ": bad endpoints");
        if (lk.capacity < 0 || lk.unit_cost < 0)
            throw std::runtime_error("link " + lk.id + ": negative capacity or cost");
        if (!link_ids.insert(lk.id).second)
            throw std::runtime_error("duplicate link id: " + lk.id);
        adj[lk.a].push_back({lk.b, l});
        adj[lk.b].push_back({lk.a, l});
    }
    for (auto& a : adj) std::sort(a.begin(), a.end());

    if (node_count() == 0) throw std::runtime_error("empty substrate");
    std::vector<char> seen(node_count(), 0);
    std::queue<NodeIdx> q;
    q.push(0);
    seen[0] = 1;
    int reached = 1;
    while (!q.empty()) {
        NodeIdx v = q.front();
        q.pop();
        for (auto [w, l] : adj[v])
            if (!seen[w]) {
                seen[w] = 1;
                ++reached;
                q.push(w);
            }
    }
    if (reached != node_count())
        throw std::runtime_error("substrate '" + name + "' is not connected");
}

NodeIdx SubstrateNetwork::node_index(const std::string& id) const {
    auto it = node_by_id_.find(id);
    if (it == node_by_id_.end()) throw std::runtime_error("unknown node id: " + id);
    return it->second;
}

std::vector<NodeIdx> SubstrateNetwork::tier_nodes(Tier t) const {
    std::vector<NodeIdx> out;
    for (int v = 0; v < node_count(); ++v)
        if (nodes[v].tier == t) out.push_back(v);
    return out;
}

void Application::validate() const {
    if (vnodes.empty()) throw std::runtime_error("application " + id + ": no virtual nodes");
    if (vnodes[0].size != 0.0)
        throw std::runtime_error("application " + id + ": root must have size 0");
    for (const auto& vn : vnodes)
        if (vn.size < 0) throw std::runtime_error("application " + id + ": negative vnode size");
    std::vector<int> indeg(vnodes.size(), 0);
    for (const auto& vl : vlinks) {
        if (vl.parent < 0 || vl.parent >= vnode_count() || vl.child < 0 ||
            vl.child >= vnode_count() || vl.parent == vl.child)
            throw std::runtime_error("application " + id + ": bad vlink endpoints");
        if (vl.size < 0) throw std::runtime_error("application " + id + ": negative vlink size");
        indeg[vl.child]++;
    }
    if (indeg[0] != 0) throw std::runtime_error("application " + id + ": root has a parent");
    for (int q = 1; q < vnode_count(); ++q)
        if (indeg[q] != 1)
            throw std::runtime_error("application " + id + ": not a rooted tree");
    if (static_cast<int>(vlinks.size()) != vnode_count() - 1)
        throw std::runtime_error("application " + id + ": link count != node count - 1");
}

void EfficiencyMap::set(int app, int velem, ElemIdx s, double value) {
    if (!(value >= 0))  // rejects NaN and negatives, allows +inf
        throw std::runtime_error("eta must be >= 0");
    overrides_[key(app, velem, s)] = value;
}

std::vector<std::tuple<int, int, ElemIdx, double>> EfficiencyMap::entries() const {
    std::vector<std::tuple<int, int, ElemIdx, double>> out;
    out.reserve(overrides_.size());
    for (const auto& [k, v] : overrides_)
        out.emplace_back(static_cast<int>(k >> 48), static_cast<int>((k >> 32) & 0xffff),
                         static_cast<ElemIdx>(k & 0xffffffff), v);
    std::sort(out.begin(), out.end());
    return out;
}

double element_load(const Request& r, const Application& app, const EfficiencyMap& eta,
                    const Embedding& emb, int velem, ElemIdx s, const SubstrateNetwork& net) {
    int x = 0;
    if (velem < app.vnode_count()) {
        if (!net.is_node_elem(s)) return 0.0;
        x = (emb.node_map[velem] == s) ? 1 : 0;
    } else {
        if (net.is_node_elem(s)) return 0.0;
        LinkIdx l = net.elem_link(s);
        const auto& path = emb.link_paths[velem - app.vnode_count()];
        x = std::count(path.begin(), path.end(), l) > 0 ? 1 : 0;
    }
    if (x == 0) return 0.0;
    double e = eta.eta(r.app, velem, s);
    if (std::isinf(e))
        throw InvariantError("embedding uses a forbidden (virtual, substrate) pair");
    return r.size * app.elem_size(velem) * e;
}

std::vector<UnitLoad> unit_loads(const SubstrateNetwork& net, const Application& app,
                                 const EfficiencyMap& eta, int app_idx, const Embedding& emb) {
    std::vector<double> acc(net.element_count(), 0.0);
    for (int q = 0; q < app.vnode_count(); ++q) {
        ElemIdx s = net.node_elem(emb.node_map[q]);
        double e = eta.eta(app_idx, q, s);
        if (std::isinf(e))
            throw InvariantError("embedding places vnode on a forbidden substrate node");
        acc[s] += app.vnodes[q].size * e;
    }
    for (int vl = 0; vl < app.vlink_count(); ++vl) {
        int velem = app.vnode_count() + vl;
        for (LinkIdx l : emb.link_paths[vl]) {
            ElemIdx s = net.link_elem(l);
            double e = eta.eta(app_idx, velem, s);
            if (std::isinf(e))
                throw InvariantError("embedding routes vlink over a forbidden substrate link");
            acc[s] += app.vlinks[vl].size * e;
        }
    }
    std::vector<UnitLoad> out;
    for (ElemIdx s = 0; s < net.element_count(); ++s)
        if (acc[s] != 0.0) out.push_back({s, acc[s]});
    return out;
}

void validate_embedding(const SubstrateNetwork& net, const Application& app,
                        const Embedding& emb, NodeIdx origin) {
    invariant(static_cast<int>(emb.node_map.size()) == app.vnode_count(),
              "embedding: node map size mismatch");
    invariant(static_cast<int>(emb.link_paths.size()) == app.vlink_count(),
              "embedding: path list size mismatch");
    invariant(emb.node_map[app.root()] == origin, "embedding: root not at request origin");
    for (NodeIdx v : emb.node_map)
        invariant(v >= 0 && v < net.node_count(), "embedding: node out of range");
    for (int vl = 0; vl < app.vlink_count(); ++vl) {
        NodeIdx from = emb.node_map[app.vlinks[vl].parent];
        NodeIdx to = emb.node_map[app.vlinks[vl].child];
        const auto& path = emb.link_paths[vl];
        if (path.empty()) {
            invariant(from == to, "embedding: empty path between distinct nodes");
            continue;
        }
        NodeIdx at = from;
        for (LinkIdx l : path) {
            const auto& lk = net.links[l];
            invariant(lk.a == at || lk.b == at, "embedding: path is not connected");
            at = (lk.a == at) ? lk.b : lk.a;
        }
        invariant(at == to, "embedding: path does not reach the mapped child");
    }
}

LoadLedger::LoadLedger(const SubstrateNetwork& net)
    : net_(net), load_(net.element_count(), 0.0), owners_(net.element_count(), 0) {}

void LoadLedger::allocate(Entry e) {
    invariant(active_.find(e.request_id) == active_.end(),
              "ledger: request already allocated");
    for (const auto& ul : e.unit) {
        load_[ul.elem] += ul.cu * e.demand;
        owners_[ul.elem]++;
        if (load_[ul.elem] > net_.capacity(ul.elem) + kResidualEps)
            throw InvariantError("ledger: allocation exceeds capacity on " +
                                 net_.elem_id(ul.elem));
    }
    active_.emplace(e.request_id, std::move(e));
}

std::vector<LoadLedger::Entry> LoadLedger::release_departures(int t) {
    std::vector<int> ids;
    for (const auto& [id, e] : active_)
        if (e.departure_slot <= t) ids.push_back(id);
    std::vector<Entry> departed;
    departed.reserve(ids.size());
    for (int id : ids) departed.push_back(remove(id));
    return departed;
}

LoadLedger::Entry LoadLedger::remove(int request_id) {
    auto it = active_.find(request_id);
    invariant(it != active_.end(), "ledger: removing unknown request");
    Entry e = std::move(it->second);
    active_.erase(it);
    for (const auto& ul : e.unit) {
        load_[ul.elem] -= ul.cu * e.demand;
        owners_[ul.elem]--;
        if (owners_[ul.elem] == 0) {
            // an element without contributors carries exactly zero load; only
            // round-off residue may remain at this point
            invariant(std::abs(load_[ul.elem]) < 1e-6, "ledger: residue without owners");
            load_[ul.elem] = 0;
        } else if (load_[ul.elem] < 0) {
            invariant(load_[ul.elem] > -kResidualEps, "ledger: negative load");
            load_[ul.elem] = 0;
        }
    }
    return e;
}

double LoadLedger::residual(ElemIdx e) const {
    double r = net_.capacity(e) - load_[e];
    invariant(r > -kResidualEps, "ledger: negative residual on " + net_.elem_id(e));
    return r < 0 ? 0 : r;
}

bool LoadLedger::fits(const std::vector<UnitLoad>& unit, double demand) const {
    for (const auto& ul : unit)
        if (load_[ul.elem] + ul.cu * demand > net_.capacity(ul.elem) + kResidualEps)
            return false;
    return true;
}

std::set<int> LoadLedger::contributors(ElemIdx e) const {
    std::set<int> out;
    for (const auto& [id, entry] : active_)
        for (const auto& ul : entry.unit)
            if (ul.elem == e) {
                out.insert(id);
                break;
            }
    return out;
}

const LoadLedger::Entry& LoadLedger::entry(int request_id) const {
    auto it = active_.find(request_id);
    invariant(it != active_.end(), "ledger: unknown request");
    return it->second;
}

std::vector<int> LoadLedger::active_ids_sorted() const {
    std::vector<int> ids;
    ids.reserve(active_.size());
    for (const auto& [id, e] : active_) ids.push_back(id);
    return ids;  // std::map keeps them sorted
}

void LoadLedger::verify_consistency() const {
    std::vector<double> fresh(net_.element_count(), 0.0);
    for (const auto& [id, e] : active_)
        for (const auto& ul : e.unit) fresh[ul.elem] += ul.cu * e.demand;
    for (ElemIdx s = 0; s < net_.element_count(); ++s) {
        double scale = std::max({1.0, std::abs(fresh[s]), std::abs(load_[s])});
        invariant(std::abs(fresh[s] - load_[s]) <= 1e-9 * scale,
                  "ledger: incremental load diverged from recomputation on " + net_.elem_id(s) +
                      " (incremental " + std::to_string(load_[s]) + ", recomputed " +
                      std::to_string(fresh[s]) + ")");
        invariant(load_[s] <= net_.capacity(s) + kResidualEps,
                  "ledger: load exceeds capacity on " + net_.elem_id(s));
    }
}

}  // namespace olive::model
