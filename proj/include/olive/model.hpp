#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "olive/common.hpp"

namespace olive::model {

enum class Tier { Edge, Transport, Core };

const char* tier_name(Tier t);
Tier tier_from_name(const std::string& name);

using NodeIdx = int;
using LinkIdx = int;
// Substrate elements share one index space: nodes first, then links.
using ElemIdx = int;

struct SubstrateNode {
    std::string id;
    Tier tier = Tier::Edge;
    double capacity = 0;   // CU
    double unit_cost = 0;  // cost per CU
    bool gpu = false;
};

struct SubstrateLink {
    std::string id;
    NodeIdx a = -1, b = -1;  // undirected; one shared capacity for both directions
    Tier tier = Tier::Edge;
    double capacity = 0;
    double unit_cost = 0;
};

class SubstrateNetwork {
public:
    std::string name;
    std::vector<SubstrateNode> nodes;
    std::vector<SubstrateLink> links;
    // adj[v] = (neighbor, link index)
    std::vector<std::vector<std::pair<NodeIdx, LinkIdx>>> adj;

    // Builds adjacency and validates: unique ids, valid endpoints, connected.
    void finalize();

    int node_count() const { return static_cast<int>(nodes.size()); }
    int link_count() const { return static_cast<int>(links.size()); }
    int element_count() const { return node_count() + link_count(); }

    ElemIdx node_elem(NodeIdx v) const { return v; }
    ElemIdx link_elem(LinkIdx l) const { return node_count() + l; }
    bool is_node_elem(ElemIdx e) const { return e < node_count(); }
    LinkIdx elem_link(ElemIdx e) const { return e - node_count(); }

    double capacity(ElemIdx e) const {
        return is_node_elem(e) ? nodes[e].capacity : links[elem_link(e)].capacity;
    }
    double unit_cost(ElemIdx e) const {
        return is_node_elem(e) ? nodes[e].unit_cost : links[elem_link(e)].unit_cost;
    }
    const std::string& elem_id(ElemIdx e) const {
        return is_node_elem(e) ? nodes[e].id : links[elem_link(e)].id;
    }

    NodeIdx node_index(const std::string& id) const;
    std::vector<NodeIdx> tier_nodes(Tier t) const;

private:
    std::unordered_map<std::string, NodeIdx> node_by_id_;
};

struct VirtualNode {
    std::string id;
    double size = 0;  // D(q), CU per unit demand
};

struct VirtualLink {
    int parent = -1, child = -1;  // vnode indices, oriented parent -> child
    double size = 0;
};

// Rooted virtual-network topology. vnodes[0] is the user/root node: it is
// pinned to the request origin and has size 0.
struct Application {
    std::string id;
    std::vector<VirtualNode> vnodes;
    std::vector<VirtualLink> vlinks;

    int root() const { return 0; }
    int vnode_count() const { return static_cast<int>(vnodes.size()); }
    int vlink_count() const { return static_cast<int>(vlinks.size()); }
    // Virtual elements share one index space: vnodes first, then vlinks.
    int velem_count() const { return vnode_count() + vlink_count(); }
    double elem_size(int q) const {
        return q < vnode_count() ? vnodes[q].size : vlinks[q - vnode_count()].size;
    }

    void validate() const;  // single root, root size 0, rooted-tree shape
};

// eta(q, s): resource multiplier for placing virtual element q of an app on
// substrate element s. Defaults to 1. +inf marks a forbidden pair.
class EfficiencyMap {
public:
    static constexpr double kForbidden = std::numeric_limits<double>::infinity();

    double eta(int app, int velem, ElemIdx s) const {
        auto it = overrides_.find(key(app, velem, s));
        return it == overrides_.end() ? 1.0 : it->second;
    }
    bool is_forbidden(int app, int velem, ElemIdx s) const {
        return std::isinf(eta(app, velem, s));
    }
    void set(int app, int velem, ElemIdx s, double value);
    void forbid(int app, int velem, ElemIdx s) { set(app, velem, s, kForbidden); }
    size_t override_count() const { return overrides_.size(); }
    // (app, velem, selem, value) triples for serialization, sorted by key
    std::vector<std::tuple<int, int, ElemIdx, double>> entries() const;

private:
    static uint64_t key(int app, int velem, ElemIdx s) {
        return (static_cast<uint64_t>(app) << 48) | (static_cast<uint64_t>(velem) << 32) |
               static_cast<uint32_t>(s);
    }
    std::unordered_map<uint64_t, double> overrides_;
};

enum class RequestStatus { Pending, Allocated, Rejected, Preempted, Departed };

struct Request {
    int id = -1;
    int app = -1;        // index into the application set
    NodeIdx origin = -1;
    double size = 0;     // d*, CU
    int arrival = 0;     // slot
    int duration = 1;    // slots, revealed only at departure; active for arrival <= t < arrival+duration
};

// Unsplittable mapping of one request: every vnode on exactly one substrate
// node, every vlink on one simple path (empty when endpoints collocate).
struct Embedding {
    std::vector<NodeIdx> node_map;
    std::vector<std::vector<LinkIdx>> link_paths;
};

struct UnitLoad {
    ElemIdx elem;
    double cu;  // CU per unit of request demand
};

// Load of virtual element q on substrate element s for one request:
// x * d*(r) * D(q) * eta(q, s). A vlink mapped to a path loads every path
// link by this amount independently.
double element_load(const Request& r, const Application& app, const EfficiencyMap& eta,
                    const Embedding& emb, int velem, ElemIdx s,
                    const SubstrateNetwork& net);

// Per-element CU consumed by one unit of demand under this embedding,
// sorted by element index with merged duplicates. Throws on forbidden eta.
std::vector<UnitLoad> unit_loads(const SubstrateNetwork& net, const Application& app,
                                 const EfficiencyMap& eta, int app_idx, const Embedding& emb);

// Structural checks: root pinned to origin, paths connect mapped endpoints.
void validate_embedding(const SubstrateNetwork& net, const Application& app,
                        const Embedding& emb, NodeIdx origin);

// Tracks current load per substrate element together with the active
// allocations that produce it.
class LoadLedger {
public:
    explicit LoadLedger(const SubstrateNetwork& net);

    struct Entry {
        int request_id;
        double demand;
        int departure_slot;
        bool planned;
        std::vector<UnitLoad> unit;
    };

    void allocate(Entry e);
    // Removes all allocations with departure_slot <= t, in request-id order.
    std::vector<Entry> release_departures(int t);
    // Removes one allocation (preemption); returns its entry.
    Entry remove(int request_id);

    double load(ElemIdx e) const { return load_[e]; }
    // C(s) - load(s); throws InvariantError if negative beyond kResidualEps.
    double residual(ElemIdx e) const;
    // True iff every element keeps residual >= 0 (within kResidualEps) after
    // adding demand * unit.
    bool fits(const std::vector<UnitLoad>& unit, double demand) const;

    // active request ids currently loading an element (computed on demand)
    std::set<int> contributors(ElemIdx e) const;
    bool is_active(int request_id) const { return active_.count(request_id) > 0; }
    const Entry& entry(int request_id) const;
    const std::map<int, Entry>& active() const { return active_; }
    std::vector<int> active_ids_sorted() const;
    size_t active_count() const { return active_.size(); }

    // Recomputes loads from the active set and compares with the running
    // totals (1e-9 relative); throws on mismatch. Also enforces load <= C.
    void verify_consistency() const;

    const std::vector<double>& loads() const { return load_; }

private:
    const SubstrateNetwork& net_;
    std::vector<double> load_;
    std::vector<int> owners_;  // per-element count of contributing allocations
    std::map<int, Entry> active_;
};

}  // namespace olive::model
