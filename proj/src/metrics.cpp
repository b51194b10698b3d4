#include "olive/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace olive::metrics {

using engine::Decision;
using engine::RequestOutcome;
using model::Request;
using model::RequestStatus;

namespace {
bool counts_as_rejection(const RequestOutcome& oc) {
    return oc.status == RequestStatus::Rejected || oc.status == RequestStatus::Preempted;
}
}  // namespace

double resource_cost(const std::vector<std::vector<double>>& slot_loads,
                     const model::SubstrateNetwork& net) {
    double total = 0;
    for (const auto& loads : slot_loads) {
        invariant(loads.size() == static_cast<size_t>(net.element_count()),
                  "metrics: load snapshot size mismatch");
        for (model::ElemIdx s = 0; s < net.element_count(); ++s)
            total += loads[s] * net.unit_cost(s);
    }
    return total;
}

double rejection_cost(const std::vector<Request>& requests,
                      const std::unordered_map<int, RequestOutcome>& outcomes,
                      const std::vector<double>& app_psi) {
    double total = 0;
    for (const auto& r : requests) {
        auto it = outcomes.find(r.id);
        if (it == outcomes.end() || !counts_as_rejection(it->second)) continue;
        total += r.size * r.duration * app_psi.at(r.app);
    }
    return total;
}

std::pair<double, double> rejection_rate(const std::vector<Request>& requests,
                                         const std::unordered_map<int, RequestOutcome>& outcomes,
                                         const Window& win) {
    double rej_demand = 0, all_demand = 0;
    long rej_count = 0, all_count = 0;
    for (const auto& r : requests) {
        if (r.arrival < win.lo || r.arrival > win.hi) continue;
        auto it = outcomes.find(r.id);
        invariant(it != outcomes.end(), "metrics: request missing from outcomes");
        double weight = r.size * r.duration;
        all_demand += weight;
        ++all_count;
        if (counts_as_rejection(it->second)) {
            rej_demand += weight;
            ++rej_count;
        }
    }
    if (all_count == 0) throw std::runtime_error("metrics: empty measurement window");
    return {rej_demand / all_demand, static_cast<double>(rej_count) / all_count};
}

double balance_index(const std::vector<std::vector<double>>& x,
                     const std::vector<double>& n, bool* defined) {
    invariant(x.size() == n.size(), "metrics: balance input size mismatch");
    double weight_sum = 0, acc = 0;
    size_t apps = 0;
    for (const auto& row : x) apps = std::max(apps, row.size());
    for (size_t v = 0; v < x.size(); ++v) {
        double sum = 0, sumsq = 0;
        for (double xi : x[v]) {
            sum += xi;
            sumsq += xi * xi;
        }
        if (sum <= 0) continue;  // nodes without rejections are excluded
        acc += n[v] * (sum * sum) / (static_cast<double>(apps) * sumsq);
        weight_sum += n[v];
    }
    if (weight_sum == 0) {
        if (defined) *defined = false;
        return 1.0;
    }
    if (defined) *defined = true;
    return acc / weight_sum;
}

RunReport build_report(const engine::RunResult& run, const std::vector<Request>& requests,
                       const model::SubstrateNetwork& net, int app_count,
                       const std::vector<double>& app_psi, const Window& win) {
    RunReport rep;
    rep.resource_cost = run.resource_cost;
    rep.rejection_cost = rejection_cost(requests, run.outcomes, app_psi);
    auto rates = rejection_rate(requests, run.outcomes, win);
    rep.rejection_rate_demand = rates.first;
    rep.rejection_rate_count = rates.second;
    rep.runtime_ms = run.runtime_ms;
    for (const auto& e : run.events) rep.decision_histogram[e.decision]++;

    std::vector<std::vector<double>> x(net.node_count(), std::vector<double>(app_count, 0.0));
    std::vector<double> n(net.node_count(), 0.0);
    for (const auto& r : requests) {
        if (r.arrival < win.lo || r.arrival > win.hi) continue;
        auto it = run.outcomes.find(r.id);
        if (it == run.outcomes.end()) continue;
        ++rep.arrived;
        n[r.origin] += 1;
        if (counts_as_rejection(it->second)) {
            x[r.origin][r.app] += 1;
            if (it->second.status == RequestStatus::Preempted) ++rep.preempted;
            else ++rep.rejected;
        } else {
            ++rep.accepted;
        }
    }
    rep.balance_index = balance_index(x, n, &rep.balance_defined);
    return rep;
}

const char* kResultsHeader =
    "algorithm,seed,utilization,rejection_rate_demand,rejection_rate_count,"
    "resource_cost,rejection_cost,balance_index,runtime_ms";

std::string results_row(const std::string& algorithm, uint64_t seed, double utilization,
                        const RunReport& rep, bool emit_runtime) {
    char buf[512];
    snprintf(buf, sizeof buf, "%s,%llu,%.6g,%.17g,%.17g,%.17g,%.17g,%.17g,%.3f",
             algorithm.c_str(), static_cast<unsigned long long>(seed), utilization,
             rep.rejection_rate_demand, rep.rejection_rate_count, rep.resource_cost,
             rep.rejection_cost, rep.balance_index, emit_runtime ? rep.runtime_ms : 0.0);
    return buf;
}

void slot_series_to_csv(const engine::RunResult& run, std::ostream& os) {
    os << "slot,arrived_demand,allocated_demand,arrived_count,allocated_count\n";
    char buf[128];
    for (int t = 0; t < run.slots; ++t) {
        snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%d,%d", t, run.slot_arrived_demand[t],
                 run.slot_allocated_demand[t], run.slot_arrived_count[t],
                 run.slot_allocated_count[t]);
        os << buf << "\n";
    }
}

}  // namespace olive::metrics
