#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "olive/lp.hpp"

namespace olive::lp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kRefactorEvery = 64;

// Working problem: min c'x, A x + s = b with slacks appended as columns
// n..n+m-1. Row/column equilibration uses powers of two so scaling is exact.
struct Work {
    int n = 0;  // structural columns
    int m = 0;  // rows
    // CSC over structural columns (scaled)
    std::vector<int> ptr, row;
    std::vector<double> val;
    std::vector<double> c, lo, hi;  // size n+m (slacks appended)
    std::vector<double> b;
    std::vector<double> row_scale, col_scale;
    double obj_scale = 1.0;

    int total() const { return n + m; }
    bool is_slack(int j) const { return j >= n; }

    template <typename F>
    void for_col(int j, F&& f) const {
        if (j >= n) {
            f(j - n, 1.0);
            return;
        }
        for (int k = ptr[j]; k < ptr[j + 1]; ++k) f(row[k], val[k]);
    }
};

double pow2_round(double x) {
    if (x <= 0 || !std::isfinite(x)) return 1.0;
    int e;
    std::frexp(x, &e);
    return std::ldexp(1.0, e - 1);  // power of two in (x/2, x]
}

Work build_work(const LinearProgram& lp) {
    Work w;
    w.n = lp.num_cols();
    w.m = lp.num_rows();
    const auto& A = lp.columns();
    w.ptr = A.ptr;
    w.row = A.row;
    w.val = A.val;

    // equilibrate: rows then columns, factors rounded to powers of two
    w.row_scale.assign(w.m, 1.0);
    w.col_scale.assign(w.n, 1.0);
    std::vector<double> rmax(w.m, 0.0);
    for (size_t k = 0; k < w.val.size(); ++k)
        rmax[w.row[k]] = std::max(rmax[w.row[k]], std::abs(w.val[k]));
    for (int i = 0; i < w.m; ++i) w.row_scale[i] = 1.0 / pow2_round(rmax[i] > 0 ? rmax[i] : 1.0);
    for (int j = 0; j < w.n; ++j) {
        double cmax = 0.0;
        for (int k = w.ptr[j]; k < w.ptr[j + 1]; ++k)
            cmax = std::max(cmax, std::abs(w.val[k]) * w.row_scale[w.row[k]]);
        w.col_scale[j] = 1.0 / pow2_round(cmax > 0 ? cmax : 1.0);
    }
    for (int j = 0; j < w.n; ++j)
        for (int k = w.ptr[j]; k < w.ptr[j + 1]; ++k)
            w.val[k] *= w.row_scale[w.row[k]] * w.col_scale[j];

    w.c.assign(w.n + w.m, 0.0);
    w.lo.assign(w.n + w.m, 0.0);
    w.hi.assign(w.n + w.m, 0.0);
    double cmax = 0.0;
    for (int j = 0; j < w.n; ++j) {
        w.c[j] = lp.obj()[j] * w.col_scale[j];
        cmax = std::max(cmax, std::abs(w.c[j]));
        double s = w.col_scale[j];
        w.lo[j] = lp.lb()[j] / s;
        w.hi[j] = lp.ub()[j] / s;
    }
    // normalize the cost vector too: dual tolerances are absolute, so huge
    // rejection-penalty coefficients would otherwise drown them in round-off
    if (cmax > 0) {
        w.obj_scale = 1.0 / pow2_round(cmax);
        for (int j = 0; j < w.n; ++j) w.c[j] *= w.obj_scale;
    }
    w.b.assign(w.m, 0.0);
    for (int i = 0; i < w.m; ++i) {
        w.b[i] = lp.row_rhs(i) * w.row_scale[i];
        int sj = w.n + i;
        switch (lp.row_sense(i)) {
            case Sense::LE: w.lo[sj] = 0; w.hi[sj] = kInf; break;
            case Sense::GE: w.lo[sj] = -kInf; w.hi[sj] = 0; break;
            case Sense::EQ: w.lo[sj] = 0; w.hi[sj] = 0; break;
        }
    }
    return w;
}

class Simplex {
public:
    Simplex(const Work& w, const SimplexOptions& opts) : w_(w), opts_(opts) {}

    SolveStatus run(const Basis* warm) {
        init_basis(warm);
        if (!factorize()) {
            reset_to_slack_basis();
            if (!factorize()) return SolveStatus::Numerical;
        }
        compute_basic_values();
        SolveStatus st = iterate(/*phase1=*/true);
        if (st != SolveStatus::Optimal) return st;
        if (total_infeasibility() > feas_threshold()) return SolveStatus::Infeasible;
        st = iterate(/*phase1=*/false);
        return st;
    }

    // accessors used to assemble the result
    std::vector<double> primal_values() const {
        std::vector<double> x(w_.total());
        for (int j = 0; j < w_.total(); ++j) x[j] = nonbasic_value(j);
        for (int i = 0; i < w_.m; ++i) x[basic_[i]] = xB_[i];
        return x;
    }
    std::vector<double> dual_values() {
        Eigen::VectorXd g(w_.m);
        for (int i = 0; i < w_.m; ++i) g[i] = w_.c[basic_[i]];
        Eigen::VectorXd y = btran(g);
        return {y.data(), y.data() + w_.m};
    }
    const std::vector<VarStatus>& statuses() const { return status_; }
    int iterations() const { return iters_; }

private:
    const Work& w_;
    SimplexOptions opts_;

    std::vector<int> basic_;          // var index per basis position
    std::vector<VarStatus> status_;   // per var (n+m)
    std::vector<double> xB_;          // basic values
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
    struct Eta {
        int pos;
        double wr;
        std::vector<std::pair<int, double>> entries;  // excludes pos
    };
    std::vector<Eta> etas_;
    int iters_ = 0;
    int stall_ = 0;
    bool bland_ = false;
    int resets_ = 0;

    double feas_threshold() const { return opts_.feas_tol * 16 * (w_.m + 1); }

    double nonbasic_value(int j) const {
        if (status_[j] == VarStatus::AtUpper) return std::isfinite(w_.hi[j]) ? w_.hi[j] : 0.0;
        return std::isfinite(w_.lo[j]) ? w_.lo[j] : 0.0;
    }

    void init_basis(const Basis* warm) {
        status_.assign(w_.total(), VarStatus::AtLower);
        for (int j = 0; j < w_.total(); ++j)
            if (!std::isfinite(w_.lo[j]) && std::isfinite(w_.hi[j]))
                status_[j] = VarStatus::AtUpper;
        std::vector<int> want_basic;
        if (warm && static_cast<int>(warm->cols.size()) == w_.n &&
            static_cast<int>(warm->rows.size()) == w_.m) {
            for (int j = 0; j < w_.n; ++j)
                if (warm->cols[j] == VarStatus::Basic) want_basic.push_back(j);
                else status_[j] = adjust_bound_status(j, warm->cols[j]);
            for (int i = 0; i < w_.m; ++i)
                if (warm->rows[i] == VarStatus::Basic) want_basic.push_back(w_.n + i);
                else status_[w_.n + i] = adjust_bound_status(w_.n + i, warm->rows[i]);
        }
        basic_.clear();
        std::vector<char> row_used(w_.m, 0);
        if (static_cast<int>(want_basic.size()) == w_.m) {
            basic_ = want_basic;
        } else {
            // degenerate warm basis; start from slacks
            basic_.resize(w_.m);
            for (int i = 0; i < w_.m; ++i) basic_[i] = w_.n + i;
            for (int j = 0; j < w_.total(); ++j)
                if (std::find(basic_.begin(), basic_.end(), j) == basic_.end() &&
                    status_[j] == VarStatus::Basic)
                    status_[j] = adjust_bound_status(j, VarStatus::AtLower);
        }
        for (int i = 0; i < w_.m; ++i) status_[basic_[i]] = VarStatus::Basic;
    }

    VarStatus adjust_bound_status(int j, VarStatus s) const {
        if (s == VarStatus::AtUpper && std::isfinite(w_.hi[j])) return VarStatus::AtUpper;
        if (std::isfinite(w_.lo[j])) return VarStatus::AtLower;
        if (std::isfinite(w_.hi[j])) return VarStatus::AtUpper;
        return VarStatus::AtLower;  // free: value 0
    }

    void reset_to_slack_basis() {
        status_.assign(w_.total(), VarStatus::AtLower);
        for (int j = 0; j < w_.total(); ++j) status_[j] = adjust_bound_status(j, VarStatus::AtLower);
        basic_.resize(w_.m);
        for (int i = 0; i < w_.m; ++i) {
            basic_[i] = w_.n + i;
            status_[w_.n + i] = VarStatus::Basic;
        }
        ++resets_;
    }

    bool factorize() {
        etas_.clear();
        if (w_.m == 0) return true;
        Eigen::SparseMatrix<double> B(w_.m, w_.m);
        std::vector<Eigen::Triplet<double>> trip;
        for (int i = 0; i < w_.m; ++i)
            w_.for_col(basic_[i], [&](int r, double v) { trip.emplace_back(r, i, v); });
        B.setFromTriplets(trip.begin(), trip.end());
        lu_.compute(B);
        return lu_.info() == Eigen::Success;
    }

    void compute_basic_values() {
        Eigen::VectorXd rhs(w_.m);
        for (int i = 0; i < w_.m; ++i) rhs[i] = w_.b[i];
        for (int j = 0; j < w_.total(); ++j) {
            if (status_[j] == VarStatus::Basic) continue;
            double v = nonbasic_value(j);
            if (v != 0.0) w_.for_col(j, [&](int r, double a) { rhs[r] -= a * v; });
        }
        Eigen::VectorXd x = ftran(rhs);
        xB_.assign(x.data(), x.data() + w_.m);
    }

    Eigen::VectorXd ftran(Eigen::VectorXd v) const {
        if (w_.m == 0) return v;
        Eigen::VectorXd x = lu_.solve(v);
        for (const auto& e : etas_) {
            double alpha = x[e.pos] / e.wr;
            for (auto [i, wi] : e.entries) x[i] -= alpha * wi;
            x[e.pos] = alpha;
        }
        return x;
    }

    Eigen::VectorXd btran(Eigen::VectorXd v) {
        if (w_.m == 0) return v;
        for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
            double dot = 0;
            for (auto [i, wi] : it->entries) dot += wi * v[i];
            v[it->pos] = (v[it->pos] - dot) / it->wr;
        }
        return lu_.transpose().solve(v);
    }

    double total_infeasibility() const {
        double s = 0;
        for (int i = 0; i < w_.m; ++i) {
            int j = basic_[i];
            if (xB_[i] < w_.lo[j]) s += w_.lo[j] - xB_[i];
            if (xB_[i] > w_.hi[j]) s += xB_[i] - w_.hi[j];
        }
        return s;
    }

    SolveStatus iterate(bool phase1) {
        const double ftol = opts_.feas_tol;
        const double ztol = opts_.opt_tol;
        Eigen::VectorXd g(w_.m);
        while (true) {
            if (iters_ >= opts_.max_iters) return SolveStatus::IterLimit;

            // gradient of the current objective over basis positions
            bool any_infeasible = false;
            for (int i = 0; i < w_.m; ++i) {
                int j = basic_[i];
                double lo = w_.lo[j], hi = w_.hi[j];
                if (phase1) {
                    double v = 0;
                    if (xB_[i] < lo - ftol) { v = -1; any_infeasible = true; }
                    else if (xB_[i] > hi + ftol) { v = 1; any_infeasible = true; }
                    g[i] = v;
                } else {
                    g[i] = w_.c[j];
                }
            }
            if (phase1 && !any_infeasible) return SolveStatus::Optimal;

            Eigen::VectorXd y = btran(g);

            // pricing; the eligibility threshold scales with the duals so
            // round-off in z cannot masquerade as an improving column
            double ymax = w_.m > 0 ? y.lpNorm<Eigen::Infinity>() : 0.0;
            double zthr = ztol * (1.0 + ymax);
            int enter = -1, dir = 0;
            double best = 0;
            for (int j = 0; j < w_.total(); ++j) {
                if (status_[j] == VarStatus::Basic) continue;
                if (w_.lo[j] == w_.hi[j]) continue;  // fixed
                double z = (phase1 ? 0.0 : w_.c[j]);
                w_.for_col(j, [&](int r, double a) { z -= a * y[r]; });
                bool at_lower = status_[j] == VarStatus::AtLower;
                bool free_var = !std::isfinite(w_.lo[j]) && !std::isfinite(w_.hi[j]);
                int d = 0;
                if (free_var) {
                    if (z < -zthr) d = 1;
                    else if (z > zthr) d = -1;
                } else if (at_lower && z < -zthr) {
                    d = 1;
                } else if (!at_lower && z > zthr) {
                    d = -1;
                }
                if (d == 0) continue;
                if (bland_) { enter = j; dir = d; break; }
                if (std::abs(z) > best) { best = std::abs(z); enter = j; dir = d; }
            }
            if (enter < 0) {
                if (phase1) return SolveStatus::Optimal;  // stationary; feasibility checked by caller
                return SolveStatus::Optimal;
            }

            // direction through the basis
            Eigen::VectorXd col = Eigen::VectorXd::Zero(w_.m);
            w_.for_col(enter, [&](int r, double a) { col[r] += a; });
            Eigen::VectorXd wvec = ftran(col);

            // ratio test: x_B[i] moves at rate -dir*w[i] per unit step
            double own_range = w_.hi[enter] - w_.lo[enter];  // inf allowed
            double theta = std::isfinite(own_range) ? own_range : kInf;
            const double piv_tol = 1e-9;
            struct Block {
                int pos;
                double step;
                int to_upper;
            };
            std::vector<Block> blockers;
            blockers.reserve(16);
            for (int i = 0; i < w_.m; ++i) {
                double delta = -dir * wvec[i];
                if (std::abs(delta) <= piv_tol) continue;
                int j = basic_[i];
                double lo = w_.lo[j], hi = w_.hi[j];
                double step = kInf;
                int to_upper = 0;
                if (phase1 && xB_[i] < lo - ftol) {
                    if (delta > 0) { step = (lo - xB_[i]) / delta; to_upper = 0; }
                } else if (phase1 && xB_[i] > hi + ftol) {
                    if (delta < 0) { step = (xB_[i] - hi) / (-delta); to_upper = 1; }
                } else if (delta < 0) {
                    if (std::isfinite(lo)) step = (xB_[i] - lo) / (-delta);
                    to_upper = 0;
                } else {
                    if (std::isfinite(hi)) step = (hi - xB_[i]) / delta;
                    to_upper = 1;
                }
                if (!std::isfinite(step)) continue;
                if (step < 0) step = 0;
                if (step < theta) theta = step;
                blockers.push_back({i, step, to_upper});
            }
            // among blockers at the minimal step pick the stablest pivot, or
            // the smallest basic index when Bland's rule is active
            int leave_pos = -1;  // -1 means bound flip
            int leave_to_upper = 0;
            double tie = theta + 1e-12 * (1.0 + theta);
            for (const Block& b : blockers) {
                if (b.step > tie) continue;
                if (leave_pos < 0) {
                    leave_pos = b.pos;
                    leave_to_upper = b.to_upper;
                } else if (bland_ ? basic_[b.pos] < basic_[leave_pos]
                                  : std::abs(wvec[b.pos]) > std::abs(wvec[leave_pos])) {
                    leave_pos = b.pos;
                    leave_to_upper = b.to_upper;
                }
            }
            if (!std::isfinite(theta)) {
                // with boxed structural variables this indicates numerical
                // breakdown rather than a genuinely unbounded model
                return SolveStatus::Numerical;
            }

            ++iters_;
            if (theta <= 1e-11) {
                if (++stall_ > 100) bland_ = true;
            } else {
                stall_ = 0;
                bland_ = false;
            }
#ifdef OLIVE_SIMPLEX_TRACE
            if (iters_ % 10000 == 0) {
                double inf = total_infeasibility(), obj = 0;
                for (int i = 0; i < w_.m; ++i) obj += w_.c[basic_[i]] * xB_[i];
                for (int j = 0; j < w_.total(); ++j)
                    if (status_[j] != VarStatus::Basic) obj += w_.c[j] * nonbasic_value(j);
                fprintf(stderr,
                        "iter %d phase%d inf=%.3e obj=%.9e theta=%.3e bland=%d stall=%d enter=%d "
                        "leave=%d\n",
                        iters_, phase1 ? 1 : 2, inf, obj, theta, (int)bland_, stall_, enter,
                        leave_pos >= 0 ? basic_[leave_pos] : -1);
            }
#endif

            if (leave_pos < 0) {
                // bound flip of the entering variable
                for (int i = 0; i < w_.m; ++i) xB_[i] -= dir * theta * wvec[i];
                status_[enter] =
                    status_[enter] == VarStatus::AtLower ? VarStatus::AtUpper : VarStatus::AtLower;
                continue;
            }

            double enter_val = nonbasic_value(enter) + dir * theta;
            for (int i = 0; i < w_.m; ++i) xB_[i] -= dir * theta * wvec[i];
            int leaving = basic_[leave_pos];
            status_[leaving] = leave_to_upper ? VarStatus::AtUpper : VarStatus::AtLower;
            if (!std::isfinite(w_.hi[leaving]) && leave_to_upper) status_[leaving] = VarStatus::AtLower;
            basic_[leave_pos] = enter;
            status_[enter] = VarStatus::Basic;
            xB_[leave_pos] = enter_val;

            if (std::abs(wvec[leave_pos]) < 1e-10 ||
                static_cast<int>(etas_.size()) >= kRefactorEvery) {
                if (!factorize()) {
                    if (resets_ >= 2) return SolveStatus::Numerical;
                    reset_to_slack_basis();
                    if (!factorize()) return SolveStatus::Numerical;
                }
                compute_basic_values();
            } else {
                Eta e;
                e.pos = leave_pos;
                e.wr = wvec[leave_pos];
                for (int i = 0; i < w_.m; ++i)
                    if (i != leave_pos && std::abs(wvec[i]) > 1e-13)
                        e.entries.emplace_back(i, wvec[i]);
                etas_.push_back(std::move(e));
            }
        }
    }
};

}  // namespace

SolveResult solve(const LinearProgram& lp, const SimplexOptions& opts) {
    SolveResult res;
    const int n = lp.num_cols(), m = lp.num_rows();
    if (n == 0 && m == 0) {
        res.status = SolveStatus::Optimal;
        return res;
    }

    Work w = build_work(lp);
    Simplex s(w, opts);
    SolveStatus st = s.run(opts.warm);
    res.status = st;
    res.iterations = s.iterations();
    if (st != SolveStatus::Optimal && st != SolveStatus::IterLimit) return res;

    std::vector<double> xs = s.primal_values();
    std::vector<double> ys = s.dual_values();

    // unscale
    res.x.assign(n, 0.0);
    for (int j = 0; j < n; ++j) res.x[j] = xs[j] * w.col_scale[j];
    res.duals.assign(m, 0.0);
    for (int i = 0; i < m; ++i) res.duals[i] = ys[i] * w.row_scale[i] / w.obj_scale;

    res.objective = 0;
    for (int j = 0; j < n; ++j) res.objective += lp.obj()[j] * res.x[j];

    const auto& stat = s.statuses();
    res.basis.cols.assign(stat.begin(), stat.begin() + n);
    res.basis.rows.assign(stat.begin() + n, stat.begin() + n + m);

    // certificate on the unscaled model
    const auto& A = lp.columns();
    std::vector<double> act = lp.row_activity(res.x);
    double prim = 0;
    for (int i = 0; i < m; ++i) {
        double viol = 0, rhs = lp.row_rhs(i);
        switch (lp.row_sense(i)) {
            case Sense::LE: viol = act[i] - rhs; break;
            case Sense::GE: viol = rhs - act[i]; break;
            case Sense::EQ: viol = std::abs(act[i] - rhs); break;
        }
        prim = std::max(prim, viol / (1.0 + std::abs(rhs)));
    }
    for (int j = 0; j < n; ++j) {
        prim = std::max(prim, (lp.lb()[j] - res.x[j]) / (1.0 + std::abs(lp.lb()[j])));
        if (std::isfinite(lp.ub()[j]))
            prim = std::max(prim, (res.x[j] - lp.ub()[j]) / (1.0 + std::abs(lp.ub()[j])));
    }

    res.reduced_costs.assign(n, 0.0);
    double dual = 0;
    for (int j = 0; j < n; ++j) {
        double z = lp.obj()[j], scale = 1.0 + std::abs(lp.obj()[j]);
        for (int k = A.ptr[j]; k < A.ptr[j + 1]; ++k) {
            z -= A.val[k] * res.duals[A.row[k]];
            scale += std::abs(A.val[k] * res.duals[A.row[k]]);
        }
        res.reduced_costs[j] = z;
        if (lp.lb()[j] == lp.ub()[j]) continue;
        switch (res.basis.cols[j]) {
            case VarStatus::Basic: dual = std::max(dual, std::abs(z) / scale); break;
            case VarStatus::AtLower: dual = std::max(dual, -z / scale); break;
            case VarStatus::AtUpper: dual = std::max(dual, z / scale); break;
        }
    }
    for (int i = 0; i < m; ++i) {
        if (res.basis.rows[i] == VarStatus::Basic) continue;
        // slack reduced cost is -y_i; sign must match the slack's bound status
        double z = -res.duals[i], scale = 1.0 + std::abs(res.duals[i]);
        if (lp.row_sense(i) == Sense::EQ) continue;
        if (res.basis.rows[i] == VarStatus::AtLower) dual = std::max(dual, -z / scale);
        else dual = std::max(dual, z / scale);
    }
    res.primal_residual = prim;
    res.dual_residual = dual;

    if (st == SolveStatus::Optimal && (prim > 1e-6 || dual > 1e-6))
        res.status = SolveStatus::Numerical;
    return res;
}

}  // namespace olive::lp
