#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "olive/common.hpp"

namespace olive::lp {

enum class Sense : unsigned char { LE, GE, EQ };

// Pure LP description: min c'x subject to row senses and column bounds.
// Independent of any solver; exportable in CPLEX LP text format.
class LinearProgram {
public:
    int add_col(double obj, double lb, double ub, std::string name = {});
    int add_row(Sense sense, double rhs, std::string name = {});
    void add_entry(int row, int col, double val);

    int num_cols() const { return static_cast<int>(obj_.size()); }
    int num_rows() const { return static_cast<int>(rhs_.size()); }
    size_t num_entries() const { return entry_val_.size(); }

    const std::vector<double>& obj() const { return obj_; }
    const std::vector<double>& lb() const { return lb_; }
    const std::vector<double>& ub() const { return ub_; }
    Sense row_sense(int r) const { return sense_[r]; }
    double row_rhs(int r) const { return rhs_[r]; }
    const std::string& col_name(int c) const { return col_names_[c]; }
    const std::string& row_name(int r) const { return row_names_[r]; }

    // Sorted-by-column entry arrays (built lazily; invalidated by add_entry).
    struct Columns {
        std::vector<int> ptr;   // size num_cols+1
        std::vector<int> row;
        std::vector<double> val;
    };
    const Columns& columns() const;

    // row-major evaluation helper used by verifiers
    std::vector<double> row_activity(const std::vector<double>& x) const;

    void write_lp_text(std::ostream& os, const std::string& name = "model") const;

private:
    std::vector<double> obj_, lb_, ub_;
    std::vector<Sense> sense_;
    std::vector<double> rhs_;
    std::vector<std::string> col_names_, row_names_;
    std::vector<int> entry_row_, entry_col_;
    std::vector<double> entry_val_;
    mutable Columns cols_;
    mutable bool cols_valid_ = false;
};

enum class VarStatus : unsigned char { Basic, AtLower, AtUpper };

struct Basis {
    std::vector<VarStatus> cols;   // structural variables
    std::vector<VarStatus> rows;   // row slacks
    bool empty() const { return cols.empty(); }
};

enum class SolveStatus { Optimal, Infeasible, IterLimit, Numerical };

struct SolveResult {
    SolveStatus status = SolveStatus::Numerical;
    double objective = 0;
    std::vector<double> x;              // primal values
    std::vector<double> duals;          // one per row
    std::vector<double> reduced_costs;  // one per structural column
    Basis basis;                        // for warm starts
    int iterations = 0;
    // residuals measured on the original (unscaled) model
    double primal_residual = 0;  // max constraint/bound violation
    double dual_residual = 0;    // max reduced-cost sign violation
};

struct SimplexOptions {
    double feas_tol = 1e-9;
    double opt_tol = 1e-9;
    int max_iters = 500000;
    const Basis* warm = nullptr;
};

// Bounded-variable primal simplex (two-phase, sparse LU basis with
// product-form updates). Returns Optimal only when the solution passes an
// internal feasibility + reduced-cost certificate on the unscaled model.
SolveResult solve(const LinearProgram& lp, const SimplexOptions& opts = {});

}  // namespace olive::lp
