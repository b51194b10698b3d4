#include "olive/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace olive::lp {

int LinearProgram::add_col(double obj, double lb, double ub, std::string name) {
    if (lb > ub) throw std::runtime_error("lp: column with lb > ub");
    obj_.push_back(obj);
    lb_.push_back(lb);
    ub_.push_back(ub);
    if (name.empty()) name = "x" + std::to_string(obj_.size() - 1);
    col_names_.push_back(std::move(name));
    cols_valid_ = false;
    return num_cols() - 1;
}

int LinearProgram::add_row(Sense sense, double rhs, std::string name) {
    sense_.push_back(sense);
    rhs_.push_back(rhs);
    if (name.empty()) name = "r" + std::to_string(rhs_.size() - 1);
    row_names_.push_back(std::move(name));
    return num_rows() - 1;
}

void LinearProgram::add_entry(int row, int col, double val) {
    if (row < 0 || row >= num_rows() || col < 0 || col >= num_cols())
        throw std::runtime_error("lp: entry out of range");
    if (val == 0.0) return;
    entry_row_.push_back(row);
    entry_col_.push_back(col);
    entry_val_.push_back(val);
    cols_valid_ = false;
}

const LinearProgram::Columns& LinearProgram::columns() const {
    if (cols_valid_) return cols_;
    const int n = num_cols();
    cols_.ptr.assign(n + 1, 0);
    for (int c : entry_col_) cols_.ptr[c + 1]++;
    for (int c = 0; c < n; ++c) cols_.ptr[c + 1] += cols_.ptr[c];
    cols_.row.assign(entry_val_.size(), 0);
    cols_.val.assign(entry_val_.size(), 0.0);
    std::vector<int> fill(cols_.ptr.begin(), cols_.ptr.end() - 1);
    for (size_t k = 0; k < entry_val_.size(); ++k) {
        int at = fill[entry_col_[k]]++;
        cols_.row[at] = entry_row_[k];
        cols_.val[at] = entry_val_[k];
    }
    // sort rows within each column and merge duplicates
    for (int c = 0; c < n; ++c) {
        int lo = cols_.ptr[c], hi = fill[c];
        std::vector<std::pair<int, double>> tmp;
        tmp.reserve(hi - lo);
        for (int k = lo; k < hi; ++k) tmp.emplace_back(cols_.row[k], cols_.val[k]);
        std::sort(tmp.begin(), tmp.end());
        int w = lo;
        for (size_t i = 0; i < tmp.size(); ++i) {
            if (w > lo && cols_.row[w - 1] == tmp[i].first)
                cols_.val[w - 1] += tmp[i].second;
            else {
                cols_.row[w] = tmp[i].first;
                cols_.val[w] = tmp[i].second;
                ++w;
            }
        }
        fill[c] = w;
    }
    // compact after merging
    Columns packed;
    packed.ptr.assign(n + 1, 0);
    for (int c = 0; c < n; ++c) {
        packed.ptr[c + 1] = packed.ptr[c] + (fill[c] - cols_.ptr[c]);
        for (int k = cols_.ptr[c]; k < fill[c]; ++k) {
            packed.row.push_back(cols_.row[k]);
            packed.val.push_back(cols_.val[k]);
        }
    }
    cols_ = std::move(packed);
    cols_valid_ = true;
    return cols_;
}

std::vector<double> LinearProgram::row_activity(const std::vector<double>& x) const {
    const auto& A = columns();
    std::vector<double> act(num_rows(), 0.0);
    for (int c = 0; c < num_cols(); ++c)
        for (int k = A.ptr[c]; k < A.ptr[c + 1]; ++k) act[A.row[k]] += A.val[k] * x[c];
    return act;
}

namespace {
void write_term(std::ostream& os, double v, const std::string& name, bool first) {
    if (!first) os << (v < 0 ? " - " : " + ");
    else if (v < 0) os << "- ";
    double a = std::abs(v);
    os << a << ' ' << name;
}
}  // namespace

void LinearProgram::write_lp_text(std::ostream& os, const std::string& name) const {
    const auto& A = columns();
    os << "\\ " << name << "\n";
    os << "Minimize\n obj:";
    bool first = true;
    for (int c = 0; c < num_cols(); ++c) {
        if (obj_[c] == 0.0) continue;
        os << ' ';
        write_term(os, obj_[c], col_names_[c], first);
        first = false;
    }
    if (first) os << " 0 " << (num_cols() ? col_names_[0] : "x0");
    os << "\nSubject To\n";
    // transpose to rows
    std::vector<std::vector<std::pair<int, double>>> rows(num_rows());
    for (int c = 0; c < num_cols(); ++c)
        for (int k = A.ptr[c]; k < A.ptr[c + 1]; ++k) rows[A.row[k]].emplace_back(c, A.val[k]);
    for (int r = 0; r < num_rows(); ++r) {
        os << ' ' << row_names_[r] << ':';
        bool rf = true;
        for (auto [c, v] : rows[r]) {
            os << ' ';
            write_term(os, v, col_names_[c], rf);
            rf = false;
        }
        if (rf) os << " 0 " << (num_cols() ? col_names_[0] : "x0");
        const char* op = sense_[r] == Sense::LE ? "<=" : (sense_[r] == Sense::GE ? ">=" : "=");
        os << ' ' << op << ' ' << rhs_[r] << "\n";
    }
    os << "Bounds\n";
    for (int c = 0; c < num_cols(); ++c) {
        double lo = lb_[c], hi = ub_[c];
        if (lo == hi) {
            os << ' ' << col_names_[c] << " = " << lo << "\n";
        } else {
            os << ' ' << lo << " <= " << col_names_[c];
            if (std::isfinite(hi)) os << " <= " << hi;
            os << "\n";
        }
    }
    os << "End\n";
}

}  // namespace olive::lp
