#pragma once

#include <stdexcept>
#include <string>

namespace olive {

// Internal bookkeeping violation; a run that triggers this must abort
// (CLI exit code 4).
class InvariantError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// LP engine failed to produce a certified solution (CLI exit code 2).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A required input file is missing (CLI exit code 3).
class MissingArtifactError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Absolute epsilon (CU) used in residual-capacity comparisons to absorb
// LP round-off.
inline constexpr double kResidualEps = 1e-9;

inline void invariant(bool cond, const std::string& msg) {
    if (!cond) throw InvariantError(msg);
}

}  // namespace olive
