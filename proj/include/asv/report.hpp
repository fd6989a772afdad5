#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "asv/fem.hpp"

namespace asv {

/// One dual-route check: lhs and rhs are computed by independent routes and
/// asserted equal within tol, relative to 1 + |rhs|. One-sided checks report
/// the constraint violation as lhs against rhs = 0.
struct CheckResult {
    std::string theorem;
    double lhs = 0.0;
    double rhs = 0.0;
    double tol = 0.0;
    bool pass = false;
};

struct VerifyReport {
    std::uint64_t seed = 0;
    std::vector<int> dims;
    std::vector<CheckResult> checks;
    bool all_pass = false;
};

/// Runs the battery of dual-route identity checks on seeded random instances
/// of the given dimensions (each at least 3). tol_scale relaxes or tightens
/// every tolerance uniformly.
VerifyReport run_verify(std::uint64_t seed, const std::vector<int>& dims,
                        double tol_scale = 1.0);

/// Fixed key order and shortest round-trip number formatting, so a fixed
/// seed yields byte-identical output.
std::string to_json(const VerifyReport& report);

/// Refinement study of the auxiliary grid preconditioner over a mesh family.
struct StudyReport {
    std::string mode;
    double alpha = 0.0;
    double gate = 0.0;              // admissible growth ratio per level
    std::vector<KappaLevel> levels;
    std::vector<double> ratios;     // kappa_ba[l+1] / kappa_ba[l]
    bool gate_pass = false;         // every ratio <= gate (vacuous if < 2 levels)
};

StudyReport run_study(const std::vector<TriMesh>& meshes, double alpha, StudyMode mode,
                      double gate);

std::string to_json(const StudyReport& report);

}  // namespace asv
