#pragma once

#include <cstdint>
#include <random>

#include "asv/sym_operator.hpp"

namespace asv {

/// Deterministic seeded generator. All draws go through explicit transforms
/// of mt19937_64 output so that reports are byte-identical across runs.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform();                 // [0, 1)
    double normal();                  // Box-Muller, no cached state
    int uniform_int(int lo, int hi);  // inclusive bounds

private:
    std::mt19937_64 gen_;
};

Vector random_vector(int n, Rng& rng);
Matrix random_matrix(int rows, int cols, Rng& rng);

/// A = G^t G + shift * I with G random; certified SPD.
SymOperator random_spd(int dim, Rng& rng, double shift = 0.5);

/// Semi-SPD with an exact null space of the requested dimension, produced by
/// zeroing out the smallest spectral directions of a random SPD operator.
SymOperator random_semi_spd(int dim, int null_dim, Rng& rng);

/// Random map with certified surjectivity (resampled if degenerate).
LinearMap random_surjective(int rows, int cols, Rng& rng);

/// omega * M^{-1} (plus an optional skew part) with omega tuned by halving,
/// at most 20 retries, so that the symmetrized operator is SPD on R(A).
Matrix random_convergent_smoother(const SymOperator& a, Rng& rng, bool symmetric);

// Classic desk-scale operators.
Matrix dirichlet_laplacian_1d(int n);  // tridiag(-1, 2, -1)
Matrix neumann_laplacian_1d(int n);    // same with natural ends; kernel = constants

}  // namespace asv
