#pragma once

#include <complex>
#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace distilkit {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Rng = std::mt19937_64;

/// Product of a list of dimensions; throws CapacityError past max_dimension().
std::size_t checked_product(std::span<const std::size_t> dims);

/// Integer power with the same capacity check.
std::size_t checked_power(std::size_t base, std::size_t exponent);

Matrix kron(const Matrix& a, const Matrix& b);

/// Hermitian part (M + M^dagger) / 2.
Matrix hermitian_part(const Matrix& m);

/// Ascending eigenvalues of the Hermitian part of m.
RealVector hermitian_eigenvalues(const Matrix& m);
double min_eigenvalue(const Matrix& m);

/// Sum of singular values. For Hermitian input this is the sum of |eigenvalues|.
double trace_norm(const Matrix& m);

/// Operator (spectral) norm.
double operator_norm(const Matrix& m);

/// Index map for a permutation of tensor factors.
///
/// `dims[j]` is the dimension of factor j (most significant first) and factor j
/// is moved to position `perm[j]`. For the returned map, the conjugated
/// operator P M P^dagger has entries M(map[r], map[c]).
std::vector<std::size_t> factor_permutation_map(std::span<const std::size_t> dims,
                                                std::span<const std::size_t> perm);

/// Applies an index map from factor_permutation_map: out(r, c) = m(map[r], map[c]).
Matrix conjugate_by_map(const Matrix& m, std::span<const std::size_t> map);

/// Rng seeded from (seed, stream) through std::seed_seq.
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

/// Entries i.i.d. standard complex Gaussian.
Matrix complex_gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng);

/// Random positive operator G G^dagger / tr with G of shape dim x rank.
Matrix random_density(std::size_t dim, std::size_t rank, Rng& rng);

/// Projection of a real vector onto the probability simplex.
RealVector project_to_simplex(const RealVector& v);

}  // namespace distilkit
