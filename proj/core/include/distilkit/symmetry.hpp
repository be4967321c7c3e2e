#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "distilkit/states.hpp"

namespace distilkit {

/// Bijection on {0, ..., k-1}; pair j is moved to position mapping[j].
class Permutation {
 public:
  explicit Permutation(std::vector<std::size_t> mapping);
  static Permutation identity(std::size_t k);

  std::size_t size() const noexcept { return mapping_.size(); }
  std::size_t operator()(std::size_t j) const { return mapping_.at(j); }
  const std::vector<std::size_t>& mapping() const noexcept { return mapping_; }

  /// (*this o inner)(j) = (*this)(inner(j)).
  Permutation compose(const Permutation& inner) const;
  Permutation inverse() const;

  bool operator==(const Permutation&) const = default;

 private:
  std::vector<std::size_t> mapping_;
};

/// All k! permutations in lexicographic order. Enumeration is capped at k = 6.
std::vector<Permutation> all_permutations(std::size_t k);

inline constexpr std::size_t kMaxEnumeratedPairs = 6;

/// Unitary P_pi on (C^pair_dim)^(x k) that moves pair j to slot pi(j).
/// P_pi P_sigma = P_(pi o sigma).
Matrix permutation_operator(const Permutation& perm, std::size_t pair_dim);

/// P_pi op P_pi^dagger, computed by index remapping.
Matrix conjugate_pairs(const Matrix& op, const Permutation& perm, std::size_t pair_dim);

/// Group average over S_k of P_pi op P_pi^dagger, by explicit enumeration.
Matrix symmetrize(const Matrix& op, std::size_t pairs, std::size_t pair_dim);
BipartiteState symmetrize(const BipartiteState& state);

/// Average over independent pair permutations of the A factors and of the B
/// factors, (k!)^2 terms.
Matrix double_symmetrize(const Matrix& op, const Dims& dims);
BipartiteState double_symmetrize(const BipartiteState& state);

/// Largest trace distance (half trace norm) between op and P_pi op P_pi^dagger
/// over all pi in S_k.
double symmetry_residual(const Matrix& op, std::size_t pairs, std::size_t pair_dim);

/// Finite de Finetti bound 4 d^4 k / n (unhalved trace norm) for k of n
/// pairs of a permutation-symmetric state on (C^d (x) C^d)^(x n).
double definetti_bound(std::size_t d, std::size_t k, std::size_t n);

/// Finite probability mixture of single-pair states with equal dimensions.
class Ensemble {
 public:
  Ensemble(std::vector<double> weights, std::vector<BipartiteState> members);

  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<BipartiteState>& members() const noexcept { return members_; }
  std::size_t size() const noexcept { return weights_.size(); }
  const Dims& member_dims() const { return members_.front().dims(); }

  /// sum_i w_i rho_i.
  BipartiteState average() const;

 private:
  std::vector<double> weights_;
  std::vector<BipartiteState> members_;
};

/// sum_i w_i rho_i^(x k): a permutation-symmetric k-pair extension whose
/// single-pair marginals all equal the ensemble average.
BipartiteState mixture_of_powers(const Ensemble& ensemble, std::size_t k);

struct ProductMixtureOptions {
  std::size_t restarts = 8;
  std::size_t iters = 300;
  std::uint64_t seed = 0;
  /// Candidate ensemble size; 0 selects k * pair_dim^2.
  std::size_t support = 0;
};

struct ProductMixtureFit {
  /// Trace distance (half trace norm) to mixture_of_powers(ensemble, k).
  double distance = 0.0;
  Ensemble ensemble;
  std::size_t restart = 0;
};

/// Upper bound on the distance from a symmetric k-pair state to the set of
/// mixtures of k-th product powers.
///
/// Members are parametrized as w_i rho_i^(x k) = (H_i H_i^dag)^(x k). Each
/// restart alternates a convex step (simplex-constrained least squares for the
/// weights) with a local step (L-BFGS on the Frobenius residual over all H_i).
/// The best restart gets a Levenberg-Marquardt pass over its nonzero members
/// when that is cheap (always for two qubit pairs), then a trace-distance
/// subgradient pass over the weights. Ties go to the lowest restart index.
/// Throws ParameterError if the input is not permutation-symmetric.
ProductMixtureFit best_product_mixture_distance(const BipartiteState& state,
                                                const ProductMixtureOptions& options = {});

}  // namespace distilkit
