#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <variant>

#include "distilkit/states.hpp"

namespace distilkit {

/// Margin above 1/2 that counts as a singlet-fraction violation.
inline constexpr double kSingletMargin = 1e-6;

/// Local SLOCC filter pair. `a` is D x local_a and `b` is D x local_b, acting
/// on the A (resp. B) factors of all pairs in order A_1..A_k. Both factors are
/// scaled to operator norm 1.
struct FilterPair {
  Matrix a;
  Matrix b;
};

/// psi = u1 (x) v1 + u2 (x) v2, normalized, across the global A|B cut.
struct SchmidtVector {
  Vector u1, u2, v1, v2;
  Vector psi;
};

/// Eigenvector certificate (dual-cone checks).
struct EigenCertificate {
  Vector vector;
};

using Certificate = std::variant<std::monostate, FilterPair, SchmidtVector, EigenCertificate>;

/// Value of a one-sided search plus the object that produced it.
///
/// `violation` is the domain verdict (value above the singlet threshold for
/// f2/fD, a negative expectation for the Schmidt-rank-2 test).
/// `budget_exhausted` is set when the search ended without a violation; it is
/// never a claim that none exists.
struct WitnessReport {
  double value = 0.0;
  Certificate certificate;
  bool violation = false;
  bool budget_exhausted = false;
  std::uint64_t seed = 0;
  std::size_t restarts = 0;
  std::size_t best_restart = 0;
};

struct SeesawOptions {
  std::size_t restarts = 32;
  std::size_t iters = 500;
  double tol = 1e-9;
  std::uint64_t seed = 0;
};

/// Lower bound on the SLOCC singlet fraction F_2 across the global A|B cut.
///
/// Alternates an A-step and a B-step; each maximizes the ratio
/// tr[(A(x)B) rho (A(x)B)^dag phi_2] / tr[(A(x)B) rho (A(x)B)^dag] over one
/// filter with the other fixed, as a generalized Hermitian eigenproblem
/// restricted to the range of the denominator form. Restart 0 starts from the
/// identity embedding, the rest from Gaussian filters. The reported value never
/// decreases across iterations.
WitnessReport f2(const BipartiteState& state, const SeesawOptions& options = {});

/// Same see-saw with target phi_D and D-row filters; `violation` is value > lambda.
WitnessReport fD(const BipartiteState& state, std::size_t target_dim, double lambda,
                 const SeesawOptions& options = {});

/// Unnormalized filtered operator (A(x)B) rho (A(x)B)^dag on C^D (x) C^D.
Matrix apply_filters(const BipartiteState& state, const FilterPair& filters);

/// tr[filtered phi_D] / tr[filtered]; DegenerateError on zero weight.
double filtered_fidelity(const BipartiteState& state, const FilterPair& filters);

struct SearchBudget {
  std::size_t restarts = 16;
  std::size_t iters = 200;
  std::uint64_t seed = 0;
};

/// Minimizes <psi| rho^{T_B} |psi> over Schmidt-rank-2 vectors psi across the
/// global A|B cut, by alternating generalized eigenproblems over (u1, u2) and
/// (v1, v2). A value below -kStateTol is a violation (single-copy
/// distillable); otherwise the report says only that the budget ran out.
WitnessReport single_copy_distillable(const BipartiteState& state, const SearchBudget& budget = {});

/// <psi| rho^{T_B} |psi> for a certificate vector laid out across the global cut.
double schmidt_certificate_value(const BipartiteState& state, const SchmidtVector& certificate);

struct PptResult {
  bool ppt = false;
  double min_eigenvalue = 0.0;
};

/// PPT across the global A|B cut at tolerance kStateTol.
PptResult is_ppt(const BipartiteState& state);

/// single_copy_distillable applied to state^(x n).
WitnessReport n_copy_distillable(const BipartiteState& state, std::size_t n, const SearchBudget& budget = {});

struct DualPositivity {
  bool positive = false;
  double min_eigenvalue = 0.0;
  /// Smallest tr[Q omega] over the sampled symmetric states.
  double sampled_min_pairing = 0.0;
  /// Symmetrized projector onto the most negative eigenvector of S_k(Q),
  /// present when positive is false.
  std::optional<BipartiteState> counterexample;
};

/// Tests S_k(Q) >= 0 (dual cone of permutation-symmetric states), pairing Q
/// against `samples` random symmetric states as a sampled cross-check.
DualPositivity symmetric_dual_positive(const Matrix& q, const Dims& dims, std::uint64_t seed = 0,
                                       std::size_t samples = 100);

/// Re tr[X rho].
double witness_pairing(const Matrix& x, const BipartiteState& state);

/// I/2 - phi_2 on C^2 (x) C^2.
Matrix singlet_witness();

}  // namespace distilkit
