#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "distilkit/errors.hpp"
#include "distilkit/linalg.hpp"

namespace distilkit {

/// Shape of a k-pair bipartite operator.
///
/// Basis order is pair-major with the A factor before the B factor inside each
/// pair: |a_1 b_1 a_2 b_2 ... a_k b_k>, most significant digit first. Every
/// module uses this order; the tensor product of single-pair operators in this
/// order is the ordinary Kronecker product.
struct Dims {
  std::size_t dim_a = 2;
  std::size_t dim_b = 2;
  std::size_t pairs = 1;

  std::size_t pair_dim() const noexcept { return dim_a * dim_b; }
  /// Dimension of all A factors together (dim_a^pairs), capacity checked.
  std::size_t local_a() const;
  std::size_t local_b() const;
  /// (dim_a * dim_b)^pairs, capacity checked.
  std::size_t total() const;
  /// Factor dimensions in storage order: a, b, a, b, ...
  std::vector<std::size_t> factor_dims() const;

  bool operator==(const Dims&) const = default;
};

struct Violation {
  std::string invariant;  // "shape", "finite", "hermiticity", "trace", "positivity"
  double magnitude = 0.0;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }
  bool flags(const std::string& invariant) const;
  std::string summary() const;
};

/// Thrown when a matrix handed to BipartiteState fails validation.
class InvalidStateError : public ParameterError {
 public:
  explicit InvalidStateError(ValidationReport report);
  const ValidationReport& report() const noexcept { return report_; }

 private:
  ValidationReport report_;
};

/// Density operator on (C^dim_a (x) C^dim_b)^(x pairs).
///
/// Immutable. The checking constructor enforces hermiticity, unit trace and
/// positivity at kStateTol.
class BipartiteState {
 public:
  BipartiteState(Dims dims, Matrix data);

  /// Skips the eigenvalue check. For results of channels applied to states
  /// that are already valid (tensor, partial trace, group averages).
  static BipartiteState trusted(Dims dims, Matrix data);

  const Dims& dims() const noexcept { return dims_; }
  const Matrix& matrix() const noexcept { return data_; }
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(data_.rows()); }

 private:
  struct TrustedTag {};
  BipartiteState(TrustedTag, Dims dims, Matrix data);

  Dims dims_;
  Matrix data_;
};

/// Checks every BipartiteState invariant and reports each violation with its
/// measured magnitude. Never throws.
ValidationReport check_state(const Dims& dims, const Matrix& data);

/// Either the accepted state or the violation report.
std::variant<BipartiteState, ValidationReport> validate_state(const Dims& dims, Matrix data);

enum class Family { werner, isotropic, max_entangled, product_pure, random_mixed, random_ppt, explicit_matrix };

std::string to_string(Family f);
Family family_from_string(const std::string& name);

/// Parameters of a named state family.
///
/// - werner: p in [0,1] is the weight of the antisymmetric subspace
///   (p = 1 is the normalized antisymmetric projector, the singlet for d = 2).
///   The state is PPT iff p <= 1/2.
/// - isotropic: p in [0,1] is the overlap with phi_d; PPT iff p <= 1/d.
/// - max_entangled: phi_d = |phi_d><phi_d| with |phi_d> = sum_i |ii> / sqrt(d).
/// - product_pure: |index_a> (x) |index_b>.
/// - random_mixed: G G^dagger / tr with G a d^2 x rank complex Gaussian matrix
///   (rank = d^2 gives the Hilbert-Schmidt measure).
/// - random_ppt: random_mixed draws rejected until the partial transpose is
///   PSD, at most max_attempts draws. rank = 0 selects 2 d^2.
/// - explicit_matrix: `matrix` interpreted with dims (d, d, 1) unless
///   `explicit_dims` is set.
struct StateFamilySpec {
  Family family = Family::max_entangled;
  std::size_t d = 2;
  double p = 0.0;
  std::size_t rank = 0;
  std::size_t index_a = 0;
  std::size_t index_b = 0;
  std::size_t max_attempts = 100000;
  std::optional<Matrix> matrix;
  std::optional<Dims> explicit_dims;
};

/// Builds a state from a family. Random families require a seed.
BipartiteState construct_state(const StateFamilySpec& spec, std::optional<std::uint64_t> seed = {});

/// The maximally entangled projector phi_d on C^d (x) C^d.
Matrix max_entangled_projector(std::size_t d);

/// Tensor product; pair counts add, order preserved (a's pairs first).
BipartiteState tensor(const BipartiteState& a, const BipartiteState& b);

/// n-fold tensor power, n >= 1.
BipartiteState tensor_power(const BipartiteState& state, std::size_t n);

/// Keeps the listed pairs (0-based, any order; duplicates rejected) and traces
/// out the rest. The result lists kept pairs in increasing index order.
BipartiteState partial_trace(const BipartiteState& state, std::span<const std::size_t> keep);

/// Same contraction on a raw operator laid out with `dims`.
Matrix partial_trace(const Matrix& op, const Dims& dims, std::span<const std::size_t> keep);

/// Transpose of every B factor, in the stored product basis. An involution:
/// it permutes entries and never rounds.
Matrix partial_transpose(const BipartiteState& state);
Matrix partial_transpose(const Matrix& op, const Dims& dims);

/// Reorders the pair-major basis into (A_1..A_k)(B_1..B_k) order so that the
/// operator becomes bipartite across the global A|B cut with local
/// dimensions local_a() and local_b().
Matrix to_global_cut(const Matrix& op, const Dims& dims);

/// Half the trace norm of a - b.
double trace_distance(const BipartiteState& a, const BipartiteState& b);

}  // namespace distilkit
