#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "distilkit/distillability.hpp"
#include "distilkit/states.hpp"

namespace distilkit {

/// Activator rho on A1|B1 = C^d (x) C^d and target sigma on A2A3|B2B3 with
/// A2, B2 = C^d and A3, B3 = C^2.
///
/// sigma is stored as a single pair with dims (2d, 2d, 1); the local index on
/// each side is i2 * 2 + i3.
struct ActivationInstance {
  BipartiteState rho;
  BipartiteState sigma;
  std::size_t d = 0;
};

/// Checks dimension compatibility and infers d.
ActivationInstance make_activation_instance(BipartiteState rho, BipartiteState sigma);

/// A = <phi|_{A1A2} (x) I_{A3} with the unnormalized |phi> = sum_i |ii>, as a
/// 2 x 2d^2 matrix on A1A2A3 (index (i1 * d + i2) * 2 + i3); B is the same.
/// A A^dag = d I.
FilterPair activation_filters(std::size_t d);

/// rho (x) sigma reordered to (A1A2A3)(B1B2B3).
Matrix activation_joint_operator(const ActivationInstance& instance);

struct ActivationOutput {
  /// Unnormalized post-selected two-qubit operator on A3B3.
  Matrix omega;
  double weight = 0.0;
  /// <phi_2| omega |phi_2> / weight.
  double fidelity = 0.0;
};

/// (A (x) B)(rho (x) sigma)(A (x) B)^dag by direct index contraction. Throws
/// DegenerateError when the weight is at most 1e-14.
ActivationOutput apply_activation(const ActivationInstance& instance);

/// tr[(rho (x) Z) sigma^{T_{A2B2}}], the transpose taken on the A2 and B2
/// factors in the stored product basis; rho sits on A2B2 and Z on A3B3.
double jamiolkowski_pairing(const ActivationInstance& instance, const Matrix& z);

struct JamCheck {
  /// Common ratio tr[omega Z] / jamiolkowski_pairing.
  double c = 0.0;
  double max_deviation = 0.0;
  std::size_t used = 0;
};

/// Ratio check over `trials` random positive Z. Trials with a denominator
/// below 1e-14 are skipped; DegenerateError if all are.
JamCheck jam_check(const ActivationInstance& instance, std::size_t trials = 100, std::uint64_t seed = 0);

/// tr[omega (I/2 - phi_2)]. Negative iff the normalized output fidelity
/// exceeds 1/2.
double activation_witness(const BipartiteState& rho, const BipartiteState& sigma);

/// Hermitian K on C^d (x) C^d with activation_witness(rho, sigma) = tr[rho K].
Matrix activation_witness_operator(const BipartiteState& sigma);

struct Candidate {
  BipartiteState rho;
  std::string label;
};

/// Produces the candidate at `index`, or nothing when exhausted. `best` is the
/// best candidate so far (null before the first).
using CandidateGenerator =
    std::function<std::optional<Candidate>(std::size_t index, const Candidate* best, Rng& rng)>;

/// Default order: phi_d, isotropic sweep, Werner sweep, random Hilbert-Schmidt
/// states up to half the budget, then perturbations of the best candidate.
/// With `ppt_only` every candidate is PPT: phi_d is skipped, sweeps stop at
/// the PPT boundary and random or perturbed draws are redrawn until PPT (at
/// most 64 tries, then the maximally mixed state is used).
CandidateGenerator default_candidate_generator(std::size_t d, std::size_t budget, bool ppt_only = false,
                                               std::size_t sweep_points = 11);

struct ActivatorOptions {
  std::size_t budget = 2000;
  bool ppt_only = false;
  std::uint64_t seed = 0;
};

struct ActivatorResult {
  Candidate best;
  double witness = 0.0;
  double fidelity = 0.0;
  double success_weight = 0.0;
  std::size_t evaluated = 0;
  std::size_t best_index = 0;
  /// witness < -kStateTol.
  bool found = false;
  bool budget_exhausted = true;
};

/// Evaluates candidates in order and keeps the most negative witness (ties go
/// to the earlier candidate); stops at the first candidate exhausting the
/// generator or the budget.
ActivatorResult search_activator(const BipartiteState& sigma, const CandidateGenerator& generator,
                                 const ActivatorOptions& options);
ActivatorResult search_activator(const BipartiteState& sigma, const ActivatorOptions& options = {});

}  // namespace distilkit
