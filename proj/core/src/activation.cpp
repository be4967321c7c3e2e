#include "distilkit/activation.hpp"

#include <array>
#include <cmath>

#include "distilkit/tolerances.hpp"

namespace distilkit {

namespace {

using Index = Eigen::Index;

// Transposes the listed factors of an operator on a product of `dims`.
Matrix transpose_factors(const Matrix& m, const std::vector<std::size_t>& dims, const std::vector<bool>& flip) {
  const Index n = m.rows();
  std::vector<std::size_t> stride(dims.size(), 1);
  for (std::size_t f = dims.size(); f-- > 1;) stride[f - 1] = stride[f] * dims[f];
  Matrix out(n, n);
  for (Index r = 0; r < n; ++r) {
    for (Index c = 0; c < n; ++c) {
      std::size_t rr = 0, cc = 0;
      for (std::size_t f = 0; f < dims.size(); ++f) {
        const std::size_t dr = (static_cast<std::size_t>(r) / stride[f]) % dims[f];
        const std::size_t dc = (static_cast<std::size_t>(c) / stride[f]) % dims[f];
        rr += (flip[f] ? dc : dr) * stride[f];
        cc += (flip[f] ? dr : dc) * stride[f];
      }
      out(static_cast<Index>(rr), static_cast<Index>(cc)) = m(r, c);
    }
  }
  return out;
}

std::size_t sigma_index(std::size_t d, std::size_t i2, std::size_t a3, std::size_t j2, std::size_t b3) {
  return (i2 * 2 + a3) * (2 * d) + (j2 * 2 + b3);
}

Matrix witness_target() { return Matrix::Identity(4, 4) / 2.0 - max_entangled_projector(2); }

std::size_t infer_d(const BipartiteState& sigma) {
  const Dims& s = sigma.dims();
  if (s.pairs != 1 || s.dim_a != s.dim_b || s.dim_a % 2 != 0 || s.dim_a < 4) {
    throw ParameterError("activation target must have dims (2d, 2d, 1) with d >= 2");
  }
  return s.dim_a / 2;
}

}  // namespace

ActivationInstance make_activation_instance(BipartiteState rho, BipartiteState sigma) {
  const std::size_t d = infer_d(sigma);
  const Dims& r = rho.dims();
  if (r.pairs != 1 || r.dim_a != d || r.dim_b != d) {
    throw ParameterError("activator dims must be (d, d, 1) matching the target");
  }
  return {std::move(rho), std::move(sigma), d};
}

FilterPair activation_filters(std::size_t d) {
  if (d < 2) throw ParameterError("activation_filters needs d >= 2");
  const auto cols = static_cast<Index>(2 * d * d);
  Matrix a = Matrix::Zero(2, cols);
  for (std::size_t i = 0; i < d; ++i) {
    for (Index k = 0; k < 2; ++k) a(k, static_cast<Index>((i * d + i) * 2) + k) = 1.0;
  }
  return {a, a};
}

Matrix activation_joint_operator(const ActivationInstance& instance) {
  const std::size_t d = instance.d;
  const std::vector<std::size_t> dims{d, d, 2 * d, 2 * d};
  const std::vector<std::size_t> perm{0, 2, 1, 3};
  return conjugate_by_map(kron(instance.rho.matrix(), instance.sigma.matrix()), factor_permutation_map(dims, perm));
}

ActivationOutput apply_activation(const ActivationInstance& instance) {
  const std::size_t d = instance.d;
  const Matrix& rho = instance.rho.matrix();
  const Matrix& sigma = instance.sigma.matrix();
  ActivationOutput out;
  out.omega = Matrix::Zero(4, 4);
  for (std::size_t a = 0; a < 2; ++a) {
    for (std::size_t b = 0; b < 2; ++b) {
      for (std::size_t a2 = 0; a2 < 2; ++a2) {
        for (std::size_t b2 = 0; b2 < 2; ++b2) {
          cplx acc = 0.0;
          for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
              for (std::size_t i2 = 0; i2 < d; ++i2) {
                for (std::size_t j2 = 0; j2 < d; ++j2) {
                  acc += rho(static_cast<Index>(i * d + j), static_cast<Index>(i2 * d + j2)) *
                         sigma(static_cast<Index>(sigma_index(d, i, a, j, b)),
                               static_cast<Index>(sigma_index(d, i2, a2, j2, b2)));
                }
              }
            }
          }
          out.omega(static_cast<Index>(a * 2 + b), static_cast<Index>(a2 * 2 + b2)) = acc;
        }
      }
    }
  }
  out.omega = hermitian_part(out.omega);
  out.weight = out.omega.trace().real();
  if (!(out.weight > kDegenerateWeight)) throw DegenerateError("activation post-selection has zero weight");
  out.fidelity = (out.omega * max_entangled_projector(2)).trace().real() / out.weight;
  return out;
}

double jamiolkowski_pairing(const ActivationInstance& instance, const Matrix& z) {
  if (z.rows() != 4 || z.cols() != 4) throw ParameterError("Z must be 4 x 4");
  const std::size_t d = instance.d;
  const Matrix s = transpose_factors(instance.sigma.matrix(), {d, 2, d, 2}, {true, false, true, false});
  const std::vector<std::size_t> dims{d, d, 2, 2};
  const std::vector<std::size_t> perm{0, 2, 1, 3};
  const Matrix rz = conjugate_by_map(kron(instance.rho.matrix(), z), factor_permutation_map(dims, perm));
  return (rz * s).trace().real();
}

JamCheck jam_check(const ActivationInstance& instance, std::size_t trials, std::uint64_t seed) {
  const Matrix omega = apply_activation(instance).omega;
  Rng rng = make_rng(seed);
  std::vector<double> ratios;
  for (std::size_t t = 0; t < trials; ++t) {
    const Matrix z = random_density(4, 4, rng);
    const double den = jamiolkowski_pairing(instance, z);
    if (std::abs(den) < kDegenerateWeight) continue;
    ratios.push_back((omega * z).trace().real() / den);
  }
  if (ratios.empty()) throw DegenerateError("jam_check: every trial had a vanishing denominator");
  JamCheck check;
  check.used = ratios.size();
  check.c = ratios.front();
  for (double r : ratios) check.max_deviation = std::max(check.max_deviation, std::abs(r - check.c) / std::abs(check.c));
  return check;
}

double activation_witness(const BipartiteState& rho, const BipartiteState& sigma) {
  const ActivationInstance instance = make_activation_instance(rho, sigma);
  const Matrix omega = apply_activation(instance).omega;
  return (omega * witness_target()).trace().real();
}

Matrix activation_witness_operator(const BipartiteState& sigma) {
  const std::size_t d = infer_d(sigma);
  const Matrix& s = sigma.matrix();
  const Matrix w = witness_target();
  const auto n = static_cast<Index>(d * d);
  Matrix k = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t i2 = 0; i2 < d; ++i2) {
        for (std::size_t j2 = 0; j2 < d; ++j2) {
          cplx acc = 0.0;
          for (std::size_t a = 0; a < 2; ++a) {
            for (std::size_t b = 0; b < 2; ++b) {
              for (std::size_t a2 = 0; a2 < 2; ++a2) {
                for (std::size_t b2 = 0; b2 < 2; ++b2) {
                  acc += s(static_cast<Index>(sigma_index(d, i, a2, j, b2)),
                           static_cast<Index>(sigma_index(d, i2, a, j2, b))) *
                         w(static_cast<Index>(a * 2 + b), static_cast<Index>(a2 * 2 + b2));
                }
              }
            }
          }
          k(static_cast<Index>(i2 * d + j2), static_cast<Index>(i * d + j)) = acc;
        }
      }
    }
  }
  return hermitian_part(k);
}

namespace {

BipartiteState family_state(Family family, std::size_t d, double p) {
  StateFamilySpec spec;
  spec.family = family;
  spec.d = d;
  spec.p = p;
  return construct_state(spec);
}

BipartiteState perturb(const BipartiteState& best, double eps, Rng& rng) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(best.matrix());
  const Matrix root = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().cast<cplx>().asDiagonal();
  const Index n = root.rows();
  const Matrix g = root + eps * complex_gaussian(n, n, rng) / std::sqrt(static_cast<double>(2 * n * n));
  Matrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return BipartiteState::trusted(best.dims(), hermitian_part(rho));
}

}  // namespace

CandidateGenerator default_candidate_generator(std::size_t d, std::size_t budget, bool ppt_only,
                                               std::size_t sweep_points) {
  if (d < 2) throw ParameterError("candidate generator needs d >= 2");
  if (sweep_points < 2) throw ParameterError("candidate generator needs at least 2 sweep points");
  const std::size_t named = ppt_only ? 0 : 1;
  const std::size_t structured = named + 2 * sweep_points;
  const std::size_t random_end = std::max(structured, budget / 2);
  const double iso_max = ppt_only ? 1.0 / static_cast<double>(d) : 1.0;
  const double werner_max = ppt_only ? 0.5 : 1.0;
  const Dims dims{d, d, 1};

  return [=](std::size_t index, const Candidate* best, Rng& rng) -> std::optional<Candidate> {
    if (index >= budget) return std::nullopt;
    const auto sweep_value = [&](std::size_t k, double top) {
      return top * static_cast<double>(k) / static_cast<double>(sweep_points - 1);
    };
    if (index < named) return Candidate{family_state(Family::max_entangled, d, 0.0), "max_entangled"};
    if (index < named + sweep_points) {
      return Candidate{family_state(Family::isotropic, d, sweep_value(index - named, iso_max)), "isotropic"};
    }
    if (index < structured) {
      return Candidate{family_state(Family::werner, d, sweep_value(index - named - sweep_points, werner_max)),
                       "werner"};
    }
    const bool random_phase = index < random_end || best == nullptr;
    static constexpr std::array<double, 4> kSteps{0.3, 0.1, 0.03, 0.01};
    const double eps = kSteps[index % kSteps.size()];
    for (int attempt = 0; attempt < 64; ++attempt) {
      BipartiteState rho = random_phase ? BipartiteState::trusted(dims, random_density(d * d, d * d, rng))
                                        : perturb(best->rho, eps, rng);
      if (!ppt_only || is_ppt(rho).ppt) return Candidate{std::move(rho), random_phase ? "random" : "perturbed"};
    }
    const auto n = static_cast<Index>(d * d);
    return Candidate{BipartiteState::trusted(dims, Matrix::Identity(n, n) / static_cast<double>(n)), "mixed"};
  };
}

ActivatorResult search_activator(const BipartiteState& sigma, const CandidateGenerator& generator,
                                 const ActivatorOptions& options) {
  const Matrix k = activation_witness_operator(sigma);
  Rng rng = make_rng(options.seed);
  std::optional<Candidate> best;
  double best_value = std::numeric_limits<double>::infinity();
  std::size_t evaluated = 0;
  std::size_t best_index = 0;
  for (std::size_t index = 0; index < options.budget; ++index) {
    std::optional<Candidate> cand = generator(index, best ? &*best : nullptr, rng);
    if (!cand) break;
    ++evaluated;
    const double value = (cand->rho.matrix() * k).trace().real();
    if (value < best_value - kExactTol) {
      best_value = value;
      best = std::move(cand);
      best_index = index;
    }
  }
  if (!best) throw ParameterError("candidate generator produced nothing");

  const ActivationOutput out = apply_activation(make_activation_instance(best->rho, sigma));
  ActivatorResult result{*best};
  result.witness = activation_witness(best->rho, sigma);
  result.fidelity = out.fidelity;
  result.success_weight = out.weight;
  result.evaluated = evaluated;
  result.best_index = best_index;
  result.found = result.witness < -kStateTol;
  result.budget_exhausted = !result.found;
  return result;
}

ActivatorResult search_activator(const BipartiteState& sigma, const ActivatorOptions& options) {
  const std::size_t d = infer_d(sigma);
  return search_activator(sigma, default_candidate_generator(d, options.budget, options.ppt_only), options);
}

}  // namespace distilkit
