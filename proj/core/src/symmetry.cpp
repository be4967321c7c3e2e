#include "distilkit/symmetry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "distilkit/parallel.hpp"
#include "distilkit/tolerances.hpp"

namespace distilkit {

Permutation::Permutation(std::vector<std::size_t> mapping) : mapping_(std::move(mapping)) {
  std::vector<bool> seen(mapping_.size(), false);
  for (std::size_t image : mapping_) {
    if (image >= mapping_.size() || seen[image]) throw ParameterError("mapping is not a bijection");
    seen[image] = true;
  }
}

Permutation Permutation::identity(std::size_t k) {
  std::vector<std::size_t> m(k);
  std::iota(m.begin(), m.end(), std::size_t{0});
  return Permutation(std::move(m));
}

Permutation Permutation::compose(const Permutation& inner) const {
  if (inner.size() != size()) throw ParameterError("composing permutations of different size");
  std::vector<std::size_t> m(size());
  for (std::size_t j = 0; j < size(); ++j) m[j] = mapping_[inner.mapping_[j]];
  return Permutation(std::move(m));
}

Permutation Permutation::inverse() const {
  std::vector<std::size_t> m(size());
  for (std::size_t j = 0; j < size(); ++j) m[mapping_[j]] = j;
  return Permutation(std::move(m));
}

std::vector<Permutation> all_permutations(std::size_t k) {
  if (k == 0) throw ParameterError("permutations of zero pairs");
  if (k > kMaxEnumeratedPairs) {
    throw CapacityError("explicit S_k enumeration is limited to k <= " + std::to_string(kMaxEnumeratedPairs));
  }
  std::vector<std::size_t> m(k);
  std::iota(m.begin(), m.end(), std::size_t{0});
  std::vector<Permutation> out;
  do {
    out.emplace_back(m);
  } while (std::next_permutation(m.begin(), m.end()));
  return out;
}

namespace {

std::vector<std::size_t> pair_map(const Permutation& perm, std::size_t pair_dim) {
  std::vector<std::size_t> dims(perm.size(), pair_dim);
  checked_product(dims);
  return factor_permutation_map(dims, perm.mapping());
}

void check_square(const Matrix& op, std::size_t pairs, std::size_t pair_dim) {
  std::vector<std::size_t> dims(pairs, pair_dim);
  const std::size_t n = checked_product(dims);
  if (static_cast<std::size_t>(op.rows()) != n || op.rows() != op.cols()) {
    throw ParameterError("operator shape does not match pair layout");
  }
}

}  // namespace

Matrix permutation_operator(const Permutation& perm, std::size_t pair_dim) {
  const std::vector<std::size_t> map = pair_map(perm, pair_dim);
  const auto n = static_cast<Eigen::Index>(map.size());
  Matrix p = Matrix::Zero(n, n);
  for (Eigen::Index r = 0; r < n; ++r) p(r, static_cast<Eigen::Index>(map[r])) = 1.0;
  return p;
}

Matrix conjugate_pairs(const Matrix& op, const Permutation& perm, std::size_t pair_dim) {
  check_square(op, perm.size(), pair_dim);
  return conjugate_by_map(op, pair_map(perm, pair_dim));
}

Matrix symmetrize(const Matrix& op, std::size_t pairs, std::size_t pair_dim) {
  check_square(op, pairs, pair_dim);
  if (pairs == 1) return op;
  const std::vector<Permutation> group = all_permutations(pairs);
  Matrix acc = Matrix::Zero(op.rows(), op.cols());
  for (const Permutation& perm : group) acc += conjugate_by_map(op, pair_map(perm, pair_dim));
  return acc / static_cast<double>(group.size());
}

BipartiteState symmetrize(const BipartiteState& state) {
  const Dims& dims = state.dims();
  return BipartiteState::trusted(dims, symmetrize(state.matrix(), dims.pairs, dims.pair_dim()));
}

Matrix double_symmetrize(const Matrix& op, const Dims& dims) {
  check_square(op, dims.pairs, dims.pair_dim());
  if (dims.pairs == 1) return op;
  const std::vector<Permutation> group = all_permutations(dims.pairs);
  const std::vector<std::size_t> factors = dims.factor_dims();
  Matrix acc = Matrix::Zero(op.rows(), op.cols());
  std::vector<std::size_t> perm(factors.size());
  for (const Permutation& on_a : group) {
    for (const Permutation& on_b : group) {
      for (std::size_t j = 0; j < dims.pairs; ++j) {
        perm[2 * j] = 2 * on_a(j);
        perm[2 * j + 1] = 2 * on_b(j) + 1;
      }
      acc += conjugate_by_map(op, factor_permutation_map(factors, perm));
    }
  }
  return acc / static_cast<double>(group.size() * group.size());
}

BipartiteState double_symmetrize(const BipartiteState& state) {
  return BipartiteState::trusted(state.dims(), double_symmetrize(state.matrix(), state.dims()));
}

double symmetry_residual(const Matrix& op, std::size_t pairs, std::size_t pair_dim) {
  check_square(op, pairs, pair_dim);
  double worst = 0.0;
  for (const Permutation& perm : all_permutations(pairs)) {
    worst = std::max(worst, 0.5 * trace_norm(conjugate_by_map(op, pair_map(perm, pair_dim)) - op));
  }
  return worst;
}

double definetti_bound(std::size_t d, std::size_t k, std::size_t n) {
  if (d == 0 || k == 0 || n == 0) throw ParameterError("definetti_bound needs d, k, n >= 1");
  if (k > n) throw ParameterError("definetti_bound needs k <= n");
  const double dd = static_cast<double>(d);
  return 4.0 * dd * dd * dd * dd * static_cast<double>(k) / static_cast<double>(n);
}

Ensemble::Ensemble(std::vector<double> weights, std::vector<BipartiteState> members)
    : weights_(std::move(weights)), members_(std::move(members)) {
  if (weights_.empty() || weights_.size() != members_.size()) {
    throw ParameterError("ensemble needs one weight per member and at least one member");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw ParameterError("ensemble weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > kExactTol) throw ParameterError("ensemble weights must sum to 1");
  const Dims& first = members_.front().dims();
  if (first.pairs != 1) throw ParameterError("ensemble members must be single-pair states");
  for (const BipartiteState& m : members_) {
    if (!(m.dims() == first)) throw ParameterError("ensemble members have inconsistent dimensions");
  }
}

BipartiteState Ensemble::average() const {
  Matrix acc = Matrix::Zero(members_.front().matrix().rows(), members_.front().matrix().cols());
  for (std::size_t i = 0; i < size(); ++i) acc += weights_[i] * members_[i].matrix();
  return BipartiteState::trusted(member_dims(), std::move(acc));
}

BipartiteState mixture_of_powers(const Ensemble& ensemble, std::size_t k) {
  if (k == 0) throw ParameterError("mixture_of_powers needs k >= 1");
  Dims dims = ensemble.member_dims();
  dims.pairs = k;
  const auto n = static_cast<Eigen::Index>(dims.total());
  Matrix acc = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    if (ensemble.weights()[i] == 0.0) continue;
    acc += ensemble.weights()[i] * tensor_power(ensemble.members()[i], k).matrix();
  }
  return BipartiteState::trusted(dims, std::move(acc));
}

namespace {

Matrix kron_power(const Matrix& m, std::size_t k) {
  Matrix acc = m;
  for (std::size_t i = 1; i < k; ++i) acc = kron(acc, m);
  return acc;
}

Matrix psd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(m));
  const RealVector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().adjoint();
}

// Frobenius fit of omega by sum_i (H_i H_i^dag)^(x k). The factor scale
// carries the weight: w_i = tr[H_i H_i^dag]^k and rho_i = H_i H_i^dag / tr.
class PowerMixtureFit {
 public:
  PowerMixtureFit(const Matrix& omega, const Dims& dims) : omega_(omega), dims_(dims) {}

  double objective(const std::vector<Matrix>& h) const { return residual(h).squaredNorm(); }

  Matrix residual(const std::vector<Matrix>& h) const {
    Matrix r = omega_;
    for (const Matrix& f : h) r -= kron_power(hermitian_part(f * f.adjoint()), dims_.pairs);
    return r;
  }

  // Returns the objective; `grad` receives d/dH_i in the real inner product
  // Re tr[A^dag B].
  double value_and_gradient(const std::vector<Matrix>& h, std::vector<Matrix>& grad) const {
    // R is permutation-symmetric, so every single-pair contraction
    // tr_{rest}[R (I (x) M^(x)(k-1))] is the same; compute it on pair 0.
    const Matrix r = residual(h);
    const std::size_t k = dims_.pairs;
    const auto pd = static_cast<Eigen::Index>(dims_.pair_dim());
    const Eigen::Index n = r.rows() / pd;
    grad.resize(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
      const Matrix m = hermitian_part(h[i] * h[i].adjoint());
      const Matrix qt = kron_power(m, k - 1).transpose();
      Matrix c(pd, pd);
      for (Eigen::Index a = 0; a < pd; ++a) {
        for (Eigen::Index b = 0; b < pd; ++b) c(a, b) = r.block(a * n, b * n, n, n).cwiseProduct(qt).sum();
      }
      grad[i] = (-4.0 * static_cast<double>(k)) * hermitian_part(c) * h[i];
    }
    return r.squaredNorm();
  }

  // Levenberg-Marquardt on the members with nonzero weight, in a real
  // parametrization of the Hermitian residual. Fast where the first-order
  // step stalls on a zero-residual fit.
  void levenberg_marquardt(std::vector<Matrix>& h, std::size_t iters) const {
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < h.size(); ++i) {
      if (h[i].squaredNorm() > 0.0) active.push_back(i);
    }
    if (active.empty()) return;
    const auto pd = static_cast<Eigen::Index>(dims_.pair_dim());
    const Eigen::Index per = 2 * pd * pd;
    const Eigen::Index params = per * static_cast<Eigen::Index>(active.size());
    const Eigen::Index d = omega_.rows();
    const Eigen::Index rows = d * d;
    // Skipped when one normal-equation build would exceed ~3e8 flops.
    const double small = static_cast<double>(std::min(rows, params));
    if (small * small * static_cast<double>(std::max(rows, params)) > 3e8) return;

    const auto hvec = [d](const Matrix& m, double* out) {
      const double r2 = std::sqrt(2.0);
      Eigen::Index k = 0;
      for (Eigen::Index r = 0; r < d; ++r) {
        out[k++] = m(r, r).real();
        for (Eigen::Index c = r + 1; c < d; ++c) {
          out[k++] = r2 * m(r, c).real();
          out[k++] = r2 * m(r, c).imag();
        }
      }
    };

    double lambda = 1e-3;
    Eigen::VectorXd res(rows);
    hvec(residual(h), res.data());
    double f = res.squaredNorm();
    Eigen::MatrixXd jac(rows, params);
    for (std::size_t it = 0; it < iters && f > 1e-24; ++it) {
      for (std::size_t a = 0; a < active.size(); ++a) {
        const Matrix& hi = h[active[a]];
        const Matrix m = hermitian_part(hi * hi.adjoint());
        Eigen::Index col = static_cast<Eigen::Index>(a) * per;
        for (Eigen::Index r = 0; r < pd; ++r) {
          for (Eigen::Index c = 0; c < pd; ++c) {
            for (const cplx phase : {cplx(1.0, 0.0), cplx(0.0, 1.0)}) {
              // dM = E H^dag + H E^dag with E = phase |r><c|.
              Matrix dm = Matrix::Zero(pd, pd);
              dm.row(r) += phase * hi.col(c).adjoint();
              dm.col(r) += std::conj(phase) * hi.col(c);
              hvec(-power_derivative(m, dm), jac.col(col).data());
              ++col;
            }
          }
        }
      }
      // Solve in the smaller of the parameter and residual spaces.
      const bool dual = rows < params;
      const Eigen::MatrixXd normal = dual ? Eigen::MatrixXd(jac * jac.transpose()) : Eigen::MatrixXd(jac.transpose() * jac);
      const Eigen::VectorXd rhs = dual ? res : Eigen::VectorXd(jac.transpose() * res);
      const double scale = normal.diagonal().mean();
      bool improved = false;
      for (int tries = 0; tries < 20 && !improved; ++tries) {
        Eigen::MatrixXd a = normal;
        a.diagonal().array() += lambda * scale;
        const Eigen::VectorXd sol = a.ldlt().solve(rhs);
        const Eigen::VectorXd delta = dual ? Eigen::VectorXd(-(jac.transpose() * sol)) : Eigen::VectorXd(-sol);
        std::vector<Matrix> trial = h;
        for (std::size_t k = 0; k < active.size(); ++k) {
          Matrix& t = trial[active[k]];
          Eigen::Index idx = static_cast<Eigen::Index>(k) * per;
          for (Eigen::Index r = 0; r < pd; ++r) {
            for (Eigen::Index c = 0; c < pd; ++c) {
              t(r, c) += cplx(delta(idx), delta(idx + 1));
              idx += 2;
            }
          }
        }
        Eigen::VectorXd trial_res(rows);
        hvec(residual(trial), trial_res.data());
        const double ft = trial_res.squaredNorm();
        if (ft < f) {
          h = std::move(trial);
          res = std::move(trial_res);
          improved = true;
          f = ft;
          lambda = std::max(lambda / 3.0, 1e-12);
        } else {
          lambda *= 4.0;
        }
      }
      if (!improved) break;
    }
  }

  // Convex step: optimal simplex weights for the current normalized members,
  // written back into the factor scales when that lowers the objective.
  void reweight(std::vector<Matrix>& h) const {
    const std::size_t n = h.size();
    const auto k = static_cast<double>(dims_.pairs);
    std::vector<Matrix> members(n);
    RealVector warm(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const double t = h[i].squaredNorm();
      warm(i) = std::pow(t, k);
      members[i] = t > 0.0 ? Matrix(hermitian_part(h[i] * h[i].adjoint()) / t) : Matrix(h[i] * h[i].adjoint());
    }
    if (!(warm.sum() > 0.0)) return;
    warm = project_to_simplex(warm / warm.sum());

    Eigen::MatrixXd gram(n, n);
    RealVector overlap(n);
    for (std::size_t i = 0; i < n; ++i) {
      overlap(i) = (omega_.cwiseProduct(kron_power(members[i], dims_.pairs).conjugate())).sum().real();
      for (std::size_t j = 0; j <= i; ++j) {
        const double t = (members[i].cwiseProduct(members[j].conjugate())).sum().real();
        gram(i, j) = gram(j, i) = std::pow(t, k);
      }
    }
    const RealVector w = solve_weights(gram, overlap, warm);
    std::vector<Matrix> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = h[i].squaredNorm();
      next[i] = t > 0.0 ? Matrix(h[i] * (std::pow(w(i), 0.5 / k) / std::sqrt(t))) : h[i];
    }
    if (objective(next) <= objective(h)) h = std::move(next);
  }

 private:
  Matrix power_derivative(const Matrix& m, const Matrix& dm) const {
    const std::size_t k = dims_.pairs;
    Matrix total;
    for (std::size_t p = 0; p < k; ++p) {
      Matrix term = Matrix::Identity(1, 1);
      for (std::size_t q = 0; q < k; ++q) term = kron(term, q == p ? dm : m);
      if (total.size() == 0) total = std::move(term);
      else total += term;
    }
    return total;
  }

  static RealVector solve_weights(const Eigen::MatrixXd& gram, const RealVector& overlap, const RealVector& warm) {
    // FISTA on the simplex for w^T H w - 2 b^T w.
    const double lipschitz = 2.0 * std::max(gram.diagonal().sum(), 1e-300);
    RealVector w = warm, prev = warm, y = warm;
    double t = 1.0;
    for (int it = 0; it < 400; ++it) {
      const RealVector grad = 2.0 * (gram * y - overlap);
      prev = w;
      w = project_to_simplex(y - grad / lipschitz);
      const double t_next = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
      y = w + ((t - 1.0) / t_next) * (w - prev);
      t = t_next;
      if ((w - prev).lpNorm<Eigen::Infinity>() < 1e-15) break;
    }
    return w;
  }

  const Matrix& omega_;
  Dims dims_;
};

struct RestartResult {
  double distance = std::numeric_limits<double>::infinity();
  std::vector<Matrix> factors;
  std::vector<Matrix> members;
  RealVector weights;
};

double inner(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i].cwiseProduct(b[i].conjugate())).sum().real();
  return acc;
}

void axpy(std::vector<Matrix>& y, double a, const std::vector<Matrix>& x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

// Local step: L-BFGS over all factors with Armijo backtracking. Returns false
// once no descent step is found.
bool lbfgs_steps(const PowerMixtureFit& fit, std::vector<Matrix>& h, std::size_t steps) {
  constexpr std::size_t kMemory = 10;
  std::vector<std::vector<Matrix>> ss, ys;
  std::vector<double> rhos;
  std::vector<Matrix> grad;
  double f = fit.value_and_gradient(h, grad);
  for (std::size_t it = 0; it < steps; ++it) {
    if (f < 1e-28 || inner(grad, grad) < 1e-32) return false;

    std::vector<Matrix> q = grad;
    std::vector<double> alpha(ss.size());
    for (std::size_t j = ss.size(); j-- > 0;) {
      alpha[j] = rhos[j] * inner(ss[j], q);
      axpy(q, -alpha[j], ys[j]);
    }
    if (!ss.empty()) {
      const double gamma = inner(ss.back(), ys.back()) / inner(ys.back(), ys.back());
      for (auto& m : q) m *= gamma;
    } else {
      const double scale = 1e-2 / std::sqrt(inner(grad, grad));
      for (auto& m : q) m *= scale;
    }
    for (std::size_t j = 0; j < ss.size(); ++j) {
      const double beta = rhos[j] * inner(ys[j], q);
      axpy(q, alpha[j] - beta, ss[j]);
    }
    double slope = -inner(grad, q);
    if (slope >= 0.0) {
      q = grad;
      for (auto& m : q) m *= 1e-2 / std::sqrt(inner(grad, grad));
      slope = -inner(grad, q);
      ss.clear();
      ys.clear();
      rhos.clear();
    }

    double step = 1.0;
    bool accepted = false;
    std::vector<Matrix> trial, trial_grad;
    double ft = f;
    for (int bt = 0; bt < 40; ++bt) {
      trial = h;
      axpy(trial, -step, q);
      ft = fit.value_and_gradient(trial, trial_grad);
      if (ft <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) return false;

    std::vector<Matrix> s(h.size()), y(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
      s[i] = trial[i] - h[i];
      y[i] = trial_grad[i] - grad[i];
    }
    const double sy = inner(s, y);
    if (sy > 1e-300) {
      if (ss.size() == kMemory) {
        ss.erase(ss.begin());
        ys.erase(ys.begin());
        rhos.erase(rhos.begin());
      }
      ss.push_back(std::move(s));
      ys.push_back(std::move(y));
      rhos.push_back(1.0 / sy);
    }
    h = std::move(trial);
    grad = std::move(trial_grad);
    f = ft;
  }
  return true;
}

Matrix mixture_matrix(const std::vector<Matrix>& members, const RealVector& weights, std::size_t k) {
  Matrix acc;
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (weights(i) == 0.0) continue;
    Matrix term = weights(i) * kron_power(members[i], k);
    if (acc.size() == 0) acc = std::move(term);
    else acc += term;
  }
  return acc;
}

// Projected subgradient on the weights for the trace distance itself.
RealVector polish_weights(const Matrix& omega, const std::vector<Matrix>& members, RealVector weights,
                          std::size_t k, std::size_t iters, double& best_distance) {
  std::vector<Matrix> powers;
  for (const Matrix& m : members) powers.push_back(kron_power(m, k));
  RealVector best = weights;
  for (std::size_t it = 0; it < iters; ++it) {
    Matrix r = omega;
    for (std::size_t i = 0; i < powers.size(); ++i) r -= weights(i) * powers[i];
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(r));
    const double dist = 0.5 * es.eigenvalues().cwiseAbs().sum();
    if (dist < best_distance) {
      best_distance = dist;
      best = weights;
    }
    const RealVector sign = es.eigenvalues().unaryExpr([](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
    const Matrix sgn = es.eigenvectors() * sign.asDiagonal() * es.eigenvectors().adjoint();
    RealVector g(powers.size());
    for (std::size_t i = 0; i < powers.size(); ++i) g(i) = -0.5 * (sgn.cwiseProduct(powers[i].conjugate())).sum().real();
    const double gn = g.norm();
    if (gn == 0.0) break;
    const double step = 0.05 * dist / (gn * std::sqrt(static_cast<double>(it) + 1.0));
    weights = project_to_simplex(weights - step * g);
  }
  return best;
}

RestartResult summarize(const Matrix& omega, const Dims& dims, std::vector<Matrix> h) {
  RestartResult out;
  const auto pd = static_cast<Eigen::Index>(dims.pair_dim());
  const auto k = static_cast<double>(dims.pairs);
  RealVector w(static_cast<Eigen::Index>(h.size()));
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double t = h[i].squaredNorm();
    w(i) = std::pow(t, k);
    out.members.push_back(t > 0.0 ? Matrix(hermitian_part(h[i] * h[i].adjoint()) / t)
                                  : Matrix(Matrix::Identity(pd, pd) / static_cast<double>(pd)));
  }
  out.weights = w.sum() > 0.0 ? RealVector(w / w.sum()) : RealVector(RealVector::Constant(w.size(), 1.0 / w.size()));
  out.distance = 0.5 * trace_norm(omega - mixture_matrix(out.members, out.weights, dims.pairs));
  out.factors = std::move(h);
  return out;
}

RestartResult run_restart(const Matrix& omega, const Dims& dims, const Matrix& marginal_root, std::size_t support,
                          std::size_t iters, std::uint64_t seed, std::size_t restart) {
  Rng rng = make_rng(seed, restart);
  const auto pd = static_cast<Eigen::Index>(dims.pair_dim());
  // Equal weights 1/support correspond to tr[H H^dag] = support^{-1/k}.
  const double scale = std::pow(static_cast<double>(support), -0.5 / static_cast<double>(dims.pairs));
  std::vector<Matrix> h(support);
  for (std::size_t i = 0; i < support; ++i) {
    Matrix g;
    if (restart == 0) {
      // Start near the single-pair marginal; member 0 is the marginal itself.
      const double spread = i == 0 ? 0.0 : 0.3;
      g = marginal_root + spread * complex_gaussian(pd, pd, rng) / std::sqrt(static_cast<double>(pd));
    } else {
      g = complex_gaussian(pd, pd, rng);
    }
    h[i] = g * (scale / g.norm());
  }

  PowerMixtureFit fit(omega, dims);
  constexpr std::size_t kRound = 50;
  for (std::size_t done = 0; done < iters; done += kRound) {
    fit.reweight(h);
    if (!lbfgs_steps(fit, h, std::min(kRound, iters - done))) break;
  }
  fit.reweight(h);
  return summarize(omega, dims, std::move(h));
}

}  // namespace

ProductMixtureFit best_product_mixture_distance(const BipartiteState& state, const ProductMixtureOptions& options) {
  const Dims& dims = state.dims();
  if (dims.pairs < 2) throw ParameterError("best_product_mixture_distance needs at least two pairs");
  if (options.restarts == 0) throw ParameterError("best_product_mixture_distance needs restarts >= 1");
  if (symmetry_residual(state.matrix(), dims.pairs, dims.pair_dim()) > kStateTol) {
    throw ParameterError("input is not permutation-symmetric; symmetrize it first");
  }
  const std::size_t support =
      options.support == 0 ? dims.pairs * dims.pair_dim() * dims.pair_dim() : options.support;

  const std::size_t keep[] = {0};
  const Matrix marginal = partial_trace(state.matrix(), dims, keep);
  const Matrix root = psd_sqrt(marginal);

  std::vector<RestartResult> results(options.restarts);
  parallel_for(options.restarts, [&](std::size_t r) {
    results[r] = run_restart(state.matrix(), dims, root, support, options.iters, options.seed, r);
  });

  std::size_t best = 0;
  for (std::size_t r = 1; r < results.size(); ++r) {
    if (results[r].distance < results[best].distance - kExactTol) best = r;
  }
  RestartResult winner = std::move(results[best]);
  {
    // Second-order polish of the winning restart only.
    PowerMixtureFit fit(state.matrix(), dims);
    std::vector<Matrix> h = winner.factors;
    fit.levenberg_marquardt(h, 60);
    RestartResult polished = summarize(state.matrix(), dims, std::move(h));
    if (polished.distance < winner.distance) winner = std::move(polished);
  }
  double distance = winner.distance;
  const RealVector weights =
      polish_weights(state.matrix(), winner.members, winner.weights, dims.pairs, 200, distance);

  std::vector<double> w;
  std::vector<BipartiteState> members;
  double total = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights(i) <= 0.0) continue;
    total += weights(i);
  }
  Dims single = dims;
  single.pairs = 1;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights(i) <= 0.0) continue;
    w.push_back(weights(i) / total);
    members.push_back(BipartiteState::trusted(single, winner.members[static_cast<std::size_t>(i)]));
  }
  // Renormalization can move the fit by O(1 - total); re-measure.
  Ensemble ensemble(std::move(w), std::move(members));
  const double final_distance = trace_distance(state, mixture_of_powers(ensemble, dims.pairs));
  return ProductMixtureFit{final_distance, std::move(ensemble), best};
}

}  // namespace distilkit
