#include "distilkit/distillability.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "distilkit/parallel.hpp"
#include "distilkit/symmetry.hpp"
#include "distilkit/tolerances.hpp"

namespace distilkit {

namespace {

struct Cut {
  Matrix rho;
  Eigen::Index a = 0;
  Eigen::Index b = 0;
};

Cut global_cut(const Matrix& op, const Dims& dims) {
  return {to_global_cut(op, dims), static_cast<Eigen::Index>(dims.local_a()),
          static_cast<Eigen::Index>(dims.local_b())};
}

Vector kron_vec(const Vector& x, const Vector& y) {
  Vector out(x.size() * y.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out.segment(i * y.size(), y.size()) = x(i) * y;
  return out;
}

// I_a (x) y, shape ab x a.
Matrix embed_b_vector(const Vector& y, Eigen::Index a) {
  const Eigen::Index b = y.size();
  Matrix m = Matrix::Zero(a * b, a);
  for (Eigen::Index i = 0; i < a; ++i) m.block(i * b, i, b, 1) = y;
  return m;
}

// x (x) I_b, shape ab x b.
Matrix embed_a_vector(const Vector& x, Eigen::Index b) {
  const Eigen::Index a = x.size();
  Matrix m = Matrix::Zero(a * b, b);
  for (Eigen::Index i = 0; i < a; ++i) m.block(i * b, 0, b, b) = x(i) * Matrix::Identity(b, b);
  return m;
}

struct Ratio {
  double num = 0.0;
  double den = 0.0;
};

// Columns of x (a x D) and y (b x D) are A^dag|i> and B^dag|i>.
Ratio filter_ratio(const Matrix& rho, const Matrix& x, const Matrix& y) {
  const Eigen::Index d = x.cols();
  Vector v = Vector::Zero(rho.rows());
  for (Eigen::Index i = 0; i < d; ++i) v += kron_vec(x.col(i), y.col(i));
  v /= std::sqrt(static_cast<double>(d));
  Ratio r;
  r.num = v.dot(rho * v).real();
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const Vector w = kron_vec(x.col(i), y.col(j));
      r.den += w.dot(rho * w).real();
    }
  }
  return r;
}

// Whitening of a PSD form restricted to its range: columns W with W^dag R W = I.
Matrix range_whitener(const Matrix& form) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(form));
  const RealVector& lam = es.eigenvalues();
  const double top = lam.maxCoeff();
  if (!(top > 0.0)) return Matrix(form.rows(), 0);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam(i) > 1e-12 * top) keep.push_back(i);
  }
  Matrix w(form.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    w.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(keep[c]) / std::sqrt(lam(keep[c]));
  }
  return w;
}

using Embed = std::function<Matrix(const Vector&)>;

// Maximizes the filter ratio over `own` (own_dim x D) with the other side fixed.
bool seesaw_step(const Matrix& rho, const Matrix& other, Eigen::Index own_dim, const Embed& embed, Matrix& own,
                 double& value) {
  const Eigen::Index d = other.cols();
  std::vector<Matrix> e(static_cast<std::size_t>(d));
  Matrix form = Matrix::Zero(own_dim, own_dim);
  for (Eigen::Index j = 0; j < d; ++j) {
    e[j] = embed(other.col(j));
    form += e[j].adjoint() * rho * e[j];
  }
  const Matrix w = range_whitener(form);
  const Eigen::Index r = w.cols();
  if (r == 0) return false;

  Matrix h(d * r, d * r);
  for (Eigen::Index i = 0; i < d; ++i) {
    const Matrix left = (e[i] * w).adjoint() * rho;
    for (Eigen::Index j = 0; j < d; ++j) {
      h.block(i * r, j * r, r, r) = left * e[j] * w / static_cast<double>(d);
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(h));
  const Eigen::Index top = d * r - 1;
  const Vector z = es.eigenvectors().col(top);
  Matrix next(own_dim, d);
  for (Eigen::Index i = 0; i < d; ++i) next.col(i) = w * z.segment(i * r, r);
  own = std::move(next);
  value = es.eigenvalues()(top);
  return true;
}

struct SeesawRun {
  bool degenerate = true;
  double value = -std::numeric_limits<double>::infinity();
  Matrix x, y;
};

Matrix identity_embedding(Eigen::Index dim, Eigen::Index d, Rng& rng) {
  Matrix m = Matrix::Zero(dim, d);
  for (Eigen::Index i = 0; i < std::min(dim, d); ++i) m(i, i) = 1.0;
  for (Eigen::Index i = dim; i < d; ++i) m.col(i) = complex_gaussian(dim, 1, rng);
  return m;
}

SeesawRun run_seesaw(const Cut& cut, Eigen::Index d, const SeesawOptions& opt, std::size_t restart) {
  Rng rng = make_rng(opt.seed, restart);
  SeesawRun run;
  Matrix x, y;
  Ratio r;
  bool ok = false;
  for (int attempt = 0; attempt < 20 && !ok; ++attempt) {
    if (restart == 0 && attempt == 0) {
      x = identity_embedding(cut.a, d, rng);
      y = identity_embedding(cut.b, d, rng);
    } else {
      x = complex_gaussian(cut.a, d, rng);
      y = complex_gaussian(cut.b, d, rng);
    }
    r = filter_ratio(cut.rho, x, y);
    const double scale = x.squaredNorm() * y.squaredNorm();
    ok = r.den >= kDegenerateWeight * std::max(scale, 1.0);
  }
  if (!ok) return run;

  double value = r.num / r.den;
  const Embed embed_for_a = [&](const Vector& col) { return embed_b_vector(col, cut.a); };
  const Embed embed_for_b = [&](const Vector& col) { return embed_a_vector(col, cut.b); };

  for (std::size_t it = 0; it < opt.iters; ++it) {
    const double before = value;
    Matrix cand = x;
    double v = value;
    if (seesaw_step(cut.rho, y, cut.a, embed_for_a, cand, v) && v >= value) {
      x = std::move(cand);
      value = v;
    }
    cand = y;
    v = value;
    if (seesaw_step(cut.rho, x, cut.b, embed_for_b, cand, v) && v >= value) {
      y = std::move(cand);
      value = v;
    }
    if (value - before < opt.tol) break;
  }
  run.degenerate = false;
  run.value = value;
  run.x = std::move(x);
  run.y = std::move(y);
  return run;
}

WitnessReport seesaw_report(const BipartiteState& state, std::size_t target_dim, double threshold,
                            const SeesawOptions& opt) {
  if (opt.restarts == 0) throw ParameterError("see-saw needs restarts >= 1");
  const Cut cut = global_cut(state.matrix(), state.dims());
  const auto d = static_cast<Eigen::Index>(target_dim);

  std::vector<SeesawRun> runs(opt.restarts);
  parallel_for(opt.restarts, [&](std::size_t r) { runs[r] = run_seesaw(cut, d, opt, r); });

  std::size_t best = opt.restarts;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    if (runs[r].degenerate) continue;
    if (best == opt.restarts || runs[r].value > runs[best].value + kExactTol) best = r;
  }
  if (best == opt.restarts) throw OptimizationError("see-saw: every restart had a degenerate denominator");

  FilterPair filters{runs[best].x.adjoint(), runs[best].y.adjoint()};
  filters.a /= operator_norm(filters.a);
  filters.b /= operator_norm(filters.b);

  WitnessReport report;
  report.value = filtered_fidelity(state, filters);
  report.certificate = std::move(filters);
  report.violation = report.value > threshold;
  report.budget_exhausted = !report.violation;
  report.seed = opt.seed;
  report.restarts = opt.restarts;
  report.best_restart = best;
  return report;
}

}  // namespace

Matrix singlet_witness() { return Matrix::Identity(4, 4) / 2.0 - max_entangled_projector(2); }

WitnessReport f2(const BipartiteState& state, const SeesawOptions& options) {
  return seesaw_report(state, 2, 0.5 + kSingletMargin, options);
}

WitnessReport fD(const BipartiteState& state, std::size_t target_dim, double lambda, const SeesawOptions& options) {
  if (target_dim < 2) throw ParameterError("fD needs D >= 2");
  if (!(lambda >= 1.0 / static_cast<double>(target_dim) && lambda < 1.0)) {
    throw ParameterError("fD needs lambda in [1/D, 1)");
  }
  return seesaw_report(state, target_dim, lambda, options);
}

Matrix apply_filters(const BipartiteState& state, const FilterPair& filters) {
  const Dims& dims = state.dims();
  if (static_cast<std::size_t>(filters.a.cols()) != dims.local_a() ||
      static_cast<std::size_t>(filters.b.cols()) != dims.local_b() || filters.a.rows() != filters.b.rows()) {
    throw ParameterError("filter shapes do not match the state");
  }
  const Matrix ab = kron(filters.a, filters.b);
  return ab * to_global_cut(state.matrix(), dims) * ab.adjoint();
}

double filtered_fidelity(const BipartiteState& state, const FilterPair& filters) {
  const Matrix out = apply_filters(state, filters);
  const double weight = out.trace().real();
  if (!(weight > kDegenerateWeight)) throw DegenerateError("filtered state has zero weight");
  const auto d = static_cast<std::size_t>(filters.a.rows());
  return (out * max_entangled_projector(d)).trace().real() / weight;
}

namespace {

struct SchmidtRun {
  double value = std::numeric_limits<double>::infinity();
  Vector u1, u2, v1, v2;
};

Vector any_orthogonal(const Vector& v, Rng& rng) {
  Vector w = complex_gaussian(v.size(), 1, rng);
  if (v.squaredNorm() > 0) w -= v * (v.dot(w) / v.squaredNorm());
  return w.normalized();
}

// Minimizes <psi|X|psi>/<psi|psi> over psi = sum_l own_l (x) fixed_l (or the
// mirrored layout), replacing both pairs by the optimum in a whitened basis.
double schmidt_step(const Matrix& x, Vector& own1, Vector& own2, Vector& fixed1, Vector& fixed2, Eigen::Index own_dim,
                    bool own_is_a, Rng& rng) {
  Eigen::Matrix2cd gram;
  gram << fixed1.squaredNorm(), fixed1.dot(fixed2), fixed2.dot(fixed1), fixed2.squaredNorm();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(gram);
  std::vector<Vector> basis;
  for (int l = 1; l >= 0; --l) {
    const double lam = es.eigenvalues()(l);
    if (lam > 1e-12 * std::max(es.eigenvalues()(1), 1e-300)) {
      const Eigen::Vector2cd c = es.eigenvectors().col(l) / std::sqrt(lam);
      basis.push_back(c(0) * fixed1 + c(1) * fixed2);
    }
  }
  if (basis.empty()) {
    fixed1 = complex_gaussian(fixed1.size(), 1, rng).col(0).normalized();
    basis.push_back(fixed1);
  }
  const Eigen::Index r = static_cast<Eigen::Index>(basis.size());
  const Eigen::Index other_dim = basis.front().size();

  Matrix f(x.rows(), r * own_dim);
  for (Eigen::Index l = 0; l < r; ++l) {
    f.middleCols(l * own_dim, own_dim) =
        own_is_a ? embed_b_vector(basis[l], own_dim) : embed_a_vector(basis[l], own_dim);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> small(hermitian_part(f.adjoint() * x * f));
  const Vector z = small.eigenvectors().col(0);
  own1 = z.segment(0, own_dim);
  fixed1 = basis[0];
  if (r == 2) {
    own2 = z.segment(own_dim, own_dim);
    fixed2 = basis[1];
  } else {
    own2 = Vector::Zero(own_dim);
    fixed2 = any_orthogonal(basis[0], rng);
  }
  (void)other_dim;
  return small.eigenvalues()(0);
}

Vector schmidt_psi(const Vector& u1, const Vector& u2, const Vector& v1, const Vector& v2) {
  return kron_vec(u1, v1) + kron_vec(u2, v2);
}

SchmidtRun run_schmidt(const Cut& cut, const Matrix& x, const SearchBudget& budget, std::size_t restart) {
  Rng rng = make_rng(budget.seed, restart);
  SchmidtRun run;
  Vector u1, u2, v1, v2;
  if (restart == 0) {
    // Truncate the most negative eigenvector of X to its two leading Schmidt terms.
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(x));
    const Vector e = es.eigenvectors().col(0);
    Matrix c(cut.a, cut.b);
    for (Eigen::Index i = 0; i < cut.a; ++i) c.row(i) = e.segment(i * cut.b, cut.b).transpose();
    Eigen::JacobiSVD<Matrix> svd(c, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    u1 = s(0) * svd.matrixU().col(0);
    v1 = svd.matrixV().col(0).conjugate();
    if (s.size() > 1) {
      u2 = s(1) * svd.matrixU().col(1);
      v2 = svd.matrixV().col(1).conjugate();
    } else {
      u2 = Vector::Zero(cut.a);
      v2 = any_orthogonal(v1, rng);
    }
  } else {
    u1 = complex_gaussian(cut.a, 1, rng).col(0);
    u2 = complex_gaussian(cut.a, 1, rng).col(0);
    v1 = complex_gaussian(cut.b, 1, rng).col(0);
    v2 = complex_gaussian(cut.b, 1, rng).col(0);
  }

  double value = std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < budget.iters; ++it) {
    const double before = value;
    value = std::min(value, schmidt_step(x, u1, u2, v1, v2, cut.a, true, rng));
    value = std::min(value, schmidt_step(x, v1, v2, u1, u2, cut.b, false, rng));
    if (before - value < 1e-13) break;
  }
  const Vector psi = schmidt_psi(u1, u2, v1, v2);
  const double norm = psi.norm();
  run.u1 = u1 / norm;
  run.u2 = u2 / norm;
  run.v1 = v1;
  run.v2 = v2;
  run.value = value;
  return run;
}

}  // namespace

WitnessReport single_copy_distillable(const BipartiteState& state, const SearchBudget& budget) {
  if (budget.restarts == 0) throw ParameterError("single_copy_distillable needs restarts >= 1");
  const Cut cut = global_cut(state.matrix(), state.dims());
  const Matrix x = to_global_cut(partial_transpose(state), state.dims());

  std::vector<SchmidtRun> runs(budget.restarts);
  parallel_for(budget.restarts, [&](std::size_t r) { runs[r] = run_schmidt(cut, x, budget, r); });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].value < runs[best].value - kExactTol) best = r;
  }

  SchmidtVector cert;
  cert.u1 = runs[best].u1;
  cert.u2 = runs[best].u2;
  cert.v1 = runs[best].v1;
  cert.v2 = runs[best].v2;
  cert.psi = schmidt_psi(cert.u1, cert.u2, cert.v1, cert.v2);

  WitnessReport report;
  report.value = schmidt_certificate_value(state, cert);
  report.certificate = std::move(cert);
  report.violation = report.value < -kStateTol;
  report.budget_exhausted = !report.violation;
  report.seed = budget.seed;
  report.restarts = budget.restarts;
  report.best_restart = best;
  return report;
}

double schmidt_certificate_value(const BipartiteState& state, const SchmidtVector& certificate) {
  const Matrix x = to_global_cut(partial_transpose(state), state.dims());
  if (certificate.psi.size() != x.rows()) throw ParameterError("certificate dimension does not match the state");
  return certificate.psi.dot(x * certificate.psi).real() / certificate.psi.squaredNorm();
}

PptResult is_ppt(const BipartiteState& state) {
  const double lowest = min_eigenvalue(partial_transpose(state));
  return {lowest >= -kStateTol, lowest};
}

WitnessReport n_copy_distillable(const BipartiteState& state, std::size_t n, const SearchBudget& budget) {
  return single_copy_distillable(tensor_power(state, n), budget);
}

DualPositivity symmetric_dual_positive(const Matrix& q, const Dims& dims, std::uint64_t seed, std::size_t samples) {
  const std::size_t n = dims.total();
  if (static_cast<std::size_t>(q.rows()) != n || q.rows() != q.cols()) {
    throw ParameterError("Q does not match the pair layout");
  }
  const Matrix sym = hermitian_part(symmetrize(q, dims.pairs, dims.pair_dim()));
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);

  DualPositivity out;
  out.min_eigenvalue = es.eigenvalues()(0);
  out.positive = out.min_eigenvalue >= -kStateTol;

  Rng rng = make_rng(seed);
  out.sampled_min_pairing = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < samples; ++s) {
    const Matrix omega = symmetrize(random_density(n, n, rng), dims.pairs, dims.pair_dim());
    out.sampled_min_pairing = std::min(out.sampled_min_pairing, (q * omega).trace().real());
  }

  if (!out.positive) {
    const Vector v = es.eigenvectors().col(0);
    Matrix omega = symmetrize(Matrix(v * v.adjoint()), dims.pairs, dims.pair_dim());
    out.counterexample = BipartiteState::trusted(dims, hermitian_part(omega));
  }
  return out;
}

double witness_pairing(const Matrix& x, const BipartiteState& state) {
  if (x.rows() != state.matrix().rows() || x.cols() != state.matrix().cols()) {
    throw ParameterError("witness_pairing: dimension mismatch");
  }
  return (x * state.matrix()).trace().real();
}

}  // namespace distilkit
