#include "distilkit/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "distilkit/tolerances.hpp"

namespace distilkit {

std::vector<Matrix> hermitian_basis(std::size_t m) {
  const auto n = static_cast<Eigen::Index>(m);
  const double s = 1.0 / std::sqrt(2.0);
  std::vector<Matrix> basis;
  basis.reserve(m * m);
  for (Eigen::Index j = 0; j < n; ++j) {
    Matrix e = Matrix::Zero(n, n);
    e(j, j) = 1.0;
    basis.push_back(std::move(e));
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = j + 1; k < n; ++k) {
      Matrix sym = Matrix::Zero(n, n);
      sym(j, k) = sym(k, j) = s;
      basis.push_back(std::move(sym));
      Matrix anti = Matrix::Zero(n, n);
      anti(j, k) = cplx(0.0, -s);
      anti(k, j) = cplx(0.0, s);
      basis.push_back(std::move(anti));
    }
  }
  return basis;
}

namespace {

RealVector coordinates(const Matrix& x, const std::vector<Matrix>& basis) {
  RealVector c(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t a = 0; a < basis.size(); ++a) c(a) = (basis[a] * x).trace().real();
  return c;
}

Matrix from_coordinates(const RealVector& c, const std::vector<Matrix>& basis) {
  Matrix x = Matrix::Zero(basis.front().rows(), basis.front().cols());
  for (std::size_t a = 0; a < basis.size(); ++a) x += c(a) * basis[a];
  return x;
}

}  // namespace

std::vector<Matrix> dual_frame(const std::vector<Matrix>& elements) {
  if (elements.empty()) throw FrameError("empty element list");
  const auto m = static_cast<std::size_t>(elements.front().rows());
  for (const auto& e : elements) {
    if (static_cast<std::size_t>(e.rows()) != m || e.rows() != e.cols()) {
      throw FrameError("elements have inconsistent shapes");
    }
  }
  const auto basis = hermitian_basis(m);
  const auto dim = static_cast<Eigen::Index>(basis.size());
  std::vector<RealVector> coords;
  coords.reserve(elements.size());
  Eigen::MatrixXd frame_op = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& e : elements) {
    coords.push_back(coordinates(hermitian_part(e), basis));
    frame_op += coords.back() * coords.back().transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(frame_op);
  const double top = es.eigenvalues().maxCoeff();
  if (!(top > 0.0) || es.eigenvalues().minCoeff() <= 1e-12 * top) {
    throw FrameError("elements do not span the Hermitian operators");
  }
  const Eigen::LDLT<Eigen::MatrixXd> solver(frame_op);
  std::vector<Matrix> duals;
  duals.reserve(elements.size());
  for (const auto& c : coords) duals.push_back(from_coordinates(solver.solve(c), basis));
  return duals;
}

Frame minimal_ic_povm(std::size_t m) {
  if (m < 2) throw ParameterError("minimal_ic_povm needs m >= 2");
  checked_power(m, 4);
  const auto n = static_cast<Eigen::Index>(m);
  const double s = 1.0 / std::sqrt(2.0);
  std::vector<Vector> kets;
  for (Eigen::Index j = 0; j < n; ++j) {
    Vector v = Vector::Zero(n);
    v(j) = 1.0;
    kets.push_back(std::move(v));
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = j + 1; k < n; ++k) {
      Vector plus = Vector::Zero(n);
      plus(j) = s;
      plus(k) = s;
      kets.push_back(std::move(plus));
      Vector phase = Vector::Zero(n);
      phase(j) = s;
      phase(k) = cplx(0.0, s);
      kets.push_back(std::move(phase));
    }
  }
  Matrix sum = Matrix::Zero(n, n);
  for (const auto& v : kets) sum += v * v.adjoint();
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(sum));
  const Matrix inv_sqrt =
      es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() * es.eigenvectors().adjoint();

  Frame frame;
  frame.dim = m;
  for (const auto& v : kets) {
    const Vector w = inv_sqrt * v;
    frame.elements.push_back(w * w.adjoint());
  }
  frame.duals = dual_frame(frame.elements);
  return frame;
}

Frame product_frame(const Frame& a, const Frame& b) {
  Frame out;
  out.dim = checked_product(std::vector<std::size_t>{a.dim, b.dim});
  out.elements.reserve(a.size() * b.size());
  out.duals.reserve(a.size() * b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      out.elements.push_back(kron(a.elements[i], b.elements[j]));
      out.duals.push_back(kron(a.duals[i], b.duals[j]));
    }
  }
  return out;
}

FrameCheck check_frame(const Frame& frame, std::size_t samples, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(frame.dim);
  FrameCheck check;
  Matrix sum = Matrix::Zero(n, n);
  check.min_element_eigenvalue = std::numeric_limits<double>::infinity();
  for (const auto& e : frame.elements) {
    sum += e;
    check.min_element_eigenvalue = std::min(check.min_element_eigenvalue, min_eigenvalue(e));
  }
  check.completeness = operator_norm(sum - Matrix::Identity(n, n));
  Rng rng = make_rng(seed);
  for (std::size_t s = 0; s < samples; ++s) {
    const Matrix x = hermitian_part(complex_gaussian(n, n, rng));
    Matrix rec = Matrix::Zero(n, n);
    for (std::size_t i = 0; i < frame.size(); ++i) rec += (frame.elements[i] * x).trace() * frame.duals[i];
    check.roundtrip = std::max(check.roundtrip, operator_norm(rec - x));
  }
  return check;
}

RealVector born_probabilities(const Matrix& rho, const Frame& frame) {
  if (static_cast<std::size_t>(rho.rows()) != frame.dim) throw ParameterError("frame and state dimensions differ");
  RealVector p(static_cast<Eigen::Index>(frame.size()));
  for (std::size_t k = 0; k < frame.size(); ++k) {
    const double v = (frame.elements[k] * rho).trace().real();
    if (v < -1e-12) throw NumericalError("negative Born probability");
    p(k) = std::max(v, 0.0);
  }
  const double mass = p.sum();
  if (std::abs(mass - 1.0) > 1e-8) throw NumericalError("Born probabilities do not sum to 1");
  return p / mass;
}

OutcomeCounts simulate_measurements(const BipartiteState& state, const Frame& frame, std::uint64_t shots,
                                    std::uint64_t seed) {
  const RealVector p = born_probabilities(state.matrix(), frame);
  OutcomeCounts out;
  out.counts.assign(frame.size(), 0);
  out.shots = shots;
  Rng rng = make_rng(seed);
  std::uint64_t left = shots;
  double mass_left = 1.0;
  for (std::size_t k = 0; k + 1 < frame.size() && left > 0; ++k) {
    const double q = mass_left > 0.0 ? std::clamp(p(k) / mass_left, 0.0, 1.0) : 0.0;
    std::binomial_distribution<std::uint64_t> draw(left, q);
    out.counts[k] = draw(rng);
    left -= out.counts[k];
    mass_left -= p(k);
  }
  out.counts.back() += left;
  return out;
}

Matrix reconstruct(const RealVector& probabilities, const Frame& frame) {
  if (static_cast<std::size_t>(probabilities.size()) != frame.size()) {
    throw ParameterError("outcome count does not match the frame");
  }
  const auto n = static_cast<Eigen::Index>(frame.dim);
  Matrix x = Matrix::Zero(n, n);
  for (std::size_t k = 0; k < frame.size(); ++k) x += probabilities(k) * frame.duals[k];
  return hermitian_part(x);
}

Matrix reconstruct(const OutcomeCounts& counts, const Frame& frame) {
  if (counts.counts.size() != frame.size()) throw ParameterError("outcome count does not match the frame");
  const std::uint64_t total = std::accumulate(counts.counts.begin(), counts.counts.end(), std::uint64_t{0});
  if (total != counts.shots) throw ParameterError("counts do not sum to shots");
  if (total == 0) throw ParameterError("cannot reconstruct from zero shots");
  RealVector p(static_cast<Eigen::Index>(frame.size()));
  for (std::size_t k = 0; k < frame.size(); ++k) {
    p(k) = static_cast<double>(counts.counts[k]) / static_cast<double>(total);
  }
  return reconstruct(p, frame);
}

BipartiteState closest_state(const Matrix& x, const Dims& dims) {
  if (static_cast<std::size_t>(x.rows()) != dims.total() || x.rows() != x.cols()) {
    throw ParameterError("closest_state: operator does not match dims");
  }
  if (operator_norm(x - x.adjoint()) / 2.0 > kStateTol) throw ParameterError("closest_state: input is not Hermitian");
  if (std::abs(x.trace().real() - 1.0) > kStateTol) throw ParameterError("closest_state: trace differs from 1");

  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(x));
  const RealVector lam = es.eigenvalues();
  const RealVector pos = lam.cwiseMax(0.0);
  RealVector s = pos;
  if (pos.sum() > 1.0) {
    // Cap the k largest at tau = (1 - sum of the rest) / k, for the first k
    // where tau lands between the k-th and (k+1)-th largest values.
    std::vector<double> sorted(pos.data(), pos.data() + pos.size());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double rest = pos.sum();
    double tau = 0.0;
    for (std::size_t k = 1; k <= sorted.size(); ++k) {
      rest -= sorted[k - 1];
      tau = (1.0 - rest) / static_cast<double>(k);
      const double next = k < sorted.size() ? sorted[k] : 0.0;
      if (tau >= next) break;
    }
    s = pos.cwiseMin(tau);
  }
  s /= s.sum();
  const Matrix sigma = es.eigenvectors() * s.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
  return BipartiteState::trusted(dims, hermitian_part(sigma));
}

ChernoffBound chernoff_tail(double delta, std::uint64_t n, std::size_t cardinality) {
  if (!(delta > 0.0)) throw ParameterError("chernoff_tail needs delta > 0");
  if (n < 1 || cardinality < 1) throw ParameterError("chernoff_tail needs n >= 1 and |X| >= 1");
  const double nd = static_cast<double>(n);
  ChernoffBound b;
  b.log2 = -nd * (delta * delta / (2.0 * std::log(2.0)) -
                  static_cast<double>(cardinality) * std::log2(nd + 1.0) / nd);
  b.raw = std::exp2(b.log2);
  b.value = std::clamp(b.raw, 0.0, 1.0);
  return b;
}

BipartiteState source_marginal(const Source& source) {
  if (const auto* e = std::get_if<Ensemble>(&source)) return e->average();
  const auto& state = std::get<BipartiteState>(source);
  if (state.dims().pairs == 1) return state;
  const std::size_t first = 0;
  return partial_trace(state, std::span<const std::size_t>(&first, 1));
}

namespace {

template <class F>
auto staged(const char* stage, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (Error& e) {
    if (e.stage().empty()) e.set_stage(stage);
    throw;
  }
}

}  // namespace

PipelineReport estimation_pipeline(const Source& source, const PipelineOptions& options) {
  if (options.n < 1) throw ParameterError("pipeline needs n >= 1");
  const BipartiteState rho = source_marginal(source);
  const Dims& dims = rho.dims();

  const Frame frame = staged("sample", [&] {
    checked_power(dims.pair_dim(), options.n);
    return product_frame(minimal_ic_povm(dims.dim_a), minimal_ic_povm(dims.dim_b));
  });
  const OutcomeCounts counts = staged("sample", [&] {
    if (options.shots == 0) throw ParameterError("pipeline needs shots >= 1");
    return simulate_measurements(rho, frame, options.shots, options.seed);
  });

  PipelineReport report{rho, Matrix(), false, {}, 0.0, 0.0, {}, 0.0, true, {}, std::nullopt};
  report.x_m = reconstruct(counts, frame);
  {
    const RealVector born = born_probabilities(rho.matrix(), frame);
    double l1 = 0.0;
    for (std::size_t k = 0; k < frame.size(); ++k) {
      l1 += std::abs(static_cast<double>(counts.counts[k]) / static_cast<double>(counts.shots) - born(k));
    }
    report.deviation = l1;
    report.chernoff = l1 > 0.0 ? chernoff_tail(l1, options.shots, frame.size())
                               : ChernoffBound{1.0, 1.0, 0.0};
  }
  report.sigma_m = staged("project", [&] { return closest_state(report.x_m, dims); });
  report.trace_distance = trace_distance(report.sigma_m, rho);

  SearchBudget budget = options.budget;
  budget.seed = options.seed;
  report.ncopy = staged("ncopy", [&] { return n_copy_distillable(report.sigma_m, options.n, budget); });
  report.violation = report.ncopy.violation;

  if (report.violation) {
    staged("filter", [&] {
      SeesawOptions seesaw = options.seesaw;
      seesaw.seed = options.seed;
      const BipartiteState sigma_n = tensor_power(report.sigma_m, options.n);
      WitnessReport filter = f2(sigma_n, seesaw);
      const auto& pair = std::get<FilterPair>(filter.certificate);
      const BipartiteState rho_n = tensor_power(rho, options.n);
      report.f_m = 0.5 - filtered_fidelity(rho_n, pair);
      report.filter = std::move(filter);
      return 0;
    });
    report.verdict = "distillable";
  } else {
    report.f_m = 0.0;
    report.verdict = "no violation";
  }
  return report;
}

}  // namespace distilkit
