#include "distilkit/states.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "distilkit/tolerances.hpp"

namespace distilkit {

std::size_t Dims::local_a() const { return checked_power(dim_a, pairs); }
std::size_t Dims::local_b() const { return checked_power(dim_b, pairs); }
std::size_t Dims::total() const { return checked_power(pair_dim(), pairs); }

std::vector<std::size_t> Dims::factor_dims() const {
  std::vector<std::size_t> out;
  out.reserve(2 * pairs);
  for (std::size_t k = 0; k < pairs; ++k) {
    out.push_back(dim_a);
    out.push_back(dim_b);
  }
  return out;
}

bool ValidationReport::flags(const std::string& invariant) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.invariant == invariant; });
}

std::string ValidationReport::summary() const {
  if (ok()) return "valid";
  std::ostringstream os;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) os << "; ";
    os << violations[i].invariant << " violated by " << violations[i].magnitude;
  }
  return os.str();
}

InvalidStateError::InvalidStateError(ValidationReport report)
    : ParameterError("invalid state: " + report.summary()), report_(std::move(report)) {}

ValidationReport check_state(const Dims& dims, const Matrix& data) {
  ValidationReport report;
  if (dims.dim_a == 0 || dims.dim_b == 0 || dims.pairs == 0) {
    report.violations.push_back({"shape", 0.0});
    return report;
  }
  std::size_t expected = 0;
  try {
    expected = dims.total();
  } catch (const Error&) {
    report.violations.push_back({"shape", static_cast<double>(data.rows())});
    return report;
  }
  if (data.rows() != data.cols() || static_cast<std::size_t>(data.rows()) != expected) {
    report.violations.push_back(
        {"shape", static_cast<double>(std::max(data.rows(), data.cols())) - static_cast<double>(expected)});
    return report;
  }
  if (!data.allFinite()) {
    report.violations.push_back({"finite", 0.0});
    return report;
  }

  const double anti = operator_norm((data - data.adjoint()) / 2.0);
  if (anti > kStateTol) report.violations.push_back({"hermiticity", anti});

  const double trace_dev = std::abs(data.trace() - cplx(1.0, 0.0));
  if (trace_dev > kStateTol) report.violations.push_back({"trace", trace_dev});

  const double lowest = min_eigenvalue(data);
  if (lowest < -kStateTol) report.violations.push_back({"positivity", -lowest});
  return report;
}

std::variant<BipartiteState, ValidationReport> validate_state(const Dims& dims, Matrix data) {
  ValidationReport report = check_state(dims, data);
  if (!report.ok()) return report;
  return BipartiteState::trusted(dims, std::move(data));
}

BipartiteState::BipartiteState(Dims dims, Matrix data) : dims_(dims), data_(std::move(data)) {
  ValidationReport report = check_state(dims_, data_);
  if (!report.ok()) throw InvalidStateError(std::move(report));
}

BipartiteState::BipartiteState(TrustedTag, Dims dims, Matrix data)
    : dims_(dims), data_(std::move(data)) {}

BipartiteState BipartiteState::trusted(Dims dims, Matrix data) {
  if (static_cast<std::size_t>(data.rows()) != dims.total() || data.rows() != data.cols()) {
    throw ParameterError("matrix shape does not match state dimensions");
  }
  return BipartiteState(TrustedTag{}, dims, std::move(data));
}

std::string to_string(Family f) {
  switch (f) {
    case Family::werner: return "werner";
    case Family::isotropic: return "isotropic";
    case Family::max_entangled: return "max_entangled";
    case Family::product_pure: return "product_pure";
    case Family::random_mixed: return "random_mixed";
    case Family::random_ppt: return "random_ppt";
    case Family::explicit_matrix: return "explicit";
  }
  return "unknown";
}

Family family_from_string(const std::string& name) {
  for (Family f : {Family::werner, Family::isotropic, Family::max_entangled, Family::product_pure,
                   Family::random_mixed, Family::random_ppt, Family::explicit_matrix}) {
    if (to_string(f) == name) return f;
  }
  throw ParameterError("unknown state family '" + name + "'");
}

Matrix max_entangled_projector(std::size_t d) {
  const auto n = static_cast<Eigen::Index>(d);
  Matrix phi = Matrix::Zero(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      phi(i * n + i, j * n + j) = 1.0 / static_cast<double>(d);
    }
  }
  return phi;
}

namespace {

Matrix swap_operator(std::size_t d) {
  const auto n = static_cast<Eigen::Index>(d);
  Matrix f = Matrix::Zero(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) f(i * n + j, j * n + i) = 1.0;
  }
  return f;
}

void require_unit_interval(double p, const char* family) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ParameterError(std::string(family) + " parameter p must lie in [0, 1]");
  }
}

std::uint64_t require_seed(std::optional<std::uint64_t> seed, Family f) {
  if (!seed) throw ParameterError("family '" + to_string(f) + "' is random and needs a seed");
  return *seed;
}

}  // namespace

BipartiteState construct_state(const StateFamilySpec& spec, std::optional<std::uint64_t> seed) {
  const std::size_t d = spec.d;
  if (spec.family != Family::explicit_matrix && d < 2) {
    throw ParameterError("local dimension d must be at least 2");
  }
  const Dims dims{d, d, 1};

  switch (spec.family) {
    case Family::werner: {
      require_unit_interval(spec.p, "werner");
      const double dd = static_cast<double>(d);
      const Matrix id = Matrix::Identity(static_cast<Eigen::Index>(d * d), static_cast<Eigen::Index>(d * d));
      const Matrix f = swap_operator(d);
      const Matrix anti = (id - f) / 2.0;
      const Matrix sym = (id + f) / 2.0;
      Matrix rho = spec.p * anti / (dd * (dd - 1.0) / 2.0) + (1.0 - spec.p) * sym / (dd * (dd + 1.0) / 2.0);
      return BipartiteState(dims, std::move(rho));
    }
    case Family::isotropic: {
      require_unit_interval(spec.p, "isotropic");
      const double n = static_cast<double>(d * d);
      const Matrix phi = max_entangled_projector(d);
      const Matrix id = Matrix::Identity(phi.rows(), phi.cols());
      Matrix rho = spec.p * phi + (1.0 - spec.p) * (id - phi) / (n - 1.0);
      return BipartiteState(dims, std::move(rho));
    }
    case Family::max_entangled:
      return BipartiteState(dims, max_entangled_projector(d));
    case Family::product_pure: {
      if (spec.index_a >= d || spec.index_b >= d) throw ParameterError("product_pure index out of range");
      Matrix rho = Matrix::Zero(static_cast<Eigen::Index>(d * d), static_cast<Eigen::Index>(d * d));
      const auto idx = static_cast<Eigen::Index>(spec.index_a * d + spec.index_b);
      rho(idx, idx) = 1.0;
      return BipartiteState(dims, std::move(rho));
    }
    case Family::random_mixed: {
      Rng rng = make_rng(require_seed(seed, spec.family));
      const std::size_t rank = spec.rank == 0 ? d * d : spec.rank;
      return BipartiteState(dims, random_density(d * d, rank, rng));
    }
    case Family::random_ppt: {
      Rng rng = make_rng(require_seed(seed, spec.family));
      const std::size_t rank = spec.rank == 0 ? 2 * d * d : spec.rank;
      for (std::size_t attempt = 0; attempt < spec.max_attempts; ++attempt) {
        Matrix rho = random_density(d * d, rank, rng);
        if (min_eigenvalue(partial_transpose(rho, dims)) >= -kStateTol) {
          return BipartiteState(dims, std::move(rho));
        }
      }
      throw SamplingError("random_ppt: no PPT sample within " + std::to_string(spec.max_attempts) + " attempts");
    }
    case Family::explicit_matrix: {
      if (!spec.matrix) throw ParameterError("explicit family needs a matrix");
      return BipartiteState(spec.explicit_dims.value_or(dims), *spec.matrix);
    }
  }
  throw ParameterError("unhandled state family");
}

BipartiteState tensor(const BipartiteState& a, const BipartiteState& b) {
  if (a.dims().dim_a != b.dims().dim_a || a.dims().dim_b != b.dims().dim_b) {
    throw ParameterError("tensor: local dimensions differ between factors");
  }
  Dims out = a.dims();
  out.pairs = a.dims().pairs + b.dims().pairs;
  out.total();  // capacity check before allocating
  return BipartiteState::trusted(out, kron(a.matrix(), b.matrix()));
}

BipartiteState tensor_power(const BipartiteState& state, std::size_t n) {
  if (n == 0) throw ParameterError("tensor_power needs n >= 1");
  Dims out = state.dims();
  out.pairs *= n;
  out.total();
  Matrix acc = state.matrix();
  for (std::size_t i = 1; i < n; ++i) acc = kron(acc, state.matrix());
  return BipartiteState::trusted(out, std::move(acc));
}

Matrix partial_trace(const Matrix& op, const Dims& dims, std::span<const std::size_t> keep) {
  if (keep.empty()) throw ParameterError("partial_trace: keep set is empty");
  std::vector<bool> kept(dims.pairs, false);
  for (std::size_t k : keep) {
    if (k >= dims.pairs) throw ParameterError("partial_trace: pair index out of range");
    if (kept[k]) throw ParameterError("partial_trace: duplicate pair index");
    kept[k] = true;
  }

  const std::size_t pd = dims.pair_dim();
  std::vector<std::size_t> stride(dims.pairs);
  std::size_t s = 1;
  for (std::size_t k = dims.pairs; k-- > 0;) {
    stride[k] = s;
    s *= pd;
  }

  // Offsets of all multi-indices over the kept (resp. traced) pairs.
  auto offsets = [&](bool want_kept) {
    std::vector<std::size_t> out{0};
    for (std::size_t k = 0; k < dims.pairs; ++k) {
      if (kept[k] != want_kept) continue;
      std::vector<std::size_t> next;
      next.reserve(out.size() * pd);
      for (std::size_t base : out) {
        for (std::size_t digit = 0; digit < pd; ++digit) next.push_back(base + digit * stride[k]);
      }
      out = std::move(next);
    }
    return out;
  };
  const std::vector<std::size_t> keep_off = offsets(true);
  const std::vector<std::size_t> trace_off = offsets(false);

  const auto n = static_cast<Eigen::Index>(keep_off.size());
  Matrix out = Matrix::Zero(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index r = 0; r < n; ++r) {
      cplx acc = 0.0;
      for (std::size_t t : trace_off) {
        acc += op(static_cast<Eigen::Index>(keep_off[r] + t), static_cast<Eigen::Index>(keep_off[c] + t));
      }
      out(r, c) = acc;
    }
  }
  return out;
}

BipartiteState partial_trace(const BipartiteState& state, std::span<const std::size_t> keep) {
  Matrix out = partial_trace(state.matrix(), state.dims(), keep);
  Dims dims = state.dims();
  dims.pairs = keep.size();
  return BipartiteState::trusted(dims, std::move(out));
}

Matrix partial_transpose(const Matrix& op, const Dims& dims) {
  const std::size_t n = dims.total();
  if (static_cast<std::size_t>(op.rows()) != n || op.rows() != op.cols()) {
    throw ParameterError("partial_transpose: operator shape does not match dims");
  }
  // Split each index into the contribution of its A digits and of its B digits.
  std::vector<std::size_t> a_off(n), b_off(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t rest = i, place = 1, a = 0, b = 0;
    for (std::size_t k = 0; k < dims.pairs; ++k) {
      const std::size_t db = rest % dims.dim_b;
      rest /= dims.dim_b;
      b += db * place;
      place *= dims.dim_b;
      const std::size_t da = rest % dims.dim_a;
      rest /= dims.dim_a;
      a += da * place;
      place *= dims.dim_a;
    }
    a_off[i] = a;
    b_off[i] = b;
  }
  Matrix out(op.rows(), op.cols());
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t r = 0; r < n; ++r) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          op(static_cast<Eigen::Index>(a_off[r] + b_off[c]), static_cast<Eigen::Index>(a_off[c] + b_off[r]));
    }
  }
  return out;
}

Matrix partial_transpose(const BipartiteState& state) { return partial_transpose(state.matrix(), state.dims()); }

Matrix to_global_cut(const Matrix& op, const Dims& dims) {
  if (dims.pairs == 1) return op;
  const std::vector<std::size_t> factors = dims.factor_dims();
  std::vector<std::size_t> perm(factors.size());
  for (std::size_t k = 0; k < dims.pairs; ++k) {
    perm[2 * k] = k;
    perm[2 * k + 1] = dims.pairs + k;
  }
  return conjugate_by_map(op, factor_permutation_map(factors, perm));
}

double trace_distance(const BipartiteState& a, const BipartiteState& b) {
  if (!(a.dims() == b.dims())) throw ParameterError("trace_distance: dimension mismatch");
  return 0.5 * trace_norm(a.matrix() - b.matrix());
}

}  // namespace distilkit
