#include "distilkit/linalg.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <string>

#include "distilkit/errors.hpp"
#include "distilkit/tolerances.hpp"

namespace distilkit {

namespace {
std::atomic<std::size_t> g_max_dimension{kDefaultMaxDimension};
}

std::size_t max_dimension() noexcept { return g_max_dimension.load(); }

void set_max_dimension(std::size_t dim) noexcept {
  g_max_dimension.store(dim == 0 ? kDefaultMaxDimension : dim);
}

std::size_t checked_product(std::span<const std::size_t> dims) {
  const std::size_t cap = max_dimension();
  std::size_t total = 1;
  for (std::size_t d : dims) {
    if (d == 0) throw ParameterError("zero tensor factor dimension");
    if (total > cap / d) {
      throw CapacityError("operator dimension exceeds memory cap of " + std::to_string(cap));
    }
    total *= d;
  }
  return total;
}

std::size_t checked_power(std::size_t base, std::size_t exponent) {
  std::vector<std::size_t> dims(exponent, base);
  return checked_product(dims);
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Matrix hermitian_part(const Matrix& m) { return (m + m.adjoint()) / 2.0; }

RealVector hermitian_eigenvalues(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double min_eigenvalue(const Matrix& m) { return hermitian_eigenvalues(m).minCoeff(); }

double trace_norm(const Matrix& m) {
  if (m.isApprox(m.adjoint(), 1e-13)) {
    return hermitian_eigenvalues(m).cwiseAbs().sum();
  }
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues().sum();
}

double operator_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

std::vector<std::size_t> factor_permutation_map(std::span<const std::size_t> dims,
                                                std::span<const std::size_t> perm) {
  const std::size_t n = dims.size();
  if (perm.size() != n) throw ParameterError("permutation length does not match factor count");
  std::vector<bool> seen(n, false);
  for (std::size_t p : perm) {
    if (p >= n || seen[p]) throw ParameterError("factor permutation is not a bijection");
    seen[p] = true;
  }

  // Output factor at position perm[j] carries the digit of input factor j.
  std::vector<std::size_t> out_dims(n);
  for (std::size_t j = 0; j < n; ++j) out_dims[perm[j]] = dims[j];

  std::vector<std::size_t> in_stride(n), out_stride(n);
  std::size_t s = 1;
  for (std::size_t j = n; j-- > 0;) {
    in_stride[j] = s;
    s *= dims[j];
  }
  const std::size_t total = s;
  s = 1;
  for (std::size_t j = n; j-- > 0;) {
    out_stride[j] = s;
    s *= out_dims[j];
  }

  std::vector<std::size_t> map(total);
  std::vector<std::size_t> digit(n, 0);  // digits of the output index
  for (std::size_t y = 0; y < total; ++y) {
    std::size_t x = 0;
    for (std::size_t j = 0; j < n; ++j) x += digit[perm[j]] * in_stride[j];
    map[y] = x;
    for (std::size_t j = n; j-- > 0;) {
      if (++digit[j] < out_dims[j]) break;
      digit[j] = 0;
    }
  }
  return map;
}

Matrix conjugate_by_map(const Matrix& m, std::span<const std::size_t> map) {
  const auto n = static_cast<Eigen::Index>(map.size());
  Matrix out(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const auto mc = static_cast<Eigen::Index>(map[c]);
    for (Eigen::Index r = 0; r < n; ++r) {
      out(r, c) = m(static_cast<Eigen::Index>(map[r]), mc);
    }
  }
  return out;
}

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x5eedu};
  return Rng(seq);
}

Matrix complex_gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(r, c) = cplx(re, im);
    }
  }
  return g;
}

Matrix random_density(std::size_t dim, std::size_t rank, Rng& rng) {
  if (dim == 0 || rank == 0) throw ParameterError("random_density needs positive dimension and rank");
  const Matrix g = complex_gaussian(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(rank), rng);
  Matrix rho = g * g.adjoint();
  rho = hermitian_part(rho);
  return rho / rho.trace().real();
}

RealVector project_to_simplex(const RealVector& v) {
  const Eigen::Index n = v.size();
  std::vector<double> sorted(v.data(), v.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    cumulative += sorted[i];
    const double t = (cumulative - 1.0) / static_cast<double>(i + 1);
    if (sorted[i] - t > 0.0) theta = t;
  }
  return (v.array() - theta).cwiseMax(0.0);
}

}  // namespace distilkit
