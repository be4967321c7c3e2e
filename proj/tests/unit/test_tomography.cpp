#include <gtest/gtest.h>

#include <cmath>

#include "distilkit/distilkit.hpp"
#include "oracles.hpp"

using namespace distilkit;

namespace {

BipartiteState make(Family f, std::size_t d = 2, double p = 0.0, std::optional<std::uint64_t> seed = {}) {
  StateFamilySpec spec;
  spec.family = f;
  spec.d = d;
  spec.p = p;
  return construct_state(spec, seed);
}

// Linear inversion through an explicit Gram matrix in the entrywise basis.
Matrix least_squares_reconstruct(const std::vector<Matrix>& elements, const RealVector& probs) {
  const Eigen::Index m = elements.front().rows();
  const Eigen::Index n = static_cast<Eigen::Index>(elements.size());
  Eigen::MatrixXcd a(n, m * m);
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j) a(k, i * m + j) = elements[static_cast<std::size_t>(k)](j, i);
  const Eigen::VectorXcd x = a.completeOrthogonalDecomposition().solve(probs.cast<cplx>());
  Matrix out(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) out(i, j) = x(i * m + j);
  return out;
}

}  // namespace

TEST(HermitianBasis, Orthonormal) {
  for (std::size_t m : {2u, 3u, 4u}) {
    const auto basis = hermitian_basis(m);
    ASSERT_EQ(basis.size(), m * m);
    for (std::size_t i = 0; i < basis.size(); ++i) {
      EXPECT_LE((basis[i] - basis[i].adjoint()).norm(), 1e-15);
      for (std::size_t j = 0; j < basis.size(); ++j)
        EXPECT_NEAR((basis[i] * basis[j]).trace().real(), i == j ? 1.0 : 0.0, 1e-14);
    }
  }
}

TEST(MinimalFrame, CompletenessAndPositivity) {
  for (std::size_t m : {2u, 3u, 4u, 5u}) {
    const Frame f = minimal_ic_povm(m);
    ASSERT_EQ(f.size(), m * m);
    Matrix sum = Matrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (const auto& e : f.elements) {
      sum += e;
      EXPECT_GE(oracle::eigenvalues(e).minCoeff(), -1e-14);
    }
    EXPECT_LE((sum - Matrix::Identity(sum.rows(), sum.cols())).norm(), 1e-10);
  }
  EXPECT_THROW(minimal_ic_povm(1), ParameterError);
}

TEST(MinimalFrame, IdentityRoundtripAndLeastSquaresOracle) {
  const Frame f = minimal_ic_povm(2);
  RealVector probs(4);
  for (int k = 0; k < 4; ++k) probs(k) = f.elements[static_cast<std::size_t>(k)].trace().real();
  EXPECT_LE((reconstruct(probs, f) - Matrix::Identity(2, 2)).norm(), 1e-12);

  std::mt19937_64 gen(1);
  for (int t = 0; t < 20; ++t) {
    const Matrix x = oracle::random_hermitian(2, gen);
    for (int k = 0; k < 4; ++k) probs(k) = (f.elements[static_cast<std::size_t>(k)] * x).trace().real();
    EXPECT_LE((reconstruct(probs, f) - least_squares_reconstruct(f.elements, probs)).norm(), 1e-9);
    EXPECT_LE((reconstruct(probs, f) - x).norm(), 1e-9);
  }
}

TEST(DualFrame, OrthonormalBasisAndRankDeficiency) {
  // Half an orthonormal basis: the duals are the basis doubled.
  const auto basis = hermitian_basis(3);
  std::vector<Matrix> scaled;
  for (const auto& b : basis) scaled.push_back(0.5 * b);
  const auto duals = dual_frame(scaled);
  for (std::size_t i = 0; i < basis.size(); ++i) EXPECT_LE((duals[i] - 2.0 * basis[i]).norm(), 1e-12);

  Frame f = minimal_ic_povm(2);
  std::vector<Matrix> dup = f.elements;
  dup[3] = dup[2];
  EXPECT_THROW(dual_frame(dup), FrameError);
}

TEST(ProductFrame, CompletenessAndReconstruction) {
  const Frame f = product_frame(minimal_ic_povm(2), minimal_ic_povm(2));
  ASSERT_EQ(f.size(), 16u);
  Matrix sum = Matrix::Zero(4, 4);
  for (const auto& e : f.elements) sum += e;
  EXPECT_LE((sum - Matrix::Identity(4, 4)).norm(), 1e-10);
  EXPECT_LE((f.elements[1 * 4 + 2] - oracle::kron(minimal_ic_povm(2).elements[1], minimal_ic_povm(2).elements[2])).norm(),
            1e-15);

  std::mt19937_64 gen(2);
  const Matrix prod = oracle::kron(oracle::random_density(2, gen), oracle::random_density(2, gen));
  for (const Matrix& rho : {prod, Matrix(make(Family::max_entangled).matrix())}) {
    const RealVector p = born_probabilities(rho, f);
    EXPECT_LE((reconstruct(p, f) - rho).norm(), 1e-9);
  }
}

TEST(CheckFrame, RoundtripSmall) {
  for (std::size_t m : {2u, 3u, 4u}) {
    const FrameCheck c = check_frame(minimal_ic_povm(m), 100, m);
    EXPECT_LE(c.roundtrip, 1e-9);
    EXPECT_LE(c.completeness, 1e-10);
    EXPECT_GE(c.min_element_eigenvalue, -1e-14);
  }
}

TEST(Simulate, ZeroShotsDeterminismAndConvergence) {
  const BipartiteState w = make(Family::werner, 2, 0.75);
  const Frame f = product_frame(minimal_ic_povm(2), minimal_ic_povm(2));
  const OutcomeCounts none = simulate_measurements(w, f, 0, 1);
  EXPECT_EQ(none.shots, 0u);
  for (auto c : none.counts) EXPECT_EQ(c, 0u);

  const OutcomeCounts a = simulate_measurements(w, f, 1000, 5);
  const OutcomeCounts b = simulate_measurements(w, f, 1000, 5);
  EXPECT_EQ(a.counts, b.counts);
  std::uint64_t total = 0;
  for (auto c : a.counts) total += c;
  EXPECT_EQ(total, 1000u);

  // |00> is an eigenvector of the first element of each local frame.
  const BipartiteState z = make(Family::product_pure);
  const RealVector born = born_probabilities(z.matrix(), f);
  const OutcomeCounts big = simulate_measurements(z, f, 100000, 3);
  for (std::size_t k = 0; k < big.counts.size(); ++k)
    EXPECT_NEAR(static_cast<double>(big.counts[k]) / 1e5, born(static_cast<Eigen::Index>(k)), 0.02);
}

TEST(Reconstruct, NoisyEstimateMayBeNonPositive) {
  const BipartiteState phi = make(Family::max_entangled);
  const Frame f = product_frame(minimal_ic_povm(2), minimal_ic_povm(2));
  bool negative = false;
  for (std::uint64_t seed = 0; seed < 20 && !negative; ++seed) {
    const Matrix x = reconstruct(simulate_measurements(phi, f, 100, seed), f);
    EXPECT_NEAR(x.trace().real(), 1.0, 1e-9);
    negative = oracle::eigenvalues(x).minCoeff() < 0.0;
  }
  EXPECT_TRUE(negative);
  EXPECT_THROW(reconstruct(OutcomeCounts{std::vector<std::uint64_t>(16, 0), 0}, f), ParameterError);
  EXPECT_THROW(reconstruct(OutcomeCounts{std::vector<std::uint64_t>(3, 1), 3}, f), ParameterError);
}

TEST(ClosestState, Examples) {
  const Dims one{2, 1, 1};
  const BipartiteState w = make(Family::werner, 2, 0.3);
  EXPECT_LE((closest_state(w.matrix(), w.dims()).matrix() - w.matrix()).norm(), 1e-12);

  Matrix x = Matrix::Zero(2, 2);
  x(0, 0) = 1.1;
  x(1, 1) = -0.1;
  const BipartiteState s = closest_state(x, one);
  EXPECT_NEAR(s.matrix()(0, 0).real(), 1.0, 1e-15);
  EXPECT_NEAR(s.matrix()(1, 1).real(), 0.0, 1e-15);
  EXPECT_NEAR(0.5 * oracle::trace_norm(s.matrix() - x), 0.1, 1e-12);

  Matrix bad = Matrix::Identity(2, 2);
  EXPECT_THROW(closest_state(bad, one), ParameterError);
  bad(0, 1) = 0.3;
  EXPECT_THROW(closest_state(bad / 2.0, one), ParameterError);
}

TEST(ClosestState, DominatesRandomStates) {
  std::mt19937_64 gen(9);
  const Dims dims{2, 2, 1};
  for (int t = 0; t < 20; ++t) {
    Matrix x = oracle::random_hermitian(4, gen);
    x += Matrix::Identity(4, 4) * ((1.0 - x.trace().real()) / 4.0);
    const double best = oracle::trace_norm(closest_state(x, dims).matrix() - x);
    for (int s = 0; s < 100; ++s) {
      EXPECT_LE(best, oracle::trace_norm(oracle::random_density(4, gen) - x) + 1e-6);
    }
  }
}

TEST(Chernoff, FormulaAndClip) {
  const ChernoffBound big = chernoff_tail(0.1, 1000000, 16);
  const double rate = 0.01 / (2.0 * std::log(2.0)) - 16.0 * std::log2(1e6 + 1.0) / 1e6;
  EXPECT_NEAR(big.log2, -1e6 * rate, 1e-6);
  EXPECT_EQ(big.value, 0.0);

  const ChernoffBound small = chernoff_tail(0.1, 100, 16);
  EXPECT_GT(small.raw, 1.0);
  EXPECT_EQ(small.value, 1.0);
  EXPECT_THROW(chernoff_tail(0.1, 0, 16), ParameterError);
  EXPECT_THROW(chernoff_tail(-0.1, 10, 16), ParameterError);
}

TEST(Pipeline, PptSourceDiscards) {
  PipelineOptions opt;
  opt.shots = 10000;
  opt.seed = 2;
  const PipelineReport r = estimation_pipeline(make(Family::random_ppt, 2, 0.0, 4), opt);
  EXPECT_EQ(r.verdict, "no violation");
  EXPECT_FALSE(r.violation);
  EXPECT_EQ(r.f_m, 0.0);
  EXPECT_TRUE(r.surrogate);
  EXPECT_FALSE(r.filter.has_value());
}

TEST(Pipeline, MaxEntangledIsDistillable) {
  PipelineOptions opt;
  opt.shots = 10000;
  opt.seed = 1;
  const PipelineReport r = estimation_pipeline(make(Family::max_entangled), opt);
  EXPECT_EQ(r.verdict, "distillable");
  EXPECT_LE(r.f_m, -0.4);
  EXPECT_TRUE(r.filter.has_value());
  EXPECT_NEAR(r.x_m.trace().real(), 1.0, 1e-9);
  EXPECT_NEAR(r.trace_distance, trace_distance(r.sigma_m, make(Family::max_entangled)), 1e-12);
}

TEST(Pipeline, EnsembleSourceUsesAverage) {
  // Average is isotropic with overlap 0.4, well inside the PPT region.
  const Ensemble e({0.2, 0.8}, {make(Family::max_entangled), make(Family::werner, 2, 0.25)});
  EXPECT_LE((source_marginal(e).matrix() - e.average().matrix()).norm(), 1e-15);
  PipelineOptions opt;
  opt.shots = 20000;
  const PipelineReport r = estimation_pipeline(e, opt);
  EXPECT_FALSE(r.violation);
}

TEST(Pipeline, StageLabelOnError) {
  PipelineOptions opt;
  opt.shots = 0;
  try {
    estimation_pipeline(make(Family::max_entangled), opt);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.stage(), "sample");
  }
}
