#include <gtest/gtest.h>

#include <array>
#include <vector>

#include "distilkit/distilkit.hpp"
#include "oracles.hpp"

using namespace distilkit;

namespace {

BipartiteState family(Family f, std::size_t d, double p = 0.0, std::optional<std::uint64_t> seed = {}) {
  StateFamilySpec spec;
  spec.family = f;
  spec.d = d;
  spec.p = p;
  return construct_state(spec, seed);
}

BipartiteState product(std::size_t d, std::size_t a, std::size_t b) {
  StateFamilySpec spec;
  spec.family = Family::product_pure;
  spec.d = d;
  spec.index_a = a;
  spec.index_b = b;
  return construct_state(spec);
}

}  // namespace

TEST(Construct, MaxEntangledHasUnitOverlap) {
  const BipartiteState phi = family(Family::max_entangled, 2);
  const oracle::Vector v = oracle::phi_vector(2);
  EXPECT_NEAR((v.adjoint() * phi.matrix() * v)(0, 0).real(), 1.0, 1e-12);
}

TEST(Construct, WernerEndpointIsSinglet) {
  const BipartiteState w = family(Family::werner, 2, 1.0);
  oracle::Vector singlet = oracle::Vector::Zero(4);
  singlet(1) = 1.0 / std::sqrt(2.0);
  singlet(2) = -1.0 / std::sqrt(2.0);
  EXPECT_LE((w.matrix() - oracle::projector(singlet)).norm(), 1e-12);
}

TEST(Construct, WernerMatchesClosedForm) {
  for (int d : {2, 3, 4}) {
    for (double p : {0.0, 0.3, 0.5, 0.75, 1.0}) {
      const BipartiteState w = family(Family::werner, d, p);
      EXPECT_LE((w.matrix() - oracle::werner(d, p)).norm(), 1e-12) << d << " " << p;
    }
  }
}

TEST(Construct, WernerPartialTransposeNegative) {
  const BipartiteState w = family(Family::werner, 2, 0.75);
  const auto ev = oracle::eigenvalues(oracle::partial_transpose_b(w.matrix(), 2, 2));
  // Closed form: (1 - 2p) / 2 for the lowest eigenvalue at d = 2.
  EXPECT_NEAR(ev.minCoeff(), (1.0 - 2.0 * 0.75) / 2.0, 1e-12);
}

TEST(Construct, IsotropicPptBoundary) {
  for (std::size_t d : {2, 3}) {
    const double edge = 1.0 / static_cast<double>(d);
    EXPECT_TRUE(is_ppt(family(Family::isotropic, d, edge)).ppt);
    EXPECT_FALSE(is_ppt(family(Family::isotropic, d, edge + 0.01)).ppt);
  }
}

TEST(Construct, RandomFamiliesNeedSeedAndAreDeterministic) {
  EXPECT_THROW(family(Family::random_mixed, 2), ParameterError);
  const BipartiteState a = family(Family::random_mixed, 3, 0.0, 5);
  const BipartiteState b = family(Family::random_mixed, 3, 0.0, 5);
  const BipartiteState c = family(Family::random_mixed, 3, 0.0, 6);
  EXPECT_EQ(a.matrix(), b.matrix());
  EXPECT_GT((a.matrix() - c.matrix()).norm(), 1e-3);
}

TEST(Construct, RandomPptPassesIsPpt) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (std::size_t d : {2, 3}) {
      const BipartiteState s = family(Family::random_ppt, d, 0.0, seed);
      EXPECT_TRUE(is_ppt(s).ppt) << "seed " << seed << " d " << d;
    }
  }
}

TEST(Construct, BadParameters) {
  EXPECT_THROW(family(Family::werner, 2, 1.5), ParameterError);
  EXPECT_THROW(family(Family::werner, 1, 0.5), ParameterError);
  EXPECT_THROW(product(2, 2, 0), ParameterError);
  EXPECT_THROW(family_from_string("gibbs"), ParameterError);
  EXPECT_EQ(family_from_string(to_string(Family::random_ppt)), Family::random_ppt);
}

TEST(Tensor, TraceAndProductOfBasisStates) {
  const BipartiteState w = family(Family::werner, 2, 0.3);
  const BipartiteState ww = tensor(w, w);
  EXPECT_EQ(ww.dimension(), 16u);
  EXPECT_EQ(ww.dims().pairs, 2u);
  EXPECT_NEAR(ww.matrix().trace().real(), 1.0, 1e-12);

  const BipartiteState z = product(2, 0, 0);
  const BipartiteState zz = tensor(z, z);
  oracle::Matrix expect = oracle::Matrix::Zero(16, 16);
  expect(0, 0) = 1.0;
  EXPECT_EQ(zz.matrix(), expect);
}

TEST(Tensor, SpectrumProductLaw) {
  const BipartiteState w = family(Family::werner, 2, 0.5);
  const auto single = oracle::eigenvalues(w.matrix());
  std::vector<double> expect;
  for (int i = 0; i < single.size(); ++i)
    for (int j = 0; j < single.size(); ++j) expect.push_back(single(i) * single(j));
  std::sort(expect.begin(), expect.end());
  const auto got = oracle::eigenvalues(tensor(w, w).matrix());
  for (int i = 0; i < got.size(); ++i) EXPECT_NEAR(got(i), expect[static_cast<std::size_t>(i)], 1e-12);
}

TEST(Tensor, MatchesKronecker) {
  Rng rng = make_rng(3);
  const BipartiteState a = family(Family::random_mixed, 2, 0.0, 1);
  const BipartiteState b = family(Family::random_mixed, 2, 0.0, 2);
  EXPECT_LE((tensor(a, b).matrix() - oracle::kron(a.matrix(), b.matrix())).norm(), 1e-14);
  EXPECT_THROW(tensor(a, family(Family::werner, 3, 0.2)), ParameterError);
}

TEST(PartialTrace, IidMarginalAndIdentityCase) {
  const BipartiteState w = family(Family::random_mixed, 2, 0.0, 9);
  const BipartiteState v = family(Family::random_mixed, 2, 0.0, 10);
  const std::array<std::size_t, 1> first{0}, second{1};
  EXPECT_LE((partial_trace(tensor(w, v), first).matrix() - w.matrix()).norm(), 1e-12);
  EXPECT_LE((partial_trace(tensor(w, v), second).matrix() - v.matrix()).norm(), 1e-12);
  const BipartiteState phi = family(Family::max_entangled, 2);
  EXPECT_LE((partial_trace(phi, first).matrix() - phi.matrix()).norm(), 1e-15);
}

TEST(PartialTrace, TraceOneForAllKeepSets) {
  Rng rng = make_rng(4);
  const Dims dims{2, 2, 3};
  const BipartiteState s(dims, random_density(dims.total(), 64, rng));
  const std::vector<std::vector<std::size_t>> sets{{0}, {1}, {2}, {0, 1}, {0, 2}, {1, 2}, {0, 1, 2}};
  for (const auto& keep : sets) {
    const BipartiteState r = partial_trace(s, keep);
    EXPECT_NEAR(r.matrix().trace().real(), 1.0, 1e-12);
    EXPECT_EQ(r.dims().pairs, keep.size());
  }
  const std::array<std::size_t, 1> bad{3};
  EXPECT_THROW(partial_trace(s, bad), ParameterError);
}

TEST(PartialTranspose, PhiSpectrumIsSwapOverD) {
  for (int d : {2, 3, 4}) {
    const BipartiteState phi = family(Family::max_entangled, static_cast<std::size_t>(d));
    const Matrix pt = partial_transpose(phi);
    EXPECT_LE((pt - oracle::swap_operator(d) / static_cast<double>(d)).norm(), 1e-14);
  }
}

TEST(PartialTranspose, MatchesEntrywiseOracleAndIsInvolution) {
  for (int d : {2, 3}) {
    const BipartiteState s = family(Family::random_mixed, static_cast<std::size_t>(d), 0.0, 11);
    const Matrix pt = partial_transpose(s);
    EXPECT_EQ(pt, oracle::partial_transpose_b(s.matrix(), d, d));
    EXPECT_EQ(partial_transpose(pt, s.dims()), s.matrix());
  }
  Rng rng = make_rng(1);
  const Dims dims{2, 3, 2};
  const Matrix m = random_density(dims.total(), 8, rng);
  EXPECT_EQ(partial_transpose(partial_transpose(m, dims), dims), m);
}

TEST(PartialTranspose, ProductStateStaysPositive) {
  const BipartiteState p = tensor(product(3, 1, 2), product(3, 0, 0));
  EXPECT_GE(oracle::eigenvalues(partial_transpose(p)).minCoeff(), -1e-14);
}

TEST(GlobalCut, ReordersPairsToAllAThenAllB) {
  const BipartiteState a = family(Family::random_mixed, 2, 0.0, 1);
  const BipartiteState b = family(Family::random_mixed, 2, 0.0, 2);
  const Dims dims{2, 2, 2};
  const Matrix g = to_global_cut(tensor(a, b).matrix(), dims);
  // Entry <a1 a2 b1 b2| . |a1' a2' b1' b2'> = a(a1 b1, a1' b1') b(a2 b2, a2' b2').
  for (int r = 0; r < 16; ++r) {
    for (int c = 0; c < 16; ++c) {
      const int a1 = r >> 3 & 1, a2 = r >> 2 & 1, b1 = r >> 1 & 1, b2 = r & 1;
      const int a1p = c >> 3 & 1, a2p = c >> 2 & 1, b1p = c >> 1 & 1, b2p = c & 1;
      const cplx expect = a.matrix()(a1 * 2 + b1, a1p * 2 + b1p) * b.matrix()(a2 * 2 + b2, a2p * 2 + b2p);
      EXPECT_NEAR(std::abs(g(r, c) - expect), 0.0, 1e-15);
    }
  }
}

TEST(TraceDistance, Basics) {
  const BipartiteState w = family(Family::werner, 2, 0.3);
  EXPECT_NEAR(trace_distance(w, w), 0.0, 1e-14);
  EXPECT_NEAR(trace_distance(product(2, 0, 0), product(2, 1, 1)), 1.0, 1e-12);
  const BipartiteState v = family(Family::werner, 2, 0.7);
  EXPECT_NEAR(trace_distance(w, v), 0.5 * oracle::trace_norm(w.matrix() - v.matrix()), 1e-12);
}

TEST(TraceDistance, TriangleInequality) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const BipartiteState a = family(Family::random_mixed, 2, 0.0, 3 * s);
    const BipartiteState b = family(Family::random_mixed, 2, 0.0, 3 * s + 1);
    const BipartiteState c = family(Family::random_mixed, 2, 0.0, 3 * s + 2);
    EXPECT_LE(trace_distance(a, c), trace_distance(a, b) + trace_distance(b, c) + 1e-9);
  }
}

TEST(Validate, AcceptsAndRejects) {
  const Dims dims{2, 2, 1};
  EXPECT_TRUE(std::holds_alternative<BipartiteState>(validate_state(dims, oracle::werner(2, 0.4))));

  Matrix neg = Matrix::Zero(4, 4);
  neg.diagonal() << 1.1, -0.1, 0.0, 0.0;
  const auto bad = validate_state(dims, neg);
  ASSERT_TRUE(std::holds_alternative<ValidationReport>(bad));
  EXPECT_TRUE(std::get<ValidationReport>(bad).flags("positivity"));
  EXPECT_THROW(BipartiteState(dims, neg), InvalidStateError);

  Matrix near = oracle::werner(2, 0.4);
  near(0, 0) += 5e-10;
  EXPECT_TRUE(std::holds_alternative<BipartiteState>(validate_state(dims, near)));
  near(0, 0) += 5e-9;
  EXPECT_TRUE(std::get<ValidationReport>(validate_state(dims, near)).flags("trace"));

  Matrix skew = oracle::werner(2, 0.4);
  skew(0, 1) = cplx(0.0, 0.1);
  EXPECT_TRUE(check_state(dims, skew).flags("hermiticity"));
  EXPECT_TRUE(check_state(dims, Matrix::Identity(3, 3) / 3.0).flags("shape"));
  Matrix nan = oracle::werner(2, 0.4);
  nan(2, 2) = std::nan("");
  EXPECT_TRUE(check_state(dims, nan).flags("finite"));
}

TEST(Capacity, CapEnforced) {
  const BipartiteState w = family(Family::werner, 2, 0.3);
  EXPECT_EQ(max_dimension(), kDefaultMaxDimension);
  EXPECT_THROW(tensor_power(w, 7), CapacityError);
  set_max_dimension(64);
  EXPECT_THROW(tensor_power(w, 4), CapacityError);
  EXPECT_EQ(tensor_power(w, 3).dimension(), 64u);
  set_max_dimension(kDefaultMaxDimension);
}
