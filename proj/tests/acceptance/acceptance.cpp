// Acceptance suite. One line per criterion; exit status is nonzero if any
// criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "distilkit/distilkit.hpp"
#include "oracles.hpp"

using namespace distilkit;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Check {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok && out_.pass) {
      out_.pass = false;
      out_.detail = what;
    }
  }
  void note(const std::string& s) {
    if (out_.pass) out_.detail = s;
  }
  Outcome result() const { return out_; }

 private:
  Outcome out_;
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

BipartiteState make(Family f, std::size_t d, double p = 0.0, std::optional<std::uint64_t> seed = {}) {
  StateFamilySpec spec;
  spec.family = f;
  spec.d = d;
  spec.p = p;
  return construct_state(spec, seed);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

// 1. Partial-transpose spectrum of phi_d.
Outcome pt_spectrum() {
  Check c;
  double worst = 0.0;
  for (int d : {2, 3, 4}) {
    const Matrix pt = partial_transpose(make(Family::max_entangled, static_cast<std::size_t>(d)));
    const Eigen::VectorXd ev = oracle::eigenvalues(pt);
    int plus = 0, minus = 0;
    for (int i = 0; i < ev.size(); ++i) {
      const double r1 = std::abs(ev(i) - 1.0 / d), r2 = std::abs(ev(i) + 1.0 / d);
      worst = std::max(worst, std::min(r1, r2));
      (r1 < r2 ? plus : minus) += 1;
    }
    c.require(plus == d * (d + 1) / 2 && minus == d * (d - 1) / 2, "wrong multiplicities at d=" + std::to_string(d));
  }
  c.require(worst <= 1e-12, "residual " + num(worst));
  c.note("max residual " + num(worst));
  return c.result();
}

// 2. PPT states give no singlet boost.
Outcome ppt_no_boost() {
  Check c;
  double top = 0.0, lowest = 1e300;
  for (std::size_t d : {2u, 3u}) {
    for (std::uint64_t s = 0; s < 100; ++s) {
      const BipartiteState rho = make(Family::random_ppt, d, 0.0, 1000 * d + s);
      const WitnessReport f = f2(rho, {32, 500, 1e-9, s});
      const WitnessReport sc = single_copy_distillable(rho, {16, 200, s});
      top = std::max(top, f.value);
      lowest = std::min(lowest, sc.value);
      c.require(f.value <= 0.5 + 1e-6, "f2 " + num(f.value) + " at d=" + std::to_string(d));
      c.require(!sc.violation, "single-copy violation at d=" + std::to_string(d));
    }
  }
  c.note("max f2 " + num(top) + ", min single-copy " + num(lowest));
  return c.result();
}

// 3. Werner threshold at d = 2.
Outcome werner_threshold() {
  Check c;
  for (int i = 0; i <= 20; ++i) {
    const double p = 0.05 * i;
    const BipartiteState w = make(Family::werner, 2, p);
    const WitnessReport f = f2(w, {32, 500, 1e-9, static_cast<std::uint64_t>(i)});
    const bool npt = !is_ppt(w).ppt;
    if (i >= 11) c.require(f.value > 0.5 + 1e-4, "p=" + num(p) + " f2=" + num(f.value));
    if (i <= 9) c.require(f.value <= 0.5 + 1e-6, "p=" + num(p) + " f2=" + num(f.value));
    c.require(npt == (f.value > 0.5 + 1e-6), "sign mismatch at p=" + num(p));
  }
  c.note("21 grid points");
  return c.result();
}

// 4. Symmetrization channel on 3-pair qubit states.
Outcome symmetrization() {
  Check c;
  double worst = 0.0;
  const auto perms = all_permutations(3);
  for (std::uint64_t s = 0; s < 50; ++s) {
    Rng rng = make_rng(s);
    const Dims dims{2, 2, 3};
    const BipartiteState w(dims, random_density(64, 64, rng));
    const BipartiteState out = symmetrize(w);
    worst = std::max(worst, max_abs(symmetrize(out).matrix() - out.matrix()));
    for (const auto& p : perms) worst = std::max(worst, max_abs(conjugate_pairs(out.matrix(), p, 4) - out.matrix()));
    std::array<Matrix, 3> marg;
    for (std::size_t k = 0; k < 3; ++k) {
      const std::array<std::size_t, 1> keep{k};
      marg[k] = partial_trace(out, keep).matrix();
    }
    worst = std::max({worst, max_abs(marg[0] - marg[1]), max_abs(marg[0] - marg[2])});
  }
  c.require(worst <= 1e-12, "residual " + num(worst));
  c.note("max residual " + num(worst));
  return c.result();
}

// 5. Mixture-of-powers extensions.
Outcome mixture_extensions() {
  Check c;
  double worst = 0.0, lowest_pt = 1e300;
  for (std::uint64_t s = 0; s < 20; ++s) {
    for (Family fam : {Family::random_mixed, Family::random_ppt}) {
      std::vector<BipartiteState> members;
      for (std::uint64_t j = 0; j < 3; ++j) members.push_back(make(fam, 2, 0.0, 100 * s + j));
      Rng rng = make_rng(s, 1);
      std::uniform_real_distribution<double> u(0.1, 1.0);
      std::vector<double> w{u(rng), u(rng), u(rng)};
      const double total = w[0] + w[1] + w[2];
      for (double& x : w) x /= total;
      const Ensemble e(w, members);
      const Matrix avg = e.average().matrix();
      for (std::size_t k : {2u, 3u}) {
        const BipartiteState m = mixture_of_powers(e, k);
        for (const auto& p : all_permutations(k))
          worst = std::max(worst, max_abs(conjugate_pairs(m.matrix(), p, 4) - m.matrix()));
        for (std::size_t j = 0; j < k; ++j) {
          const std::array<std::size_t, 1> keep{j};
          worst = std::max(worst, max_abs(partial_trace(m, keep).matrix() - avg));
        }
        if (fam == Family::random_ppt) {
          const double ev = is_ppt(m).min_eigenvalue;
          lowest_pt = std::min(lowest_pt, ev);
          c.require(ev >= -1e-9, "PPT members gave min PT eigenvalue " + num(ev));
        }
      }
    }
  }
  c.require(worst <= 1e-12, "residual " + num(worst));
  c.note("max residual " + num(worst) + ", min PT eigenvalue " + num(lowest_pt));
  return c.result();
}

// 6. de Finetti bound formula.
Outcome definetti() {
  Check c;
  c.require(definetti_bound(2, 1, 100) == 0.64, "definetti_bound(2,1,100) != 0.64");
  int points = 0;
  for (std::size_t k = 1; k <= 5; ++k) {
    for (std::size_t n : {20u, 40u, 80u, 160u}) {
      ++points;
      c.require(definetti_bound(2, k + 1, n) > definetti_bound(2, k, n), "not increasing in k");
      c.require(definetti_bound(2, k, 2 * n) < definetti_bound(2, k, n), "not decreasing in n");
    }
  }
  c.note(std::to_string(points) + " grid points");
  return c.result();
}

// 7. Frame roundtrip and product-frame reconstruction of phi_2.
Outcome frame_roundtrip() {
  Check c;
  double worst = 0.0;
  std::mt19937_64 gen(7);
  for (std::size_t m : {2u, 3u, 4u}) {
    const Frame f = minimal_ic_povm(m);
    for (int t = 0; t < 100; ++t) {
      const Matrix x = oracle::random_hermitian(static_cast<int>(m), gen);
      Matrix rec = Matrix::Zero(x.rows(), x.cols());
      for (std::size_t k = 0; k < f.size(); ++k) rec += (f.elements[k] * x).trace() * f.duals[k];
      worst = std::max(worst, (x - rec).norm());
    }
  }
  const Frame prod = product_frame(minimal_ic_povm(2), minimal_ic_povm(2));
  const Matrix phi = make(Family::max_entangled, 2).matrix();
  const double phi_err = (reconstruct(born_probabilities(phi, prod), prod) - phi).norm();
  c.require(worst <= 1e-9, "roundtrip " + num(worst));
  c.require(phi_err <= 1e-9, "phi_2 reconstruction " + num(phi_err));
  c.note("roundtrip " + num(worst) + ", phi_2 " + num(phi_err));
  return c.result();
}

// 8. Tomography convergence on Werner(0.75).
Outcome tomography_convergence() {
  Check c;
  const BipartiteState w = make(Family::werner, 2, 0.75);
  const Frame frame = product_frame(minimal_ic_povm(2), minimal_ic_povm(2));
  const RealVector born = born_probabilities(w.matrix(), frame);
  std::vector<double> medians;
  std::string detail;
  for (std::uint64_t shots : {100u, 1000u, 10000u, 100000u}) {
    std::vector<double> dist;
    int failures = 0;
    for (std::uint64_t s = 0; s < 50; ++s) {
      PipelineOptions opt;
      opt.shots = shots;
      opt.seed = s;
      opt.budget = {4, 100, s};
      opt.seesaw = {4, 200, 1e-9, s};
      const PipelineReport r = estimation_pipeline(w, opt);
      dist.push_back(r.trace_distance);
      // Total-variation deviation of the same sample.
      const OutcomeCounts counts = simulate_measurements(w, frame, shots, s);
      double tv = 0.0;
      for (std::size_t k = 0; k < counts.counts.size(); ++k)
        tv += std::abs(static_cast<double>(counts.counts[k]) / static_cast<double>(shots) -
                       born(static_cast<Eigen::Index>(k)));
      failures += 0.5 * tv > 0.1;
    }
    const double bound = chernoff_tail(0.1, shots, frame.size()).value;
    const double rate = failures / 50.0;
    if (bound < 1.0) c.require(rate <= bound, "failure rate " + num(rate) + " > bound " + num(bound));
    medians.push_back(median(dist));
    detail += std::to_string(shots) + ":" + num(medians.back()) + " ";
  }
  for (std::size_t i = 1; i < medians.size(); ++i) c.require(medians[i] <= medians[i - 1], "median increased");
  c.require(medians.back() <= 0.05, "median at 1e5 shots " + num(medians.back()));
  c.note("median trace distance " + detail);
  return c.result();
}

// 9. Pipeline sign correctness.
Outcome pipeline_sign() {
  Check c;
  PipelineOptions opt;
  opt.shots = 100000;
  opt.seed = 9;
  const BipartiteState ppt = make(Family::random_ppt, 2, 0.0, 5);
  const PipelineReport rp = estimation_pipeline(ppt, opt);
  c.require(rp.f_m == 0.0 && !rp.violation, "PPT source f_m " + num(rp.f_m));
  std::string detail = "ppt 0";
  for (const auto& [name, rho] : {std::pair<std::string, BipartiteState>{"phi_2", make(Family::max_entangled, 2)},
                                  {"werner", make(Family::werner, 2, 0.75)}}) {
    const PipelineReport r = estimation_pipeline(rho, opt);
    const double direct = 0.5 - f2(rho).value;
    c.require(std::abs(r.f_m - direct) <= 0.02, name + " f_m " + num(r.f_m) + " vs " + num(direct));
    detail += ", " + name + " " + num(r.f_m) + " vs " + num(direct);
  }
  c.note(detail);
  return c.result();
}

BipartiteState random_target(int d, std::mt19937_64& gen) {
  return BipartiteState(Dims{static_cast<std::size_t>(2 * d), static_cast<std::size_t>(2 * d), 1},
                        oracle::random_density(4 * d * d, gen));
}

BipartiteState random_activator(int d, std::mt19937_64& gen) {
  return BipartiteState(Dims{static_cast<std::size_t>(d), static_cast<std::size_t>(d), 1},
                        oracle::random_density(d * d, gen));
}

// 10. Jamiolkowski identity.
Outcome jamiolkowski() {
  Check c;
  double worst = 0.0, cmin = 1e300;
  std::mt19937_64 gen(10);
  for (int d : {2, 3}) {
    for (int t = 0; t < 100; ++t) {
      const ActivationInstance inst = make_activation_instance(random_activator(d, gen), random_target(d, gen));
      const JamCheck j = jam_check(inst, 100, static_cast<std::uint64_t>(t));
      worst = std::max(worst, j.max_deviation);
      cmin = std::min(cmin, j.c);
    }
  }
  c.require(worst <= 1e-9, "deviation " + num(worst));
  c.require(cmin > 0.0, "c " + num(cmin));
  c.note("max deviation " + num(worst) + ", min c " + num(cmin));
  return c.result();
}

// 11. Activation sign equivalence and the embedded phi_2 target.
Outcome activation_sign() {
  Check c;
  std::mt19937_64 gen(11);
  int agree = 0, counted = 0;
  for (int t = 0; t < 100; ++t) {
    const BipartiteState rho = random_activator(2, gen);
    const BipartiteState sigma = random_target(2, gen);
    const double w = activation_witness(rho, sigma);
    const double fid = apply_activation(make_activation_instance(rho, sigma)).fidelity;
    if (std::abs(w) <= 1e-9) continue;
    ++counted;
    agree += (w < 0.0) == (fid > 0.5);
  }
  c.require(agree == counted, std::to_string(counted - agree) + " disagreements");

  // phi_2 on A2B2 and on A3B3, stored per side as i2 * 2 + i3.
  Matrix sigma = Matrix::Zero(16, 16);
  for (int i : {0, 1})
    for (int j : {0, 1})
      for (int k : {0, 1})
        for (int l : {0, 1}) sigma((i * 2 + j) * 4 + i * 2 + j, (k * 2 + l) * 4 + k * 2 + l) = 0.25;
  const ActivatorResult r = search_activator(BipartiteState(Dims{4, 4, 1}, sigma), ActivatorOptions{});
  c.require(r.fidelity >= 1.0 - 1e-9, "search fidelity " + num(r.fidelity));
  c.note(std::to_string(agree) + "/" + std::to_string(counted) + " agree, search fidelity " + num(r.fidelity));
  return c.result();
}

// Spectral helpers for the convex oracle.
Matrix spectral_map(const Matrix& h, const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.adjoint()));
  return es.eigenvectors() * f(es.eigenvalues()).cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

Eigen::VectorXd simplex(const Eigen::VectorXd& v) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    cum += u[i];
    const double t = (cum - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) theta = t;
  }
  return (v.array() - theta).max(0.0);
}

// min ||sigma - X||_1 over density matrices by Douglas-Rachford splitting of
// the trace norm (prox: eigenvalue soft threshold) and the state set
// (projection: eigenvalue simplex projection).
double convex_oracle(const Matrix& x, int iters) {
  const double t = 0.05;
  Matrix z = x;
  const auto prox_f = [&](const Matrix& v) {
    return Matrix(x + spectral_map(v - x, [&](const Eigen::VectorXd& e) {
                    return Eigen::VectorXd((e.array().abs() - t).max(0.0) * e.array().sign());
                  }));
  };
  const auto proj = [&](const Matrix& v) { return spectral_map(v, simplex); };
  double best = 1e300;
  for (int k = 0; k < iters; ++k) {
    const Matrix a = prox_f(z);
    const Matrix b = proj(2.0 * a - z);
    z += b - a;
    if (k % 50 == 0 || k == iters - 1) best = std::min(best, oracle::trace_norm(b - x));
  }
  return best;
}

// 12. closest_state against the convex oracle.
Outcome closest_state_optimality() {
  Check c;
  std::mt19937_64 gen(12);
  double worst = 0.0;
  const Dims dims{2, 2, 1};
  for (int t = 0; t < 100; ++t) {
    Matrix x = oracle::random_hermitian(4, gen);
    x += Matrix::Identity(4, 4) * ((1.0 - x.trace().real()) / 4.0);
    const double lib = oracle::trace_norm(closest_state(x, dims).matrix() - x);
    const double ref = convex_oracle(x, 20000);
    worst = std::max(worst, std::abs(lib - ref));
  }
  c.require(worst <= 1e-6, "objective gap " + num(worst));
  c.note("max objective gap " + num(worst));
  return c.result();
}

struct Criterion {
  int id;
  const char* name;
  Outcome (*fn)();
  double limit_seconds;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "partial-transpose spectrum of phi_d", pt_spectrum, 1.0},
      {2, "PPT states: no singlet boost", ppt_no_boost, 300.0},
      {3, "Werner threshold d=2", werner_threshold, 60.0},
      {4, "symmetrization channel", symmetrization, 0.0},
      {5, "mixture-of-powers extensions", mixture_extensions, 0.0},
      {6, "de Finetti bound formula", definetti, 0.0},
      {7, "frame roundtrip", frame_roundtrip, 0.0},
      {8, "tomography convergence", tomography_convergence, 600.0},
      {9, "pipeline sign correctness", pipeline_sign, 0.0},
      {10, "Jamiolkowski identity", jamiolkowski, 0.0},
      {11, "activation sign equivalence", activation_sign, 0.0},
      {12, "closest_state optimality", closest_state_optimality, 0.0},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (cr.limit_seconds > 0.0 && secs > cr.limit_seconds) {
      o.pass = false;
      o.detail = "runtime " + num(secs) + " s over " + num(cr.limit_seconds) + " s; " + o.detail;
    }
    failed += !o.pass;
    std::printf("[%s] %2d %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", cr.id, cr.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
