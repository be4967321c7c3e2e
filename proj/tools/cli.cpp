#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "distilkit/distilkit.hpp"

namespace distilkit::cli {

namespace {

using io::json;

// Bad input files or option combinations; exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string state_path, rho_path, sigma_path, source_path, ensemble_path;
  std::string family;
  std::size_t d = 2;
  double p = 0.0;
  std::size_t rank = 0;
  std::size_t index_a = 0, index_b = 0;
  std::size_t max_attempts = 100000;

  std::uint64_t seed = 0;
  std::string out;
  std::string format;
  std::size_t restarts = 0;
  std::size_t iters = 0;
  double tol = 1e-9;
  std::size_t target_dim = 2;
  double lambda = 0.5;
  std::size_t n = 1;
  std::size_t k = 2;
  std::uint64_t shots = 10000;
  std::size_t budget = 2000;
  bool ppt_only = false;
  bool double_sym = false;
  std::size_t trials = 100;
  std::size_t m = 2, m2 = 0;
  double delta = 0.1;
  std::size_t cardinality = 16;
  std::size_t support = 0;
  std::optional<std::size_t> bound_n;

  std::string sweep_command, param, metrics, values;
  std::optional<double> from, to, step;
  std::size_t repeats = 1;

  // Set by sweep in place of file or family inputs.
  std::optional<BipartiteState> state_override;
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

struct Outcome {
  json payload = json::object();
  std::optional<Table> table;
  std::vector<std::pair<std::string, double>> scalars;
  bool verdict = false;
  std::string summary;
};

std::string fmt(double v) { return io::format_double(v); }

std::size_t size_or(std::size_t v, std::size_t fallback) { return v == 0 ? fallback : v; }

BipartiteState load_state_file(const std::string& path) {
  try {
    return io::state_from_json(io::read_json(path));
  } catch (const InvalidStateError& e) {
    throw InputError(path + ": invalid state: " + e.what());
  } catch (const Error& e) {
    throw InputError(path + ": " + e.what());
  }
}

StateFamilySpec family_spec(const Options& o) {
  StateFamilySpec spec;
  try {
    spec.family = family_from_string(o.family);
  } catch (const Error& e) {
    throw InputError(e.what());
  }
  spec.d = o.d;
  spec.p = o.p;
  spec.rank = o.rank;
  spec.index_a = o.index_a;
  spec.index_b = o.index_b;
  spec.max_attempts = o.max_attempts;
  return spec;
}

BipartiteState family_state(const Options& o) {
  const StateFamilySpec spec = family_spec(o);
  try {
    return construct_state(spec, o.seed);
  } catch (const ParameterError& e) {
    throw InputError(e.what());
  }
}

// --state / --rho / --sigma file, or a family given by --family.
BipartiteState input_state(const Options& o, const std::string& path, const char* flag) {
  if (o.state_override) return *o.state_override;
  if (!path.empty()) return load_state_file(path);
  if (!o.family.empty()) return family_state(o);
  throw InputError(std::string("no input state: pass ") + flag + " FILE or --family");
}

Source input_source(const Options& o) {
  if (o.state_override) return *o.state_override;
  if (!o.source_path.empty()) {
    try {
      const std::filesystem::path p(o.source_path);
      return io::source_from_json(io::read_json(p), p.parent_path());
    } catch (const Error& e) {
      throw InputError(o.source_path + ": " + e.what());
    }
  }
  if (!o.family.empty()) return family_state(o);
  throw InputError("no source: pass --source FILE or --family");
}

Ensemble input_ensemble(const Options& o) {
  if (o.ensemble_path.empty()) throw InputError("--ensemble FILE is required");
  try {
    const std::filesystem::path p(o.ensemble_path);
    return io::ensemble_from_json(io::read_json(p), p.parent_path());
  } catch (const Error& e) {
    throw InputError(o.ensemble_path + ": " + e.what());
  }
}

Frame full_frame(const Dims& dims) {
  Frame frame;
  bool first = true;
  for (std::size_t f : dims.factor_dims()) {
    Frame local = minimal_ic_povm(f);
    frame = first ? std::move(local) : product_frame(frame, local);
    first = false;
  }
  return frame;
}

// ---------------------------------------------------------------------------
// Commands

Outcome cmd_state(const Options& o) {
  if (o.family.empty()) throw InputError("--family is required");
  const BipartiteState s = family_state(o);
  Outcome r;
  r.payload = io::state_to_json(s);
  const double lowest = min_eigenvalue(s.matrix());
  r.scalars = {{"min_eigenvalue", lowest}, {"ppt", is_ppt(s).ppt ? 1.0 : 0.0}};
  r.summary = "state family=" + o.family + " dims=" + std::to_string(s.dims().dim_a) + "x" +
              std::to_string(s.dims().dim_b) + " pairs=" + std::to_string(s.dims().pairs);
  return r;
}

Outcome witness_outcome(const char* name, const WitnessReport& w) {
  Outcome r;
  r.payload = io::report_to_json(w);
  r.scalars = {{"value", w.value}, {"violation", w.violation ? 1.0 : 0.0}};
  r.verdict = w.violation;
  r.summary = std::string(name) + " value=" + fmt(w.value) + (w.violation ? " violation" : " budget_exhausted") +
              " restarts=" + std::to_string(w.restarts) + " seed=" + std::to_string(w.seed);
  return r;
}

SeesawOptions seesaw_options(const Options& o) {
  return {size_or(o.restarts, 32), size_or(o.iters, 500), o.tol, o.seed};
}

SearchBudget search_budget(const Options& o) { return {size_or(o.restarts, 16), size_or(o.iters, 200), o.seed}; }

Outcome cmd_f2(const Options& o) { return witness_outcome("f2", f2(input_state(o, o.state_path, "--state"), seesaw_options(o))); }

Outcome cmd_fd(const Options& o) {
  return witness_outcome("fd", fD(input_state(o, o.state_path, "--state"), o.target_dim, o.lambda, seesaw_options(o)));
}

Outcome cmd_ppt(const Options& o) {
  const PptResult p = is_ppt(input_state(o, o.state_path, "--state"));
  Outcome r;
  r.payload = {{"ppt", p.ppt}, {"min_eigenvalue", p.min_eigenvalue}};
  r.scalars = {{"ppt", p.ppt ? 1.0 : 0.0}, {"min_eigenvalue", p.min_eigenvalue}};
  r.verdict = !p.ppt;
  r.summary = std::string("ppt ") + (p.ppt ? "yes" : "no") + " min_eigenvalue=" + fmt(p.min_eigenvalue);
  return r;
}

Outcome cmd_undistill1(const Options& o) {
  return witness_outcome("undistill1", single_copy_distillable(input_state(o, o.state_path, "--state"), search_budget(o)));
}

Outcome cmd_ncopy(const Options& o) {
  return witness_outcome("ncopy", n_copy_distillable(input_state(o, o.state_path, "--state"), o.n, search_budget(o)));
}

Outcome cmd_symmetrize(const Options& o) {
  const BipartiteState in = input_state(o, o.state_path, "--state");
  const BipartiteState s = o.double_sym ? double_symmetrize(in) : symmetrize(in);
  Outcome r;
  r.payload = io::state_to_json(s);
  const double residual = symmetry_residual(s.matrix(), s.dims().pairs, s.dims().pair_dim());
  r.scalars = {{"symmetry_residual", residual}};
  r.summary = std::string(o.double_sym ? "double-symmetrize" : "symmetrize") + " pairs=" +
              std::to_string(s.dims().pairs) + " residual=" + fmt(residual);
  return r;
}

Outcome cmd_mixpow(const Options& o) {
  const Ensemble e = input_ensemble(o);
  const BipartiteState s = mixture_of_powers(e, o.k);
  Outcome r;
  r.payload = io::state_to_json(s);
  r.scalars = {{"members", static_cast<double>(e.size())}, {"k", static_cast<double>(o.k)}};
  r.summary = "mixpow members=" + std::to_string(e.size()) + " k=" + std::to_string(o.k);
  return r;
}

Outcome cmd_definetti(const Options& o) {
  const double b = definetti_bound(o.d, o.k, o.n);
  Outcome r;
  r.payload = {{"bound", b}, {"d", o.d}, {"k", o.k}, {"n", o.n}};
  r.scalars = {{"bound", b}};
  r.summary = fmt(b);
  return r;
}

Outcome cmd_defclose(const Options& o) {
  const BipartiteState s = input_state(o, o.state_path, "--state");
  ProductMixtureOptions opt;
  opt.restarts = size_or(o.restarts, 8);
  opt.iters = size_or(o.iters, 300);
  opt.seed = o.seed;
  opt.support = o.support;
  const ProductMixtureFit fit = best_product_mixture_distance(s, opt);
  Outcome r;
  r.payload = {{"distance", fit.distance}, {"restart", fit.restart}, {"ensemble", io::ensemble_to_json(fit.ensemble)}};
  r.scalars = {{"distance", fit.distance}};
  r.summary = "defclose distance=" + fmt(fit.distance);
  if (o.bound_n) {
    // The bound is on the unhalved trace norm.
    const double bound = definetti_bound(s.dims().dim_a, s.dims().pairs, *o.bound_n);
    r.payload["bound"] = bound;
    r.payload["trace_norm"] = 2.0 * fit.distance;
    r.scalars.emplace_back("bound", bound);
    r.summary += " trace_norm=" + fmt(2.0 * fit.distance) + " bound=" + fmt(bound);
  }
  return r;
}

Outcome cmd_tomo_frame(const Options& o) {
  Frame frame = minimal_ic_povm(o.m);
  if (o.m2 != 0) frame = product_frame(frame, minimal_ic_povm(o.m2));
  const FrameCheck check = check_frame(frame, 100, o.seed);
  Outcome r;
  r.payload = io::frame_to_json(frame);
  r.payload["completeness"] = check.completeness;
  r.payload["roundtrip"] = check.roundtrip;
  r.scalars = {{"elements", static_cast<double>(frame.size())},
               {"completeness", check.completeness},
               {"roundtrip", check.roundtrip}};
  r.summary = "tomo-frame dim=" + std::to_string(frame.dim) + " elements=" + std::to_string(frame.size()) +
              " roundtrip=" + fmt(check.roundtrip);
  return r;
}

Outcome cmd_tomo_sim(const Options& o) {
  const BipartiteState s = input_state(o, o.state_path, "--state");
  const Frame frame = full_frame(s.dims());
  const OutcomeCounts counts = simulate_measurements(s, frame, o.shots, o.seed);
  Outcome r;
  Table t{{"outcome_index", "count"}, {}};
  for (std::size_t k = 0; k < counts.counts.size(); ++k) {
    t.rows.push_back({std::to_string(k), std::to_string(counts.counts[k])});
  }
  r.table = std::move(t);
  r.scalars = {{"shots", static_cast<double>(counts.shots)}, {"outcomes", static_cast<double>(counts.counts.size())}};
  r.summary = "tomo-sim outcomes=" + std::to_string(counts.counts.size()) + " shots=" + std::to_string(counts.shots);
  return r;
}

Outcome cmd_tomo_pipeline(const Options& o) {
  PipelineOptions opt;
  opt.n = o.n;
  opt.shots = o.shots;
  opt.seed = o.seed;
  opt.budget = search_budget(o);
  opt.seesaw = seesaw_options(o);
  const PipelineReport rep = estimation_pipeline(input_source(o), opt);
  Outcome r;
  r.payload = io::pipeline_to_json(rep);
  r.scalars = {{"f_m", rep.f_m},
               {"trace_distance", rep.trace_distance},
               {"deviation", rep.deviation},
               {"chernoff", rep.chernoff.value},
               {"violation", rep.violation ? 1.0 : 0.0}};
  r.verdict = rep.violation;
  r.summary = "tomo-pipeline verdict=" + rep.verdict + " f_m=" + fmt(rep.f_m) +
              " trace_distance=" + fmt(rep.trace_distance) + " surrogate=true";
  return r;
}

Outcome cmd_chernoff(const Options& o) {
  const ChernoffBound b = chernoff_tail(o.delta, o.shots, o.cardinality);
  Outcome r;
  r.payload = {{"value", b.value}, {"raw", b.raw}, {"log2", b.log2}};
  r.scalars = {{"value", b.value}, {"log2", b.log2}};
  r.summary = fmt(b.value);
  return r;
}

Outcome cmd_activate_check(const Options& o) {
  const ActivationInstance inst =
      make_activation_instance(input_state(o, o.rho_path, "--rho"), load_state_file(o.sigma_path));
  const ActivationOutput out = apply_activation(inst);
  const double witness = activation_witness(inst.rho, inst.sigma);
  const JamCheck jam = jam_check(inst, o.trials, o.seed);
  Outcome r;
  r.payload = {{"witness", witness},
               {"fidelity", out.fidelity},
               {"success_weight", out.weight},
               {"rho", io::state_to_json(inst.rho)},
               {"c", jam.c},
               {"omega", io::matrix_to_json(out.omega)}};
  r.scalars = {{"witness", witness}, {"fidelity", out.fidelity}, {"success_weight", out.weight}, {"c", jam.c}};
  r.verdict = witness < -kStateTol;
  r.summary = "activate-check witness=" + fmt(witness) + " fidelity=" + fmt(out.fidelity) +
              (r.verdict ? " activated" : " not_activated");
  return r;
}

Outcome cmd_activate_search(const Options& o) {
  const BipartiteState sigma = input_state(o, o.sigma_path, "--sigma");
  ActivatorOptions opt;
  opt.budget = o.budget;
  opt.ppt_only = o.ppt_only;
  opt.seed = o.seed;
  const ActivatorResult res = search_activator(sigma, opt);
  const double c = jam_check(make_activation_instance(res.best.rho, sigma), o.trials, o.seed).c;
  Outcome r;
  r.payload = io::activator_to_json(res, c);
  r.scalars = {{"witness", res.witness},
               {"fidelity", res.fidelity},
               {"success_weight", res.success_weight},
               {"found", res.found ? 1.0 : 0.0}};
  r.verdict = res.found;
  r.summary = "activate-search witness=" + fmt(res.witness) + " fidelity=" + fmt(res.fidelity) +
              (res.found ? " found" : " budget_exhausted") + " candidate=" + res.best.label;
  return r;
}

Outcome cmd_jam_check(const Options& o) {
  const ActivationInstance inst =
      make_activation_instance(input_state(o, o.rho_path, "--rho"), load_state_file(o.sigma_path));
  const JamCheck jam = jam_check(inst, o.trials, o.seed);
  Outcome r;
  r.payload = {{"c", jam.c}, {"max_deviation", jam.max_deviation}, {"used", jam.used}};
  r.scalars = {{"c", jam.c}, {"max_deviation", jam.max_deviation}};
  r.summary = "jam-check c=" + fmt(jam.c) + " max_deviation=" + fmt(jam.max_deviation);
  return r;
}

using Command = std::function<Outcome(const Options&)>;

const std::map<std::string, Command>& sweepable() {
  static const std::map<std::string, Command> table{
      {"f2", cmd_f2},           {"fd", cmd_fd},
      {"ppt", cmd_ppt},         {"undistill1", cmd_undistill1},
      {"ncopy", cmd_ncopy},     {"tomo-pipeline", cmd_tomo_pipeline},
      {"definetti-bound", cmd_definetti}, {"chernoff", cmd_chernoff},
      {"defclose", cmd_defclose}, {"activate-search", cmd_activate_search},
  };
  return table;
}

std::size_t as_count(double v, const std::string& name) {
  if (!(v >= 0.0) || std::abs(v - std::round(v)) > 1e-9) throw InputError(name + " needs a nonnegative integer");
  return static_cast<std::size_t>(std::llround(v));
}

// Returns true when the parameter changes the input state.
bool apply_param(Options& o, const std::string& name, double v) {
  if (name == "p") {
    o.p = v;
    return true;
  }
  if (name == "d") {
    o.d = as_count(v, name);
    return true;
  }
  if (name == "rank") {
    o.rank = as_count(v, name);
    return true;
  }
  if (name == "shots") o.shots = as_count(v, name);
  else if (name == "n") o.n = as_count(v, name);
  else if (name == "k") o.k = as_count(v, name);
  else if (name == "restarts") o.restarts = as_count(v, name);
  else if (name == "iters") o.iters = as_count(v, name);
  else if (name == "budget") o.budget = as_count(v, name);
  else if (name == "D") o.target_dim = as_count(v, name);
  else if (name == "lambda") o.lambda = v;
  else if (name == "delta") o.delta = v;
  else throw InputError("unknown sweep parameter '" + name + "'");
  return false;
}

std::vector<double> sweep_values(const Options& o) {
  std::vector<double> vals;
  if (!o.values.empty()) {
    std::stringstream ss(o.values);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw InputError("--values: cannot parse '" + item + "'");
      }
    }
  } else if (o.from && o.to && o.step) {
    if (!(*o.step > 0.0)) throw InputError("--step must be positive");
    const double span = (*o.to - *o.from) / *o.step;
    if (span < -1e-9) throw InputError("empty sweep range");
    const auto count = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) vals.push_back(*o.from + static_cast<double>(i) * *o.step);
  } else {
    throw InputError("sweep needs --values or --from/--to/--step");
  }
  if (vals.empty()) throw InputError("empty sweep range");
  return vals;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

// Row i uses seed base + i; repeat j of a row adds j * 1000003.
Outcome cmd_sweep(const Options& o) {
  const auto it = sweepable().find(o.sweep_command);
  if (it == sweepable().end()) throw InputError("sweep: unsupported --command '" + o.sweep_command + "'");
  if (o.param.empty()) throw InputError("sweep needs --param");
  if (o.repeats == 0) throw InputError("--repeats must be >= 1");
  const std::vector<double> vals = sweep_values(o);

  std::vector<std::string> wanted;
  {
    std::stringstream ss(o.metrics);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) wanted.push_back(item);
    }
  }

  Table table;
  for (std::size_t row = 0; row < vals.size(); ++row) {
    std::map<std::string, std::vector<double>> samples;
    std::vector<std::string> order;
    for (std::size_t rep = 0; rep < o.repeats; ++rep) {
      Options local = o;
      local.seed = o.seed + row + rep * 1000003ULL;
      const bool state_param = apply_param(local, o.param, vals[row]);
      if (state_param && local.family.empty()) throw InputError("sweeping '" + o.param + "' needs --family");
      if (!local.family.empty() && local.state_path.empty() && local.source_path.empty() &&
          local.sigma_path.empty()) {
        local.state_override = family_state(local);
      }
      const Outcome res = it->second(local);
      for (const auto& [name, value] : res.scalars) {
        if (!samples.count(name)) order.push_back(name);
        samples[name].push_back(value);
      }
    }
    if (row == 0) {
      if (wanted.empty()) wanted = order;
      for (const auto& w : wanted) {
        if (!samples.count(w)) throw InputError("sweep: command '" + o.sweep_command + "' has no metric '" + w + "'");
      }
      table.columns.push_back(o.param);
      table.columns.insert(table.columns.end(), wanted.begin(), wanted.end());
    }
    std::vector<std::string> cells{fmt(vals[row])};
    for (const auto& w : wanted) cells.push_back(fmt(median(samples.at(w))));
    table.rows.push_back(std::move(cells));
  }

  Outcome r;
  r.summary = "sweep command=" + o.sweep_command + " param=" + o.param + " rows=" + std::to_string(table.rows.size());
  r.scalars = {{"rows", static_cast<double>(table.rows.size())}};
  r.table = std::move(table);
  return r;
}

// ---------------------------------------------------------------------------
// Plumbing

json options_json(const CLI::App& sub) {
  json opts = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name.empty()) continue;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      opts[name] = res.size() == 1 ? res.front() : CLI::detail::join(res, ",");
    } else {
      opts[name] = opt->get_default_str();
    }
  }
  return opts;
}

void render(const Outcome& r, const json& meta, const std::string& format, std::ostream& os) {
  const bool csv = format == "csv" || (format.empty() && r.table.has_value());
  if (csv) {
    os << "# " << meta.dump() << '\n';
    if (r.table) {
      os << CLI::detail::join(r.table->columns, ",") << '\n';
      for (const auto& row : r.table->rows) os << CLI::detail::join(row, ",") << '\n';
    } else {
      os << "name,value\n";
      for (const auto& [name, value] : r.scalars) os << name << ',' << fmt(value) << '\n';
    }
    return;
  }
  json doc = r.payload;
  if (r.table) {
    doc["columns"] = r.table->columns;
    doc["rows"] = r.table->rows;
  }
  for (auto it = meta.begin(); it != meta.end(); ++it) doc[it.key()] = it.value();
  os << doc.dump(2) << '\n';
}

struct Spec {
  std::string name;
  std::string help;
  Command fn;
};

void add_state_flags(CLI::App* sub, Options& o) {
  sub->add_option("--family", o.family, "State family (werner, isotropic, max_entangled, product_pure, "
                                         "random_mixed, random_ppt)");
  sub->add_option("--d", o.d, "Local dimension")->check(CLI::Range(std::size_t{1}, std::size_t{1} << 20));
  sub->add_option("--p", o.p, "Family parameter");
  sub->add_option("--rank", o.rank, "Rank of random families (0 = family default)");
  sub->add_option("--index-a", o.index_a, "Product state index on A (0-based)");
  sub->add_option("--index-b", o.index_b, "Product state index on B (0-based)");
  sub->add_option("--max-attempts", o.max_attempts, "Rejection-sampling cap for random_ppt");
}

void add_search_flags(CLI::App* sub, Options& o) {
  sub->add_option("--restarts", o.restarts, "Optimizer restarts (0 = command default)");
  sub->add_option("--iters", o.iters, "Iterations per restart (0 = command default)");
}

std::size_t threads_from_env() {
  const char* env = std::getenv("DISTILKIT_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 0) throw InputError("DISTILKIT_THREADS must be a nonnegative integer");
  return static_cast<std::size_t>(v);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical toolkit for bipartite distillability", "distilkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", std::string(kVersion));

  Options o;
  std::optional<std::size_t> threads;
  app.add_option("--threads", threads, "Worker threads (default: DISTILKIT_THREADS, then all cores)");

  std::vector<std::pair<CLI::App*, Spec>> subs;
  const auto add = [&](Spec spec) {
    CLI::App* sub = app.add_subcommand(spec.name, spec.help);
    sub->add_option("--seed", o.seed, "Random seed");
    sub->add_option("--out", o.out, "Output artifact path");
    sub->add_option("--format", o.format, "Artifact format")->check(CLI::IsMember({"json", "csv"}));
    subs.emplace_back(sub, std::move(spec));
    return sub;
  };

  {
    auto* s = add({"state", "Construct a named state family", cmd_state});
    add_state_flags(s, o);
  }
  {
    auto* s = add({"f2", "Lower bound on the SLOCC singlet fraction", cmd_f2});
    s->add_option("--state", o.state_path, "State JSON");
    add_state_flags(s, o);
    add_search_flags(s, o);
    s->add_option("--tol", o.tol, "See-saw convergence tolerance");
  }
  {
    auto* s = add({"fd", "Filtered fidelity with a D-dimensional maximally entangled target", cmd_fd});
    s->add_option("--state", o.state_path, "State JSON");
    add_state_flags(s, o);
    add_search_flags(s, o);
    s->add_option("--tol", o.tol, "See-saw convergence tolerance");
    s->add_option("--D", o.target_dim, "Target dimension")->check(CLI::Range(2, 1 << 16));
    s->add_option("--lambda", o.lambda, "Violation threshold in [1/D, 1)");
  }
  {
    auto* s = add({"ppt", "Partial-transpose positivity across the global cut", cmd_ppt});
    s->add_option("--state", o.state_path, "State JSON");
    add_state_flags(s, o);
  }
  {
    auto* s = add({"undistill1", "Schmidt-rank-2 single-copy distillability search", cmd_undistill1});
    s->add_option("--state", o.state_path, "State JSON");
    add_state_flags(s, o);
    add_search_flags(s, o);
  }
  {
    auto* s = add({"ncopy", "Single-copy search on the n-fold tensor power", cmd_ncopy});
    s->add_option("--state", o.state_path, "State JSON");
    add_state_flags(s, o);
    add_search_flags(s, o);
    s->add_option("--n", o.n, "Copies")->check(CLI::PositiveNumber);
  }
  {
    auto* s = add({"symmetrize", "Average over pair permutations", cmd_symmetrize});
    s->add_option("--state", o.state_path, "State JSON");
    add_state_flags(s, o);
    s->add_flag("--double", o.double_sym, "Permute A and B factors independently");
  }
  {
    auto* s = add({"mixpow", "Mixture of k-th tensor powers of an ensemble", cmd_mixpow});
    s->add_option("--ensemble", o.ensemble_path, "Ensemble JSON")->required();
    s->add_option("--k", o.k, "Power")->check(CLI::PositiveNumber);
  }
  {
    auto* s = add({"definetti-bound", "Finite de Finetti bound 4 d^4 k / n", cmd_definetti});
    s->add_option("--d", o.d, "Local dimension")->check(CLI::PositiveNumber);
    s->add_option("--k", o.k, "Marginal pairs")->check(CLI::PositiveNumber);
    s->add_option("--n", o.n, "Extension pairs")->check(CLI::PositiveNumber);
  }
  {
    auto* s = add({"defclose", "Distance to mixtures of product powers", cmd_defclose});
    s->add_option("--state", o.state_path, "Symmetric k-pair state JSON")->required();
    add_search_flags(s, o);
    s->add_option("--support", o.support, "Candidate ensemble size (0 = k * (dA dB)^2)");
    s->add_option("--bound-n", o.bound_n, "Compare with the de Finetti bound at this n")->check(CLI::PositiveNumber);
  }
  {
    auto* s = add({"tomo-frame", "Minimal informationally complete POVM and its duals", cmd_tomo_frame});
    s->add_option("--m", o.m, "Dimension")->check(CLI::Range(2, 64));
    s->add_option("--m2", o.m2, "Second factor dimension for a product frame (0 = none)");
  }
  {
    auto* s = add({"tomo-sim", "Simulate product-frame measurement counts", cmd_tomo_sim});
    s->add_option("--state", o.state_path, "State JSON");
    add_state_flags(s, o);
    s->add_option("--shots", o.shots, "Shots");
  }
  {
    auto* s = add({"tomo-pipeline", "Estimate-then-distill pipeline", cmd_tomo_pipeline});
    s->add_option("--source", o.source_path, "State or ensemble JSON");
    add_state_flags(s, o);
    add_search_flags(s, o);
    s->add_option("--n", o.n, "Copies")->check(CLI::PositiveNumber);
    s->add_option("--shots", o.shots, "Shots")->check(CLI::PositiveNumber);
  }
  {
    auto* s = add({"chernoff", "Chernoff-type large-deviation tail", cmd_chernoff});
    s->add_option("--delta", o.delta, "Deviation")->check(CLI::PositiveNumber);
    s->add_option("--n", o.shots, "Samples")->check(CLI::PositiveNumber);
    s->add_option("--cardinality", o.cardinality, "Alphabet size")->check(CLI::PositiveNumber);
  }
  {
    auto* s = add({"activate-check", "Activation protocol on a given activator and target", cmd_activate_check});
    s->add_option("--rho", o.rho_path, "Activator JSON (d x d)");
    add_state_flags(s, o);
    s->add_option("--sigma", o.sigma_path, "Target JSON (2d x 2d)")->required();
    s->add_option("--trials", o.trials, "Random Z for the proportionality constant")->check(CLI::PositiveNumber);
  }
  {
    auto* s = add({"activate-search", "Search for an activator of a target", cmd_activate_search});
    s->add_option("--sigma", o.sigma_path, "Target JSON (2d x 2d)");
    add_state_flags(s, o);
    s->add_option("--budget", o.budget, "Candidate budget")->check(CLI::PositiveNumber);
    s->add_flag("--ppt-only", o.ppt_only, "Restrict candidates to PPT activators");
    s->add_option("--trials", o.trials, "Random Z for the proportionality constant")->check(CLI::PositiveNumber);
  }
  {
    auto* s = add({"jam-check", "Proportionality check of the activation identity", cmd_jam_check});
    s->add_option("--rho", o.rho_path, "Activator JSON (d x d)");
    add_state_flags(s, o);
    s->add_option("--sigma", o.sigma_path, "Target JSON (2d x 2d)")->required();
    s->add_option("--trials", o.trials, "Random positive Z")->check(CLI::PositiveNumber);
  }
  {
    auto* s = add({"sweep", "Tabulate a command over one parameter", cmd_sweep});
    s->add_option("--command", o.sweep_command, "Command to sweep")->required();
    s->add_option("--param", o.param, "Swept parameter (p, d, rank, shots, n, k, restarts, iters, budget, D, "
                                      "lambda, delta)")
        ->required();
    s->add_option("--from", o.from, "Range start");
    s->add_option("--to", o.to, "Range end (inclusive)");
    s->add_option("--step", o.step, "Range step");
    s->add_option("--values", o.values, "Comma-separated values instead of a range");
    s->add_option("--metrics", o.metrics, "Comma-separated report scalars (default: all)");
    s->add_option("--repeats", o.repeats, "Runs per row; the median is reported")->check(CLI::PositiveNumber);
    s->add_option("--state", o.state_path, "State JSON");
    s->add_option("--source", o.source_path, "Pipeline source JSON");
    s->add_option("--sigma", o.sigma_path, "Activation target JSON");
    add_state_flags(s, o);
    add_search_flags(s, o);
    s->add_option("--n", o.n, "Copies / extension pairs")->check(CLI::PositiveNumber);
    s->add_option("--k", o.k, "Marginal pairs")->check(CLI::PositiveNumber);
    s->add_option("--shots", o.shots, "Shots")->check(CLI::PositiveNumber);
    s->add_option("--D", o.target_dim, "Target dimension for fd");
    s->add_option("--lambda", o.lambda, "Threshold for fd");
    s->add_option("--delta", o.delta, "Deviation for chernoff");
    s->add_option("--cardinality", o.cardinality, "Alphabet size for chernoff");
    s->add_option("--budget", o.budget, "Candidate budget for activate-search");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream help_out, help_err;
    const int code = app.exit(e, help_out, help_err);
    out << help_out.str();
    err << help_err.str();
    return code == 0 ? kOk : kUsage;
  }

  CLI::App* chosen = nullptr;
  const Spec* spec = nullptr;
  for (auto& [sub, s] : subs) {
    if (sub->parsed()) {
      chosen = sub;
      spec = &s;
    }
  }

  std::string stage = "setup";
  try {
    set_thread_count(threads ? *threads : threads_from_env());
    stage = spec->name;
    const Outcome r = spec->fn(o);

    json meta = {{"seed", o.seed}, {"version", kVersion}, {"command", spec->name}, {"options", options_json(*chosen)}};
    if (!o.out.empty()) {
      std::ofstream file(o.out);
      if (!file) throw InputError("cannot write " + o.out);
      render(r, meta, o.format, file);
      if (!file) throw InputError("failed writing " + o.out);
    }
    out << r.summary << '\n';
    return r.verdict ? kVerdict : kOk;
  } catch (const InputError& e) {
    err << "distilkit: input error [" << stage << "]: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    const std::string where = e.stage().empty() ? stage : stage + "/" + e.stage();
    err << "distilkit: error [" << where << "]: " << e.what() << '\n';
    return kLibrary;
  } catch (const std::exception& e) {
    err << "distilkit: error [" << stage << "]: " << e.what() << '\n';
    return kLibrary;
  }
}

}  // namespace distilkit::cli
