#include "distilkit/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace distilkit::io {

namespace {

bool is_meta(const std::string& key) {
  return std::find_if(std::begin(kMetaKeys), std::end(kMetaKeys), [&](const char* k) { return key == k; }) !=
         std::end(kMetaKeys);
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const char* what) {
  if (!j.is_object()) throw ParameterError(std::string(what) + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return key == k; });
    if (!known && !is_meta(key)) throw ParameterError(std::string(what) + ": unknown key '" + key + "'");
  }
}

std::size_t positive_size(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number_integer() || j.at(key).get<long long>() < 1) {
    throw ParameterError(std::string("state: '") + key + "' must be a positive integer");
  }
  return j.at(key).get<std::size_t>();
}

json vector_to_json(const Vector& v) { return matrix_to_json(Matrix(v)); }

json sized_matrix(const Matrix& m) { return {{"rows", m.rows()}, {"cols", m.cols()}, {"matrix", matrix_to_json(m)}}; }

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

json matrix_to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back({m(r, c).real(), m(r, c).imag()});
  }
  return out;
}

Matrix matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows * cols) {
    throw ParameterError("matrix: expected " + std::to_string(rows * cols) + " [re, im] entries");
  }
  Matrix m(rows, cols);
  for (Eigen::Index k = 0; k < rows * cols; ++k) {
    const json& e = j[static_cast<std::size_t>(k)];
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
      throw ParameterError("matrix: entries must be [re, im] number pairs");
    }
    m(k / cols, k % cols) = cplx(e[0].get<double>(), e[1].get<double>());
  }
  return m;
}

json state_to_json(const BipartiteState& state) {
  const Dims& d = state.dims();
  return {{"dimA", d.dim_a}, {"dimB", d.dim_b}, {"pairs", d.pairs}, {"matrix", matrix_to_json(state.matrix())}};
}

BipartiteState state_from_json(const json& j) {
  reject_unknown(j, {"dimA", "dimB", "pairs", "matrix"}, "state");
  Dims dims{positive_size(j, "dimA"), positive_size(j, "dimB"), j.contains("pairs") ? positive_size(j, "pairs") : 1};
  if (!j.contains("matrix")) throw ParameterError("state: missing 'matrix'");
  const auto n = static_cast<Eigen::Index>(dims.total());
  return BipartiteState(dims, matrix_from_json(j.at("matrix"), n, n));
}

Ensemble ensemble_from_json(const json& j, const std::filesystem::path& base) {
  reject_unknown(j, {"weights", "members"}, "ensemble");
  if (!j.contains("weights") || !j.contains("members") || !j.at("weights").is_array() ||
      !j.at("members").is_array()) {
    throw ParameterError("ensemble: 'weights' and 'members' arrays are required");
  }
  std::vector<double> weights;
  for (const auto& w : j.at("weights")) {
    if (!w.is_number()) throw ParameterError("ensemble: weights must be numbers");
    weights.push_back(w.get<double>());
  }
  std::vector<BipartiteState> members;
  for (const auto& m : j.at("members")) {
    if (m.is_string()) {
      std::filesystem::path p = m.get<std::string>();
      if (p.is_relative()) p = base / p;
      members.push_back(state_from_json(read_json(p)));
    } else {
      members.push_back(state_from_json(m));
    }
  }
  return Ensemble(std::move(weights), std::move(members));
}

json ensemble_to_json(const Ensemble& ensemble) {
  json members = json::array();
  for (const auto& m : ensemble.members()) members.push_back(state_to_json(m));
  return {{"weights", ensemble.weights()}, {"members", members}};
}

Source source_from_json(const json& j, const std::filesystem::path& base) {
  if (j.is_object() && j.contains("members")) return ensemble_from_json(j, base);
  return state_from_json(j);
}

json certificate_to_json(const Certificate& c) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else if constexpr (std::is_same_v<T, FilterPair>) {
          return {{"type", "filters"}, {"a", sized_matrix(v.a)}, {"b", sized_matrix(v.b)}};
        } else if constexpr (std::is_same_v<T, SchmidtVector>) {
          return {{"type", "schmidt"},
                  {"u1", vector_to_json(v.u1)},
                  {"u2", vector_to_json(v.u2)},
                  {"v1", vector_to_json(v.v1)},
                  {"v2", vector_to_json(v.v2)},
                  {"psi", vector_to_json(v.psi)}};
        } else {
          return {{"type", "eigenvector"}, {"vector", vector_to_json(v.vector)}};
        }
      },
      c);
}

json report_to_json(const WitnessReport& r) {
  return {{"value", r.value},
          {"certificate", certificate_to_json(r.certificate)},
          {"violation", r.violation},
          {"budget_exhausted", r.budget_exhausted},
          {"seed", r.seed},
          {"restarts", r.restarts},
          {"best_restart", r.best_restart}};
}

json frame_to_json(const Frame& f) {
  json elements = json::array();
  json duals = json::array();
  for (const auto& e : f.elements) elements.push_back(matrix_to_json(e));
  for (const auto& e : f.duals) duals.push_back(matrix_to_json(e));
  return {{"dim", f.dim}, {"elements", elements}, {"duals", duals}};
}

json pipeline_to_json(const PipelineReport& r) {
  json out = {{"sigma_m", state_to_json(r.sigma_m)},
              {"verdict", r.verdict},
              {"f_m", r.f_m},
              {"chernoff", r.chernoff.value},
              {"chernoff_raw", r.chernoff.raw},
              {"chernoff_log2", r.chernoff.log2},
              {"deviation", r.deviation},
              {"trace_distance", r.trace_distance},
              {"surrogate", r.surrogate},
              {"ncopy", report_to_json(r.ncopy)}};
  if (r.filter) out["filter"] = report_to_json(*r.filter);
  return out;
}

json activator_to_json(const ActivatorResult& r, double c) {
  return {{"witness", r.witness},
          {"fidelity", r.fidelity},
          {"success_weight", r.success_weight},
          {"rho", state_to_json(r.best.rho)},
          {"c", c},
          {"label", r.best.label},
          {"found", r.found},
          {"budget_exhausted", r.budget_exhausted},
          {"evaluated", r.evaluated},
          {"best_index", r.best_index}};
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParameterError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ParameterError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_counts_csv(std::ostream& os, const OutcomeCounts& counts, const json& meta) {
  if (!meta.is_null()) os << "# " << meta.dump() << '\n';
  os << "outcome_index,count\n";
  for (std::size_t k = 0; k < counts.counts.size(); ++k) os << k << ',' << counts.counts[k] << '\n';
}

OutcomeCounts read_counts_csv(std::istream& is) {
  std::string line;
  bool header = false;
  std::vector<std::pair<std::size_t, std::uint64_t>> rows;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "outcome_index,count") throw ParameterError("counts: expected header 'outcome_index,count'");
      header = true;
      continue;
    }
    std::istringstream row(line);
    std::size_t k = 0;
    std::uint64_t c = 0;
    char comma = 0;
    if (!(row >> k >> comma >> c) || comma != ',') throw ParameterError("counts: malformed row '" + line + "'");
    rows.emplace_back(k, c);
  }
  if (!header) throw ParameterError("counts: missing header");
  OutcomeCounts out;
  std::size_t size = 0;
  for (const auto& [k, c] : rows) size = std::max(size, k + 1);
  out.counts.assign(size, 0);
  for (const auto& [k, c] : rows) {
    out.counts[k] += c;
    out.shots += c;
  }
  return out;
}

}  // namespace distilkit::io
