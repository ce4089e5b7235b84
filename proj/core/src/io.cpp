#include "isoas/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "isoas/errors.hpp"

namespace isoas {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

class SchemaReader {
 public:
  explicit SchemaReader(const json& doc) : doc_(doc) {}

  const std::vector<std::string>& errors() const { return errors_; }
  void Error(const std::string& msg) { errors_.push_back(msg); }

  bool Has(const std::string& key) const { return doc_.contains(key); }

  std::optional<double> Number(const json& node, const std::string& field) {
    if (!node.is_number()) {
      Error(field + ": expected a number");
      return std::nullopt;
    }
    const double v = node.get<double>();
    if (!std::isfinite(v)) {
      Error(field + ": must be finite");
      return std::nullopt;
    }
    return v;
  }

  std::optional<double> NumberAt(const std::string& key, bool required) {
    if (!Has(key)) {
      if (required) Error(key + ": missing required field");
      return std::nullopt;
    }
    return Number(doc_.at(key), key);
  }

  // Accepts [[...], ...] or, when `allow_flat`, a flat list read as a column.
  std::optional<MatrixXd> Matrix(const json& node, const std::string& field,
                                 bool allow_flat) {
    if (!node.is_array() || node.empty()) {
      Error(field + ": expected a nonempty array");
      return std::nullopt;
    }
    if (!node.front().is_array()) {
      if (!allow_flat) {
        Error(field + ": expected a list of rows");
        return std::nullopt;
      }
      auto v = Vector(node, field);
      if (!v) return std::nullopt;
      return MatrixXd(*v);
    }
    const size_t cols = node.front().size();
    MatrixXd M(node.size(), cols);
    bool ok = cols > 0;
    if (!ok) Error(field + ": rows must be nonempty");
    for (size_t i = 0; ok && i < node.size(); ++i) {
      const json& row = node[i];
      if (!row.is_array() || row.size() != cols) {
        Error(field + ": row " + std::to_string(i) +
              " has inconsistent length");
        ok = false;
        break;
      }
      for (size_t j = 0; j < cols; ++j) {
        auto x = Number(row[j], field + "[" + std::to_string(i) + "][" +
                                    std::to_string(j) + "]");
        if (!x) {
          ok = false;
          break;
        }
        M(i, j) = *x;
      }
    }
    if (!ok) return std::nullopt;
    return M;
  }

  std::optional<MatrixXd> MatrixAt(const std::string& key, bool required,
                                   bool allow_flat = false) {
    if (!Has(key)) {
      if (required) Error(key + ": missing required field");
      return std::nullopt;
    }
    return Matrix(doc_.at(key), key, allow_flat);
  }

  std::optional<VectorXd> Vector(const json& node, const std::string& field) {
    if (!node.is_array() || node.empty()) {
      Error(field + ": expected a nonempty list of numbers");
      return std::nullopt;
    }
    VectorXd v(node.size());
    for (size_t i = 0; i < node.size(); ++i) {
      auto x = Number(node[i], field + "[" + std::to_string(i) + "]");
      if (!x) return std::nullopt;
      v(i) = *x;
    }
    return v;
  }

  std::optional<VectorXd> VectorAt(const std::string& key, bool required) {
    if (!Has(key)) {
      if (required) Error(key + ": missing required field");
      return std::nullopt;
    }
    return Vector(doc_.at(key), key);
  }

 private:
  const json& doc_;
  std::vector<std::string> errors_;
};

const std::set<std::string> kTopLevelKeys = {
    "name",    "description", "A",          "B",    "C",
    "D",       "K",           "lqr",        "u_min", "u_max",
    "H",       "h",           "epsilon",    "tolerances", "caps",
    "reference_scaling"};

void ParseTolerances(const json& node, Tolerances* tol, SchemaReader* rd) {
  if (!node.is_object()) {
    rd->Error("tolerances: expected an object");
    return;
  }
  for (const auto& [key, value] : node.items()) {
    double* target = nullptr;
    if (key == "feasibility") target = &tol->feasibility;
    if (key == "redundancy") target = &tol->redundancy;
    if (key == "geometry") target = &tol->geometry;
    if (target == nullptr) {
      rd->Error("tolerances." + key + ": unknown field");
      continue;
    }
    auto v = rd->Number(value, "tolerances." + key);
    if (!v) continue;
    if (!(*v > 0.0)) {
      rd->Error("tolerances." + key + ": must be positive");
      continue;
    }
    *target = *v;
  }
}

void ParseCaps(const json& node, IsoasConfig* cfg, SchemaReader* rd) {
  if (!node.is_object()) {
    rd->Error("caps: expected an object");
    return;
  }
  for (const auto& [key, value] : node.items()) {
    int* target = nullptr;
    if (key == "k_max") target = &cfg->k_max;
    if (key == "i_max") target = &cfg->i_max;
    if (key == "row_cap") target = &cfg->row_cap;
    if (target == nullptr) {
      rd->Error("caps." + key + ": unknown field");
      continue;
    }
    if (!value.is_number_integer() || value.get<long long>() < 1 ||
        value.get<long long>() > 100000000) {
      rd->Error("caps." + key + ": expected a positive integer");
      continue;
    }
    *target = value.get<int>();
  }
}

json PolyJson(const Polyhedron& p) { return ToJson(p); }

}  // namespace

ProblemSpec ParseProblem(const json& doc) {
  if (!doc.is_object()) {
    throw ConfigError("config schema violation",
                      {"document: expected a JSON object"});
  }
  SchemaReader rd(doc);
  ProblemSpec spec;
  for (const auto& [key, value] : doc.items()) {
    if (kTopLevelKeys.count(key) == 0) rd.Error(key + ": unknown field");
  }
  if (doc.contains("name")) {
    if (doc.at("name").is_string()) {
      spec.name = doc.at("name").get<std::string>();
    } else {
      rd.Error("name: expected a string");
    }
  }

  auto A = rd.MatrixAt("A", true);
  auto B = rd.MatrixAt("B", true, true);
  auto C = rd.MatrixAt("C", true);
  auto D = rd.MatrixAt("D", false, true);
  auto H = rd.MatrixAt("H", true);
  auto h = rd.VectorAt("h", true);
  auto u_min = rd.NumberAt("u_min", true);
  auto u_max = rd.NumberAt("u_max", true);
  auto eps = rd.NumberAt("epsilon", false);

  int n = -1;
  if (A) {
    n = static_cast<int>(A->rows());
    if (A->cols() != n) rd.Error("A: must be square");
  }
  if (B) {
    if (n >= 0 && B->rows() != n) rd.Error("B: must have as many rows as A");
    if (B->cols() != 1) rd.Error("B: only single-input plants (one column)");
  }
  int l = -1;
  if (C) {
    l = static_cast<int>(C->rows());
    if (n >= 0 && C->cols() != n) rd.Error("C: must have as many columns as A");
  }
  if (D) {
    if (l >= 0 && D->rows() != l) rd.Error("D: must have as many rows as C");
    if (D->cols() != 1) rd.Error("D: must have one column");
  }
  if (H && l >= 0 && H->cols() != l) {
    rd.Error("H: must have as many columns as C has rows");
  }
  if (H && h && H->rows() != h->size()) {
    rd.Error("h: length must equal the number of rows of H");
  }
  if (h && h->minCoeff() <= 0.0) {
    rd.Error("h: every entry must be positive (0 interior to Y)");
  }
  if (u_min && u_max) {
    if (!(*u_min < *u_max)) rd.Error("u_min/u_max: u_min must be < u_max");
    if (!(*u_min < 0.0 && 0.0 < *u_max)) {
      rd.Error("u_min/u_max: 0 must lie strictly inside [u_min, u_max]");
    }
  }
  if (eps && !(*eps > 0.0 && *eps < 1.0)) {
    rd.Error("epsilon: must lie in (0, 1)");
  }

  const bool has_k = doc.contains("K");
  const bool has_lqr = doc.contains("lqr");
  if (has_k == has_lqr) {
    rd.Error("K/lqr: exactly one of K and lqr must be given");
  }
  if (has_k) {
    const json& Kn = doc.at("K");
    std::optional<VectorXd> K;
    if (Kn.is_array() && !Kn.empty() && Kn.front().is_array()) {
      auto Km = rd.MatrixAt("K", true);
      if (Km && Km->rows() == 1) {
        K = Km->row(0).transpose();
      } else if (Km) {
        rd.Error("K: must be a single row");
      }
    } else {
      K = rd.Vector(Kn, std::string("K"));
    }
    if (K) {
      if (n >= 0 && K->size() != n) rd.Error("K: must have n entries");
      spec.K = K->transpose();
    }
  }
  if (has_lqr) {
    const json& lqr = doc.at("lqr");
    if (!lqr.is_object()) {
      rd.Error("lqr: expected an object with Q and R");
    } else {
      if (lqr.contains("Q")) {
        auto Q = rd.Matrix(lqr.at("Q"), std::string("lqr.Q"), false);
        if (Q) {
          if (n >= 0 && (Q->rows() != n || Q->cols() != n)) {
            rd.Error("lqr.Q: must be n x n");
          }
          spec.lqr_Q = *Q;
        }
      } else {
        rd.Error("lqr.Q: missing required field");
      }
      if (lqr.contains("R")) {
        const json& Rn = lqr.at("R");
        std::optional<double> R;
        if (Rn.is_number()) {
          R = rd.Number(Rn, std::string("lqr.R"));
        } else {
          auto Rm = rd.Matrix(Rn, std::string("lqr.R"), true);
          if (Rm && Rm->size() == 1) {
            R = (*Rm)(0, 0);
          } else if (Rm) {
            rd.Error("lqr.R: must be a scalar or 1 x 1 matrix");
          }
        }
        if (R && !(*R > 0.0)) rd.Error("lqr.R: must be positive");
        if (R) spec.lqr_R = *R;
      } else {
        rd.Error("lqr.R: missing required field");
      }
      for (const auto& [key, value] : lqr.items()) {
        if (key != "Q" && key != "R") rd.Error("lqr." + key + ": unknown field");
      }
    }
  }

  if (doc.contains("reference_scaling")) {
    const json& s = doc.at("reference_scaling");
    if (s == "input") {
      spec.scaling = ReferenceScaling::kInput;
    } else if (s == "state") {
      spec.scaling = ReferenceScaling::kState;
    } else {
      rd.Error("reference_scaling: expected \"input\" or \"state\"");
    }
  }
  if (doc.contains("tolerances")) {
    ParseTolerances(doc.at("tolerances"), &spec.config.tol, &rd);
  }
  if (doc.contains("caps")) ParseCaps(doc.at("caps"), &spec.config, &rd);

  if (!rd.errors().empty()) {
    throw ConfigError("config schema violation", rd.errors());
  }

  spec.plant.A = *A;
  spec.plant.B = *B;
  spec.plant.C = *C;
  spec.plant.D = D ? *D : MatrixXd::Zero(C->rows(), 1);
  spec.outc.H = *H;
  spec.outc.h = *h;
  spec.u_min = *u_min;
  spec.u_max = *u_max;
  if (eps) spec.epsilon = *eps;
  return spec;
}

Problem BuildProblem(const ProblemSpec& spec) {
  std::optional<LqrResult> lqr;
  RowVectorXd K;
  if (spec.K) {
    K = *spec.K;
  } else {
    lqr = LqrGain(spec.plant, *spec.lqr_Q, spec.lqr_R);
    K = lqr->K;
  }
  const Diagnostics diag = Validate(spec.plant, K, spec.u_min, spec.u_max,
                                    spec.outc, spec.epsilon);
  if (!diag.ok()) {
    throw ValidationError("model validation failed", diag.Messages());
  }
  SaturatedLoop loop = SaturatedLoop::Create(spec.plant, K, spec.u_min,
                                             spec.u_max, spec.epsilon,
                                             spec.outc, spec.scaling);
  return Problem{spec, K, lqr, diag, std::move(loop)};
}

Problem LoadProblem(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file", {path + ": not readable"});
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON", {e.what()});
  }
  return BuildProblem(ParseProblem(doc));
}

json ToJson(const MatrixXd& M) {
  json rows = json::array();
  for (int i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json ToJson(const VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json ToJson(const Polyhedron& poly) {
  return json{{"dim", poly.dim()},
              {"H", ToJson(poly.H())},
              {"h", ToJson(poly.h())}};
}

Polyhedron PolyhedronFromJson(const json& doc) {
  if (!doc.is_object() || !doc.contains("H") || !doc.contains("h")) {
    throw ConfigError("polyhedron JSON must have H and h", {"H/h: missing"});
  }
  const json& Hn = doc.at("H");
  const json& hn = doc.at("h");
  if (!Hn.is_array() || !hn.is_array() || Hn.size() != hn.size()) {
    throw ConfigError("polyhedron JSON: H and h row counts differ",
                      {"H/h: inconsistent"});
  }
  int dim = doc.contains("dim") ? doc.at("dim").get<int>() : -1;
  if (Hn.empty()) {
    if (dim < 0) {
      throw ConfigError("polyhedron JSON without rows needs dim",
                        {"dim: missing"});
    }
    return Polyhedron(dim);
  }
  const int cols = static_cast<int>(Hn.front().size());
  if (dim >= 0 && dim != cols) {
    throw ConfigError("polyhedron JSON: dim disagrees with H",
                      {"dim: inconsistent"});
  }
  MatrixXd H(Hn.size(), cols);
  VectorXd h(hn.size());
  for (size_t i = 0; i < Hn.size(); ++i) {
    if (Hn[i].size() != static_cast<size_t>(cols)) {
      throw ConfigError("polyhedron JSON: ragged H", {"H: ragged"});
    }
    for (int j = 0; j < cols; ++j) H(i, j) = Hn[i][j].get<double>();
    h(i) = hn[i].get<double>();
  }
  return Polyhedron(std::move(H), std::move(h));
}

namespace {

json Meta(const Problem& problem, const IsoasConfig& cfg) {
  const SaturatedLoop& loop = problem.loop;
  json meta;
  meta["name"] = problem.spec.name;
  meta["n"] = loop.n();
  meta["z_dim"] = loop.z_dim();
  meta["epsilon"] = loop.eps();
  meta["u_min"] = loop.u_lo();
  meta["u_max"] = loop.u_hi();
  meta["K"] = ToJson(VectorXd(loop.K().transpose()));
  meta["G_x"] = ToJson(loop.basis().G_x);
  meta["G_u"] = loop.basis().G_u;
  meta["reference_scaling"] =
      problem.spec.scaling == ReferenceScaling::kState ? "state" : "input";
  meta["r_range"] = json::array({loop.r_min(), loop.r_max()});
  meta["caps"] = {{"k_max", cfg.k_max},
                  {"i_max", cfg.i_max},
                  {"row_cap", cfg.row_cap}};
  meta["tolerances"] = {{"feasibility", cfg.tol.feasibility},
                        {"redundancy", cfg.tol.redundancy},
                        {"geometry", cfg.tol.geometry}};
  meta["empty_set_prevention"] = cfg.empty_set_prevention;
  meta["erosion_prevention"] = cfg.erosion_prevention;
  return meta;
}

}  // namespace

json ExportSets(const IsoasResult& result, const MoasResult& moas,
                const Problem& problem) {
  json out;
  out["Q"] = PolyJson(result.Q);
  out["Q_up"] = PolyJson(result.Q_up);
  out["Q_lo"] = PolyJson(result.Q_lo);
  out["moas"] = PolyJson(moas.O);
  json meta = Meta(problem, problem.spec.config);
  meta["iterations"] = result.outer_iterations;
  meta["moas_steps"] = moas.steps;
  out["meta"] = std::move(meta);
  return out;
}

json ExportMoas(const MoasResult& moas, const Problem& problem) {
  json out;
  out["moas"] = PolyJson(moas.O);
  json meta = Meta(problem, problem.spec.config);
  meta["moas_steps"] = moas.steps;
  out["meta"] = std::move(meta);
  return out;
}

json TraceRecord(const IterationRecord& rec) {
  static const char* kNames[3] = {"Q", "Q_up", "Q_lo"};
  json out;
  out["i"] = rec.i;
  for (int r = 0; r < 3; ++r) {
    json region;
    region["seed_rows"] = rec.seed_rows[r];
    region["bundle_rows"] = rec.bundle_rows[r];
    region["steps"] = rec.steps[r];
    region["seeded"] = PolyJson(rec.seeded[r]);
    region["result"] = PolyJson(rec.result[r]);
    if (r > 0) {
      region["prevention_dropped"] = rec.prevention_dropped[r - 1];
      region["erosion_dropped"] = rec.erosion_dropped[r - 1];
    }
    out[kNames[r]] = std::move(region);
  }
  return out;
}

json ToJson(const VerificationReport& report) {
  auto finite_or_null = [](double v) -> json {
    return std::isfinite(v) ? json(v) : json(nullptr);
  };
  json out;
  const VerifyOptions& o = report.options;
  out["parameters"] = {{"n_samples", o.n_samples},
                       {"T", o.T},
                       {"seed", o.seed},
                       {"tol", o.tol},
                       {"box_inflation", o.box_inflation},
                       {"omega_samples", o.omega_samples},
                       {"omega_T_max", o.omega_T_max}};
  out["samples"] = report.samples;
  out["attempts"] = report.attempts;
  out["samples_per_piece"] = report.samples_per_piece;
  out["sampling_failed"] = report.sampling_failed;
  if (report.sampling_failed) out["sampling_message"] = report.sampling_message;
  out["output_violations"] = report.output_violations;
  out["worst_output_margin"] = finite_or_null(report.worst_output_margin);
  out["invariance_violations"] = report.invariance_violations;
  out["worst_invariance_margin"] =
      finite_or_null(report.worst_invariance_margin);
  out["saturation_events"] = report.saturation_events;
  out["omega"] = {{"member", report.omega_member},
                  {"nonmember", report.omega_nonmember},
                  {"undecided", report.omega_undecided}};
  json ex = json::array();
  for (const auto& v : report.examples) {
    ex.push_back({{"kind", v.kind},
                  {"z", ToJson(v.z)},
                  {"margin", v.margin},
                  {"step", v.step}});
  }
  out["violating_samples"] = std::move(ex);
  out["ok"] = report.ok();
  return out;
}

json ToJson(const Diagnostics& diag) {
  return json{{"schur", diag.schur},
              {"spectral_radius", diag.spectral_radius},
              {"input_interior", diag.input_interior},
              {"output_interior", diag.output_interior},
              {"null_space_dim", diag.null_space_dim},
              {"observability_rank", diag.observability_rank},
              {"observable", diag.observable},
              {"authority_condition_defined", diag.authority_condition_defined},
              {"authority_condition", diag.authority_condition},
              {"authority_upper_applicable", diag.authority_upper_applicable},
              {"authority_lower_applicable", diag.authority_lower_applicable},
              {"messages", diag.Messages()}};
}

std::string FormatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void WriteVertexCsv(std::ostream& out,
                    const std::vector<std::vector<Eigen::Vector2d>>& polygons) {
  out << "vertex_index,x1,x2\n";
  bool first = true;
  for (const auto& poly : polygons) {
    if (poly.empty()) continue;
    if (!first) out << "\n";
    first = false;
    for (size_t i = 0; i < poly.size(); ++i) {
      out << i << "," << FormatDouble(poly[i](0)) << ","
          << FormatDouble(poly[i](1)) << "\n";
    }
  }
}

void WriteTrajectoryCsv(std::ostream& out, const Trajectory& traj) {
  const int n = traj.states.empty() ? 0 : traj.states[0].size();
  const int l = traj.outputs.empty() ? 0 : traj.outputs[0].size();
  out << "k";
  for (int i = 1; i <= n; ++i) out << ",x" << i;
  out << ",u";
  for (int i = 1; i <= l; ++i) out << ",y" << i;
  out << ",r\n";
  for (size_t k = 0; k < traj.states.size(); ++k) {
    out << k;
    for (int i = 0; i < n; ++i) out << "," << FormatDouble(traj.states[k](i));
    out << "," << FormatDouble(traj.inputs[k]);
    for (int i = 0; i < l; ++i) out << "," << FormatDouble(traj.outputs[k](i));
    out << "," << FormatDouble(traj.r) << "\n";
  }
}

void WriteFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace isoas
