// Command-line driver: MOAS/ISOAS computation, slicing, verification,
// comparison and simulation for a problem config.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "isoas/errors.hpp"
#include "isoas/geometry.hpp"
#include "isoas/io.hpp"
#include "isoas/isoas.hpp"
#include "isoas/oracle.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode {
  kOk = 0,
  kOther = 1,
  kConfig = 2,
  kValidation = 3,
  kCap = 4,
  kSolver = 5,
  kCheckFailed = 6,
};

struct CommonOptions {
  std::string config;
  std::string out_dir = ".";
  bool unsafe_repro = false;
  bool no_empty_set_prevention = false;
  bool no_erosion_prevention = false;
  std::optional<int> k_max;
  std::optional<int> i_max;
  std::optional<int> row_cap;
  std::optional<double> tol_feas;
  std::optional<double> tol_red;
  std::optional<double> tol_geom;
};

void AddCommon(CLI::App* cmd, CommonOptions* o) {
  cmd->add_option("config", o->config, "Problem config JSON")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("-o,--out-dir", o->out_dir, "Directory for artifacts");
  cmd->add_flag("--unsafe-repro", o->unsafe_repro,
                "Allow disabling the row elimination safeguards");
  cmd->add_flag("--no-empty-set-prevention", o->no_empty_set_prevention,
                "Skip the k = 1 elimination in saturated regions");
  cmd->add_flag("--no-erosion-prevention", o->no_erosion_prevention,
                "Share saturated rows without filtering");
  cmd->add_option("--k-max", o->k_max, "Inner propagation step cap");
  cmd->add_option("--i-max", o->i_max, "Outer sharing iteration cap");
  cmd->add_option("--row-cap", o->row_cap, "Retained row cap per region");
  cmd->add_option("--tol-feas", o->tol_feas, "Feasibility tolerance");
  cmd->add_option("--tol-red", o->tol_red, "Redundancy tolerance");
  cmd->add_option("--tol-geom", o->tol_geom, "Vertex merge tolerance");
}

isoas::Problem Load(const CommonOptions& o) {
  if ((o.no_empty_set_prevention || o.no_erosion_prevention) &&
      !o.unsafe_repro) {
    throw isoas::ConfigError(
        "disabling a safeguard requires --unsafe-repro",
        {"--no-empty-set-prevention/--no-erosion-prevention: only permitted "
         "with --unsafe-repro"});
  }
  std::ifstream in(o.config);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw isoas::ConfigError("config is not valid JSON", {e.what()});
  }
  isoas::ProblemSpec spec = isoas::ParseProblem(doc);
  isoas::IsoasConfig& cfg = spec.config;
  if (o.k_max) cfg.k_max = *o.k_max;
  if (o.i_max) cfg.i_max = *o.i_max;
  if (o.row_cap) cfg.row_cap = *o.row_cap;
  if (o.tol_feas) cfg.tol.feasibility = *o.tol_feas;
  if (o.tol_red) cfg.tol.redundancy = *o.tol_red;
  if (o.tol_geom) cfg.tol.geometry = *o.tol_geom;
  cfg.empty_set_prevention = !o.no_empty_set_prevention;
  cfg.erosion_prevention = !o.no_erosion_prevention;
  if (!cfg.empty_set_prevention) {
    spdlog::warn("empty-set prevention disabled (--unsafe-repro)");
  }
  if (!cfg.erosion_prevention) {
    spdlog::warn("erosion prevention disabled (--unsafe-repro)");
  }
  isoas::Problem problem = isoas::BuildProblem(spec);
  for (const auto& m : problem.diagnostics.Messages()) spdlog::info("{}", m);
  if (!problem.diagnostics.observable) {
    spdlog::warn("(A, C) is not observable; sets may be unbounded");
  }
  return problem;
}

std::string OutPath(const CommonOptions& o, const std::string& name) {
  fs::create_directories(o.out_dir);
  return (fs::path(o.out_dir) / name).string();
}

std::string Dump(const json& j) { return j.dump(2) + "\n"; }

void RequirePlanar(const isoas::Problem& p, const char* cmd) {
  if (p.loop.n() != 2) {
    throw isoas::ConfigError(std::string(cmd) + " requires a plant with n = 2",
                             {"A: slicing is only defined for n = 2"});
  }
}

std::vector<double> ReferenceGrid(const isoas::SaturatedLoop& loop,
                                  const std::vector<double>& given, int n) {
  if (!given.empty()) return given;
  std::vector<double> out;
  if (n == 1) return {0.5 * (loop.r_min() + loop.r_max())};
  for (int i = 0; i < n; ++i) {
    out.push_back(loop.r_min() +
                  (loop.r_max() - loop.r_min()) * i / static_cast<double>(n - 1));
  }
  return out;
}

// Vertices of the r-slice; an unbounded slice yields nullopt.
std::optional<std::vector<Eigen::Vector2d>> SliceVertices(
    const isoas::Polyhedron& poly, double r, const isoas::Tolerances& tol) {
  try {
    return isoas::Vertices2d(isoas::CrossSection(poly, r), tol);
  } catch (const isoas::UnboundedError&) {
    return std::nullopt;
  }
}

std::string Csv(const std::vector<Eigen::Vector2d>& verts) {
  std::ostringstream os;
  isoas::WriteVertexCsv(os, {verts});
  return os.str();
}

isoas::IsoasResult RunIsoas(const isoas::Problem& p) {
  isoas::IsoasResult res =
      isoas::ComputeIsoas(p.loop, p.spec.outc, p.spec.config);
  spdlog::info("isoas: {} outer iterations; rows Q={} Q_up={} Q_lo={}",
               res.outer_iterations, res.Q.rows(), res.Q_up.rows(),
               res.Q_lo.rows());
  const isoas::Tolerances& tol = p.spec.config.tol;
  if (isoas::IsEmpty(res.Q_up, tol) || isoas::IsEmpty(res.Q_lo, tol)) {
    spdlog::warn("a saturated set is empty");
  }
  if (isoas::IsEmpty(res.Q, tol)) spdlog::warn("the non-saturated set is empty");
  return res;
}

int CmdMoas(const CommonOptions& o) {
  const isoas::Problem p = Load(o);
  const isoas::MoasResult moas =
      isoas::ComputeMoas(p.loop, p.spec.outc, p.spec.config);
  const std::string path = OutPath(o, "moas.json");
  isoas::WriteFile(path, Dump(isoas::ExportMoas(moas, p)));
  std::cout << "moas: " << moas.O.rows() << " rows after " << moas.steps
            << " steps -> " << path << "\n";
  return kOk;
}

int CmdIsoas(const CommonOptions& o, bool trace) {
  const isoas::Problem p = Load(o);
  const isoas::IsoasResult res = RunIsoas(p);
  const isoas::MoasResult moas =
      isoas::ComputeMoas(p.loop, p.spec.outc, p.spec.config);
  const std::string path = OutPath(o, "sets.json");
  isoas::WriteFile(path, Dump(isoas::ExportSets(res, moas, p)));
  if (trace) {
    std::string lines;
    for (const auto& rec : res.trace) lines += isoas::TraceRecord(rec).dump() + "\n";
    isoas::WriteFile(OutPath(o, "trace.jsonl"), lines);
  }
  const isoas::Tolerances& tol = p.spec.config.tol;
  std::cout << "isoas: " << res.outer_iterations << " outer iterations; Q "
            << (isoas::IsEmpty(res.Q, tol) ? "empty" : "nonempty") << ", Q_up "
            << (isoas::IsEmpty(res.Q_up, tol) ? "empty" : "nonempty")
            << ", Q_lo "
            << (isoas::IsEmpty(res.Q_lo, tol) ? "empty" : "nonempty")
            << " -> " << path << "\n";
  return kOk;
}

int CmdSlice(const CommonOptions& o, const std::vector<double>& r_given,
             int grid) {
  const isoas::Problem p = Load(o);
  RequirePlanar(p, "slice");
  const isoas::IsoasResult res = RunIsoas(p);
  const isoas::MoasResult moas =
      isoas::ComputeMoas(p.loop, p.spec.outc, p.spec.config);
  const isoas::Tolerances& tol = p.spec.config.tol;
  const std::vector<std::pair<std::string, const isoas::Polyhedron*>> layers = {
      {"Q", &res.Q}, {"Q_up", &res.Q_up}, {"Q_lo", &res.Q_lo},
      {"moas", &moas.O}};

  json index = json::array();
  const std::vector<double> rs = ReferenceGrid(p.loop, r_given, grid);
  for (size_t i = 0; i < rs.size(); ++i) {
    json entry = {{"r", rs[i]}};
    for (const auto& [name, poly] : layers) {
      const auto verts = SliceVertices(*poly, rs[i], tol);
      const std::string file = "slice_" + std::to_string(i) + "_" + name + ".csv";
      if (!verts) {
        spdlog::warn("slice r={} of {} is unbounded; skipped", rs[i], name);
        entry[name] = {{"file", nullptr}, {"vertices", nullptr}};
        continue;
      }
      isoas::WriteFile(OutPath(o, file), Csv(*verts));
      entry[name] = {{"file", file}, {"vertices", verts->size()}};
    }
    index.push_back(std::move(entry));
  }
  isoas::WriteFile(OutPath(o, "slices.json"), Dump(index));
  std::cout << "slice: " << rs.size() << " reference values -> "
            << OutPath(o, "slices.json") << "\n";
  return kOk;
}

int CmdVerify(const CommonOptions& o, const isoas::VerifyOptions& vo,
              const std::string& target) {
  const isoas::Problem p = Load(o);
  const isoas::MoasResult moas =
      isoas::ComputeMoas(p.loop, p.spec.outc, p.spec.config);
  std::vector<isoas::Polyhedron> pieces;
  if (target == "moas") {
    pieces = {moas.O};
  } else {
    pieces = RunIsoas(p).pieces();
  }
  const isoas::VerificationReport rep =
      isoas::VerifySet(pieces, p.loop, p.spec.outc, moas.O, vo);
  json out = isoas::ToJson(rep);
  out["target"] = target;
  const std::string path = OutPath(o, "verify_" + target + ".json");
  isoas::WriteFile(path, Dump(out));
  std::cout << "verify " << target << ": " << rep.samples << " samples, "
            << rep.output_violations << " output violations, "
            << rep.invariance_violations << " invariance violations, "
            << rep.omega_nonmember << " omega non-members -> " << path << "\n";
  return rep.ok() ? kOk : kCheckFailed;
}

struct CompareOptions {
  std::vector<double> r;
  int grid = 4;
  int resolution = 81;
  int samples = 2000;
  double margin = 0.5;
  int T_max = 1000;
  std::uint64_t seed = 1;
};

int CmdCompare(const CommonOptions& o, const CompareOptions& co) {
  const isoas::Problem p = Load(o);
  RequirePlanar(p, "compare");
  const isoas::IsoasResult res = RunIsoas(p);
  const isoas::MoasResult moas =
      isoas::ComputeMoas(p.loop, p.spec.outc, p.spec.config);
  const isoas::Tolerances& tol = p.spec.config.tol;
  const double mtol = tol.feasibility;

  json report;
  report["config"] = p.spec.name;
  report["parameters"] = {{"resolution", co.resolution},
                          {"samples", co.samples},
                          {"margin", co.margin},
                          {"T_max", co.T_max},
                          {"seed", co.seed}};
  json per_r = json::array();
  bool all_ok = true;
  const std::vector<double> rs = ReferenceGrid(p.loop, co.r, co.grid);
  for (size_t i = 0; i < rs.size(); ++i) {
    const double r = rs[i];
    json entry = {{"r", r}};

    // Layers.
    std::vector<isoas::Polyhedron> slices;
    Eigen::Vector2d lo = Eigen::Vector2d::Constant(1e300);
    Eigen::Vector2d hi = Eigen::Vector2d::Constant(-1e300);
    const std::vector<std::pair<std::string, const isoas::Polyhedron*>> layers =
        {{"Q", &res.Q}, {"Q_up", &res.Q_up}, {"Q_lo", &res.Q_lo},
         {"moas", &moas.O}};
    std::vector<Eigen::Vector2d> moas_verts;
    for (const auto& [name, poly] : layers) {
      const auto verts = SliceVertices(*poly, r, tol);
      const std::string file =
          "compare_" + std::to_string(i) + "_" + name + ".csv";
      if (!verts) {
        throw isoas::PreconditionError("compare: slice of " + name +
                                       " is unbounded");
      }
      isoas::WriteFile(OutPath(o, file), Csv(*verts));
      entry["files"][name] = file;
      for (const auto& v : *verts) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
      }
      if (name == "moas") moas_verts = *verts;
    }

    // Õ∞ vertices must belong to Ω̃∞.
    int outside = 0;
    for (const auto& v : moas_verts) {
      const Eigen::Vector3d z(v(0), v(1), r);
      if (!res.Q.Contains(z, 1e-6) && !res.Q_up.Contains(z, 1e-6) &&
          !res.Q_lo.Contains(z, 1e-6)) {
        ++outside;
      }
    }
    entry["moas_vertices"] = moas_verts.size();
    entry["moas_vertices_outside_isoas"] = outside;

    // Grid over the slice box with omega membership.
    const Eigen::Vector2d pad = co.margin * (hi - lo).cwiseMax(1e-9);
    lo -= pad;
    hi += pad;
    int isoas_members = 0, moas_members = 0, isoas_only = 0;
    int member = 0, nonmember = 0, undecided = 0;
    int isoas_nonmember = 0, omega_outside_isoas = 0;
    std::string grid_csv = "x1,x2,isoas,moas,omega\n";
    const int m = std::max(2, co.resolution);
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) {
        const Eigen::Vector3d z(lo(0) + (hi(0) - lo(0)) * a / (m - 1.0),
                                lo(1) + (hi(1) - lo(1)) * b / (m - 1.0), r);
        const bool in_isoas = res.Q.Contains(z, mtol) ||
                              res.Q_up.Contains(z, mtol) ||
                              res.Q_lo.Contains(z, mtol);
        const bool in_moas = moas.O.Contains(z, mtol);
        const isoas::OmegaResult om = isoas::OmegaMembership(
            p.loop, p.spec.outc, moas.O, z, co.T_max, mtol);
        isoas_members += in_isoas;
        moas_members += in_moas;
        isoas_only += in_isoas && !in_moas;
        switch (om.verdict) {
          case isoas::OmegaVerdict::kMember:
            ++member;
            if (!in_isoas) ++omega_outside_isoas;
            break;
          case isoas::OmegaVerdict::kNonMember:
            ++nonmember;
            if (in_isoas) ++isoas_nonmember;
            break;
          case isoas::OmegaVerdict::kUndecided:
            ++undecided;
            break;
        }
        grid_csv += isoas::FormatDouble(z(0)) + "," +
                    isoas::FormatDouble(z(1)) + "," +
                    (in_isoas ? "1" : "0") + "," + (in_moas ? "1" : "0") +
                    "," + isoas::ToString(om.verdict) + "\n";
      }
    }
    const std::string grid_file = "compare_" + std::to_string(i) + "_omega.csv";
    isoas::WriteFile(OutPath(o, grid_file), grid_csv);
    entry["files"]["omega_grid"] = grid_file;
    entry["grid"] = {{"points", m * m},
                     {"isoas_members", isoas_members},
                     {"moas_members", moas_members},
                     {"isoas_not_moas", isoas_only},
                     {"omega_member", member},
                     {"omega_nonmember", nonmember},
                     {"omega_undecided", undecided},
                     {"isoas_members_omega_nonmember", isoas_nonmember},
                     {"omega_members_outside_isoas", omega_outside_isoas}};
    const bool moas_subset = outside == 0;
    const bool strict = isoas_only > 0;
    const bool sound = isoas_nonmember == 0;
    entry["claims"] = {{"moas_subset_isoas", moas_subset},
                       {"moas_strict_subset_isoas", strict},
                       {"isoas_subset_omega", sound}};
    all_ok = all_ok && moas_subset && strict && sound;
    per_r.push_back(std::move(entry));
  }
  report["slices"] = std::move(per_r);

  // Sampled check of Ω̃∞ against the rollout test over the whole band.
  const auto samples = isoas::SampleUnion(res.pieces(), co.samples, co.seed);
  int s_nonmember = 0, s_not_moas = 0;
  for (const auto& z : samples) {
    if (!moas.O.Contains(z, mtol)) ++s_not_moas;
    if (isoas::OmegaMembership(p.loop, p.spec.outc, moas.O, z, co.T_max, mtol)
            .verdict == isoas::OmegaVerdict::kNonMember) {
      ++s_nonmember;
    }
  }
  report["sampled"] = {{"samples", samples.size()},
                       {"outside_moas", s_not_moas},
                       {"omega_nonmember", s_nonmember}};
  all_ok = all_ok && s_nonmember == 0;
  report["ok"] = all_ok;

  const std::string path = OutPath(o, "compare.json");
  isoas::WriteFile(path, Dump(report));
  std::cout << "compare: " << rs.size() << " slices, chain "
            << (all_ok ? "holds" : "FAILS") << " -> " << path << "\n";
  return all_ok ? kOk : kCheckFailed;
}

int CmdSimulate(const CommonOptions& o, const std::vector<double>& x0, double r,
                int steps) {
  const isoas::Problem p = Load(o);
  if (static_cast<int>(x0.size()) != p.loop.n()) {
    throw isoas::ConfigError("--x0 must have n entries",
                             {"--x0: expected " + std::to_string(p.loop.n()) +
                              " values"});
  }
  const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(
      x0.data(), static_cast<Eigen::Index>(x0.size()));
  const isoas::Trajectory traj = isoas::Simulate(p.loop, x, r, steps);
  std::ostringstream os;
  isoas::WriteTrajectoryCsv(os, traj);
  const std::string path = OutPath(o, "trajectory.csv");
  isoas::WriteFile(path, os.str());
  std::cout << "simulate: " << steps << " steps -> " << path << "\n";
  return kOk;
}

int ReportError(int code, const std::string& type, const std::string& message,
                const std::vector<std::string>& details = {}) {
  json err = {{"error", {{"type", type},
                         {"message", message},
                         {"details", details},
                         {"exit_code", code}}}};
  std::cerr << err.dump() << "\n";
  return code;
}

void SetupLogging() {
  auto logger = spdlog::stderr_color_mt("isoas");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("ISOAS_LOG")) {
    spdlog::set_level(spdlog::level::from_str(env));
  }
}

}  // namespace

int main(int argc, char** argv) {
  SetupLogging();
  CLI::App app{"Input-saturated output-admissible set toolkit"};
  app.require_subcommand(1);

  CommonOptions common;
  bool trace = false;
  std::vector<double> r_values;
  int grid = 21;
  isoas::VerifyOptions vo;
  std::string target = "isoas";
  CompareOptions co;
  std::vector<double> x0;
  double r_sim = 0.0;
  int steps = 100;

  auto* moas = app.add_subcommand("moas", "Compute the maximal output "
                                          "admissible set");
  AddCommon(moas, &common);

  auto* isoas_cmd = app.add_subcommand("isoas", "Compute the input-saturated "
                                                "output-admissible set");
  AddCommon(isoas_cmd, &common);
  isoas_cmd->add_flag("--trace", trace, "Write trace.jsonl");

  auto* slice = app.add_subcommand("slice", "Write vertex CSVs of r-slices");
  AddCommon(slice, &common);
  slice->add_option("--r", r_values, "Reference values (repeatable)");
  slice->add_option("--grid", grid, "Evenly spaced r values over the band")
      ->check(CLI::PositiveNumber);

  auto* verify = app.add_subcommand("verify", "Monte Carlo certification");
  AddCommon(verify, &common);
  verify->add_option("--samples", vo.n_samples, "Accepted samples")
      ->check(CLI::PositiveNumber);
  verify->add_option("--horizon", vo.T, "Rollout length")
      ->check(CLI::PositiveNumber);
  verify->add_option("--seed", vo.seed, "Random seed");
  verify->add_option("--omega-samples", vo.omega_samples,
                     "Samples also checked by the rollout membership test");
  verify->add_option("--target", target, "Set to verify")
      ->check(CLI::IsMember({"isoas", "moas"}));

  auto* compare = app.add_subcommand("compare", "Containment report between "
                                                "MOAS, ISOAS and rollout");
  AddCommon(compare, &common);
  compare->add_option("--r", co.r, "Reference values (repeatable)");
  compare->add_option("--grid", co.grid, "Evenly spaced r values")
      ->check(CLI::PositiveNumber);
  compare->add_option("--resolution", co.resolution, "Grid points per axis")
      ->check(CLI::PositiveNumber);
  compare->add_option("--samples", co.samples, "Sampled ISOAS members");
  compare->add_option("--margin", co.margin, "Relative grid box padding");
  compare->add_option("--t-max", co.T_max, "Rollout horizon");
  compare->add_option("--seed", co.seed, "Random seed");

  auto* simulate = app.add_subcommand("simulate", "Saturated rollout");
  AddCommon(simulate, &common);
  simulate->add_option("--x0", x0, "Initial state")->required()->delimiter(',');
  simulate->add_option("--r", r_sim, "Reference");
  simulate->add_option("--steps", steps, "Steps")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return ReportError(kConfig, "usage", e.what());
  }

  try {
    if (*moas) return CmdMoas(common);
    if (*isoas_cmd) return CmdIsoas(common, trace);
    if (*slice) return CmdSlice(common, r_values, grid);
    if (*verify) return CmdVerify(common, vo, target);
    if (*compare) return CmdCompare(common, co);
    if (*simulate) return CmdSimulate(common, x0, r_sim, steps);
  } catch (const isoas::ValidationError& e) {
    return ReportError(kValidation, "validation", e.what(), e.details());
  } catch (const isoas::ConfigError& e) {
    return ReportError(kConfig, "config", e.what(), e.details());
  } catch (const isoas::CapExceededError& e) {
    return ReportError(kCap, "cap_exceeded", e.what());
  } catch (const isoas::SolverError& e) {
    return ReportError(kSolver, "solver", e.what());
  } catch (const std::exception& e) {
    return ReportError(kOther, "error", e.what());
  }
  return kOther;
}
