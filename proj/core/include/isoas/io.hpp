#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "isoas/geometry.hpp"
#include "isoas/isoas.hpp"
#include "isoas/model.hpp"
#include "isoas/oracle.hpp"

namespace isoas {

/// Parsed problem configuration, before any model validation.
struct ProblemSpec {
  std::string name;
  Plant plant;
  OutputConstraints outc;
  // Exactly one of K and the LQR weights is set.
  std::optional<Eigen::RowVectorXd> K;
  std::optional<Eigen::MatrixXd> lqr_Q;
  double lqr_R = 1.0;
  double u_min = 0.0;
  double u_max = 0.0;
  double epsilon = 0.01;
  ReferenceScaling scaling = ReferenceScaling::kInput;
  IsoasConfig config;
};

/// A validated problem ready for computation.
struct Problem {
  ProblemSpec spec;
  Eigen::RowVectorXd K;
  std::optional<LqrResult> lqr;
  Diagnostics diagnostics;
  SaturatedLoop loop;
};

/// Schema check of a problem document. Throws ConfigError whose details list
/// every offending field.
ProblemSpec ParseProblem(const nlohmann::json& doc);

/// Computes the gain (via LQR when requested), runs the model diagnostics and
/// builds the saturated loop. Throws ValidationError carrying the diagnostics
/// when a standing assumption fails.
Problem BuildProblem(const ProblemSpec& spec);

/// Reads, parses and builds a problem file.
Problem LoadProblem(const std::string& path);

nlohmann::json ToJson(const Eigen::MatrixXd& M);
nlohmann::json ToJson(const Eigen::VectorXd& v);
nlohmann::json ToJson(const Polyhedron& poly);
Polyhedron PolyhedronFromJson(const nlohmann::json& doc);

/// {"Q","Q_up","Q_lo","moas","meta"}.
nlohmann::json ExportSets(const IsoasResult& result, const MoasResult& moas,
                          const Problem& problem);
nlohmann::json ExportMoas(const MoasResult& moas, const Problem& problem);
/// One JSON object per outer iteration, for line-delimited traces.
nlohmann::json TraceRecord(const IterationRecord& rec);
nlohmann::json ToJson(const VerificationReport& report);
nlohmann::json ToJson(const Diagnostics& diag);

/// Formats a double with 17 significant digits.
std::string FormatDouble(double v);

/// Vertex loops as CSV with header "vertex_index,x1,x2"; polygons are
/// separated by one blank line. An empty polygon writes the header only.
void WriteVertexCsv(std::ostream& out,
                    const std::vector<std::vector<Eigen::Vector2d>>& polygons);
/// Columns k, x1..xn, u, y1..yl, r.
void WriteTrajectoryCsv(std::ostream& out, const Trajectory& traj);

/// Writes text to a file, throwing std::runtime_error on failure.
void WriteFile(const std::string& path, const std::string& text);

}  // namespace isoas
