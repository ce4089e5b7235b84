#include "isoas/isoas.hpp"

#include <string>

#include "isoas/errors.hpp"

namespace isoas {

using Eigen::MatrixXd;
using Eigen::VectorXd;

bool Membership(const IsoasResult& result,
                const Eigen::Ref<const VectorXd>& z, double tol) {
  return result.Q.Contains(z, tol) || result.Q_up.Contains(z, tol) ||
         result.Q_lo.Contains(z, tol);
}

MoasResult ComputeMoas(const SaturatedLoop& loop,
                       const OutputConstraints& outc, const IsoasConfig& cfg) {
  const int d = loop.z_dim();
  const Eigen::RowVectorXd& w = loop.control_row();
  const Generation outputs = NonSaturatedSeed(loop, outc);

  Generation seed{MatrixXd(2 + outputs.rows(), d), VectorXd(2 + outputs.rows())};
  seed.H << w, -w, outputs.H;
  seed.h << loop.u_hi(), -loop.u_lo(), outputs.h;

  PropagationConfig pc = cfg.propagation();
  PropagationResult res = Propagate(ReferenceBand(loop), seed,
                                    NonSaturatedStep(loop), RegionTag::kMoas,
                                    false, pc);
  return MoasResult{std::move(res.Q), res.steps, std::move(res.bundle)};
}

ConstraintBundle ErosionFilter(const ConstraintBundle& sat_bundle,
                               const Polyhedron& sat_region,
                               const Generation& nonsat_rows,
                               const Tolerances& tol, int* dropped) {
  const Polyhedron context = Intersect(sat_region, nonsat_rows);
  ConstraintBundle out(sat_bundle.dim(), sat_bundle.origin());
  int removed = 0;
  for (const Generation& gen : sat_bundle.generations()) {
    std::vector<int> keep;
    for (int l = 0; l < gen.rows(); ++l) {
      const LpResult res = LpSolve(gen.H.row(l).transpose(), context, tol);
      bool omit = false;
      if (res.status == LpStatus::kInfeasible) {
        omit = true;
      } else if (res.optimal()) {
        omit = *res.value <= gen.h(l) + tol.redundancy * gen.H.row(l).norm();
      }
      if (omit) {
        ++removed;
      } else {
        keep.push_back(l);
      }
    }
    Generation kept{MatrixXd(keep.size(), sat_bundle.dim()),
                    VectorXd(keep.size())};
    for (size_t i = 0; i < keep.size(); ++i) {
      kept.H.row(i) = gen.H.row(keep[i]);
      kept.h(i) = gen.h(keep[i]);
    }
    out.Append(std::move(kept));
  }
  if (dropped != nullptr) *dropped = removed;
  return out;
}

IsoasResult ComputeIsoas(const SaturatedLoop& loop,
                         const OutputConstraints& outc,
                         const IsoasConfig& cfg) {
  const int d = loop.z_dim();
  const PropagationConfig pc = cfg.propagation();

  IsoasResult result;
  result.regions = BuildRegions(loop);
  const auto auth = ComputeControlAuthority(loop.plant(), loop.K(), loop.u_hi(),
                                            loop.u_lo(), loop.eps());

  std::array<AffineStep, 3> steps = {NonSaturatedStep(loop),
                                     SaturatedStep(loop, loop.u_hi()),
                                     SaturatedStep(loop, loop.u_lo())};
  const std::array<RegionTag, 3> tags = {RegionTag::kNonSaturated,
                                         RegionTag::kUpperSaturated,
                                         RegionTag::kLowerSaturated};
  const std::array<const Polyhedron*, 3> base = {
      &result.regions.S, &result.regions.S_up, &result.regions.S_lo};

  std::array<Polyhedron, 3> sets = {result.regions.S, result.regions.S_up,
                                    result.regions.S_lo};
  std::array<Generation, 3> seeds = {NonSaturatedSeed(loop, outc),
                                     UpperSeed(loop, outc, auth.upper),
                                     LowerSeed(loop, outc, auth.lower)};
  Generation nonsat_rows = EmptyGeneration(d);

  for (int i = 0;; ++i) {
    if (i > 0 && seeds[kNonSat].empty() && seeds[kUpper].empty() &&
        seeds[kLower].empty()) {
      break;
    }
    if (i > cfg.i_max) {
      throw CapExceededError(
          "constraint sharing did not converge within i_max = " +
          std::to_string(cfg.i_max) +
          " outer iterations (possible limit cycle or tolerances too tight)");
    }

    IterationRecord rec;
    rec.i = i;
    std::array<ConstraintBundle, 3> bundles = rec.bundles;
    for (int r = 0; r < 3; ++r) {
      rec.seeded[r] = seeds[r].empty()
                          ? sets[r]
                          : Intersect(sets[r], NormalizeRows(seeds[r]));
      rec.seed_rows[r] = seeds[r].rows();
      const bool prevent = r != kNonSat && cfg.empty_set_prevention;
      PropagationResult pr =
          Propagate(sets[r], seeds[r], steps[r], tags[r], prevent, pc);
      sets[r] = pr.Q;
      rec.result[r] = pr.Q;
      rec.steps[r] = pr.steps;
      rec.bundle_rows[r] = pr.bundle.total_rows();
      if (r != kNonSat) rec.prevention_dropped[r - 1] = pr.prevention_dropped;
      bundles[r] = std::move(pr.bundle);
    }
    rec.bundles = bundles;

    const Generation new_nonsat = bundles[kNonSat].Flatten();
    nonsat_rows = Stack({&nonsat_rows, &new_nonsat}, d);

    std::array<Generation, 3> shared;
    shared[kNonSat] = new_nonsat;
    for (int r : {kUpper, kLower}) {
      if (cfg.erosion_prevention) {
        int dropped = 0;
        bundles[r] = ErosionFilter(bundles[r], *base[r], nonsat_rows, cfg.tol,
                                   &dropped);
        rec.erosion_dropped[r - 1] = dropped;
      }
      shared[r] = bundles[r].Flatten();
    }
    seeds[kNonSat] = Stack({&shared[kUpper], &shared[kLower]}, d);
    seeds[kUpper] = Stack({&shared[kNonSat], &shared[kLower]}, d);
    seeds[kLower] = Stack({&shared[kUpper], &shared[kNonSat]}, d);

    result.outer_iterations = i;
    result.trace.push_back(std::move(rec));
  }

  result.Q = sets[kNonSat];
  result.Q_up = sets[kUpper];
  result.Q_lo = sets[kLower];
  return result;
}

}  // namespace isoas
