#include "isoas/propagation.hpp"

#include <string>

#include "isoas/errors.hpp"

namespace isoas {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

ControlAuthorityPair ComputeControlAuthority(const Plant& plant,
                                             const RowVectorXd& K,
                                             double u_hi, double u_lo,
                                             double eps) {
  const int n = plant.n();
  ControlAuthorityPair out;
  Eigen::FullPivLU<MatrixXd> lu(MatrixXd::Identity(n, n) - plant.A);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) return out;

  const VectorXd gain_dir = lu.solve(plant.B.col(0));
  const double condition = 1.0 + K.dot(gain_dir);
  const bool applicable = condition <= 0.0;

  auto fill = [&](ControlAuthority* auth, double u_sat, double row_sign) {
    auth->x_bar = gain_dir * u_sat;
    auth->condition_value = condition;
    auth->applicable = applicable;
    if (!applicable) return;
    RowVectorXd row = RowVectorXd::Zero(n + 1);
    row.head(n) = row_sign * K;
    auth->row = row;
    auth->offset = row_sign * (1.0 - 0.5 * eps) * K.dot(*auth->x_bar);
  };
  fill(&out.upper, u_hi, -1.0);
  fill(&out.lower, u_lo, 1.0);
  return out;
}

Generation AffineStep::PullBack(const Generation& gen) const {
  if (gen.rows() == 0) return gen;
  return Generation{gen.H * M, gen.h - gen.H * m};
}

AffineStep NonSaturatedStep(const SaturatedLoop& loop) {
  const int n = loop.n();
  AffineStep step{MatrixXd::Zero(n + 1, n + 1), VectorXd::Zero(n + 1)};
  step.M.topLeftCorner(n, n) = loop.closed().A_hat;
  step.M.topRightCorner(n, 1) = loop.closed().B_hat;
  step.M(n, n) = 1.0;
  return step;
}

AffineStep SaturatedStep(const SaturatedLoop& loop, double u_sat) {
  const int n = loop.n();
  AffineStep step{MatrixXd::Zero(n + 1, n + 1), VectorXd::Zero(n + 1)};
  step.M.topLeftCorner(n, n) = loop.plant().A;
  step.M(n, n) = 1.0;
  step.m.head(n) = loop.plant().B.col(0) * u_sat;
  return step;
}

Generation NonSaturatedSeed(const SaturatedLoop& loop,
                            const OutputConstraints& outc) {
  const int n = loop.n();
  MatrixXd CD(loop.plant().l(), n + 1);
  CD << loop.closed().C_hat, loop.closed().D_hat;
  return Generation{outc.H * CD, outc.h};
}

namespace {

Generation SaturatedSeed(const SaturatedLoop& loop,
                         const OutputConstraints& outc, double u_sat,
                         const ControlAuthority& auth) {
  const int n = loop.n();
  const int m = static_cast<int>(outc.h.size());
  const int extra = auth.applicable ? 1 : 0;
  Generation seed{MatrixXd::Zero(m + extra, n + 1), VectorXd(m + extra)};
  seed.H.topLeftCorner(m, n) = outc.H * loop.plant().C;
  seed.h.head(m) = outc.h - outc.H * loop.plant().D.col(0) * u_sat;
  if (auth.applicable) {
    seed.H.row(m) = *auth.row;
    seed.h(m) = auth.offset;
  }
  return seed;
}

void CheckRowCap(int rows, const PropagationConfig& cfg, RegionTag tag) {
  if (rows > cfg.row_cap) {
    throw CapExceededError(std::string("propagation in ") + ToString(tag) +
                           ": retained rows exceed cap " +
                           std::to_string(cfg.row_cap));
  }
}

}  // namespace

Generation UpperSeed(const SaturatedLoop& loop, const OutputConstraints& outc,
                     const ControlAuthority& auth) {
  return SaturatedSeed(loop, outc, loop.u_hi(), auth);
}

Generation LowerSeed(const SaturatedLoop& loop, const OutputConstraints& outc,
                     const ControlAuthority& auth) {
  return SaturatedSeed(loop, outc, loop.u_lo(), auth);
}

Generation EmptySetPrevention(const Generation& gen1, const Generation& gen2,
                              const Generation& gen0,
                              const Polyhedron& region, const Tolerances& tol,
                              int* dropped) {
  if (gen1.rows() != gen2.rows()) {
    throw InputError("EmptySetPrevention: H1 and H2 must be row-aligned");
  }
  const int dim = region.dim();
  const int m0 = gen0.rows();
  const int mr = region.rows();
  MatrixXd H(1 + m0 + mr, dim);
  VectorXd h(1 + m0 + mr);
  if (m0 > 0) {
    H.middleRows(1, m0) = gen0.H;
    h.segment(1, m0) = gen0.h;
  }
  if (mr > 0) {
    H.bottomRows(mr) = region.H();
    h.tail(mr) = region.h();
  }

  std::vector<int> keep;
  for (int l = 0; l < gen1.rows(); ++l) {
    H.row(0) = gen2.H.row(l);
    h(0) = gen2.h(l);
    const LpResult res =
        SolveLp(gen1.H.row(l).transpose(), H, h, tol.lp());
    bool drop = false;
    if (res.status == LpStatus::kInfeasible) {
      drop = true;
    } else if (res.optimal()) {
      drop = *res.value <= gen1.h(l) + tol.redundancy * gen1.H.row(l).norm();
    }
    if (!drop) keep.push_back(l);
  }
  if (dropped != nullptr) *dropped = gen1.rows() - static_cast<int>(keep.size());

  Generation out{MatrixXd(keep.size(), dim), VectorXd(keep.size())};
  for (size_t i = 0; i < keep.size(); ++i) {
    out.H.row(i) = gen1.H.row(keep[i]);
    out.h(i) = gen1.h(keep[i]);
  }
  return out;
}

PropagationResult Propagate(const Polyhedron& region, const Generation& seed,
                            const AffineStep& step, RegionTag tag,
                            bool prevent_empty, const PropagationConfig& cfg) {
  const int dim = region.dim();
  if (seed.rows() > 0 && seed.H.cols() != dim) {
    throw InputError("Propagate: seed dimension does not match region");
  }
  if (step.M.rows() != dim || step.M.cols() != dim || step.m.size() != dim) {
    throw InputError("Propagate: dynamics dimension does not match region");
  }

  PropagationResult result{region, ConstraintBundle(dim, tag), 0, {}, 0};
  if (seed.rows() == 0) return result;

  // H_1 is pulled back from the whole seed: a seed row that is redundant at
  // k = 0 can still constrain the successor.
  const Generation full_seed = NormalizeRows(seed);
  Generation current = RemoveRedundantRows(full_seed, region, cfg.tol);
  result.trace.push_back(StepRecord{0, full_seed.rows(), current.rows()});

  std::vector<Generation> retained;
  int total_rows = 0;
  int k = 0;
  while (k == 0 || !current.empty()) {
    total_rows += current.rows();
    CheckRowCap(total_rows, cfg, tag);
    retained.push_back(current);

    Generation next = step.PullBack(k == 0 ? full_seed : current);
    if (prevent_empty && k == 1) {
      int dropped = 0;
      Generation reduced = EmptySetPrevention(current, next, retained.front(),
                                              region, cfg.tol, &dropped);
      result.prevention_dropped = dropped;
      total_rows -= dropped;
      result.trace.back().kept_rows = reduced.rows();
      next = step.PullBack(reduced);
      retained.back() = std::move(reduced);
    }
    next = NormalizeRows(next);

    ++k;
    if (k > cfg.k_max) {
      throw CapExceededError(std::string("propagation in ") + ToString(tag) +
                             " did not terminate within k_max = " +
                             std::to_string(cfg.k_max) + " steps");
    }
    std::vector<const Generation*> parts;
    for (const auto& g : retained) parts.push_back(&g);
    const Polyhedron context = Intersect(region, Stack(parts, dim));
    const int raw = next.rows();
    current = RemoveRedundantRows(next, context, cfg.tol);
    result.trace.push_back(StepRecord{k, raw, current.rows()});
  }

  for (auto& g : retained) result.bundle.Append(std::move(g));
  result.steps = k;
  result.Q = Intersect(region, result.bundle.Flatten());
  return result;
}

PropagationResult PropagateNonSaturated(const Polyhedron& region,
                                        const Generation& seed,
                                        const SaturatedLoop& loop,
                                        const PropagationConfig& cfg) {
  return Propagate(region, seed, NonSaturatedStep(loop),
                   RegionTag::kNonSaturated, false, cfg);
}

PropagationResult PropagateUpper(const Polyhedron& region,
                                 const Generation& seed,
                                 const SaturatedLoop& loop,
                                 const PropagationConfig& cfg) {
  return Propagate(region, seed, SaturatedStep(loop, loop.u_hi()),
                   RegionTag::kUpperSaturated, cfg.empty_set_prevention, cfg);
}

PropagationResult PropagateLower(const Polyhedron& region,
                                 const Generation& seed,
                                 const SaturatedLoop& loop,
                                 const PropagationConfig& cfg) {
  return Propagate(region, seed, SaturatedStep(loop, loop.u_lo()),
                   RegionTag::kLowerSaturated, cfg.empty_set_prevention, cfg);
}

}  // namespace isoas
