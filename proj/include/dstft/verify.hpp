#pragma once

#include <utility>
#include <vector>

#include "dstft/objectives.hpp"

namespace dstft {

// Direct triple-loop evaluation of the transform, sharing only the window
// module with the fast path. Ground truth for forward().
TfMatrix naive_dstft(const DstftPlan& plan, const Signal& signal);

enum class ParamKind { Length, Position };

// One scalar parameter of a plan: an entry of the length field or of the
// position field, in their native layouts.
struct ParamSelector {
  ParamKind kind = ParamKind::Length;
  int index = 0;
};

// Default central-difference step for a parameter value. Length parameters
// scale the step with the value; position parameters keep an absolute step,
// since the loss curvature in t is set by the phase rate, not by |t|.
double fd_step(ParamKind kind, double param);

// Central difference of the mean objective over the signals with respect to
// one plan parameter, recomputing the full pipeline at p +/- h.
double finite_diff(const DstftPlan& plan, const std::vector<Signal>& signals,
                   const Objective& objective, ParamSelector which, double h);
double finite_diff(const DstftPlan& plan, const Signal& signal, const Objective& objective,
                   ParamSelector which, double h);

struct VjpEntry {
  ParamSelector param;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_err = 0.0;
  bool degenerate = false;  // both sides below the zero floor
};

struct VjpReport {
  std::vector<VjpEntry> entries;
  double max_rel_err = 0.0;  // over non-degenerate entries
  int degenerate_count = 0;

  bool pass(double tol) const { return max_rel_err <= tol; }
};

// Compare every analytic parameter gradient against central differences.
// Entries where both sides are below zero_floor are marked degenerate and
// excluded from max_rel_err.
VjpReport vjp_check(const DstftPlan& plan, const std::vector<Signal>& signals,
                    const Objective& objective, double zero_floor = 1e-9);

struct ProbeRow {
  int num_frames = 0;
  int support = 0;
  double forward_seconds = 0.0;
  double backward_seconds = 0.0;
};

// Median-of-5 wall-clock timings of forward and backward per (N, L) size.
// Everything here runs single-threaded so scaling ratios stay interpretable.
std::vector<ProbeRow> complexity_probe(LengthMode mode,
                                       const std::vector<std::pair<int, int>>& sizes);

}  // namespace dstft
