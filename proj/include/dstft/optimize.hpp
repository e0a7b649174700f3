#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "dstft/objectives.hpp"

namespace dstft {

enum class Algorithm { PlainGD, AdamLike };

struct OptimConfig {
  Algorithm algorithm = Algorithm::AdamLike;
  double lr_theta = 1.0;
  double lr_position = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int max_iters = 300;
  double rel_tol = 1e-6;
  bool train_lengths = true;
  bool train_positions = false;
  // Projection bounds; theta is always clamped to [theta_min, support].
  double theta_min = kThetaMin;
  double position_min = -std::numeric_limits<double>::infinity();
  double position_max = std::numeric_limits<double>::infinity();
  double alpha_min = 0.01;  // overlap-ratio clamp when positions train
  double alpha_max = 0.99;
};

struct OptimResult {
  DstftPlan plan;
  std::vector<double> loss_trace;       // loss at each visited iterate
  std::vector<double> grad_norm_trace;  // matching L2 norms over trained groups
  int iterations_used = 0;
  bool converged = false;
  std::uint64_t forward_evals = 0;   // transform passes issued by the loop
  std::uint64_t backward_evals = 0;
};

// Mean objective value over the signals and its gradient in the plan's
// parameterization, combining the cotangent path with any direct terms.
ParamGradients total_gradient(const DstftPlan& plan, const std::vector<Signal>& signals,
                              const Objective& objective, double* value_out = nullptr);

// Full-batch projected gradient descent over the plan's trainable groups.
// Deterministic; stops when the relative loss change drops below rel_tol or
// max_iters is reached. Throws DivergenceError on non-finite loss/gradient.
OptimResult fit(const DstftPlan& init, const std::vector<Signal>& signals,
                const Objective& objective, const OptimConfig& cfg);

struct SweepPoint {
  double theta;
  double value;
};

// Objective value on a constant-length grid theta = lo, lo+step, ..., hi,
// holding every other plan field fixed. The discrete-search baseline.
std::vector<SweepPoint> sweep_theta(const DstftPlan& tmpl, const std::vector<Signal>& signals,
                                    const Objective& objective, double lo, double hi,
                                    double step);

// Reusable Adam accumulator for one parameter vector.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long long step_count = 0;

  void step(std::vector<double>& params, const std::vector<double>& grads, double lr,
            const OptimConfig& cfg);
};

}  // namespace dstft
