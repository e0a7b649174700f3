#include "dstft/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dstft/errors.hpp"
#include "dstft/grad.hpp"

namespace dstft {

namespace {

bool all_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

// Clamp every trainable group back into its feasible box. Entries of
// VaryingHop beyond the first are strides, not positions, so only the
// leading offset sees the position bounds.
void project(DstftPlan& plan, const OptimConfig& cfg) {
  const double theta_lo = std::max(cfg.theta_min, kThetaMin);
  const double theta_hi = static_cast<double>(plan.window.support);
  for (double& th : plan.lengths.values) th = std::clamp(th, theta_lo, theta_hi);
  switch (plan.positions.mode) {
    case PositionMode::Explicit:
      for (double& t : plan.positions.values) {
        t = std::clamp(t, cfg.position_min, cfg.position_max);
      }
      break;
    case PositionMode::UniformHop:
    case PositionMode::VaryingHop:
      if (!plan.positions.values.empty()) {
        plan.positions.values[0] =
            std::clamp(plan.positions.values[0], cfg.position_min, cfg.position_max);
      }
      break;
    case PositionMode::FixedOverlap:
      plan.positions.values[0] =
          std::clamp(plan.positions.values[0], cfg.alpha_min, cfg.alpha_max);
      plan.positions.values[1] =
          std::clamp(plan.positions.values[1], cfg.position_min, cfg.position_max);
      break;
  }
}

double trained_norm(const ParamGradients& g, const OptimConfig& cfg) {
  double acc = 0.0;
  if (cfg.train_lengths) {
    for (double x : g.d_lengths) acc += x * x;
  }
  if (cfg.train_positions) {
    for (double x : g.d_positions) acc += x * x;
  }
  return std::sqrt(acc);
}

}  // namespace

void AdamState::step(std::vector<double>& params, const std::vector<double>& grads, double lr,
                     const OptimConfig& cfg) {
  if (m.size() != params.size()) {
    m.assign(params.size(), 0.0);
    v.assign(params.size(), 0.0);
    step_count = 0;
  }
  ++step_count;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step_count));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step_count));
  for (size_t i = 0; i < params.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grads[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
    params[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.adam_eps);
  }
}

ParamGradients total_gradient(const DstftPlan& plan, const std::vector<Signal>& signals,
                              const Objective& objective, double* value_out) {
  if (signals.empty()) throw std::invalid_argument("total_gradient: signal set is empty");
  ParamGradients acc = zero_gradients(plan);
  double value = 0.0;
  for (size_t j = 0; j < signals.size(); ++j) {
    const TfMatrix tf = forward(plan, signals[j]);
    const EvalResult res = objective.evaluate(plan, signals[j], tf, static_cast<int>(j));
    value += res.value;
    if (res.cotangent) {
      acc.add_scaled(backward(plan, signals[j], *res.cotangent), 1.0);
    }
    if (res.d_length_field) {
      if (res.d_length_field->size() != acc.d_lengths.size()) {
        throw std::invalid_argument("total_gradient: length-field gradient size mismatch");
      }
      for (size_t i = 0; i < acc.d_lengths.size(); ++i) {
        acc.d_lengths[i] += (*res.d_length_field)[i];
      }
    }
    if (res.d_theta_per_frame) {
      chain_lengths_per_frame(plan, *res.d_theta_per_frame, acc);
    }
    if (res.d_positions_resolved) {
      chain_positions(plan, *res.d_positions_resolved, acc);
    }
  }
  const double inv = 1.0 / static_cast<double>(signals.size());
  acc.scale(inv);
  if (value_out) *value_out = value * inv;
  return acc;
}

OptimResult fit(const DstftPlan& init, const std::vector<Signal>& signals,
                const Objective& objective, const OptimConfig& cfg) {
  if (signals.empty()) throw std::invalid_argument("fit: signal set is empty");
  if (!(cfg.lr_theta > 0.0) || !(cfg.lr_position > 0.0)) {
    throw std::invalid_argument("fit: learning rates must be positive");
  }
  if (cfg.max_iters <= 0) throw std::invalid_argument("fit: max_iters must be positive");
  if (!(cfg.theta_min >= kThetaMin)) {
    throw std::invalid_argument("fit: theta_min below the window-length domain");
  }

  DstftPlan plan = init;
  project(plan, cfg);
  plan.validate();

  OptimResult result;
  AdamState theta_state;
  AdamState position_state;
  const std::uint64_t fwd0 = forward_call_count();
  const std::uint64_t bwd0 = backward_call_count();

  // The returned plan is the best iterate visited, not the last one: the
  // adaptive update is free to overshoot near a minimum, and the step taken
  // after the final evaluation is never measured at all.
  DstftPlan best_plan = plan;
  double best_loss = std::numeric_limits<double>::infinity();

  double prev_loss = 0.0;
  for (int it = 0; it < cfg.max_iters; ++it) {
    double loss = 0.0;
    const ParamGradients grad = total_gradient(plan, signals, objective, &loss);
    if (!std::isfinite(loss)) {
      throw DivergenceError("fit: non-finite loss at iteration " + std::to_string(it));
    }
    if (!all_finite(grad.d_lengths) || !all_finite(grad.d_positions)) {
      throw DivergenceError("fit: non-finite gradient at iteration " + std::to_string(it));
    }
    result.loss_trace.push_back(loss);
    result.grad_norm_trace.push_back(trained_norm(grad, cfg));
    result.iterations_used = it + 1;
    if (loss < best_loss) {
      best_loss = loss;
      best_plan = plan;
    }
    if (it > 0) {
      const double denom = std::max({std::abs(prev_loss), std::abs(loss), 1e-300});
      if (std::abs(loss - prev_loss) / denom < cfg.rel_tol) {
        result.converged = true;
        break;
      }
    }
    prev_loss = loss;

    if (cfg.train_lengths && !plan.lengths.values.empty()) {
      if (cfg.algorithm == Algorithm::AdamLike) {
        theta_state.step(plan.lengths.values, grad.d_lengths, cfg.lr_theta, cfg);
      } else {
        for (size_t i = 0; i < plan.lengths.values.size(); ++i) {
          plan.lengths.values[i] -= cfg.lr_theta * grad.d_lengths[i];
        }
      }
    }
    if (cfg.train_positions && !plan.positions.values.empty()) {
      if (cfg.algorithm == Algorithm::AdamLike) {
        position_state.step(plan.positions.values, grad.d_positions, cfg.lr_position, cfg);
      } else {
        for (size_t i = 0; i < plan.positions.values.size(); ++i) {
          plan.positions.values[i] -= cfg.lr_position * grad.d_positions[i];
        }
      }
    }
    project(plan, cfg);
  }

  result.plan = best_plan;
  result.forward_evals = forward_call_count() - fwd0;
  result.backward_evals = backward_call_count() - bwd0;
  return result;
}

std::vector<SweepPoint> sweep_theta(const DstftPlan& tmpl, const std::vector<Signal>& signals,
                                    const Objective& objective, double lo, double hi,
                                    double step) {
  if (signals.empty()) throw std::invalid_argument("sweep_theta: signal set is empty");
  if (!(step > 0.0)) throw std::invalid_argument("sweep_theta: step must be positive");
  if (lo > hi) throw std::invalid_argument("sweep_theta: empty range");
  if (lo < kThetaMin || hi > static_cast<double>(tmpl.window.support)) {
    throw std::domain_error("sweep_theta: range outside [2, support]");
  }

  DstftPlan probe = tmpl;
  const long long count = static_cast<long long>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<SweepPoint> curve;
  curve.reserve(static_cast<size_t>(count));
  for (long long i = 0; i < count; ++i) {
    const double theta = std::min(lo + static_cast<double>(i) * step, hi);
    probe.lengths = LengthField::constant(theta);
    probe.validate();
    double value = 0.0;
    for (size_t j = 0; j < signals.size(); ++j) {
      const TfMatrix tf = forward(probe, signals[j]);
      value += objective.evaluate(probe, signals[j], tf, static_cast<int>(j)).value;
    }
    curve.push_back({theta, value / static_cast<double>(signals.size())});
  }
  return curve;
}

}  // namespace dstft
