#include <cmath>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "dstft/errors.hpp"
#include "dstft/optimize.hpp"
#include "dstft/pipelines.hpp"
#include "dstft/signals.hpp"
#include "support.hpp"

using namespace dstft;

namespace {

// Convex quadratic in the constant window length, bypassing the transform.
class QuadraticTheta final : public Objective {
 public:
  explicit QuadraticTheta(double target) : target_(target) {}
  EvalResult evaluate(const DstftPlan& plan, const Signal&, const TfMatrix&,
                      int) const override {
    const double theta = plan.lengths.values[0];
    EvalResult res;
    res.value = (theta - target_) * (theta - target_);
    res.d_length_field = std::vector<double>{2.0 * (theta - target_)};
    return res;
  }
  std::string name() const override { return "quadratic"; }

 private:
  double target_;
};

// Constant pull in a fixed direction, for exercising the projection.
class ConstantPull final : public Objective {
 public:
  ConstantPull(double d_theta, double d_position) : d_theta_(d_theta), d_pos_(d_position) {}
  EvalResult evaluate(const DstftPlan& plan, const Signal&, const TfMatrix& tf,
                      int) const override {
    EvalResult res;
    res.value = 0.0;
    for (double v : plan.lengths.values) res.value += d_theta_ * v;
    for (double t : tf.frame_positions) res.value += d_pos_ * t;
    res.d_length_field = std::vector<double>(plan.lengths.values.size(), d_theta_);
    res.d_positions_resolved =
        std::vector<double>(static_cast<size_t>(plan.num_frames), d_pos_);
    return res;
  }
  std::string name() const override { return "constant-pull"; }

 private:
  double d_theta_;
  double d_pos_;
};

}  // namespace

TEST_CASE("plain gradient descent solves the quadratic sanity problem") {
  const Signal s = testsup::random_signal(128, 1);
  auto plan = testsup::const_plan(WindowKind::Hann, 128, 30.0, 64.0, 16.0, 2);
  const QuadraticTheta objective(90.0);

  OptimConfig cfg;
  cfg.algorithm = Algorithm::PlainGD;
  cfg.lr_theta = 0.25;  // contraction factor 1/2 per step on gradient 2(theta-target)
  cfg.max_iters = 200;
  cfg.rel_tol = 1e-14;
  const OptimResult res = fit(plan, {s}, objective, cfg);

  CHECK(std::abs(res.plan.lengths.values[0] - 90.0) <= 1e-6);
  CHECK(res.iterations_used <= 200);
  REQUIRE(res.loss_trace.size() == static_cast<size_t>(res.iterations_used));
  REQUIRE(res.grad_norm_trace.size() == static_cast<size_t>(res.iterations_used));
  for (size_t i = 0; i < res.loss_trace.size(); ++i) {
    CHECK(std::isfinite(res.loss_trace[i]));
    if (i > 0) CHECK(res.loss_trace[i] <= res.loss_trace[i - 1] + 1e-9);
  }
}

TEST_CASE("relative-tolerance stop reports convergence") {
  const Signal s = testsup::random_signal(128, 2);
  auto plan = testsup::const_plan(WindowKind::Hann, 128, 30.0, 64.0, 16.0, 2);
  const QuadraticTheta objective(90.0);

  OptimConfig cfg;
  cfg.algorithm = Algorithm::PlainGD;
  cfg.lr_theta = 0.25;
  cfg.max_iters = 300;
  cfg.rel_tol = 1e-6;
  const OptimResult res = fit(plan, {s}, objective, cfg);
  CHECK(res.converged);
  CHECK(res.iterations_used < 300);
}

TEST_CASE("fit cost stays within the evaluation budget") {
  const Signal s = testsup::random_signal(128, 3);
  auto plan = testsup::const_plan(WindowKind::Hann, 64, 24.0, 32.0, 24.0, 3);
  EntropyObjective objective;

  OptimConfig cfg;
  cfg.max_iters = 12;
  cfg.rel_tol = 0.0;
  const OptimResult res = fit(plan, {s}, objective, cfg);
  CHECK(res.iterations_used == 12);
  CHECK(res.forward_evals == 12);
  CHECK(res.backward_evals == 12);
  CHECK(res.forward_evals + res.backward_evals <=
        static_cast<std::uint64_t>(2 * cfg.max_iters + 1));
}

TEST_CASE("projection clamps lengths and positions exactly") {
  const Signal s = testsup::random_signal(160, 4);

  {
    DstftPlan plan;
    plan.window = {WindowKind::Hann, 64};
    plan.num_frames = 3;
    plan.lengths = LengthField::constant(24.0);
    plan.positions = PositionField::uniform_hop(48.0, 24.0);
    plan.validate();
    OptimConfig cfg;
    cfg.algorithm = Algorithm::PlainGD;
    cfg.lr_theta = 5.0;
    cfg.max_iters = 50;
    cfg.rel_tol = 0.0;
    const ConstantPull down(1e6, 0.0);
    const OptimResult res = fit(plan, {s}, down, cfg);
    CHECK(res.plan.lengths.values[0] == kThetaMin);
    const ConstantPull up(-1e6, 0.0);
    const OptimResult res_up = fit(plan, {s}, up, cfg);
    CHECK(res_up.plan.lengths.values[0] == 64.0);
  }

  {
    DstftPlan plan;
    plan.window = {WindowKind::Hann, 32};
    plan.num_frames = 3;
    plan.lengths = LengthField::constant(20.0);
    plan.positions = PositionField::explicit_positions({40.0, 80.0, 120.0});
    plan.validate();
    OptimConfig cfg;
    cfg.algorithm = Algorithm::PlainGD;
    cfg.lr_theta = 1.0;
    cfg.lr_position = 5.0;
    cfg.max_iters = 60;
    cfg.rel_tol = 0.0;
    cfg.train_lengths = false;
    cfg.train_positions = true;
    cfg.position_min = 0.0;
    cfg.position_max = 160.0;
    const ConstantPull pull(0.0, -1e6);
    const OptimResult res = fit(plan, {s}, pull, cfg);
    for (double t : res.plan.positions.values) CHECK(t == 160.0);
  }
}

TEST_CASE("fit rejects bad configurations") {
  const Signal s = testsup::random_signal(128, 5);
  auto plan = testsup::const_plan(WindowKind::Hann, 64, 24.0, 32.0, 24.0, 3);
  EntropyObjective objective;

  OptimConfig bad_lr;
  bad_lr.lr_theta = 0.0;
  CHECK_THROWS_AS(fit(plan, {s}, objective, bad_lr), std::invalid_argument);

  OptimConfig bad_iters;
  bad_iters.max_iters = 0;
  CHECK_THROWS_AS(fit(plan, {s}, objective, bad_iters), std::invalid_argument);

  OptimConfig bad_floor;
  bad_floor.theta_min = 1.0;
  CHECK_THROWS_AS(fit(plan, {s}, objective, bad_floor), std::invalid_argument);

  OptimConfig ok;
  CHECK_THROWS_AS(fit(plan, {}, objective, ok), std::invalid_argument);
}

TEST_CASE("fit is deterministic run to run") {
  const SyntheticScenario scenario = SyntheticScenario::three_component(1024, 6);
  const Signal s = generate(scenario).signal;
  auto plan = testsup::const_plan(WindowKind::TruncatedGaussian, 128, 50.0, 64.0, 32.0, 25);
  EntropyObjective objective;
  OptimConfig cfg;
  cfg.max_iters = 25;
  cfg.rel_tol = 0.0;

  const OptimResult a = fit(plan, {s}, objective, cfg);
  const OptimResult b = fit(plan, {s}, objective, cfg);
  REQUIRE(a.loss_trace.size() == b.loss_trace.size());
  CHECK(std::memcmp(a.loss_trace.data(), b.loss_trace.data(),
                    a.loss_trace.size() * sizeof(double)) == 0);
  CHECK(a.plan.lengths.values[0] == b.plan.lengths.values[0]);
}

TEST_CASE("sweep grid endpoints and counting") {
  const Signal s = testsup::random_signal(256, 7);
  auto plan = testsup::const_plan(WindowKind::Hann, 64, 24.0, 64.0, 32.0, 4);
  EntropyObjective objective;

  const std::uint64_t before = forward_call_count();
  const auto points = sweep_theta(plan, {s}, objective, 10.0, 20.0, 10.0);
  const std::uint64_t after = forward_call_count();
  REQUIRE(points.size() == 2);
  CHECK(points[0].theta == 10.0);
  CHECK(points[1].theta == 20.0);
  CHECK(after - before == 2);

  CHECK_THROWS_AS(sweep_theta(plan, {s}, objective, 20.0, 10.0, 5.0), std::invalid_argument);
  CHECK_THROWS_AS(sweep_theta(plan, {s}, objective, 10.0, 20.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(sweep_theta(plan, {s}, objective, 1.0, 20.0, 5.0), std::domain_error);
  CHECK_THROWS_AS(sweep_theta(plan, {s}, objective, 10.0, 80.0, 5.0), std::domain_error);
}

TEST_CASE("learned length lands within one grid step of the sweep argmin") {
  const SyntheticScenario scenario = SyntheticScenario::three_component(1024, 1);
  const Signal s = generate(scenario).signal;
  const std::vector<Signal> signals = {s};

  const int L = 128;
  auto plan = testsup::const_plan(WindowKind::TruncatedGaussian, L, 64.0, 64.0, 32.0, 28);
  EntropyObjective objective;

  const auto sweep = sweep_theta(plan, signals, objective, 16.0, 128.0, 8.0);
  double best_theta = sweep[0].theta;
  double best_value = sweep[0].value;
  for (const auto& p : sweep) {
    if (p.value < best_value) {
      best_value = p.value;
      best_theta = p.theta;
    }
  }

  OptimConfig cfg;
  cfg.lr_theta = 2.0;
  cfg.max_iters = 150;
  const OptimResult res = fit(plan, signals, objective, cfg);
  CHECK(std::abs(res.plan.lengths.values[0] - best_theta) <= 8.0 + 1e-9);
}

TEST_CASE("adam first step moves by roughly the learning rate") {
  AdamState state;
  std::vector<double> params = {10.0};
  OptimConfig cfg;
  state.step(params, {4.0}, 0.5, cfg);
  CHECK(params[0] == doctest::Approx(9.5).epsilon(1e-6));
}
