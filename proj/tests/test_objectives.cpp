#include <cmath>
#include <complex>
#include <memory>
#include <random>
#include <vector>

#include "doctest.h"
#include "dstft/objectives.hpp"
#include "dstft/optimize.hpp"
#include "dstft/verify.hpp"
#include "support.hpp"

using namespace dstft;

namespace {

TfMatrix random_tf(int rows, int cols, std::uint64_t seed) {
  TfMatrix tf;
  tf.rows = rows;
  tf.cols = cols;
  tf.delta_f = 1.0 / 16.0;
  tf.values.resize(static_cast<size_t>(rows) * cols);
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (auto& v : tf.values) v = {dist(gen), dist(gen)};
  for (int n = 0; n < cols; ++n) tf.frame_positions.push_back(10.0 * n);
  return tf;
}

// Central difference of a scalar functional of the matrix against the
// cotangent convention u = dL/dRe + j dL/dIm. Near-zero entries are judged
// against the overall cotangent scale, not their own magnitude.
template <typename Fn>
void check_cotangent(const TfMatrix& tf, const Cotangent& u, Fn value_of, double tol) {
  const double h = 1e-5;
  double u_scale = 0.0;
  for (const auto& c : u.values) u_scale = std::max(u_scale, std::abs(c));
  std::mt19937_64 pick(123);
  std::uniform_int_distribution<int> any(0, static_cast<int>(tf.values.size()) - 1);
  for (int trial = 0; trial < 8; ++trial) {
    const int i = any(pick);
    TfMatrix lo = tf;
    TfMatrix hi = tf;
    lo.values[i] -= h;
    hi.values[i] += h;
    const double fd_re = (value_of(hi) - value_of(lo)) / (2.0 * h);
    const double floor_re =
        std::max({std::abs(u.values[i].real()), std::abs(fd_re), 1e-2 * u_scale});
    CHECK(std::abs(u.values[i].real() - fd_re) <= tol * floor_re);
    lo = tf;
    hi = tf;
    lo.values[i] -= std::complex<double>(0.0, h);
    hi.values[i] += std::complex<double>(0.0, h);
    const double fd_im = (value_of(hi) - value_of(lo)) / (2.0 * h);
    const double floor_im =
        std::max({std::abs(u.values[i].imag()), std::abs(fd_im), 1e-2 * u_scale});
    CHECK(std::abs(u.values[i].imag() - fd_im) <= tol * floor_im);
  }
}

}  // namespace

TEST_CASE("entropy endpoints") {
  TfMatrix uniform;
  uniform.rows = 6;
  uniform.cols = 5;
  uniform.values.assign(30, {0.6, 0.8});
  const EvalResult flat = shannon_entropy(uniform);
  CHECK(flat.value == doctest::Approx(std::log(30.0)).epsilon(1e-9));

  TfMatrix peaked;
  peaked.rows = 6;
  peaked.cols = 5;
  peaked.values.assign(30, {0.0, 0.0});
  peaked.values[7] = {1.0, 0.0};
  const EvalResult spike = shannon_entropy(peaked);
  CHECK(spike.value >= 0.0);
  CHECK(spike.value <= 1e-8);
}

TEST_CASE("entropy cotangent matches finite differences") {
  const TfMatrix tf = random_tf(6, 5, 2024);
  const EvalResult res = shannon_entropy(tf);
  REQUIRE(res.cotangent.has_value());
  check_cotangent(tf, *res.cotangent,
                  [](const TfMatrix& t) { return shannon_entropy(t).value; }, 1e-6);
}

TEST_CASE("kurtosis endpoints") {
  TfMatrix flat;
  flat.rows = 8;
  flat.cols = 3;
  flat.values.assign(24, {0.3, 0.4});
  CHECK(spectral_kurtosis(flat).value == doctest::Approx(1.0).epsilon(1e-9));

  TfMatrix peaked;
  peaked.rows = 8;
  peaked.cols = 2;
  peaked.values.assign(16, {0.0, 0.0});
  peaked.at(3, 0) = {2.0, 0.0};
  peaked.at(5, 1) = {0.0, 1.5};
  CHECK(spectral_kurtosis(peaked).value == doctest::Approx(8.0).epsilon(1e-6));
}

TEST_CASE("kurtosis cotangent matches finite differences") {
  const TfMatrix tf = random_tf(8, 4, 77);
  const EvalResult res = spectral_kurtosis(tf);
  REQUIRE(res.cotangent.has_value());
  check_cotangent(tf, *res.cotangent,
                  [](const TfMatrix& t) { return spectral_kurtosis(t).value; }, 1e-6);
}

TEST_CASE("total-variation regularizer endpoints") {
  ObjectiveConfig cfg;
  cfg.eps_tv = 1e-8;
  const std::vector<double> constant_field(12, 40.0);
  const EvalResult flat = nltv_regularizer(constant_field, 3, 4, cfg);
  CHECK(flat.value == doctest::Approx(12.0 * cfg.eps_tv).epsilon(1e-12));
  REQUIRE(flat.d_length_field.has_value());
  for (double g : *flat.d_length_field) CHECK(g == 0.0);

  ObjectiveConfig tight;
  tight.eps_tv = 1e-12;
  const EvalResult pair = nltv_regularizer({50.0, 53.0}, 1, 2, tight);
  CHECK(pair.value == doctest::Approx(6.0).epsilon(1e-9));
}

TEST_CASE("total-variation gradient matches finite differences") {
  std::vector<double> field(64);
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> dist(20.0, 60.0);
  for (double& x : field) x = dist(gen);
  const EvalResult res = nltv_regularizer(field, 8, 8);
  REQUIRE(res.d_length_field.has_value());

  const double h = 1e-6;
  for (int i : {0, 7, 27, 36, 63}) {
    auto lo = field;
    auto hi = field;
    lo[i] -= h;
    hi[i] += h;
    const double fd =
        (nltv_regularizer(hi, 8, 8).value - nltv_regularizer(lo, 8, 8).value) / (2.0 * h);
    CHECK(testsup::rel_err((*res.d_length_field)[i], fd) <= 1e-6);
  }
}

TEST_CASE("coverage endpoints and branch selection") {
  // Full-overlap tiling: hops telescope to (N-1)*H over L_s.
  {
    const double Ls = 300.0;
    const std::vector<double> positions = {0.0, 100.0, 200.0, 300.0};
    const std::vector<double> theta(4, 150.0);
    CHECK(coverage(positions, theta, Ls).value == doctest::Approx(1.0).epsilon(1e-12));
  }
  // Wide gap: the window-average branch wins and undershoots the hop.
  {
    const std::vector<double> positions = {0.0, 100.0};
    const std::vector<double> theta = {10.0, 10.0};
    const EvalResult res = coverage(positions, theta, 200.0);
    CHECK(res.value == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(res.value < 100.0 / 200.0);
  }
}

TEST_CASE("coverage gradients match finite differences away from ties") {
  // First pair lands on the window-average branch (hop 50 > avg 48), second
  // on the hop branch (hop 40 < avg 46); both sit well away from the kink.
  const std::vector<double> positions = {30.0, 80.0, 120.0};
  const std::vector<double> theta = {40.0, 56.0, 36.0};
  const double Ls = 200.0;
  const EvalResult res = coverage(positions, theta, Ls);
  REQUIRE(res.d_positions_resolved.has_value());
  REQUIRE(res.d_theta_per_frame.has_value());

  const double h = 1e-6;
  for (size_t i = 0; i < positions.size(); ++i) {
    auto lo = positions;
    auto hi = positions;
    lo[i] -= h;
    hi[i] += h;
    const double fd = (coverage(hi, theta, Ls).value - coverage(lo, theta, Ls).value) / (2 * h);
    CHECK(std::abs((*res.d_positions_resolved)[i] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
  }
  for (size_t i = 0; i < theta.size(); ++i) {
    auto lo = theta;
    auto hi = theta;
    lo[i] -= h;
    hi[i] += h;
    const double fd = (coverage(positions, hi, Ls).value - coverage(positions, lo, Ls).value) /
                      (2 * h);
    CHECK(std::abs((*res.d_theta_per_frame)[i] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("frequency estimate endpoints") {
  TfMatrix tf;
  tf.rows = 9;
  tf.cols = 2;
  tf.delta_f = 2.0;
  tf.values.assign(18, {0.0, 0.0});
  tf.at(5, 0) = {0.3, 0.4};
  tf.at(5, 1) = {-2.0, 0.0};
  const auto est = freq_estimate(tf);
  CHECK(est[0] == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(est[1] == doctest::Approx(10.0).epsilon(1e-9));

  TfMatrix uniform;
  uniform.rows = 9;
  uniform.cols = 1;
  uniform.delta_f = 2.0;
  uniform.values.assign(9, {1.0, 0.0});
  CHECK(freq_estimate(uniform)[0] == doctest::Approx(2.0 * 4.0).epsilon(1e-12));
}

TEST_CASE("frequency estimate lands within one bin of a pure tone") {
  const int L = 64;
  const double a = 0.125;
  const Signal s = testsup::tone(256, a);
  auto plan = testsup::const_plan(WindowKind::TruncatedGaussian, L, 32.0, 96.0, 32.0, 2);
  const TfMatrix tf = forward(plan, s);
  const auto est = freq_estimate(tf);
  for (double f : est) CHECK(std::abs(f - a) <= tf.delta_f);
}

TEST_CASE("frequency estimate pullback matches finite differences") {
  const TfMatrix tf = random_tf(7, 3, 31);
  const std::vector<double> d_est = {0.7, -1.3, 0.4};
  const Cotangent u = freq_estimate_pullback(tf, d_est);
  auto value_of = [&](const TfMatrix& t) {
    const auto est = freq_estimate(t);
    double acc = 0.0;
    for (size_t n = 0; n < est.size(); ++n) acc += d_est[n] * est[n];
    return acc;
  };
  check_cotangent(tf, u, value_of, 1e-6);
}

TEST_CASE("magnitude pullback matches finite differences") {
  const TfMatrix tf = random_tf(5, 4, 61);
  std::vector<double> d_mag(20);
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (double& x : d_mag) x = dist(gen);
  const Cotangent u = magnitude_pullback(tf, d_mag);
  auto value_of = [&](const TfMatrix& t) {
    const auto mag = magnitude(t);
    double acc = 0.0;
    for (size_t i = 0; i < mag.size(); ++i) acc += d_mag[i] * mag[i];
    return acc;
  };
  check_cotangent(tf, u, value_of, 1e-6);
}

TEST_CASE("tracking objective endpoints") {
  const TfMatrix tf = random_tf(7, 4, 90);
  const auto est = freq_estimate(tf);

  TrackingMseObjective exact({est});
  DstftPlan unused_plan;
  Signal unused_signal;
  CHECK(exact.evaluate(unused_plan, unused_signal, tf, 0).value ==
        doctest::Approx(0.0).epsilon(1e-15));

  auto off = est;
  for (double& x : off) x -= 3.0;
  TrackingMseObjective offset({off});
  CHECK(offset.evaluate(unused_plan, unused_signal, tf, 0).value ==
        doctest::Approx(9.0 * tf.cols).epsilon(1e-9));
}

TEST_CASE("tracking loss gradient matches finite differences end to end") {
  const int L = 32;
  const int N = 4;
  std::vector<Signal> signals;
  std::vector<std::vector<double>> truths;
  for (int j = 0; j < 3; ++j) {
    signals.push_back(testsup::random_signal(192, 400 + j));
    truths.push_back(std::vector<double>(N, 0.15 + 0.05 * j));
  }
  const TrackingMseObjective objective(truths);
  auto plan = testsup::const_plan(WindowKind::TruncatedGaussian, L, 20.0, 40.0, 36.0, N);

  const ParamGradients g = total_gradient(plan, signals, objective);
  const double fd = finite_diff(plan, signals, objective, {ParamKind::Length, 0},
                                fd_step(ParamKind::Length, plan.lengths.values[0]));
  CHECK(testsup::rel_err(g.d_lengths[0], fd) <= 1e-5);
}

TEST_CASE("classifier head basics") {
  LinearHead head;
  head.num_classes = 2;
  head.feature_dim = 3;
  head.weights = {5.0, 0.0, 0.0, -5.0, 0.0, 0.0};
  head.bias = {10.0, -10.0};
  const auto probs = head_probabilities(head, {1.0, 0.2, -0.4});
  CHECK(probs[0] + probs[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cross_entropy(probs, 0) <= 1e-8);

  const std::vector<double> uniform(10, 0.1);
  CHECK(cross_entropy(uniform, 4) == doctest::Approx(std::log(10.0)).epsilon(1e-12));
}

TEST_CASE("classifier head gradients match finite differences") {
  LinearHead head;
  head.num_classes = 3;
  head.feature_dim = 4;
  std::mt19937_64 gen(14);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  head.weights.resize(12);
  head.bias.resize(3);
  for (double& w : head.weights) w = dist(gen);
  for (double& b : head.bias) b = dist(gen);
  std::vector<double> features = {0.9, -0.2, 0.5, 0.1};
  const int label = 2;

  const auto probs = head_probabilities(head, features);
  const HeadGradients g = head_backward(head, features, probs, label);
  auto loss_of = [&](const LinearHead& h, const std::vector<double>& f) {
    return cross_entropy(head_probabilities(h, f), label);
  };

  const double h = 1e-6;
  for (size_t i = 0; i < head.weights.size(); ++i) {
    LinearHead lo = head;
    LinearHead hi = head;
    lo.weights[i] -= h;
    hi.weights[i] += h;
    const double fd = (loss_of(hi, features) - loss_of(lo, features)) / (2 * h);
    CHECK(std::abs(g.d_weights[i] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
  }
  for (size_t i = 0; i < head.bias.size(); ++i) {
    LinearHead lo = head;
    LinearHead hi = head;
    lo.bias[i] -= h;
    hi.bias[i] += h;
    const double fd = (loss_of(hi, features) - loss_of(lo, features)) / (2 * h);
    CHECK(std::abs(g.d_bias[i] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
  }
  for (size_t i = 0; i < features.size(); ++i) {
    auto lo = features;
    auto hi = features;
    lo[i] -= h;
    hi[i] += h;
    const double fd = (loss_of(head, hi) - loss_of(head, lo)) / (2 * h);
    CHECK(std::abs(g.d_features[i] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("classification objective gradient passes the audit") {
  const int L = 16;
  const int N = 3;
  const int M = L / 2 + 1;
  std::vector<Signal> signals = {testsup::random_signal(96, 50), testsup::random_signal(96, 51)};
  LinearHead head;
  head.num_classes = 2;
  head.feature_dim = M * N;
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> dist(-0.3, 0.3);
  head.weights.resize(static_cast<size_t>(2) * M * N);
  head.bias.resize(2);
  for (double& w : head.weights) w = dist(gen);
  for (double& b : head.bias) b = dist(gen);
  const ClassificationObjective objective(head, {0, 1});

  DstftPlan p;
  p.window = {WindowKind::TruncatedGaussian, L};
  p.num_frames = N;
  p.lengths = LengthField::constant(10.0);
  p.positions = PositionField::uniform_hop(20.0, 28.0);
  p.validate();
  const VjpReport report = vjp_check(p, signals, objective);
  CHECK(report.max_rel_err <= 1e-5);
}

TEST_CASE("composite objective composes linearly") {
  const TfMatrix tf = random_tf(6, 4, 33);
  DstftPlan unused_plan;
  Signal unused_signal;

  auto entropy = std::make_shared<EntropyObjective>();
  const CompositeObjective single({{1.0, entropy}});
  const EvalResult via_composite = single.evaluate(unused_plan, unused_signal, tf, 0);
  const EvalResult direct = entropy->evaluate(unused_plan, unused_signal, tf, 0);
  CHECK(via_composite.value == doctest::Approx(direct.value).epsilon(1e-15));

  // lambda = 0 leaves the base objective untouched.
  const int L = 16;
  const int N = 3;
  const int M = L / 2 + 1;
  DstftPlan p;
  p.window = {WindowKind::TruncatedGaussian, L};
  p.num_frames = N;
  p.lengths = LengthField::time_freq(std::vector<double>(static_cast<size_t>(M) * N, 9.0));
  p.positions = PositionField::uniform_hop(20.0, 28.0);
  p.validate();
  const Signal s = testsup::random_signal(96, 52);
  const TfMatrix out = forward(p, s);
  auto nltv = std::make_shared<NltvObjective>();
  const CompositeObjective zero_reg({{1.0, entropy}, {0.0, nltv}});
  CHECK(zero_reg.evaluate(p, s, out, 0).value ==
        doctest::Approx(entropy->evaluate(p, s, out, 0).value).epsilon(1e-15));

  // Small regularizer weight still has to backpropagate exactly.
  ObjectiveConfig reg_cfg;
  reg_cfg.lambda = 1e-3;
  const CompositeObjective mixed({{1.0, entropy}, {1e-3, nltv}});
  const VjpReport report = vjp_check(p, {s}, mixed);
  CHECK(report.max_rel_err <= 1e-5);
}
