#include "dstft/pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "dstft/grad.hpp"

namespace dstft {

SyntheticScenario scenario_by_name(const std::string& name, int length, std::uint64_t seed) {
  if (name == "three-component") {
    return SyntheticScenario::three_component(length > 0 ? length : 4096, seed);
  }
  if (name == "shock-train") {
    return SyntheticScenario::shock_train(length > 0 ? length : 4096, seed);
  }
  if (name == "variable-period-sine") {
    return SyntheticScenario::variable_period_sine(length > 0 ? length : 4096, seed);
  }
  if (name == "multi-harmonic") {
    return SyntheticScenario::multi_harmonic(length > 0 ? length : 8192, seed);
  }
  throw std::invalid_argument("unknown scenario: " + name);
}

ModeSetup parse_mode(const std::string& mode) {
  if (mode == "const") return {LengthMode::Constant, PositionMode::UniformHop, false};
  if (mode == "time") return {LengthMode::TimeVarying, PositionMode::UniformHop, false};
  if (mode == "freq") return {LengthMode::FreqVarying, PositionMode::UniformHop, false};
  if (mode == "tf") return {LengthMode::TimeFreq, PositionMode::UniformHop, false};
  if (mode == "hop") return {LengthMode::TimeVarying, PositionMode::Explicit, true};
  if (mode == "fixed-overlap") return {LengthMode::TimeVarying, PositionMode::FixedOverlap, true};
  throw std::invalid_argument("unknown mode: " + mode);
}

LengthField broadcast_theta(LengthMode mode, double theta, int bins, int frames) {
  switch (mode) {
    case LengthMode::Constant:
      return LengthField::constant(theta);
    case LengthMode::TimeVarying:
      return LengthField::time_varying(std::vector<double>(static_cast<size_t>(frames), theta));
    case LengthMode::FreqVarying:
      return LengthField::freq_varying(std::vector<double>(static_cast<size_t>(bins), theta));
    case LengthMode::TimeFreq:
      return LengthField::time_freq(
          std::vector<double>(static_cast<size_t>(bins) * frames, theta));
  }
  throw std::invalid_argument("broadcast_theta: unknown mode");
}

DstftPlan make_mode_plan(const std::string& mode, WindowKind kind, int support, int num_frames,
                         double t0, double hop, double theta0) {
  const ModeSetup setup = parse_mode(mode);
  DstftPlan plan;
  plan.window = {kind, support};
  plan.num_frames = num_frames;
  plan.lengths = broadcast_theta(setup.length_mode, theta0, support / 2 + 1, num_frames);
  switch (setup.position_mode) {
    case PositionMode::UniformHop:
      plan.positions = PositionField::uniform_hop(t0, hop);
      break;
    case PositionMode::Explicit: {
      std::vector<double> t(static_cast<size_t>(num_frames));
      for (int n = 0; n < num_frames; ++n) t[n] = t0 + n * hop;
      plan.positions = PositionField::explicit_positions(std::move(t));
      break;
    }
    case PositionMode::FixedOverlap:
      plan.positions = PositionField::fixed_overlap(0.5, t0);
      break;
    case PositionMode::VaryingHop: {
      std::vector<double> hops(static_cast<size_t>(num_frames), hop);
      hops[0] = t0;
      plan.positions = PositionField::varying_hop(std::move(hops));
      break;
    }
  }
  plan.validate();
  return plan;
}

std::shared_ptr<const Objective> make_objective(const std::string& name, double lambda) {
  if (name == "entropy") return std::make_shared<EntropyObjective>();
  if (name == "entropy+nltv") {
    std::vector<CompositeObjective::Term> terms;
    terms.emplace_back(1.0, std::make_shared<EntropyObjective>());
    if (lambda != 0.0) terms.emplace_back(lambda, std::make_shared<NltvObjective>());
    return std::make_shared<CompositeObjective>(std::move(terms));
  }
  if (name == "kurtosis+coverage") {
    std::vector<CompositeObjective::Term> terms;
    terms.emplace_back(-1.0, std::make_shared<KurtosisObjective>());
    if (lambda != 0.0) terms.emplace_back(-lambda, std::make_shared<CoverageObjective>());
    return std::make_shared<CompositeObjective>(std::move(terms));
  }
  throw std::invalid_argument("unknown objective: " + name);
}

int frames_covering(int signal_length, double t0, double hop, int support) {
  const double last = signal_length - support / 2.0;
  if (!(hop > 0.0) || t0 > last) return 1;
  return static_cast<int>(std::floor((last - t0) / hop)) + 1;
}

double objective_at_constant_theta(const DstftPlan& tmpl, const std::vector<Signal>& signals,
                                   const Objective& objective, double theta) {
  DstftPlan probe = tmpl;
  probe.lengths = LengthField::constant(
      std::clamp(theta, kThetaMin, static_cast<double>(tmpl.window.support)));
  probe.validate();
  double value = 0.0;
  for (size_t j = 0; j < signals.size(); ++j) {
    const TfMatrix tf = forward(probe, signals[j]);
    value += objective.evaluate(probe, signals[j], tf, static_cast<int>(j)).value;
  }
  return value / static_cast<double>(signals.size());
}

bool is_unimodal(const std::vector<SweepPoint>& curve, double tol) {
  if (curve.size() < 3) return false;
  size_t best = 0;
  for (size_t i = 1; i < curve.size(); ++i) {
    if (curve[i].value < curve[best].value) best = i;
  }
  if (best == 0 || best + 1 == curve.size()) return false;
  for (size_t i = 0; i < best; ++i) {
    if (curve[i + 1].value > curve[i].value + tol) return false;
  }
  for (size_t i = best; i + 1 < curve.size(); ++i) {
    if (curve[i + 1].value < curve[i].value - tol) return false;
  }
  return true;
}

EntropyPipelineResult run_entropy_pipeline(const EntropyPipelineConfig& cfg) {
  const SyntheticScenario sc =
      SyntheticScenario::three_component(cfg.signal_length, cfg.seed);
  const std::vector<Signal> signals = {generate(sc).signal};
  const int frames = frames_covering(cfg.signal_length, cfg.t0, cfg.hop, cfg.support);
  DstftPlan plan = make_mode_plan("const", WindowKind::TruncatedGaussian, cfg.support, frames, cfg.t0,
                                  cfg.hop, cfg.theta0);

  EntropyPipelineResult out;
  const EntropyObjective objective;
  out.sweep = sweep_theta(plan, signals, objective, cfg.sweep_lo, cfg.sweep_hi, cfg.sweep_step);
  size_t best = 0;
  for (size_t i = 1; i < out.sweep.size(); ++i) {
    if (out.sweep[i].value < out.sweep[best].value) best = i;
  }
  out.sweep_argmin = out.sweep[best].theta;
  out.sweep_unimodal = is_unimodal(out.sweep);

  OptimConfig ocfg;
  ocfg.algorithm = Algorithm::AdamLike;
  ocfg.lr_theta = cfg.lr_theta;
  ocfg.max_iters = cfg.max_iters;
  out.opt = fit(plan, signals, objective, ocfg);
  out.learned_theta = out.opt.plan.lengths.values[0];
  return out;
}

TfRegularizationResult run_tf_regularization(const TfRegularizationConfig& cfg) {
  const SyntheticScenario sc =
      SyntheticScenario::three_component(cfg.signal_length, cfg.seed);
  const std::vector<Signal> signals = {generate(sc).signal};
  const int frames = frames_covering(cfg.signal_length, cfg.t0, cfg.hop, cfg.support);
  const int bins = cfg.support / 2 + 1;
  DstftPlan const_plan = make_mode_plan("const", WindowKind::TruncatedGaussian, cfg.support, frames, cfg.t0,
                                        cfg.hop, 0.5 * cfg.support);

  TfRegularizationResult out;
  const EntropyObjective entropy;
  const std::vector<SweepPoint> sweep =
      sweep_theta(const_plan, signals, entropy, cfg.sweep_lo, cfg.sweep_hi, cfg.sweep_step);
  size_t best = 0;
  for (size_t i = 1; i < sweep.size(); ++i) {
    if (sweep[i].value < sweep[best].value) best = i;
  }
  OptimConfig ccfg;
  ccfg.lr_theta = 2.0;
  ccfg.max_iters = cfg.tf_iters;
  const_plan.lengths = LengthField::constant(sweep[best].theta);
  const OptimResult const_fit = fit(const_plan, signals, entropy, ccfg);
  const double fit_theta = const_fit.plan.lengths.values[0];
  const double fit_value = objective_at_constant_theta(const_plan, signals, entropy, fit_theta);
  if (fit_value < sweep[best].value) {
    out.const_theta = fit_theta;
    out.const_entropy = fit_value;
  } else {
    out.const_theta = sweep[best].theta;
    out.const_entropy = sweep[best].value;
  }

  auto run_tf = [&](double lambda, double& entropy_out, double& tv_out) {
    DstftPlan tf_plan = const_plan;
    tf_plan.lengths = broadcast_theta(LengthMode::TimeFreq, out.const_theta, bins, frames);
    tf_plan.validate();
    const auto objective = make_objective("entropy+nltv", lambda);
    OptimConfig tcfg;
    tcfg.lr_theta = cfg.lr_theta;
    tcfg.max_iters = cfg.tf_iters;
    const OptimResult res = fit(tf_plan, signals, *objective, tcfg);
    const TfMatrix tf = forward(res.plan, signals[0]);
    entropy_out = shannon_entropy(tf).value;
    tv_out = nltv_regularizer(res.plan.lengths.values, bins, frames).value;
  };
  run_tf(cfg.lambda, out.tf_entropy, out.tv_regularized);
  run_tf(0.0, out.tf_entropy_unreg, out.tv_unregularized);
  return out;
}

double mean_nearest_distance(const std::vector<double>& centers,
                             const std::vector<double>& positions) {
  if (centers.empty() || positions.empty()) {
    throw std::invalid_argument("mean_nearest_distance: empty input");
  }
  double acc = 0.0;
  for (double c : centers) {
    double best = std::abs(c - positions[0]);
    for (double p : positions) best = std::min(best, std::abs(c - p));
    acc += best;
  }
  return acc / static_cast<double>(centers.size());
}

ShockTaskResult run_shock_task(const ShockTaskConfig& cfg) {
  ShockTaskResult out;
  out.data = generate(SyntheticScenario::shock_train(cfg.signal_length, cfg.seed));
  const std::vector<Signal> signals = {out.data.signal};

  const double t0 = cfg.support / 2.0;
  const double hop = (cfg.signal_length - cfg.support) / static_cast<double>(cfg.num_frames);
  out.init_plan = make_mode_plan("hop", WindowKind::TruncatedGaussian, cfg.support, cfg.num_frames, t0, hop,
                                 cfg.theta0);

  const auto objective = make_objective("kurtosis+coverage", cfg.lambda);
  OptimConfig ocfg;
  ocfg.lr_theta = cfg.lr_theta;
  ocfg.lr_position = cfg.lr_position;
  ocfg.train_positions = true;
  ocfg.max_iters = cfg.max_iters;
  ocfg.position_min = 0.0;
  ocfg.position_max = static_cast<double>(cfg.signal_length);
  out.opt = fit(out.init_plan, signals, *objective, ocfg);

  const std::vector<double> init_pos = resolve_positions(out.init_plan);
  const std::vector<double> final_pos = resolve_positions(out.opt.plan);
  out.init_distance = mean_nearest_distance(out.data.shock_centers, init_pos);
  out.final_distance = mean_nearest_distance(out.data.shock_centers, final_pos);
  out.init_coverage =
      coverage(init_pos, out.init_plan.theta_per_frame(), cfg.signal_length).value;
  out.final_coverage =
      coverage(final_pos, out.opt.plan.theta_per_frame(), cfg.signal_length).value;
  return out;
}

TrackTaskResult run_track_task(const TrackTaskConfig& cfg) {
  std::vector<Signal> signals;
  std::vector<std::vector<double>> truths;
  const int frames = frames_covering(cfg.signal_length, cfg.t0, cfg.hop, cfg.support);
  DstftPlan plan = make_mode_plan("const", WindowKind::TruncatedGaussian, cfg.support, frames, cfg.t0,
                                  cfg.hop, cfg.theta0);
  const std::vector<double> positions = resolve_positions(plan);
  for (int j = 0; j < cfg.dataset_size; ++j) {
    const GeneratedSignal g = generate(SyntheticScenario::variable_period_sine(
        cfg.signal_length, cfg.seed + static_cast<std::uint64_t>(j)));
    signals.push_back(g.signal);
    truths.push_back(sample_track(g.instantaneous_freq, positions));
  }
  const TrackingMseObjective objective(truths);

  TrackTaskResult out;
  out.sweep = sweep_theta(plan, signals, objective, cfg.sweep_lo, cfg.sweep_hi, cfg.sweep_step);
  size_t best = 0;
  for (size_t i = 1; i < out.sweep.size(); ++i) {
    if (out.sweep[i].value < out.sweep[best].value) best = i;
  }
  out.sweep_argmin = out.sweep[best].theta;

  OptimConfig ocfg;
  ocfg.lr_theta = cfg.lr_theta;
  ocfg.max_iters = cfg.max_iters;
  out.opt = fit(plan, signals, objective, ocfg);
  out.learned_theta = out.opt.plan.lengths.values[0];
  out.mse_learned = objective_at_constant_theta(plan, signals, objective, out.learned_theta);
  out.mse_minus = objective_at_constant_theta(plan, signals, objective, out.learned_theta - 50.0);
  out.mse_plus = objective_at_constant_theta(plan, signals, objective, out.learned_theta + 50.0);
  return out;
}

HarmonicTrackResult run_harmonic_tracking(const HarmonicTrackConfig& cfg) {
  const SyntheticScenario sc = SyntheticScenario::multi_harmonic(cfg.signal_length, cfg.seed);
  const GeneratedSignal g = generate(sc);
  const std::vector<Signal> signals = {g.signal};
  const int frames = frames_covering(cfg.signal_length, cfg.t0, cfg.hop, cfg.support);
  DstftPlan plan = make_mode_plan("const", WindowKind::TruncatedGaussian, cfg.support, frames, cfg.t0,
                                  cfg.hop, cfg.theta0);
  const EntropyObjective entropy;

  OptimConfig ocfg;
  ocfg.lr_theta = cfg.lr_theta;
  ocfg.max_iters = cfg.max_iters;
  const OptimResult const_fit = fit(plan, signals, entropy, ocfg);

  const double k = cfg.harmonic;
  const double band_lo = (k * (sc.base_freq - sc.freq_dev) - 0.01) * sc.sample_rate;
  const double band_hi = (k * (sc.base_freq + sc.freq_dev) + 0.01) * sc.sample_rate;
  const std::vector<double> truth =
      sample_track(g.instantaneous_freq, resolve_positions(plan));

  auto ridge_mse = [&](const DstftPlan& p) {
    const TfMatrix tf = forward(p, signals[0]);
    FrequencyTrack track = ridge_track(tf, band_lo, band_hi, cfg.max_jump_bins);
    for (double& v : track.values) v /= k;
    return track_mse(track, truth);
  };

  HarmonicTrackResult out;
  out.theta_const = const_fit.plan.lengths.values[0];
  out.mse_const = ridge_mse(const_fit.plan);

  DstftPlan time_plan = plan;
  time_plan.lengths = broadcast_theta(LengthMode::TimeVarying, out.theta_const, 0, frames);
  time_plan.validate();
  const OptimResult time_fit = fit(time_plan, signals, entropy, ocfg);
  out.mse_time = ridge_mse(time_fit.plan);
  return out;
}

ClassifyDataset make_two_class_dataset(int total, int signal_length, std::uint64_t seed) {
  if (total < 10) throw std::invalid_argument("make_two_class_dataset: need at least 10 signals");
  constexpr double kTau = 2.0 * std::numbers::pi;
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> jitter(-0.01, 0.01);
  std::uniform_real_distribution<double> phase(0.0, kTau);
  std::uniform_int_distribution<std::uint64_t> seeds;

  ClassifyDataset ds;
  for (int j = 0; j < total; ++j) {
    const int label = j % 2;
    const double fc = 0.2 + jitter(gen);
    const double p1 = phase(gen);
    const double p2 = phase(gen);
    const std::uint64_t noise_seed = seeds(gen);
    Signal s;
    s.samples.resize(static_cast<size_t>(signal_length));
    const double delta = 0.015;
    const double amp = 1.0 / std::numbers::sqrt2;
    for (int i = 0; i < signal_length; ++i) {
      if (label == 0) {
        s.samples[i] = std::cos(kTau * fc * i + p1);
      } else {
        s.samples[i] = amp * (std::cos(kTau * (fc - delta) * i + p1) +
                              std::cos(kTau * (fc + delta) * i + p2));
      }
    }
    ds.signals.push_back(add_awgn(s, 15.0, noise_seed));
    ds.labels.push_back(label);
  }
  const int train = total * 8 / 10;
  const int val = total / 10;
  for (int j = 0; j < total; ++j) {
    if (j < train) {
      ds.train_idx.push_back(j);
    } else if (j < train + val) {
      ds.val_idx.push_back(j);
    } else {
      ds.test_idx.push_back(j);
    }
  }
  return ds;
}

ClassifyRun train_classifier(const ClassifyDataset& ds, const ClassifyConfig& cfg,
                             double theta_init, bool train_theta) {
  const int bins = cfg.support / 2 + 1;
  const double t0 = cfg.support / 2.0;
  const double hop = (cfg.signal_length - cfg.support) / static_cast<double>(cfg.num_frames);
  DstftPlan plan = make_mode_plan("const", WindowKind::TruncatedGaussian, cfg.support, cfg.num_frames, t0,
                                  hop, theta_init);

  LinearHead head;
  head.num_classes = 2;
  head.feature_dim = bins * cfg.num_frames;
  head.weights.assign(static_cast<size_t>(head.num_classes) * head.feature_dim, 0.0);
  head.bias.assign(static_cast<size_t>(head.num_classes), 0.0);

  OptimConfig acfg;  // carries the Adam constants
  AdamState theta_state;
  AdamState w_state;
  AdamState b_state;

  auto split_ce = [&](const std::vector<int>& idx, double* accuracy) {
    double ce = 0.0;
    int hits = 0;
    for (int i : idx) {
      const TfMatrix tf = forward(plan, ds.signals[static_cast<size_t>(i)]);
      const std::vector<double> feat = magnitude(tf);
      const std::vector<double> probs = head_probabilities(head, feat);
      ce += cross_entropy(probs, ds.labels[static_cast<size_t>(i)]);
      const int pred = probs[1] > probs[0] ? 1 : 0;
      if (pred == ds.labels[static_cast<size_t>(i)]) ++hits;
    }
    if (accuracy) *accuracy = idx.empty() ? 0.0 : static_cast<double>(hits) / idx.size();
    return idx.empty() ? 0.0 : ce / static_cast<double>(idx.size());
  };

  ClassifyRun run;
  const double inv_train = 1.0 / static_cast<double>(ds.train_idx.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<double> d_weights(head.weights.size(), 0.0);
    std::vector<double> d_bias(head.bias.size(), 0.0);
    std::vector<double> d_theta(plan.lengths.values.size(), 0.0);
    double train_ce = 0.0;
    for (int i : ds.train_idx) {
      const Signal& s = ds.signals[static_cast<size_t>(i)];
      const TfMatrix tf = forward(plan, s);
      const std::vector<double> feat = magnitude(tf);
      const std::vector<double> probs = head_probabilities(head, feat);
      train_ce += cross_entropy(probs, ds.labels[static_cast<size_t>(i)]);
      const HeadGradients hg =
          head_backward(head, feat, probs, ds.labels[static_cast<size_t>(i)]);
      for (size_t w = 0; w < d_weights.size(); ++w) d_weights[w] += hg.d_weights[w];
      for (size_t b = 0; b < d_bias.size(); ++b) d_bias[b] += hg.d_bias[b];
      if (train_theta) {
        const Cotangent u = magnitude_pullback(tf, hg.d_features);
        const ParamGradients pg = backward(plan, s, u);
        for (size_t p = 0; p < d_theta.size(); ++p) d_theta[p] += pg.d_lengths[p];
      }
    }
    for (double& g : d_weights) g *= inv_train;
    for (double& g : d_bias) g *= inv_train;
    for (double& g : d_theta) g *= inv_train;
    for (size_t w = 0; w < d_weights.size(); ++w) {
      d_weights[w] += cfg.weight_decay * head.weights[w];
    }
    run.train_ce.push_back(train_ce * inv_train);
    run.val_ce.push_back(split_ce(ds.val_idx, nullptr));

    w_state.step(head.weights, d_weights, cfg.lr_head, acfg);
    b_state.step(head.bias, d_bias, cfg.lr_head, acfg);
    if (train_theta) {
      theta_state.step(plan.lengths.values, d_theta, cfg.lr_theta, acfg);
      plan.lengths.values[0] = std::clamp(plan.lengths.values[0], kThetaMin,
                                          static_cast<double>(cfg.support));
    }
  }
  run.theta_final = plan.lengths.values[0];
  run.test_ce = split_ce(ds.test_idx, &run.test_accuracy);
  return run;
}

ClassifyTaskResult run_classify_task(const ClassifyConfig& cfg) {
  const ClassifyDataset ds =
      make_two_class_dataset(cfg.total_signals, cfg.signal_length, cfg.seed);
  ClassifyTaskResult out;
  out.joint = train_classifier(ds, cfg, cfg.theta0, true);
  out.best_grid_ce = std::numeric_limits<double>::infinity();
  for (double theta : cfg.theta_grid) {
    ClassifyRun run = train_classifier(ds, cfg, theta, false);
    out.best_grid_ce = std::min(out.best_grid_ce, run.test_ce);
    out.grid.emplace_back(theta, std::move(run));
  }
  return out;
}

}  // namespace dstft
