#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "dstft/optimize.hpp"
#include "dstft/signals.hpp"
#include "dstft/tracking.hpp"

namespace dstft {

// Named built-in scenarios: "three-component", "shock-train",
// "variable-period-sine", "multi-harmonic".
SyntheticScenario scenario_by_name(const std::string& name, int length = 0,
                                   std::uint64_t seed = 1);

struct ModeSetup {
  LengthMode length_mode = LengthMode::Constant;
  PositionMode position_mode = PositionMode::UniformHop;
  bool train_positions = false;
};

// CLI mode vocabulary: const, time, freq, tf, hop, fixed-overlap.
ModeSetup parse_mode(const std::string& mode);

// Length field of the given mode with every entry set to theta.
LengthField broadcast_theta(LengthMode mode, double theta, int bins, int frames);

// Plan for a mode name on a uniform start grid. "hop" trains explicit
// per-frame positions initialized at t0 + n*hop; "fixed-overlap" starts at
// overlap ratio 0.5.
DstftPlan make_mode_plan(const std::string& mode, WindowKind kind, int support, int num_frames,
                         double t0, double hop, double theta0);

// Objective vocabulary: entropy, entropy+nltv, kurtosis+coverage (the latter
// two weighted by lambda; kurtosis and coverage enter negated so descent
// maximizes them).
std::shared_ptr<const Objective> make_objective(const std::string& name, double lambda);

// Largest frame count whose last center stays support/2 clear of the end.
int frames_covering(int signal_length, double t0, double hop, int support);

// Mean objective value of a constant-theta variant of the template plan.
double objective_at_constant_theta(const DstftPlan& tmpl, const std::vector<Signal>& signals,
                                   const Objective& objective, double theta);

// ---- Entropy pipeline (three-component scenario) ----

struct EntropyPipelineConfig {
  std::uint64_t seed = 1;
  int signal_length = 4096;
  int support = 1024;
  double hop = 128.0;
  double t0 = 512.0;
  double theta0 = 150.0;
  double sweep_lo = 100.0;
  double sweep_hi = 1000.0;
  double sweep_step = 10.0;
  int max_iters = 300;
  double lr_theta = 5.0;
};

struct EntropyPipelineResult {
  std::vector<SweepPoint> sweep;
  double sweep_argmin = 0.0;
  bool sweep_unimodal = false;
  OptimResult opt;
  double learned_theta = 0.0;
};

EntropyPipelineResult run_entropy_pipeline(const EntropyPipelineConfig& cfg);

// Exactly one interior local minimum up to the tolerance.
bool is_unimodal(const std::vector<SweepPoint>& curve, double tol = 1e-12);

// ---- TF-varying window map with smoothness regularization ----

struct TfRegularizationConfig {
  std::uint64_t seed = 1;
  int signal_length = 1024;
  int support = 256;
  double hop = 32.0;
  double t0 = 128.0;
  double sweep_lo = 16.0;
  double sweep_hi = 256.0;
  double sweep_step = 8.0;
  double lambda = 1e-3;
  int tf_iters = 300;
  double lr_theta = 1.0;
};

struct TfRegularizationResult {
  double const_theta = 0.0;    // best constant window length found
  double const_entropy = 0.0;  // entropy at that constant length
  double tf_entropy = 0.0;     // entropy term after regularized TF run
  double tv_regularized = 0.0;
  double tf_entropy_unreg = 0.0;
  double tv_unregularized = 0.0;
};

TfRegularizationResult run_tf_regularization(const TfRegularizationConfig& cfg);

// ---- Shock train: trainable frame positions under kurtosis + coverage ----

struct ShockTaskConfig {
  std::uint64_t seed = 3;
  int signal_length = 4096;
  int support = 256;
  int num_frames = 16;
  double theta0 = 128.0;
  double lambda = 2.0;
  int max_iters = 300;
  double lr_theta = 1.0;
  // Positions must be able to travel a fair fraction of the frame spacing
  // within the iteration budget, or they settle before reaching a shock.
  double lr_position = 10.0;
};

struct ShockTaskResult {
  GeneratedSignal data;
  DstftPlan init_plan;
  OptimResult opt;
  double init_distance = 0.0;   // mean shock-center distance to nearest frame
  double final_distance = 0.0;
  double init_coverage = 0.0;
  double final_coverage = 0.0;
};

ShockTaskResult run_shock_task(const ShockTaskConfig& cfg);

double mean_nearest_distance(const std::vector<double>& centers,
                             const std::vector<double>& positions);

// ---- Task-driven tracking: fit a global window length to a dataset ----

struct TrackTaskConfig {
  int dataset_size = 5;
  std::uint64_t seed = 7;
  int signal_length = 2048;
  int support = 256;
  double hop = 64.0;
  double t0 = 128.0;
  double theta0 = 128.0;
  double sweep_lo = 32.0;
  double sweep_hi = 256.0;
  double sweep_step = 16.0;
  int max_iters = 300;
  double lr_theta = 2.0;
};

struct TrackTaskResult {
  std::vector<SweepPoint> sweep;
  double sweep_argmin = 0.0;
  OptimResult opt;
  double learned_theta = 0.0;
  double mse_learned = 0.0;
  double mse_minus = 0.0;  // objective at learned theta - 50 (clamped)
  double mse_plus = 0.0;   // objective at learned theta + 50 (clamped)
};

TrackTaskResult run_track_task(const TrackTaskConfig& cfg);

// ---- Multi-harmonic ridge tracking: constant vs time-varying lengths ----

struct HarmonicTrackConfig {
  std::uint64_t seed = 1;
  int signal_length = 8192;
  // The support leaves the entropy optimum interior; a clamped constant fit
  // would pin the warm-started time-varying stage against the same bound.
  int support = 1024;
  double hop = 128.0;
  double t0 = 512.0;
  double theta0 = 400.0;
  int harmonic = 10;
  int max_iters = 150;
  double lr_theta = 2.0;
  // Wide enough for the fastest modulation of the tenth harmonic, which
  // sweeps roughly a dozen bins per hop at this resolution.
  int max_jump_bins = 16;
};

struct HarmonicTrackResult {
  double theta_const = 0.0;
  double mse_const = 0.0;
  double mse_time = 0.0;
};

HarmonicTrackResult run_harmonic_tracking(const HarmonicTrackConfig& cfg);

// ---- Joint window-length + linear-head classification ----

struct ClassifyConfig {
  int total_signals = 40;
  std::uint64_t seed = 11;
  int signal_length = 512;
  int support = 64;
  int num_frames = 8;
  double theta0 = 40.0;
  int epochs = 200;
  double lr_theta = 10.0;
  double lr_head = 0.05;
  // Ridge penalty on the head weights. On a separable set the bare
  // cross-entropy has no minimizer, so runs of different effective length
  // would never meet; the penalty gives both a common optimum.
  double weight_decay = 1e-2;
  std::vector<double> theta_grid = {16.0, 28.0, 40.0, 52.0, 64.0};
};

struct ClassifyDataset {
  std::vector<Signal> signals;
  std::vector<int> labels;
  std::vector<int> train_idx;
  std::vector<int> val_idx;
  std::vector<int> test_idx;
};

// Two-class set: one steady tone versus an unresolved-at-short-theta tone
// pair at matched power, split 80/10/10.
ClassifyDataset make_two_class_dataset(int total, int signal_length, std::uint64_t seed);

struct ClassifyRun {
  double theta_final = 0.0;
  std::vector<double> train_ce;  // per epoch
  std::vector<double> val_ce;
  double test_ce = 0.0;
  double test_accuracy = 0.0;
};

ClassifyRun train_classifier(const ClassifyDataset& ds, const ClassifyConfig& cfg,
                             double theta_init, bool train_theta);

struct ClassifyTaskResult {
  ClassifyRun joint;
  std::vector<std::pair<double, ClassifyRun>> grid;
  double best_grid_ce = 0.0;
};

ClassifyTaskResult run_classify_task(const ClassifyConfig& cfg);

}  // namespace dstft
