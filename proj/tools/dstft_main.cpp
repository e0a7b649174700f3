#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "dstft/errors.hpp"
#include "dstft/file_util.hpp"
#include "dstft/grad.hpp"
#include "dstft/optimize.hpp"
#include "dstft/pipelines.hpp"
#include "dstft/report.hpp"
#include "dstft/signal_io.hpp"
#include "dstft/signals.hpp"
#include "dstft/tracking.hpp"
#include "dstft/verify.hpp"
#include "json.hpp"

namespace {

using namespace dstft;

WindowKind parse_window(const std::string& name) {
  if (name == "hann") return WindowKind::Hann;
  if (name == "gauss") return WindowKind::TruncatedGaussian;
  throw std::invalid_argument("unknown window: " + name);
}

Signal load_by_format(const std::string& path, const std::string& format) {
  if (format.empty()) return load_signal_auto(path);
  if (format == "csv") return load_signal(path, FileFormat::Csv);
  if (format == "raw") return load_signal(path, FileFormat::RawF64WithSidecar);
  if (format == "wav") {
    try {
      return load_signal(path, FileFormat::WavPcm16);
    } catch (const IoError&) {
      return load_signal(path, FileFormat::WavFloat32);
    }
  }
  throw std::invalid_argument("unknown format: " + format);
}

struct CommonGeometry {
  int support = 256;
  double theta0 = 0.0;  // 0 picks a default from the support
  double hop = 0.0;
  double t0 = -1.0;
  int frames = 0;
};

void add_geometry_flags(CLI::App* cmd, CommonGeometry& g) {
  cmd->add_option("--support", g.support, "window support L (even)");
  cmd->add_option("--theta", g.theta0, "initial window length");
  cmd->add_option("--hop", g.hop, "hop between frame centers");
  cmd->add_option("--t0", g.t0, "first frame center");
  cmd->add_option("--frames", g.frames, "frame count (default: cover the signal)");
}

void finish_geometry(CommonGeometry& g, int signal_length) {
  if (g.hop <= 0.0) g.hop = g.support / 4.0;
  if (g.t0 < 0.0) g.t0 = g.support / 2.0;
  if (g.theta0 <= 0.0) g.theta0 = g.support / 2.0;
  if (g.frames <= 0) g.frames = frames_covering(signal_length, g.t0, g.hop, g.support);
}

void write_spectrogram_outputs(const std::string& prefix, const DstftPlan& plan,
                               const TfMatrix& tf, double sample_rate) {
  atomic_write(prefix + ".stft.csv", csv_complex_matrix(tf));
  atomic_write(prefix + ".mag.csv", csv_real_matrix(magnitude(tf), tf.rows, tf.cols));
  atomic_write(prefix + ".meta.json", meta_json(plan, tf, sample_rate));
  atomic_write(prefix + ".pgm", pgm_spectrogram(tf));
}

int cmd_spectrogram(const std::string& input, const std::string& format,
                    const std::string& window, CommonGeometry g, const std::string& prefix) {
  const Signal signal = load_by_format(input, format);
  if (g.theta0 <= 0.0) g.theta0 = g.support;  // spectrogram defaults to theta = L
  if (g.hop <= 0.0) g.hop = g.support / 4.0;
  if (g.t0 < 0.0) g.t0 = 0.0;
  if (g.frames <= 0) {
    g.frames = 1 + static_cast<int>(std::floor((signal.length() - g.t0) / g.hop));
  }
  DstftPlan plan = make_mode_plan("const", parse_window(window), g.support, g.frames, g.t0,
                                  g.hop, g.theta0);
  const TfMatrix tf = forward(plan, signal);
  write_spectrogram_outputs(prefix, plan, tf, signal.sample_rate);
  return 0;
}

int cmd_optimize(const std::string& mode, const std::string& objective_name, double lambda,
                 double lr, double lr_position, int max_iters, const std::string& init,
                 const std::string& scenario_name, int scenario_length,
                 const std::string& input, std::uint64_t seed, const std::string& window,
                 CommonGeometry g, const std::string& prefix) {
  Signal signal;
  if (!input.empty()) {
    signal = load_by_format(input, "");
  } else {
    signal = generate(scenario_by_name(scenario_name, scenario_length, seed)).signal;
  }
  finish_geometry(g, signal.length());
  const std::vector<Signal> signals = {signal};
  const ModeSetup setup = parse_mode(mode);
  const WindowKind kind = parse_window(window);

  double theta_start = g.theta0;
  if (init == "from-const") {
    // Warm start: solve the constant-length problem first, under the same
    // objective minus any field regularizer that needs the target layout.
    const std::string base =
        (objective_name == "entropy+nltv") ? "entropy" : objective_name;
    DstftPlan const_plan =
        make_mode_plan("const", kind, g.support, g.frames, g.t0, g.hop, g.theta0);
    OptimConfig ccfg;
    ccfg.lr_theta = lr;
    ccfg.max_iters = max_iters;
    const OptimResult warm = fit(const_plan, signals, *make_objective(base, lambda), ccfg);
    theta_start = warm.plan.lengths.values[0];
  } else if (init != "value") {
    throw std::invalid_argument("unknown init strategy: " + init);
  }

  DstftPlan plan = make_mode_plan(mode, kind, g.support, g.frames, g.t0, g.hop, theta_start);
  OptimConfig cfg;
  cfg.lr_theta = lr;
  cfg.lr_position = lr_position;
  cfg.max_iters = max_iters;
  cfg.train_positions = setup.train_positions;
  cfg.position_min = 0.0;
  cfg.position_max = static_cast<double>(signal.length());
  const OptimResult res = fit(plan, signals, *make_objective(objective_name, lambda), cfg);

  atomic_write(prefix + ".trace.csv", csv_trace(res.loss_trace, res.grad_norm_trace));
  atomic_write(prefix + ".params.json", params_json(res.plan));
  const TfMatrix tf = forward(res.plan, signal);
  atomic_write(prefix + ".mag.csv", csv_real_matrix(magnitude(tf), tf.rows, tf.cols));
  atomic_write(prefix + ".pgm", pgm_spectrogram(tf));
  if (res.plan.lengths.mode == LengthMode::TimeFreq) {
    const auto& theta = res.plan.lengths.values;
    atomic_write(prefix + ".thetamap.csv", csv_real_matrix(theta, tf.rows, tf.cols));
    const double lo = *std::min_element(theta.begin(), theta.end());
    const double hi = *std::max_element(theta.begin(), theta.end());
    atomic_write(prefix + ".thetamap.pgm", pgm_image(theta, tf.rows, tf.cols, lo, hi, true));
  }
  return 0;
}

void parse_sweep_spec(const std::string& spec, double& lo, double& hi, double& step) {
  const size_t a = spec.find(':');
  const size_t b = (a == std::string::npos) ? std::string::npos : spec.find(':', a + 1);
  if (a == std::string::npos || b == std::string::npos) {
    throw std::invalid_argument("sweep spec must be lo:hi:step");
  }
  try {
    lo = std::stod(spec.substr(0, a));
    hi = std::stod(spec.substr(a + 1, b - a - 1));
    step = std::stod(spec.substr(b + 1));
  } catch (const std::exception&) {
    throw std::invalid_argument("sweep spec must be lo:hi:step");
  }
}

int cmd_taskfit(const std::string& task, int dataset_size, std::uint64_t seed,
                const std::string& sweep_spec, const std::string& prefix) {
  if (task == "track") {
    TrackTaskConfig cfg;
    if (dataset_size > 0) cfg.dataset_size = dataset_size;
    cfg.seed = seed;
    if (!sweep_spec.empty()) {
      parse_sweep_spec(sweep_spec, cfg.sweep_lo, cfg.sweep_hi, cfg.sweep_step);
    }
    const TrackTaskResult res = run_track_task(cfg);
    std::vector<std::pair<double, double>> curve;
    for (const auto& p : res.sweep) curve.emplace_back(p.theta, p.value);
    atomic_write(prefix + ".sweep.csv", csv_sweep(curve));
    atomic_write(prefix + ".trace.csv",
                 csv_trace(res.opt.loss_trace, res.opt.grad_norm_trace));
    nlohmann::json j = {{"sweep_argmin", res.sweep_argmin},
                        {"learned_theta", res.learned_theta},
                        {"mse_learned", res.mse_learned},
                        {"mse_minus_50", res.mse_minus},
                        {"mse_plus_50", res.mse_plus}};
    atomic_write(prefix + ".optima.json", j.dump(2) + "\n");
    return 0;
  }
  if (task == "classify") {
    ClassifyConfig cfg;
    if (dataset_size > 0) cfg.total_signals = dataset_size;
    cfg.seed = seed;
    const ClassifyTaskResult res = run_classify_task(cfg);
    std::string epochs = "epoch,train_ce,val_ce\n";
    for (size_t e = 0; e < res.joint.train_ce.size(); ++e) {
      epochs += std::to_string(e) + "," + format_g17(res.joint.train_ce[e]) + "," +
                format_g17(res.joint.val_ce[e]) + "\n";
    }
    atomic_write(prefix + ".epochs.csv", epochs);
    nlohmann::json grid = nlohmann::json::array();
    for (const auto& [theta, run] : res.grid) {
      grid.push_back({{"theta", theta}, {"test_ce", run.test_ce}});
    }
    nlohmann::json j = {{"joint",
                         {{"theta_final", res.joint.theta_final},
                          {"test_ce", res.joint.test_ce},
                          {"test_accuracy", res.joint.test_accuracy}}},
                        {"grid", grid},
                        {"best_grid_ce", res.best_grid_ce}};
    atomic_write(prefix + ".result.json", j.dump(2) + "\n");
    return 0;
  }
  throw std::invalid_argument("unknown task: " + task);
}

int cmd_gradcheck(bool all, const std::string& only_mode, std::uint64_t seed) {
  const int support = 32;
  const int frames = 5;
  const int length = 128;
  const int bins = support / 2 + 1;
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Signal signal;
  signal.samples.resize(length);
  for (double& x : signal.samples) x = dist(gen);
  const std::vector<Signal> signals = {signal};

  struct Combo {
    const char* mode_name;
    LengthMode mode;
  };
  const std::vector<Combo> combos = {{"const", LengthMode::Constant},
                                     {"time", LengthMode::TimeVarying},
                                     {"freq", LengthMode::FreqVarying},
                                     {"tf", LengthMode::TimeFreq}};
  const SumSquaredMagnitude sumsq;
  const EntropyObjective entropy;
  double worst = 0.0;
  std::cout << "window,length_mode,position_mode,objective,max_rel_err,degenerate\n";
  for (const auto& combo : combos) {
    if (!all && !only_mode.empty() && only_mode != combo.mode_name) continue;
    for (WindowKind kind : {WindowKind::Hann, WindowKind::TruncatedGaussian}) {
      DstftPlan plan;
      plan.window = {kind, support};
      plan.num_frames = frames;
      // Fractional length and start keep the taper edge off the sample grid,
      // where the finite-difference reference holds its full order.
      plan.lengths = broadcast_theta(combo.mode, 20.6, bins, frames);
      plan.positions = PositionField::uniform_hop(support / 2.0 + 0.37, 20.0);
      plan.validate();
      for (const Objective* objective : {static_cast<const Objective*>(&sumsq),
                                         static_cast<const Objective*>(&entropy)}) {
        const VjpReport report = vjp_check(plan, signals, *objective);
        worst = std::max(worst, report.max_rel_err);
        std::cout << to_string(kind) << "," << to_string(combo.mode) << ",uniform-hop,"
                  << objective->name() << "," << format_g17(report.max_rel_err) << ","
                  << report.degenerate_count << "\n";
      }
    }
  }
  std::cerr << "max relative error " << format_g17(worst) << "\n";
  return worst <= 1e-5 ? 0 : 1;
}

int cmd_bench(const std::string& sizes_spec) {
  std::vector<std::pair<int, int>> sizes;
  size_t pos = 0;
  while (pos < sizes_spec.size()) {
    const size_t comma = sizes_spec.find(',', pos);
    const std::string item = sizes_spec.substr(pos, comma - pos);
    const size_t colon = item.find(':');
    if (colon == std::string::npos) {
      throw std::invalid_argument("sizes spec must be N:L,N:L,...");
    }
    try {
      sizes.emplace_back(std::stoi(item.substr(0, colon)), std::stoi(item.substr(colon + 1)));
    } catch (const std::exception&) {
      throw std::invalid_argument("sizes spec must be N:L,N:L,...");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  std::cout << "mode,frames,support,forward_seconds,backward_seconds\n";
  bool monotone = true;
  for (LengthMode mode : {LengthMode::TimeVarying, LengthMode::TimeFreq}) {
    const std::vector<ProbeRow> rows = complexity_probe(mode, sizes);
    for (size_t i = 0; i < rows.size(); ++i) {
      std::cout << to_string(mode) << "," << rows[i].num_frames << "," << rows[i].support << ","
                << format_g17(rows[i].forward_seconds) << ","
                << format_g17(rows[i].backward_seconds) << "\n";
      if (i > 0 && rows[i].support > rows[i - 1].support &&
          rows[i].forward_seconds <= rows[i - 1].forward_seconds) {
        monotone = false;
      }
    }
  }
  return monotone ? 0 : 1;
}

int run(int argc, char** argv) {
  CLI::App app{"differentiable short-time Fourier transform toolkit"};
  app.require_subcommand(1);

  // spectrogram
  auto* spec_cmd = app.add_subcommand("spectrogram", "write the transform of a signal file");
  std::string spec_input;
  std::string spec_format;
  std::string spec_window = "hann";
  std::string spec_out;
  CommonGeometry spec_geom;
  spec_cmd->add_option("--input", spec_input, "signal file")->required();
  spec_cmd->add_option("--format", spec_format, "wav|csv|raw (default: by extension)");
  spec_cmd->add_option("--window", spec_window, "hann|gauss");
  add_geometry_flags(spec_cmd, spec_geom);
  spec_cmd->add_option("--out", spec_out, "output prefix")->required();

  // optimize
  auto* opt_cmd = app.add_subcommand("optimize", "gradient descent over plan parameters");
  std::string opt_mode = "const";
  std::string opt_objective = "entropy";
  double opt_lambda = 1e-3;
  double opt_lr = 1.0;
  double opt_lr_position = 0.1;
  int opt_max_iters = 300;
  std::string opt_init = "value";
  std::string opt_scenario = "three-component";
  int opt_length = 0;
  std::string opt_input;
  std::uint64_t opt_seed = 1;
  std::string opt_window = "gauss";
  std::string opt_out;
  CommonGeometry opt_geom;
  opt_cmd->add_option("--mode", opt_mode, "const|time|freq|tf|hop|fixed-overlap");
  opt_cmd->add_option("--objective", opt_objective, "entropy|entropy+nltv|kurtosis+coverage");
  opt_cmd->add_option("--lambda", opt_lambda, "regularizer weight");
  opt_cmd->add_option("--lr", opt_lr, "window-length learning rate");
  opt_cmd->add_option("--lr-position", opt_lr_position, "position learning rate");
  opt_cmd->add_option("--max-iters", opt_max_iters, "iteration budget");
  opt_cmd->add_option("--init", opt_init, "value|from-const");
  opt_cmd->add_option("--scenario", opt_scenario, "built-in scenario name");
  opt_cmd->add_option("--length", opt_length, "scenario length override");
  opt_cmd->add_option("--input", opt_input, "signal file instead of a scenario");
  opt_cmd->add_option("--seed", opt_seed, "scenario seed");
  opt_cmd->add_option("--window", opt_window, "hann|gauss");
  add_geometry_flags(opt_cmd, opt_geom);
  opt_cmd->add_option("--out", opt_out, "output prefix")->required();

  // taskfit
  auto* task_cmd = app.add_subcommand("taskfit", "task-driven window-length fitting");
  std::string task_name;
  int task_dataset = 0;
  std::uint64_t task_seed = 7;
  std::string task_sweep;
  std::string task_out;
  task_cmd->add_option("--task", task_name, "track|classify")->required();
  task_cmd->add_option("--dataset-size", task_dataset, "number of signals");
  task_cmd->add_option("--seed", task_seed, "dataset seed");
  task_cmd->add_option("--sweep", task_sweep, "lo:hi:step for the baseline sweep");
  task_cmd->add_option("--out", task_out, "output prefix")->required();

  // gradcheck
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient audit");
  bool grad_all = false;
  std::string grad_mode;
  std::uint64_t grad_seed = 7;
  grad_cmd->add_flag("--all", grad_all, "every length mode");
  grad_cmd->add_option("--mode", grad_mode, "const|time|freq|tf");
  grad_cmd->add_option("--seed", grad_seed, "signal seed");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "wall-clock scaling probes");
  std::string bench_sizes = "48:256,48:512,48:1024";
  bench_cmd->add_option("--sizes", bench_sizes, "comma list of N:L pairs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (spec_cmd->parsed()) {
    return cmd_spectrogram(spec_input, spec_format, spec_window, spec_geom, spec_out);
  }
  if (opt_cmd->parsed()) {
    if (opt_input.empty() && opt_scenario.empty()) {
      throw std::invalid_argument("optimize needs --scenario or --input");
    }
    return cmd_optimize(opt_mode, opt_objective, opt_lambda, opt_lr, opt_lr_position,
                        opt_max_iters, opt_init, opt_scenario, opt_length, opt_input, opt_seed,
                        opt_window, opt_geom, opt_out);
  }
  if (task_cmd->parsed()) {
    return cmd_taskfit(task_name, task_dataset, task_seed, task_sweep, task_out);
  }
  if (grad_cmd->parsed()) {
    if (!grad_all && grad_mode.empty()) {
      throw std::invalid_argument("gradcheck needs --all or --mode");
    }
    return cmd_gradcheck(grad_all, grad_mode, grad_seed);
  }
  if (bench_cmd->parsed()) {
    return cmd_bench(bench_sizes);
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const dstft::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const dstft::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const dstft::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
