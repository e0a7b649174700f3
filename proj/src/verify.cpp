#include "dstft/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "dstft/optimize.hpp"

namespace dstft {

namespace {

long long wrap_mod(long long value, long long modulus) {
  long long r = value % modulus;
  if (r < 0) r += modulus;
  return r;
}

double objective_value(const DstftPlan& plan, const std::vector<Signal>& signals,
                       const Objective& objective) {
  plan.validate();
  double value = 0.0;
  for (size_t j = 0; j < signals.size(); ++j) {
    const TfMatrix tf = forward(plan, signals[j]);
    value += objective.evaluate(plan, signals[j], tf, static_cast<int>(j)).value;
  }
  return value / static_cast<double>(signals.size());
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

TfMatrix naive_dstft(const DstftPlan& plan, const Signal& signal) {
  plan.validate();
  if (signal.samples.empty()) throw std::invalid_argument("naive_dstft: empty signal");
  const int L = plan.window.support;
  const int M = L / 2 + 1;
  const int N = plan.num_frames;
  const int len = signal.length();

  // Positions resolved locally so the oracle does not lean on the fast
  // path's plumbing.
  std::vector<double> t(static_cast<size_t>(N), 0.0);
  switch (plan.positions.mode) {
    case PositionMode::Explicit:
      t = plan.positions.values;
      break;
    case PositionMode::UniformHop:
      for (int n = 0; n < N; ++n) t[n] = plan.positions.values[0] + n * plan.positions.values[1];
      break;
    case PositionMode::VaryingHop: {
      double acc = 0.0;
      for (int n = 0; n < N; ++n) {
        acc += plan.positions.values[n];
        t[n] = acc;
      }
      break;
    }
    case PositionMode::FixedOverlap: {
      const double alpha = plan.positions.values[0];
      double cur = plan.positions.values[1];
      for (int n = 0; n < N; ++n) {
        t[n] = cur;
        cur += alpha * plan.lengths.values[n];
      }
      break;
    }
  }

  TfMatrix out;
  out.rows = M;
  out.cols = N;
  out.values.assign(static_cast<size_t>(M) * N, {0.0, 0.0});
  out.delta_f = signal.sample_rate / L;
  out.frame_positions = t;

  constexpr double kTau = 2.0 * std::numbers::pi;
  for (int n = 0; n < N; ++n) {
    const double floor_t = std::floor(t[n]);
    const double frac = t[n] - floor_t;
    const long long base = static_cast<long long>(floor_t);
    for (int m = 0; m < M; ++m) {
      const double theta = plan.theta_at(m, n);
      std::complex<double> acc(0.0, 0.0);
      for (int k = -L / 2 + 1; k <= L / 2; ++k) {
        const double w = window_eval(plan.window, k - frac, theta);
        if (w == 0.0) continue;
        const long long idx = base + k;
        const double s = (idx >= 0 && idx < len) ? signal.samples[static_cast<size_t>(idx)] : 0.0;
        if (s == 0.0) continue;
        const long long r = wrap_mod(wrap_mod(idx, L) * m, L);
        const double angle = -kTau * static_cast<double>(r) / L;
        acc += w * s * std::complex<double>(std::cos(angle), std::sin(angle));
      }
      out.at(m, n) = acc;
    }
  }
  return out;
}

double fd_step(ParamKind kind, double param) {
  if (kind == ParamKind::Position) return 1e-4;
  return 1e-5 * std::max(1.0, std::abs(param));
}

double finite_diff(const DstftPlan& plan, const std::vector<Signal>& signals,
                   const Objective& objective, ParamSelector which, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff: step must be positive");
  if (signals.empty()) throw std::invalid_argument("finite_diff: signal set is empty");
  DstftPlan hi = plan;
  DstftPlan lo = plan;
  auto bump = [&](DstftPlan& p, double delta) {
    std::vector<double>& v =
        (which.kind == ParamKind::Length) ? p.lengths.values : p.positions.values;
    v.at(static_cast<size_t>(which.index)) += delta;
  };
  bump(hi, h);
  bump(lo, -h);
  return (objective_value(hi, signals, objective) - objective_value(lo, signals, objective)) /
         (2.0 * h);
}

double finite_diff(const DstftPlan& plan, const Signal& signal, const Objective& objective,
                   ParamSelector which, double h) {
  return finite_diff(plan, std::vector<Signal>{signal}, objective, which, h);
}

namespace {

// A shared position parameter moves several frames at once: the uniform hop
// shifts frame n by n steps, and the overlap ratio shifts it by the lengths
// accumulated so far. The probe step shrinks by that reach so the effective
// frame displacement stays near the base step.
double position_leverage(const DstftPlan& plan, int index) {
  switch (plan.positions.mode) {
    case PositionMode::UniformHop:
      return index == 1 ? std::max(1.0, static_cast<double>(plan.num_frames - 1)) : 1.0;
    case PositionMode::FixedOverlap: {
      if (index != 0) return 1.0;
      double reach = 0.0;
      for (int n = 0; n + 1 < plan.num_frames; ++n) {
        reach += plan.lengths.values[static_cast<size_t>(n)];
      }
      return std::max(1.0, reach);
    }
    default:
      return 1.0;
  }
}

}  // namespace

VjpReport vjp_check(const DstftPlan& plan, const std::vector<Signal>& signals,
                    const Objective& objective, double zero_floor) {
  const ParamGradients analytic = total_gradient(plan, signals, objective);
  VjpReport report;
  auto gather = [&](ParamKind kind, const std::vector<double>& grads,
                    const std::vector<double>& params) {
    for (size_t i = 0; i < grads.size(); ++i) {
      VjpEntry entry;
      entry.param = {kind, static_cast<int>(i)};
      entry.analytic = grads[i];
      double h = fd_step(kind, params[i]);
      if (kind == ParamKind::Position) {
        h /= position_leverage(plan, static_cast<int>(i));
      }
      entry.numeric = finite_diff(plan, signals, objective, entry.param, h);
      report.entries.push_back(entry);
    }
  };
  gather(ParamKind::Length, analytic.d_lengths, plan.lengths.values);
  gather(ParamKind::Position, analytic.d_positions, plan.positions.values);

  // Entries far below the dominant gradient magnitude are compared against
  // the group scale: dividing finite-difference noise by a vanishing entry
  // would measure the noise, not the implementation.
  double group_scale = 0.0;
  for (const VjpEntry& entry : report.entries) {
    group_scale =
        std::max({group_scale, std::abs(entry.analytic), std::abs(entry.numeric)});
  }
  for (VjpEntry& entry : report.entries) {
    const double scale = std::max(std::abs(entry.analytic), std::abs(entry.numeric));
    if (scale < zero_floor) {
      entry.degenerate = true;
      ++report.degenerate_count;
      continue;
    }
    entry.rel_err =
        std::abs(entry.analytic - entry.numeric) / std::max(scale, 1e-3 * group_scale);
    report.max_rel_err = std::max(report.max_rel_err, entry.rel_err);
  }
  return report;
}

std::vector<ProbeRow> complexity_probe(LengthMode mode,
                                       const std::vector<std::pair<int, int>>& sizes) {
  for (size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i].second < sizes[i - 1].second) {
      throw std::invalid_argument("complexity_probe: sizes must ascend in support");
    }
  }
  std::vector<ProbeRow> rows;
  for (const auto& [frames, support] : sizes) {
    const int hop = support / 4;
    const double t0 = support / 2;
    const int length = static_cast<int>(t0) + hop * frames + support;
    std::mt19937_64 gen(42);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Signal signal;
    signal.samples.resize(static_cast<size_t>(length));
    for (double& x : signal.samples) x = dist(gen);

    const int bins = support / 2 + 1;
    const double theta = 0.8 * support;
    DstftPlan plan;
    plan.window = {WindowKind::Hann, support};
    plan.num_frames = frames;
    plan.positions = PositionField::uniform_hop(t0, hop);
    switch (mode) {
      case LengthMode::Constant:
        plan.lengths = LengthField::constant(theta);
        break;
      case LengthMode::TimeVarying:
        plan.lengths = LengthField::time_varying(std::vector<double>(frames, theta));
        break;
      case LengthMode::FreqVarying:
        plan.lengths = LengthField::freq_varying(std::vector<double>(bins, theta));
        break;
      case LengthMode::TimeFreq:
        plan.lengths =
            LengthField::time_freq(std::vector<double>(static_cast<size_t>(bins) * frames, theta));
        break;
    }
    plan.validate();

    using clock = std::chrono::steady_clock;
    auto time_forward = [&]() {
      const auto start = clock::now();
      const TfMatrix tf = forward(plan, signal);
      const auto stop = clock::now();
      (void)tf;
      return std::chrono::duration<double>(stop - start).count();
    };
    Cotangent u = Cotangent::zeros(bins, frames);
    for (auto& c : u.values) c = {1.0, 0.5};
    auto time_backward = [&]() {
      const auto start = clock::now();
      const ParamGradients g = backward(plan, signal, u);
      const auto stop = clock::now();
      (void)g;
      return std::chrono::duration<double>(stop - start).count();
    };

    // One untimed pass warms the FFT plan cache for this support.
    (void)forward(plan, signal);
    ProbeRow row;
    row.num_frames = frames;
    row.support = support;
    std::vector<double> fwd_samples(9);
    std::vector<double> bwd_samples(9);
    for (size_t rep = 0; rep < fwd_samples.size(); ++rep) {
      fwd_samples[rep] = time_forward();
      bwd_samples[rep] = time_backward();
    }
    row.forward_seconds = median_of(std::move(fwd_samples));
    row.backward_seconds = median_of(std::move(bwd_samples));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace dstft
