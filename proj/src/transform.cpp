#include "dstft/transform.hpp"

#include <fftw3.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

namespace dstft {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::atomic<std::uint64_t> g_forward_calls{0};

// Per-length working set: one FFTW real-to-complex plan plus the table of
// L-th roots exp(-2 pi i r / L) shared by the fast and direct paths.
struct LengthWorkspace {
  int length = 0;
  double* in = nullptr;
  fftw_complex* out = nullptr;
  fftw_plan plan = nullptr;
  std::vector<std::complex<double>> roots;

  explicit LengthWorkspace(int L) : length(L) {
    in = static_cast<double*>(fftw_malloc(sizeof(double) * static_cast<size_t>(L)));
    out = static_cast<fftw_complex*>(
        fftw_malloc(sizeof(fftw_complex) * (static_cast<size_t>(L) / 2 + 1)));
    if (in == nullptr || out == nullptr) throw std::bad_alloc();
    plan = fftw_plan_dft_r2c_1d(L, in, out, FFTW_ESTIMATE);
    if (plan == nullptr) throw std::runtime_error("fftw plan creation failed");
    roots.resize(static_cast<size_t>(L));
    for (int r = 0; r < L; ++r) {
      roots[static_cast<size_t>(r)] = std::polar(1.0, -kTwoPi * r / L);
    }
  }

  ~LengthWorkspace() {
    if (plan != nullptr) fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);
  }

  LengthWorkspace(const LengthWorkspace&) = delete;
  LengthWorkspace& operator=(const LengthWorkspace&) = delete;
};

// FFTW planning is not thread-safe, and the workspace buffers are reused
// between calls, so all access goes through one lock.
class WorkspaceRegistry {
 public:
  static WorkspaceRegistry& instance() {
    static WorkspaceRegistry reg;
    return reg;
  }

  std::unique_lock<std::mutex> lock() { return std::unique_lock<std::mutex>(mu_); }

  LengthWorkspace& get(int length) {
    auto it = map_.find(length);
    if (it == map_.end()) {
      it = map_.emplace(length, std::make_unique<LengthWorkspace>(length)).first;
    }
    return *it->second;
  }

 private:
  std::mutex mu_;
  std::unordered_map<int, std::unique_ptr<LengthWorkspace>> map_;
};

double sample_at(const Signal& signal, long long index) {
  if (index < 0 || index >= static_cast<long long>(signal.samples.size())) return 0.0;
  return signal.samples[static_cast<size_t>(index)];
}

void check_signal(const Signal& signal) {
  if (signal.samples.empty()) throw std::invalid_argument("signal must be non-empty");
  for (double v : signal.samples) {
    if (!std::isfinite(v)) throw std::invalid_argument("signal contains non-finite samples");
  }
}

int wrap_mod(long long value, int modulus) {
  long long r = value % modulus;
  if (r < 0) r += modulus;
  return static_cast<int>(r);
}

}  // namespace

LengthField LengthField::constant(double theta) { return {LengthMode::Constant, {theta}}; }

LengthField LengthField::time_varying(std::vector<double> theta_n) {
  return {LengthMode::TimeVarying, std::move(theta_n)};
}

LengthField LengthField::freq_varying(std::vector<double> theta_m) {
  return {LengthMode::FreqVarying, std::move(theta_m)};
}

LengthField LengthField::time_freq(std::vector<double> theta_mn) {
  return {LengthMode::TimeFreq, std::move(theta_mn)};
}

PositionField PositionField::explicit_positions(std::vector<double> t_n) {
  return {PositionMode::Explicit, std::move(t_n)};
}

PositionField PositionField::uniform_hop(double t0, double hop) {
  return {PositionMode::UniformHop, {t0, hop}};
}

PositionField PositionField::varying_hop(std::vector<double> hops) {
  return {PositionMode::VaryingHop, std::move(hops)};
}

PositionField PositionField::fixed_overlap(double alpha, double t0) {
  return {PositionMode::FixedOverlap, {alpha, t0}};
}

void DstftPlan::validate() const {
  window.validate();
  if (num_frames < 1) throw std::invalid_argument("plan needs at least one frame");
  const int m_bins = num_bins();

  size_t want_lengths = 0;
  switch (lengths.mode) {
    case LengthMode::Constant:
      want_lengths = 1;
      break;
    case LengthMode::TimeVarying:
      want_lengths = static_cast<size_t>(num_frames);
      break;
    case LengthMode::FreqVarying:
      want_lengths = static_cast<size_t>(m_bins);
      break;
    case LengthMode::TimeFreq:
      want_lengths = static_cast<size_t>(m_bins) * static_cast<size_t>(num_frames);
      break;
  }
  if (lengths.values.size() != want_lengths) {
    throw std::invalid_argument("length field size does not match plan shape");
  }
  for (double theta : lengths.values) {
    if (!std::isfinite(theta)) throw std::invalid_argument("non-finite window length");
    if (theta < kThetaMin || theta > static_cast<double>(window.support)) {
      throw std::domain_error("window length outside [2, support]");
    }
  }

  size_t want_positions = 0;
  switch (positions.mode) {
    case PositionMode::Explicit:
    case PositionMode::VaryingHop:
      want_positions = static_cast<size_t>(num_frames);
      break;
    case PositionMode::UniformHop:
    case PositionMode::FixedOverlap:
      want_positions = 2;
      break;
  }
  if (positions.values.size() != want_positions) {
    throw std::invalid_argument("position field size does not match plan shape");
  }
  for (double v : positions.values) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite position parameter");
  }
  if (positions.mode == PositionMode::FixedOverlap) {
    const double alpha = positions.values[0];
    if (!(alpha > 0.0 && alpha < 1.0)) {
      throw std::domain_error("overlap ratio must lie in (0, 1)");
    }
    if (lengths.mode != LengthMode::TimeVarying) {
      throw std::invalid_argument("fixed-overlap positions require time-varying lengths");
    }
  }
}

double DstftPlan::theta_at(int m, int n) const {
  switch (lengths.mode) {
    case LengthMode::Constant:
      return lengths.values[0];
    case LengthMode::TimeVarying:
      return lengths.values[static_cast<size_t>(n)];
    case LengthMode::FreqVarying:
      return lengths.values[static_cast<size_t>(m)];
    case LengthMode::TimeFreq:
      return lengths.values[static_cast<size_t>(m) * num_frames + n];
  }
  throw std::logic_error("unreachable length mode");
}

std::vector<double> DstftPlan::theta_per_frame() const {
  switch (lengths.mode) {
    case LengthMode::Constant:
      return std::vector<double>(static_cast<size_t>(num_frames), lengths.values[0]);
    case LengthMode::TimeVarying:
      return lengths.values;
    default:
      throw std::invalid_argument("per-frame lengths need Constant or TimeVarying mode");
  }
}

std::vector<double> resolve_positions(const DstftPlan& plan) {
  plan.validate();
  const int n_frames = plan.num_frames;
  std::vector<double> t(static_cast<size_t>(n_frames));
  switch (plan.positions.mode) {
    case PositionMode::Explicit:
      t = plan.positions.values;
      break;
    case PositionMode::UniformHop: {
      const double t0 = plan.positions.values[0];
      const double hop = plan.positions.values[1];
      for (int n = 0; n < n_frames; ++n) t[static_cast<size_t>(n)] = t0 + n * hop;
      break;
    }
    case PositionMode::VaryingHop: {
      double acc = 0.0;
      for (int n = 0; n < n_frames; ++n) {
        acc += plan.positions.values[static_cast<size_t>(n)];
        t[static_cast<size_t>(n)] = acc;
      }
      break;
    }
    case PositionMode::FixedOverlap: {
      const double alpha = plan.positions.values[0];
      const double t0 = plan.positions.values[1];
      const std::vector<double>& theta = plan.lengths.values;  // TimeVarying, size N
      double cur = t0;
      for (int n = 0; n < n_frames; ++n) {
        t[static_cast<size_t>(n)] = cur;
        cur += alpha * theta[static_cast<size_t>(n)];
      }
      break;
    }
  }
  return t;
}

TfMatrix forward_taper(const DstftPlan& plan, const Signal& signal, TaperPart part) {
  plan.validate();
  check_signal(signal);

  const int L = plan.window.support;
  const int M = plan.num_bins();
  const int N = plan.num_frames;
  const int half = L / 2;
  const std::vector<double> positions = resolve_positions(plan);

  TfMatrix tf;
  tf.rows = M;
  tf.cols = N;
  tf.values.assign(static_cast<size_t>(M) * static_cast<size_t>(N), {0.0, 0.0});
  tf.delta_f = signal.sample_rate / L;
  tf.frame_positions = positions;

  const bool fast = plan.lengths.mode == LengthMode::Constant ||
                    plan.lengths.mode == LengthMode::TimeVarying;

  auto& registry = WorkspaceRegistry::instance();
  auto guard = registry.lock();
  LengthWorkspace& ws = registry.get(L);

  std::vector<double> segment(static_cast<size_t>(L));
  for (int n = 0; n < N; ++n) {
    const double t = positions[static_cast<size_t>(n)];
    const double floor_t = std::floor(t);
    const double frac = t - floor_t;
    const long long base = static_cast<long long>(floor_t);
    const int phase_step = wrap_mod(base, L);

    // segment[i] holds s~[base + k] for k = i - L/2 + 1.
    for (int i = 0; i < L; ++i) {
      segment[static_cast<size_t>(i)] = sample_at(signal, base + (i - half + 1));
    }

    if (fast) {
      const double theta = plan.lengths.mode == LengthMode::Constant
                               ? plan.lengths.values[0]
                               : plan.lengths.values[static_cast<size_t>(n)];
      const std::vector<double> taper = sample_frame(plan.window, frac, theta, part);
      for (int i = 0; i < L; ++i) {
        const int k = i - half + 1;
        const int j = k >= 0 ? k : k + L;
        ws.in[j] = taper[static_cast<size_t>(i)] * segment[static_cast<size_t>(i)];
      }
      fftw_execute(ws.plan);
      for (int m = 0; m < M; ++m) {
        const std::complex<double> bin(ws.out[m][0], ws.out[m][1]);
        const int r = static_cast<int>((static_cast<long long>(phase_step) * m) % L);
        tf.at(m, n) = bin * ws.roots[static_cast<size_t>(r)];
      }
    } else {
      for (int m = 0; m < M; ++m) {
        const double theta = plan.theta_at(m, n);
        std::complex<double> acc(0.0, 0.0);
        for (int i = 0; i < L; ++i) {
          const int k = i - half + 1;
          const double w = window_taper(plan.window, part, static_cast<double>(k) - frac, theta);
          if (w == 0.0) continue;
          const int rk = k >= 0 ? k : k + L;
          const int r = static_cast<int>((static_cast<long long>(rk) * m) % L);
          acc += w * segment[static_cast<size_t>(i)] * ws.roots[static_cast<size_t>(r)];
        }
        const int r0 = static_cast<int>((static_cast<long long>(phase_step) * m) % L);
        tf.at(m, n) = acc * ws.roots[static_cast<size_t>(r0)];
      }
    }
  }
  return tf;
}

TfMatrix forward(const DstftPlan& plan, const Signal& signal) {
  g_forward_calls.fetch_add(1, std::memory_order_relaxed);
  return forward_taper(plan, signal, TaperPart::Value);
}

TfMatrix classical_stft(const Signal& signal, int support, int hop, long long t0,
                        WindowKind kind) {
  if (hop < 1) throw std::invalid_argument("hop must be a positive integer");
  check_signal(signal);
  DstftPlan plan;
  plan.window = {kind, support};
  plan.window.validate();
  plan.lengths = LengthField::constant(static_cast<double>(support));
  plan.positions = PositionField::uniform_hop(static_cast<double>(t0), static_cast<double>(hop));
  plan.num_frames = 1 + signal.length() / hop;
  return forward(plan, signal);
}

std::vector<double> magnitude(const TfMatrix& tf) {
  std::vector<double> out(tf.values.size());
  for (size_t i = 0; i < tf.values.size(); ++i) out[i] = std::abs(tf.values[i]);
  return out;
}

std::vector<double> log_power(const TfMatrix& tf, double floor_mag) {
  std::vector<double> out(tf.values.size());
  for (size_t i = 0; i < tf.values.size(); ++i) {
    out[i] = 20.0 * std::log10(std::max(std::abs(tf.values[i]), floor_mag));
  }
  return out;
}

std::uint64_t forward_call_count() { return g_forward_calls.load(std::memory_order_relaxed); }

}  // namespace dstft
