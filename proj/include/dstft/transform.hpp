#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "dstft/window.hpp"

namespace dstft {

struct Signal {
  std::vector<double> samples;
  double sample_rate = 1.0;

  int length() const { return static_cast<int>(samples.size()); }
};

enum class LengthMode { Constant, TimeVarying, FreqVarying, TimeFreq };

// Trainable window-length field. values size by mode: Constant 1,
// TimeVarying N, FreqVarying M, TimeFreq M*N row-major (index m*N + n).
struct LengthField {
  LengthMode mode = LengthMode::Constant;
  std::vector<double> values;

  static LengthField constant(double theta);
  static LengthField time_varying(std::vector<double> theta_n);
  static LengthField freq_varying(std::vector<double> theta_m);
  static LengthField time_freq(std::vector<double> theta_mn);
};

enum class PositionMode { Explicit, UniformHop, VaryingHop, FixedOverlap };

// Frame-position parameterization. values by mode:
//   Explicit      t_n, size N
//   UniformHop    {t0, H};          t_n = t0 + n*H
//   VaryingHop    H_n, size N;      t_n = H_0 + ... + H_n
//   FixedOverlap  {alpha, t0};      t_0 = t0, t_n = t_{n-1} + alpha*theta_{n-1}
struct PositionField {
  PositionMode mode = PositionMode::UniformHop;
  std::vector<double> values;

  static PositionField explicit_positions(std::vector<double> t_n);
  static PositionField uniform_hop(double t0, double hop);
  static PositionField varying_hop(std::vector<double> hops);
  static PositionField fixed_overlap(double alpha, double t0);
};

struct DstftPlan {
  WindowSpec window;
  LengthField lengths;
  PositionField positions;
  int num_frames = 0;

  int num_bins() const { return window.support / 2 + 1; }
  void validate() const;

  // Window length governing bin (m, n).
  double theta_at(int m, int n) const;
  // Per-frame lengths; valid for Constant and TimeVarying modes only.
  std::vector<double> theta_per_frame() const;
};

struct TfMatrix {
  int rows = 0;  // bins M
  int cols = 0;  // frames N
  std::vector<std::complex<double>> values;  // row-major, index m*cols + n
  double delta_f = 0.0;
  std::vector<double> frame_positions;

  std::complex<double>& at(int m, int n) { return values[static_cast<size_t>(m) * cols + n]; }
  const std::complex<double>& at(int m, int n) const {
    return values[static_cast<size_t>(m) * cols + n];
  }
};

// Resolved frame centers t_n for any position mode.
std::vector<double> resolve_positions(const DstftPlan& plan);

// Transform of the signal under the plan. Frames are centered at the
// resolved t_n; samples outside [0, L_s) read as zero. Constant and
// TimeVarying lengths go through a per-frame real FFT; FreqVarying and
// TimeFreq fall back to the direct per-bin sum. Bins 0..L/2 are kept.
TfMatrix forward(const DstftPlan& plan, const Signal& signal);

// Same framing, phase, and paths as forward, with the taper replaced by one
// of the window's partial derivatives. The gradient module builds on this.
TfMatrix forward_taper(const DstftPlan& plan, const Signal& signal, TaperPart part);

// Fixed-window STFT: theta = L on a uniform integer grid t_n = t0 + n*hop,
// with 1 + floor(L_s/hop) frames.
TfMatrix classical_stft(const Signal& signal, int support, int hop, long long t0,
                        WindowKind kind = WindowKind::Hann);

std::vector<double> magnitude(const TfMatrix& tf);
// 20*log10(max(|S|, floor_mag)), elementwise.
std::vector<double> log_power(const TfMatrix& tf, double floor_mag = 1e-12);

// Number of forward() invocations so far in this process. Cost-accounting
// tests read deltas of this; taper passes inside backward do not count.
std::uint64_t forward_call_count();

}  // namespace dstft
