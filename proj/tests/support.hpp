#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "dstft/transform.hpp"

namespace testsup {

inline dstft::Signal random_signal(int length, std::uint64_t seed, double sample_rate = 1.0) {
  dstft::Signal s;
  s.sample_rate = sample_rate;
  s.samples.resize(length);
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (double& x : s.samples) x = dist(gen);
  return s;
}

// freq in cycles per sample.
inline dstft::Signal tone(int length, double freq, double amp = 1.0, double phase = 0.0) {
  dstft::Signal s;
  s.samples.resize(length);
  for (int i = 0; i < length; ++i) {
    s.samples[i] = amp * std::cos(2.0 * M_PI * freq * i + phase);
  }
  return s;
}

inline dstft::DstftPlan const_plan(dstft::WindowKind kind, int support, double theta, double t0,
                                   double hop, int frames) {
  dstft::DstftPlan p;
  p.window = {kind, support};
  p.num_frames = frames;
  p.lengths = dstft::LengthField::constant(theta);
  p.positions = dstft::PositionField::uniform_hop(t0, hop);
  p.validate();
  return p;
}

inline double max_abs(const dstft::TfMatrix& a) {
  double m = 0.0;
  for (const auto& v : a.values) m = std::max(m, std::abs(v));
  return m;
}

inline double max_abs_diff(const dstft::TfMatrix& a, const dstft::TfMatrix& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.values.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

inline double rel_err(double got, double want) {
  const double denom = std::max({std::abs(got), std::abs(want), 1e-300});
  return std::abs(got - want) / denom;
}

}  // namespace testsup
