#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "dstft/transform.hpp"

namespace dstft {

enum class ScenarioKind { ThreeComponent, ShockTrain, VariablePeriodSine, MultiHarmonic };

// Seeded synthetic-signal recipe. Frequency knobs are in cycles per sample;
// reported ground-truth tracks are in Hz (fraction times sample_rate).
struct SyntheticScenario {
  ScenarioKind kind = ScenarioKind::ThreeComponent;
  int length = 4096;
  double sample_rate = 1.0;
  std::uint64_t seed = 1;
  // Additive white Gaussian noise target; +infinity leaves the signal clean.
  double noise_snr_db = std::numeric_limits<double>::infinity();

  // ThreeComponent: chirp sweeping chirp_start -> chirp_end, steady tone the
  // chirp crosses, and a Gaussian-enveloped burst of at most burst_width
  // samples.
  double chirp_start = 0.05;
  double chirp_end = 0.45;
  double tone_freq = 0.25;
  double burst_freq = 0.12;
  int burst_width = 100;
  double burst_amp = 2.0;

  // ShockTrain: damped sinusoids at jittered positions.
  int min_shocks = 5;
  int max_shocks = 10;
  double shock_freq_lo = 0.10;
  double shock_freq_hi = 0.40;
  int shock_dur_lo = 60;
  int shock_dur_hi = 200;

  // VariablePeriodSine / MultiHarmonic: instantaneous frequency wanders in
  // [base_freq - freq_dev, base_freq + freq_dev] along a smooth profile.
  double base_freq = 0.10;
  double freq_dev = 0.05;
  int harmonics = 10;

  void validate() const;

  static SyntheticScenario three_component(int length = 4096, std::uint64_t seed = 1);
  static SyntheticScenario shock_train(int length = 4096, std::uint64_t seed = 1);
  static SyntheticScenario variable_period_sine(int length = 4096, std::uint64_t seed = 1);
  static SyntheticScenario multi_harmonic(int length = 8192, std::uint64_t seed = 1);
};

// Generator output with whatever ground truth the scenario defines.
// instantaneous_freq is per sample, in Hz: the fundamental for
// MultiHarmonic, the sine frequency for VariablePeriodSine, empty otherwise.
struct GeneratedSignal {
  Signal signal;
  std::vector<double> instantaneous_freq;
  std::vector<double> shock_onsets;     // support start per shock, samples
  std::vector<double> shock_durations;  // support width per shock, samples
  std::vector<double> shock_centers;    // energy centroid per shock, samples
};

GeneratedSignal generate(const SyntheticScenario& scenario);

// Ground-truth track sampled at (possibly fractional) frame positions, with
// linear interpolation and edge clamping.
std::vector<double> sample_track(const std::vector<double>& per_sample_values,
                                 const std::vector<double>& frame_positions);

// White Gaussian noise scaled to the requested signal-to-noise ratio.
// +infinity returns the input unchanged; zero-power input is an error.
Signal add_awgn(const Signal& signal, double snr_db, std::uint64_t seed);

}  // namespace dstft
