#include "dstft/signals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace dstft {

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

void check_band(double frac, const char* what) {
  if (!(frac > 0.0) || !(frac < 0.5)) {
    throw std::domain_error(std::string("scenario: ") + what +
                            " must lie strictly inside (0, Nyquist)");
  }
}

// Smooth profile in [-1, 1] built from a few whole-signal cosine modes with
// seeded amplitudes and phases, normalized to unit peak.
std::vector<double> smooth_profile(int length, std::mt19937_64& gen, int modes = 4) {
  std::uniform_real_distribution<double> phase(0.0, kTau);
  std::uniform_real_distribution<double> amp(0.5, 1.0);
  std::vector<double> g(static_cast<size_t>(length), 0.0);
  for (int h = 1; h <= modes; ++h) {
    const double a = amp(gen);
    const double p = phase(gen);
    for (int i = 0; i < length; ++i) {
      g[i] += a * std::cos(kTau * h * i / static_cast<double>(length) + p);
    }
  }
  double peak = 0.0;
  for (double x : g) peak = std::max(peak, std::abs(x));
  if (peak > 0.0) {
    for (double& x : g) x /= peak;
  }
  return g;
}

// Phase accumulation turns a per-sample frequency profile (cycles/sample)
// into a unit sinusoid bank with 1/k harmonic decay.
void add_harmonics(std::vector<double>& out, const std::vector<double>& freq, int harmonics,
                   std::mt19937_64& gen) {
  std::uniform_real_distribution<double> phase(0.0, kTau);
  std::vector<double> phi0(static_cast<size_t>(harmonics));
  for (double& p : phi0) p = phase(gen);
  double cycles = 0.0;
  for (size_t i = 0; i < out.size(); ++i) {
    for (int k = 1; k <= harmonics; ++k) {
      out[i] += std::cos(kTau * k * cycles + phi0[k - 1]) / static_cast<double>(k);
    }
    cycles += freq[i];
  }
}

GeneratedSignal make_three_component(const SyntheticScenario& sc) {
  GeneratedSignal out;
  const int n = sc.length;
  std::vector<double> x(static_cast<size_t>(n), 0.0);
  const double rate = (sc.chirp_end - sc.chirp_start) / static_cast<double>(n);
  for (int i = 0; i < n; ++i) {
    x[i] += std::cos(kTau * (sc.chirp_start * i + 0.5 * rate * i * i));
    x[i] += std::cos(kTau * sc.tone_freq * i + 0.7);
  }
  const int half = sc.burst_width / 2;
  const int center = static_cast<int>(std::lround(0.72 * n));
  const double sigma = sc.burst_width / 8.0;
  for (int i = std::max(0, center - half); i < std::min(n, center + half); ++i) {
    const double u = i - center;
    x[i] += sc.burst_amp * std::exp(-0.5 * (u / sigma) * (u / sigma)) *
            std::cos(kTau * sc.burst_freq * u);
  }
  out.signal.samples = std::move(x);
  out.signal.sample_rate = sc.sample_rate;
  return out;
}

GeneratedSignal make_shock_train(const SyntheticScenario& sc, std::mt19937_64& gen) {
  GeneratedSignal out;
  const int n = sc.length;
  std::vector<double> x(static_cast<size_t>(n), 0.0);
  std::uniform_int_distribution<int> count_dist(sc.min_shocks, sc.max_shocks);
  const int shocks = count_dist(gen);
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);
  std::uniform_real_distribution<double> freq_dist(sc.shock_freq_lo, sc.shock_freq_hi);
  std::uniform_int_distribution<int> dur_dist(sc.shock_dur_lo, sc.shock_dur_hi);
  const double slot = static_cast<double>(n) / (shocks + 1);
  for (int k = 0; k < shocks; ++k) {
    const int dur = dur_dist(gen);
    const double freq = freq_dist(gen);
    // Jitter bounded to a quarter slot keeps adjacent supports disjoint.
    const double mid = (k + 1) * slot + jitter(gen) * 0.25 * slot;
    int onset = static_cast<int>(std::lround(mid - 0.5 * dur));
    onset = std::clamp(onset, 0, n - dur);
    double energy = 0.0;
    double moment = 0.0;
    for (int u = 0; u < dur; ++u) {
      const double v = std::exp(-4.0 * u / dur) * std::sin(kTau * freq * u);
      x[onset + u] += v;
      energy += v * v;
      moment += (onset + u) * v * v;
    }
    out.shock_onsets.push_back(onset);
    out.shock_durations.push_back(dur);
    out.shock_centers.push_back(energy > 0.0 ? moment / energy : onset + 0.5 * dur);
  }
  out.signal.samples = std::move(x);
  out.signal.sample_rate = sc.sample_rate;
  return out;
}

GeneratedSignal make_fm(const SyntheticScenario& sc, std::mt19937_64& gen, int harmonics) {
  GeneratedSignal out;
  const int n = sc.length;
  std::vector<double> freq(static_cast<size_t>(n), sc.base_freq);
  if (sc.freq_dev != 0.0) {
    const std::vector<double> g = smooth_profile(n, gen);
    for (int i = 0; i < n; ++i) freq[i] = sc.base_freq + sc.freq_dev * g[i];
  }
  std::vector<double> x(static_cast<size_t>(n), 0.0);
  add_harmonics(x, freq, harmonics, gen);
  out.instantaneous_freq.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) out.instantaneous_freq[i] = freq[i] * sc.sample_rate;
  out.signal.samples = std::move(x);
  out.signal.sample_rate = sc.sample_rate;
  return out;
}

}  // namespace

void SyntheticScenario::validate() const {
  if (length < 16) throw std::invalid_argument("scenario: length must be at least 16");
  if (!(sample_rate > 0.0)) throw std::invalid_argument("scenario: sample_rate must be positive");
  switch (kind) {
    case ScenarioKind::ThreeComponent:
      check_band(chirp_start, "chirp_start");
      check_band(chirp_end, "chirp_end");
      check_band(tone_freq, "tone_freq");
      check_band(burst_freq, "burst_freq");
      if (burst_width < 8 || burst_width > length) {
        throw std::invalid_argument("scenario: burst_width out of range");
      }
      break;
    case ScenarioKind::ShockTrain:
      check_band(shock_freq_lo, "shock_freq_lo");
      check_band(shock_freq_hi, "shock_freq_hi");
      if (shock_freq_lo > shock_freq_hi) {
        throw std::invalid_argument("scenario: shock frequency range reversed");
      }
      if (min_shocks < 1 || min_shocks > max_shocks) {
        throw std::invalid_argument("scenario: shock count range invalid");
      }
      if (shock_dur_lo < 8 || shock_dur_lo > shock_dur_hi || shock_dur_hi > length) {
        throw std::invalid_argument("scenario: shock duration range invalid");
      }
      break;
    case ScenarioKind::VariablePeriodSine:
      check_band(base_freq - freq_dev, "base_freq - freq_dev");
      check_band(base_freq + freq_dev, "base_freq + freq_dev");
      break;
    case ScenarioKind::MultiHarmonic:
      if (harmonics < 1) throw std::invalid_argument("scenario: harmonics must be positive");
      check_band(base_freq - freq_dev, "base_freq - freq_dev");
      check_band(harmonics * (base_freq + freq_dev), "harmonics * (base_freq + freq_dev)");
      break;
  }
}

SyntheticScenario SyntheticScenario::three_component(int length, std::uint64_t seed) {
  SyntheticScenario sc;
  sc.kind = ScenarioKind::ThreeComponent;
  sc.length = length;
  sc.seed = seed;
  return sc;
}

SyntheticScenario SyntheticScenario::shock_train(int length, std::uint64_t seed) {
  SyntheticScenario sc;
  sc.kind = ScenarioKind::ShockTrain;
  sc.length = length;
  sc.seed = seed;
  sc.noise_snr_db = 20.0;
  return sc;
}

SyntheticScenario SyntheticScenario::variable_period_sine(int length, std::uint64_t seed) {
  SyntheticScenario sc;
  sc.kind = ScenarioKind::VariablePeriodSine;
  sc.length = length;
  sc.seed = seed;
  sc.noise_snr_db = 20.0;
  return sc;
}

SyntheticScenario SyntheticScenario::multi_harmonic(int length, std::uint64_t seed) {
  SyntheticScenario sc;
  sc.kind = ScenarioKind::MultiHarmonic;
  sc.length = length;
  sc.seed = seed;
  sc.base_freq = 0.012;
  sc.freq_dev = 0.003;
  sc.harmonics = 10;
  return sc;
}

GeneratedSignal generate(const SyntheticScenario& scenario) {
  scenario.validate();
  std::mt19937_64 gen(scenario.seed);
  GeneratedSignal out;
  switch (scenario.kind) {
    case ScenarioKind::ThreeComponent:
      out = make_three_component(scenario);
      break;
    case ScenarioKind::ShockTrain:
      out = make_shock_train(scenario, gen);
      break;
    case ScenarioKind::VariablePeriodSine:
      out = make_fm(scenario, gen, 1);
      break;
    case ScenarioKind::MultiHarmonic:
      out = make_fm(scenario, gen, scenario.harmonics);
      break;
  }
  if (std::isfinite(scenario.noise_snr_db)) {
    // Noise seed derived from the scenario seed keeps the whole recipe a
    // pure function of (scenario, seed).
    out.signal = add_awgn(out.signal, scenario.noise_snr_db,
                          scenario.seed ^ 0x9e3779b97f4a7c15ULL);
  }
  return out;
}

std::vector<double> sample_track(const std::vector<double>& per_sample_values,
                                 const std::vector<double>& frame_positions) {
  if (per_sample_values.empty()) {
    throw std::invalid_argument("sample_track: empty per-sample values");
  }
  const double last = static_cast<double>(per_sample_values.size()) - 1.0;
  std::vector<double> out;
  out.reserve(frame_positions.size());
  for (double t : frame_positions) {
    const double c = std::clamp(t, 0.0, last);
    const double f = std::floor(c);
    const size_t i = static_cast<size_t>(f);
    const double frac = c - f;
    const double hi = per_sample_values[std::min(i + 1, per_sample_values.size() - 1)];
    out.push_back(per_sample_values[i] * (1.0 - frac) + hi * frac);
  }
  return out;
}

Signal add_awgn(const Signal& signal, double snr_db, std::uint64_t seed) {
  if (snr_db == std::numeric_limits<double>::infinity()) return signal;
  if (!std::isfinite(snr_db)) throw std::invalid_argument("add_awgn: snr_db must be finite");
  double power = 0.0;
  for (double x : signal.samples) power += x * x;
  power /= std::max<size_t>(signal.samples.size(), 1);
  if (!(power > 0.0)) throw std::domain_error("add_awgn: signal power is zero");
  const double sigma = std::sqrt(power * std::pow(10.0, -snr_db / 10.0));
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  Signal out = signal;
  for (double& x : out.samples) x += noise(gen);
  return out;
}

}  // namespace dstft
