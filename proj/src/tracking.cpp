#include "dstft/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dstft/objectives.hpp"

namespace dstft {

FrequencyTrack weighted_average_track(const TfMatrix& tf, double eps_mag) {
  FrequencyTrack track;
  track.values = freq_estimate(tf, eps_mag);
  track.frame_positions = tf.frame_positions;
  return track;
}

FrequencyTrack ridge_track(const TfMatrix& tf, double f_lo, double f_hi, int max_jump_bins) {
  if (tf.rows <= 0 || tf.cols <= 0) throw std::invalid_argument("ridge_track: empty matrix");
  if (max_jump_bins < 0) throw std::invalid_argument("ridge_track: negative max_jump_bins");
  const double top = (tf.rows - 1) * tf.delta_f;
  if (!(f_lo <= f_hi) || f_lo < 0.0 || f_hi > top + tf.delta_f) {
    throw std::invalid_argument("ridge_track: band outside the frequency axis");
  }
  int bin_lo = static_cast<int>(std::ceil(f_lo / tf.delta_f - 1e-9));
  int bin_hi = static_cast<int>(std::floor(f_hi / tf.delta_f + 1e-9));
  bin_lo = std::clamp(bin_lo, 0, tf.rows - 1);
  bin_hi = std::clamp(bin_hi, 0, tf.rows - 1);
  if (bin_lo > bin_hi) throw std::invalid_argument("ridge_track: band holds no bins");

  FrequencyTrack track;
  track.values.resize(static_cast<size_t>(tf.cols));
  track.frame_positions = tf.frame_positions;
  int prev = -1;
  for (int n = 0; n < tf.cols; ++n) {
    const int lo = (prev < 0) ? bin_lo : std::max(bin_lo, prev - max_jump_bins);
    const int hi = (prev < 0) ? bin_hi : std::min(bin_hi, prev + max_jump_bins);
    int best = lo;
    double best_mag = std::abs(tf.at(lo, n));
    for (int m = lo + 1; m <= hi; ++m) {
      const double mag = std::abs(tf.at(m, n));
      if (mag > best_mag) {
        best_mag = mag;
        best = m;
      }
    }
    track.values[n] = best * tf.delta_f;
    prev = best;
  }
  return track;
}

double track_mse(const FrequencyTrack& track, const std::vector<double>& truth_values) {
  if (track.values.size() != truth_values.size() || track.values.empty()) {
    throw std::invalid_argument("track_mse: length mismatch");
  }
  double acc = 0.0;
  for (size_t i = 0; i < truth_values.size(); ++i) {
    const double d = track.values[i] - truth_values[i];
    acc += d * d;
  }
  return acc / static_cast<double>(truth_values.size());
}

double track_mse(const FrequencyTrack& track, const FrequencyTrack& truth) {
  return track_mse(track, truth.values);
}

}  // namespace dstft
