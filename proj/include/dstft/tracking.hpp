#pragma once

#include <vector>

#include "dstft/transform.hpp"

namespace dstft {

struct FrequencyTrack {
  std::vector<double> values;           // Hz, one per frame
  std::vector<double> frame_positions;  // samples
};

// Magnitude-weighted mean frequency per frame; the read-only counterpart of
// the differentiable estimator and numerically identical to it.
FrequencyTrack weighted_average_track(const TfMatrix& tf, double eps_mag = 1e-12);

// Per-frame argmax of |S| inside [f_lo, f_hi], constrained to move at most
// max_jump_bins between consecutive frames. Greedy, ties to the lower bin.
FrequencyTrack ridge_track(const TfMatrix& tf, double f_lo, double f_hi, int max_jump_bins);

// Mean squared difference between tracks of equal length.
double track_mse(const FrequencyTrack& track, const FrequencyTrack& truth);
double track_mse(const FrequencyTrack& track, const std::vector<double>& truth_values);

}  // namespace dstft
