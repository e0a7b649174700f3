#pragma once

#include <string>
#include <vector>

#include "dstft/tracking.hpp"
#include "dstft/transform.hpp"

namespace dstft {

// Shortest exact decimal rendering used by every CSV writer.
std::string format_g17(double value);

std::string to_string(WindowKind kind);
std::string to_string(LengthMode mode);
std::string to_string(PositionMode mode);

// Complex matrix as M rows of re,im pairs (2N fields per row).
std::string csv_complex_matrix(const TfMatrix& tf);

// Row-major real matrix, one CSV row per matrix row.
std::string csv_real_matrix(const std::vector<double>& values, int rows, int cols);

// "iter,loss,grad_norm" trace table.
std::string csv_trace(const std::vector<double>& loss, const std::vector<double>& grad_norm);

// "frame_position,frequency" pairs.
std::string csv_track(const FrequencyTrack& track);

// "theta,value" pairs for sweep curves.
std::string csv_sweep(const std::vector<std::pair<double, double>>& points);

// 8-bit binary PGM. Values map linearly from [lo, hi] onto [0, 255]; when
// flip_rows is set, matrix row 0 lands at the image bottom (so bin 0, the
// lowest frequency, renders at the bottom and row 0 of the image is the
// highest frequency).
std::string pgm_image(const std::vector<double>& values, int rows, int cols, double lo,
                      double hi, bool flip_rows);

// Log-magnitude image over [max dB - range_db, max dB], highest frequency on
// image row 0.
std::string pgm_spectrogram(const TfMatrix& tf, double range_db = 80.0);

// Plan echo plus derived facts (delta_f, resolved positions).
std::string meta_json(const DstftPlan& plan, const TfMatrix& tf, double sample_rate);

// Final parameter dump for optimization runs.
std::string params_json(const DstftPlan& plan);

}  // namespace dstft
