#include "dstft/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "json.hpp"

namespace dstft {

std::string format_g17(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string to_string(WindowKind kind) {
  return kind == WindowKind::Hann ? "hann" : "gauss";
}

std::string to_string(LengthMode mode) {
  switch (mode) {
    case LengthMode::Constant: return "constant";
    case LengthMode::TimeVarying: return "time-varying";
    case LengthMode::FreqVarying: return "freq-varying";
    case LengthMode::TimeFreq: return "time-freq";
  }
  return "?";
}

std::string to_string(PositionMode mode) {
  switch (mode) {
    case PositionMode::Explicit: return "explicit";
    case PositionMode::UniformHop: return "uniform-hop";
    case PositionMode::VaryingHop: return "varying-hop";
    case PositionMode::FixedOverlap: return "fixed-overlap";
  }
  return "?";
}

std::string csv_complex_matrix(const TfMatrix& tf) {
  std::string out;
  for (int m = 0; m < tf.rows; ++m) {
    for (int n = 0; n < tf.cols; ++n) {
      if (n) out.push_back(',');
      out += format_g17(tf.at(m, n).real());
      out.push_back(',');
      out += format_g17(tf.at(m, n).imag());
    }
    out.push_back('\n');
  }
  return out;
}

std::string csv_real_matrix(const std::vector<double>& values, int rows, int cols) {
  if (values.size() != static_cast<size_t>(rows) * cols) {
    throw std::invalid_argument("csv_real_matrix: shape mismatch");
  }
  std::string out;
  for (int m = 0; m < rows; ++m) {
    for (int n = 0; n < cols; ++n) {
      if (n) out.push_back(',');
      out += format_g17(values[static_cast<size_t>(m) * cols + n]);
    }
    out.push_back('\n');
  }
  return out;
}

std::string csv_trace(const std::vector<double>& loss, const std::vector<double>& grad_norm) {
  if (loss.size() != grad_norm.size()) throw std::invalid_argument("csv_trace: length mismatch");
  std::string out = "iter,loss,grad_norm\n";
  for (size_t i = 0; i < loss.size(); ++i) {
    out += std::to_string(i);
    out.push_back(',');
    out += format_g17(loss[i]);
    out.push_back(',');
    out += format_g17(grad_norm[i]);
    out.push_back('\n');
  }
  return out;
}

std::string csv_track(const FrequencyTrack& track) {
  std::string out = "frame_position,frequency\n";
  for (size_t i = 0; i < track.values.size(); ++i) {
    out += format_g17(track.frame_positions[i]);
    out.push_back(',');
    out += format_g17(track.values[i]);
    out.push_back('\n');
  }
  return out;
}

std::string csv_sweep(const std::vector<std::pair<double, double>>& points) {
  std::string out = "theta,value\n";
  for (const auto& [theta, value] : points) {
    out += format_g17(theta);
    out.push_back(',');
    out += format_g17(value);
    out.push_back('\n');
  }
  return out;
}

std::string pgm_image(const std::vector<double>& values, int rows, int cols, double lo,
                      double hi, bool flip_rows) {
  if (values.size() != static_cast<size_t>(rows) * cols) {
    throw std::invalid_argument("pgm_image: shape mismatch");
  }
  std::string out = "P5\n" + std::to_string(cols) + " " + std::to_string(rows) + "\n255\n";
  const double span = hi - lo;
  for (int r = 0; r < rows; ++r) {
    const int m = flip_rows ? rows - 1 - r : r;
    for (int n = 0; n < cols; ++n) {
      const double v = values[static_cast<size_t>(m) * cols + n];
      int pixel = 128;
      if (span > 0.0) {
        pixel = static_cast<int>(std::lround(255.0 * (v - lo) / span));
        pixel = std::clamp(pixel, 0, 255);
      }
      out.push_back(static_cast<char>(static_cast<unsigned char>(pixel)));
    }
  }
  return out;
}

std::string pgm_spectrogram(const TfMatrix& tf, double range_db) {
  const std::vector<double> db = log_power(tf);
  double top = -1e300;
  for (double v : db) top = std::max(top, v);
  return pgm_image(db, tf.rows, tf.cols, top - range_db, top, true);
}

namespace {

nlohmann::json plan_json(const DstftPlan& plan) {
  return nlohmann::json{{"window", to_string(plan.window.kind)},
                        {"support", plan.window.support},
                        {"length_mode", to_string(plan.lengths.mode)},
                        {"theta", plan.lengths.values},
                        {"position_mode", to_string(plan.positions.mode)},
                        {"position_params", plan.positions.values},
                        {"num_frames", plan.num_frames},
                        {"num_bins", plan.num_bins()}};
}

}  // namespace

std::string meta_json(const DstftPlan& plan, const TfMatrix& tf, double sample_rate) {
  nlohmann::json j = plan_json(plan);
  j["delta_f"] = tf.delta_f;
  j["sample_rate"] = sample_rate;
  j["frame_positions"] = tf.frame_positions;
  return j.dump(2) + "\n";
}

std::string params_json(const DstftPlan& plan) {
  nlohmann::json j = plan_json(plan);
  j["frame_positions"] = resolve_positions(plan);
  return j.dump(2) + "\n";
}

}  // namespace dstft
