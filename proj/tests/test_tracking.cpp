#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "dstft/objectives.hpp"
#include "dstft/tracking.hpp"
#include "support.hpp"

using namespace dstft;

namespace {

TfMatrix tf_with_peaks(const std::vector<int>& peak_bins, int rows, double delta_f) {
  TfMatrix tf;
  tf.rows = rows;
  tf.cols = static_cast<int>(peak_bins.size());
  tf.delta_f = delta_f;
  tf.values.assign(static_cast<size_t>(rows) * tf.cols, {0.01, 0.0});
  for (int n = 0; n < tf.cols; ++n) {
    tf.at(peak_bins[static_cast<size_t>(n)], n) = {1.0, 0.0};
    tf.frame_positions.push_back(8.0 * n);
  }
  return tf;
}

}  // namespace

TEST_CASE("weighted average track equals the differentiable estimate") {
  TfMatrix tf;
  tf.rows = 9;
  tf.cols = 4;
  tf.delta_f = 0.5;
  tf.values.resize(36);
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (auto& v : tf.values) v = {dist(gen), dist(gen)};
  for (int n = 0; n < 4; ++n) tf.frame_positions.push_back(16.0 * n);

  const FrequencyTrack track = weighted_average_track(tf);
  const auto est = freq_estimate(tf);
  REQUIRE(track.values.size() == est.size());
  for (size_t i = 0; i < est.size(); ++i) CHECK(track.values[i] == est[i]);
  CHECK(track.frame_positions == tf.frame_positions);
}

TEST_CASE("ridge track follows a fixed tone") {
  const TfMatrix tf = tf_with_peaks({7, 7, 7, 7, 7}, 12, 2.0);
  const FrequencyTrack track = ridge_track(tf, 0.0, 22.0, 3);
  for (double f : track.values) CHECK(f == doctest::Approx(14.0).epsilon(1e-12));
}

TEST_CASE("ridge track follows a one-bin move within the jump budget") {
  const TfMatrix tf = tf_with_peaks({5, 6}, 12, 1.0);
  const FrequencyTrack track = ridge_track(tf, 0.0, 11.0, 2);
  CHECK(track.values[0] == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(track.values[1] == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("ridge track clamps jumps and respects the band") {
  // Peak leaps 4 bins but the track may move at most 1 per frame; the argmax
  // is taken inside the reachable window, so give that window a slope.
  TfMatrix tf = tf_with_peaks({3, 7}, 12, 1.0);
  tf.at(4, 1) = {0.3, 0.0};
  const FrequencyTrack track = ridge_track(tf, 0.0, 11.0, 1);
  CHECK(track.values[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(track.values[1] == doctest::Approx(4.0).epsilon(1e-12));

  // Band excludes the true peak: the argmax comes from inside the band.
  const FrequencyTrack banded = ridge_track(tf, 8.0, 11.0, 3);
  CHECK(banded.values[0] >= 8.0);

  CHECK_THROWS_AS(ridge_track(tf, 5.0, 2.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(ridge_track(tf, 0.0, 11.0, -1), std::invalid_argument);
  CHECK_THROWS_AS(ridge_track(tf, 100.0, 200.0, 1), std::invalid_argument);
}

TEST_CASE("ridge ties resolve to the lower bin") {
  TfMatrix tf;
  tf.rows = 8;
  tf.cols = 1;
  tf.delta_f = 1.0;
  tf.values.assign(8, {0.0, 0.0});
  tf.at(2, 0) = {1.0, 0.0};
  tf.at(5, 0) = {1.0, 0.0};
  tf.frame_positions = {0.0};
  const FrequencyTrack track = ridge_track(tf, 0.0, 7.0, 7);
  CHECK(track.values[0] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("track mse endpoints") {
  FrequencyTrack a;
  a.values = {1.0, 2.0, 3.0};
  FrequencyTrack b = a;
  CHECK(track_mse(a, b) == 0.0);

  for (double& v : b.values) v += 2.0;
  CHECK(track_mse(a, b) == doctest::Approx(4.0).epsilon(1e-12));

  FrequencyTrack wrong;
  wrong.values = {1.0};
  CHECK_THROWS_AS(track_mse(a, wrong), std::invalid_argument);
}

TEST_CASE("track mse agrees with the training objective up to the sum/mean convention") {
  TfMatrix tf;
  tf.rows = 6;
  tf.cols = 5;
  tf.delta_f = 1.5;
  tf.values.resize(30);
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (auto& v : tf.values) v = {dist(gen), dist(gen)};
  for (int n = 0; n < 5; ++n) tf.frame_positions.push_back(4.0 * n);

  std::vector<double> truth(5, 2.0);
  const TrackingMseObjective objective({truth});
  DstftPlan unused_plan;
  Signal unused_signal;
  const double summed = objective.evaluate(unused_plan, unused_signal, tf, 0).value;
  const double mean = track_mse(weighted_average_track(tf), truth);
  CHECK(summed == doctest::Approx(mean * tf.cols).epsilon(1e-12));
}
