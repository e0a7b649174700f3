#include "dstft/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dstft {

Cotangent magnitude_pullback(const TfMatrix& tf, const std::vector<double>& d_mag) {
  if (d_mag.size() != tf.values.size()) {
    throw std::invalid_argument("magnitude_pullback: gradient size mismatch");
  }
  Cotangent u = Cotangent::zeros(tf.rows, tf.cols);
  for (size_t i = 0; i < tf.values.size(); ++i) {
    const double mag = std::abs(tf.values[i]);
    if (mag > 0.0) u.values[i] = d_mag[i] / mag * tf.values[i];
  }
  return u;
}

EvalResult shannon_entropy(const TfMatrix& tf, const ObjectiveConfig& cfg) {
  const size_t count = tf.values.size();
  std::vector<double> floored(count);
  double total = 0.0;
  for (size_t i = 0; i < count; ++i) {
    floored[i] = std::abs(tf.values[i]) + cfg.eps_mag;
    total += floored[i];
  }

  double value = 0.0;
  std::vector<double> log_p(count);
  for (size_t i = 0; i < count; ++i) {
    log_p[i] = std::log(floored[i] / total);
    value -= floored[i] / total * log_p[i];
  }

  // d value / d floored[i] = (-log p_i - value) / total.
  std::vector<double> d_mag(count);
  for (size_t i = 0; i < count; ++i) d_mag[i] = (-log_p[i] - value) / total;

  EvalResult result;
  result.value = value;
  result.cotangent = magnitude_pullback(tf, d_mag);
  return result;
}

EvalResult spectral_kurtosis(const TfMatrix& tf, const ObjectiveConfig& cfg) {
  const int M = tf.rows;
  const int N = tf.cols;
  std::vector<double> d_mag(tf.values.size(), 0.0);

  double value = 0.0;
  for (int n = 0; n < N; ++n) {
    double m2 = 0.0;
    double m4 = 0.0;
    for (int m = 0; m < M; ++m) {
      const double a2 = std::norm(tf.at(m, n));
      m2 += a2;
      m4 += a2 * a2;
    }
    m2 = m2 / M + cfg.eps_mag;
    m4 /= M;
    value += m4 / (m2 * m2);

    for (int m = 0; m < M; ++m) {
      const double mag = std::abs(tf.at(m, n));
      const double g = 4.0 * mag * mag * mag / (M * m2 * m2) -
                       4.0 * mag * m4 / (M * m2 * m2 * m2);
      d_mag[static_cast<size_t>(m) * N + n] = g / N;
    }
  }
  value /= N;

  EvalResult result;
  result.value = value;
  result.cotangent = magnitude_pullback(tf, d_mag);
  return result;
}

EvalResult nltv_regularizer(const std::vector<double>& theta_field, int rows, int cols,
                            const ObjectiveConfig& cfg) {
  if (theta_field.size() != static_cast<size_t>(rows) * static_cast<size_t>(cols)) {
    throw std::invalid_argument("length field size does not match rows*cols");
  }
  const auto idx = [cols](int m, int n) { return static_cast<size_t>(m) * cols + n; };

  // Neighbor offsets; boundary entries keep only the neighbors that exist.
  std::vector<std::pair<int, int>> offsets = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
  if (cfg.neighborhood == Neighborhood::EightConn) {
    offsets.insert(offsets.end(), {{-1, -1}, {-1, 1}, {1, -1}, {1, 1}});
  }

  double value = 0.0;
  std::vector<double> grad(theta_field.size(), 0.0);
  for (int m = 0; m < rows; ++m) {
    for (int n = 0; n < cols; ++n) {
      const double center = theta_field[idx(m, n)];
      double sum_sq = cfg.eps_tv * cfg.eps_tv;
      for (const auto& [dm, dn] : offsets) {
        const int mm = m + dm;
        const int nn = n + dn;
        if (mm < 0 || mm >= rows || nn < 0 || nn >= cols) continue;
        const double diff = center - theta_field[idx(mm, nn)];
        sum_sq += diff * diff;
      }
      const double root = std::sqrt(sum_sq);
      value += root;
      for (const auto& [dm, dn] : offsets) {
        const int mm = m + dm;
        const int nn = n + dn;
        if (mm < 0 || mm >= rows || nn < 0 || nn >= cols) continue;
        const double diff = center - theta_field[idx(mm, nn)];
        grad[idx(m, n)] += diff / root;
        grad[idx(mm, nn)] -= diff / root;
      }
    }
  }

  EvalResult result;
  result.value = value;
  result.d_length_field = std::move(grad);
  return result;
}

EvalResult coverage(const std::vector<double>& positions,
                    const std::vector<double>& theta_per_frame, double signal_length) {
  const size_t N = positions.size();
  if (theta_per_frame.size() != N) {
    throw std::invalid_argument("positions and per-frame lengths differ in size");
  }
  if (N < 2) throw std::invalid_argument("coverage needs at least two frames");

  double value = 0.0;
  std::vector<double> d_t(N, 0.0);
  std::vector<double> d_theta(N, 0.0);
  for (size_t n = 0; n + 1 < N; ++n) {
    const bool inside = positions[n + 1] - theta_per_frame[n + 1] / 2.0 < signal_length &&
                        positions[n] + theta_per_frame[n] / 2.0 > 0.0;
    if (!inside) continue;
    const double hop = positions[n + 1] - positions[n];
    const double avg = (theta_per_frame[n] + theta_per_frame[n + 1]) / 2.0;
    if (hop <= avg) {
      value += hop;
      d_t[n + 1] += 1.0 / signal_length;
      d_t[n] -= 1.0 / signal_length;
    } else {
      value += avg;
      d_theta[n] += 0.5 / signal_length;
      d_theta[n + 1] += 0.5 / signal_length;
    }
  }

  EvalResult result;
  result.value = value / signal_length;
  result.d_theta_per_frame = std::move(d_theta);
  result.d_positions_resolved = std::move(d_t);
  return result;
}

std::vector<double> freq_estimate(const TfMatrix& tf, double eps_mag) {
  const int M = tf.rows;
  const int N = tf.cols;
  std::vector<double> estimate(static_cast<size_t>(N));
  for (int n = 0; n < N; ++n) {
    double total = 0.0;
    double weighted = 0.0;
    for (int m = 0; m < M; ++m) {
      const double a = std::abs(tf.at(m, n)) + eps_mag;
      total += a;
      weighted += a * m;
    }
    estimate[static_cast<size_t>(n)] = weighted / total * tf.delta_f;
  }
  return estimate;
}

Cotangent freq_estimate_pullback(const TfMatrix& tf, const std::vector<double>& d_estimate,
                                 double eps_mag) {
  const int M = tf.rows;
  const int N = tf.cols;
  if (d_estimate.size() != static_cast<size_t>(N)) {
    throw std::invalid_argument("estimate gradient has wrong length");
  }
  const std::vector<double> estimate = freq_estimate(tf, eps_mag);

  std::vector<double> d_mag(tf.values.size(), 0.0);
  for (int n = 0; n < N; ++n) {
    double total = 0.0;
    for (int m = 0; m < M; ++m) total += std::abs(tf.at(m, n)) + eps_mag;
    for (int m = 0; m < M; ++m) {
      // d estimate_n / d a_{m,n} = (m*delta_f - estimate_n) / total.
      d_mag[static_cast<size_t>(m) * N + n] =
          d_estimate[static_cast<size_t>(n)] * (m * tf.delta_f - estimate[static_cast<size_t>(n)]) / total;
    }
  }
  return magnitude_pullback(tf, d_mag);
}

std::vector<double> head_probabilities(const LinearHead& head,
                                       const std::vector<double>& features) {
  if (features.size() != static_cast<size_t>(head.feature_dim)) {
    throw std::invalid_argument("feature vector has wrong length");
  }
  std::vector<double> logits(static_cast<size_t>(head.num_classes), 0.0);
  for (int c = 0; c < head.num_classes; ++c) {
    double acc = head.bias[static_cast<size_t>(c)];
    const double* row = head.weights.data() + static_cast<size_t>(c) * head.feature_dim;
    for (int i = 0; i < head.feature_dim; ++i) acc += row[i] * features[static_cast<size_t>(i)];
    logits[static_cast<size_t>(c)] = acc;
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double& z : logits) {
    z = std::exp(z - top);
    total += z;
  }
  for (double& z : logits) z /= total;
  return logits;
}

double cross_entropy(const std::vector<double>& probabilities, int label, double eps) {
  if (label < 0 || static_cast<size_t>(label) >= probabilities.size()) {
    throw std::invalid_argument("label index out of range");
  }
  return -std::log(std::max(probabilities[static_cast<size_t>(label)], eps));
}

HeadGradients head_backward(const LinearHead& head, const std::vector<double>& features,
                            const std::vector<double>& probabilities, int label) {
  if (label < 0 || label >= head.num_classes) {
    throw std::invalid_argument("label index out of range");
  }
  HeadGradients g;
  g.d_weights.assign(head.weights.size(), 0.0);
  g.d_bias.assign(static_cast<size_t>(head.num_classes), 0.0);
  g.d_features.assign(static_cast<size_t>(head.feature_dim), 0.0);
  for (int c = 0; c < head.num_classes; ++c) {
    const double dz = probabilities[static_cast<size_t>(c)] - (c == label ? 1.0 : 0.0);
    g.d_bias[static_cast<size_t>(c)] = dz;
    const double* row = head.weights.data() + static_cast<size_t>(c) * head.feature_dim;
    double* w_row = g.d_weights.data() + static_cast<size_t>(c) * head.feature_dim;
    for (int i = 0; i < head.feature_dim; ++i) {
      w_row[i] = dz * features[static_cast<size_t>(i)];
      g.d_features[static_cast<size_t>(i)] += dz * row[i];
    }
  }
  return g;
}

EvalResult SumSquaredMagnitude::evaluate(const DstftPlan&, const Signal&, const TfMatrix& tf,
                                         int) const {
  EvalResult result;
  Cotangent u = Cotangent::zeros(tf.rows, tf.cols);
  for (size_t i = 0; i < tf.values.size(); ++i) {
    result.value += std::norm(tf.values[i]);
    u.values[i] = 2.0 * tf.values[i];
  }
  result.cotangent = std::move(u);
  return result;
}

EvalResult EntropyObjective::evaluate(const DstftPlan&, const Signal&, const TfMatrix& tf,
                                      int) const {
  return shannon_entropy(tf, cfg_);
}

EvalResult KurtosisObjective::evaluate(const DstftPlan&, const Signal&, const TfMatrix& tf,
                                       int) const {
  return spectral_kurtosis(tf, cfg_);
}

EvalResult NltvObjective::evaluate(const DstftPlan& plan, const Signal&, const TfMatrix&,
                                   int) const {
  if (plan.lengths.mode != LengthMode::TimeFreq) {
    throw std::invalid_argument("total-variation regularizer needs time-frequency lengths");
  }
  return nltv_regularizer(plan.lengths.values, plan.num_bins(), plan.num_frames, cfg_);
}

EvalResult CoverageObjective::evaluate(const DstftPlan& plan, const Signal& signal,
                                       const TfMatrix& tf, int) const {
  return coverage(tf.frame_positions, plan.theta_per_frame(),
                  static_cast<double>(signal.length()));
}

EvalResult TrackingMseObjective::evaluate(const DstftPlan&, const Signal&, const TfMatrix& tf,
                                          int signal_index) const {
  if (signal_index < 0 || static_cast<size_t>(signal_index) >= truths_.size()) {
    throw std::invalid_argument("signal index outside the truth set");
  }
  const std::vector<double>& truth = truths_[static_cast<size_t>(signal_index)];
  if (truth.size() != static_cast<size_t>(tf.cols)) {
    throw std::invalid_argument("truth track length does not match frame count");
  }
  const std::vector<double> estimate = freq_estimate(tf, eps_mag_);

  EvalResult result;
  std::vector<double> d_estimate(estimate.size());
  for (size_t n = 0; n < estimate.size(); ++n) {
    const double diff = estimate[n] - truth[n];
    result.value += diff * diff;
    d_estimate[n] = 2.0 * diff;
  }
  result.cotangent = freq_estimate_pullback(tf, d_estimate, eps_mag_);
  return result;
}

EvalResult ClassificationObjective::evaluate(const DstftPlan&, const Signal&,
                                             const TfMatrix& tf, int signal_index) const {
  if (signal_index < 0 || static_cast<size_t>(signal_index) >= labels_.size()) {
    throw std::invalid_argument("signal index outside the label set");
  }
  const std::vector<double> features = magnitude(tf);
  const std::vector<double> probs = head_probabilities(head_, features);
  const int label = labels_[static_cast<size_t>(signal_index)];

  EvalResult result;
  result.value = cross_entropy(probs, label);
  const HeadGradients hg = head_backward(head_, features, probs, label);
  result.cotangent = magnitude_pullback(tf, hg.d_features);
  return result;
}

EvalResult CompositeObjective::evaluate(const DstftPlan& plan, const Signal& signal,
                                        const TfMatrix& tf, int signal_index) const {
  EvalResult total;
  for (const auto& [weight, objective] : terms_) {
    const EvalResult part = objective->evaluate(plan, signal, tf, signal_index);
    total.value += weight * part.value;
    if (part.cotangent) {
      if (!total.cotangent) total.cotangent = Cotangent::zeros(tf.rows, tf.cols);
      for (size_t i = 0; i < part.cotangent->values.size(); ++i) {
        total.cotangent->values[i] += weight * part.cotangent->values[i];
      }
    }
    const auto accumulate = [weight = weight](std::optional<std::vector<double>>& into,
                                              const std::optional<std::vector<double>>& from) {
      if (!from) return;
      if (!into) into = std::vector<double>(from->size(), 0.0);
      if (into->size() != from->size()) {
        throw std::invalid_argument("composite gradient shapes do not match");
      }
      for (size_t i = 0; i < from->size(); ++i) (*into)[i] += weight * (*from)[i];
    };
    accumulate(total.d_length_field, part.d_length_field);
    accumulate(total.d_theta_per_frame, part.d_theta_per_frame);
    accumulate(total.d_positions_resolved, part.d_positions_resolved);
  }
  return total;
}

std::string CompositeObjective::name() const {
  std::string out = "composite(";
  for (size_t i = 0; i < terms_.size(); ++i) {
    if (i > 0) out += "+";
    out += terms_[i].second->name();
  }
  out += ")";
  return out;
}

}  // namespace dstft
