#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dstft/grad.hpp"

namespace dstft {

enum class Neighborhood { FourConn, EightConn };

struct ObjectiveConfig {
  double lambda = 0.0;     // weight of the regularizing term in composites
  double eps_mag = 1e-12;  // magnitude floor keeping objectives defined at 0
  double eps_tv = 1e-8;    // smoothing floor inside the total-variation sqrt
  Neighborhood neighborhood = Neighborhood::FourConn;
};

// One objective evaluation. Gradients come back through up to three
// channels: a cotangent on the transform output, a direct gradient on the
// length field (same layout as LengthField::values), and direct gradients on
// per-frame lengths and resolved frame positions.
struct EvalResult {
  double value = 0.0;
  std::optional<Cotangent> cotangent;
  std::optional<std::vector<double>> d_length_field;
  std::optional<std::vector<double>> d_theta_per_frame;
  std::optional<std::vector<double>> d_positions_resolved;
};

// -Sum p log p over p = (|S|+eps)/Sum(|S|+eps). Cotangent is exact for the
// floored expression; the magnitude subgradient at S = 0 is taken as 0.
EvalResult shannon_entropy(const TfMatrix& tf, const ObjectiveConfig& cfg = {});

// Mean over columns of mean(|S|^4) / (mean(|S|^2) + eps)^2.
EvalResult spectral_kurtosis(const TfMatrix& tf, const ObjectiveConfig& cfg = {});

// Smoothed total variation of a rows-by-cols length field:
// Sum_e sqrt(eps_tv^2 + Sum_{b in N(e)} (theta_e - theta_b)^2).
// Returns the gradient in d_length_field (row-major, matching TimeFreq).
EvalResult nltv_regularizer(const std::vector<double>& theta_field, int rows, int cols,
                            const ObjectiveConfig& cfg = {});

// Fraction of the signal extent tiled by the translated windows. Per
// consecutive pair, min(hop, average length) counts when the pair's windows
// touch [0, L_s); the indicators carry no gradient and min ties take the hop
// branch.
EvalResult coverage(const std::vector<double>& positions,
                    const std::vector<double>& theta_per_frame, double signal_length);

// Lift a gradient on |S| to the cotangent u = g * S/|S|; zero where S = 0.
Cotangent magnitude_pullback(const TfMatrix& tf, const std::vector<double>& d_magnitude);

// Per-frame magnitude-weighted mean frequency in Hz, with |S| floored by eps.
std::vector<double> freq_estimate(const TfMatrix& tf, double eps_mag = 1e-12);

// Chain a gradient on the frequency estimates back to a transform cotangent.
Cotangent freq_estimate_pullback(const TfMatrix& tf, const std::vector<double>& d_estimate,
                                 double eps_mag = 1e-12);

// Linear softmax classifier over flattened |S| features.
struct LinearHead {
  int num_classes = 0;
  int feature_dim = 0;
  std::vector<double> weights;  // row-major num_classes x feature_dim
  std::vector<double> bias;     // num_classes
};

std::vector<double> head_probabilities(const LinearHead& head,
                                       const std::vector<double>& features);

double cross_entropy(const std::vector<double>& probabilities, int label,
                     double eps = 1e-12);

struct HeadGradients {
  std::vector<double> d_weights;
  std::vector<double> d_bias;
  std::vector<double> d_features;
};

HeadGradients head_backward(const LinearHead& head, const std::vector<double>& features,
                            const std::vector<double>& probabilities, int label);

// Scalar functional of the transform output and/or the plan parameters.
// signal_index selects per-signal targets when fitting over a dataset.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual EvalResult evaluate(const DstftPlan& plan, const Signal& signal, const TfMatrix& tf,
                              int signal_index) const = 0;
  virtual std::string name() const = 0;
};

// Sum of squared magnitudes; the simplest smooth loss, used by checks.
class SumSquaredMagnitude final : public Objective {
 public:
  EvalResult evaluate(const DstftPlan&, const Signal&, const TfMatrix& tf, int) const override;
  std::string name() const override { return "sum-squared-magnitude"; }
};

class EntropyObjective final : public Objective {
 public:
  explicit EntropyObjective(ObjectiveConfig cfg = {}) : cfg_(cfg) {}
  EvalResult evaluate(const DstftPlan&, const Signal&, const TfMatrix& tf, int) const override;
  std::string name() const override { return "entropy"; }

 private:
  ObjectiveConfig cfg_;
};

class KurtosisObjective final : public Objective {
 public:
  explicit KurtosisObjective(ObjectiveConfig cfg = {}) : cfg_(cfg) {}
  EvalResult evaluate(const DstftPlan&, const Signal&, const TfMatrix& tf, int) const override;
  std::string name() const override { return "kurtosis"; }

 private:
  ObjectiveConfig cfg_;
};

// Requires TimeFreq lengths; the value depends on the plan only.
class NltvObjective final : public Objective {
 public:
  explicit NltvObjective(ObjectiveConfig cfg = {}) : cfg_(cfg) {}
  EvalResult evaluate(const DstftPlan& plan, const Signal&, const TfMatrix&, int) const override;
  std::string name() const override { return "nltv"; }

 private:
  ObjectiveConfig cfg_;
};

// Requires per-frame lengths (Constant or TimeVarying).
class CoverageObjective final : public Objective {
 public:
  EvalResult evaluate(const DstftPlan& plan, const Signal& signal, const TfMatrix& tf,
                      int) const override;
  std::string name() const override { return "coverage"; }
};

// Squared tracking error of the weighted-mean frequency estimate against a
// per-signal reference track (summed over frames; fitting over a dataset
// averages across signals).
class TrackingMseObjective final : public Objective {
 public:
  TrackingMseObjective(std::vector<std::vector<double>> truth_tracks, double eps_mag = 1e-12)
      : truths_(std::move(truth_tracks)), eps_mag_(eps_mag) {}
  EvalResult evaluate(const DstftPlan&, const Signal&, const TfMatrix& tf,
                      int signal_index) const override;
  std::string name() const override { return "tracking-mse"; }

 private:
  std::vector<std::vector<double>> truths_;
  double eps_mag_;
};

// Cross-entropy of a fixed linear head over |S| features, one label per
// signal. Gradients flow to the plan only; head training happens outside.
class ClassificationObjective final : public Objective {
 public:
  ClassificationObjective(LinearHead head, std::vector<int> labels)
      : head_(std::move(head)), labels_(std::move(labels)) {}
  EvalResult evaluate(const DstftPlan&, const Signal&, const TfMatrix& tf,
                      int signal_index) const override;
  std::string name() const override { return "classification"; }

 private:
  LinearHead head_;
  std::vector<int> labels_;
};

// Weighted sum of objectives; values, cotangents, and direct gradients all
// accumulate additively.
class CompositeObjective final : public Objective {
 public:
  using Term = std::pair<double, std::shared_ptr<const Objective>>;
  explicit CompositeObjective(std::vector<Term> terms) : terms_(std::move(terms)) {}
  EvalResult evaluate(const DstftPlan& plan, const Signal& signal, const TfMatrix& tf,
                      int signal_index) const override;
  std::string name() const override;

 private:
  std::vector<Term> terms_;
};

}  // namespace dstft
