#include "dstft/window.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dstft {

namespace {

constexpr double kPi = std::numbers::pi;

// Hann branch, |x| <= theta/2: (1/(2 theta)) (1 + cos(2 pi x / theta)).
double hann_eval(double x, double theta) {
  return (1.0 + std::cos(2.0 * kPi * x / theta)) / (2.0 * theta);
}

double hann_d_theta(double x, double theta) {
  const double arg = 2.0 * kPi * x / theta;
  return -(1.0 + std::cos(arg)) / (2.0 * theta * theta) +
         kPi * x * std::sin(arg) / (theta * theta * theta);
}

double hann_d_x(double x, double theta) {
  return -kPi * std::sin(2.0 * kPi * x / theta) / (theta * theta);
}

// Gaussian branch with sigma = theta/6, |x| <= theta/2:
// (1/sigma) exp(-pi (x/sigma)^2). The cut at |x| = theta/2 leaves a jump of
// exp(-9 pi)/sigma, below 1e-12 of the peak.
double gauss_eval(double x, double theta) {
  const double sigma = theta / 6.0;
  const double r = x / sigma;
  return std::exp(-kPi * r * r) / sigma;
}

double gauss_d_theta(double x, double theta) {
  // d/dtheta = (1/6) d/dsigma through sigma = theta/6.
  const double sigma = theta / 6.0;
  const double s2 = sigma * sigma;
  const double e = std::exp(-kPi * x * x / s2);
  return e * (-1.0 / s2 + 2.0 * kPi * x * x / (s2 * s2)) / 6.0;
}

double gauss_d_x(double x, double theta) {
  const double sigma = theta / 6.0;
  const double s2 = sigma * sigma;
  return std::exp(-kPi * x * x / s2) * (-2.0 * kPi * x) / (s2 * sigma);
}

void check_theta(const WindowSpec& spec, double theta) {
  if (!(theta >= kThetaMin && theta <= static_cast<double>(spec.support))) {
    throw std::domain_error("window length must lie in [2, support]");
  }
}

}  // namespace

void WindowSpec::validate() const {
  if (support < 4 || support % 2 != 0) {
    throw std::invalid_argument("window support must be an even integer >= 4");
  }
}

double window_eval(const WindowSpec& spec, double x, double theta) {
  check_theta(spec, theta);
  if (std::abs(x) > theta / 2.0) return 0.0;
  return spec.kind == WindowKind::Hann ? hann_eval(x, theta) : gauss_eval(x, theta);
}

double window_d_theta(const WindowSpec& spec, double x, double theta) {
  check_theta(spec, theta);
  if (std::abs(x) > theta / 2.0) return 0.0;
  return spec.kind == WindowKind::Hann ? hann_d_theta(x, theta) : gauss_d_theta(x, theta);
}

double window_d_x(const WindowSpec& spec, double x, double theta) {
  check_theta(spec, theta);
  if (std::abs(x) > theta / 2.0) return 0.0;
  return spec.kind == WindowKind::Hann ? hann_d_x(x, theta) : gauss_d_x(x, theta);
}

double window_taper(const WindowSpec& spec, TaperPart part, double x, double theta) {
  switch (part) {
    case TaperPart::Value:
      return window_eval(spec, x, theta);
    case TaperPart::DTheta:
      return window_d_theta(spec, x, theta);
    case TaperPart::DX:
      return window_d_x(spec, x, theta);
  }
  throw std::logic_error("unreachable taper part");
}

std::vector<double> sample_frame(const WindowSpec& spec, double frac, double theta,
                                 TaperPart part) {
  spec.validate();
  check_theta(spec, theta);
  if (!(frac >= 0.0 && frac < 1.0)) {
    throw std::invalid_argument("frac must lie in [0, 1)");
  }
  const int half = spec.support / 2;
  std::vector<double> out(static_cast<size_t>(spec.support));
  for (int i = 0; i < spec.support; ++i) {
    const int k = i - half + 1;
    out[static_cast<size_t>(i)] = window_taper(spec, part, static_cast<double>(k) - frac, theta);
  }
  return out;
}

}  // namespace dstft
