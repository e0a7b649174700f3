#pragma once

#include <vector>

namespace dstft {

// Window lengths below this degenerate to at most one nonzero taper sample,
// so every operation rejects them.
inline constexpr double kThetaMin = 2.0;

enum class WindowKind { Hann, TruncatedGaussian };

// Which taper to sample: the window itself or one of its partial derivatives.
enum class TaperPart { Value, DTheta, DX };

// A family of windows contracted from a base window of support L. The member
// of real-valued length theta lives on [-theta/2, theta/2] and is scaled so
// its L1 mass does not depend on theta.
struct WindowSpec {
  WindowKind kind = WindowKind::Hann;
  int support = 0;  // L, even, >= 4

  void validate() const;
};

// Window value at offset x for length theta. Zero outside |x| <= theta/2.
double window_eval(const WindowSpec& spec, double x, double theta);

// Partial derivative in theta. Taken on the smooth branch inside the
// support, zero outside; the truncation jump at |x| = theta/2 is ignored.
double window_d_theta(const WindowSpec& spec, double x, double theta);

// Partial derivative in x, same boundary convention as window_d_theta.
double window_d_x(const WindowSpec& spec, double x, double theta);

double window_taper(const WindowSpec& spec, TaperPart part, double x, double theta);

// Discrete taper for one frame: [f(k - frac, theta)] for k = -L/2+1 .. L/2,
// where f is chosen by `part`. Entry i holds k = i - L/2 + 1.
std::vector<double> sample_frame(const WindowSpec& spec, double frac, double theta,
                                 TaperPart part = TaperPart::Value);

}  // namespace dstft
