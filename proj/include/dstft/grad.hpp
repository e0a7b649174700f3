#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "dstft/transform.hpp"

namespace dstft {

// Upstream derivative of a real scalar loss with respect to the transform
// output, packed as u[m,n] = dL/dRe(S[m,n]) + j*dL/dIm(S[m,n]).
struct Cotangent {
  int rows = 0;
  int cols = 0;
  std::vector<std::complex<double>> values;  // row-major, index m*cols + n

  static Cotangent zeros(int rows, int cols);

  std::complex<double>& at(int m, int n) { return values[static_cast<size_t>(m) * cols + n]; }
  const std::complex<double>& at(int m, int n) const {
    return values[static_cast<size_t>(m) * cols + n];
  }
};

// Loss gradients in the plan's own parameterization: d_lengths mirrors
// LengthField::values and d_positions mirrors PositionField::values
// (so UniformHop yields {dt0, dH} and FixedOverlap {dalpha, dt0}).
struct ParamGradients {
  LengthMode length_mode = LengthMode::Constant;
  std::vector<double> d_lengths;
  PositionMode position_mode = PositionMode::UniformHop;
  std::vector<double> d_positions;

  void add_scaled(const ParamGradients& other, double scale);
  void scale(double factor);
  double squared_norm() const;
};

ParamGradients zero_gradients(const DstftPlan& plan);

// Chain-rule contraction of the cotangent into parameter gradients. Runs two
// extra transform passes (d_theta and d_x tapers) plus O(M*N) reductions.
ParamGradients backward(const DstftPlan& plan, const Signal& signal, const Cotangent& u);

// Pull a gradient on the resolved frame positions back onto the position
// parameters. FixedOverlap also accumulates into the length gradients, since
// later positions depend on earlier lengths.
void chain_positions(const DstftPlan& plan, const std::vector<double>& d_t, ParamGradients& out);

// Pull a per-frame length gradient back onto the length field; defined for
// Constant (summed) and TimeVarying (copied) modes.
void chain_lengths_per_frame(const DstftPlan& plan, const std::vector<double>& d_theta_n,
                             ParamGradients& out);

// Number of backward() invocations so far in this process.
std::uint64_t backward_call_count();

}  // namespace dstft
