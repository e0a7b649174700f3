#include "dstft/grad.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

namespace dstft {

namespace {

std::atomic<std::uint64_t> g_backward_calls{0};

void check_cotangent(const DstftPlan& plan, const Cotangent& u) {
  if (u.rows != plan.num_bins() || u.cols != plan.num_frames ||
      u.values.size() != static_cast<size_t>(u.rows) * static_cast<size_t>(u.cols)) {
    throw std::invalid_argument("cotangent shape does not match plan");
  }
  for (const auto& v : u.values) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw std::invalid_argument("cotangent contains non-finite entries");
    }
  }
}

}  // namespace

Cotangent Cotangent::zeros(int rows, int cols) {
  Cotangent u;
  u.rows = rows;
  u.cols = cols;
  u.values.assign(static_cast<size_t>(rows) * static_cast<size_t>(cols), {0.0, 0.0});
  return u;
}

void ParamGradients::add_scaled(const ParamGradients& other, double scale) {
  if (other.d_lengths.size() != d_lengths.size() ||
      other.d_positions.size() != d_positions.size()) {
    throw std::invalid_argument("gradient shapes do not match");
  }
  for (size_t i = 0; i < d_lengths.size(); ++i) d_lengths[i] += scale * other.d_lengths[i];
  for (size_t i = 0; i < d_positions.size(); ++i) d_positions[i] += scale * other.d_positions[i];
}

void ParamGradients::scale(double factor) {
  for (double& v : d_lengths) v *= factor;
  for (double& v : d_positions) v *= factor;
}

double ParamGradients::squared_norm() const {
  double acc = 0.0;
  for (double v : d_lengths) acc += v * v;
  for (double v : d_positions) acc += v * v;
  return acc;
}

ParamGradients zero_gradients(const DstftPlan& plan) {
  plan.validate();
  ParamGradients g;
  g.length_mode = plan.lengths.mode;
  g.d_lengths.assign(plan.lengths.values.size(), 0.0);
  g.position_mode = plan.positions.mode;
  g.d_positions.assign(plan.positions.values.size(), 0.0);
  return g;
}

void chain_positions(const DstftPlan& plan, const std::vector<double>& d_t,
                     ParamGradients& out) {
  const int N = plan.num_frames;
  if (d_t.size() != static_cast<size_t>(N)) {
    throw std::invalid_argument("per-frame position gradient has wrong length");
  }
  switch (plan.positions.mode) {
    case PositionMode::Explicit:
      for (int n = 0; n < N; ++n) out.d_positions[static_cast<size_t>(n)] += d_t[static_cast<size_t>(n)];
      break;
    case PositionMode::UniformHop: {
      // t_n = t0 + n*H.
      double d_t0 = 0.0;
      double d_hop = 0.0;
      for (int n = 0; n < N; ++n) {
        d_t0 += d_t[static_cast<size_t>(n)];
        d_hop += n * d_t[static_cast<size_t>(n)];
      }
      out.d_positions[0] += d_t0;
      out.d_positions[1] += d_hop;
      break;
    }
    case PositionMode::VaryingHop: {
      // t_n = sum_{i<=n} H_i, so dH_n collects every frame from n onward.
      double suffix = 0.0;
      for (int n = N - 1; n >= 0; --n) {
        suffix += d_t[static_cast<size_t>(n)];
        out.d_positions[static_cast<size_t>(n)] += suffix;
      }
      break;
    }
    case PositionMode::FixedOverlap: {
      // t_n = t0 + alpha * (theta_0 + ... + theta_{n-1}).
      const double alpha = plan.positions.values[0];
      const std::vector<double>& theta = plan.lengths.values;  // TimeVarying
      double d_t0 = 0.0;
      double d_alpha = 0.0;
      double theta_prefix = 0.0;
      for (int n = 0; n < N; ++n) {
        d_t0 += d_t[static_cast<size_t>(n)];
        d_alpha += d_t[static_cast<size_t>(n)] * theta_prefix;
        theta_prefix += theta[static_cast<size_t>(n)];
      }
      double suffix = 0.0;
      for (int n = N - 1; n >= 0; --n) {
        // Frames strictly after n sit alpha*theta_n further right.
        out.d_lengths[static_cast<size_t>(n)] += alpha * suffix;
        suffix += d_t[static_cast<size_t>(n)];
      }
      out.d_positions[0] += d_alpha;
      out.d_positions[1] += d_t0;
      break;
    }
  }
}

void chain_lengths_per_frame(const DstftPlan& plan, const std::vector<double>& d_theta_n,
                             ParamGradients& out) {
  const int N = plan.num_frames;
  if (d_theta_n.size() != static_cast<size_t>(N)) {
    throw std::invalid_argument("per-frame length gradient has wrong length");
  }
  switch (plan.lengths.mode) {
    case LengthMode::Constant: {
      double acc = 0.0;
      for (double v : d_theta_n) acc += v;
      out.d_lengths[0] += acc;
      break;
    }
    case LengthMode::TimeVarying:
      for (int n = 0; n < N; ++n) out.d_lengths[static_cast<size_t>(n)] += d_theta_n[static_cast<size_t>(n)];
      break;
    default:
      throw std::invalid_argument("per-frame length gradient needs Constant or TimeVarying mode");
  }
}

ParamGradients backward(const DstftPlan& plan, const Signal& signal, const Cotangent& u) {
  g_backward_calls.fetch_add(1, std::memory_order_relaxed);
  plan.validate();
  check_cotangent(plan, u);

  const TfMatrix s_dtheta = forward_taper(plan, signal, TaperPart::DTheta);
  const TfMatrix s_dx = forward_taper(plan, signal, TaperPart::DX);

  const int M = plan.num_bins();
  const int N = plan.num_frames;
  ParamGradients g = zero_gradients(plan);

  // d_theta[m,n] = Re(conj(u) * S_dtheta); contracted per mode below.
  switch (plan.lengths.mode) {
    case LengthMode::Constant: {
      double acc = 0.0;
      for (size_t i = 0; i < u.values.size(); ++i) {
        acc += (std::conj(u.values[i]) * s_dtheta.values[i]).real();
      }
      g.d_lengths[0] = acc;
      break;
    }
    case LengthMode::TimeVarying:
      for (int n = 0; n < N; ++n) {
        double acc = 0.0;
        for (int m = 0; m < M; ++m) acc += (std::conj(u.at(m, n)) * s_dtheta.at(m, n)).real();
        g.d_lengths[static_cast<size_t>(n)] = acc;
      }
      break;
    case LengthMode::FreqVarying:
      for (int m = 0; m < M; ++m) {
        double acc = 0.0;
        for (int n = 0; n < N; ++n) acc += (std::conj(u.at(m, n)) * s_dtheta.at(m, n)).real();
        g.d_lengths[static_cast<size_t>(m)] = acc;
      }
      break;
    case LengthMode::TimeFreq:
      for (size_t i = 0; i < u.values.size(); ++i) {
        g.d_lengths[i] = (std::conj(u.values[i]) * s_dtheta.values[i]).real();
      }
      break;
  }

  // Shifting a frame right slides the window against the signal, so the
  // per-frame position gradient carries a minus sign.
  std::vector<double> d_t(static_cast<size_t>(N), 0.0);
  for (int n = 0; n < N; ++n) {
    double acc = 0.0;
    for (int m = 0; m < M; ++m) acc -= (std::conj(u.at(m, n)) * s_dx.at(m, n)).real();
    d_t[static_cast<size_t>(n)] = acc;
  }
  chain_positions(plan, d_t, g);
  return g;
}

std::uint64_t backward_call_count() { return g_backward_calls.load(std::memory_order_relaxed); }

}  // namespace dstft
