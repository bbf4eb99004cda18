#include "touchrecon/pipeline/adam.hpp"
#include "touchrecon/common/parallel.hpp"
#include "touchrecon/common/types.hpp"

#include <cmath>

namespace touchrecon {

Adam::Adam(std::size_t size, const AdamOptions& options) : options_(options), m_(size, 0.0), v_(size, 0.0) {
  if (!(options.beta1 >= 0.0 && options.beta1 < 1.0) || !(options.beta2 >= 0.0 && options.beta2 < 1.0) ||
      !(options.epsilon > 0.0))
    throw InputError("adam: betas must lie in [0, 1) and epsilon must be positive");
}

void Adam::step(std::span<double> params, std::span<const double> grad, double lr) {
  if (params.size() != m_.size() || grad.size() != m_.size()) throw InputError("adam: size mismatch");
  ++t_;
  const double b1 = options_.beta1, b2 = options_.beta2, eps = options_.epsilon;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  parallel_for(static_cast<std::ptrdiff_t>(params.size()), [&](std::ptrdiff_t i) {
    m_[i] = b1 * m_[i] + (1.0 - b1) * grad[i];
    v_[i] = b2 * v_[i] + (1.0 - b2) * grad[i] * grad[i];
    params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps);
  });
}

void Adam::write(ByteWriter& w) const {
  w.f64(options_.beta1);
  w.f64(options_.beta2);
  w.f64(options_.epsilon);
  w.u64(t_);
  w.u64(m_.size());
  for (double x : m_) w.f64(x);
  for (double x : v_) w.f64(x);
}

Adam Adam::read(ByteReader& r) {
  AdamOptions o;
  o.beta1 = r.f64();
  o.beta2 = r.f64();
  o.epsilon = r.f64();
  const std::uint64_t t = r.u64();
  const std::uint64_t n = r.u64();
  if (n > r.remaining() / 16) throw InputError("adam state: truncated moments");
  Adam a(n, o);
  a.t_ = t;
  for (auto& x : a.m_) x = r.f64();
  for (auto& x : a.v_) x = r.f64();
  return a;
}

}  // namespace touchrecon
