#include "ipdnet/mlp.hpp"

#include <bit>
#include <cmath>
#include <istream>
#include <ostream>

namespace ipdnet {

bool MlpParams::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double MlpParams::squared_norm() const {
  double sum = 0.0;
  for (double v : data_) sum += v * v;
  return sum;
}

std::uint64_t MlpParams::fingerprint() const {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (double v : data_) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int byte = 0; byte < 8; ++byte) {
      hash ^= (bits >> (8 * byte)) & 0xFF;
      hash *= 0x100000001b3ULL;
    }
  }
  return hash;
}

void MlpParams::scale(double factor) {
  for (double& v : data_) v *= factor;
}

void MlpParams::add_scaled(const MlpParams& other, double factor) {
  for (std::size_t i = 0; i < kSize; ++i) data_[i] += factor * other.data_[i];
}

ForwardTrace forward_trace_unchecked(const MlpParams& params,
                                     std::span<const double, kInputSize> x) {
  ForwardTrace t;
  std::array<double, kHidden1> z1;
  for (std::size_t o = 0; o < kHidden1; ++o) z1[o] = params.b1(o);
  for (std::size_t i = 0; i < kInputSize; ++i) {
    if (x[i] == 0.0) continue;
    for (std::size_t o = 0; o < kHidden1; ++o) z1[o] += x[i] * params.w1(i, o);
  }
  for (std::size_t o = 0; o < kHidden1; ++o) t.h1[o] = std::tanh(z1[o]);

  std::array<double, kHidden2> z2;
  for (std::size_t o = 0; o < kHidden2; ++o) z2[o] = params.b2(o);
  for (std::size_t i = 0; i < kHidden1; ++i) {
    for (std::size_t o = 0; o < kHidden2; ++o) z2[o] += t.h1[i] * params.w2(i, o);
  }
  for (std::size_t o = 0; o < kHidden2; ++o) t.h2[o] = std::tanh(z2[o]);

  for (std::size_t o = 0; o < kOutputs; ++o) {
    double z = params.b3(o);
    for (std::size_t i = 0; i < kHidden2; ++i) z += t.h2[i] * params.w3(i, o);
    t.q[o] = z;
  }
  return t;
}

ForwardTrace forward_trace(const MlpParams& params, std::span<const double, kInputSize> x) {
  if (!params.all_finite()) throw NumericalFault("forward: non-finite network parameters");
  ForwardTrace t = forward_trace_unchecked(params, x);
  if (!std::isfinite(t.q[0]) || !std::isfinite(t.q[1])) {
    throw NumericalFault("forward: non-finite Q-values");
  }
  return t;
}

QValues forward(const MlpParams& params, std::span<const double, kInputSize> x) {
  return forward_trace(params, x).q;
}

void accumulate_output_gradient(const MlpParams& params, std::span<const double, kInputSize> x,
                                const ForwardTrace& trace, const QValues& output_grad,
                                MlpParams& grad) {
  std::array<double, kHidden2> d2{};
  for (std::size_t j = 0; j < kHidden2; ++j) {
    double back = 0.0;
    for (std::size_t a = 0; a < kOutputs; ++a) {
      grad.w3(j, a) += output_grad[a] * trace.h2[j];
      back += params.w3(j, a) * output_grad[a];
    }
    d2[j] = back * (1.0 - trace.h2[j] * trace.h2[j]);
  }
  for (std::size_t a = 0; a < kOutputs; ++a) grad.b3(a) += output_grad[a];

  std::array<double, kHidden1> d1{};
  for (std::size_t i = 0; i < kHidden1; ++i) {
    double back = 0.0;
    for (std::size_t j = 0; j < kHidden2; ++j) {
      grad.w2(i, j) += trace.h1[i] * d2[j];
      back += params.w2(i, j) * d2[j];
    }
    d1[i] = back * (1.0 - trace.h1[i] * trace.h1[i]);
  }
  for (std::size_t j = 0; j < kHidden2; ++j) grad.b2(j) += d2[j];

  for (std::size_t k = 0; k < kInputSize; ++k) {
    if (x[k] == 0.0) continue;
    for (std::size_t i = 0; i < kHidden1; ++i) grad.w1(k, i) += x[k] * d1[i];
  }
  for (std::size_t i = 0; i < kHidden1; ++i) grad.b1(i) += d1[i];
}

void accumulate_q_gradient(const MlpParams& params, std::span<const double, kInputSize> x,
                           const ForwardTrace& trace, std::size_t action, double scale,
                           MlpParams& grad) {
  if (action >= kOutputs) throw std::out_of_range("accumulate_q_gradient: action index");
  QValues output_grad{};
  output_grad[action] = scale;
  accumulate_output_gradient(params, x, trace, output_grad, grad);
}

MlpParams backward(const MlpParams& params, std::span<const double, kInputSize> x,
                   std::size_t action, double td_error, double is_weight) {
  if (action >= kOutputs) throw std::out_of_range("backward: action index must be 0 or 1");
  if (!(is_weight > 0.0)) throw std::invalid_argument("backward: is_weight must be positive");
  MlpParams grad;
  const ForwardTrace trace = forward_trace(params, x);
  accumulate_q_gradient(params, x, trace, action, is_weight * td_error, grad);
  return grad;
}

MlpParams initialize_params(Rng& rng) {
  MlpParams p;
  const double r1 = 1.0 / std::sqrt(double(kInputSize));
  const double r2 = 1.0 / std::sqrt(double(kHidden1));
  const double r3 = 1.0 / std::sqrt(double(kHidden2));
  for (std::size_t i = 0; i < kInputSize; ++i)
    for (std::size_t o = 0; o < kHidden1; ++o) p.w1(i, o) = rng.uniform(-r1, r1);
  for (std::size_t i = 0; i < kHidden1; ++i)
    for (std::size_t o = 0; o < kHidden2; ++o) p.w2(i, o) = rng.uniform(-r2, r2);
  for (std::size_t i = 0; i < kHidden2; ++i)
    for (std::size_t o = 0; o < kOutputs; ++o) p.w3(i, o) = rng.uniform(-r3, r3);
  return p;
}

void adam_step(std::span<double> params, std::span<double> first_moment,
               std::span<double> second_moment, std::span<const double> grad,
               std::int64_t step, const AdamConfig& config) {
  if (params.size() != grad.size() || params.size() != first_moment.size() ||
      params.size() != second_moment.size()) {
    throw std::invalid_argument("adam_step: span sizes differ");
  }
  if (step < 1) throw std::invalid_argument("adam_step: step index is 1-based");
  const double t = static_cast<double>(step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    first_moment[i] = config.beta1 * first_moment[i] + (1.0 - config.beta1) * g;
    second_moment[i] = config.beta2 * second_moment[i] + (1.0 - config.beta2) * g * g;
    const double m_hat = first_moment[i] / correction1;
    const double v_hat = second_moment[i] / correction2;
    params[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

void apply_update(MlpParams& params, OptimizerState& opt, const MlpParams& grad) {
  opt.step += 1;
  adam_step(params.flat(), opt.first_moment.flat(), opt.second_moment.flat(), grad.flat(),
            opt.step, opt.config);
  if (!params.all_finite()) throw NumericalFault("apply_update: parameters became non-finite");
}

void write_params(std::ostream& out, const MlpParams& params) {
  for (double v : params.flat()) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
    out.write(bytes, 8);
  }
}

MlpParams read_params(std::istream& in) {
  MlpParams params;
  for (double& v : params.flat()) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
      throw std::runtime_error("read_params: truncated parameter block");
    }
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= std::uint64_t(bytes[i]) << (8 * i);
    v = std::bit_cast<double>(bits);
  }
  return params;
}

}  // namespace ipdnet
