#pragma once

// Fixed 8 -> 16 -> 16 -> 2 multilayer perceptron with tanh hidden layers and
// a linear output, plus the Adam optimizer that trains it.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>

#include "ipdnet/rng.hpp"

namespace ipdnet {

inline constexpr std::size_t kInputSize = 8;
inline constexpr std::size_t kHidden1 = 16;
inline constexpr std::size_t kHidden2 = 16;
inline constexpr std::size_t kOutputs = 2;

using QValues = std::array<double, kOutputs>;

/// Thrown when parameters or outputs stop being finite.
class NumericalFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// All 450 network parameters in one flat array. The order is fixed and is
/// also the checkpoint layout: W1, b1, W2, b2, W3, b3, with every weight
/// matrix stored input-major (W1 is 8x16, row i holds the fan-out of input i).
class MlpParams {
 public:
  static constexpr std::size_t kW1 = 0;
  static constexpr std::size_t kB1 = kW1 + kInputSize * kHidden1;
  static constexpr std::size_t kW2 = kB1 + kHidden1;
  static constexpr std::size_t kB2 = kW2 + kHidden1 * kHidden2;
  static constexpr std::size_t kW3 = kB2 + kHidden2;
  static constexpr std::size_t kB3 = kW3 + kHidden2 * kOutputs;
  static constexpr std::size_t kSize = kB3 + kOutputs;
  static_assert(kSize == 450);

  double& w1(std::size_t in, std::size_t out) { return data_[kW1 + in * kHidden1 + out]; }
  double w1(std::size_t in, std::size_t out) const { return data_[kW1 + in * kHidden1 + out]; }
  double& b1(std::size_t out) { return data_[kB1 + out]; }
  double b1(std::size_t out) const { return data_[kB1 + out]; }
  double& w2(std::size_t in, std::size_t out) { return data_[kW2 + in * kHidden2 + out]; }
  double w2(std::size_t in, std::size_t out) const { return data_[kW2 + in * kHidden2 + out]; }
  double& b2(std::size_t out) { return data_[kB2 + out]; }
  double b2(std::size_t out) const { return data_[kB2 + out]; }
  double& w3(std::size_t in, std::size_t out) { return data_[kW3 + in * kOutputs + out]; }
  double w3(std::size_t in, std::size_t out) const { return data_[kW3 + in * kOutputs + out]; }
  double& b3(std::size_t out) { return data_[kB3 + out]; }
  double b3(std::size_t out) const { return data_[kB3 + out]; }

  std::span<double, kSize> flat() { return data_; }
  std::span<const double, kSize> flat() const { return data_; }

  bool all_finite() const;
  double squared_norm() const;
  /// FNV-1a over the raw bytes; cheap identity check for tests and logs.
  std::uint64_t fingerprint() const;

  void scale(double factor);
  /// this += factor * other
  void add_scaled(const MlpParams& other, double factor);

  friend bool operator==(const MlpParams&, const MlpParams&) = default;

 private:
  std::array<double, kSize> data_{};
};

/// Hidden activations kept for the backward pass.
struct ForwardTrace {
  std::array<double, kHidden1> h1{};
  std::array<double, kHidden2> h2{};
  QValues q{};
};

/// Q = W3^T tanh(W2^T tanh(W1^T x + b1) + b2) + b3. Throws NumericalFault
/// on non-finite parameters.
QValues forward(const MlpParams& params, std::span<const double, kInputSize> x);
ForwardTrace forward_trace(const MlpParams& params, std::span<const double, kInputSize> x);
/// Same as forward_trace without the finiteness checks, for callers that
/// already hold parameters validated by apply_update.
ForwardTrace forward_trace_unchecked(const MlpParams& params,
                                     std::span<const double, kInputSize> x);

/// grad += sum_a output_grad[a] * d Q[a] / d params.
void accumulate_output_gradient(const MlpParams& params, std::span<const double, kInputSize> x,
                                const ForwardTrace& trace, const QValues& output_grad,
                                MlpParams& grad);

/// grad += scale * d Q[action] / d params, reusing a trace from forward_trace.
void accumulate_q_gradient(const MlpParams& params, std::span<const double, kInputSize> x,
                           const ForwardTrace& trace, std::size_t action, double scale,
                           MlpParams& grad);

/// Gradient of is_weight * td_error^2 / 2 where td_error = Q[action] - target
/// and the target is held constant.
MlpParams backward(const MlpParams& params, std::span<const double, kInputSize> x,
                   std::size_t action, double td_error, double is_weight);

/// Weights uniform in +-1/sqrt(fan_in), biases zero.
MlpParams initialize_params(Rng& rng);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimizerState {
  AdamConfig config;
  MlpParams first_moment;
  MlpParams second_moment;
  std::int64_t step = 0;
};

/// One bias-corrected Adam step over matching flat spans. `step` is the
/// 1-based index of this update.
void adam_step(std::span<double> params, std::span<double> first_moment,
               std::span<double> second_moment, std::span<const double> grad,
               std::int64_t step, const AdamConfig& config);

/// Applies `grad` to `params` and advances the optimizer's step counter.
/// Throws NumericalFault if the update produces non-finite parameters.
void apply_update(MlpParams& params, OptimizerState& opt, const MlpParams& grad);

/// Online network and its periodically synchronized target copy.
struct QNetworkPair {
  MlpParams online;
  MlpParams target;

  void sync_target() { target = online; }

  friend bool operator==(const QNetworkPair&, const QNetworkPair&) = default;
};

/// Little-endian IEEE-754 doubles in flat order.
void write_params(std::ostream& out, const MlpParams& params);
MlpParams read_params(std::istream& in);

}  // namespace ipdnet
