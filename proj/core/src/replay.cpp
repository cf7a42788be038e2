#include "ipdnet/replay.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace ipdnet {

SumTree::SumTree(std::size_t capacity)
    : leaf_count_(std::bit_ceil(std::max<std::size_t>(capacity, 1))),
      nodes_(2 * leaf_count_, 0.0) {}

void SumTree::set(std::size_t leaf, double priority) {
  if (leaf >= leaf_count_) throw std::out_of_range("SumTree::set: leaf index");
  if (!(priority >= 0.0) || !std::isfinite(priority)) {
    throw std::invalid_argument("SumTree::set: priority must be finite and non-negative");
  }
  std::size_t node = leaf_count_ + leaf;
  nodes_[node] = priority;
  for (node /= 2; node >= 1; node /= 2) {
    nodes_[node] = nodes_[2 * node] + nodes_[2 * node + 1];
  }
}

std::size_t SumTree::find_prefix(double mass) const {
  std::size_t node = 1;
  while (node < leaf_count_) {
    const std::size_t left = 2 * node;
    const double left_sum = nodes_[left];
    if (mass < left_sum || nodes_[left + 1] <= 0.0) {
      node = left;
    } else {
      mass -= left_sum;
      node = left + 1;
    }
  }
  // Rounding in the subtraction can land on an empty leaf at the edge of a
  // subtree; walk to the nearest positive neighbour.
  std::size_t leaf = node - leaf_count_;
  if (nodes_[node] <= 0.0 && total() > 0.0) {
    for (std::size_t l = leaf; l-- > 0;) {
      if (get(l) > 0.0) return l;
    }
    for (std::size_t l = leaf + 1; l < leaf_count_; ++l) {
      if (get(l) > 0.0) return l;
    }
  }
  return leaf;
}

void PerConfig::validate() const {
  if (!(alpha >= 0.0)) throw std::invalid_argument("PerConfig: alpha must be >= 0");
  if (!(0.0 <= beta_start && beta_start <= beta_end && beta_end <= 1.0)) {
    throw std::invalid_argument("PerConfig: need 0 <= beta_start <= beta_end <= 1");
  }
  if (!(priority_epsilon > 0.0)) {
    throw std::invalid_argument("PerConfig: priority_epsilon must be > 0");
  }
  if (capacity == 0) throw std::invalid_argument("PerConfig: capacity must be positive");
  if (min_size_to_sample == 0 || min_size_to_sample > capacity) {
    throw std::invalid_argument("PerConfig: min_size_to_sample must be in 1..capacity");
  }
}

PrioritizedReplay::PrioritizedReplay(PerConfig config)
    : config_(config), tree_((config.validate(), config.capacity)) {
  storage_.resize(config_.capacity);
  serials_.assign(config_.capacity, 0);
}

double PrioritizedReplay::leaf_priority(double raw) const {
  return std::pow(raw + config_.priority_epsilon, config_.alpha);
}

void PrioritizedReplay::insert(const Transition& t, double priority) {
  if (!(priority >= 0.0)) throw std::invalid_argument("insert: priority must be >= 0");
  storage_[cursor_] = t;
  serials_[cursor_] = next_serial_++;
  tree_.set(cursor_, leaf_priority(priority));
  max_priority_ = std::max(max_priority_, priority);
  cursor_ = (cursor_ + 1) % config_.capacity;
  size_ = std::min(size_ + 1, config_.capacity);
}

void PrioritizedReplay::insert(const Transition& t) { insert(t, max_priority_); }

std::optional<SampledBatch> PrioritizedReplay::sample(std::size_t batch_size, double beta,
                                                      Rng& rng) const {
  if (batch_size == 0) throw std::invalid_argument("sample: batch_size must be >= 1");
  if (!can_sample()) return std::nullopt;

  SampledBatch batch;
  batch.transitions.reserve(batch_size);
  batch.handles.reserve(batch_size);
  batch.is_weights.reserve(batch_size);

  const double total = tree_.total();
  const double segment = total / static_cast<double>(batch_size);
  const double n = static_cast<double>(size_);
  const double last_mass = std::nextafter(total, 0.0);
  double max_weight = 0.0;
  for (std::size_t i = 0; i < batch_size; ++i) {
    const double mass =
        std::min((static_cast<double>(i) + rng.uniform()) * segment, last_mass);
    const std::size_t slot = tree_.find_prefix(mass);
    const double p = tree_.get(slot) / total;
    const double w = std::pow(n * p, -beta);
    max_weight = std::max(max_weight, w);
    batch.transitions.push_back(storage_[slot]);
    batch.handles.push_back({slot, serials_[slot]});
    batch.is_weights.push_back(w);
  }
  for (double& w : batch.is_weights) w /= max_weight;
  return batch;
}

void PrioritizedReplay::update_priorities(std::span<const ReplayHandle> handles,
                                          std::span<const double> td_errors) {
  if (handles.size() != td_errors.size()) {
    throw std::invalid_argument("update_priorities: handles and td_errors differ in length");
  }
  for (std::size_t i = 0; i < handles.size(); ++i) {
    const ReplayHandle& h = handles[i];
    if (h.slot >= config_.capacity || serials_[h.slot] != h.serial) continue;
    const double raw = std::abs(td_errors[i]);
    tree_.set(h.slot, leaf_priority(raw));
    max_priority_ = std::max(max_priority_, raw);
  }
}

double beta_schedule(const PerConfig& config, std::int64_t step, std::int64_t total_steps) {
  if (total_steps <= 0) return config.beta_end;
  const std::int64_t clamped = std::clamp<std::int64_t>(step, 0, total_steps);
  const double frac = static_cast<double>(clamped) / static_cast<double>(total_steps);
  return config.beta_start + frac * (config.beta_end - config.beta_start);
}

}  // namespace ipdnet
