#pragma once

// Proportional prioritized experience replay backed by a sum tree.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ipdnet/environment.hpp"
#include "ipdnet/rng.hpp"

namespace ipdnet {

struct Transition {
  Observation obs;
  std::size_t action = 0;
  double reward = 0.0;
  double discount = 0.0;  // gamma^n, or 0 when the episode ends
  Observation next_obs;

  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Binary tree of partial sums over a power-of-two number of leaves. Every
/// internal node is recomputed as left + right on each write, so its value
/// is exactly what a fresh bottom-up pairwise summation would produce.
class SumTree {
 public:
  /// Leaf count is `capacity` rounded up to a power of two.
  explicit SumTree(std::size_t capacity);

  void set(std::size_t leaf, double priority);
  double get(std::size_t leaf) const { return nodes_[leaf_count_ + leaf]; }
  double total() const { return nodes_[1]; }
  std::size_t leaf_count() const { return leaf_count_; }

  /// Leaf whose cumulative interval [prefix, prefix + priority) contains
  /// `mass`. Leaves with zero priority are never returned while the total is
  /// positive.
  std::size_t find_prefix(double mass) const;

  /// Heap-ordered storage: index 1 is the root, leaves start at leaf_count().
  std::span<const double> nodes() const { return nodes_; }

 private:
  std::size_t leaf_count_;
  std::vector<double> nodes_;
};

struct PerConfig {
  double alpha = 0.6;
  double beta_start = 0.4;
  double beta_end = 1.0;
  double priority_epsilon = 1e-6;
  std::size_t capacity = 250'000;
  std::size_t min_size_to_sample = 1'000;

  /// Throws std::invalid_argument when an invariant is broken.
  void validate() const;
};

/// Names one stored transition as of the moment it was sampled. The serial
/// lets update_priorities skip slots that were overwritten in between.
struct ReplayHandle {
  std::size_t slot = 0;
  std::uint64_t serial = 0;
};

struct SampledBatch {
  std::vector<Transition> transitions;
  std::vector<ReplayHandle> handles;
  std::vector<double> is_weights;  // normalized so the batch maximum is 1
};

class PrioritizedReplay {
 public:
  explicit PrioritizedReplay(PerConfig config);

  /// Stores `t` with leaf priority (priority + epsilon)^alpha, overwriting the
  /// oldest entry when full.
  void insert(const Transition& t, double priority);
  /// Stores `t` at the largest raw priority seen so far (1.0 initially).
  void insert(const Transition& t);

  /// Stratified proportional sampling. Returns nullopt while the buffer holds
  /// fewer than min_size_to_sample transitions.
  std::optional<SampledBatch> sample(std::size_t batch_size, double beta, Rng& rng) const;

  /// Sets each live leaf to (|td_error| + epsilon)^alpha. Stale handles are
  /// skipped.
  void update_priorities(std::span<const ReplayHandle> handles,
                         std::span<const double> td_errors);

  bool can_sample() const { return size_ >= config_.min_size_to_sample; }
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return config_.capacity; }
  const PerConfig& config() const { return config_; }
  const SumTree& tree() const { return tree_; }
  const Transition& at(std::size_t slot) const { return storage_.at(slot); }
  double max_priority() const { return max_priority_; }

 private:
  double leaf_priority(double raw) const;

  PerConfig config_;
  SumTree tree_;
  std::vector<Transition> storage_;
  std::vector<std::uint64_t> serials_;
  std::size_t cursor_ = 0;
  std::size_t size_ = 0;
  std::uint64_t next_serial_ = 1;
  double max_priority_ = 1.0;
};

/// Linear importance-sampling exponent annealing from beta_start to beta_end.
double beta_schedule(const PerConfig& config, std::int64_t step, std::int64_t total_steps);

}  // namespace ipdnet
