#include "ipdnet/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <boost/math/distributions/chi_squared.hpp>

#include "ipdnet/agent.hpp"
#include "ipdnet/environment.hpp"
#include "ipdnet/mlp.hpp"
#include "ipdnet/replay.hpp"
#include "ipdnet/rng.hpp"

namespace ipdnet {

namespace {

void record(SuiteResult& suite, bool ok, const std::string& property) {
  if (ok) {
    ++suite.passed;
    return;
  }
  ++suite.failed;
  if (suite.failures.size() < 5) suite.failures.push_back(property);
}

SuiteResult environment_tables() {
  SuiteResult suite{"environment_tables"};
  const PayoffMatrix m;
  const RewiringAction rw[] = {RewiringAction::kConnect, RewiringAction::kDisconnect};
  const InteractionAction ia[] = {InteractionAction::kCooperate, InteractionAction::kDefect};
  for (bool prev : {false, true}) {
    for (bool opp : {false, true}) {
      for (RewiringAction a1 : rw) {
        for (RewiringAction a2 : rw) {
          const bool expected =
              opp ? (a1 == RewiringAction::kConnect && a2 == RewiringAction::kConnect) : prev;
          record(suite, connection_update(prev, opp, a1, a2) == expected, "connection_update");
        }
      }
    }
  }
  const PayoffPair table[2][2] = {{{1, 1}, {-1, 2}}, {{2, -1}, {0, 0}}};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      record(suite, payoff(ia[i], ia[j], true, m) == table[i][j], "payoff_connected");
      record(suite, payoff(ia[i], ia[j], false, m) == PayoffPair{0, 0}, "payoff_disconnected");
    }
  }
  for (int t = 1; t <= kDefaultEpisodeLength; ++t) {
    record(suite, !rewiring_opportunity(RewiringSchedule::kNone, t), "schedule_none");
    record(suite, rewiring_opportunity(RewiringSchedule::kHalf, t) == (t % 2 == 0), "schedule_half");
    record(suite, rewiring_opportunity(RewiringSchedule::kFull, t), "schedule_full");
  }
  record(suite, m.is_prisoners_dilemma(), "pd_ordering");
  return suite;
}

SuiteResult gradient_check(Rng& rng, double scale) {
  SuiteResult suite{"gradient_check"};
  const double h = 1e-5;
  const double tol = 1e-4 * scale;
  for (int trial = 0; trial < 100; ++trial) {
    MlpParams p;
    for (double& v : p.flat()) v = rng.uniform(-1.0, 1.0);
    std::array<double, kInputSize> x{};
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    const std::size_t action = rng.below(2);
    const double weight = rng.uniform(0.1, 2.0);
    // Fix the target so that td = Q - target matches the analytic input.
    const double target = rng.uniform(-2.0, 2.0);
    const double td = forward(p, x)[action] - target;
    const MlpParams grad = backward(p, x, action, td, weight);
    auto loss = [&](const MlpParams& q) {
      const double e = forward(q, x)[action] - target;
      return 0.5 * weight * e * e;
    };
    double worst = 0.0;
    for (std::size_t k = 0; k < MlpParams::kSize; ++k) {
      MlpParams plus = p, minus = p;
      plus.flat()[k] += h;
      minus.flat()[k] -= h;
      const double numeric = (loss(plus) - loss(minus)) / (2 * h);
      const double analytic = grad.flat()[k];
      worst = std::max(worst, std::abs(numeric - analytic) / std::max(1.0, std::abs(analytic)));
    }
    record(suite, worst <= tol, "finite_difference_trial_" + std::to_string(trial));
  }
  return suite;
}

SuiteResult sumtree_fuzz(Rng& rng) {
  SuiteResult suite{"sumtree_fuzz"};
  SumTree tree(100);
  std::vector<double> leaves(tree.leaf_count(), 0.0);
  bool consistent = true;
  for (int op = 0; op < 10'000; ++op) {
    const std::size_t leaf = rng.below(100);
    const double value = rng.bernoulli(0.1) ? 0.0 : rng.uniform(0.0, 10.0);
    tree.set(leaf, value);
    leaves[leaf] = value;
    if (op % 97 == 0 || op == 9'999) {
      std::vector<double> level = leaves;
      std::vector<double> nodes(2 * leaves.size(), 0.0);
      std::copy(level.begin(), level.end(), nodes.begin() + static_cast<long>(leaves.size()));
      for (std::size_t n = leaves.size() - 1; n >= 1; --n) nodes[n] = nodes[2 * n] + nodes[2 * n + 1];
      consistent = consistent && std::equal(nodes.begin() + 1, nodes.end(), tree.nodes().begin() + 1);
    }
  }
  record(suite, consistent, "tree_equals_flat_resum");
  return suite;
}

SuiteResult per_distribution(Rng& rng, double scale) {
  SuiteResult suite{"per_distribution"};
  PerConfig cfg;
  cfg.capacity = 8;
  cfg.min_size_to_sample = 1;
  PrioritizedReplay buffer(cfg);
  const double raw[] = {0.5, 1.0, 2.0, 4.0, 0.1, 3.0, 0.0, 1.5};
  for (std::size_t i = 0; i < 8; ++i) {
    Transition t;
    t.action = i % 2;
    t.reward = static_cast<double>(i);
    buffer.insert(t, raw[i]);
  }
  std::array<double, 8> counts{};
  const int batches = 1000;
  const int batch_size = 100;
  bool weights_ok = true;
  for (int b = 0; b < batches; ++b) {
    const auto batch = buffer.sample(batch_size, 0.5, rng);
    double max_w = 0.0;
    for (std::size_t i = 0; i < batch->handles.size(); ++i) {
      counts[batch->handles[i].slot] += 1.0;
      max_w = std::max(max_w, batch->is_weights[i]);
      weights_ok = weights_ok && batch->is_weights[i] > 0.0 && batch->is_weights[i] <= 1.0;
    }
    weights_ok = weights_ok && max_w == 1.0;
  }
  const double draws = batches * batch_size;
  double chi2 = 0.0;
  for (std::size_t i = 0; i < 8; ++i) {
    const double expected = draws * buffer.tree().get(i) / buffer.tree().total();
    chi2 += (counts[i] - expected) * (counts[i] - expected) / expected;
  }
  const boost::math::chi_squared dist(7.0);
  const double p_value = 1.0 - boost::math::cdf(dist, chi2);
  const double critical = boost::math::quantile(dist, 0.99);
  record(suite, p_value > 0.01 && chi2 < critical * scale, "chi_squared_goodness_of_fit");
  record(suite, weights_ok, "is_weights_normalized");
  return suite;
}

SuiteResult double_dqn_targets(Rng& rng) {
  SuiteResult suite{"double_dqn_target"};
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    QNetworkPair pair{initialize_params(rng), initialize_params(rng)};
    const Observation next = encode_observation(
        rng.bernoulli(0.5) ? InteractionAction::kCooperate : InteractionAction::kDefect,
        rng.bernoulli(0.5) ? InteractionAction::kCooperate : InteractionAction::kDefect,
        rng.bernoulli(0.5), rng.bernoulli(0.5));
    const double reward = rng.uniform(-1.0, 2.0);
    const double discount = rng.bernoulli(0.2) ? 0.0 : 0.99;
    const QValues online = forward(pair.online, next.values());
    const QValues target = forward(pair.target, next.values());
    const std::size_t a = online[1] > online[0] ? 1 : 0;
    const double expected = reward + discount * target[a];
    if (double_dqn_target(pair, reward, discount, next) != expected) ++mismatches;
  }
  record(suite, mismatches == 0, "decoupled_argmax_evaluate");
  return suite;
}

SuiteResult uniform_rewiring(Rng& rng, double scale) {
  SuiteResult suite{"uniform_rewiring"};
  const Observation obs = encode_observation(std::nullopt, std::nullopt, true, false);
  const int pairs = 100'000;
  int both = 0;
  for (int i = 0; i < pairs; ++i) {
    const auto a = fixed_rewiring(RewiringBias::kUniformRandom, obs, rng);
    const auto b = fixed_rewiring(RewiringBias::kUniformRandom, obs, rng);
    both += (a == RewiringAction::kConnect && b == RewiringAction::kConnect) ? 1 : 0;
  }
  record(suite, std::abs(both / double(pairs) - 0.25) <= 0.01 * scale, "both_connect_rate");
  return suite;
}

}  // namespace

bool SelfCheckReport::ok() const {
  return !suites.empty() &&
         std::all_of(suites.begin(), suites.end(), [](const SuiteResult& s) { return s.ok(); });
}

void SelfCheckReport::print(std::ostream& out) const {
  for (const SuiteResult& s : suites) {
    out << (s.ok() ? "PASS " : "FAIL ") << s.name << ": " << s.passed << " passed, " << s.failed
        << " failed\n";
    for (const std::string& f : s.failures) out << "    failing: " << f << '\n';
  }
  out << (ok() ? "selfcheck OK" : "selfcheck FAILED") << std::endl;
}

SelfCheckReport run_selfcheck(const SelfCheckOptions& options) {
  Rng rng(options.seed);
  SelfCheckReport report;
  report.suites.push_back(environment_tables());
  report.suites.push_back(gradient_check(rng, options.tolerance_scale));
  report.suites.push_back(sumtree_fuzz(rng));
  report.suites.push_back(per_distribution(rng, options.tolerance_scale));
  report.suites.push_back(double_dqn_targets(rng));
  report.suites.push_back(uniform_rewiring(rng, options.tolerance_scale));
  return report;
}

}  // namespace ipdnet
