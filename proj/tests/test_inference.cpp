#include <gtest/gtest.h>

#include <cmath>

#include "lmselect/errors.hpp"
#include "lmselect/inference.hpp"
#include "lmselect/simulate.hpp"
#include "oracle.hpp"

using namespace lmselect;

namespace {

ModelSpec binary_spec(int k, int T, int r) { return ModelSpec{k, T, std::vector<int>(static_cast<std::size_t>(r), 2)}; }

Scenario scenario1(int r = 1) { return scenario_preset(1, r, 250); }

// Scenario-1 parameters truncated to the first T occasions.
Scenario scenario1_truncated(int T) {
  auto s = scenario1();
  s.spec.occasions = T;
  if (T == 1) s.params.transitions.clear();
  return s;
}

}  // namespace

TEST(ManifestProbability, SingleOccasionMixture) {
  const auto s = binary_spec(2, 1, 1);
  LMParameters p = uniform_parameters(s);
  p.emissions[0][0] << 0.8, 0.2, 0.2, 0.8;
  EXPECT_NEAR(log_manifest_probability(p, s, {0}), std::log(0.5), 1e-15);
}

TEST(ManifestProbability, SingleStateFactorizes) {
  const ModelSpec s{1, 3, {2, 3}};
  LMParameters p = uniform_parameters(s);
  p.emissions[0][0] << 0.3, 0.7;
  p.emissions[0][1] << 0.2, 0.5, 0.3;
  const Pattern y{0, 2, 1, 1, 1, 0};
  const double expected = std::log(0.3) + std::log(0.3) + std::log(0.7) + std::log(0.5) + std::log(0.7) + std::log(0.2);
  EXPECT_NEAR(log_manifest_probability(p, s, y), expected, 1e-13);
}

TEST(ManifestProbability, ScenarioOneAllZerosMatchesEnumeration) {
  const auto sc = scenario1();
  const Pattern y{0, 0, 0, 0, 0};
  const double brute = oracle::manifest(sc.params, sc.spec, y);
  EXPECT_NEAR(log_manifest_probability(sc.params, sc.spec, y), std::log(brute), 1e-12);
  // Frozen reference value from the enumeration oracle.
  EXPECT_NEAR(brute, 0.1169012, 1e-12);
}

TEST(ManifestProbability, NormalizesOverAllPatterns) {
  const auto sc = scenario1();
  double total = 0.0;
  const auto patterns = oracle::all_patterns(sc.spec);
  ASSERT_EQ(patterns.size(), 32u);
  for (const auto& y : patterns) total += std::exp(log_manifest_probability(sc.params, sc.spec, y));
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(ManifestProbability, NormalizesForRandomModelsUpToTwelveCells) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 1 + trial % 3;
    const int r = 1 + trial % 2;
    const int T = r == 1 ? 6 : 4;
    ModelSpec s{k, T, std::vector<int>(static_cast<std::size_t>(r), 2), trial % 4 != 1, trial % 5 != 2};
    const auto p = oracle::random_parameters(s, rng);
    double total = 0.0;
    for (const auto& y : oracle::all_patterns(s)) total += std::exp(log_manifest_probability(p, s, y));
    EXPECT_NEAR(total, 1.0, 1e-10) << "trial " << trial;
  }
}

TEST(ManifestProbability, ZeroProbabilityPatternSentinel) {
  const auto s = binary_spec(2, 2, 1);
  auto p = uniform_parameters(s);
  p.emissions[0][0] << 1.0, 0.0, 1.0, 0.0;
  EXPECT_EQ(log_manifest_probability(p, s, {0, 1}), -std::numeric_limits<double>::infinity());
  EXPECT_TRUE(forward_backward(p, s, {1, 1}).zero_probability());
  EXPECT_THROW(posteriors(p, s, {0, 1}), ZeroProbabilityPattern);

  Dataset d(1, 2);
  d.add({0, 0});
  d.add({1, 0});
  const auto ll = log_likelihood(p, s, d);
  EXPECT_EQ(ll.value, -std::numeric_limits<double>::infinity());
  ASSERT_TRUE(ll.zero_probability_pattern.has_value());
  EXPECT_EQ(*ll.zero_probability_pattern, 1u);
}

TEST(ForwardBackward, ReconstitutesProbabilityAtEveryOccasion) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    ModelSpec s{1 + trial % 3, 1 + trial % 5, {2, 3}, trial % 2 == 0, trial % 3 != 0};
    const auto p = oracle::random_parameters(s, rng);
    const auto y = oracle::random_pattern(s, rng);
    const auto fb = forward_backward(p, s, y);
    for (int t = 0; t < s.occasions; ++t) {
      EXPECT_LT(oracle::relative_error(fb.reconstituted_log_probability(t), fb.log_probability), 1e-10);
    }
  }
}

TEST(ForwardBackward, ScalingDoesNotChangeResults) {
  Rng rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    ModelSpec s{2 + trial % 2, 4, {2, 2}};
    const auto p = oracle::random_parameters(s, rng);
    const auto y = oracle::random_pattern(s, rng);
    const auto a = forward_backward(p, s, y, Scaling::kPerOccasion);
    const auto b = forward_backward(p, s, y, Scaling::kNone);
    EXPECT_NEAR(a.log_probability, b.log_probability, 1e-10 * std::max(1.0, std::abs(b.log_probability)));
    const auto pa = posteriors(a, p, s);
    const auto pb = posteriors(b, p, s);
    EXPECT_LT((pa.marginal - pb.marginal).cwiseAbs().maxCoeff(), 1e-10);
    for (std::size_t t = 0; t < pa.conditional.size(); ++t) {
      EXPECT_LT((pa.conditional[t] - pb.conditional[t]).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(ForwardBackward, LongSequencesDoNotUnderflow) {
  ModelSpec s{3, 400, {2, 2, 2}};
  Rng rng(1);
  const auto p = oracle::random_parameters(s, rng);
  const auto y = oracle::random_pattern(s, rng);
  const double lp = log_manifest_probability(p, s, y);
  EXPECT_TRUE(std::isfinite(lp));
  EXPECT_LT(lp, -700.0);
  const auto post = posteriors(p, s, y);
  EXPECT_NEAR(post.marginal.col(399).sum(), 1.0, 1e-10);
}

TEST(LogLikelihood, LinearInFrequencies) {
  const auto sc = scenario1(3);
  const Dataset d = draw_dataset(sc, 0);
  const double ll = log_likelihood(sc.params, sc.spec, d).value;
  EXPECT_DOUBLE_EQ(log_likelihood(sc.params, sc.spec, d.scaled(2)).value, 2.0 * ll);

  Dataset one(1, 5);
  one.add({0, 1, 1, 0, 0}, 10);
  const auto s1 = scenario1();
  EXPECT_NEAR(log_likelihood(s1.params, s1.spec, one).value,
              10.0 * log_manifest_probability(s1.params, s1.spec, {0, 1, 1, 0, 0}), 1e-11);
}

TEST(LogLikelihood, SingleStateMatchesMultinomialClosedForm) {
  Dataset d(2, 3);
  Rng rng(2);
  const ModelSpec s{1, 3, {2, 3}};
  for (int i = 0; i < 60; ++i) d.add(oracle::random_pattern(s, rng));
  // Empirical category proportions pooled over occasions maximize the k = 1 likelihood.
  LMParameters p = uniform_parameters(s);
  std::vector<std::vector<double>> counts{{0, 0}, {0, 0, 0}};
  for (const auto& e : d.entries()) {
    for (int t = 0; t < 3; ++t) {
      for (int j = 0; j < 2; ++j) counts[static_cast<std::size_t>(j)][static_cast<std::size_t>(label_at(e.pattern, 2, t, j))] += static_cast<double>(e.count);
    }
  }
  double expected = 0.0;
  for (int j = 0; j < 2; ++j) {
    const auto& c = counts[static_cast<std::size_t>(j)];
    const double total = 180.0;
    for (std::size_t y = 0; y < c.size(); ++y) {
      p.emissions[0][static_cast<std::size_t>(j)](0, static_cast<Eigen::Index>(y)) = c[y] / total;
      if (c[y] > 0) expected += c[y] * std::log(c[y] / total);
    }
  }
  EXPECT_NEAR(log_likelihood(p, s, d).value, expected, 1e-10);
}

// Property 7 in miniature; the acceptance suite runs the full 200-draw version.
TEST(OracleEquivalence, ForwardAndPosteriorsMatchPathEnumeration) {
  Rng rng(1234);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 1 + trial % 3;
    const int T = 1 + (trial / 3) % 5;
    const int r = 1 + trial % 2;
    ModelSpec s{k, T, std::vector<int>(static_cast<std::size_t>(r), 2), trial % 4 != 3, trial % 7 != 5};
    const auto p = oracle::random_parameters(s, rng);
    const auto y = oracle::random_pattern(s, rng);
    const auto brute = oracle::posteriors(p, s, y);
    EXPECT_LT(oracle::relative_error(log_manifest_probability(p, s, y), std::log(oracle::manifest(p, s, y))), 1e-8);
    const auto post = posteriors(p, s, y);
    EXPECT_LT((post.marginal - brute.marginal).cwiseAbs().maxCoeff(), 1e-8);
    for (int t = 1; t < T; ++t) {
      EXPECT_LT((post.joint(t) - brute.pair[static_cast<std::size_t>(t - 1)]).cwiseAbs().maxCoeff(), 1e-8);
    }
  }
}

TEST(Posteriors, ScenarioOnePatternMatchesEnumeration) {
  const auto sc = scenario1();
  const Pattern y{0, 0, 1, 1, 1};
  const auto post = posteriors(sc.params, sc.spec, y);
  const auto brute = oracle::posteriors(sc.params, sc.spec, y);
  EXPECT_LT((post.marginal - brute.marginal).cwiseAbs().maxCoeff(), 1e-12);
  // Frozen: probability of state 1 at the first occasion.
  EXPECT_NEAR(post.marginal(0, 0), 0.7367047766, 1e-10);
}

TEST(Posteriors, IdentitiesHold) {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    ModelSpec s{2 + trial % 3, 2 + trial % 4, {2, 3}};
    const auto p = oracle::random_parameters(s, rng);
    const auto post = posteriors(p, s, oracle::random_pattern(s, rng));
    for (int t = 0; t < s.occasions; ++t) EXPECT_NEAR(post.marginal.col(t).sum(), 1.0, 1e-10);
    for (int t = 1; t < s.occasions; ++t) {
      const auto& c = post.conditional[static_cast<std::size_t>(t - 1)];
      for (int v = 0; v < s.states; ++v) {
        if (post.marginal(v, t - 1) > 0) EXPECT_NEAR(c.row(v).sum(), 1.0, 1e-10);
      }
      const Eigen::VectorXd col_sums = post.joint(t).colwise().sum().transpose();
      EXPECT_LT((col_sums - post.marginal.col(t)).cwiseAbs().maxCoeff(), 1e-8);
    }
  }
}

TEST(Posteriors, SingleStateIsCertain) {
  const ModelSpec s{1, 4, {2}};
  const auto post = posteriors(uniform_parameters(s), s, {0, 1, 1, 0});
  EXPECT_TRUE((post.marginal.array() == 1.0).all());
}

TEST(Posteriors, SingleOccasionIsBayesRule) {
  const ModelSpec s{2, 1, {2}};
  auto p = uniform_parameters(s);
  p.initial << 0.3, 0.7;
  p.emissions[0][0] << 0.9, 0.1, 0.4, 0.6;
  const auto post = posteriors(p, s, {0});
  EXPECT_NEAR(post.marginal(0, 0), 0.27 / (0.27 + 0.28), 1e-15);
}

TEST(Entropy, DegenerateAndMaximal) {
  const ModelSpec s{2, 1, {2}};
  auto p = uniform_parameters(s);
  EXPECT_NEAR(entropy_exact(p, s, {0}), std::log(2.0), 1e-15);
  p.emissions[0][0] << 1.0, 0.0, 0.0, 1.0;
  EXPECT_EQ(entropy_exact(p, s, {0}), 0.0);
  EXPECT_EQ(entropy_marginal(p, s, {0}), 0.0);
  EXPECT_EQ(entropy_normalized(p, s, {0}), 0.0);
}

TEST(Entropy, UniformMarginalsOverThreeOccasions) {
  const ModelSpec s{2, 3, {2}};
  const auto p = uniform_parameters(s);
  EXPECT_NEAR(entropy_marginal(p, s, {0, 1, 0}), 3 * std::log(2.0), 1e-14);
  EXPECT_NEAR(entropy_normalized(p, s, {0, 1, 0}), std::log(2.0), 1e-14);
}

TEST(Entropy, ScenarioOneTruncatedEvaluatorsAgree) {
  const auto sc = scenario1_truncated(3);
  const Pattern y{0, 1, 0};
  const double dec = entropy_exact(sc.params, sc.spec, y, EntropyEvaluator::kDecomposition);
  const double en = entropy_exact(sc.params, sc.spec, y, EntropyEvaluator::kEnumeration);
  EXPECT_NEAR(dec, en, 1e-12);
  EXPECT_NEAR(dec, oracle::posteriors(sc.params, sc.spec, y).path_entropy, 1e-12);
}

TEST(Entropy, OrderingAndEvaluatorAgreementOnRandomCases) {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 1 + trial % 5;
    const int T = 1 + (trial / 5) % 5;
    ModelSpec s{k, T, {2, 2}};
    const auto p = oracle::random_parameters(s, rng);
    const auto y = oracle::random_pattern(s, rng);
    const double dec = entropy_exact(p, s, y);
    const double enu = entropy_exact(p, s, y, EntropyEvaluator::kEnumeration);
    const double en1 = entropy_marginal(p, s, y);
    EXPECT_NEAR(dec, enu, 1e-8);
    EXPECT_GE(dec, -1e-12);
    EXPECT_LE(dec, en1 + 1e-12);
    EXPECT_LE(en1, T * std::log(static_cast<double>(k)) + 1e-12);
    EXPECT_DOUBLE_EQ(entropy_normalized(p, s, y) * T, en1);
  }
}

TEST(Entropy, EnumerationCapIsEnforced) {
  const ModelSpec s{4, 9, {2}};  // 4^9 = 262144 paths
  const auto p = uniform_parameters(s);
  const Pattern y(9, 0);
  EXPECT_THROW(entropy_exact(p, s, y, EntropyEvaluator::kEnumeration), EnumerationCapExceeded);
  EXPECT_NEAR(entropy_exact(p, s, y), 9 * std::log(4.0), 1e-10);
}

TEST(DatasetEntropy, AggregationRules) {
  const auto sc = scenario1(3);
  const Dataset d = draw_dataset(sc, 1);
  const auto e = dataset_entropies(sc.params, sc.spec, d);
  EXPECT_NEAR(e.exact, dataset_entropy(sc.params, sc.spec, d, EntropyKind::kExact), 1e-9);
  EXPECT_NEAR(e.marginal, dataset_entropy(sc.params, sc.spec, d, EntropyKind::kMarginal), 1e-9);
  EXPECT_NEAR(e.normalized * 5, e.marginal, 1e-9);
  const auto e2 = dataset_entropies(sc.params, sc.spec, d.scaled(2));
  EXPECT_NEAR(e2.exact, 2 * e.exact, 1e-9);

  Dataset one(3, 5);
  const Pattern y{0, 1, 0, 1, 1, 1, 0, 0, 0, 1, 1, 1, 0, 0, 1};
  one.add(y);
  EXPECT_NEAR(dataset_entropy(sc.params, sc.spec, one, EntropyKind::kExact), entropy_exact(sc.params, sc.spec, y),
              1e-15);
}

TEST(DatasetEntropy, SingleStateIsZero) {
  const ModelSpec s{1, 5, {2, 2, 2}};
  Rng rng(4);
  const auto p = oracle::random_parameters(s, rng);
  Dataset d(3, 5);
  for (int i = 0; i < 20; ++i) d.add(oracle::random_pattern(s, rng));
  const auto e = dataset_entropies(p, s, d);
  EXPECT_EQ(e.exact, 0.0);
  EXPECT_EQ(e.marginal, 0.0);
  EXPECT_EQ(e.normalized, 0.0);
}
