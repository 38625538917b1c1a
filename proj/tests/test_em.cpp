#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "lmselect/em.hpp"
#include "lmselect/errors.hpp"
#include "lmselect/inference.hpp"
#include "lmselect/simulate.hpp"
#include "oracle.hpp"

using namespace lmselect;

namespace {

// Expected counts rebuilt from brute-force path posteriors.
ExpectedCounts brute_counts(const LMParameters& p, const ModelSpec& s, const Dataset& d) {
  const int k = s.states;
  const int r = s.responses();
  ExpectedCounts c;
  c.initial = Eigen::VectorXd::Zero(k);
  c.transitions.assign(static_cast<std::size_t>(s.occasions - 1), Eigen::MatrixXd::Zero(k, k));
  c.responses.resize(static_cast<std::size_t>(s.occasions));
  for (auto& per_t : c.responses) {
    for (int cj : s.categories) per_t.push_back(Eigen::MatrixXd::Zero(k, cj));
  }
  for (const auto& e : d.entries()) {
    const auto post = oracle::posteriors(p, s, e.pattern);
    const double n = static_cast<double>(e.count);
    c.initial += n * post.marginal.col(0);
    for (int t = 0; t < s.occasions; ++t) {
      if (t > 0) c.transitions[static_cast<std::size_t>(t - 1)] += n * post.pair[static_cast<std::size_t>(t - 1)];
      for (int j = 0; j < r; ++j) {
        c.responses[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)].col(label_at(e.pattern, r, t, j)) +=
            n * post.marginal.col(t);
      }
    }
  }
  return c;
}

double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

Dataset scenario_data(int id, int r, int idx = 0) {
  const auto n = id >= 4 ? 500 : 250;
  return draw_dataset(scenario_preset(id, r, n), idx);
}

bool nondecreasing(const std::vector<double>& trace, double slack) {
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (trace[i] < trace[i - 1] - slack) return false;
  }
  return true;
}

}  // namespace

TEST(EStep, MatchesPathEnumeration) {
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    ModelSpec s{1 + trial % 3, 1 + trial % 4, {2, 3}, trial % 2 == 0, trial % 3 != 0};
    const auto p = oracle::random_parameters(s, rng);
    Dataset d(2, s.occasions);
    for (int i = 0; i < 15; ++i) d.add(oracle::random_pattern(s, rng), 1 + i % 3);
    const auto got = e_step(p, s, d);
    const auto want = brute_counts(p, s, d);
    EXPECT_LT(max_abs_diff(got.initial, want.initial), 1e-9);
    for (std::size_t t = 0; t < want.transitions.size(); ++t) {
      EXPECT_LT(max_abs_diff(got.transitions[t], want.transitions[t]), 1e-9);
    }
    for (std::size_t t = 0; t < want.responses.size(); ++t) {
      for (std::size_t j = 0; j < 2; ++j) EXPECT_LT(max_abs_diff(got.responses[t][j], want.responses[t][j]), 1e-9);
    }
    EXPECT_NEAR(got.log_likelihood, log_likelihood(p, s, d).value, 1e-9);
  }
}

TEST(EStep, SingleUnitTwoOccasions) {
  const ModelSpec s{2, 2, {2}};
  Rng rng(8);
  const auto p = oracle::random_parameters(s, rng);
  Dataset d(1, 2);
  d.add({1, 0});
  const auto c = e_step(p, s, d);
  const auto brute = oracle::posteriors(p, s, {1, 0});
  EXPECT_LT(max_abs_diff(c.transitions[0], brute.pair[0]), 1e-14);
}

TEST(EStep, CountInvariants) {
  const auto sc = scenario_preset(4, 3, 500);
  const auto d = draw_dataset(sc, 0);
  const auto c = e_step(sc.params, sc.spec, d);
  EXPECT_NEAR(c.initial.sum(), 500.0, 1e-6);
  for (const auto& m : c.transitions) EXPECT_NEAR(m.sum(), 500.0, 1e-6);
  for (const auto& per_t : c.responses) {
    for (const auto& m : per_t) EXPECT_NEAR(m.sum(), 500.0, 1e-6);
  }
}

TEST(EStep, SingleStateCountsAreObservedTotals) {
  const ModelSpec s{1, 5, {2}};
  const auto d = scenario_data(1, 1);
  const auto c = e_step(uniform_parameters(s), s, d);
  EXPECT_DOUBLE_EQ(c.initial(0), 250.0);
  for (const auto& m : c.transitions) EXPECT_DOUBLE_EQ(m(0, 0), 250.0);
  for (int t = 0; t < 5; ++t) {
    double zeros = 0;
    for (const auto& e : d.entries()) {
      if (e.pattern[static_cast<std::size_t>(t)] == 0) zeros += static_cast<double>(e.count);
    }
    EXPECT_NEAR(c.responses[static_cast<std::size_t>(t)][0](0, 0), zeros, 1e-9);
  }
}

TEST(EStep, DoubledDatasetDoublesCounts) {
  const auto sc = scenario_preset(1, 3, 250);
  const auto d = draw_dataset(sc, 2);
  const auto a = e_step(sc.params, sc.spec, d);
  const auto b = e_step(sc.params, sc.spec, d.scaled(2));
  EXPECT_LT(max_abs_diff(2 * a.initial, b.initial), 1e-9);
  EXPECT_LT(max_abs_diff(2 * a.transitions[2], b.transitions[2]), 1e-9);
  EXPECT_LT(max_abs_diff(2 * a.responses[4][1], b.responses[4][1]), 1e-9);
}

TEST(EStep, ZeroProbabilityPatternThrows) {
  const ModelSpec s{2, 1, {2}};
  auto p = uniform_parameters(s);
  p.emissions[0][0] << 1.0, 0.0, 1.0, 0.0;
  Dataset d(1, 1);
  d.add({1});
  EXPECT_THROW(e_step(p, s, d), ZeroProbabilityPattern);
}

TEST(MStep, SingleStateGivesEmpiricalProportions) {
  const ModelSpec s{1, 5, {2}};
  const auto d = scenario_data(1, 1);
  const auto p = m_step(e_step(uniform_parameters(s), s, d), s);
  EXPECT_DOUBLE_EQ(p.initial(0), 1.0);
  EXPECT_DOUBLE_EQ(p.transitions[0](0, 0), 1.0);
  double zeros = 0;
  for (const auto& e : d.entries()) zeros += static_cast<double>(std::count(e.pattern.begin(), e.pattern.end(), 0) * e.count);
  EXPECT_NEAR(p.emissions[0][0](0, 0), zeros / 1250.0, 1e-12);
}

TEST(MStep, SymmetricCountsGiveSymmetricTransitions) {
  const ModelSpec s{2, 2, {2}};
  ExpectedCounts c;
  c.n = 10;
  c.initial = Eigen::Vector2d(5, 5);
  c.transitions = {(Eigen::Matrix2d() << 4, 1, 1, 4).finished()};
  c.responses = {{(Eigen::Matrix2d() << 3, 2, 2, 3).finished()}, {(Eigen::Matrix2d() << 3, 2, 2, 3).finished()}};
  const auto p = m_step(c, s);
  EXPECT_DOUBLE_EQ(p.transitions[0](0, 1), p.transitions[0](1, 0));
  EXPECT_DOUBLE_EQ(p.transitions[0](0, 0), 0.8);
}

TEST(MStep, EmptyStateFallsBackToUniform) {
  const ModelSpec s{2, 2, {2}};
  ExpectedCounts c;
  c.n = 10;
  c.initial = Eigen::Vector2d(10, 0);
  c.transitions = {(Eigen::Matrix2d() << 10, 0, 0, 0).finished()};
  c.responses = {{(Eigen::Matrix2d() << 6, 4, 0, 0).finished()}, {(Eigen::Matrix2d() << 6, 4, 0, 0).finished()}};
  MStepDiagnostics diag;
  const auto p = m_step(c, s, &diag);
  EXPECT_GT(diag.degenerate_rows, 0);
  EXPECT_DOUBLE_EQ(p.transitions[0](1, 0), 0.5);
  EXPECT_DOUBLE_EQ(p.emissions[0][0](1, 1), 0.5);
  EXPECT_TRUE(validate(p, s).empty());
}

TEST(MStep, HeterogeneousSlotsUseTheirOwnCounts) {
  const ModelSpec s{2, 3, {2}, false, false};
  Rng rng(31);
  const auto truth = oracle::random_parameters(s, rng);
  Dataset d(1, 3);
  Rng draw(32);
  for (int i = 0; i < 200; ++i) d.add(draw_unit(truth, s, draw));
  const auto c = e_step(truth, s, d);
  const auto p = m_step(c, s);
  ASSERT_EQ(p.transitions.size(), 2u);
  ASSERT_EQ(p.emissions.size(), 3u);
  Eigen::MatrixXd expected = c.transitions[1];
  for (int v = 0; v < 2; ++v) expected.row(v) /= expected.row(v).sum();
  EXPECT_LT(max_abs_diff(p.transitions[1], expected), 1e-12);
  EXPECT_TRUE(validate(p, s).empty());
}

TEST(MStep, OneIterationFromTruthDoesNotDecrease) {
  const auto sc = scenario_preset(1, 1, 250);
  const auto d = draw_dataset(sc, 0);
  const auto c = e_step(sc.params, sc.spec, d);
  const auto p = m_step(c, sc.spec);
  EXPECT_TRUE(validate(p, sc.spec).empty());
  EXPECT_GE(log_likelihood(p, sc.spec, d).value, c.log_likelihood - 1e-10);
}

TEST(Starts, DeterministicStartIsValidAndAsymmetric) {
  for (int k = 1; k <= 5; ++k) {
    const ModelSpec s{k, 5, {2, 3}};
    const auto p = deterministic_start(s);
    EXPECT_TRUE(validate(p, s).empty());
    for (int u = 1; u < k; ++u) EXPECT_NE(p.emissions[0][0](u, 0), p.emissions[0][0](0, 0));
  }
}

TEST(Starts, RandomStartIsValid) {
  Rng rng(1);
  const ModelSpec s{3, 4, {2, 4}, false, false};
  EXPECT_TRUE(validate(random_start(s, rng), s).empty());
}

TEST(Fit, SingleStateClosedForm) {
  const auto d = scenario_data(1, 3);
  const ModelSpec s{1, 5, {2, 2, 2}};
  const auto f = fit(s, d);
  EXPECT_EQ(f.iterations, 0);
  EXPECT_EQ(f.start_type, StartType::kClosedForm);
  EXPECT_TRUE(f.converged);
  EXPECT_NEAR(f.log_likelihood, log_likelihood(closed_form_single_state(s, d), s, d).value, 1e-12);

  // Forcing EM at k = 1 converges to the same maximum.
  const auto forced = run_em(s, d, uniform_parameters(s), FitOptions{});
  EXPECT_NEAR(forced.log_likelihood, f.log_likelihood, 1e-9);
}

TEST(Fit, TraceIsMonotone) {
  for (int id = 1; id <= 5; ++id) {
    const auto d = scenario_data(id, 3);
    for (int k = 2; k <= 4; ++k) {
      const ModelSpec s{k, 5, {2, 2, 2}};
      const auto f = fit(s, d, FitOptions{.max_iter = 5000, .tol = 1e-8, .random_starts = 2});
      EXPECT_TRUE(nondecreasing(f.trace, 1e-8)) << "scenario " << id << " k " << k;
      EXPECT_LE(f.worst_decrease, 1e-8);
      EXPECT_EQ(f.trace.size(), static_cast<std::size_t>(f.iterations + 1));
      EXPECT_DOUBLE_EQ(f.trace.back(), f.log_likelihood);
    }
  }
}

TEST(Fit, RecoversScenarioOneEmissions) {
  const auto sc = scenario_preset(1, 3, 250);
  const auto d = draw_dataset(sc, 0, 99);
  const auto f = canonicalize_states(fit(sc.spec, d));
  // Canonical order puts the state with the lower p(Y = 0) first.
  for (int j = 0; j < 3; ++j) {
    EXPECT_NEAR(f.params.emissions[0][static_cast<std::size_t>(j)](0, 0), 0.2, 0.1);
    EXPECT_NEAR(f.params.emissions[0][static_cast<std::size_t>(j)](1, 0), 0.8, 0.1);
  }
  EXPECT_TRUE(f.converged);
}

TEST(Fit, SameSeedBitIdentical) {
  const auto d = scenario_data(2, 3);
  const ModelSpec s{3, 5, {2, 2, 2}};
  FitOptions o;
  o.seed = 7;
  const auto a = fit(s, d, o);
  const auto b = fit(s, d, o);
  EXPECT_EQ(a.log_likelihood, b.log_likelihood);
  EXPECT_EQ(a.trace, b.trace);
  EXPECT_EQ(a.start_index, b.start_index);
  EXPECT_TRUE(a.params.initial == b.params.initial);
  EXPECT_TRUE(a.params.emissions[0][0] == b.params.emissions[0][0]);
}

TEST(Fit, MultistartPicksBestStart) {
  const auto d = scenario_data(4, 3);
  const ModelSpec s{3, 5, {2, 2, 2}};
  const auto f = fit(s, d);
  ASSERT_EQ(f.start_log_likelihoods.size(), 5u);
  EXPECT_EQ(f.log_likelihood, *std::max_element(f.start_log_likelihoods.begin(), f.start_log_likelihoods.end()));
  EXPECT_EQ(f.start_log_likelihoods[static_cast<std::size_t>(f.start_index)], f.log_likelihood);
  EXPECT_EQ(f.start_type, f.start_index == 0 ? StartType::kDeterministic : StartType::kRandom);
}

TEST(Fit, UserStartIsTried) {
  const auto sc = scenario_preset(1, 1, 250);
  const auto d = draw_dataset(sc, 0);
  FitOptions o;
  o.random_starts = 0;
  o.user_start = sc.params;
  const auto f = fit(sc.spec, d, o);
  ASSERT_EQ(f.start_log_likelihoods.size(), 2u);
}

TEST(Fit, ScreeningReachesAStationaryPoint) {
  const auto d = scenario_data(5, 3);
  const ModelSpec s{3, 5, {2, 2, 2}};
  FitOptions o;
  o.screen_iterations = 30;
  const auto f = fit(s, d, o);
  EXPECT_TRUE(f.converged);
  EXPECT_TRUE(nondecreasing(f.trace, 1e-8));
  const auto full = fit(s, d);
  EXPECT_LE(f.log_likelihood, full.log_likelihood + 1e-6);
}

TEST(Fit, FixedPointAfterConvergence) {
  const auto d = scenario_data(1, 3);
  const ModelSpec s{2, 5, {2, 2, 2}};
  const auto f = fit(s, d);
  const auto next = m_step(e_step(f.params, s, d), s);
  const double l2 = log_likelihood(next, s, d).value;
  EXPECT_LT(std::abs(l2 - f.log_likelihood) / (1 + std::abs(f.log_likelihood)), 1e-8);
}

TEST(Fit, DependsOnlyOnPatternFrequencies) {
  const auto sc = scenario_preset(1, 1, 250);
  Rng rng(3);
  auto units = draw_unit_list(sc.params, sc.spec, 250, rng);
  Dataset a(1, 5), b(1, 5);
  for (const auto& u : units) a.add(u);
  std::reverse(units.begin(), units.end());
  for (const auto& u : units) b.add(u);
  const auto fa = fit(sc.spec, a);
  const auto fb = fit(sc.spec, b);
  EXPECT_EQ(fa.log_likelihood, fb.log_likelihood);
}

TEST(Fit, RejectsOutOfRangeLabels) {
  const ModelSpec s{2, 1, {2}};
  Dataset d(1, 1);
  d.add({3});
  EXPECT_THROW(fit(s, d), DataError);
}

TEST(Canonicalize, PermutationInvarianceAndRestoration) {
  const auto d = scenario_data(4, 3);
  const ModelSpec s{3, 5, {2, 2, 2}};
  const auto f = canonicalize_states(fit(s, d));
  EXPECT_EQ(canonical_order(f.params), (std::vector<int>{0, 1, 2}));

  FitResult swapped = f;
  swapped.params = permute_states(f.params, {2, 0, 1});
  EXPECT_EQ(log_likelihood(swapped.params, s, d).value, log_likelihood(f.params, s, d).value);
  const auto back = canonicalize_states(swapped);
  EXPECT_TRUE(back.params.initial == f.params.initial);
  EXPECT_TRUE(back.params.transitions[0] == f.params.transitions[0]);
  EXPECT_TRUE(back.params.emissions[0][1] == f.params.emissions[0][1]);
  EXPECT_EQ(back.log_likelihood, f.log_likelihood);

  const auto again = canonicalize_states(f);
  EXPECT_TRUE(again.params.initial == f.params.initial);
}

TEST(Canonicalize, TiesBrokenByInitialThenIndex) {
  const ModelSpec s{3, 2, {2}};
  auto p = uniform_parameters(s);
  p.initial << 0.5, 0.2, 0.3;
  EXPECT_EQ(canonical_order(p), (std::vector<int>{1, 2, 0}));
  p.initial << 0.4, 0.2, 0.4;
  EXPECT_EQ(canonical_order(p), (std::vector<int>{1, 0, 2}));
}
