#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>

#include "doctest.h"
#include "pairdiff/error.hpp"
#include "pairdiff/objective.hpp"
#include "support.hpp"

using namespace pairdiff;

namespace {

constexpr ModelId kModels[] = {ModelId::kPlr, ModelId::kPll, ModelId::kPlt};
constexpr KernelFamily kFamilies[] = {KernelFamily::kGaussian, KernelFamily::kEpanechnikov, KernelFamily::kUniform};

Vector random_theta(std::mt19937_64& rng, int k) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector t(k);
  for (int j = 0; j < k; ++j) t[j] = normal(rng);
  return t;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_SUITE("objective") {

TEST_CASE("objective equals the brute-force double loop") {
  std::mt19937_64 rng(101);
  for (ModelId id : kModels) {
    for (KernelFamily family : kFamilies) {
      for (int d = 1; d <= 2; ++d) {
        const Dataset data = testing::random_dataset(rng, 60, 2, d, id);
        const KernelSpec spec{family, d};
        const PairWeights weights = pairwise_weights(data, spec, 0.9);
        const PairwiseModel model(id);
        for (int rep = 0; rep < 3; ++rep) {
          const Vector theta = random_theta(rng, 2);
          const double ref = testing::brute_force_objective(data, id, family, 0.9, theta);
          CHECK(objective_value(weights, model, data, theta) == doctest::Approx(ref).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("weights cover every pair once with the U-statistic normalization") {
  std::mt19937_64 rng(4);
  const Dataset data = testing::random_dataset(rng, 41, 1, 1, ModelId::kPlr);
  const PairWeights full = pairwise_weights(data, KernelSpec{KernelFamily::kEpanechnikov, 1}, 0.3, false);
  CHECK(full.total_pairs == 41 * 40 / 2);
  CHECK(full.pairs.size() == full.total_pairs);
  CHECK(full.normalization == doctest::Approx(1.0 / 820.0));
  for (std::size_t p = 1; p < full.pairs.size(); ++p) {
    const auto& a = full.pairs[p - 1];
    const auto& b = full.pairs[p];
    CHECK((a.i < b.i || (a.i == b.i && a.j < b.j)));
  }
  const PairWeights pruned = pairwise_weights(data, KernelSpec{KernelFamily::kEpanechnikov, 1}, 0.3, true);
  CHECK(pruned.pairs.size() == pruned.nonzero);
  CHECK(pruned.nonzero < full.total_pairs);
  CHECK(std::all_of(pruned.pairs.begin(), pruned.pairs.end(), [](const PairWeight& p) { return p.weight > 0.0; }));
}

TEST_CASE("pruning zero weights leaves values bitwise unchanged") {
  std::mt19937_64 rng(12);
  for (ModelId id : kModels) {
    for (KernelFamily family : {KernelFamily::kEpanechnikov, KernelFamily::kUniform}) {
      const Dataset data = testing::random_dataset(rng, 80, 2, 1, id);
      const KernelSpec spec{family, 1};
      const PairWeights pruned = pairwise_weights(data, spec, 0.25, true);
      const PairWeights full = pairwise_weights(data, spec, 0.25, false);
      const PairwiseModel model(id);
      const Vector theta = random_theta(rng, 2);
      CHECK(same_bits(objective_value(pruned, model, data, theta), objective_value(full, model, data, theta)));
      const Vector ga = objective_subgradient(pruned, model, data, theta);
      const Vector gb = objective_subgradient(full, model, data, theta);
      for (int j = 0; j < 2; ++j) CHECK(same_bits(ga[j], gb[j]));
    }
  }
}

TEST_CASE("gradient and Hessian match finite differences for smooth losses") {
  std::mt19937_64 rng(77);
  for (ModelId id : {ModelId::kPlr, ModelId::kPll}) {
    const Dataset data = testing::random_dataset(rng, 70, 3, 1, id);
    const PairWeights weights = pairwise_weights(data, KernelSpec{KernelFamily::kGaussian, 1}, 0.7);
    const PairwiseModel model(id);
    const Vector theta = random_theta(rng, 3);
    const ObjectiveEval eval = evaluate_objective(weights, model, data, theta, true, true);
    CHECK(eval.value == objective_value(weights, model, data, theta));
    const double step = 1e-5;
    for (int j = 0; j < 3; ++j) {
      Vector up = theta;
      Vector down = theta;
      up[j] += step;
      down[j] -= step;
      const double fd = (objective_value(weights, model, data, up) - objective_value(weights, model, data, down)) /
                        (2.0 * step);
      CHECK(eval.gradient[j] == doctest::Approx(fd).epsilon(1e-7));
      const Vector dg = (objective_subgradient(weights, model, data, up) -
                         objective_subgradient(weights, model, data, down)) /
                        (2.0 * step);
      for (int i = 0; i < 3; ++i) CHECK(eval.hessian(i, j) == doctest::Approx(dg[i]).epsilon(1e-6));
    }
    CHECK((eval.hessian - eval.hessian.transpose()).norm() == 0.0);
  }
}

TEST_CASE("objective is convex along random segments") {
  std::mt19937_64 rng(9);
  for (ModelId id : kModels) {
    const Dataset data = testing::random_dataset(rng, 50, 2, 1, id);
    const PairWeights weights = pairwise_weights(data, KernelSpec{KernelFamily::kGaussian, 1}, 0.8);
    const PairwiseModel model(id);
    for (int rep = 0; rep < 50; ++rep) {
      const Vector a = random_theta(rng, 2);
      const Vector b = random_theta(rng, 2);
      const double mid = objective_value(weights, model, data, 0.5 * (a + b));
      const double chord = 0.5 * (objective_value(weights, model, data, a) + objective_value(weights, model, data, b));
      CHECK(mid <= chord + 1e-13 * (1.0 + std::abs(chord)));
      // Subgradient inequality for the aggregate.
      const Vector g = objective_subgradient(weights, model, data, a);
      CHECK(objective_value(weights, model, data, b) >=
            objective_value(weights, model, data, a) + g.dot(b - a) - 1e-12 * (1.0 + std::abs(chord)));
    }
  }
}

TEST_CASE("objective is invariant to row order") {
  std::mt19937_64 rng(31);
  const Dataset data = testing::random_dataset(rng, 60, 2, 1, ModelId::kPll);
  std::vector<Eigen::Index> order(60);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const Dataset shuffled = data.subset(order);
  const KernelSpec spec{KernelFamily::kGaussian, 1};
  const PairwiseModel model(ModelId::kPll);
  const Vector theta = random_theta(rng, 2);
  CHECK(objective_value(pairwise_weights(shuffled, spec, 0.6), model, shuffled, theta) ==
        doctest::Approx(objective_value(pairwise_weights(data, spec, 0.6), model, data, theta)).epsilon(1e-13));
}

TEST_CASE("weights are tied to their dataset") {
  std::mt19937_64 rng(2);
  const Dataset a = testing::random_dataset(rng, 20, 1, 1, ModelId::kPlr);
  const Dataset b = testing::random_dataset(rng, 20, 1, 1, ModelId::kPlr);
  const PairWeights wa = pairwise_weights(a, KernelSpec{KernelFamily::kGaussian, 1}, 0.5);
  CHECK_NOTHROW(check_weights_match(wa, a));
  CHECK_THROWS_AS(check_weights_match(wa, b), ConfigError);
  CHECK_THROWS_AS(pairwise_weights(a, KernelSpec{KernelFamily::kGaussian, 2}, 0.5), ConfigError);
  CHECK_THROWS_AS(pairwise_weights(a, KernelSpec{KernelFamily::kGaussian, 1}, 0.0), ConfigError);
}

TEST_CASE("regime diagnostics") {
  std::mt19937_64 rng(6);
  const Dataset data = testing::random_dataset(rng, 100, 1, 1, ModelId::kPlr);
  const KernelSpec spec{KernelFamily::kEpanechnikov, 1};
  const auto linear = regime_diagnostics(pairwise_weights(data, spec, 0.5), 100, 0.5, 1);
  CHECK(linear.nhd == doctest::Approx(50.0));
  CHECK(linear.regime == Regime::kLinear);
  CHECK(linear.rate == doctest::Approx(10.0));
  CHECK_FALSE(linear.outside_scope);
  const auto small = regime_diagnostics(pairwise_weights(data, spec, 0.01), 100, 0.01, 1);
  CHECK(small.regime == Regime::kSmallBandwidth);
  CHECK(small.rate == doctest::Approx(std::sqrt(4950.0 * 0.01)));
  const auto tiny = regime_diagnostics(pairwise_weights(data, spec, 1e-4), 100, 1e-4, 1);
  CHECK(tiny.outside_scope);
  CHECK(regime_diagnostics(pairwise_weights(data, spec, 0.05), 100, 0.05, 1).regime == Regime::kIntermediate);
}

TEST_CASE("weights and objective at reference points") {
  RowMatrix x(2, 1);
  x << 1.0, 0.0;
  RowMatrix w(2, 1);
  w << 0.0, 0.3;
  const Dataset pair((Vector(2) << 2.0, 1.0).finished(), x, w);
  const PairWeights uni = pairwise_weights(pair, KernelSpec{KernelFamily::kUniform, 1}, 1.0);
  REQUIRE(uni.pairs.size() == 1);
  CHECK(uni.pairs[0].weight == 1.0);
  // theta = 1 makes the single pairwise residual zero.
  CHECK(objective_value(uni, PairwiseModel(ModelId::kPlr), pair, Vector::Ones(1)) == 0.0);

  RowMatrix far(3, 1);
  far << 0.0, 1.0, 2.0;
  const Dataset spread((Vector(3) << 1.0, 2.0, 3.0).finished(), RowMatrix::Ones(3, 1), far);
  const PairWeights none = pairwise_weights(spread, KernelSpec{KernelFamily::kUniform, 1}, 0.5);
  CHECK(none.degenerate());
  CHECK(objective_value(none, PairwiseModel(ModelId::kPll), spread, Vector::Ones(1)) == 0.0);
  CHECK(objective_subgradient(none, PairwiseModel(ModelId::kPlr), spread, Vector::Ones(1)) == Vector::Zero(1));

  std::mt19937_64 rng(3);
  const Dataset data = testing::random_dataset(rng, 30, 2, 1, ModelId::kPlr);
  const PairWeights gauss = pairwise_weights(data, KernelSpec{KernelFamily::kGaussian, 1}, 0.4);
  CHECK(gauss.nonzero == 435);
  for (const auto& p : gauss.pairs) {
    const Vector a = data.w().row(p.i).transpose() - data.w().row(p.j).transpose();
    CHECK(p.weight == doctest::Approx(scaled_kernel_eval(KernelSpec{KernelFamily::kGaussian, 1}, -a, 0.4)).epsilon(1e-14));
  }
}

TEST_CASE("PLR gradient vanishes at the closed-form minimizer") {
  std::mt19937_64 rng(8);
  const Dataset data = testing::random_dataset(rng, 100, 3, 2, ModelId::kPlr);
  const PairWeights weights = pairwise_weights(data, KernelSpec{KernelFamily::kGaussian, 2}, 0.7);
  const Vector theta = testing::brute_force_plr(data, KernelFamily::kGaussian, 0.7);
  CHECK(objective_subgradient(weights, PairwiseModel(ModelId::kPlr), data, theta).norm() <= 1e-8);
}

}
