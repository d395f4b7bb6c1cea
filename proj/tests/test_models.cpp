#include <cmath>
#include <random>

#include "doctest.h"
#include "pairdiff/error.hpp"
#include "pairdiff/models.hpp"
#include "probes.hpp"
#include "support.hpp"

using namespace pairdiff;

TEST_SUITE("models") {

TEST_CASE("losses match their definitions") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 2.0);
  for (ModelId id : {ModelId::kPlr, ModelId::kPll, ModelId::kPlt}) {
    const PairwiseModel model(id);
    for (int rep = 0; rep < 500; ++rep) {
      const auto zi = testing::random_observation(rng, 1, id);
      const auto zj = testing::random_observation(rng, 1, id);
      const double u = normal(rng);
      CHECK(model.loss(zi.y, zj.y, u) == doctest::Approx(testing::ref_loss(id, zi.y, zj.y, u)).epsilon(1e-13));
    }
  }
}

TEST_CASE("losses vanish at theta = 0 for PLT and on concordant PLL pairs") {
  for (double yi : {0.0, 0.4, 2.0}) {
    for (double yj : {0.0, 1.3}) CHECK(PltLoss::loss(yi, yj, 0.0) == 0.0);
  }
  CHECK(PllLoss::loss(1.0, 1.0, 3.0) == 0.0);
  CHECK(PllLoss::loss(0.0, 0.0, -3.0) == 0.0);
  CHECK(PllLoss::dloss(1.0, 1.0, 3.0) == 0.0);
}

TEST_CASE("PLL is stable for extreme indices") {
  CHECK(std::isfinite(PllLoss::loss(1.0, 0.0, -800.0)));
  CHECK(PllLoss::loss(1.0, 0.0, -800.0) == doctest::Approx(800.0));
  CHECK(PllLoss::loss(1.0, 0.0, 800.0) == doctest::Approx(0.0));
  CHECK(PllLoss::d2loss(1.0, 0.0, 800.0) >= 0.0);
}

TEST_CASE("PLR and PLL scores match central differences") {
  for (ModelId id : {ModelId::kPlr, ModelId::kPll}) {
    const auto probe = testing::probe_scores(id, 2000, 17 + static_cast<int>(id));
    CHECK(probe.smooth_points == probe.probes);
    CHECK(probe.worst_fd <= 1e-7);
  }
}

TEST_CASE("PLT scores are subgradients and match differences away from kinks") {
  const auto probe = testing::probe_scores(ModelId::kPlt, 2000, 29);
  CHECK(probe.worst_inequality <= 1e-12);
  CHECK(probe.worst_fd <= 1e-8);
  CHECK(probe.smooth_points > probe.probes / 2);
}

TEST_CASE("PLT kinks carry the one-sided slopes of the loss") {
  for (auto [yi, yj] : {std::pair{1.2, 0.4}, std::pair{0.7, 0.0}, std::pair{0.0, 0.9}}) {
    const Kink kink = PltLoss::kink(yi, yj);
    REQUIRE(kink.present);
    const double eps = 1e-6;
    const double left = (PltLoss::loss(yi, yj, kink.at) - PltLoss::loss(yi, yj, kink.at - eps)) / eps;
    const double right = (PltLoss::loss(yi, yj, kink.at + eps) - PltLoss::loss(yi, yj, kink.at)) / eps;
    CHECK(left == doctest::Approx(kink.left_slope).epsilon(1e-8));
    CHECK(right == doctest::Approx(kink.right_slope).epsilon(1e-8));
  }
  CHECK_FALSE(PltLoss::kink(0.0, 0.0).present);
}

TEST_CASE("the loss is convex in u") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal(0.0, 2.0);
  for (ModelId id : {ModelId::kPlr, ModelId::kPll, ModelId::kPlt}) {
    const PairwiseModel model(id);
    for (int rep = 0; rep < 1000; ++rep) {
      const auto zi = testing::random_observation(rng, 1, id);
      const auto zj = testing::random_observation(rng, 1, id);
      const double a = normal(rng);
      const double b = normal(rng);
      const double mid = model.loss(zi.y, zj.y, 0.5 * (a + b));
      const double chord = 0.5 * (model.loss(zi.y, zj.y, a) + model.loss(zi.y, zj.y, b));
      CHECK(mid <= chord + 1e-12 * (1.0 + std::abs(chord)));
    }
  }
}

TEST_CASE("outcome validation") {
  RowMatrix x = RowMatrix::Zero(3, 1);
  RowMatrix w = RowMatrix::Zero(3, 1);
  x(1, 0) = 1.0;
  const Dataset nonbinary((Vector(3) << 0.0, 1.0, 0.5).finished(), x, w);
  CHECK_THROWS_AS(PairwiseModel(ModelId::kPll).validate_outcomes(nonbinary), DataError);
  const Dataset negative((Vector(3) << 0.0, -1.0, 0.5).finished(), x, w);
  CHECK_THROWS_AS(PairwiseModel(ModelId::kPlt).validate_outcomes(negative), DataError);
  CHECK_NOTHROW(PairwiseModel(ModelId::kPlr).validate_outcomes(negative));
  CHECK_THROWS_AS(parse_model_id("probit"), ConfigError);
  CHECK(parse_model_id("plt") == ModelId::kPlt);
}

TEST_CASE("pair losses are permutation symmetric and vanish on the diagonal") {
  std::mt19937_64 rng(61);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (ModelId id : {ModelId::kPlr, ModelId::kPll, ModelId::kPlt}) {
    const PairwiseModel model(id);
    for (int rep = 0; rep < 10000; ++rep) {
      const auto zi = testing::random_observation(rng, 2, id);
      const auto zj = testing::random_observation(rng, 2, id);
      const Vector theta = (Vector(2) << 1.0 + 0.3 * normal(rng), -0.5 + 0.3 * normal(rng)).finished();
      CHECK(model.m(zi, zj, theta) == model.m(zj, zi, theta));
      CHECK(model.m(zi, zi, theta) == 0.0);
      CHECK(model.s(zi, zi, theta) == Vector::Zero(2));
      if (id != ModelId::kPlt) CHECK((model.s(zi, zj, theta) - model.s(zj, zi, theta)).norm() <= 1e-12);
    }
  }
}

TEST_CASE("pair losses at reference points") {
  auto obs = [](double y, double x) {
    Observation z;
    z.y = y;
    z.x = Vector::Constant(1, x);
    z.w = Vector::Zero(1);
    return z;
  };
  const Vector one = Vector::Ones(1);
  CHECK(plr_m(obs(2.0, 1.0), obs(1.0, 0.0), one) == 0.0);
  CHECK(plr_m(obs(2.0, 1.0), obs(0.0, 1.0), one) == 2.0);
  CHECK(plr_s(obs(2.0, 1.0), obs(1.0, 0.0), one)[0] == 0.0);
  CHECK(pll_m(obs(1.0, 0.3), obs(1.0, -0.2), one) == 0.0);
  CHECK(pll_m(obs(1.0, 0.5), obs(0.0, 0.5), one) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(pll_s(obs(1.0, 0.7), obs(0.0, 0.7), one)[0] == 0.0);
  CHECK(pll_s(obs(1.0, 1.2), obs(0.0, 0.2), Vector::Zero(1))[0] == doctest::Approx(-0.5));
  CHECK_THROWS_AS(pll_m(obs(2.0, 0.0), obs(0.0, 1.0), one), DataError);
  CHECK(plt_m(obs(0.0, 0.3), obs(0.0, 1.0), one) == 0.0);
  CHECK(plt_s(obs(0.0, 0.3), obs(0.0, 1.0), one)[0] == 0.0);
  CHECK(plt_m(obs(2.0, 0.5), obs(1.0, 0.0), one) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(plt_m(obs(0.7, 0.5), obs(1.4, 0.0), Vector::Zero(1)) == 0.0);
}

}
