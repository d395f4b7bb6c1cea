#include "pairdiff/models.hpp"

#include "pairdiff/error.hpp"

namespace pairdiff {

ModelId parse_model_id(std::string_view name) {
  if (name == "plr") return ModelId::kPlr;
  if (name == "pll") return ModelId::kPll;
  if (name == "plt") return ModelId::kPlt;
  throw ConfigError("unknown model '" + std::string(name) + "' (expected plr, pll or plt)");
}

std::string to_string(ModelId id) {
  switch (id) {
    case ModelId::kPlr:
      return "plr";
    case ModelId::kPll:
      return "pll";
    case ModelId::kPlt:
      return "plt";
  }
  return "unknown";
}

Smoothness PairwiseModel::smoothness() const {
  return visit_model(id_, [](auto policy) { return decltype(policy)::smoothness; });
}

double PairwiseModel::loss(double yi, double yj, double u) const {
  return visit_model(id_, [&](auto policy) { return policy.loss(yi, yj, u); });
}

double PairwiseModel::dloss(double yi, double yj, double u) const {
  return visit_model(id_, [&](auto policy) { return policy.dloss(yi, yj, u); });
}

double PairwiseModel::d2loss(double yi, double yj, double u) const {
  return visit_model(id_, [&](auto policy) { return policy.d2loss(yi, yj, u); });
}

namespace {

void check_pair(const Observation& zi, const Observation& zj, const Vector& theta) {
  if (zi.x.size() != theta.size() || zj.x.size() != theta.size()) {
    throw ConfigError("regressor dimension does not match parameter dimension " + std::to_string(theta.size()));
  }
}

}  // namespace

double PairwiseModel::m(const Observation& zi, const Observation& zj, const Vector& theta) const {
  check_pair(zi, zj, theta);
  const double u = (zi.x - zj.x).dot(theta);
  return loss(zi.y, zj.y, u);
}

Vector PairwiseModel::s(const Observation& zi, const Observation& zj, const Vector& theta) const {
  check_pair(zi, zj, theta);
  const Vector dx = zi.x - zj.x;
  return dx * dloss(zi.y, zj.y, dx.dot(theta));
}

void PairwiseModel::validate_outcomes(const Dataset& data) const {
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double y = data.y()[i];
    if (id_ == ModelId::kPll && y != 0.0 && y != 1.0) {
      throw DataError("pll requires binary outcomes; row " + std::to_string(i + 1) + " has y=" + std::to_string(y));
    }
    if (id_ == ModelId::kPlt && y < 0.0) {
      throw DataError("plt requires nonnegative (censored at zero) outcomes; row " + std::to_string(i + 1) +
                      " has y=" + std::to_string(y));
    }
  }
}

double plr_m(const Observation& zi, const Observation& zj, const Vector& theta) {
  return PairwiseModel(ModelId::kPlr).m(zi, zj, theta);
}
Vector plr_s(const Observation& zi, const Observation& zj, const Vector& theta) {
  return PairwiseModel(ModelId::kPlr).s(zi, zj, theta);
}
double pll_m(const Observation& zi, const Observation& zj, const Vector& theta) {
  if ((zi.y != 0.0 && zi.y != 1.0) || (zj.y != 0.0 && zj.y != 1.0)) throw DataError("pll requires binary outcomes");
  return PairwiseModel(ModelId::kPll).m(zi, zj, theta);
}
Vector pll_s(const Observation& zi, const Observation& zj, const Vector& theta) {
  return PairwiseModel(ModelId::kPll).s(zi, zj, theta);
}
double plt_m(const Observation& zi, const Observation& zj, const Vector& theta) {
  if (zi.y < 0.0 || zj.y < 0.0) throw DataError("plt requires nonnegative outcomes");
  return PairwiseModel(ModelId::kPlt).m(zi, zj, theta);
}
Vector plt_s(const Observation& zi, const Observation& zj, const Vector& theta) {
  return PairwiseModel(ModelId::kPlt).s(zi, zj, theta);
}

}  // namespace pairdiff
