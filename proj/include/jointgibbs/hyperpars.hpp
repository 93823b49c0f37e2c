#pragma once

#include <map>
#include <string>
#include <vector>

#include "jointgibbs/model_types.hpp"

namespace jointgibbs {

struct RegressionPrior {
  double mu_reg = 0.0;
  double tau_reg = 1e-4;
};

struct PrecisionPrior {
  double shape_tau = 0.01;
  double rate_tau = 0.01;
};

struct HyperParameters {
  RegressionPrior norm, gamma, beta, binom, poisson, multinomial, ordinal;
  PrecisionPrior norm_tau, gamma_tau, beta_tau;
  double mu_delta_ordinal = 0.0;
  double tau_delta_ordinal = 1e-4;
  double shape_diag_RinvD = 0.01;
  double rate_diag_RinvD = 0.001;
  double KinvD_offset = 1.0;  // KinvD = nranef + KinvD_offset
  double mu_reg_surv = 0.0;
  double tau_reg_surv = 0.001;
  double rate_shape_surv = 0.01;  // Weibull shape ~ Exp(rate)

  // ridge: per-coefficient precision ~ Gamma(shape, rate)
  double shape_ridge = 0.01;
  double rate_ridge = 0.01;

  double KinvD(std::size_t nranef) const { return static_cast<double>(nranef) + KinvD_offset; }
  RegressionPrior regression(Family f) const;
  PrecisionPrior precision(Family f) const;

  /// Sets a field by its grouped name, e.g. ("norm", "tau_reg_norm").
  void set(const std::string& group, const std::string& key, double value);
  /// Grouped name → value listing in display order.
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, double>>>> listing() const;
};

HyperParameters default_hyperparameters();

}  // namespace jointgibbs
