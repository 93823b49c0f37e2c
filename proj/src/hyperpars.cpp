#include "jointgibbs/hyperpars.hpp"

#include <cmath>

namespace jointgibbs {

HyperParameters default_hyperparameters() { return HyperParameters{}; }

RegressionPrior HyperParameters::regression(Family f) const {
  switch (f) {
    case Family::Gaussian:
    case Family::Lognorm: return norm;
    case Family::Gamma: return gamma;
    case Family::Beta: return beta;
    case Family::Binomial: return binom;
    case Family::Poisson: return poisson;
    case Family::Multinomial: return multinomial;
    case Family::Ordinal: return ordinal;
    case Family::Weibull: return RegressionPrior{mu_reg_surv, tau_reg_surv};
  }
  return norm;
}

PrecisionPrior HyperParameters::precision(Family f) const {
  switch (f) {
    case Family::Gamma: return gamma_tau;
    case Family::Beta: return beta_tau;
    default: return norm_tau;
  }
}

std::vector<std::pair<std::string, std::vector<std::pair<std::string, double>>>> HyperParameters::listing() const {
  return {
      {"norm", {{"mu_reg_norm", norm.mu_reg}, {"tau_reg_norm", norm.tau_reg},
                {"shape_tau_norm", norm_tau.shape_tau}, {"rate_tau_norm", norm_tau.rate_tau}}},
      {"gamma", {{"mu_reg_gamma", gamma.mu_reg}, {"tau_reg_gamma", gamma.tau_reg},
                 {"shape_tau_gamma", gamma_tau.shape_tau}, {"rate_tau_gamma", gamma_tau.rate_tau}}},
      {"beta", {{"mu_reg_beta", beta.mu_reg}, {"tau_reg_beta", beta.tau_reg},
                {"shape_tau_beta", beta_tau.shape_tau}, {"rate_tau_beta", beta_tau.rate_tau}}},
      {"binom", {{"mu_reg_binom", binom.mu_reg}, {"tau_reg_binom", binom.tau_reg}}},
      {"poisson", {{"mu_reg_poisson", poisson.mu_reg}, {"tau_reg_poisson", poisson.tau_reg}}},
      {"multinomial", {{"mu_reg_multinomial", multinomial.mu_reg}, {"tau_reg_multinomial", multinomial.tau_reg}}},
      {"ordinal", {{"mu_reg_ordinal", ordinal.mu_reg}, {"tau_reg_ordinal", ordinal.tau_reg},
                   {"mu_delta_ordinal", mu_delta_ordinal}, {"tau_delta_ordinal", tau_delta_ordinal}}},
      {"ranef", {{"shape_diag_RinvD", shape_diag_RinvD}, {"rate_diag_RinvD", rate_diag_RinvD},
                 {"KinvD_offset", KinvD_offset}}},
      {"surv", {{"mu_reg_surv", mu_reg_surv}, {"tau_reg_surv", tau_reg_surv}, {"rate_shape_surv", rate_shape_surv}}},
      {"ridge", {{"shape_ridge", shape_ridge}, {"rate_ridge", rate_ridge}}},
  };
}

void HyperParameters::set(const std::string& group, const std::string& key, double value) {
  if (!std::isfinite(value)) throw ConfigError("hyper-parameter '" + key + "' must be finite");
  std::map<std::string, double*> fields{
      {"mu_reg_norm", &norm.mu_reg},
      {"tau_reg_norm", &norm.tau_reg},
      {"shape_tau_norm", &norm_tau.shape_tau},
      {"rate_tau_norm", &norm_tau.rate_tau},
      {"mu_reg_gamma", &gamma.mu_reg},
      {"tau_reg_gamma", &gamma.tau_reg},
      {"shape_tau_gamma", &gamma_tau.shape_tau},
      {"rate_tau_gamma", &gamma_tau.rate_tau},
      {"mu_reg_beta", &beta.mu_reg},
      {"tau_reg_beta", &beta.tau_reg},
      {"shape_tau_beta", &beta_tau.shape_tau},
      {"rate_tau_beta", &beta_tau.rate_tau},
      {"mu_reg_binom", &binom.mu_reg},
      {"tau_reg_binom", &binom.tau_reg},
      {"mu_reg_poisson", &poisson.mu_reg},
      {"tau_reg_poisson", &poisson.tau_reg},
      {"mu_reg_multinomial", &multinomial.mu_reg},
      {"tau_reg_multinomial", &multinomial.tau_reg},
      {"mu_reg_ordinal", &ordinal.mu_reg},
      {"tau_reg_ordinal", &ordinal.tau_reg},
      {"mu_delta_ordinal", &mu_delta_ordinal},
      {"tau_delta_ordinal", &tau_delta_ordinal},
      {"shape_diag_RinvD", &shape_diag_RinvD},
      {"rate_diag_RinvD", &rate_diag_RinvD},
      {"KinvD_offset", &KinvD_offset},
      {"mu_reg_surv", &mu_reg_surv},
      {"tau_reg_surv", &tau_reg_surv},
      {"rate_shape_surv", &rate_shape_surv},
      {"shape_ridge", &shape_ridge},
      {"rate_ridge", &rate_ridge},
  };
  bool found_group = false;
  for (const auto& [g, entries] : listing()) {
    if (g != group) continue;
    found_group = true;
    bool ok = false;
    for (const auto& e : entries) ok = ok || e.first == key;
    if (!ok) throw ConfigError("unknown hyper-parameter '" + key + "' in group '" + group + "'");
  }
  if (!found_group) throw ConfigError("unknown hyper-parameter group '" + group + "'");
  bool location = key.rfind("mu_", 0) == 0;
  if (!location && !(value > 0.0))
    throw ConfigError("hyper-parameter '" + key + "' must be positive");
  *fields.at(key) = value;
}

}  // namespace jointgibbs
