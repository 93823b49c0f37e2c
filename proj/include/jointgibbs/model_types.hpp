#pragma once

#include <string>

#include "jointgibbs/dataset.hpp"

namespace jointgibbs {

enum class Family { Gaussian, Binomial, Gamma, Poisson, Lognorm, Beta, Ordinal, Multinomial, Weibull };
enum class Link { Identity, Logit, Probit, Log, Cloglog, Inverse };

struct ModelType {
  Family family = Family::Gaussian;
  Link link = Link::Identity;
  bool mixed = false;

  bool operator==(const ModelType&) const = default;
  bool has_precision() const {
    return family == Family::Gaussian || family == Family::Lognorm || family == Family::Gamma ||
           family == Family::Beta;
  }
  bool has_intercept() const { return family != Family::Ordinal; }
  bool categorical_response() const {
    return family == Family::Binomial || family == Family::Ordinal || family == Family::Multinomial;
  }
};

/// Accepts the model-type names used in configs, e.g. "lm", "glm_gamma_inverse",
/// "lmm", "glmm_binomial_logit", "clm", "mlogit", "lognorm", "beta", "survreg".
ModelType parse_model_type(const std::string& name);

/// Display label. Analysis models use the family_link form
/// ("glm_gaussian_identity", "glmm_gaussian_identity"); covariate models use
/// the short forms ("lm", "lmm").
std::string model_type_label(const ModelType& t, bool analysis);

const char* family_name(Family f);
const char* link_name(Link l);
Link parse_link(const std::string& s);
Family parse_family(const std::string& s);
bool link_allowed(Family f, Link l);

/// Default covariate model for a variable; `lower_level` is true for
/// repeated-measurement (level-1) variables in a two-level setting.
ModelType select_model_type(const VariableMeta& meta, bool lower_level);

/// Default analysis model for a response of the given type.
ModelType default_analysis_type(const VariableMeta& meta, bool mixed);

}  // namespace jointgibbs
