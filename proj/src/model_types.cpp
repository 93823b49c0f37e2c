#include "jointgibbs/model_types.hpp"

#include <vector>

namespace jointgibbs {

const char* family_name(Family f) {
  switch (f) {
    case Family::Gaussian: return "gaussian";
    case Family::Binomial: return "binomial";
    case Family::Gamma: return "gamma";
    case Family::Poisson: return "poisson";
    case Family::Lognorm: return "lognorm";
    case Family::Beta: return "beta";
    case Family::Ordinal: return "ordinal";
    case Family::Multinomial: return "multinomial";
    case Family::Weibull: return "weibull";
  }
  return "?";
}

const char* link_name(Link l) {
  switch (l) {
    case Link::Identity: return "identity";
    case Link::Logit: return "logit";
    case Link::Probit: return "probit";
    case Link::Log: return "log";
    case Link::Cloglog: return "cloglog";
    case Link::Inverse: return "inverse";
  }
  return "?";
}

Link parse_link(const std::string& s) {
  if (s == "identity") return Link::Identity;
  if (s == "logit") return Link::Logit;
  if (s == "probit") return Link::Probit;
  if (s == "log") return Link::Log;
  if (s == "cloglog") return Link::Cloglog;
  if (s == "inverse") return Link::Inverse;
  throw ConfigError("unknown link '" + s + "'");
}

Family parse_family(const std::string& s) {
  if (s == "gaussian") return Family::Gaussian;
  if (s == "binomial") return Family::Binomial;
  if (s == "Gamma" || s == "gamma") return Family::Gamma;
  if (s == "poisson") return Family::Poisson;
  if (s == "lognorm") return Family::Lognorm;
  if (s == "beta") return Family::Beta;
  throw ConfigError("unknown family '" + s + "'");
}

bool link_allowed(Family f, Link l) {
  switch (f) {
    case Family::Gaussian: return l == Link::Identity || l == Link::Log || l == Link::Inverse;
    case Family::Binomial: return l == Link::Logit || l == Link::Probit || l == Link::Log || l == Link::Cloglog;
    case Family::Gamma: return l == Link::Inverse || l == Link::Identity || l == Link::Log;
    case Family::Poisson: return l == Link::Log || l == Link::Identity;
    case Family::Lognorm: return l == Link::Identity;
    case Family::Beta: return l == Link::Logit;
    case Family::Ordinal: return l == Link::Logit;
    case Family::Multinomial: return l == Link::Logit;
    case Family::Weibull: return l == Link::Log;
  }
  return false;
}

ModelType parse_model_type(const std::string& name) {
  ModelType t;
  auto simple = [&](Family f, Link l, bool mixed) {
    t.family = f;
    t.link = l;
    t.mixed = mixed;
    return t;
  };
  if (name == "lm") return simple(Family::Gaussian, Link::Identity, false);
  if (name == "lmm") return simple(Family::Gaussian, Link::Identity, true);
  if (name == "clm") return simple(Family::Ordinal, Link::Logit, false);
  if (name == "mlogit") return simple(Family::Multinomial, Link::Logit, false);
  if (name == "lognorm") return simple(Family::Lognorm, Link::Identity, false);
  if (name == "beta" || name == "betareg") return simple(Family::Beta, Link::Logit, false);
  if (name == "survreg") return simple(Family::Weibull, Link::Log, false);
  if (name == "clmm" || name == "mlogitmm" || name == "glmm_lognorm" || name == "glmm_beta" ||
      name == "lognormmm" || name == "betamm")
    throw ConfigError("model type '" + name + "' is not supported");
  // glm_<family>_<link> / glmm_<family>_<link>
  bool mixed = false;
  std::string rest;
  if (name.rfind("glmm_", 0) == 0) {
    mixed = true;
    rest = name.substr(5);
  } else if (name.rfind("glm_", 0) == 0) {
    rest = name.substr(4);
  } else {
    throw ConfigError("unknown model type '" + name + "'");
  }
  auto us = rest.find('_');
  if (us == std::string::npos) throw ConfigError("unknown model type '" + name + "'");
  Family f = parse_family(rest.substr(0, us));
  Link l = parse_link(rest.substr(us + 1));
  if (!link_allowed(f, l)) throw ConfigError("link '" + rest.substr(us + 1) + "' not available for '" + name + "'");
  if (mixed && !(f == Family::Gaussian || (f == Family::Binomial && l == Link::Logit)))
    throw ConfigError("model type '" + name + "' is not supported");
  return simple(f, l, mixed);
}

std::string model_type_label(const ModelType& t, bool analysis) {
  switch (t.family) {
    case Family::Ordinal: return "clm";
    case Family::Multinomial: return "mlogit";
    case Family::Lognorm: return "lognorm";
    case Family::Beta: return "beta";
    case Family::Weibull: return "survreg";
    default: break;
  }
  if (!analysis && t.family == Family::Gaussian && t.link == Link::Identity) return t.mixed ? "lmm" : "lm";
  return std::string(t.mixed ? "glmm_" : "glm_") + family_name(t.family) +
         "_" + link_name(t.link);
}

ModelType select_model_type(const VariableMeta& meta, bool lower_level) {
  ModelType t;
  switch (meta.vtype) {
    case VType::Continuous:
      t.family = Family::Gaussian;
      t.link = Link::Identity;
      break;
    case VType::Binary:
      t.family = Family::Binomial;
      t.link = Link::Logit;
      break;
    case VType::Unordered:
      if (lower_level) throw ConfigError("no supported model for lower-level unordered factor '" + meta.name + "'");
      t.family = Family::Multinomial;
      t.link = Link::Logit;
      break;
    case VType::Ordered:
      if (lower_level) throw ConfigError("no supported model for lower-level ordered factor '" + meta.name + "'");
      t.family = Family::Ordinal;
      t.link = Link::Logit;
      break;
  }
  t.mixed = lower_level;
  return t;
}

ModelType default_analysis_type(const VariableMeta& meta, bool mixed) {
  ModelType t = select_model_type(meta, false);
  if (mixed) {
    if (t.family != Family::Gaussian && t.family != Family::Binomial)
      throw ConfigError("mixed models for '" + meta.name + "' of type " + vtype_name(meta.vtype) +
                        " are not supported");
    t.mixed = true;
  }
  return t;
}

}  // namespace jointgibbs
