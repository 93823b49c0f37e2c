#include "jointgibbs/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>

#include "jointgibbs/densities.hpp"
#include "jointgibbs/error.hpp"

namespace jointgibbs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

std::string coef_name(const ModelGraph& g, std::size_t m, std::size_t col, std::size_t set) {
  const SubModel& sm = g.models[m];
  std::string col_name = sm.X[col].name;
  if (sm.type.family == Family::Multinomial) col_name = sm.categories[set + 1] + ": " + col_name;
  if (sm.role == Role::Covariate) return "alpha_" + sm.response + "[" + col_name + "]";
  if (m == 0) return col_name;
  return sm.response + "_" + col_name;
}

std::string group_var(const ModelGraph& g) { return g.grouping ? g.grouping->variable : std::string("id"); }

enum class Transform { Identity, Log, Logit, Integer };

Transform imputation_transform(const SubModel& sm) {
  switch (sm.type.family) {
    case Family::Gamma:
    case Family::Lognorm:
    case Family::Weibull:
      return Transform::Log;
    case Family::Beta:
      return Transform::Logit;
    case Family::Poisson:
      return Transform::Integer;
    default:
      return Transform::Identity;
  }
}

double to_scale(Transform t, double x) {
  switch (t) {
    case Transform::Log:
      return std::log(x);
    case Transform::Logit:
      return std::log(x) - std::log1p(-x);
    default:
      return x;
  }
}

double from_scale(Transform t, double z) {
  switch (t) {
    case Transform::Log:
      return std::exp(z);
    case Transform::Logit:
      return 1.0 / (1.0 + std::exp(-z));
    default:
      return z;
  }
}

// log |dx/dz|
double log_jacobian(Transform t, double z) {
  switch (t) {
    case Transform::Log:
      return z;
    case Transform::Logit:
      return log_sigmoid(z) + log_sigmoid(-z);
    default:
      return 0.0;
  }
}

}  // namespace

void McmcSettings::validate() const {
  if (n_chains < 1) throw ConfigError("n_chains must be at least 1");
  if (n_adapt < 0) throw ConfigError("n_adapt must be non-negative");
  if (n_iter < 0) throw ConfigError("n_iter must be non-negative");
  if (thin < 1) throw ConfigError("thin must be at least 1");
  if (!inits.empty() && inits.size() != 1 && inits.size() != n_chains)
    throw ConfigError("inits must hold one entry or one per chain (" + std::to_string(n_chains) + "), got " +
                      std::to_string(inits.size()));
}

std::vector<NodeDesc> all_nodes(const ModelGraph& g) {
  std::vector<NodeDesc> out;
  for (std::size_t m = 0; m < g.models.size(); ++m) {
    const SubModel& sm = g.models[m];
    bool main = sm.role == Role::Analysis;
    auto tag = [&](const char* leaf) { return std::string(leaf) + (main ? "_main" : "_other"); };
    auto add = [&](std::string name, std::string t, NodeKind k, int i = 0, int j = 0) {
      NodeDesc d;
      d.name = std::move(name);
      d.tag = std::move(t);
      d.kind = k;
      d.model = static_cast<int>(m);
      d.i = i;
      d.j = j;
      out.push_back(std::move(d));
    };
    for (std::size_t k = 0; k < sm.n_coef_sets(); ++k)
      for (std::size_t c = 0; c < sm.X.size(); ++c)
        add(coef_name(g, m, c, k), main ? "betas" : "alphas", NodeKind::Coef, static_cast<int>(c), static_cast<int>(k));
    Family f = sm.type.family;
    if (f == Family::Gaussian || f == Family::Lognorm) add("sigma_" + sm.response, tag("sigma"), NodeKind::Sigma);
    if (f == Family::Gamma || f == Family::Beta) add("tau_" + sm.response, tag("tau"), NodeKind::Tau);
    if (f == Family::Weibull) add("shape_" + sm.response, "shape_main", NodeKind::Shape);
    if (f == Family::Ordinal) {
      for (std::size_t k = 0; k + 1 < sm.n_categories; ++k)
        add("gamma_" + sm.response + "[" + std::to_string(k + 1) + "]", tag("gamma"), NodeKind::Gamma,
            static_cast<int>(k));
      for (std::size_t k = 1; k + 1 < sm.n_categories; ++k)
        add("delta_" + sm.response + "[" + std::to_string(k) + "]", tag("delta"), NodeKind::Delta,
            static_cast<int>(k));
    }
    if (sm.type.mixed) {
      std::size_t q = sm.Z.size();
      std::string suffix = sm.response + "_" + group_var(g);
      for (std::size_t i = 0; i < q; ++i)
        for (std::size_t j = i; j < q; ++j) {
          std::string idx = "[" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "]";
          add("D_" + suffix + idx, tag("D"), NodeKind::D, static_cast<int>(i), static_cast<int>(j));
        }
      for (std::size_t i = 0; i < q; ++i)
        for (std::size_t j = i; j < q; ++j) {
          std::string idx = "[" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "]";
          add("invD_" + suffix + idx, tag("invD"), NodeKind::InvD, static_cast<int>(i), static_cast<int>(j));
        }
      if (q > 1)
        for (std::size_t i = 0; i < q; ++i) {
          std::string idx = "[" + std::to_string(i + 1) + "," + std::to_string(i + 1) + "]";
          add("RinvD_" + suffix + idx, tag("RinvD"), NodeKind::RinvD, static_cast<int>(i), static_cast<int>(i));
        }
      for (std::size_t gi = 0; gi < g.n_groups(); ++gi)
        for (std::size_t k = 0; k < q; ++k)
          add("b_" + suffix + "[" + std::to_string(gi + 1) + "," + std::to_string(k + 1) + "]", tag("ranef"),
              NodeKind::Ranef, static_cast<int>(gi), static_cast<int>(k));
    }
  }
  // imputed values, in sub-model order
  for (const SubModel& sm : g.models) {
    const VarInfo& v = g.vars[sm.response_var];
    if (!v.incomplete) continue;
    std::size_t nu = g.n_units(sm);
    for (std::size_t u = 0; u < nu; ++u) {
      std::size_t r = g.unit_row(sm, u);
      if (!std::isnan(g.base_values[r * g.n_vars() + sm.response_var])) continue;
      NodeDesc d;
      d.name = "imp_" + v.name + "[" + std::to_string(u + 1) + "]";
      d.tag = "imps";
      d.kind = NodeKind::Imp;
      d.model = v.model;
      d.i = static_cast<int>(u);
      d.var = v.name;
      if (sm.level2)
        d.rows = g.grouping->rows[u];
      else
        d.rows = {u};
      out.push_back(std::move(d));
    }
  }
  return out;
}

std::vector<NodeDesc> monitored_nodes(const ModelGraph& g) {
  auto leaves = resolve_leaves(g.monitor);
  std::vector<NodeDesc> all = all_nodes(g);
  for (const auto& name : g.monitor.other)
    if (std::none_of(all.begin(), all.end(), [&](const NodeDesc& d) { return d.name == name; }))
      throw ConfigError("unknown node '" + name + "' in monitor list");
  std::vector<NodeDesc> out;
  for (auto& n : all)
    if (selects(g.monitor, leaves, n.tag, n.name)) out.push_back(std::move(n));
  return out;
}

// ---------------------------------------------------------------------------

Chain::Chain(const ModelGraph& graph, const McmcSettings& settings, std::size_t chain_id)
    : g_(graph), rng_(chain_rng(settings.seed, chain_id)), nv_(graph.n_vars()), id_(chain_id) {
  vals_ = g_.base_values;
  missing_units_.resize(nv_);
  dependents_.resize(nv_);
  imp_steps_.resize(nv_);
  for (std::size_t v = 0; v < nv_; ++v) {
    const VarInfo& vi = g_.vars[v];
    if (!vi.incomplete || vi.model < 0) continue;
    const SubModel& own = g_.models[vi.model];
    for (std::size_t u = 0; u < g_.n_units(own); ++u)
      if (std::isnan(vals_[g_.unit_row(own, u) * nv_ + v])) missing_units_[v].push_back(u);
  }
  for (std::size_t m = 0; m < g_.models.size(); ++m) {
    const SubModel& sm = g_.models[m];
    auto scan = [&](const std::vector<ColumnRecipe>& cols, bool random) {
      for (std::size_t c = 0; c < cols.size(); ++c) {
        if (!cols[c].dynamic) continue;
        for (int v : cols[c].deps)
          if (g_.vars[v].incomplete)
            dependents_[v].push_back({static_cast<int>(m), random, static_cast<int>(c)});
      }
    };
    scan(sm.X, false);
    scan(sm.Z, true);
  }
  const InitValues* user = nullptr;
  if (!settings.inits.empty()) user = &settings.inits[settings.inits.size() == 1 ? 0 : chain_id];
  init(user);
}

std::vector<std::size_t> Chain::affected_rows(int var, std::size_t unit) const {
  if (g_.vars[var].level2) return g_.grouping->rows[unit];
  return {unit};
}

double Chain::trunc_lognorm(std::size_t m, std::size_t u) const {
  const SubModel& sm = g_.models[m];
  const ModelState& s = ms_[m];
  double lo = sm.trunc->lower, hi = sm.trunc->upper;
  if (sm.type.family == Family::Lognorm) {
    lo = lo > 0 ? std::log(lo) : -kInf;
    hi = std::isfinite(hi) ? std::log(hi) : kInf;
  }
  double sd = 1.0 / std::sqrt(s.tau);
  double mu = full_eta(s, u);
  return normal_log_interval((lo - mu) / sd, (hi - mu) / sd);
}

double Chain::unit_logdens(std::size_t m, std::size_t u) const {
  const SubModel& sm = g_.models[m];
  const ModelState& s = ms_[m];
  double y = s.y[u];
  switch (sm.type.family) {
    case Family::Ordinal:
      return ordinal_logprob(static_cast<int>(y), full_eta(s, u), s.cuts);
    case Family::Multinomial:
      return multinomial_logprob(static_cast<int>(y),
                                 std::span<const double>(s.eta.row(u).data(), static_cast<std::size_t>(s.eta.cols())));
    case Family::Weibull:
      return family_logpdf(Family::Weibull, sm.type.link, y, full_eta(s, u), 1.0, s.shape,
                           sm.event[g_.unit_row(sm, u)]);
    default:
      break;
  }
  if (sm.trunc && (y < sm.trunc->lower || y > sm.trunc->upper)) return -kInf;
  double ll = family_logpdf(sm.type.family, sm.type.link, y, full_eta(s, u), s.tau);
  if (sm.trunc && std::isfinite(ll)) ll -= trunc_lognorm(m, u);
  return ll;
}

double Chain::model_loglik(std::size_t m) const {
  double ll = 0.0;
  for (Eigen::Index u = 0; u < ms_[m].y.size(); ++u) {
    ll += unit_logdens(m, u);
    if (ll == -kInf) return ll;
  }
  return ll;
}

void Chain::refresh_cuts(ModelState& s) {
  s.cuts.resize(s.theta.size());
  for (Eigen::Index k = 0; k < s.theta.size(); ++k)
    s.cuts[k] = k == 0 ? s.theta[0] : s.cuts[k - 1] + std::exp(s.theta[k]);
}

void Chain::recompute_design(std::size_t m) {
  const SubModel& sm = g_.models[m];
  ModelState& s = ms_[m];
  std::size_t nu = g_.n_units(sm);
  s.X.resize(nu, sm.X.size());
  s.y.resize(nu);
  for (std::size_t u = 0; u < nu; ++u) {
    std::size_t r = g_.unit_row(sm, u);
    std::span<const double> row(&vals_[r * nv_], nv_);
    for (std::size_t c = 0; c < sm.X.size(); ++c) s.X(u, c) = sm.X[c].value(row);
    s.y[u] = row[sm.response_var];
  }
  if (sm.type.mixed) {
    s.Z.resize(nu, sm.Z.size());
    for (std::size_t u = 0; u < nu; ++u) {
      std::span<const double> row(&vals_[u * nv_], nv_);
      for (std::size_t c = 0; c < sm.Z.size(); ++c) s.Z(u, c) = sm.Z[c].value(row);
    }
  }
}

void Chain::init(const InitValues* user) {
  // 1. missing values: observed mean plus jitter / observed frequencies
  for (std::size_t v = 0; v < nv_; ++v) {
    if (missing_units_[v].empty()) continue;
    const VarInfo& vi = g_.vars[v];
    const SubModel& own = g_.models[vi.model];
    std::vector<double> obs;
    for (std::size_t u = 0; u < g_.n_units(own); ++u) {
      double x = vals_[g_.unit_row(own, u) * nv_ + v];
      if (!std::isnan(x)) obs.push_back(x);
    }
    if (obs.empty()) throw DataError("variable '" + vi.name + "' has no observed values");
    Transform t = imputation_transform(own);
    if (vi.categorical) {
      std::vector<double> lw(std::max<std::size_t>(own.n_categories, vi.meta.n_categories), 0.0);
      for (double x : obs) lw[static_cast<std::size_t>(x)] += 1.0;
      for (double& w : lw) w = w > 0 ? std::log(w) : -kInf;
      for (std::size_t u : missing_units_[v]) {
        double x = static_cast<double>(rcategorical_log(rng_, lw));
        for (std::size_t r : affected_rows(static_cast<int>(v), u)) vals_[r * nv_ + v] = x;
      }
    } else {
      std::vector<double> z;
      for (double x : obs) z.push_back(t == Transform::Integer ? x : to_scale(t, x));
      double mean = std::accumulate(z.begin(), z.end(), 0.0) / z.size();
      double var = 0.0;
      for (double x : z) var += (x - mean) * (x - mean);
      double sd = z.size() > 1 ? std::sqrt(var / (z.size() - 1)) : 1.0;
      if (!(sd > 0)) sd = 1.0;
      imp_steps_[v].log_step = std::log(t == Transform::Integer ? std::max(1.0, 0.5 * sd) : 0.5 * sd);
      for (std::size_t u : missing_units_[v]) {
        double x;
        if (t == Transform::Integer) {
          x = std::max(0.0, std::round(mean + 0.1 * sd * rnorm(rng_)));
        } else {
          x = from_scale(t, mean + 0.1 * sd * rnorm(rng_));
        }
        if (own.trunc) {
          double lo = own.trunc->lower, hi = own.trunc->upper;
          if (x <= lo || x >= hi) {
            if (std::isfinite(lo) && std::isfinite(hi))
              x = 0.5 * (lo + hi);
            else if (std::isfinite(lo))
              x = lo + std::max(0.1 * sd, 1e-8 + 1e-6 * std::abs(lo));
            else
              x = hi - std::max(0.1 * sd, 1e-8 + 1e-6 * std::abs(hi));
          }
        }
        for (std::size_t r : affected_rows(static_cast<int>(v), u)) vals_[r * nv_ + v] = x;
      }
    }
  }
  if (user) {
    for (const auto& [key, values] : *user) {
      if (key.rfind("imp_", 0) != 0) continue;
      int v = g_.var_index(key.substr(4));
      if (v < 0 || missing_units_[v].empty())
        throw ConfigError("unknown initial value '" + key + "' (no missing values for that variable)");
      if (values.size() != missing_units_[v].size())
        throw ConfigError("initial value '" + key + "' has length " + std::to_string(values.size()) + ", expected " +
                          std::to_string(missing_units_[v].size()));
      const VarInfo& vi = g_.vars[v];
      const SubModel& own = g_.models[vi.model];
      for (std::size_t i = 0; i < values.size(); ++i) {
        double x = vi.categorical ? values[i] - 1.0 : values[i];
        if (vi.categorical && (x < 0 || x >= own.n_categories || x != std::floor(x)))
          throw ConfigError("initial value '" + key + "' must hold category numbers 1.." +
                            std::to_string(own.n_categories));
        for (std::size_t r : affected_rows(v, missing_units_[v][i])) vals_[r * nv_ + v] = x;
      }
    }
  }

  // 2. designs and parameters
  ms_.assign(g_.models.size(), ModelState{});
  for (std::size_t m = 0; m < g_.models.size(); ++m) {
    const SubModel& sm = g_.models[m];
    ModelState& s = ms_[m];
    recompute_design(m);
    std::size_t p = sm.X.size(), sets = sm.n_coef_sets();
    s.beta.resize(p, sets);
    for (std::size_t k = 0; k < sets; ++k)
      for (std::size_t j = 0; j < p; ++j) s.beta(j, k) = rnorm(rng_, 0.0, 0.1);
    s.coef_steps.assign(p * sets, AdaptiveStep{});
    for (auto& st : s.coef_steps) st.log_step = std::log(0.1);
    s.ridge_precision = Eigen::VectorXd::Constant(p * sets, g_.hyper.regression(sm.type.family).tau_reg);
    if (sm.ridge) s.ridge_precision.setOnes();

    const Eigen::VectorXd& y = s.y;
    const double n = static_cast<double>(y.size());
    double ybar = y.mean();
    double yvar = n > 1 ? (y.array() - ybar).square().sum() / (n - 1) : 1.0;
    Family f = sm.type.family;
    if (sm.intercept && p > 0) {
      double start = 0.0;
      switch (f) {
        case Family::Gaussian:
          start = sm.type.link == Link::Identity ? ybar : apply_link(sm.type.link, ybar);
          break;
        case Family::Lognorm:
          start = y.array().log().mean();
          break;
        case Family::Binomial:
          start = apply_link(sm.type.link, std::clamp(ybar, 0.05, 0.95));
          break;
        case Family::Poisson:
          start = apply_link(sm.type.link, std::max(ybar, 0.1));
          break;
        case Family::Gamma:
        case Family::Beta:
          start = apply_link(sm.type.link, ybar);
          break;
        case Family::Weibull:
          start = std::log(ybar);
          break;
        case Family::Multinomial:
          break;
        case Family::Ordinal:
          break;
      }
      if (!std::isfinite(start)) start = 0.0;
      if (f == Family::Multinomial) {
        std::vector<double> cnt(sm.n_categories, 0.5);
        for (Eigen::Index u = 0; u < y.size(); ++u) cnt[static_cast<std::size_t>(y[u])] += 1.0;
        for (std::size_t k = 0; k < sets; ++k) s.beta(0, k) = std::log(cnt[k + 1] / cnt[0]) + rnorm(rng_, 0.0, 0.1);
      } else {
        s.beta(0, 0) = start + rnorm(rng_, 0.0, 0.1);
      }
    }
    s.tau = 1.0;
    if (f == Family::Gamma && yvar > 0) s.tau = 1.0 / yvar;
    if (f == Family::Beta && yvar > 0) s.tau = std::max(ybar * (1 - ybar) / yvar - 1.0, 1.0);
    s.tau_step.log_step = std::log(0.3);
    s.shape = 1.0;
    s.shape_step.log_step = std::log(0.3);
    if (f == Family::Ordinal) {
      std::size_t K = sm.n_categories;
      std::vector<double> cnt(K, 0.5);
      for (Eigen::Index u = 0; u < y.size(); ++u) cnt[static_cast<std::size_t>(y[u])] += 1.0;
      double total = std::accumulate(cnt.begin(), cnt.end(), 0.0);
      std::vector<double> cuts(K - 1);
      double acc = 0.0;
      for (std::size_t k = 0; k + 1 < K; ++k) {
        acc += cnt[k];
        double pk = acc / total;
        cuts[k] = std::log(pk / (1 - pk)) + rnorm(rng_, 0.0, 0.1);
      }
      std::sort(cuts.begin(), cuts.end());
      s.theta.resize(K - 1);
      for (std::size_t k = 0; k + 1 < K; ++k)
        s.theta[k] = k == 0 ? cuts[0] : std::log(std::max(cuts[k] - cuts[k - 1], 1e-3));
      refresh_cuts(s);
      s.theta_steps.assign(K - 1, AdaptiveStep{});
      for (auto& st : s.theta_steps) st.log_step = std::log(0.1);
    }
    if (sm.type.mixed) {
      std::size_t q = sm.Z.size(), ng = g_.n_groups();
      s.b.resize(ng, q);
      for (std::size_t gi = 0; gi < ng; ++gi)
        for (std::size_t k = 0; k < q; ++k) s.b(gi, k) = rnorm(rng_, 0.0, 0.1);
      s.D = Eigen::MatrixXd::Identity(q, q);
      s.invD = Eigen::MatrixXd::Identity(q, q);
      s.RinvD = Eigen::VectorXd::Ones(q);
      s.ranef_step.log_step = std::log(0.5);
    }
  }

  if (user) apply_user_inits(*user);

  for (std::size_t m = 0; m < g_.models.size(); ++m) {
    ModelState& s = ms_[m];
    s.eta = s.X * s.beta;
    if (g_.models[m].type.mixed) {
      s.zb.resize(s.y.size());
      const auto& rg = g_.grouping->row_group;
      for (Eigen::Index u = 0; u < s.zb.size(); ++u) s.zb[u] = s.Z.row(u).dot(s.b.row(rg[u]));
    }
  }
}

void Chain::apply_user_inits(const InitValues& user) {
  auto find_model = [&](const std::string& resp, Role role) -> int {
    for (std::size_t m = 0; m < g_.models.size(); ++m)
      if (g_.models[m].response == resp && g_.models[m].role == role) return static_cast<int>(m);
    return -1;
  };
  auto any_model = [&](const std::string& resp) -> int {
    for (std::size_t m = 0; m < g_.models.size(); ++m)
      if (g_.models[m].response == resp) return static_cast<int>(m);
    return -1;
  };
  auto need = [](const std::string& key, const std::vector<double>& v, std::size_t n) {
    if (v.size() != n)
      throw ConfigError("initial value '" + key + "' has length " + std::to_string(v.size()) + ", expected " +
                        std::to_string(n));
  };
  for (const auto& [key, values] : user) {
    if (key.rfind("imp_", 0) == 0) continue;
    int m = -1;
    std::string what;
    if (key == "beta") {
      m = g_.models.empty() ? -1 : 0;
      what = "coef";
    } else if (key.rfind("beta_", 0) == 0) {
      m = find_model(key.substr(5), Role::Analysis);
      what = "coef";
    } else if (key.rfind("alpha_", 0) == 0) {
      m = find_model(key.substr(6), Role::Covariate);
      what = "coef";
    } else if (key.rfind("tau_", 0) == 0) {
      m = any_model(key.substr(4));
      what = "tau";
    } else if (key.rfind("shape_", 0) == 0) {
      m = any_model(key.substr(6));
      what = "shape";
    } else if (key.rfind("gamma_", 0) == 0) {
      m = any_model(key.substr(6));
      what = "gamma";
    }
    if (m < 0) throw ConfigError("unknown initial value '" + key + "'");
    const SubModel& sm = g_.models[m];
    ModelState& s = ms_[m];
    if (what == "coef") {
      need(key, values, static_cast<std::size_t>(s.beta.size()));
      for (std::size_t i = 0; i < values.size(); ++i) s.beta(i % s.beta.rows(), i / s.beta.rows()) = values[i];
    } else if (what == "tau") {
      if (!sm.type.has_precision()) throw ConfigError("unknown initial value '" + key + "'");
      need(key, values, 1);
      if (!(values[0] > 0)) throw ConfigError("initial value '" + key + "' must be positive");
      s.tau = values[0];
    } else if (what == "shape") {
      if (sm.type.family != Family::Weibull) throw ConfigError("unknown initial value '" + key + "'");
      need(key, values, 1);
      if (!(values[0] > 0)) throw ConfigError("initial value '" + key + "' must be positive");
      s.shape = values[0];
    } else {
      if (sm.type.family != Family::Ordinal) throw ConfigError("unknown initial value '" + key + "'");
      need(key, values, static_cast<std::size_t>(s.theta.size()));
      for (std::size_t k = 1; k < values.size(); ++k)
        if (!(values[k] > values[k - 1]))
          throw ConfigError("initial value '" + key + "' must be strictly increasing");
      for (std::size_t k = 0; k < values.size(); ++k)
        s.theta[k] = k == 0 ? values[0] : std::log(values[k] - values[k - 1]);
      refresh_cuts(s);
    }
  }
}

// ---------------------------------------------------------------------------

void Chain::update_coefs(std::size_t m, bool adapting) {
  if (g_.models[m].conjugate())
    update_coefs_conjugate(m);
  else
    update_coefs_mh(m, adapting);
}

void Chain::update_coefs_conjugate(std::size_t m) {
  const SubModel& sm = g_.models[m];
  ModelState& s = ms_[m];
  const std::size_t p = sm.X.size();
  if (p == 0) return;
  RegressionPrior prior = g_.hyper.regression(sm.type.family);
  Eigen::VectorXd r = sm.type.family == Family::Lognorm ? Eigen::VectorXd(s.y.array().log()) : s.y;
  if (s.zb.size()) r -= s.zb;
  Eigen::MatrixXd P = s.tau * (s.X.transpose() * s.X);
  Eigen::VectorXd h = s.tau * (s.X.transpose() * r);
  for (std::size_t j = 0; j < p; ++j) {
    P(j, j) += s.ridge_precision[j];
    h[j] += s.ridge_precision[j] * prior.mu_reg;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(P);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P, Eigen::EigenvaluesOnly);
    double cond = es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();
    throw SamplerError("posterior precision of the coefficients of '" + sm.response +
                       "' is singular (condition number " + num(cond) + ")");
  }
  s.beta.col(0) = rmvnorm_canonical(rng_, P, h);
  s.eta = s.X * s.beta;
}

void Chain::update_coefs_mh(std::size_t m, bool adapting) {
  const SubModel& sm = g_.models[m];
  ModelState& s = ms_[m];
  const std::size_t p = sm.X.size(), sets = sm.n_coef_sets();
  RegressionPrior prior = g_.hyper.regression(sm.type.family);
  std::vector<Eigen::Index> units;
  units.reserve(s.y.size());
  for (std::size_t k = 0; k < sets; ++k) {
    for (std::size_t j = 0; j < p; ++j) {
      units.clear();
      for (Eigen::Index u = 0; u < s.X.rows(); ++u)
        if (s.X(u, j) != 0.0) units.push_back(u);
      const double prec = s.ridge_precision[j + p * k];
      auto apply = [&](double v) {
        double d = v - s.beta(j, k);
        if (d != 0.0)
          for (Eigen::Index u : units) s.eta(u, k) += d * s.X(u, j);
        s.beta(j, k) = v;
      };
      auto target = [&](double v) {
        apply(v);
        double lp = -0.5 * prec * (v - prior.mu_reg) * (v - prior.mu_reg);
        for (Eigen::Index u : units) {
          lp += unit_logdens(m, u);
          if (lp == -kInf) break;
        }
        return lp;
      };
      double cur = s.beta(j, k);
      double lp0 = target(cur);
      double chosen = mh_scalar(rng_, cur, lp0, target, s.coef_steps[j + p * k], adapting, coef_name(g_, m, j, k));
      apply(chosen);
    }
  }
  s.eta = s.X * s.beta;
}

void Chain::update_ridge(std::size_t m) {
  const SubModel& sm = g_.models[m];
  ModelState& s = ms_[m];
  RegressionPrior prior = g_.hyper.regression(sm.type.family);
  const std::size_t p = sm.X.size();
  for (std::size_t k = 0; k < sm.n_coef_sets(); ++k)
    for (std::size_t j = 0; j < p; ++j) {
      if (sm.intercept && j == 0) continue;
      double d = s.beta(j, k) - prior.mu_reg;
      s.ridge_precision[j + p * k] =
          rgamma(rng_, g_.hyper.shape_ridge + 0.5, g_.hyper.rate_ridge + 0.5 * d * d);
    }
}

void Chain::update_precision(std::size_t m, bool adapting) {
  const SubModel& sm = g_.models[m];
  ModelState& s = ms_[m];
  PrecisionPrior prior = g_.hyper.precision(sm.type.family);
  Family f = sm.type.family;
  if ((f == Family::Gaussian || f == Family::Lognorm) && !sm.trunc) {
    double ssr = 0.0;
    for (Eigen::Index u = 0; u < s.y.size(); ++u) {
      double mu = f == Family::Lognorm ? full_eta(s, u) : inverse_link(sm.type.link, full_eta(s, u));
      double y = f == Family::Lognorm ? std::log(s.y[u]) : s.y[u];
      ssr += (y - mu) * (y - mu);
    }
    s.tau = rgamma(rng_, prior.shape_tau + 0.5 * s.y.size(), prior.rate_tau + 0.5 * ssr);
    return;
  }
  auto target = [&](double lt) {
    s.tau = std::exp(lt);
    return model_loglik(m) + prior.shape_tau * lt - prior.rate_tau * s.tau;
  };
  double cur = std::log(s.tau);
  double lp0 = target(cur);
  double chosen = mh_scalar(rng_, cur, lp0, target, s.tau_step, adapting, "tau_" + sm.response);
  s.tau = std::exp(chosen);
}

void Chain::update_shape(std::size_t m, bool adapting) {
  const SubModel& sm = g_.models[m];
  ModelState& s = ms_[m];
  const double rate = g_.hyper.rate_shape_surv;
  auto target = [&](double ls) {
    s.shape = std::exp(ls);
    return model_loglik(m) - rate * s.shape + ls;
  };
  double cur = std::log(s.shape);
  double lp0 = target(cur);
  double chosen = mh_scalar(rng_, cur, lp0, target, s.shape_step, adapting, "shape_" + sm.response);
  s.shape = std::exp(chosen);
}

void Chain::update_theta(std::size_t m, bool adapting) {
  const SubModel& sm = g_.models[m];
  ModelState& s = ms_[m];
  const double mu = g_.hyper.mu_delta_ordinal, prec = g_.hyper.tau_delta_ordinal;
  for (Eigen::Index k = 0; k < s.theta.size(); ++k) {
    auto target = [&](double v) {
      s.theta[k] = v;
      refresh_cuts(s);
      return model_loglik(m) - 0.5 * prec * (v - mu) * (v - mu);
    };
    double cur = s.theta[k];
    double lp0 = target(cur);
    std::string node = (k == 0 ? "gamma_" : "delta_") + sm.response + "[" + std::to_string(k == 0 ? 1 : k) + "]";
    s.theta[k] = mh_scalar(rng_, cur, lp0, target, s.theta_steps[k], adapting, node);
    refresh_cuts(s);
  }
}

// ---------------------------------------------------------------------------

void Chain::set_value(int var, std::size_t unit, double x) {
  const VarInfo& vi = g_.vars[var];
  std::vector<std::size_t> rows = affected_rows(var, unit);
  for (std::size_t r : rows) vals_[r * nv_ + var] = x;
  ms_[vi.model].y[unit] = x;
  for (const Dependent& d : dependents_[var]) {
    const SubModel& sm = g_.models[d.model];
    ModelState& s = ms_[d.model];
    auto update_unit = [&](std::size_t u) {
      std::size_t r = g_.unit_row(sm, u);
      std::span<const double> row(&vals_[r * nv_], nv_);
      if (d.random) {
        s.Z(u, d.col) = sm.Z[d.col].value(row);
        s.zb[u] = s.Z.row(u).dot(s.b.row(g_.grouping->row_group[u]));
      } else {
        double nv = sm.X[d.col].value(row);
        double delta = nv - s.X(u, d.col);
        if (delta != 0.0) {
          s.X(u, d.col) = nv;
          s.eta.row(u) += delta * s.beta.row(d.col);
        }
      }
    };
    if (sm.level2)
      update_unit(vi.level2 ? unit : g_.grouping->row_group[unit]);
    else
      for (std::size_t r : rows) update_unit(r);
  }
}

double Chain::missing_target(int var, std::size_t unit) const {
  const VarInfo& vi = g_.vars[var];
  double lp = unit_logdens(vi.model, unit);
  if (lp == -kInf) return lp;
  std::vector<int> models;
  for (const Dependent& d : dependents_[var])
    if (std::find(models.begin(), models.end(), d.model) == models.end()) models.push_back(d.model);
  std::vector<std::size_t> rows;
  for (int m : models) {
    const SubModel& sm = g_.models[m];
    if (sm.level2) {
      lp += unit_logdens(m, vi.level2 ? unit : g_.grouping->row_group[unit]);
    } else {
      if (rows.empty()) rows = affected_rows(var, unit);
      for (std::size_t r : rows) lp += unit_logdens(m, r);
    }
    if (lp == -kInf) return lp;
  }
  return lp;
}

void Chain::update_missing(int var, bool adapting) {
  const VarInfo& vi = g_.vars[var];
  const SubModel& own = g_.models[vi.model];
  const ModelState& os = ms_[vi.model];
  const bool direct = dependents_[var].empty() && own.conjugate();
  const Transform t = imputation_transform(own);
  AdaptiveStep& step = imp_steps_[var];
  for (std::size_t u : missing_units_[var]) {
    if (vi.categorical) {
      std::size_t K = own.n_categories;
      std::vector<double> lw(K);
      for (std::size_t k = 0; k < K; ++k) {
        set_value(var, u, static_cast<double>(k));
        lw[k] = missing_target(var, u);
        if (std::isnan(lw[k])) throw SamplerError("log-density is NaN for node 'imp_" + vi.name + "'");
      }
      if (std::all_of(lw.begin(), lw.end(), [](double w) { return w == -kInf; }))
        throw SamplerError("all categories of '" + vi.name + "' have zero probability in row " +
                           std::to_string(affected_rows(var, u).front() + 1));
      set_value(var, u, static_cast<double>(rcategorical_log(rng_, lw)));
      continue;
    }
    if (direct) {
      double z = full_eta(os, u) + rnorm(rng_) / std::sqrt(os.tau);
      set_value(var, u, own.type.family == Family::Lognorm ? std::exp(z) : z);
      continue;
    }
    const double cur = os.y[u];
    const std::string node = "imp_" + vi.name;
    if (t == Transform::Integer) {
      double lp0 = missing_target(var, u);
      double jump = 1.0 + std::floor(std::abs(step.step() * rnorm(rng_)));
      double prop = cur + (runif(rng_) < 0.5 ? -jump : jump);
      double lp = -kInf;
      if (prop >= 0) {
        set_value(var, u, prop);
        lp = missing_target(var, u);
        if (std::isnan(lp)) throw SamplerError("log-density is NaN for node '" + node + "'");
      }
      bool accept = lp - lp0 > std::log(runif(rng_));
      step.record(accept, adapting);
      set_value(var, u, accept ? prop : cur);
      continue;
    }
    auto target = [&](double z) {
      double x = from_scale(t, z);
      if ((t == Transform::Log && !(x > 0)) || (t == Transform::Logit && !(x > 0 && x < 1))) return -kInf;
      set_value(var, u, x);
      return missing_target(var, u) + log_jacobian(t, z);
    };
    double z0 = to_scale(t, cur);
    double lp0 = target(z0);
    double chosen = mh_scalar(rng_, z0, lp0, target, step, adapting, node);
    set_value(var, u, chosen == z0 ? cur : from_scale(t, chosen));
  }
}

void Chain::update_ranef(std::size_t m, bool adapting) {
  const SubModel& sm = g_.models[m];
  ModelState& s = ms_[m];
  const std::size_t q = sm.Z.size();
  const auto& groups = g_.grouping->rows;
  const bool exact = sm.type.family == Family::Gaussian && sm.type.link == Link::Identity && !sm.trunc;
  Eigen::LLT<Eigen::MatrixXd> dchol(s.D);
  Eigen::MatrixXd L = dchol.matrixL();
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& rows = groups[gi];
    if (exact) {
      Eigen::MatrixXd P = s.invD;
      Eigen::VectorXd h = Eigen::VectorXd::Zero(q);
      for (std::size_t r : rows) {
        P.noalias() += s.tau * s.Z.row(r).transpose() * s.Z.row(r);
        h.noalias() += s.tau * (s.y[r] - s.eta(r, 0)) * s.Z.row(r).transpose();
      }
      s.b.row(gi) = rmvnorm_canonical(rng_, P, h).transpose();
      for (std::size_t r : rows) s.zb[r] = s.Z.row(r).dot(s.b.row(gi));
      continue;
    }
    auto logp = [&]() {
      Eigen::VectorXd bg = s.b.row(gi).transpose();
      double lp = -0.5 * bg.dot(s.invD * bg);
      for (std::size_t r : rows) lp += unit_logdens(m, r);
      return lp;
    };
    Eigen::RowVectorXd old = s.b.row(gi);
    double lp0 = logp();
    Eigen::VectorXd z(q);
    for (std::size_t k = 0; k < q; ++k) z[k] = rnorm(rng_);
    s.b.row(gi) = old + s.ranef_step.step() * (L * z).transpose();
    for (std::size_t r : rows) s.zb[r] = s.Z.row(r).dot(s.b.row(gi));
    double lp = logp();
    if (std::isnan(lp)) throw SamplerError("log-density is NaN for node 'b_" + sm.response + "'");
    bool accept = lp - lp0 > std::log(runif(rng_));
    s.ranef_step.record(accept, adapting);
    if (!accept) {
      s.b.row(gi) = old;
      for (std::size_t r : rows) s.zb[r] = s.Z.row(r).dot(old);
    }
  }
}

void Chain::update_covariance(std::size_t m) {
  const SubModel& sm = g_.models[m];
  ModelState& s = ms_[m];
  const std::size_t q = sm.Z.size();
  const double N = static_cast<double>(g_.n_groups());
  const HyperParameters& h = g_.hyper;
  Eigen::MatrixXd S = s.b.transpose() * s.b;
  const std::string where = "covariance of the random effects in '" + sm.response + "' at iteration " +
                            std::to_string(iteration_);
  if (q == 1) {
    double prec = rgamma(rng_, h.shape_diag_RinvD + 0.5 * N, h.rate_diag_RinvD + 0.5 * S(0, 0));
    if (!(prec > 0) || !std::isfinite(prec)) throw SamplerError("non-positive precision: " + where);
    s.invD(0, 0) = prec;
    s.D(0, 0) = 1.0 / prec;
    return;
  }
  const double K = h.KinvD(q);
  Eigen::MatrixXd scale = Eigen::MatrixXd(s.RinvD.asDiagonal()) + S;
  Eigen::LLT<Eigen::MatrixXd> sc(scale);
  if (sc.info() != Eigen::Success) throw SamplerError("matrix is not positive definite: " + where);
  Eigen::MatrixXd inv_scale = sc.solve(Eigen::MatrixXd::Identity(q, q));
  inv_scale = 0.5 * (inv_scale + inv_scale.transpose());
  Eigen::MatrixXd W = rwishart(rng_, K + N, inv_scale);
  W = 0.5 * (W + W.transpose());
  Eigen::LLT<Eigen::MatrixXd> wc(W);
  if (wc.info() != Eigen::Success) throw SamplerError("matrix is not positive definite: " + where);
  s.invD = W;
  s.D = wc.solve(Eigen::MatrixXd::Identity(q, q));
  s.D = 0.5 * (s.D + s.D.transpose());
  for (std::size_t j = 0; j < q; ++j)
    s.RinvD[j] = rgamma(rng_, h.shape_diag_RinvD + 0.5 * K, h.rate_diag_RinvD + 0.5 * s.invD(j, j));
}

void Chain::sweep(bool adapting) {
  ++iteration_;
  try {
    for (std::size_t m = 0; m < g_.models.size(); ++m) {
      const SubModel& sm = g_.models[m];
      ModelState& s = ms_[m];
      s.eta = s.X * s.beta;
      if (sm.ridge) update_ridge(m);
      update_coefs(m, adapting);
      if (sm.type.has_precision()) update_precision(m, adapting);
      if (sm.type.family == Family::Weibull) update_shape(m, adapting);
      if (sm.type.family == Family::Ordinal) update_theta(m, adapting);
    }
    for (const SubModel& sm : g_.models)
      if (!missing_units_[sm.response_var].empty()) update_missing(sm.response_var, adapting);
    for (std::size_t m = 0; m < g_.models.size(); ++m)
      if (g_.models[m].type.mixed) update_ranef(m, adapting);
    for (std::size_t m = 0; m < g_.models.size(); ++m)
      if (g_.models[m].type.mixed) update_covariance(m);
  } catch (const SamplerError& e) {
    throw SamplerError("chain " + std::to_string(id_ + 1) + ", iteration " + std::to_string(iteration_) + ": " +
                       e.what());
  }
}

Eigen::MatrixXd Chain::data_scale_coefs(std::size_t m) const {
  const SubModel& sm = g_.models[m];
  Eigen::MatrixXd beta = ms_[m].beta;
  for (std::size_t c = 0; c < sm.X.size(); ++c) {
    const ColumnRecipe& col = sm.X[c];
    if (!col.scaled) continue;
    for (Eigen::Index k = 0; k < beta.cols(); ++k) {
      double scaled = ms_[m].beta(c, k);
      beta(c, k) = scaled / col.scale;
      if (sm.intercept) beta(0, k) -= scaled * col.center / col.scale;
    }
  }
  return beta;
}

std::vector<double> Chain::data_scale_cuts(std::size_t m) const {
  const SubModel& sm = g_.models[m];
  std::vector<double> cuts = ms_[m].cuts;
  double shift = 0.0;
  for (std::size_t c = 0; c < sm.X.size(); ++c)
    if (sm.X[c].scaled) shift += ms_[m].beta(c, 0) * sm.X[c].center / sm.X[c].scale;
  for (double& x : cuts) x += shift;
  return cuts;
}

double Chain::node_value(const NodeDesc& n) const {
  const ModelState& s = ms_[n.model];
  switch (n.kind) {
    case NodeKind::Coef: {
      const SubModel& sm = g_.models[n.model];
      double v = s.beta(n.i, n.j);
      if (sm.X[n.i].scaled) return v / sm.X[n.i].scale;
      if (sm.intercept && n.i == 0) {
        for (std::size_t c = 0; c < sm.X.size(); ++c)
          if (sm.X[c].scaled) v -= s.beta(c, n.j) * sm.X[c].center / sm.X[c].scale;
      }
      return v;
    }
    case NodeKind::Sigma:
      return 1.0 / std::sqrt(s.tau);
    case NodeKind::Tau:
      return s.tau;
    case NodeKind::Shape:
      return s.shape;
    case NodeKind::Gamma:
      return data_scale_cuts(n.model)[n.i];
    case NodeKind::Delta:
      return s.theta[n.i];
    case NodeKind::D:
      return s.D(n.i, n.j);
    case NodeKind::InvD:
      return s.invD(n.i, n.j);
    case NodeKind::RinvD:
      return s.RinvD[n.i];
    case NodeKind::Ranef:
      return s.b(n.i, n.j);
    case NodeKind::Imp: {
      int v = g_.models[n.model].response_var;
      double x = vals_[n.rows.front() * nv_ + v];
      return g_.vars[v].categorical ? x + 1.0 : x;
    }
  }
  return std::nan("");
}

std::vector<std::string> Chain::poorly_adapted() const {
  std::vector<std::string> out;
  auto check = [&](const AdaptiveStep& st, const std::string& what) {
    if (st.window_tried < 20) return;
    double r = st.window_rate();
    if (r < 0.1 || r > 0.7) out.push_back(what + " (acceptance " + num(r) + ")");
  };
  for (std::size_t m = 0; m < g_.models.size(); ++m) {
    const SubModel& sm = g_.models[m];
    const ModelState& s = ms_[m];
    for (std::size_t i = 0; i < s.coef_steps.size(); ++i)
      check(s.coef_steps[i], coef_name(g_, m, i % sm.X.size(), i / sm.X.size()));
    check(s.tau_step, "tau_" + sm.response);
    check(s.shape_step, "shape_" + sm.response);
    for (std::size_t k = 0; k < s.theta_steps.size(); ++k) check(s.theta_steps[k], "cut points of " + sm.response);
    check(s.ranef_step, "random effects of " + sm.response);
  }
  for (std::size_t v = 0; v < nv_; ++v) check(imp_steps_[v], "imputation of " + g_.vars[v].name);
  return out;
}

void Chain::reset_windows() {
  for (auto& s : ms_) {
    for (auto& st : s.coef_steps) st.reset_window();
    for (auto& st : s.theta_steps) st.reset_window();
    s.tau_step.reset_window();
    s.shape_step.reset_window();
    s.ranef_step.reset_window();
  }
  for (auto& st : imp_steps_) st.reset_window();
}

// ---------------------------------------------------------------------------

McmcSamples run_mcmc(const ModelGraph& graph, const McmcSettings& settings) {
  settings.validate();
  McmcSamples out;
  out.nodes = monitored_nodes(graph);
  out.iterations = iteration_labels(settings.n_adapt, settings.n_iter, settings.thin);
  out.n_adapt = settings.n_adapt;
  out.n_iter = settings.n_iter;
  out.thin = settings.thin;
  out.seed = settings.seed;
  out.warnings = graph.warnings;

  const std::size_t nc = settings.n_chains;
  out.chains.assign(nc, Eigen::MatrixXd(out.iterations.size(), out.nodes.size()));
  std::vector<std::vector<std::string>> chain_warnings(nc);
  std::vector<std::exception_ptr> errors(nc);

  auto run_chain = [&](std::size_t c) {
    try {
      Chain ch(graph, settings, c);
      const long half = settings.n_adapt / 2;
      for (long t = 1; t <= settings.n_adapt; ++t) {
        if (t == half + 1) ch.reset_windows();
        ch.sweep(true);
      }
      if (settings.n_adapt > 0)
        for (const auto& w : ch.poorly_adapted())
          chain_warnings[c].push_back("chain " + std::to_string(c + 1) + ": adaptation incomplete for " + w);
      Eigen::MatrixXd& store = out.chains[c];
      Eigen::Index row = 0;
      for (long t = 1; t <= settings.n_iter; ++t) {
        ch.sweep(false);
        if (t % settings.thin != 0) continue;
        for (std::size_t j = 0; j < out.nodes.size(); ++j) store(row, j) = ch.node_value(out.nodes[j]);
        ++row;
      }
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };

  std::size_t n_threads = std::clamp<std::size_t>(settings.threads, 1, nc);
  if (n_threads == 1) {
    for (std::size_t c = 0; c < nc; ++c) run_chain(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t c; (c = next.fetch_add(1)) < nc;) run_chain(c);
      });
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (auto& w : chain_warnings) out.warnings.insert(out.warnings.end(), w.begin(), w.end());
  return out;
}

}  // namespace jointgibbs
