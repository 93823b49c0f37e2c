#include "jointgibbs/model_graph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace jointgibbs {

namespace fm = formula;

double ColumnRecipe::raw(std::span<const double> row) const {
  double v = 1.0;
  for (const auto& f : factors) {
    if (f.kind == FactorRecipe::Kind::Numeric) {
      v *= f.expr.eval(row);
    } else {
      double code = row[f.var];
      if (std::isnan(code)) return std::nan("");
      v *= contrast_value(static_cast<int>(code), f.category, f.ref, f.coding);
    }
  }
  return v;
}

int ModelGraph::var_index(const std::string& name) const {
  for (std::size_t i = 0; i < vars.size(); ++i)
    if (vars[i].name == name) return static_cast<int>(i);
  return -1;
}

std::vector<std::string> ModelGraph::covariate_order() const {
  std::vector<std::string> out;
  for (std::size_t i = n_analysis; i < models.size(); ++i) out.push_back(models[i].response);
  return out;
}

std::vector<std::pair<std::string, std::string>> ModelGraph::model_labels() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& m : models) out.emplace_back(m.response, m.label);
  return out;
}

std::vector<std::string> order_submodels(std::vector<CovariateCandidate> c) {
  std::stable_sort(c.begin(), c.end(), [](const CovariateCandidate& a, const CovariateCandidate& b) {
    if (a.level2 != b.level2) return !a.level2;
    if (a.n_missing != b.n_missing) return a.n_missing > b.n_missing;
    return a.appearance < b.appearance;
  });
  std::vector<std::string> out;
  for (const auto& x : c) out.push_back(x.name);
  return out;
}

namespace {

void walk_expr(const fm::ArithExpr& e, std::vector<std::string>& out) {
  if (e.kind == fm::ArithExpr::Kind::Variable &&
      std::find(out.begin(), out.end(), e.text) == out.end())
    out.push_back(e.text);
  for (const auto& a : e.args) walk_expr(a, out);
}

void walk_terms(const fm::TermNode& n, std::vector<std::string>& out) {
  if (n.kind == fm::TermNode::Kind::Variable) {
    if (std::find(out.begin(), out.end(), n.name) == out.end()) out.push_back(n.name);
    return;
  }
  for (const auto& a : n.args) walk_expr(a, out);
  for (const auto& c : n.children) walk_terms(c, out);
}

struct Entry {
  fm::Term term;
  std::string label;
  std::set<std::string> deps;
};

struct Parsed {
  fm::FormulaAst ast;
  std::vector<fm::RandomPart> random;
  AnalysisSpec spec;
};

class Builder {
 public:
  Builder(const std::vector<AnalysisSpec>& analyses, const Dataset& raw, const GraphOptions& opt)
      : analyses_(analyses), raw_(raw), opt_(opt) {}

  ModelGraph build() {
    if (analyses_.empty()) throw ConfigError("no analysis model given");
    parse();
    check_variables();
    g_.data = apply_types(raw_, opt_.types);
    if (!group_var_.empty()) g_.grouping = make_grouping(g_.data, group_var_);
    auto metas = infer_variable_meta(g_.data, g_.grouping ? &*g_.grouping : nullptr, opt_.types);
    for (auto& m : metas) metas_[m.name] = m;
    g_.hyper = opt_.hyper;
    g_.monitor = opt_.monitor;
    validate(g_.monitor);
    collect_variables();
    resolve_refcats();
    build_analysis_models();
    build_covariate_models();
    finalize();
    return std::move(g_);
  }

 private:
  void parse() {
    fm::ParseOptions po;
    for (const auto& a : analyses_) {
      Parsed p;
      p.spec = a;
      p.ast = fm::parse_formula(a.formula, po);
      p.random = p.ast.random_parts;
      if (a.random) p.random.push_back(fm::parse_random(*a.random, po));
      for (const auto& r : p.random) {
        if (!group_var_.empty() && group_var_ != r.group)
          throw ConfigError("only one grouping variable is supported (found '" + group_var_ + "' and '" + r.group +
                            "')");
        group_var_ = r.group;
      }
      if (p.random.size() > 1) throw ConfigError("only one random-effects part per model is supported");
      parsed_.push_back(std::move(p));
    }
    if (opt_.auxvars) {
      fm::ParseOptions aux = po;
      aux.allow_one_sided = true;
      aux_ast_ = fm::parse_formula(*opt_.auxvars, aux);
      if (aux_ast_->response.kind != fm::ResponseSpec::Kind::None)
        throw ConfigError("auxvars must be a one-sided formula");
      if (!aux_ast_->random_parts.empty()) throw ConfigError("auxvars cannot contain random effects");
    }
  }

  void check_variables() {
    std::vector<std::string> names;
    for (const auto& p : parsed_) {
      if (p.ast.response.kind != fm::ResponseSpec::Kind::None) names.push_back(p.ast.response.variable);
      if (p.ast.response.kind == fm::ResponseSpec::Kind::Survival) walk_expr(p.ast.response.event, names);
      walk_terms(p.ast.fixed, names);
      for (const auto& r : p.random) {
        walk_terms(r.terms, names);
        names.push_back(r.group);
      }
    }
    if (aux_ast_) walk_terms(aux_ast_->fixed, names);
    for (const auto& n : names)
      if (!raw_.has(n)) throw ConfigError("unknown variable '" + n + "' in model formula");
    for (const auto& [n, _] : opt_.models)
      if (!raw_.has(n)) throw ConfigError("model type given for unknown variable '" + n + "'");
    for (const auto& n : opt_.no_model)
      if (!raw_.has(n)) throw ConfigError("no_model names unknown variable '" + n + "'");
    for (const auto& [n, _] : opt_.trunc)
      if (!raw_.has(n)) throw ConfigError("trunc given for unknown variable '" + n + "'");
    for (const auto& [n, _] : opt_.refcats)
      if (!raw_.has(n)) throw ConfigError("reference category given for unknown variable '" + n + "'");
  }

  int add_var(const std::string& name) {
    int idx = g_.var_index(name);
    if (idx >= 0) return idx;
    VarInfo v;
    v.name = name;
    v.meta = metas_.at(name);
    v.level2 = g_.grouping && v.meta.level == g_.grouping->variable;
    v.incomplete = v.meta.n_missing > 0;
    v.categorical = g_.data.column(name).categorical;
    g_.vars.push_back(std::move(v));
    return static_cast<int>(g_.vars.size()) - 1;
  }

  void collect_variables() {
    for (const auto& p : parsed_) {
      const auto& r = p.ast.response;
      if (r.kind == fm::ResponseSpec::Kind::None) throw ConfigError("analysis formula needs a response");
      if (r.variable == group_var_) throw ConfigError("the grouping variable cannot be a response");
      add_var(r.variable);
      responses_.insert(r.variable);
    }
    std::vector<std::string> order;
    for (const auto& p : parsed_) {
      walk_terms(p.ast.fixed, order);
      for (const auto& r : p.random) walk_terms(r.terms, order);
    }
    std::vector<std::string> analysis_vars;
    for (const auto& n : order)
      if (n != group_var_ && !responses_.count(n)) analysis_vars.push_back(n);
    for (const auto& n : analysis_vars) {
      if (std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.label == n; }) !=
          entries_.end())
        continue;
      fm::TermNode leaf;
      leaf.kind = fm::TermNode::Kind::Variable;
      leaf.name = n;
      entries_.push_back(Entry{fm::Term{{fm::Factor{leaf, n}}}, n, {n}});
    }
    if (aux_ast_) {
      auto terms = fm::expand_terms(aux_ast_->fixed);
      for (const auto& t : terms.terms) {
        std::string label = t.name();
        auto deps = fm::term_dependencies(t);
        for (const auto& d : deps)
          if (responses_.count(d) || d == group_var_)
            throw ConfigError("auxiliary term '" + label + "' uses the response or grouping variable");
        if (std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.label == label; }) ==
            entries_.end())
          entries_.push_back(Entry{t, label, deps});
      }
    }
    covariates_ = analysis_vars;
    if (aux_ast_) {
      std::vector<std::string> aux_walk;
      walk_terms(aux_ast_->fixed, aux_walk);
      for (const auto& n : aux_walk)
        if (std::find(covariates_.begin(), covariates_.end(), n) == covariates_.end()) covariates_.push_back(n);
    }
    for (const auto& n : covariates_) add_var(n);
  }

  void resolve_refcats() {
    for (auto& v : g_.vars) {
      if (!v.categorical) continue;
      auto it = opt_.refcats.find(v.name);
      v.meta.ref_cat = resolve_refcat(it == opt_.refcats.end() ? "first" : it->second, g_.data.column(v.name));
    }
    for (const auto& [n, spec] : opt_.refcats)
      if (g_.var_index(n) < 0) resolve_refcat(spec, g_.data.column(n));
  }

  Coding coding_of(const std::string& var) const {
    auto it = opt_.coding.find(var);
    return it == opt_.coding.end() ? Coding::Dummy : it->second;
  }

  std::vector<ColumnRecipe> term_columns(const fm::Term& t) {
    struct Piece {
      std::string name;
      FactorRecipe f;
    };
    std::vector<std::vector<Piece>> options;
    std::set<int> deps;
    for (const auto& factor : t.factors) {
      std::vector<Piece> opts;
      if (fm::is_plain_variable(factor) && g_.data.column(factor.leaf.name).categorical) {
        int vi = add_var(factor.leaf.name);
        const VarInfo& v = g_.vars[vi];
        const auto& cats = v.meta.categories;
        int ref = static_cast<int>(std::find(cats.begin(), cats.end(), v.meta.ref_cat) - cats.begin());
        for (int k = 0; k < static_cast<int>(cats.size()); ++k) {
          if (k == ref) continue;
          FactorRecipe f;
          f.kind = FactorRecipe::Kind::Category;
          f.var = vi;
          f.category = k;
          f.ref = ref;
          f.coding = coding_of(v.name);
          opts.push_back(Piece{v.name + cats[k], f});
        }
        deps.insert(vi);
      } else {
        auto fdeps = fm::factor_dependencies(factor);
        for (const auto& d : fdeps) {
          if (g_.data.column(d).categorical)
            throw ConfigError("categorical variable '" + d + "' cannot be used inside '" + factor.label + "'");
          deps.insert(add_var(d));
        }
        FactorRecipe f;
        f.kind = FactorRecipe::Kind::Numeric;
        f.expr = fm::CompiledExpr::compile(fm::leaf_to_expr(factor.leaf), [&](const std::string& name) {
          int i = g_.var_index(name);
          if (i < 0) throw ConfigError("unknown variable '" + name + "'");
          return static_cast<std::size_t>(i);
        });
        opts.push_back(Piece{factor.label, f});
      }
      options.push_back(std::move(opts));
    }
    std::vector<ColumnRecipe> cols(1);
    cols[0].term = t.name();
    for (const auto& opts : options) {
      std::vector<ColumnRecipe> next;
      for (const auto& c : cols) {
        for (const auto& p : opts) {
          ColumnRecipe n = c;
          n.name += (n.name.empty() ? "" : ":") + p.name;
          n.factors.push_back(p.f);
          next.push_back(std::move(n));
        }
      }
      cols = std::move(next);
    }
    for (auto& c : cols) c.deps.assign(deps.begin(), deps.end());
    return cols;
  }

  static ColumnRecipe intercept_column() {
    ColumnRecipe c;
    c.name = "(Intercept)";
    c.term = "(Intercept)";
    return c;
  }

  void check_support(SubModel& m) {
    const Column& col = g_.data.column(m.response);
    const VarInfo& v = g_.vars[m.response_var];
    const std::string& n = m.response;
    auto each_observed = [&](auto pred, const char* what) {
      for (std::size_t r = 0; r < col.size(); ++r)
        if (!col.missing[r] && !pred(col.numbers[r]))
          throw DataError("model '" + m.label + "' for '" + n + "' requires " + what + " values");
    };
    switch (m.type.family) {
      case Family::Gaussian:
      case Family::Weibull:
        if (v.categorical) throw ConfigError("'" + n + "' is categorical; model '" + m.label + "' needs a number");
        if (m.type.family == Family::Weibull) each_observed([](double x) { return x > 0; }, "positive");
        break;
      case Family::Lognorm:
      case Family::Gamma:
        if (v.categorical) throw ConfigError("'" + n + "' is categorical; model '" + m.label + "' needs a number");
        each_observed([](double x) { return x > 0; }, "strictly positive");
        break;
      case Family::Beta:
        if (v.categorical) throw ConfigError("'" + n + "' is categorical; model '" + m.label + "' needs a number");
        each_observed([](double x) { return x > 0 && x < 1; }, "(0, 1)");
        break;
      case Family::Poisson:
        if (v.categorical) throw ConfigError("'" + n + "' is categorical; model '" + m.label + "' needs a number");
        each_observed([](double x) { return x >= 0 && std::floor(x) == x; }, "non-negative integer");
        break;
      case Family::Binomial:
      case Family::Ordinal:
      case Family::Multinomial:
        if (!v.categorical) throw ConfigError("'" + n + "' is numeric; model '" + m.label + "' needs a factor");
        m.categories = v.meta.categories;
        m.n_categories = m.categories.size();
        if (m.type.family == Family::Binomial && m.n_categories != 2)
          throw ConfigError("binomial model for '" + n + "' needs exactly two categories");
        if (m.type.family != Family::Binomial && m.n_categories < 3)
          throw ConfigError("model '" + m.label + "' for '" + n + "' needs more than two categories");
        break;
    }
  }

  void build_analysis_models() {
    for (const auto& p : parsed_) {
      SubModel m;
      m.role = Role::Analysis;
      m.response = p.ast.response.variable;
      m.response_var = g_.var_index(m.response);
      const bool mixed = !p.random.empty();
      if (p.spec.model) {
        m.type = parse_model_type(*p.spec.model);
        if (mixed && !m.type.mixed) {
          if (m.type.family == Family::Gaussian || (m.type.family == Family::Binomial && m.type.link == Link::Logit))
            m.type.mixed = true;
          else
            throw ConfigError("model type '" + *p.spec.model + "' cannot have random effects");
        }
        if (!mixed && m.type.mixed) throw ConfigError("mixed model '" + *p.spec.model + "' needs a random part");
      } else if (p.ast.response.kind == fm::ResponseSpec::Kind::Survival) {
        m.type = parse_model_type("survreg");
      } else {
        m.type = default_analysis_type(g_.vars[m.response_var].meta, mixed);
      }
      if ((p.ast.response.kind == fm::ResponseSpec::Kind::Survival) != (m.type.family == Family::Weibull))
        throw ConfigError("survival models need a Surv(time, event) response and vice versa");
      if (m.type.family == Family::Weibull && mixed) throw ConfigError("survival models with random effects are not supported");
      m.label = model_type_label(m.type, true);
      check_support(m);
      auto terms = fm::expand_terms(p.ast);
      m.intercept = terms.intercept && m.type.has_intercept();
      if (m.intercept) m.X.push_back(intercept_column());
      for (const auto& t : terms.terms) {
        if (fm::term_dependencies(t).count(m.response))
          throw ConfigError("response '" + m.response + "' also appears as a predictor");
        for (auto& c : term_columns(t)) m.X.push_back(std::move(c));
        m.predictor_terms.push_back(t.name());
      }
      if (mixed) {
        auto rterms = fm::expand_random_terms(p.random.front());
        if (rterms.intercept) m.Z.push_back(intercept_column());
        for (const auto& t : rterms.terms) {
          for (auto& c : term_columns(t)) m.Z.push_back(std::move(c));
          m.random_terms.push_back(t.name());
        }
        if (m.Z.empty()) throw ConfigError("random-effects part has no terms");
      }
      if (m.type.family == Family::Weibull) {
        const auto& ev = p.ast.response.event;
        m.event_text = fm::render(ev);
        for (const auto& d : fm::expr_dependencies(ev))
          if (g_.data.column(d).n_missing() > 0) throw DataError("event variable '" + d + "' has missing values");
        if (g_.vars[m.response_var].incomplete)
          throw DataError("survival time '" + m.response + "' has missing values");
        m.event.resize(g_.n_rows());
        for (std::size_t r = 0; r < g_.n_rows(); ++r) {
          fm::EvalContext ctx;
          ctx.number = [&](const std::string& name) { return g_.data.column(name).value(r); };
          ctx.label = [&](const std::string& name) -> std::optional<std::string> {
            const Column& c = g_.data.column(name);
            if (!c.categorical) return std::nullopt;
            return c.categories[c.codes[r]];
          };
          double e = fm::evaluate(ev, ctx);
          if (e != 0.0 && e != 1.0) throw DataError("event indicator must evaluate to 0 or 1");
          m.event[r] = e;
        }
      }
      m.ridge = opt_.ridge_all || opt_.ridge.count(m.response);
      if (opt_.trunc.count(m.response)) throw ConfigError("truncation is only supported for covariate models");
      g_.vars[m.response_var].model = static_cast<int>(g_.models.size());
      g_.models.push_back(std::move(m));
    }
    g_.n_analysis = g_.models.size();
  }

  void build_covariate_models() {
    bool any_level2_incomplete = false;
    for (const auto& n : covariates_) {
      const VarInfo& v = g_.vars[g_.var_index(n)];
      if (v.level2 && v.incomplete) any_level2_incomplete = true;
    }
    for (const auto& n : opt_.no_model) {
      int vi = g_.var_index(n);
      if (vi >= 0 && g_.vars[vi].incomplete) throw ConfigError("no_model variable '" + n + "' has missing values");
    }
    std::vector<CovariateCandidate> cands;
    for (std::size_t i = 0; i < covariates_.size(); ++i) {
      const VarInfo& v = g_.vars[g_.var_index(covariates_[i])];
      bool needs = v.incomplete || opt_.models.count(v.name) ||
                   (g_.grouping && any_level2_incomplete && !v.level2 && !opt_.no_model.count(v.name));
      if (opt_.no_model.count(v.name)) {
        needs = false;
        g_.warnings.push_back("no model for '" + v.name +
                              "': incomplete covariates are assumed to be independent of it");
      }
      if (needs) cands.push_back(CovariateCandidate{v.name, v.level2, v.meta.n_missing, i});
    }
    for (const auto& [n, _] : opt_.models) {
      if (responses_.count(n)) continue;
      if (std::find(covariates_.begin(), covariates_.end(), n) == covariates_.end())
        throw ConfigError("model type given for '" + n + "', which is not a covariate");
    }
    auto order = order_submodels(cands);
    std::map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < order.size(); ++i) position[order[i]] = i;

    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const std::string& n = order[pos];
      const int vi = g_.var_index(n);
      SubModel m;
      m.role = Role::Covariate;
      m.response = n;
      m.response_var = vi;
      m.level2 = g_.vars[vi].level2;
      const bool lower = g_.grouping && !m.level2;
      auto it = opt_.models.find(n);
      m.type = it != opt_.models.end() ? parse_model_type(it->second) : select_model_type(g_.vars[vi].meta, lower);
      if (m.type.family == Family::Weibull) throw ConfigError("survreg cannot be used as a covariate model");
      if (m.type.mixed && !lower) throw ConfigError("mixed model requested for '" + n + "', which has no lower level");
      m.label = model_type_label(m.type, false);
      check_support(m);
      m.intercept = m.type.has_intercept();
      if (m.intercept) m.X.push_back(intercept_column());
      for (const auto& e : entries_) {
        bool ok = true;
        for (const auto& d : e.deps) {
          const VarInfo& dv = g_.vars[g_.var_index(d)];
          if (d == n) ok = false;
          if (m.level2 && !dv.level2) ok = false;
          auto p = position.find(d);
          if (p != position.end() && p->second <= pos) ok = false;
        }
        if (!ok) continue;
        for (auto& c : term_columns(e.term)) m.X.push_back(std::move(c));
        m.predictor_terms.push_back(e.label);
      }
      if (m.type.mixed) {
        m.Z.push_back(intercept_column());
        m.random_terms.push_back("(Intercept)");
      }
      auto tr = opt_.trunc.find(n);
      if (tr != opt_.trunc.end()) {
        if (!(m.type.family == Family::Gaussian && m.type.link == Link::Identity && !m.type.mixed) &&
            m.type.family != Family::Lognorm)
          throw ConfigError("truncation for '" + n + "' needs a (non-mixed) normal or log-normal model");
        if (!(tr->second.lower < tr->second.upper)) throw ConfigError("trunc bounds for '" + n + "' must satisfy lower < upper");
        if (m.type.family == Family::Lognorm && tr->second.lower < 0)
          throw ConfigError("log-normal truncation bounds for '" + n + "' must be non-negative");
        const Column& col = g_.data.column(n);
        for (std::size_t r = 0; r < col.size(); ++r)
          if (!col.missing[r] && (col.numbers[r] < tr->second.lower || col.numbers[r] > tr->second.upper))
            throw DataError("observed value of '" + n + "' lies outside its truncation bounds");
        m.trunc = tr->second;
      }
      m.ridge = opt_.ridge_all || opt_.ridge.count(n);
      g_.vars[vi].model = static_cast<int>(g_.models.size());
      g_.models.push_back(std::move(m));
    }
    for (const auto& [n, _] : opt_.trunc)
      if (g_.var_index(n) < 0 || g_.vars[g_.var_index(n)].model < static_cast<int>(g_.n_analysis))
        throw ConfigError("trunc given for '" + n + "', which has no covariate model");
    for (const auto& n : opt_.ridge)
      if (g_.var_index(n) < 0 || g_.vars[g_.var_index(n)].model < 0)
        throw ConfigError("shrinkage given for '" + n + "', which is not a modelled response");
    for (const auto& v : g_.vars)
      if (v.incomplete && v.model < 0) throw DataError("incomplete variable '" + v.name + "' has no model");
  }

  bool scale_allowed(const ColumnRecipe& c) const {
    if (opt_.scale.mode == ScaleSpec::Mode::None) return false;
    bool numeric = false;
    for (const auto& f : c.factors) numeric = numeric || f.kind == FactorRecipe::Kind::Numeric;
    if (!numeric) return false;
    if (opt_.scale.mode == ScaleSpec::Mode::All) return true;
    for (int d : c.deps)
      if (opt_.scale.variables.count(g_.vars[d].name)) return true;
    return false;
  }

  void finalize() {
    for (const auto& n : opt_.scale.variables)
      if (g_.var_index(n) < 0) throw ConfigError("scale_vars names unknown model variable '" + n + "'");
    const std::size_t nv = g_.vars.size();
    const std::size_t n = g_.n_rows();
    g_.base_values.assign(n * nv, std::nan(""));
    for (std::size_t j = 0; j < nv; ++j) {
      const Column& c = g_.data.column(g_.vars[j].name);
      for (std::size_t r = 0; r < n; ++r)
        if (!c.missing[r]) g_.base_values[r * nv + j] = c.value(r);
    }
    for (auto& m : g_.models) {
      const std::size_t units = g_.n_units(m);
      auto prep = [&](std::vector<ColumnRecipe>& cols, bool allow_scale) {
        for (auto& c : cols) {
          for (int d : c.deps) c.dynamic = c.dynamic || g_.vars[d].incomplete;
          if (!allow_scale || !scale_allowed(c)) continue;
          std::vector<double> vals;
          for (std::size_t u = 0; u < units; ++u) {
            std::size_t r = g_.unit_row(m, u);
            double v = c.raw(std::span<const double>(&g_.base_values[r * nv], nv));
            if (std::isfinite(v)) vals.push_back(v);
          }
          if (vals.size() < 2) continue;
          double mean = 0.0;
          for (double v : vals) mean += v;
          mean /= vals.size();
          double ss = 0.0;
          for (double v : vals) ss += (v - mean) * (v - mean);
          double sd = std::sqrt(ss / (vals.size() - 1));
          if (!(sd > 0.0)) continue;
          c.scaled = true;
          c.scale = sd;
          c.center = (m.intercept || m.type.family == Family::Ordinal) ? mean : 0.0;
        }
      };
      prep(m.X, true);
      prep(m.Z, false);
    }
  }

  const std::vector<AnalysisSpec>& analyses_;
  const Dataset& raw_;
  const GraphOptions& opt_;
  ModelGraph g_;
  std::vector<Parsed> parsed_;
  std::optional<fm::FormulaAst> aux_ast_;
  std::string group_var_;
  std::map<std::string, VariableMeta> metas_;
  std::set<std::string> responses_;
  std::vector<std::string> covariates_;
  std::vector<Entry> entries_;
};

}  // namespace

ModelGraph build_model_graph(const std::vector<AnalysisSpec>& analyses, const Dataset& raw,
                             const GraphOptions& options) {
  return Builder(analyses, raw, options).build();
}

std::string describe_models(const ModelGraph& g) {
  std::ostringstream os;
  for (std::size_t i = 0; i < g.models.size(); ++i) {
    const SubModel& m = g.models[i];
    if (i) os << "\n";
    os << (m.role == Role::Analysis ? "Analysis" : "Covariate") << " model for \"" << m.response << "\" ("
       << m.label << ")\n";
    os << "   family: " << family_name(m.type.family) << "\n   link: " << link_name(m.type.link) << "\n";
    if (m.level2) os << "   level: " << g.grouping->variable << "\n";
    if (m.trunc) os << "   truncation: [" << format_double(m.trunc->lower) << ", " << format_double(m.trunc->upper) << "]\n";
    if (m.ridge) os << "   shrinkage: ridge\n";
    os << "* Predictor variables:\n  ";
    for (std::size_t j = 0; j < m.X.size(); ++j) os << (j ? ", " : "") << m.X[j].name;
    os << "\n";
    if (!m.Z.empty()) {
      os << "* Random effects (" << g.grouping->variable << "):\n  ";
      for (std::size_t j = 0; j < m.Z.size(); ++j) os << (j ? ", " : "") << m.Z[j].name;
      os << "\n";
    }
  }
  return os.str();
}

}  // namespace jointgibbs
