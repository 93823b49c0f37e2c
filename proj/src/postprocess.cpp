#include "jointgibbs/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <json.hpp>

#include "jointgibbs/densities.hpp"
#include "jointgibbs/error.hpp"
#include "jointgibbs/formula.hpp"

namespace jointgibbs {

namespace fm = formula;

PredictType parse_predict_type(const std::string& s) {
  if (s == "link") return PredictType::Link;
  if (s == "lp") return PredictType::Lp;
  if (s == "response") return PredictType::Response;
  if (s == "prob") return PredictType::Prob;
  if (s == "class") return PredictType::Class;
  throw ConfigError("unknown prediction type '" + s + "' (expected link, lp, response, prob or class)");
}

PlotKind parse_plot_kind(const std::string& s) {
  if (s == "trace") return PlotKind::Trace;
  if (s == "density") return PlotKind::Density;
  if (s == "mcse_ratio") return PlotKind::McseRatio;
  if (s == "imp_distr") return PlotKind::ImpDistr;
  throw ConfigError("unknown plot kind '" + s + "' (expected trace, density, mcse_ratio or imp_distr)");
}

namespace {

// Value of graph variable `v` in `nd` at `row`, using the graph's coding.
double newdata_value(const ModelGraph& g, const Dataset& nd, int v, std::size_t row) {
  const VarInfo& vi = g.vars[v];
  if (!nd.has(vi.name)) throw DataError("newdata has no column '" + vi.name + "'");
  const Column& c = nd.column(vi.name);
  if (c.missing[row])
    throw DataError("newdata row " + std::to_string(row + 1) + " has a missing value for '" + vi.name + "'");
  if (!vi.categorical) {
    if (c.categorical) throw DataError("column '" + vi.name + "' in newdata must be numeric");
    return c.numbers[row];
  }
  std::string label = c.categorical ? c.categories[c.codes[row]] : format_double(c.numbers[row]);
  const auto& cats = vi.meta.categories;
  auto it = std::find(cats.begin(), cats.end(), label);
  if (it == cats.end()) throw DataError("unknown category '" + label + "' of '" + vi.name + "' in newdata");
  return static_cast<double>(it - cats.begin());
}

int find_node(const McmcSamples& s, NodeKind kind, int model, int i, int j) {
  for (std::size_t k = 0; k < s.nodes.size(); ++k) {
    const NodeDesc& d = s.nodes[k];
    if (d.kind == kind && d.model == model && d.i == i && d.j == j) return static_cast<int>(k);
  }
  return -1;
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

}  // namespace

PredictionResult predict(const McmcSamples& s, const ModelGraph& g, const Dataset& newdata, PredictType type,
                         double q_lo, double q_hi, const SubsetSpec& subset, const std::string& response) {
  int m = -1;
  for (std::size_t k = 0; k < g.n_analysis; ++k)
    if (response.empty() || g.models[k].response == response) {
      m = static_cast<int>(k);
      break;
    }
  if (m < 0) throw ConfigError("no analysis model for response '" + response + "'");
  const SubModel& sm = g.models[m];
  const Family f = sm.type.family;
  const bool categorical = f == Family::Ordinal || f == Family::Multinomial;
  if ((type == PredictType::Prob || type == PredictType::Class) && !categorical && f != Family::Binomial)
    throw ConfigError("prediction type prob/class needs a categorical response");

  SubsetSpec rows_only = subset;
  rows_only.selection.reset();
  Subset sub = resolve_subset(s, rows_only);
  const std::size_t p = sm.X.size(), sets = sm.n_coef_sets();
  std::vector<int> coef(p * sets);
  for (std::size_t k = 0; k < sets; ++k)
    for (std::size_t c = 0; c < p; ++c) {
      coef[c + p * k] = find_node(s, NodeKind::Coef, m, static_cast<int>(c), static_cast<int>(k));
      if (coef[c + p * k] < 0)
        throw ConfigError("coefficients of the model for '" + sm.response + "' were not monitored");
    }
  std::vector<int> cut;
  if (f == Family::Ordinal)
    for (std::size_t k = 0; k + 1 < sm.n_categories; ++k) {
      cut.push_back(find_node(s, NodeKind::Gamma, m, static_cast<int>(k), 0));
      if (cut.back() < 0) throw ConfigError("cut points of the model for '" + sm.response + "' were not monitored");
    }

  // raw design rows of newdata
  const std::size_t n = newdata.n_rows(), nv = g.n_vars();
  std::vector<int> needed;
  for (const auto& c : sm.X)
    for (int v : c.deps)
      if (std::find(needed.begin(), needed.end(), v) == needed.end()) needed.push_back(v);
  Eigen::MatrixXd X(n, p);
  std::vector<double> row(nv, std::nan(""));
  for (std::size_t r = 0; r < n; ++r) {
    for (int v : needed) row[v] = newdata_value(g, newdata, v, r);
    for (std::size_t c = 0; c < p; ++c) X(r, c) = sm.X[c].raw(row);
  }

  // draws
  std::vector<Eigen::MatrixXd> beta;  // per draw p x sets
  std::vector<std::vector<double>> cuts;
  for (std::size_t c : sub.chains)
    for (std::size_t r : sub.rows) {
      Eigen::MatrixXd b(p, sets);
      for (std::size_t k = 0; k < sets; ++k)
        for (std::size_t j = 0; j < p; ++j) b(j, k) = s.chains[c](r, coef[j + p * k]);
      beta.push_back(std::move(b));
      if (!cut.empty()) {
        std::vector<double> cc;
        for (int idx : cut) cc.push_back(s.chains[c](r, idx));
        cuts.push_back(std::move(cc));
      }
    }
  const std::size_t nd = beta.size();

  PredictionResult res;
  res.newdata = newdata;
  res.type = type;
  res.response = sm.response;
  auto add_stats = [&](const std::string& prefix, const std::vector<std::vector<double>>& per_row, std::size_t col0) {
    res.columns.push_back(prefix + "fit");
    res.columns.push_back(prefix + format_double(q_lo * 100) + "%");
    res.columns.push_back(prefix + format_double(q_hi * 100) + "%");
    for (std::size_t r = 0; r < n; ++r) {
      res.values(r, col0) = mean_of(per_row[r]);
      res.values(r, col0 + 1) = quantile(per_row[r], q_lo);
      res.values(r, col0 + 2) = quantile(per_row[r], q_hi);
    }
  };

  bool want_probs = categorical && (type == PredictType::Prob || type == PredictType::Class ||
                                    type == PredictType::Response);
  if (!want_probs && f == Family::Multinomial) {
    // linear predictors per non-baseline category
    res.values.resize(n, 3 * sets);
    for (std::size_t k = 0; k < sets; ++k) {
      std::vector<std::vector<double>> vals(n, std::vector<double>(nd));
      for (std::size_t d = 0; d < nd; ++d)
        for (std::size_t r = 0; r < n; ++r) vals[r][d] = X.row(r).dot(beta[d].col(k));
      add_stats(sm.categories[k + 1] + ": ", vals, 3 * k);
    }
    return res;
  }
  if (!want_probs) {
    res.values.resize(n, 3);
    std::vector<std::vector<double>> vals(n, std::vector<double>(nd));
    for (std::size_t d = 0; d < nd; ++d)
      for (std::size_t r = 0; r < n; ++r) {
        double eta = X.row(r).dot(beta[d].col(0));
        if (type != PredictType::Link && type != PredictType::Lp) {
          if (f == Family::Lognorm || f == Family::Weibull)
            eta = std::exp(eta);
          else if (f != Family::Ordinal)
            eta = inverse_link(sm.type.link, eta);
        }
        vals[r][d] = eta;
      }
    add_stats("", vals, 0);
    if (type == PredictType::Class)
      for (std::size_t r = 0; r < n; ++r) res.classes.push_back(sm.categories[res.values(r, 0) > 0.5 ? 1 : 0]);
    return res;
  }

  const std::size_t K = sm.n_categories;
  res.values.resize(n, 3 * K);
  std::vector<std::vector<std::vector<double>>> probs(K, std::vector<std::vector<double>>(n, std::vector<double>(nd)));
  for (std::size_t d = 0; d < nd; ++d)
    for (std::size_t r = 0; r < n; ++r) {
      std::vector<double> pr;
      if (f == Family::Ordinal) {
        pr = ordinal_probs(X.row(r).dot(beta[d].col(0)), cuts[d]);
      } else {
        std::vector<double> eta(sets);
        for (std::size_t k = 0; k < sets; ++k) eta[k] = X.row(r).dot(beta[d].col(k));
        pr = multinomial_probs(eta);
      }
      for (std::size_t k = 0; k < K; ++k) probs[k][r][d] = pr[k];
    }
  for (std::size_t k = 0; k < K; ++k) add_stats(sm.categories[k] + ": ", probs[k], 3 * k);
  if (type == PredictType::Class)
    for (std::size_t r = 0; r < n; ++r) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < K; ++k)
        if (res.values(r, 3 * k) > res.values(r, 3 * best)) best = k;
      res.classes.push_back(sm.categories[best]);
    }
  return res;
}

Dataset prediction_table(const PredictionResult& r) {
  Dataset out = r.newdata;
  for (std::size_t j = 0; j < r.columns.size(); ++j) {
    Column c;
    c.name = r.columns[j];
    for (Eigen::Index i = 0; i < r.values.rows(); ++i) {
      c.numbers.push_back(r.values(i, j));
      c.missing.push_back(std::isnan(r.values(i, j)));
    }
    out.add_column(std::move(c));
  }
  if (!r.classes.empty()) {
    Column c;
    c.name = "class";
    c.categorical = true;
    for (const auto& label : r.classes) {
      auto it = std::find(c.categories.begin(), c.categories.end(), label);
      if (it == c.categories.end()) {
        c.categories.push_back(label);
        it = c.categories.end() - 1;
      }
      c.codes.push_back(static_cast<int>(it - c.categories.begin()));
      c.missing.push_back(false);
    }
    out.add_column(std::move(c));
  }
  return out;
}

Dataset pred_df(const ModelGraph& g, const std::string& vars, std::size_t grid_length,
                const std::map<std::string, std::vector<std::string>>& overrides) {
  if (grid_length < 1) throw ConfigError("grid length must be at least 1");
  fm::ParseOptions opt;
  opt.allow_one_sided = true;
  fm::FormulaAst ast = fm::parse_formula(vars, opt);
  std::vector<std::string> grid_vars;
  for (const auto& t : fm::expand_terms(ast).terms)
    for (const auto& d : fm::term_dependencies(t))
      if (std::find(grid_vars.begin(), grid_vars.end(), d) == grid_vars.end()) grid_vars.push_back(d);
  for (const auto& [name, _] : overrides) {
    if (std::find(grid_vars.begin(), grid_vars.end(), name) != grid_vars.end())
      throw ConfigError("'" + name + "' is both a grid variable and an override");
  }

  const std::size_t nv = g.n_vars();
  std::vector<std::vector<double>> axes;  // values (codes for factors) per axis
  std::vector<int> axis_var;
  auto var_of = [&](const std::string& name) {
    int v = g.var_index(name);
    if (v < 0) throw ConfigError("unknown variable '" + name + "'");
    return v;
  };
  for (const auto& name : grid_vars) {
    int v = var_of(name);
    const VarInfo& vi = g.vars[v];
    std::vector<double> axis;
    if (vi.categorical) {
      for (std::size_t k = 0; k < vi.meta.categories.size(); ++k) axis.push_back(static_cast<double>(k));
    } else {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (std::size_t r = 0; r < g.n_rows(); ++r) {
        double x = g.base_values[r * nv + v];
        if (std::isnan(x)) continue;
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
      if (!std::isfinite(lo)) throw DataError("variable '" + name + "' has no observed values");
      if (lo == hi || grid_length == 1) {
        axis.push_back(lo);
      } else {
        for (std::size_t i = 0; i < grid_length; ++i)
          axis.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid_length - 1));
      }
    }
    axes.push_back(std::move(axis));
    axis_var.push_back(v);
  }
  for (const auto& [name, values] : overrides) {
    int v = var_of(name);
    const VarInfo& vi = g.vars[v];
    if (values.empty()) throw ConfigError("override for '" + name + "' has no values");
    std::vector<double> axis;
    for (const auto& s : values) {
      if (vi.categorical) {
        const auto& cats = vi.meta.categories;
        auto it = std::find(cats.begin(), cats.end(), s);
        if (it == cats.end()) throw ConfigError("unknown category '" + s + "' of '" + name + "'");
        axis.push_back(static_cast<double>(it - cats.begin()));
      } else {
        try {
          std::size_t pos = 0;
          axis.push_back(std::stod(s, &pos));
          if (pos != s.size()) throw std::invalid_argument(s);
        } catch (const std::exception&) {
          throw ConfigError("override value '" + s + "' of '" + name + "' is not a number");
        }
      }
    }
    axes.push_back(std::move(axis));
    axis_var.push_back(v);
  }

  // defaults: median / reference category
  std::vector<double> fixed(nv, std::nan(""));
  for (std::size_t v = 0; v < nv; ++v) {
    const VarInfo& vi = g.vars[v];
    if (vi.categorical) {
      const auto& cats = vi.meta.categories;
      auto it = std::find(cats.begin(), cats.end(), vi.meta.ref_cat);
      fixed[v] = it == cats.end() ? 0.0 : static_cast<double>(it - cats.begin());
    } else {
      std::vector<double> obs;
      for (std::size_t r = 0; r < g.n_rows(); ++r) {
        double x = g.base_values[r * nv + v];
        if (!std::isnan(x)) obs.push_back(x);
      }
      if (!obs.empty()) fixed[v] = quantile(obs, 0.5);
    }
  }

  std::size_t total = 1;
  for (const auto& a : axes) total *= a.size();
  std::vector<Column> cols(nv);
  for (std::size_t v = 0; v < nv; ++v) {
    cols[v].name = g.vars[v].name;
    cols[v].categorical = g.vars[v].categorical;
    cols[v].categories = g.vars[v].meta.categories;
    cols[v].ordered = g.vars[v].meta.vtype == VType::Ordered;
  }
  std::vector<std::size_t> idx(axes.size(), 0);
  for (std::size_t i = 0; i < total; ++i) {
    std::vector<double> row = fixed;
    for (std::size_t a = 0; a < axes.size(); ++a) row[axis_var[a]] = axes[a][idx[a]];
    for (std::size_t v = 0; v < nv; ++v) {
      bool miss = std::isnan(row[v]);
      cols[v].missing.push_back(miss);
      if (cols[v].categorical)
        cols[v].codes.push_back(miss ? -1 : static_cast<int>(row[v]));
      else
        cols[v].numbers.push_back(row[v]);
    }
    // first axis varies fastest
    for (std::size_t a = 0; a < axes.size(); ++a) {
      if (++idx[a] < axes[a].size()) break;
      idx[a] = 0;
    }
  }
  return Dataset(std::move(cols));
}

ImputedStack get_mi_dat(const McmcSamples& s, const ModelGraph& g, std::size_t m, bool include,
                        std::optional<long> start, long minspace, std::uint64_t seed) {
  if (minspace < 1) throw ConfigError("minspace must be at least 1");
  const std::size_t nv = g.n_vars();
  // imputation nodes per variable
  std::vector<std::size_t> imp_nodes;
  std::size_t n_missing_units = 0;
  for (const SubModel& sm : g.models) {
    const VarInfo& vi = g.vars[sm.response_var];
    if (!vi.incomplete) continue;
    for (std::size_t u = 0; u < g.n_units(sm); ++u)
      if (std::isnan(g.base_values[g.unit_row(sm, u) * nv + sm.response_var])) ++n_missing_units;
  }
  for (std::size_t j = 0; j < s.nodes.size(); ++j)
    if (s.nodes[j].kind == NodeKind::Imp) imp_nodes.push_back(j);
  if (m > 0 && imp_nodes.size() != n_missing_units)
    throw ConfigError("imputed values were not monitored (set monitor imps = true)");

  ImputedStack out;
  std::mt19937_64 rng(seed);
  if (m > 0) {
    if (s.n_chains() == 0 || s.iterations.empty()) throw ConfigError("the run has no stored iterations");
    std::vector<std::size_t> eligible;
    for (std::size_t r = 0; r < s.iterations.size(); ++r)
      if (!start || s.iterations[r] >= *start) eligible.push_back(r);
    for (std::size_t k = 0; k < m; ++k) {
      std::vector<std::size_t> cand;
      for (std::size_t r : eligible) {
        bool ok = std::all_of(out.picks.begin(), out.picks.end(), [&](const ImputationPick& p) {
          return std::abs(s.iterations[r] - p.iteration) >= minspace;
        });
        if (ok) cand.push_back(r);
      }
      if (cand.empty())
        throw ConfigError("cannot choose " + std::to_string(m) + " iterations at least " + std::to_string(minspace) +
                          " apart from the " + std::to_string(eligible.size()) + " stored iterations");
      ImputationPick p;
      p.chain = std::uniform_int_distribution<std::size_t>(0, s.n_chains() - 1)(rng);
      p.row = cand[std::uniform_int_distribution<std::size_t>(0, cand.size() - 1)(rng)];
      p.iteration = s.iterations[p.row];
      out.picks.push_back(p);
    }
  }

  const Dataset& data = g.data;
  const std::size_t n = data.n_rows();
  std::vector<Column> cols;
  Column imp;
  imp.name = "Imputation_";
  cols.push_back(imp);
  for (const auto& c : data.columns()) {
    Column e = c;
    e.numbers.clear();
    e.codes.clear();
    e.missing.clear();
    cols.push_back(std::move(e));
  }
  Column id, rownr;
  id.name = ".id";
  rownr.name = ".rownr";
  const bool grouped = g.grouping.has_value();
  if (grouped) {
    id.categorical = true;
    id.categories = g.grouping->labels;
  }

  auto append_copy = [&](std::size_t number, const ImputationPick* pick) {
    // copy of the data with imputed cells overwritten
    std::vector<Column> filled(data.columns().begin(), data.columns().end());
    if (pick)
      for (std::size_t j : imp_nodes) {
        const NodeDesc& d = s.nodes[j];
        double x = s.chains[pick->chain](pick->row, j);
        Column& c = filled[data.index_of(d.var)];
        for (std::size_t r : d.rows) {
          c.missing[r] = false;
          if (c.categorical)
            c.codes[r] = static_cast<int>(x) - 1;
          else
            c.numbers[r] = x;
        }
      }
    for (std::size_t r = 0; r < n; ++r) {
      cols[0].numbers.push_back(static_cast<double>(number));
      cols[0].missing.push_back(false);
      for (std::size_t c = 0; c < filled.size(); ++c) {
        Column& dst = cols[c + 1];
        const Column& src = filled[c];
        dst.missing.push_back(src.missing[r]);
        if (src.categorical)
          dst.codes.push_back(src.codes[r]);
        else
          dst.numbers.push_back(src.numbers[r]);
      }
      if (grouped)
        id.codes.push_back(static_cast<int>(g.grouping->row_group[r]));
      else
        id.numbers.push_back(static_cast<double>(r + 1));
      id.missing.push_back(false);
      rownr.numbers.push_back(static_cast<double>(r + 1));
      rownr.missing.push_back(false);
    }
  };
  if (include) append_copy(0, nullptr);
  for (std::size_t k = 0; k < out.picks.size(); ++k) append_copy(k + 1, &out.picks[k]);
  cols.push_back(std::move(id));
  cols.push_back(std::move(rownr));
  out.data = Dataset(std::move(cols));
  return out;
}

Kde kernel_density(const std::vector<double>& draws, std::size_t n_points) {
  Kde k;
  if (draws.empty()) return k;
  std::vector<double> x = draws;
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  double sd = x.size() > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
  double iqr = quantile(x, 0.75) - quantile(x, 0.25);
  double lo = std::min(sd, iqr / 1.34);
  if (!(lo > 0)) lo = sd > 0 ? sd : (iqr > 0 ? iqr / 1.34 : (x.front() != 0 ? std::abs(x.front()) : 1.0));
  k.bandwidth = 0.9 * lo * std::pow(n, -0.2);
  const double from = x.front() - 3 * k.bandwidth, to = x.back() + 3 * k.bandwidth;
  const double norm = 1.0 / (n * k.bandwidth * std::sqrt(2 * M_PI));
  for (std::size_t i = 0; i < n_points; ++i) {
    double g = n_points == 1 ? from : from + (to - from) * static_cast<double>(i) / (n_points - 1);
    double d = 0.0;
    for (double v : x) {
      double z = (g - v) / k.bandwidth;
      d += std::exp(-0.5 * z * z);
    }
    k.x.push_back(g);
    k.y.push_back(d * norm);
  }
  return k;
}

namespace {

Column num_col(const std::string& name) {
  Column c;
  c.name = name;
  return c;
}

Column text_col(const std::string& name) {
  Column c;
  c.name = name;
  c.categorical = true;
  return c;
}

void push(Column& c, double x) {
  c.numbers.push_back(x);
  c.missing.push_back(std::isnan(x));
}

void push(Column& c, const std::string& label) {
  auto it = std::find(c.categories.begin(), c.categories.end(), label);
  if (it == c.categories.end()) {
    c.categories.push_back(label);
    it = c.categories.end() - 1;
  }
  c.codes.push_back(static_cast<int>(it - c.categories.begin()));
  c.missing.push_back(false);
}

void push_missing(Column& c) {
  if (c.categorical)
    c.codes.push_back(-1);
  else
    c.numbers.push_back(std::nan(""));
  c.missing.push_back(true);
}

}  // namespace

PlotData plot_data(const McmcSamples& s, const ModelGraph& g, PlotKind kind, const SubsetSpec& subset) {
  using nlohmann::json;
  PlotData out;
  json side;
  if (kind == PlotKind::ImpDistr) {
    SubsetSpec rows_only = subset;
    rows_only.selection.reset();
    Subset sub = resolve_subset(s, rows_only);
    Column var = text_col("variable"), series = text_col("series"), category = text_col("category");
    Column blo = num_col("bin_lower"), bhi = num_col("bin_upper"), count = num_col("count"),
           prop = num_col("proportion");
    const std::size_t nv = g.n_vars();
    json vars = json::array();
    for (std::size_t v = 0; v < nv; ++v) {
      const VarInfo& vi = g.vars[v];
      std::vector<double> observed, imputed;
      for (std::size_t r = 0; r < g.n_rows(); ++r) {
        if (vi.level2 && g.grouping->rows[g.grouping->row_group[r]].front() != r) continue;
        double x = g.base_values[r * nv + v];
        if (!std::isnan(x)) observed.push_back(vi.categorical ? x + 1 : x);
      }
      for (std::size_t j = 0; j < s.nodes.size(); ++j) {
        if (s.nodes[j].kind != NodeKind::Imp || s.nodes[j].var != vi.name) continue;
        for (std::size_t c : sub.chains)
          for (std::size_t r : sub.rows) imputed.push_back(s.chains[c](r, j));
      }
      if (observed.empty() && imputed.empty()) continue;
      vars.push_back(vi.name);
      auto emit = [&](const std::string& ser, const std::vector<double>& vals) {
        if (vals.empty()) return;
        if (vi.categorical) {
          for (std::size_t k = 0; k < vi.meta.categories.size(); ++k) {
            double cnt = static_cast<double>(std::count(vals.begin(), vals.end(), static_cast<double>(k + 1)));
            push(var, vi.name);
            push(series, ser);
            push(category, vi.meta.categories[k]);
            push_missing(blo);
            push_missing(bhi);
            push(count, cnt);
            push(prop, cnt / vals.size());
          }
          return;
        }
        double lo = std::min(*std::min_element(observed.begin(), observed.end()),
                             imputed.empty() ? observed.front() : *std::min_element(imputed.begin(), imputed.end()));
        double hi = std::max(*std::max_element(observed.begin(), observed.end()),
                             imputed.empty() ? observed.front() : *std::max_element(imputed.begin(), imputed.end()));
        const std::size_t bins = 30;
        double width = hi > lo ? (hi - lo) / bins : 1.0;
        std::vector<double> cnt(bins, 0.0);
        for (double x : vals) cnt[std::min<std::size_t>(bins - 1, static_cast<std::size_t>((x - lo) / width))] += 1;
        for (std::size_t b = 0; b < bins; ++b) {
          push(var, vi.name);
          push(series, ser);
          push_missing(category);
          push(blo, lo + b * width);
          push(bhi, lo + (b + 1) * width);
          push(count, cnt[b]);
          push(prop, cnt[b] / vals.size());
        }
      };
      emit("observed", observed);
      emit("imputed", imputed);
    }
    out.table = Dataset({var, series, category, blo, bhi, count, prop});
    side = {{"kind", "imp_distr"}, {"variables", vars}};
    out.sidecar = side.dump();
    return out;
  }

  Subset sub = resolve_subset(s, subset);
  json names = json::array();
  for (std::size_t j : sub.nodes) names.push_back(s.nodes[j].name);
  side = {{"nodes", names},
          {"chains", sub.chains.size()},
          {"iterations", {s.iterations[sub.rows.front()], s.iterations[sub.rows.back()]}}};
  if (kind == PlotKind::Trace) {
    Column chain = num_col("chain"), it = num_col("iteration"), node = text_col("node"), value = num_col("value");
    for (std::size_t j : sub.nodes)
      for (std::size_t c : sub.chains)
        for (std::size_t r : sub.rows) {
          push(chain, static_cast<double>(c + 1));
          push(it, static_cast<double>(s.iterations[r]));
          push(node, s.nodes[j].name);
          push(value, s.chains[c](r, j));
        }
    out.table = Dataset({chain, it, node, value});
    side["kind"] = "trace";
  } else if (kind == PlotKind::Density) {
    Column node = text_col("node"), chain = num_col("chain"), x = num_col("x"), dens = num_col("density");
    json bw = json::object();
    for (std::size_t j : sub.nodes) {
      auto draws = chain_draws(s, sub, j);
      for (std::size_t c = 0; c < draws.size(); ++c) {
        Kde k = kernel_density(draws[c]);
        bw[s.nodes[j].name].push_back(k.bandwidth);
        for (std::size_t i = 0; i < k.x.size(); ++i) {
          push(node, s.nodes[j].name);
          push(chain, static_cast<double>(sub.chains[c] + 1));
          push(x, k.x[i]);
          push(dens, k.y[i]);
        }
      }
    }
    out.table = Dataset({node, chain, x, dens});
    side["kind"] = "density";
    side["bandwidths"] = bw;
  } else {
    Column node = text_col("node"), mcse = num_col("mcse"), sd = num_col("sd"), ratio = num_col("ratio"),
           ref = num_col("reference"), flag = text_col("exceeds");
    for (std::size_t j : sub.nodes) {
      push(node, s.nodes[j].name);
      push(ref, 0.05);
      try {
        McError e = mc_error(chain_draws(s, sub, j));
        push(mcse, e.mcse);
        push(sd, e.sd);
        push(ratio, e.ratio);
        push(flag, std::string(e.ratio > 0.05 ? "TRUE" : "FALSE"));
      } catch (const DataError&) {
        push_missing(mcse);
        push_missing(sd);
        push_missing(ratio);
        push_missing(flag);
      }
    }
    out.table = Dataset({node, mcse, sd, ratio, ref, flag});
    side["kind"] = "mcse_ratio";
  }
  out.sidecar = side.dump();
  return out;
}

}  // namespace jointgibbs
