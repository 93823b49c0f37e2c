#include "jointgibbs/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <json.hpp>

#include "jointgibbs/error.hpp"

namespace jointgibbs {

namespace {

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double var_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = mean_of(v), ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / (v.size() - 1);
}

double cov_of(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2) return 0.0;
  double ma = mean_of(a), mb = mean_of(b), s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
  return s / (a.size() - 1);
}

}  // namespace

Subset resolve_subset(const McmcSamples& s, const SubsetSpec& spec) {
  Subset sub;
  for (std::size_t c : spec.exclude_chains)
    if (c < 1 || c > s.n_chains())
      throw ConfigError("cannot exclude chain " + std::to_string(c) + ": there are " + std::to_string(s.n_chains()) +
                        " chains");
  for (std::size_t c = 0; c < s.n_chains(); ++c)
    if (std::find(spec.exclude_chains.begin(), spec.exclude_chains.end(), c + 1) == spec.exclude_chains.end())
      sub.chains.push_back(c);
  if (sub.chains.empty()) throw ConfigError("all chains are excluded");

  if (spec.thin < 1) throw ConfigError("thin must be at least 1");
  if (s.iterations.empty()) throw ConfigError("the run has no stored iterations");
  long first = spec.start.value_or(s.iterations.front());
  long last = spec.end.value_or(s.iterations.back());
  if (first > last) throw ConfigError("start (" + std::to_string(first) + ") is after end (" + std::to_string(last) + ")");
  if (last < s.iterations.front() || first > s.iterations.back())
    throw ConfigError("requested iterations " + std::to_string(first) + ":" + std::to_string(last) +
                      " lie outside the stored range " + std::to_string(s.iterations.front()) + ":" +
                      std::to_string(s.iterations.back()));
  long anchor = -1;
  for (std::size_t r = 0; r < s.iterations.size(); ++r) {
    long it = s.iterations[r];
    if (it < first || it > last) continue;
    if (anchor < 0) anchor = it;
    if ((it - anchor) % spec.thin == 0) sub.rows.push_back(r);
  }
  if (sub.rows.empty()) throw ConfigError("no stored iterations in the requested range");

  if (spec.selection) {
    validate(*spec.selection);
    auto leaves = resolve_leaves(*spec.selection);
    for (const auto& name : spec.selection->other)
      if (s.node_index(name) < 0) throw ConfigError("node '" + name + "' was not monitored");
    for (std::size_t j = 0; j < s.nodes.size(); ++j)
      if (selects(*spec.selection, leaves, s.nodes[j].tag, s.nodes[j].name)) sub.nodes.push_back(j);
  } else {
    sub.nodes.resize(s.nodes.size());
    std::iota(sub.nodes.begin(), sub.nodes.end(), 0);
  }
  if (sub.nodes.empty()) throw ConfigError("the selection matches no monitored node");
  return sub;
}

std::vector<std::vector<double>> chain_draws(const McmcSamples& s, const Subset& sub, std::size_t node) {
  std::vector<std::vector<double>> out;
  for (std::size_t c : sub.chains) {
    std::vector<double> v;
    v.reserve(sub.rows.size());
    for (std::size_t r : sub.rows) v.push_back(s.chains[c](r, node));
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<double> pooled(const std::vector<std::vector<double>>& chains) {
  std::vector<double> out;
  for (const auto& c : chains) out.insert(out.end(), c.begin(), c.end());
  return out;
}

double tail_probability(std::span<const double> draws) {
  if (draws.empty()) return std::nan("");
  std::size_t pos = 0, neg = 0;
  for (double x : draws) {
    if (x > 0) ++pos;
    if (x < 0) ++neg;
  }
  double n = static_cast<double>(draws.size());
  return 2.0 * std::min(pos / n, neg / n);
}

double quantile(std::vector<double> v, double p) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  double h = (v.size() - 1) * p;
  std::size_t lo = static_cast<std::size_t>(std::floor(h));
  std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - lo) * (v[hi] - v[lo]);
}

GelmanRubin gelman_rubin(const std::vector<std::vector<double>>& input, double confidence, bool autoburnin) {
  if (input.size() < 2) throw DataError("the Gelman-Rubin criterion needs at least two chains");
  std::vector<std::vector<double>> chains = input;
  std::size_t n = chains[0].size();
  for (const auto& c : chains)
    if (c.size() != n) throw DataError("the Gelman-Rubin criterion needs chains of equal length");
  if (autoburnin && n >= 50)
    for (auto& c : chains) c.erase(c.begin(), c.begin() + static_cast<long>(n / 2));
  n = chains[0].size();
  if (n < 2) throw DataError("the Gelman-Rubin criterion needs at least two iterations per chain");

  const double m = static_cast<double>(chains.size());
  const double nd = static_cast<double>(n);
  std::vector<double> s2, xbar, xbar2;
  for (const auto& c : chains) {
    s2.push_back(var_of(c));
    xbar.push_back(mean_of(c));
    xbar2.push_back(xbar.back() * xbar.back());
  }
  GelmanRubin gr;
  gr.W = mean_of(s2);
  if (!(gr.W > 0)) throw DataError("within-chain variance is zero");
  gr.B = nd * var_of(xbar);
  gr.V = (nd - 1) / nd * gr.W + gr.B / nd;
  gr.uncorrected = std::sqrt(gr.V / gr.W);

  double muhat = mean_of(xbar);
  double var_w = var_of(s2) / m;
  double var_b = 2.0 * gr.B * gr.B / (m - 1);
  double cov_wb = (nd / m) * (cov_of(s2, xbar2) - 2.0 * muhat * cov_of(s2, xbar));
  double var_v = ((nd - 1) * (nd - 1) * var_w + var_b + 2.0 * (nd - 1) * cov_wb) / (nd * nd);
  double df_adj = 1.0;
  if (var_v > 0) {
    double df_v = 2.0 * gr.V * gr.V / var_v;
    df_adj = (df_v + 3) / (df_v + 1);
  }
  double p = (1.0 + confidence) / 2.0;
  double b_df = m - 1;
  double q;
  if (var_w > 0) {
    double w_df = 2.0 * gr.W * gr.W / var_w;
    q = boost::math::quantile(boost::math::fisher_f(b_df, w_df), p);
  } else {
    q = boost::math::quantile(boost::math::chi_squared(b_df), p) / b_df;
  }
  double r2_fixed = (nd - 1) / nd;
  double r2_random = gr.B / nd / gr.W;
  gr.point = std::sqrt(df_adj * (r2_fixed + r2_random));
  gr.upper = std::sqrt(df_adj * (r2_fixed + q * r2_random));
  return gr;
}

McError mc_error(const std::vector<std::vector<double>>& chains) {
  std::vector<double> all = pooled(chains);
  McError e;
  if (all.empty()) throw DataError("no draws for the Monte Carlo error");
  e.est = mean_of(all);
  e.sd = std::sqrt(var_of(all));
  e.batch_size = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(all.size()))));
  std::vector<double> means;
  for (const auto& c : chains)
    for (std::size_t k = 0; (k + 1) * e.batch_size <= c.size(); ++k) {
      double s = 0.0;
      for (std::size_t i = k * e.batch_size; i < (k + 1) * e.batch_size; ++i) s += c[i];
      means.push_back(s / e.batch_size);
    }
  e.n_batches = means.size();
  if (e.n_batches < 2) throw DataError("fewer than two batches for the Monte Carlo error");
  double used = static_cast<double>(e.n_batches * e.batch_size);
  double sigma2 = e.batch_size * var_of(means);
  e.mcse = std::sqrt(sigma2 / used);
  e.ratio = e.sd > 0 ? e.mcse / e.sd : std::nan("");
  return e;
}

PosteriorSummary summarize(const McmcSamples& s, const SubsetSpec& spec, double q_lo, double q_hi,
                           const ModelGraph* graph, bool autoburnin) {
  if (!(q_lo >= 0 && q_hi <= 1 && q_lo <= q_hi)) throw ConfigError("quantiles must satisfy 0 <= lo <= hi <= 1");
  Subset sub = resolve_subset(s, spec);
  if (sub.rows.size() < 2) throw ConfigError("summaries need at least two retained iterations");
  PosteriorSummary ps;
  ps.q_lo = q_lo;
  ps.q_hi = q_hi;
  ps.first_iteration = s.iterations[sub.rows.front()];
  ps.last_iteration = s.iterations[sub.rows.back()];
  ps.thin = sub.rows.size() > 1 ? s.iterations[sub.rows[1]] - s.iterations[sub.rows[0]] : s.thin;
  ps.per_chain = sub.rows.size();
  ps.n_chains = sub.chains.size();
  if (sub.rows.size() * sub.chains.size() < 100)
    ps.warnings.push_back("fewer than 100 retained draws; the Monte Carlo error is unreliable");

  for (std::size_t j : sub.nodes) {
    const NodeDesc& d = s.nodes[j];
    auto chains = chain_draws(s, sub, j);
    std::vector<double> all = pooled(chains);
    NodeSummary ns;
    ns.name = d.name;
    ns.tag = d.tag;
    ns.kind = d.kind;
    ns.model = d.model;
    ns.mean = mean_of(all);
    ns.sd = std::sqrt(var_of(all));
    ns.lo = quantile(all, q_lo);
    ns.hi = quantile(all, q_hi);
    ns.tail = tail_probability(all);
    if (chains.size() >= 2) {
      try {
        GelmanRubin gr = gelman_rubin(chains, 0.95, autoburnin);
        ns.gr_point = gr.point;
        ns.gr_upper = gr.upper;
      } catch (const DataError&) {
      }
    }
    try {
      McError me = mc_error(chains);
      ns.mcse = me.mcse;
      if (std::isfinite(me.ratio)) ns.mcse_ratio = me.ratio;
      if (ns.mcse_ratio && *ns.mcse_ratio > 0.05)
        ps.warnings.push_back("Monte Carlo error of '" + d.name + "' exceeds 5% of its posterior sd");
    } catch (const DataError&) {
    }
    ps.nodes.push_back(std::move(ns));
  }

  if (graph) {
    ps.n_obs = graph->n_rows();
    ps.n_groups = graph->n_groups();
    if (graph->grouping) ps.group_variable = graph->grouping->variable;
    ps.models = graph->model_labels();
    const std::size_t nv = graph->n_vars();
    std::vector<bool> row_ok(graph->n_rows(), true), group_ok(graph->n_groups(), true);
    for (std::size_t v = 0; v < nv; ++v) {
      const VarInfo& vi = graph->vars[v];
      MissInfoRow mi;
      mi.variable = vi.name;
      mi.level = vi.level2 ? graph->grouping->variable : "lvlone";
      if (vi.level2) {
        mi.n_units = graph->n_groups();
        for (std::size_t gi = 0; gi < graph->n_groups(); ++gi)
          if (std::isnan(graph->base_values[graph->grouping->rows[gi].front() * nv + v])) {
            ++mi.n_missing;
            group_ok[gi] = false;
          }
      } else {
        mi.n_units = graph->n_rows();
        for (std::size_t r = 0; r < graph->n_rows(); ++r)
          if (std::isnan(graph->base_values[r * nv + v])) {
            ++mi.n_missing;
            row_ok[r] = false;
          }
      }
      ps.missinfo.push_back(mi);
    }
    ps.complete_rows = static_cast<std::size_t>(std::count(row_ok.begin(), row_ok.end(), true));
    ps.complete_groups = static_cast<std::size_t>(std::count(group_ok.begin(), group_ok.end(), true));
  }
  return ps;
}

namespace {

std::string fmt(double x, int prec = 3) {
  if (std::isnan(x)) return "NA";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", prec, x);
  return buf;
}

std::string pct(double p) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%g%%", p * 100);
  return buf;
}

const char* section_title(NodeKind k) {
  switch (k) {
    case NodeKind::Coef:
      return "Posterior summary";
    case NodeKind::Sigma:
      return "Posterior summary of residual std. deviation";
    case NodeKind::Tau:
      return "Posterior summary of precision parameters";
    case NodeKind::Shape:
      return "Posterior summary of the Weibull shape";
    case NodeKind::Gamma:
    case NodeKind::Delta:
      return "Posterior summary of the intercepts";
    case NodeKind::D:
    case NodeKind::InvD:
    case NodeKind::RinvD:
      return "Posterior summary of random effects covariance matrix";
    case NodeKind::Ranef:
      return "Posterior summary of random effects";
    case NodeKind::Imp:
      return "Posterior summary of imputed values";
  }
  return "Posterior summary";
}

int section_of(NodeKind k) {
  switch (k) {
    case NodeKind::Coef:
      return 0;
    case NodeKind::Sigma:
    case NodeKind::Tau:
    case NodeKind::Shape:
      return 1;
    case NodeKind::Gamma:
    case NodeKind::Delta:
      return 2;
    case NodeKind::D:
    case NodeKind::InvD:
    case NodeKind::RinvD:
      return 3;
    case NodeKind::Ranef:
      return 4;
    case NodeKind::Imp:
      return 5;
  }
  return 6;
}

}  // namespace

std::string summary_text(const PosteriorSummary& ps, bool missinfo) {
  std::ostringstream out;
  // group nodes by model then section, keeping first-seen order
  std::vector<std::pair<std::pair<int, int>, std::vector<const NodeSummary*>>> blocks;
  for (const auto& n : ps.nodes) {
    std::pair<int, int> key{n.kind == NodeKind::Imp ? 1 << 20 : n.model, section_of(n.kind)};
    auto it = std::find_if(blocks.begin(), blocks.end(), [&](const auto& b) { return b.first == key; });
    if (it == blocks.end()) {
      blocks.push_back({key, {}});
      it = blocks.end() - 1;
    }
    it->second.push_back(&n);
  }
  std::stable_sort(blocks.begin(), blocks.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  int last_model = -2;
  for (const auto& [key, nodes] : blocks) {
    int model = key.first;
    if (model != last_model) {
      if (model >= 0 && static_cast<std::size_t>(model) < ps.models.size()) {
        const auto& [resp, label] = ps.models[model];
        out << (last_model == -2 ? "" : "\n") << "Model for '" << resp << "' (" << label << ")\n";
      }
      last_model = model;
    }
    bool with_tail = key.second == 0;
    std::size_t w = 4;
    for (const auto* n : nodes) w = std::max(w, n->name.size());
    std::vector<std::string> heads{"Mean", "SD", pct(ps.q_lo), pct(ps.q_hi)};
    if (with_tail) heads.push_back("tail-prob.");
    heads.push_back("GR-crit");
    heads.push_back("MCE/SD");
    out << "\n" << section_title(nodes.front()->kind) << ":\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(w), "");
    out << buf;
    for (const auto& h : heads) {
      std::snprintf(buf, sizeof buf, " %10s", h.c_str());
      out << buf;
    }
    out << '\n';
    for (const auto* n : nodes) {
      std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(w), n->name.c_str());
      out << buf;
      std::vector<std::string> cells{fmt(n->mean), fmt(n->sd), fmt(n->lo), fmt(n->hi)};
      if (with_tail) cells.push_back(fmt(n->tail));
      cells.push_back(n->gr_upper ? fmt(*n->gr_upper, 2) : "NA");
      cells.push_back(n->mcse_ratio ? fmt(*n->mcse_ratio, 4) : "NA");
      for (const auto& c : cells) {
        std::snprintf(buf, sizeof buf, " %10s", c.c_str());
        out << buf;
      }
      out << '\n';
    }
  }
  out << "\nMCMC settings:\n"
      << "Iterations = " << ps.first_iteration << ":" << ps.last_iteration << "\n"
      << "Sample size per chain = " << ps.per_chain << "\n"
      << "Thinning interval = " << ps.thin << "\n"
      << "Number of chains = " << ps.n_chains << "\n";
  if (ps.n_obs) out << "\nNumber of observations: " << ps.n_obs << "\n";
  if (ps.n_groups) out << "Number of groups:\n - " << ps.group_variable << ": " << ps.n_groups << "\n";
  if (missinfo && !ps.missinfo.empty()) {
    out << "\nNumber and proportion of complete cases:\n";
    out << "  lvlone: " << ps.complete_rows << " (" << fmt(100.0 * ps.complete_rows / std::max<std::size_t>(ps.n_obs, 1), 1)
        << "%)\n";
    if (ps.n_groups)
      out << "  " << ps.group_variable << ": " << ps.complete_groups << " ("
          << fmt(100.0 * ps.complete_groups / ps.n_groups, 1) << "%)\n";
    out << "\nNumber and proportion of missing values:\n";
    for (const auto& m : ps.missinfo)
      out << "  " << m.variable << " (" << m.level << "): " << m.n_missing << " ("
          << fmt(100.0 * m.n_missing / std::max<std::size_t>(m.n_units, 1), 1) << "%)\n";
  }
  for (const auto& w : ps.warnings) out << "\nWarning: " << w;
  if (!ps.warnings.empty()) out << '\n';
  return out.str();
}

std::string summary_json(const PosteriorSummary& ps) {
  using nlohmann::json;
  auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
  auto opt = [&](const std::optional<double>& x) { return x ? num(*x) : json(nullptr); };
  json nodes = json::array();
  for (const auto& n : ps.nodes)
    nodes.push_back({{"name", n.name},
                     {"tag", n.tag},
                     {"mean", num(n.mean)},
                     {"sd", num(n.sd)},
                     {"quantile_lo", num(n.lo)},
                     {"quantile_hi", num(n.hi)},
                     {"tail_prob", num(n.tail)},
                     {"gr_point", opt(n.gr_point)},
                     {"gr_upper", opt(n.gr_upper)},
                     {"mcse", opt(n.mcse)},
                     {"mcse_sd_ratio", opt(n.mcse_ratio)}});
  json mi = json::array();
  for (const auto& m : ps.missinfo)
    mi.push_back({{"variable", m.variable}, {"level", m.level}, {"n_missing", m.n_missing}, {"n_units", m.n_units}});
  json models = json::array();
  for (const auto& [r, l] : ps.models) models.push_back({{"response", r}, {"type", l}});
  json j = {{"nodes", nodes},
            {"quantiles", {ps.q_lo, ps.q_hi}},
            {"meta",
             {{"iterations", {ps.first_iteration, ps.last_iteration}},
              {"sample_size_per_chain", ps.per_chain},
              {"thin", ps.thin},
              {"n_chains", ps.n_chains},
              {"n_obs", ps.n_obs},
              {"groups", ps.n_groups ? json{{ps.group_variable, ps.n_groups}} : json::object()},
              {"complete_rows", ps.complete_rows},
              {"complete_groups", ps.complete_groups},
              {"models", models},
              {"missinfo", mi}}},
            {"warnings", ps.warnings}};
  return j.dump(2) + "\n";
}

}  // namespace jointgibbs
