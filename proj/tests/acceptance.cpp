// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "jointgibbs/densities.hpp"
#include "jointgibbs/diagnostics.hpp"
#include "jointgibbs/hyperpars.hpp"
#include "jointgibbs/model_graph.hpp"
#include "jointgibbs/model_types.hpp"
#include "jointgibbs/postprocess.hpp"
#include "jointgibbs/sampler.hpp"
#include "jointgibbs/samples.hpp"
#include "paper_data.hpp"
#include "support.hpp"

using namespace jointgibbs;
using namespace testsupport;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

ModelGraph graph(const std::string& formula, const Table& t, GraphOptions o = {},
                 std::optional<std::string> random = std::nullopt) {
  return build_model_graph({{formula, random}}, t.dataset(), o);
}

double log_sum_exp_vec(const std::vector<double>& v) {
  double m = *std::max_element(v.begin(), v.end()), s = 0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// Monte Carlo standard error of a posterior sd estimate, by batch means on
// squared deviations and the delta method.
double sd_se(const std::vector<std::vector<double>>& chains, double m, double s) {
  std::vector<std::vector<double>> sq;
  for (const auto& c : chains) {
    std::vector<double> d;
    for (double x : c) d.push_back((x - m) * (x - m));
    sq.push_back(std::move(d));
  }
  return batch_se(sq) / (2 * s);
}

// ---------------------------------------------------------------------------

void conjugate_oracle(Outcome& out) {
  const int n = 200, d = 5;
  std::mt19937_64 rng(101);
  std::normal_distribution<double> z;
  Eigen::MatrixXd X(n, d);
  Eigen::VectorXd y(n);
  const double beta[d] = {2.0, 0.5, -1.0, 0.25, 1.5};
  std::vector<std::vector<double>> cols(4, std::vector<double>(n));
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1;
    X(i, 1) = cols[0][i] = 10 + 3 * z(rng);
    X(i, 2) = cols[1][i] = z(rng);
    X(i, 3) = cols[2][i] = -5 + 0.5 * z(rng);
    X(i, 4) = cols[3][i] = 2 * z(rng);
    y(i) = X.row(i).dot(Eigen::Map<const Eigen::VectorXd>(beta, d)) + 1.3 * z(rng);
  }
  std::vector<double> yv(y.data(), y.data() + n);
  Table t;
  t.num("y", yv).num("x1", cols[0]).num("x2", cols[1]).num("x3", cols[2]).num("x4", cols[3]);
  auto g = graph("y ~ x1 + x2 + x3 + x4", t);
  McmcSettings st;
  st.n_chains = 3;
  st.n_iter = 5000;
  st.seed = 11;
  auto s = run_mcmc(g, st);

  // tau ~ Gamma(a, b) and a vague normal prior on beta: the marginal of beta
  // is multivariate t with nu = n + 2a - d, mean the OLS solution and
  // covariance (2b + SSR) / (nu - 2) (X'X)^-1
  const double a = 0.01, b = 0.01;
  Eigen::MatrixXd XtX = X.transpose() * X;
  Eigen::VectorXd bhat = XtX.ldlt().solve(X.transpose() * y);
  double ssr = (y - X * bhat).squaredNorm();
  double nu = n + 2 * a - d;
  Eigen::MatrixXd cov = (2 * b + ssr) / (nu - 2) * XtX.inverse();
  const char* names[d] = {"(Intercept)", "x1", "x2", "x3", "x4"};
  double worst = 0;
  for (int k = 0; k < d; ++k) {
    auto ch = per_chain(s, names[k]);
    auto all = draws(s, names[k]);
    double m = mean(all), sdv = sd(all), sd_true = std::sqrt(cov(k, k));
    double zm = std::fabs(m - bhat(k)) / batch_se(ch);
    double zs = std::fabs(sdv - sd_true) / sd_se(ch, m, sdv);
    worst = std::max({worst, zm, zs});
    out.require(zm < 3, std::string(names[k]) + " mean off by " + fmt(zm) + " MCSE");
    out.require(zs < 3, std::string(names[k]) + " sd off by " + fmt(zs) + " MCSE");
  }
  out.detail << "max deviation " << fmt(worst, 3) << " MCSE over 5 means and 5 sds";
}

void enumeration_oracle(Outcome& out) {
  // y gaussian on a binary x; row 6 has x missing
  std::vector<double> x{0, 0, 0, 0, 0, 0, NA, 1, 1, 1, 1, 1};
  std::vector<double> y{-0.4, 0.3, 0.1, -0.9, 0.6, 0.2, 0.9, 1.8, 2.4, 1.3, 2.2, 1.7};
  const std::size_t miss = 6, n = x.size();
  GraphOptions o;
  o.scale.mode = ScaleSpec::Mode::None;
  o.monitor.switches = {{"imps", true}};
  auto g = graph("y ~ x", Table().num("y", y).num("x", x), o);
  auto hp = default_hyperparameters();

  // p(y | X_k): beta integrated analytically, tau by quadrature on log tau
  auto log_marg_y = [&](double xk) {
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd yy(n);
    for (std::size_t i = 0; i < n; ++i) {
      X(i, 0) = 1;
      X(i, 1) = i == miss ? xk : x[i];
      yy(i) = y[i];
    }
    const double l0 = hp.norm.tau_reg, a = hp.norm_tau.shape_tau, b = hp.norm_tau.rate_tau;
    std::vector<double> terms;
    const double lo = -25, hi = 15;
    const int K = 40000;
    const double du = (hi - lo) / K;
    for (int k = 0; k <= K; ++k) {
      double u = lo + k * du, tau = std::exp(u);
      Eigen::MatrixXd Ln = tau * X.transpose() * X;
      Ln.diagonal().array() += l0;
      Eigen::VectorXd h = tau * X.transpose() * yy;
      Eigen::LLT<Eigen::MatrixXd> llt(Ln);
      double logdet = 2 * llt.matrixLLT().diagonal().array().log().sum();
      double ll = -0.5 * n * std::log(2 * M_PI) + 0.5 * n * u + std::log(l0) - 0.5 * logdet -
                  0.5 * (tau * yy.squaredNorm() - h.dot(llt.solve(h)));
      double lprior = a * std::log(b) - std::lgamma(a) + (a - 1) * u - b * tau + u;  // + Jacobian
      terms.push_back(ll + lprior + std::log(du));
    }
    return log_sum_exp_vec(terms);
  };
  // p(x_obs, x_miss = k): intercept-only logistic model, alpha by quadrature
  auto log_marg_x = [&](double xk) {
    const double prec = hp.binom.tau_reg;
    std::vector<double> terms;
    const double lo = -40, hi = 40;
    const int K = 80000;
    const double da = (hi - lo) / K;
    for (int k = 0; k <= K; ++k) {
      double al = lo + k * da, ll = 0;
      for (std::size_t i = 0; i < n; ++i) {
        double xi = i == miss ? xk : x[i];
        ll += xi == 1 ? log_sigmoid(al) : log_sigmoid(-al);
      }
      terms.push_back(ll + 0.5 * std::log(prec / (2 * M_PI)) - 0.5 * prec * al * al + std::log(da));
    }
    return log_sum_exp_vec(terms);
  };
  double l1 = log_marg_y(1) + log_marg_x(1), l0 = log_marg_y(0) + log_marg_x(0);
  double p1 = 1 / (1 + std::exp(l0 - l1));

  McmcSettings st;
  st.n_chains = 1;
  st.n_adapt = 1000;
  st.n_iter = 100000;
  st.seed = 5;
  auto s = run_mcmc(g, st);
  auto v = draws(s, "imp_x[7]");
  const auto& cats = g.data.column("x").categories;
  double hits = 0;
  for (double c : v) hits += cats[static_cast<int>(c) - 1] == "1";
  double phat = hits / v.size();
  double tv = std::fabs(phat - p1);
  out.require(v.size() == 100000, "expected 1e5 stored sweeps");
  out.require(tv < 0.02, "total variation " + fmt(tv));
  out.detail << "P(x=1) sampler " << fmt(phat) << " vs enumeration " << fmt(p1) << ", TV " << fmt(tv, 3);
}

void mar_recovery(Outcome& out) {
  const int n = 500;
  std::mt19937_64 rng(303);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u;
  std::vector<double> x1(n), x2(n), y(n), x1_obs(n);
  int n_miss = 0;
  for (int i = 0; i < n; ++i) {
    x2[i] = z(rng);
    x1[i] = 0.5 * x2[i] + z(rng);
    y[i] = 1 + 0.5 * x1[i] + x2[i] + z(rng);
    double pm = 1 / (1 + std::exp(-(-1.0 + 1.5 * x2[i])));  // missingness depends on x2 only
    bool m = u(rng) < pm;
    n_miss += m;
    x1_obs[i] = m ? NA : x1[i];
  }
  McmcSettings st;
  st.n_chains = 3;
  st.n_iter = 3000;
  st.seed = 21;
  auto mar = run_mcmc(graph("y ~ x1 + x2", Table().num("y", y).num("x1", x1_obs).num("x2", x2)), st);
  auto full = run_mcmc(graph("y ~ x1 + x2", Table().num("y", y).num("x1", x1).num("x2", x2)), st);
  const char* names[] = {"(Intercept)", "x1", "x2"};
  const double truth[] = {1.0, 0.5, 1.0};
  out.detail << "missing " << fmt(100.0 * n_miss / n, 3) << "%;";
  for (int k = 0; k < 3; ++k) {
    auto a = draws(mar, names[k]), b = draws(full, names[k]);
    double ma = mean(a), mb = mean(b), sa = sd(a), sb = sd(b);
    double ea = batch_se(per_chain(mar, names[k])), eb = batch_se(per_chain(full, names[k]));
    // the two posterior means differ by the information lost to missingness
    // plus Monte Carlo noise
    double tol = 2 * std::sqrt(std::max(sa * sa - sb * sb, 0.0) + ea * ea + eb * eb);
    out.require(std::fabs(ma - truth[k]) < 3 * sa, std::string(names[k]) + " more than 3 sd from truth");
    out.require(std::fabs(ma - mb) < tol, std::string(names[k]) + " differs from the complete-data fit");
    out.detail << " " << names[k] << " " << fmt(ma) << " (full " << fmt(mb) << ", tol " << fmt(tol, 2) << ")";
  }
}

void mixed_recovery(Outcome& out) {
  const int groups = 200, per = 10;
  std::mt19937_64 rng(404);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u;
  std::vector<double> id, x, y;
  std::vector<std::string> w;
  const char* lev[] = {"low", "mid", "high"};
  for (int g = 0; g < groups; ++g) {
    double b = z(rng);
    double lw = z(rng);
    int wk = lw < -0.5 ? 0 : (lw < 0.5 ? 1 : 2);
    bool wmiss = u(rng) < 0.15;
    for (int j = 0; j < per; ++j) {
      double xi = z(rng);
      id.push_back(g + 1);
      x.push_back(xi);
      w.push_back(wmiss ? "" : lev[wk]);
      y.push_back(1 + 0.5 * xi + 0.3 * wk + b + 0.5 * z(rng));
    }
  }
  GraphOptions o;
  o.types["w"].vtype = VType::Ordered;
  o.types["w"].levels = {"low", "mid", "high"};
  o.monitor.switches = {{"D_main", true}, {"gamma_other", true}};
  auto g = graph("y ~ x + w", Table().num("id", id).num("x", x).num("y", y).str("w", w), o, "~ 1 | id");
  McmcSettings st;
  st.n_chains = 3;
  st.n_iter = 1000;
  st.seed = 31;
  auto s = run_mcmc(g, st);
  auto d11 = draws(s, "D_y_id[1,1]");
  double md = mean(d11);
  out.require(!d11.empty(), "D_y_id[1,1] not stored");
  out.require(std::fabs(md - 1) < 0.25, "D11 mean " + fmt(md));
  int g1 = s.node_index("gamma_w[1]"), g2 = s.node_index("gamma_w[2]");
  out.require(g1 >= 0 && g2 >= 0, "cut points not stored");
  std::size_t violations = 0, checked = 0;
  for (const auto& c : s.chains)
    for (Eigen::Index r = 0; r < c.rows(); ++r, ++checked) {
      if (!(c(r, g1) < c(r, g2))) ++violations;
    }
  for (double v : d11)
    if (!(v > 0)) ++violations;

  // random intercept and slope: 2x2 covariance must stay PD
  GraphOptions o2;
  o2.monitor.switches = {{"D_main", true}};
  auto g2m = graph("y ~ x", Table().num("id", id).num("x", x).num("y", y), o2, "~ x | id");
  st.n_iter = 500;
  auto s2 = run_mcmc(g2m, st);
  int a = s2.node_index("D_y_id[1,1]"), bb = s2.node_index("D_y_id[1,2]"), cc = s2.node_index("D_y_id[2,2]");
  out.require(a >= 0 && bb >= 0 && cc >= 0, "2x2 D not stored");
  std::size_t pd_checked = 0;
  for (const auto& c : s2.chains)
    for (Eigen::Index r = 0; r < c.rows(); ++r, ++pd_checked)
      if (!(c(r, a) > 0 && c(r, a) * c(r, cc) - c(r, bb) * c(r, bb) > 0)) ++violations;
  out.require(violations == 0, std::to_string(violations) + " invariant violations");
  out.detail << "mean D11 " << fmt(md) << "; gamma increasing and D PD at all " << checked << " + " << pd_checked
             << " stored iterations";
}

void weibull_recovery(Outcome& out) {
  const int n = 500;
  const double s_true = 1.5, beta[] = {0.5, 0.8, -0.6};
  std::mt19937_64 rng(505);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u;
  std::vector<double> x1(n), x2(n), t_event(n), uc(n);
  for (int i = 0; i < n; ++i) {
    x1[i] = z(rng);
    x2[i] = 2 * u(rng) - 1;
    double eta = beta[0] + beta[1] * x1[i] + beta[2] * x2[i];
    // S(t) = exp(-(r t)^s) with log r = -eta
    double e = -std::log(u(rng));
    t_event[i] = std::exp(eta) * std::pow(e, 1 / s_true);
    uc[i] = u(rng);
  }
  // exponential censoring, rate tuned to censor 30% of subjects
  auto frac = [&](double rate) {
    int c = 0;
    for (int i = 0; i < n; ++i) c += -std::log(uc[i]) / rate < t_event[i];
    return double(c) / n;
  };
  double lo = 1e-4, hi = 100;
  for (int it = 0; it < 200; ++it) {
    double mid = std::sqrt(lo * hi);
    (frac(mid) < 0.3 ? lo : hi) = mid;
  }
  double rate = std::sqrt(lo * hi);
  std::vector<double> time(n), status(n);
  for (int i = 0; i < n; ++i) {
    double c = -std::log(uc[i]) / rate;
    time[i] = std::min(c, t_event[i]);
    status[i] = t_event[i] <= c;
  }
  auto g = graph("Surv(time, status) ~ x1 + x2",
                 Table().num("time", time).num("status", status).num("x1", x1).num("x2", x2));
  McmcSettings st;
  st.n_chains = 3;
  st.n_iter = 2000;
  st.seed = 41;
  auto s = run_mcmc(g, st);
  const char* names[] = {"(Intercept)", "x1", "x2"};
  out.detail << "censored " << fmt(100 * (1 - mean(status)), 3) << "%;";
  for (int k = 0; k < 3; ++k) {
    auto d = draws(s, names[k]);
    double m = mean(d), sdv = sd(d);
    out.require(std::fabs(m - beta[k]) < 3 * sdv, std::string(names[k]) + " " + fmt(m) + " vs " + fmt(beta[k]));
    out.detail << " " << names[k] << " " << fmt(m) << " +- " << fmt(sdv, 2) << " (true " << beta[k] << ")";
  }
  auto sh = draws(s, "shape_time");
  if (!sh.empty()) out.detail << "; shape " << fmt(mean(sh)) << " (true 1.5)";
}

void diagnostics_formulas(Outcome& out) {
  std::vector<std::vector<double>> hand{{1, 2, 3, 4}, {2, 3, 4, 5}};
  auto gr = gelman_rubin(hand);
  // oracle: chain means 2.5 and 3.5, chain variances 5/3
  double n = 4, W = 5.0 / 3.0, B = n * 0.5, V = (n - 1) / n * W + B / n;
  out.require(std::fabs(gr.W - W) < 1e-12 && std::fabs(gr.B - B) < 1e-12 && std::fabs(gr.V - V) < 1e-12,
              "W/B/V mismatch");
  out.require(std::fabs(gr.uncorrected - std::sqrt(V / W)) < 1e-12, "uncorrected PSRF mismatch");
  out.require(std::fabs(V - 1.75) < 1e-15 && std::fabs(V / W - 1.05) < 1e-15, "hand oracle");
  // df-corrected value from the same oracle: chain variances are equal, so
  // var(W) = 0, var(V) = var(B)/n^2 = (2 B^2 / (m-1)) / n^2
  double var_V = 2 * B * B / 1.0 / (n * n), df = 2 * V * V / var_V, adj = (df + 3) / (df + 1);
  double point = std::sqrt(adj * ((n - 1) / n + B / (n * W)));
  out.require(std::fabs(gr.point - point) < 1e-12, "df-corrected PSRF mismatch");

  std::mt19937_64 rng(606);
  std::normal_distribution<double> z;
  std::vector<double> c1(10000), c2(10000);
  for (auto& v : c1) v = z(rng);
  for (auto& v : c2) v = z(rng);
  auto iid = gelman_rubin({c1, c2});
  // the point estimate is 1 + O(1/n) noise and can sit a few 1e-5 below 1,
  // so the bound applies at the two decimals the PSRF is reported with
  double shown = std::round(iid.point * 100) / 100;
  out.require(shown >= 1.0 && shown <= 1.02, "iid PSRF " + fmt(iid.point, 8));
  auto e = mc_error({c1});
  double target = sd(c1) / std::sqrt(10000.0);
  out.require(std::fabs(e.mcse / target - 1) < 0.3, "MCSE " + fmt(e.mcse) + " vs " + fmt(target));

  std::vector<double> t1{-1, 2, 3, 4}, t2{1, 2, 3, 4}, t3{-2, -1, 1, 2};
  out.require(tail_probability(t1) == 0.5 && tail_probability(t2) == 0.0 && tail_probability(t3) == 1.0,
              "tail probabilities");
  out.detail << "uncorrected " << fmt(gr.uncorrected, 12) << ", corrected " << fmt(gr.point, 12) << "; iid PSRF "
             << fmt(iid.point, 8) << "; MCSE/(sd/sqrt n) " << fmt(e.mcse / target);
}

void paper_tables(Outcome& out) {
  using Labels = std::vector<std::pair<std::string, std::string>>;
  GraphOptions a;
  a.models = {{"WC", "glm_gamma_inverse"}, {"bili", "lognorm"}};
  a.types["smoke"].vtype = VType::Ordered;
  a.types["smoke"].levels = {"never", "former", "current"};
  auto ga = build_model_graph({{"SBP ~ age + gender + WC + alc + bili + occup + smoke"}}, mod7a_table().dataset(), a);
  Labels want_a{{"SBP", "glm_gaussian_identity"}, {"alc", "glm_binomial_logit"}, {"occup", "mlogit"},
                {"bili", "lognorm"},              {"smoke", "clm"},                {"WC", "glm_gamma_inverse"}};
  out.require(ga.model_labels() == want_a, "mod7a table");

  GraphOptions b;
  b.no_model = {"age"};
  b.types["SMOKE"].vtype = VType::Ordered;
  b.types["SMOKE"].levels = {"never smoked", "smoked until pregnant", "continued smoking"};
  auto gb = build_model_graph({{"bmi ~ GESTBIR + ETHN + HEIGHT_M + SMOKE + hc + MARITAL + age", "~ age | ID"}},
                              mod7b_table().dataset(), b);
  Labels want_b{{"bmi", "glmm_gaussian_identity"}, {"hc", "lmm"},
                {"SMOKE", "clm"},                  {"MARITAL", "mlogit"},
                {"ETHN", "glm_binomial_logit"},    {"HEIGHT_M", "lm"}};
  out.require(gb.model_labels() == want_b, "mod7b table");
  std::vector<CovariateCandidate> cand;
  for (std::size_t i = 0; i < gb.vars.size(); ++i) {
    const auto& v = gb.vars[i];
    if (v.model > 0) cand.push_back({v.name, v.level2, v.meta.n_missing, i});
  }
  out.require(order_submodels(cand) == std::vector<std::string>{"hc", "SMOKE", "MARITAL", "ETHN", "HEIGHT_M"},
              "mod7b order");

  auto h = default_hyperparameters();
  bool defaults = true;
  for (auto* r : {&h.norm, &h.gamma, &h.beta, &h.binom, &h.poisson, &h.multinomial, &h.ordinal})
    defaults &= r->mu_reg == 0 && r->tau_reg == 1e-4;
  for (auto* p : {&h.norm_tau, &h.gamma_tau, &h.beta_tau}) defaults &= p->shape_tau == 0.01 && p->rate_tau == 0.01;
  defaults &= h.mu_delta_ordinal == 0 && h.tau_delta_ordinal == 1e-4;
  defaults &= h.shape_diag_RinvD == 0.01 && h.rate_diag_RinvD == 0.001 && h.KinvD(1) == 2.0 && h.KinvD(3) == 4.0;
  defaults &= h.mu_reg_surv == 0 && h.tau_reg_surv == 0.001;
  out.require(defaults, "default hyper-parameters");

  auto tiny = graph("y ~ x", Table().num("y", {1, 2, 3, 4.5, 2}).num("x", {0.3, 1, 2, 2.5, 1.1}));
  struct Block {
    long adapt, iter, thin, first, last;
    std::size_t size;
  };
  for (Block bl : {Block{100, 100, 1, 101, 200, 100}, Block{10, 100, 1, 11, 110, 100}, Block{100, 500, 10, 110, 600, 50}}) {
    McmcSettings st;
    st.n_adapt = bl.adapt;
    st.n_iter = bl.iter;
    st.thin = bl.thin;
    auto s = run_mcmc(tiny, st);
    auto ps = summarize(s, {});
    bool ok = s.n_chains() == 3 && s.n_stored() == bl.size && s.iterations.front() == bl.first &&
              s.iterations.back() == bl.last && ps.per_chain == bl.size;
    std::string txt = summary_text(ps);
    ok &= txt.find("Iterations = " + std::to_string(bl.first) + ":" + std::to_string(bl.last)) != std::string::npos;
    ok &= txt.find("Sample size per chain = " + std::to_string(bl.size)) != std::string::npos;
    out.require(ok, "iteration block " + std::to_string(bl.first) + ":" + std::to_string(bl.last));
  }
  out.detail << "mod7a/mod7b tables, mod7b order, defaults, 101:200 / 11:110 / 110:600";
}

void determinism(Outcome& out) {
  std::mt19937_64 rng(707);
  std::normal_distribution<double> z;
  std::vector<double> y, x, w;
  std::vector<std::string> c;
  for (int i = 0; i < 150; ++i) {
    double xi = z(rng);
    x.push_back(i % 6 == 0 ? NA : xi);
    w.push_back(i % 9 == 4 ? NA : std::exp(0.5 * xi + 0.3 * z(rng)));
    c.push_back(i % 8 == 3 ? "" : (xi + z(rng) > 0 ? "p" : "q"));
    y.push_back(xi + z(rng));
  }
  GraphOptions o;
  o.monitor.switches = {{"imps", true}, {"other_models", true}};
  o.models = {{"w", "lognorm"}};
  auto g = graph("y ~ x + w + c", Table().num("y", y).num("x", x).num("w", w).str("c", c), o);
  McmcSettings st;
  st.n_chains = 4;
  st.n_iter = 300;
  st.seed = 2024;
  auto d1 = scratch_dir("acc_det1"), d4 = scratch_dir("acc_det4");
  st.threads = 1;
  write_chain_csvs(run_mcmc(g, st), d1.string());
  st.threads = 4;
  write_chain_csvs(run_mcmc(g, st), d4.string());
  std::size_t bytes = 0;
  for (int k = 1; k <= 4; ++k) {
    std::string f = "chain" + std::to_string(k) + ".csv";
    auto a = read_file(d1 / f), b = read_file(d4 / f);
    out.require(!a.empty() && a == b, f + " differs");
    bytes += a.size();
  }
  out.detail << "4 chain CSVs (" << bytes << " bytes) identical with 1 and 4 threads";
}

void truncation(Outcome& out) {
  std::mt19937_64 rng(808);
  std::normal_distribution<double> z;
  std::vector<double> y, u, x;
  for (int i = 0; i < 200; ++i) {
    double xi = z(rng);
    double ui = std::fabs(0.15 + 0.3 * z(rng)) + 1e-3;  // many values close to zero
    x.push_back(xi);
    u.push_back(i % 3 == 0 ? NA : ui);
    y.push_back(2 + 0.5 * std::log(ui) + xi + 0.5 * z(rng));
  }
  GraphOptions o;
  o.trunc["u"] = Truncation{1e-5, INFINITY};
  o.monitor.switches = {{"imps", true}};
  auto g = graph("y ~ log(u) + x", Table().num("y", y).num("u", u).num("x", x), o);
  McmcSettings st;
  st.n_chains = 1;
  st.n_iter = 10000;
  st.seed = 51;
  auto s = run_mcmc(g, st);
  std::size_t stored = 0, bad = 0;
  double smallest = INFINITY;
  for (std::size_t k = 0; k < s.nodes.size(); ++k) {
    if (s.nodes[k].kind != NodeKind::Imp) continue;
    for (Eigen::Index r = 0; r < s.chains[0].rows(); ++r) {
      double v = s.chains[0](r, k);
      ++stored;
      smallest = std::min(smallest, v);
      if (!(v >= 1e-5) || !std::isfinite(v)) ++bad;
    }
  }
  out.require(stored == 67u * 10000u, "expected 67 x 1e4 stored imputations, got " + std::to_string(stored));
  out.require(bad == 0, std::to_string(bad) + " imputations below the bound");
  out.detail << stored << " stored imputations, smallest " << fmt(smallest, 3) << ", violations " << bad;
}

void export_integrity(Outcome& out) {
  std::mt19937_64 rng(909);
  std::normal_distribution<double> z;
  std::vector<double> y, x;
  std::vector<std::string> c;
  for (int i = 0; i < 80; ++i) {
    double xi = z(rng);
    x.push_back(i % 5 == 2 ? NA : xi);
    c.push_back(i % 7 == 0 ? "" : (xi + z(rng) > 0 ? "a" : (z(rng) > 0 ? "b" : "c")));
    y.push_back(xi + z(rng));
  }
  GraphOptions o;
  o.monitor.switches = {{"imps", true}};
  auto g = graph("y ~ x + c", Table().num("y", y).num("x", x).str("c", c), o);
  McmcSettings st;
  st.n_iter = 1000;
  st.seed = 61;
  auto s = run_mcmc(g, st);
  const long minspace = 50;
  auto mi = get_mi_dat(s, g, 10, true, std::nullopt, minspace, 2019);
  const auto& d = mi.data;
  const std::size_t n = g.n_rows();
  out.require(d.n_rows() == 11 * n, "row count");
  out.require(mi.picks.size() == 10, "pick count");
  const auto& xc = d.column("x");
  const auto& cc = d.column("c");
  std::size_t mismatches = 0, imputed_cells = 0;
  for (std::size_t k = 1; k <= 10; ++k)
    for (std::size_t r = 0; r < n; ++r) {
      std::size_t rr = k * n + r;
      if (!xc.missing[r] && xc.numbers[rr] != xc.numbers[r]) ++mismatches;
      if (!cc.missing[r] && cc.codes[rr] != cc.codes[r]) ++mismatches;
    }
  for (std::size_t j = 0; j < s.nodes.size(); ++j) {
    const auto& nd = s.nodes[j];
    if (nd.kind != NodeKind::Imp) continue;
    for (std::size_t k = 0; k < 10; ++k) {
      const auto& p = mi.picks[k];
      std::size_t row = std::find(s.iterations.begin(), s.iterations.end(), p.iteration) - s.iterations.begin();
      double stored = s.chains[p.chain](row, j);
      for (std::size_t r : nd.rows) {
        std::size_t rr = (k + 1) * n + r;
        double got = nd.var == "x" ? xc.numbers[rr] : cc.codes[rr] + 1.0;
        ++imputed_cells;
        if (got != stored) ++mismatches;
      }
    }
  }
  long closest = std::numeric_limits<long>::max();
  for (std::size_t a = 0; a < mi.picks.size(); ++a)
    for (std::size_t b = a + 1; b < mi.picks.size(); ++b)
      closest = std::min(closest, std::labs(mi.picks[a].iteration - mi.picks[b].iteration));
  out.require(mismatches == 0, std::to_string(mismatches) + " mismatching cells");
  out.require(closest >= minspace, "picks " + std::to_string(closest) + " apart");
  out.detail << imputed_cells << " imputed cells traced to the sample store; closest picks " << closest
             << " iterations apart (minspace " << minspace << ")";
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<void(Outcome&)> run;
  };
  std::vector<Criterion> criteria{
      {"conjugate oracle", conjugate_oracle},   {"enumeration oracle", enumeration_oracle},
      {"MAR recovery", mar_recovery},           {"mixed-model recovery", mixed_recovery},
      {"Weibull survival", weibull_recovery},   {"diagnostics formulas", diagnostics_formulas},
      {"paper-table conformance", paper_tables}, {"determinism", determinism},
      {"truncation safety", truncation},        {"export integrity", export_integrity},
  };
  int failed = 0, k = 0;
  for (auto& c : criteria) {
    ++k;
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << k << " " << c.name << " (" << fmt(secs, 3) << " s): "
              << o.detail.str() << std::endl;
  }
  return failed ? 1 : 0;
}
