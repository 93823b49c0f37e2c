#include <doctest.h>

#include <cmath>
#include <set>

#include "jointgibbs/error.hpp"
#include "jointgibbs/postprocess.hpp"
#include "support.hpp"

using namespace jointgibbs;
using testsupport::NA;

namespace {

// Sample store with fixed coefficient draws for a given graph.
McmcSamples fixed_draws(const ModelGraph& g, const std::vector<std::vector<double>>& per_draw) {
  McmcSamples s;
  for (auto& d : monitored_nodes(g))
    if (d.kind == NodeKind::Coef) s.nodes.push_back(d);
  Eigen::MatrixXd m(per_draw.size(), s.nodes.size());
  for (std::size_t r = 0; r < per_draw.size(); ++r)
    for (std::size_t k = 0; k < s.nodes.size(); ++k) m(r, k) = per_draw[r][k];
  s.chains.push_back(m);
  for (std::size_t r = 0; r < per_draw.size(); ++r) s.iterations.push_back(static_cast<long>(r + 1));
  return s;
}

testsupport::Table binary_table() {
  std::vector<double> x, y;
  for (int i = 0; i < 40; ++i) {
    x.push_back(1 + i % 50);
    y.push_back((i * 7) % 3 == 0);
  }
  return testsupport::Table().num("y", y).num("x", x);
}

ModelGraph graph(const std::string& f, const testsupport::Table& t, GraphOptions o = {}) {
  return build_model_graph({{f}}, t.dataset(), o);
}

}  // namespace

TEST_CASE("logistic prediction at eta = 0") {
  auto g = graph("y ~ x", binary_table());
  auto s = fixed_draws(g, {{0.0, 0.0}, {0.0, 0.0}});
  auto nd = parse_csv("x\n3\n10\n");
  auto r = predict(s, g, nd, PredictType::Response);
  CHECK(r.values(0, 0) == doctest::Approx(0.5));
  CHECK(r.values(1, 0) == doctest::Approx(0.5));
  auto l = predict(s, g, nd, PredictType::Link);
  CHECK(l.values(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("gaussian link equals response, single draw collapses the interval") {
  auto t = testsupport::Table().num("y", {1, 2, 3, 5}).num("x", {0, 1, 2, 3.5});
  auto g = graph("y ~ x", t);
  auto s = fixed_draws(g, {{1.0, 2.0}});
  auto nd = parse_csv("x\n1.5\n");
  auto a = predict(s, g, nd, PredictType::Link), b = predict(s, g, nd, PredictType::Response);
  CHECK(a.values(0, 0) == doctest::Approx(4.0));
  CHECK(a.values == b.values);
  CHECK(a.values(0, 1) == a.values(0, 0));
  CHECK(a.values(0, 2) == a.values(0, 0));
  CHECK_THROWS_AS(predict(s, g, parse_csv("x\nNA\n"), PredictType::Link), DataError);
  CHECK_THROWS_AS(predict(s, g, nd, PredictType::Prob), ConfigError);
}

TEST_CASE("prediction grids") {
  std::vector<double> age, h, y;
  std::vector<std::string> sex;
  for (int i = 0; i < 50; ++i) {
    age.push_back(1 + i);
    h.push_back(160 + i % 7);
    y.push_back(i * 0.1);
    sex.push_back(i % 2 ? "f" : "m");
  }
  auto t = testsupport::Table().num("y", y).num("age", age).num("HEIGHT_M", h).str("sex", sex);
  auto g = graph("y ~ age + HEIGHT_M + sex", t);
  auto grid = pred_df(g, "~ age");
  REQUIRE(grid.n_rows() == 100);
  CHECK(grid.column("age").numbers.front() == 1.0);
  CHECK(grid.column("age").numbers.back() == 50.0);
  std::set<double> hs(grid.column("HEIGHT_M").numbers.begin(), grid.column("HEIGHT_M").numbers.end());
  CHECK(hs.size() == 1);
  auto cross = pred_df(g, "~ age", 100, {{"HEIGHT_M", {"160", "175"}}});
  CHECK(cross.n_rows() == 200);
  auto byfac = pred_df(g, "~ sex");
  CHECK(byfac.n_rows() == 2);

  auto flat = testsupport::Table().num("y", {1, 2, 3}).num("c", {4, 4, 4}).num("x", {1, 2, 4});
  auto g2 = graph("y ~ x + c", flat);
  CHECK(pred_df(g2, "~ c").n_rows() == 1);
}

TEST_CASE("multiply imputed datasets") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> z;
  std::vector<double> y, x, w;
  std::vector<std::string> c;
  for (int i = 0; i < 60; ++i) {
    double xi = z(rng);
    x.push_back(i % 5 == 0 ? NA : xi);
    c.push_back(i % 7 == 1 ? "" : (xi + z(rng) > 0 ? "yes" : "no"));
    y.push_back(xi + z(rng));
  }
  GraphOptions o;
  o.monitor.switches = {{"imps", true}};
  auto g = graph("y ~ x + c", testsupport::Table().num("y", y).num("x", x).str("c", c), o);
  McmcSettings st;
  st.n_iter = 10;
  st.n_adapt = 10;
  st.n_chains = 2;
  auto s = run_mcmc(g, st);

  SUBCASE("m = 0") {
    CHECK(get_mi_dat(s, g, 0, true).data.n_rows() == 60);
    CHECK(get_mi_dat(s, g, 0, false).data.n_rows() == 0);
  }
  SUBCASE("minspace holds over many seeds") {
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
      auto st2 = get_mi_dat(s, g, 2, false, std::nullopt, 3, seed);
      REQUIRE(st2.picks.size() == 2);
      CHECK(std::abs(st2.picks[0].iteration - st2.picks[1].iteration) >= 3);
    }
    CHECK_THROWS_AS(get_mi_dat(s, g, 5, true, std::nullopt, 3, 1), ConfigError);
  }
  SUBCASE("observed cells agree across copies") {
    auto mi = get_mi_dat(s, g, 3, true, std::nullopt, 2, 7);
    const auto& d = mi.data;
    CHECK(d.n_rows() == 4 * 60);
    CHECK(d.column(0).name == "Imputation_");
    CHECK(d.column(d.n_cols() - 1).name == ".rownr");
    const auto& xc = d.column("x");
    const auto& cc = d.column("c");
    for (std::size_t r = 0; r < 60; ++r)
      for (int k = 1; k <= 3; ++k) {
        std::size_t rr = k * 60 + r;
        CHECK_FALSE(xc.missing[rr]);
        CHECK_FALSE(cc.missing[rr]);
        if (!xc.missing[r]) CHECK(xc.numbers[rr] == xc.numbers[r]);
        if (!cc.missing[r]) CHECK(cc.codes[rr] == cc.codes[r]);
      }
  }
  SUBCASE("imputed values must be monitored") {
    GraphOptions none;
    auto g2 = graph("y ~ x + c", testsupport::Table().num("y", y).num("x", x).str("c", c), none);
    auto s2 = run_mcmc(g2, st);
    CHECK_THROWS_AS(get_mi_dat(s2, g2, 2, true, std::nullopt, 1, 1), ConfigError);
  }
}

TEST_CASE("plot data") {
  auto t = testsupport::Table().num("y", {1, 2, 3, 5, 4}).num("x", {0, 1, 2, 3.5, 2});
  auto g = graph("y ~ x", t);
  McmcSamples s;
  s.nodes = monitored_nodes(g);
  for (int c = 0; c < 2; ++c) s.chains.push_back(Eigen::MatrixXd::Random(3, s.nodes.size()));
  s.iterations = {1, 2, 3};
  SubsetSpec one;
  one.selection = MonitorSpec{{{"analysis_main", false}}, {"x"}};
  auto tr = plot_data(s, g, PlotKind::Trace, one);
  CHECK(tr.table.n_rows() == 6);
  auto imp = plot_data(s, g, PlotKind::ImpDistr);
  for (std::size_t r = 0; r < imp.table.n_rows(); ++r) CHECK(imp.table.column("series").categories.size() == 1);
}

TEST_CASE("kernel density integrates to one") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z;
  std::vector<double> x(3000);
  for (auto& v : x) v = z(rng);
  auto k = kernel_density(x);
  REQUIRE(k.x.size() == 512);
  double area = 0;
  for (std::size_t i = 1; i < k.x.size(); ++i) area += 0.5 * (k.y[i] + k.y[i - 1]) * (k.x[i] - k.x[i - 1]);
  CHECK(area == doctest::Approx(1.0).epsilon(0.01));
  // Silverman: 0.9 min(sd, IQR/1.34) n^(-1/5)
  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  double iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
  double bw = 0.9 * std::min(testsupport::sd(x), iqr / 1.34) * std::pow(3000.0, -0.2);
  CHECK(k.bandwidth == doctest::Approx(bw));
}
