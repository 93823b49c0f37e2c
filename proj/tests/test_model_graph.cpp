#include <doctest.h>

#include <algorithm>

#include "jointgibbs/error.hpp"
#include "jointgibbs/hyperpars.hpp"
#include "jointgibbs/model_graph.hpp"
#include "jointgibbs/model_types.hpp"
#include "jointgibbs/monitor.hpp"
#include "paper_data.hpp"

using namespace jointgibbs;
using Labels = std::vector<std::pair<std::string, std::string>>;

namespace {

GraphOptions mod7a_options() {
  GraphOptions o;
  o.models = {{"WC", "glm_gamma_inverse"}, {"bili", "lognorm"}};
  o.types["smoke"].vtype = VType::Ordered;
  o.types["smoke"].levels = {"never", "former", "current"};
  return o;
}

GraphOptions mod7b_options() {
  GraphOptions o;
  o.no_model = {"age"};
  o.types["SMOKE"].vtype = VType::Ordered;
  o.types["SMOKE"].levels = {"never smoked", "smoked until pregnant", "continued smoking"};
  return o;
}

const SubModel& model_for(const ModelGraph& g, const std::string& resp) {
  for (const auto& m : g.models)
    if (m.response == resp) return m;
  FAIL("no sub-model for " << resp);
  return g.models.front();
}

std::vector<std::string> column_names(const std::vector<ColumnRecipe>& cols) {
  std::vector<std::string> out;
  for (const auto& c : cols) out.push_back(c.name);
  return out;
}

}  // namespace

TEST_CASE("select_model_type by variable type and level") {
  VariableMeta m;
  m.vtype = VType::Binary;
  CHECK(model_type_label(select_model_type(m, false), false) == "glm_binomial_logit");
  m.vtype = VType::Ordered;
  CHECK(model_type_label(select_model_type(m, false), false) == "clm");
  m.vtype = VType::Unordered;
  CHECK(model_type_label(select_model_type(m, false), false) == "mlogit");
  m.vtype = VType::Continuous;
  CHECK(model_type_label(select_model_type(m, false), false) == "lm");
  CHECK(model_type_label(select_model_type(m, true), false) == "lmm");
  m.vtype = VType::Binary;
  CHECK(model_type_label(select_model_type(m, true), false) == "glmm_binomial_logit");
  m.vtype = VType::Ordered;
  CHECK_THROWS_AS(select_model_type(m, true), ConfigError);
  m.vtype = VType::Unordered;
  CHECK_THROWS_AS(select_model_type(m, true), ConfigError);
}

TEST_CASE("model type names") {
  CHECK(parse_model_type("glm_gamma_inverse") == ModelType{Family::Gamma, Link::Inverse, false});
  CHECK(parse_model_type("glmm_binomial_logit") == ModelType{Family::Binomial, Link::Logit, true});
  CHECK(parse_model_type("lognorm").family == Family::Lognorm);
  CHECK(parse_model_type("beta").family == Family::Beta);
  CHECK_THROWS_AS(parse_model_type("glm_poisson_logit"), ConfigError);
  CHECK_THROWS_AS(parse_model_type("clmm"), ConfigError);
}

TEST_CASE("mod7a assignment table") {
  auto ds = testsupport::mod7a_table().dataset();
  auto g = build_model_graph({{"SBP ~ age + gender + WC + alc + bili + occup + smoke"}}, ds, mod7a_options());
  Labels want{{"SBP", "glm_gaussian_identity"}, {"alc", "glm_binomial_logit"}, {"occup", "mlogit"},
              {"bili", "lognorm"},              {"smoke", "clm"},                {"WC", "glm_gamma_inverse"}};
  CHECK(g.model_labels() == want);
}

TEST_CASE("mod7b assignment table and order") {
  auto ds = testsupport::mod7b_table().dataset();
  auto g = build_model_graph({{"bmi ~ GESTBIR + ETHN + HEIGHT_M + SMOKE + hc + MARITAL + age", "~ age | ID"}}, ds,
                             mod7b_options());
  Labels want{{"bmi", "glmm_gaussian_identity"}, {"hc", "lmm"},    {"SMOKE", "clm"},
              {"MARITAL", "mlogit"},             {"ETHN", "glm_binomial_logit"}, {"HEIGHT_M", "lm"}};
  CHECK(g.model_labels() == want);
  // level-1 variables never enter a level-2 model
  for (const auto& m : g.models) {
    if (!m.level2) continue;
    for (const auto& c : m.X)
      for (int v : c.deps) CHECK(g.vars[v].level2);
  }
  CHECK(model_for(g, "hc").type.mixed);
}

TEST_CASE("order_submodels") {
  std::vector<CovariateCandidate> c{{"SMOKE", true, 24, 3}, {"hc", false, 40, 4}, {"ETHN", true, 6, 1},
                                    {"MARITAL", true, 14, 5}, {"HEIGHT_M", true, 4, 2}};
  CHECK(order_submodels(c) == std::vector<std::string>{"hc", "SMOKE", "MARITAL", "ETHN", "HEIGHT_M"});
  std::vector<CovariateCandidate> tie{{"b", false, 5, 2}, {"a", false, 5, 1}};
  CHECK(order_submodels(tie) == std::vector<std::string>{"a", "b"});
}

TEST_CASE("complete single-level data gives only the analysis model") {
  auto ds = testsupport::Table().num("y", {1, 2, 3, 4.5}).num("x", {0.5, 1, 3, 2}).num("z", {3, 1, 2, 5}).dataset();
  auto g = build_model_graph({{"y ~ x + z"}}, ds, {});
  CHECK(g.models.size() == 1);
  CHECK(g.covariate_order().empty());
}

TEST_CASE("functions of a variable add its main effect to imputation models") {
  auto ds = testsupport::mod7a_table().dataset();
  auto g = build_model_graph({{"SBP ~ log(age) + gender + I(bili^2) + I(bili^3)"}}, ds, {});
  CHECK(column_names(model_for(g, "bili").X) == std::vector<std::string>{"(Intercept)", "age", "genderfemale"});
  auto analysis = column_names(g.models[0].X);
  CHECK(std::find(analysis.begin(), analysis.end(), "age") == analysis.end());
}

TEST_CASE("auxiliary function terms are used as given") {
  auto ds = testsupport::mod7a_table().dataset();
  GraphOptions o;
  o.auxvars = "~ I(WC^2)";
  auto g = build_model_graph({{"SBP ~ age + gender + bili"}}, ds, o);
  auto cols = column_names(model_for(g, "bili").X);
  CHECK(std::find(cols.begin(), cols.end(), "I(WC^2)") != cols.end());
  CHECK_NOTHROW(model_for(g, "WC"));
  CHECK(column_names(g.models[0].X) == std::vector<std::string>{"(Intercept)", "age", "genderfemale", "bili"});
}

TEST_CASE("dynamic design columns") {
  auto ds = testsupport::Table()
                .num("y", {1, 2, 3, 4, 5})
                .num("creat", {1, 2, 1, 2, 1.5})
                .num("albu", {4, testsupport::NA, 4.5, 3.9, 4.2})
                .str("gender", {"male", "female", "male", "male", "female"})
                .num("age", {30, 40, 50, 60, 55})
                .dataset();
  auto g = build_model_graph({{"y ~ gender:age + I(creat/albu^2)"}}, ds, {});
  const auto& X = g.models[0].X;
  auto find = [&](const std::string& n) -> const ColumnRecipe& {
    for (const auto& c : X)
      if (c.name == n) return c;
    FAIL("missing column " << n);
    return X.front();
  };
  CHECK_FALSE(find("(Intercept)").dynamic);
  CHECK_FALSE(find("genderfemale:age").dynamic);
  const auto& d = find("I(creat/albu^2)");
  CHECK(d.dynamic);
  std::set<std::string> deps;
  for (int v : d.deps) deps.insert(g.vars[v].name);
  CHECK(deps == std::set<std::string>{"creat", "albu"});
}

TEST_CASE("errors") {
  auto ds = testsupport::Table().num("y", {1, 2, 3}).num("x", {1, testsupport::NA, 3.5}).dataset();
  CHECK_THROWS_AS(build_model_graph({{"y ~ nosuch"}}, ds, {}), ConfigError);
  GraphOptions o;
  o.no_model = {"x"};
  CHECK_THROWS_AS(build_model_graph({{"y ~ x"}}, ds, o), ConfigError);
}

TEST_CASE("default hyper-parameters") {
  auto h = default_hyperparameters();
  CHECK(h.norm.mu_reg == 0.0);
  CHECK(h.norm.tau_reg == 1e-4);
  CHECK(h.norm_tau.shape_tau == 0.01);
  CHECK(h.norm_tau.rate_tau == 0.01);
  CHECK(h.shape_diag_RinvD == 0.01);
  CHECK(h.rate_diag_RinvD == 0.001);
  CHECK(h.KinvD(2) == 3.0);
  CHECK(h.mu_reg_surv == 0.0);
  CHECK(h.tau_reg_surv == 0.001);
  h.set("norm", "tau_reg_norm", 0.5);
  CHECK(h.norm.tau_reg == 0.5);
  CHECK_THROWS_AS(h.set("norm", "tau_reg_norm", -1), ConfigError);
  CHECK_THROWS_AS(h.set("norm", "nonsense", 1), ConfigError);
}

TEST_CASE("monitor keyword algebra") {
  MonitorSpec s;
  auto leaves = resolve_leaves(s);
  CHECK(leaves.count("betas"));
  CHECK(leaves.count("sigma_main"));
  CHECK_FALSE(leaves.count("imps"));
  s.switches = {{"analysis_random", true}, {"ranef_main", false}};
  leaves = resolve_leaves(s);
  CHECK(leaves.count("D_main"));
  CHECK(leaves.count("invD_main"));
  CHECK(leaves.count("RinvD_main"));
  CHECK_FALSE(leaves.count("ranef_main"));
  s.switches = {{"analysis_main", false}};
  CHECK(resolve_leaves(s).empty());
  s.switches = {{"bogus", true}};
  CHECK_THROWS_AS(validate(s), ConfigError);
}

TEST_CASE("changing the reference category keeps the model set") {
  auto ds = testsupport::mod7a_table().dataset();
  auto o = mod7a_options();
  auto a = build_model_graph({{"SBP ~ age + gender + WC + alc + bili + occup + smoke"}}, ds, o);
  o.refcats["occup"] = "working";
  auto b = build_model_graph({{"SBP ~ age + gender + WC + alc + bili + occup + smoke"}}, ds, o);
  CHECK(a.model_labels() == b.model_labels());
  CHECK(column_names(a.models[0].X) != column_names(b.models[0].X));
}
