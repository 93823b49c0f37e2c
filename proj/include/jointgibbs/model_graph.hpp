#pragma once

// The ordered sequence of sub-models: analysis model(s) first, then one
// conditional model per covariate that needs one, with design plans.

#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "jointgibbs/dataset.hpp"
#include "jointgibbs/formula.hpp"
#include "jointgibbs/hyperpars.hpp"
#include "jointgibbs/model_types.hpp"
#include "jointgibbs/monitor.hpp"

namespace jointgibbs {

struct AnalysisSpec {
  std::string formula;
  std::optional<std::string> random;  // "~ time | ID"
  std::optional<std::string> model;   // model type name; default from response type
};

struct Truncation {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

struct ScaleSpec {
  enum class Mode { All, None, List } mode = Mode::All;
  std::set<std::string> variables;
};

struct GraphOptions {
  std::map<std::string, std::string> models;
  std::set<std::string> no_model;
  std::optional<std::string> auxvars;
  std::map<std::string, std::string> refcats;  // variable → "first"/"last"/"largest"/label/index
  std::map<std::string, Coding> coding;        // default dummy
  std::map<std::string, Truncation> trunc;
  std::set<std::string> ridge;  // responses of sub-models with ridge shrinkage
  bool ridge_all = false;
  MonitorSpec monitor;
  HyperParameters hyper;
  ScaleSpec scale;
  std::map<std::string, TypeOverride> types;
};

struct VarInfo {
  std::string name;
  VariableMeta meta;
  bool level2 = false;
  bool incomplete = false;
  bool categorical = false;
  int model = -1;  // sub-model with this variable as response
};

/// One factor of a design column.
struct FactorRecipe {
  enum class Kind { Numeric, Category } kind = Kind::Numeric;
  formula::CompiledExpr expr;  // Numeric
  int var = -1;                // Category
  int category = 0;
  int ref = 0;
  Coding coding = Coding::Dummy;
};

struct ColumnRecipe {
  std::string name;
  std::string term;  // canonical term this column belongs to
  std::vector<FactorRecipe> factors;
  std::vector<int> deps;  // variable indices
  bool dynamic = false;
  bool scaled = false;
  double center = 0.0;
  double scale = 1.0;

  /// Raw (unscaled) value given one row of variable values.
  double raw(std::span<const double> row) const;
  double value(std::span<const double> row) const { return scaled ? (raw(row) - center) / scale : raw(row); }
};

enum class Role { Analysis, Covariate };

struct SubModel {
  std::string response;
  int response_var = -1;
  ModelType type;
  std::string label;
  Role role = Role::Covariate;
  bool level2 = false;  // units are groups rather than rows
  std::vector<ColumnRecipe> X;
  std::vector<ColumnRecipe> Z;  // random-effects design (mixed models)
  std::vector<std::string> predictor_terms;
  std::vector<std::string> random_terms;
  bool intercept = true;
  bool ridge = false;
  std::optional<Truncation> trunc;
  std::size_t n_categories = 0;  // categorical responses
  std::vector<std::string> categories;
  std::vector<double> event;  // survival: event indicator per unit
  std::string event_text;

  std::size_t n_coef_sets() const { return type.family == Family::Multinomial ? n_categories - 1 : 1; }
  bool conjugate() const {
    return (type.family == Family::Gaussian && type.link == Link::Identity && !trunc) ||
           (type.family == Family::Lognorm && !trunc);
  }
};

struct ModelGraph {
  Dataset data;
  std::optional<Grouping> grouping;
  std::vector<VarInfo> vars;
  std::vector<SubModel> models;
  std::size_t n_analysis = 0;
  HyperParameters hyper;
  MonitorSpec monitor;
  std::vector<std::string> warnings;

  /// Row-major n_rows × vars.size() matrix; missing cells are NaN, categorical
  /// cells hold the 0-based code.
  std::vector<double> base_values;

  std::size_t n_rows() const { return data.n_rows(); }
  std::size_t n_vars() const { return vars.size(); }
  std::size_t n_groups() const { return grouping ? grouping->n_groups() : 0; }
  std::size_t n_units(const SubModel& m) const { return m.level2 ? n_groups() : n_rows(); }
  std::size_t unit_row(const SubModel& m, std::size_t unit) const {
    return m.level2 ? grouping->rows[unit].front() : unit;
  }
  int var_index(const std::string& name) const;

  /// Covariate-model responses in sequence order.
  std::vector<std::string> covariate_order() const;
  /// response → model label for all sub-models (analysis first).
  std::vector<std::pair<std::string, std::string>> model_labels() const;
};

ModelGraph build_model_graph(const std::vector<AnalysisSpec>& analyses, const Dataset& raw,
                             const GraphOptions& options);

struct CovariateCandidate {
  std::string name;
  bool level2 = false;
  std::size_t n_missing = 0;
  std::size_t appearance = 0;
};

/// Sorts covariates for the model sequence: level-1 first, then level-2;
/// within a level by missing count descending, ties by appearance.
std::vector<std::string> order_submodels(std::vector<CovariateCandidate> candidates);

/// Plain-text listing of sub-models with predictor columns.
std::string describe_models(const ModelGraph& g);

}  // namespace jointgibbs
