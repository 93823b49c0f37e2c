#pragma once

// Predictions, prediction grids, multiply imputed datasets and plot data.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "jointgibbs/dataset.hpp"
#include "jointgibbs/diagnostics.hpp"
#include "jointgibbs/model_graph.hpp"
#include "jointgibbs/samples.hpp"

namespace jointgibbs {

enum class PredictType { Link, Lp, Response, Prob, Class };
PredictType parse_predict_type(const std::string& s);

struct PredictionResult {
  Dataset newdata;
  PredictType type = PredictType::Link;
  std::string response;
  std::vector<std::string> columns;  // fit / quantile columns
  Eigen::MatrixXd values;            // rows x columns
  std::vector<std::string> classes;  // type class: predicted category per row
};

/// Posterior predictions for the analysis model with response `response`
/// (first analysis model when empty). Random effects are set to zero.
PredictionResult predict(const McmcSamples& s, const ModelGraph& g, const Dataset& newdata, PredictType type,
                         double q_lo = 0.025, double q_hi = 0.975, const SubsetSpec& subset = {},
                         const std::string& response = "");

/// newdata columns followed by the prediction columns.
Dataset prediction_table(const PredictionResult& r);

/// Grid over the variables of a one-sided formula (`~ age + sex`): observed
/// range in `grid_length` steps for continuous variables, all categories for
/// factors. Remaining variables sit at their median or reference category;
/// `overrides` pins explicit values (labels for factors).
Dataset pred_df(const ModelGraph& g, const std::string& vars, std::size_t grid_length = 100,
                const std::map<std::string, std::vector<std::string>>& overrides = {});

struct ImputationPick {
  std::size_t chain = 0;  // 0-based
  long iteration = 0;
  std::size_t row = 0;  // stored-iteration index
};

struct ImputedStack {
  Dataset data;  // Imputation_, original columns, .id, .rownr
  std::vector<ImputationPick> picks;
};

/// m completed copies of the data filled from randomly chosen stored
/// iterations at or after `start`, pairwise at least `minspace` iterations
/// apart; each pick uses a uniformly chosen chain.
ImputedStack get_mi_dat(const McmcSamples& s, const ModelGraph& g, std::size_t m, bool include = true,
                        std::optional<long> start = std::nullopt, long minspace = 50, std::uint64_t seed = 1);

enum class PlotKind { Trace, Density, McseRatio, ImpDistr };
PlotKind parse_plot_kind(const std::string& s);

struct PlotData {
  Dataset table;
  std::string sidecar;  // JSON
};

struct Kde {
  double bandwidth = 0;
  std::vector<double> x, y;
};
/// Gaussian kernel density with Silverman's rule-of-thumb bandwidth on a
/// 512-point grid extending 3 bandwidths past the data.
Kde kernel_density(const std::vector<double>& draws, std::size_t n_points = 512);

PlotData plot_data(const McmcSamples& s, const ModelGraph& g, PlotKind kind, const SubsetSpec& subset = {});

}  // namespace jointgibbs
