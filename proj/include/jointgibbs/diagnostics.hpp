#pragma once

// Posterior summaries, Gelman-Rubin, batch-means Monte Carlo error.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jointgibbs/model_graph.hpp"
#include "jointgibbs/monitor.hpp"
#include "jointgibbs/samples.hpp"

namespace jointgibbs {

struct SubsetSpec {
  std::optional<long> start, end;  // iteration labels
  long thin = 1;
  std::vector<std::size_t> exclude_chains;  // 1-based
  std::optional<MonitorSpec> selection;     // default: all stored nodes
};

struct Subset {
  std::vector<std::size_t> chains;  // chain indices
  std::vector<std::size_t> rows;    // stored-iteration indices
  std::vector<std::size_t> nodes;   // node indices
};

/// Resolves a subset against stored samples; throws ConfigError when the
/// selection is empty or malformed.
Subset resolve_subset(const McmcSamples& s, const SubsetSpec& spec);

/// Per-chain draws of one node restricted to the subset rows.
std::vector<std::vector<double>> chain_draws(const McmcSamples& s, const Subset& sub, std::size_t node);
std::vector<double> pooled(const std::vector<std::vector<double>>& chains);

/// 2 * min(P(x > 0), P(x < 0)); zeros count towards neither side.
double tail_probability(std::span<const double> draws);
/// Type-7 sample quantile (linear interpolation between order statistics).
double quantile(std::vector<double> draws, double p);

struct GelmanRubin {
  double point = 0.0;
  double upper = 0.0;
  double uncorrected = 0.0;  // sqrt(Vhat / W)
  double W = 0.0, B = 0.0, V = 0.0;
};

/// Potential scale reduction factor with the Brooks-Gelman degrees of
/// freedom correction. Needs >= 2 chains of equal length and W > 0.
GelmanRubin gelman_rubin(const std::vector<std::vector<double>>& chains, double confidence = 0.95,
                         bool autoburnin = false);

struct McError {
  double est = 0.0, mcse = 0.0, sd = 0.0, ratio = 0.0;
  std::size_t batch_size = 0, n_batches = 0;
};

/// Non-overlapping batch means with batch size floor(sqrt(total draws));
/// batches do not straddle chains.
McError mc_error(const std::vector<std::vector<double>>& chains);

struct NodeSummary {
  std::string name, tag;
  NodeKind kind = NodeKind::Coef;
  int model = -1;
  double mean = 0, sd = 0, lo = 0, hi = 0, tail = 0;
  std::optional<double> gr_point, gr_upper;
  std::optional<double> mcse, mcse_ratio;
};

struct MissInfoRow {
  std::string variable;
  std::string level;
  std::size_t n_missing = 0;
  std::size_t n_units = 0;
};

struct PosteriorSummary {
  std::vector<NodeSummary> nodes;
  double q_lo = 0.025, q_hi = 0.975;
  long first_iteration = 0, last_iteration = 0, thin = 1;
  std::size_t per_chain = 0, n_chains = 0;
  std::size_t n_obs = 0, n_groups = 0;
  std::string group_variable;
  std::vector<MissInfoRow> missinfo;
  std::size_t complete_rows = 0, complete_groups = 0;
  std::vector<std::pair<std::string, std::string>> models;  // response → label
  std::vector<std::string> warnings;
};

PosteriorSummary summarize(const McmcSamples& s, const SubsetSpec& spec, double q_lo = 0.025, double q_hi = 0.975,
                           const ModelGraph* graph = nullptr, bool autoburnin = false);

std::string summary_text(const PosteriorSummary& ps, bool missinfo = false);
std::string summary_json(const PosteriorSummary& ps);

}  // namespace jointgibbs
