#pragma once

// Metropolis-within-Gibbs sampler over a ModelGraph.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "jointgibbs/mh.hpp"
#include "jointgibbs/model_graph.hpp"
#include "jointgibbs/random.hpp"
#include "jointgibbs/samples.hpp"

namespace jointgibbs {

using InitValues = std::map<std::string, std::vector<double>>;

struct McmcSettings {
  std::size_t n_chains = 3;
  long n_adapt = 100;
  long n_iter = 0;
  long thin = 1;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::vector<InitValues> inits;  // empty, one entry for all chains, or one per chain

  void validate() const;
};

/// All nodes the graph can produce, in storage order.
std::vector<NodeDesc> all_nodes(const ModelGraph& g);
/// Nodes selected by the graph's monitor specification.
std::vector<NodeDesc> monitored_nodes(const ModelGraph& g);

struct ModelState {
  Eigen::MatrixXd X;     // units x p (scaled design)
  Eigen::MatrixXd Z;     // rows x q (mixed models)
  Eigen::MatrixXd beta;  // p x sets
  Eigen::VectorXd ridge_precision;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> eta;  // units x sets, fixed part
  Eigen::VectorXd zb;   // units, random part
  Eigen::VectorXd y;    // current response per unit
  double tau = 1.0;
  double shape = 1.0;
  Eigen::VectorXd theta;       // ordinal: gamma_1 then log increments
  std::vector<double> cuts;    // ordinal cut points derived from theta
  Eigen::MatrixXd b;           // groups x q
  Eigen::MatrixXd D, invD;     // q x q
  Eigen::VectorXd RinvD;       // diagonal of the Wishart scale (q > 1)

  std::vector<AdaptiveStep> coef_steps;
  AdaptiveStep tau_step, shape_step, ranef_step;
  std::vector<AdaptiveStep> theta_steps;
};

/// One MCMC chain. Public so that tests can drive single sweeps.
class Chain {
 public:
  Chain(const ModelGraph& graph, const McmcSettings& settings, std::size_t chain_id);

  void sweep(bool adapting);
  long iteration() const { return iteration_; }

  const ModelState& state(std::size_t model) const { return ms_[model]; }
  /// Current value of variable `var` at data row `row` (codes for factors).
  double value(std::size_t row, std::size_t var) const { return vals_[row * nv_ + var]; }
  /// Data-scale coefficients (p x sets) of a sub-model.
  Eigen::MatrixXd data_scale_coefs(std::size_t model) const;
  /// Data-scale ordinal cut points.
  std::vector<double> data_scale_cuts(std::size_t model) const;
  double node_value(const NodeDesc& node) const;
  /// Adaptive steps whose last-window acceptance fell outside [0.1, 0.7].
  std::vector<std::string> poorly_adapted() const;
  void reset_windows();

 private:
  struct MissingUnit {
    int var;
    std::size_t unit;  // row, or group for level-2 variables
  };
  struct Dependent {
    int model;
    bool random;  // column of Z rather than X
    int col;
  };

  double full_eta(const ModelState& s, std::size_t u, std::size_t set = 0) const {
    return s.eta(u, set) + (s.zb.size() ? s.zb[u] : 0.0);
  }
  double unit_logdens(std::size_t m, std::size_t u) const;
  double trunc_lognorm(std::size_t m, std::size_t u) const;
  double model_loglik(std::size_t m) const;

  void init(const InitValues* user);
  void apply_user_inits(const InitValues& user);
  void recompute_design(std::size_t m);
  void refresh_cuts(ModelState& s);

  void update_coefs(std::size_t m, bool adapting);
  void update_coefs_conjugate(std::size_t m);
  void update_coefs_mh(std::size_t m, bool adapting);
  void update_ridge(std::size_t m);
  void update_precision(std::size_t m, bool adapting);
  void update_shape(std::size_t m, bool adapting);
  void update_theta(std::size_t m, bool adapting);
  void update_missing(int var, bool adapting);
  void update_ranef(std::size_t m, bool adapting);
  void update_covariance(std::size_t m);

  std::vector<std::size_t> affected_rows(int var, std::size_t unit) const;
  void set_value(int var, std::size_t unit, double x);
  double missing_target(int var, std::size_t unit) const;

  const ModelGraph& g_;
  Rng rng_;
  std::size_t nv_;
  std::size_t id_;
  long iteration_ = 0;
  std::vector<double> vals_;
  std::vector<ModelState> ms_;
  std::vector<std::vector<std::size_t>> missing_units_;  // per variable
  std::vector<std::vector<Dependent>> dependents_;       // per variable
  std::vector<AdaptiveStep> imp_steps_;                  // per variable
};

/// Runs all chains (in parallel up to settings.threads) and returns the
/// monitored draws on the data scale.
McmcSamples run_mcmc(const ModelGraph& graph, const McmcSettings& settings);

}  // namespace jointgibbs
