#pragma once

// Stored MCMC draws and their on-disk layout (one CSV per chain plus a JSON
// meta file).

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace jointgibbs {

enum class NodeKind { Coef, Sigma, Tau, Shape, Gamma, Delta, D, InvD, RinvD, Ranef, Imp };

struct NodeDesc {
  std::string name;
  std::string tag;  // monitor leaf keyword
  NodeKind kind = NodeKind::Coef;
  int model = -1;
  int i = 0;  // coefficient row / matrix row / group / unit
  int j = 0;  // coefficient set / matrix column / ranef column
  std::string var;             // imputed variable
  std::vector<std::size_t> rows;  // data rows filled by an imputed node
};

struct McmcSamples {
  std::vector<NodeDesc> nodes;
  std::vector<Eigen::MatrixXd> chains;  // stored iterations x nodes
  std::vector<long> iterations;         // iteration labels (shared by chains)
  long n_adapt = 0;
  long n_iter = 0;
  long thin = 1;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;

  std::size_t n_chains() const { return chains.size(); }
  std::size_t n_stored() const { return iterations.size(); }
  int node_index(const std::string& name) const;
};

/// Iteration labels n_adapt + k * thin for k = 1..floor(n_iter / thin).
std::vector<long> iteration_labels(long n_adapt, long n_iter, long thin);

/// Writes chain<k>.csv files (iteration column + one column per node,
/// %.17g) into `dir`.
void write_chain_csvs(const McmcSamples& s, const std::string& dir);
/// Reads chain CSVs written by write_chain_csvs; `nodes` must already be set.
void read_chain_csvs(McmcSamples& s, const std::string& dir, std::size_t n_chains);

}  // namespace jointgibbs
