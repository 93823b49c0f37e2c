#pragma once

// Helpers shared by the unit tests and the acceptance binary.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "jointgibbs/dataset.hpp"
#include "jointgibbs/diagnostics.hpp"
#include "jointgibbs/model_graph.hpp"
#include "jointgibbs/sampler.hpp"

namespace testsupport {

inline constexpr double NA = std::numeric_limits<double>::quiet_NaN();

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Builds a CSV in memory and parses it, so tests exercise the same typing
// rules as files on disk. NaN numbers and empty strings become NA.
class Table {
 public:
  Table& num(const std::string& name, const std::vector<double>& v) {
    std::vector<std::string> cells;
    for (double x : v) cells.push_back(std::isnan(x) ? "NA" : fmt17(x));
    cols_.emplace_back(name, std::move(cells));
    return *this;
  }
  Table& str(const std::string& name, const std::vector<std::string>& v) {
    std::vector<std::string> cells;
    for (const auto& x : v) cells.push_back(x.empty() ? "NA" : x);
    cols_.emplace_back(name, std::move(cells));
    return *this;
  }
  std::string csv() const {
    std::ostringstream os;
    for (std::size_t j = 0; j < cols_.size(); ++j) os << (j ? "," : "") << cols_[j].first;
    os << "\n";
    std::size_t n = cols_.empty() ? 0 : cols_[0].second.size();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < cols_.size(); ++j) os << (j ? "," : "") << cols_[j].second[i];
      os << "\n";
    }
    return os.str();
  }
  jointgibbs::Dataset dataset() const { return jointgibbs::parse_csv(csv()); }

 private:
  std::vector<std::pair<std::string, std::vector<std::string>>> cols_;
};

inline double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / v.size();
}

inline double sd(const std::vector<double>& v) {
  double m = mean(v), s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (v.size() - 1));
}

// All stored draws of a node, chains concatenated.
inline std::vector<double> draws(const jointgibbs::McmcSamples& s, const std::string& node) {
  int k = s.node_index(node);
  std::vector<double> out;
  if (k < 0) return out;
  for (const auto& c : s.chains)
    for (Eigen::Index r = 0; r < c.rows(); ++r) out.push_back(c(r, k));
  return out;
}

// Plain batch-means standard error of the mean of one chain's draws, used as
// an oracle independent of the library's mc_error.
inline double batch_se(const std::vector<std::vector<double>>& chains, std::size_t n_batches_per_chain = 25) {
  std::vector<double> means;
  for (const auto& c : chains) {
    std::size_t b = c.size() / n_batches_per_chain;
    for (std::size_t k = 0; k < n_batches_per_chain; ++k) {
      double s = 0;
      for (std::size_t i = k * b; i < (k + 1) * b; ++i) s += c[i];
      means.push_back(s / b);
    }
  }
  double sdm = sd(means);
  return sdm / std::sqrt(static_cast<double>(means.size()));
}

inline std::vector<std::vector<double>> per_chain(const jointgibbs::McmcSamples& s, const std::string& node) {
  int k = s.node_index(node);
  std::vector<std::vector<double>> out;
  for (const auto& c : s.chains) {
    std::vector<double> v(c.rows());
    for (Eigen::Index r = 0; r < c.rows(); ++r) v[r] = c(r, k);
    out.push_back(std::move(v));
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("jointgibbs_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testsupport
