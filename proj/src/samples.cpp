#include "jointgibbs/samples.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "jointgibbs/dataset.hpp"
#include "jointgibbs/error.hpp"

namespace jointgibbs {

int McmcSamples::node_index(const std::string& name) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].name == name) return static_cast<int>(i);
  return -1;
}

std::vector<long> iteration_labels(long n_adapt, long n_iter, long thin) {
  std::vector<long> out;
  for (long k = 1; k <= n_iter / thin; ++k) out.push_back(n_adapt + k * thin);
  return out;
}

void write_chain_csvs(const McmcSamples& s, const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t c = 0; c < s.chains.size(); ++c) {
    std::string path = dir + "/chain" + std::to_string(c + 1) + ".csv";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << "iteration";
    for (const auto& n : s.nodes) out << ',' << csv_escape(n.name);
    out << '\n';
    char buf[40];
    const auto& m = s.chains[c];
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      out << s.iterations[r];
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", m(r, j));
        out << ',' << buf;
      }
      out << '\n';
    }
  }
}

void read_chain_csvs(McmcSamples& s, const std::string& dir, std::size_t n_chains) {
  s.chains.clear();
  s.iterations.clear();
  for (std::size_t c = 0; c < n_chains; ++c) {
    std::string path = dir + "/chain" + std::to_string(c + 1) + ".csv";
    Dataset d = read_csv(path, "NA");
    if (d.n_cols() != s.nodes.size() + 1)
      throw DataError("'" + path + "' has " + std::to_string(d.n_cols()) + " columns, expected " +
                      std::to_string(s.nodes.size() + 1));
    Eigen::MatrixXd m(d.n_rows(), s.nodes.size());
    for (std::size_t j = 0; j < s.nodes.size(); ++j) {
      const Column& col = d.column(j + 1);
      if (col.name != s.nodes[j].name) throw DataError("column mismatch in '" + path + "': " + col.name);
      for (std::size_t r = 0; r < d.n_rows(); ++r) m(r, j) = col.categorical ? std::nan("") : col.numbers[r];
    }
    if (c == 0) {
      const Column& it = d.column(0);
      for (std::size_t r = 0; r < d.n_rows(); ++r) s.iterations.push_back(static_cast<long>(it.numbers[r]));
    }
    s.chains.push_back(std::move(m));
  }
}

}  // namespace jointgibbs
