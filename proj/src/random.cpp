#include "jointgibbs/random.hpp"

#include <cmath>
#include <limits>

#include "jointgibbs/densities.hpp"
#include "jointgibbs/error.hpp"

namespace jointgibbs {

Rng chain_rng(std::uint64_t seed, std::size_t chain) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(chain)};
  return Rng(seq);
}

double runif(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

double rnorm(Rng& rng, double mean, double sd) { return std::normal_distribution<double>(mean, sd)(rng); }

double rgamma(Rng& rng, double shape, double rate) {
  return std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
}

std::size_t rcategorical_log(Rng& rng, std::span<const double> log_weights) {
  double lse = log_sum_exp(log_weights);
  if (!std::isfinite(lse)) throw SamplerError("all categories have zero probability");
  double u = runif(rng);
  double acc = 0.0;
  for (std::size_t k = 0; k < log_weights.size(); ++k) {
    acc += std::exp(log_weights[k] - lse);
    if (u < acc) return k;
  }
  for (std::size_t k = log_weights.size(); k-- > 0;)
    if (std::isfinite(log_weights[k])) return k;
  return 0;
}

Eigen::VectorXd rmvnorm_canonical(Rng& rng, const Eigen::MatrixXd& precision, const Eigen::VectorXd& h) {
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) throw SamplerError("posterior precision matrix is not positive definite");
  Eigen::VectorXd mean = llt.solve(h);
  Eigen::VectorXd z(h.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rnorm(rng);
  // P = L L^T; x = mean + L^{-T} z has covariance P^{-1}
  return mean + llt.matrixU().solve(z);
}

Eigen::MatrixXd rwishart(Rng& rng, double df, const Eigen::MatrixXd& scale) {
  const Eigen::Index p = scale.rows();
  Eigen::LLT<Eigen::MatrixXd> llt(scale);
  if (llt.info() != Eigen::Success) throw SamplerError("Wishart scale matrix is not positive definite");
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    A(i, i) = std::sqrt(2.0 * rgamma(rng, 0.5 * (df - static_cast<double>(i)), 1.0));
    for (Eigen::Index j = 0; j < i; ++j) A(i, j) = rnorm(rng);
  }
  Eigen::MatrixXd LA = llt.matrixL() * A;
  return LA * LA.transpose();
}

}  // namespace jointgibbs
