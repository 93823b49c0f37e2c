#pragma once

#include <cstdint>
#include <random>
#include <span>

#include <Eigen/Dense>

namespace jointgibbs {

using Rng = std::mt19937_64;

/// Independent stream for one chain, derived from the run seed.
Rng chain_rng(std::uint64_t seed, std::size_t chain);

double runif(Rng& rng);
double rnorm(Rng& rng, double mean = 0.0, double sd = 1.0);
double rgamma(Rng& rng, double shape, double rate);
/// Index drawn with probabilities proportional to exp(log_weights).
std::size_t rcategorical_log(Rng& rng, std::span<const double> log_weights);

/// Draw from N(P^{-1} h, P^{-1}) given the precision P and h.
Eigen::VectorXd rmvnorm_canonical(Rng& rng, const Eigen::MatrixXd& precision, const Eigen::VectorXd& h);

/// Wishart(df, scale) via the Bartlett decomposition; E[W] = df * scale.
Eigen::MatrixXd rwishart(Rng& rng, double df, const Eigen::MatrixXd& scale);

}  // namespace jointgibbs
