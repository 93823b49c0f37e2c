#pragma once

// Log-densities of the response families given the linear predictor.

#include <span>
#include <vector>

#include "jointgibbs/model_types.hpp"

namespace jointgibbs {

double inverse_link(Link link, double eta);
double apply_link(Link link, double mu);

double log_sigmoid(double x);
double log_diff_sigmoid(double a, double b);  // log(F(a) - F(b)), a > b
double log_sum_exp(std::span<const double> v);

double normal_logpdf(double y, double mean, double precision);
double normal_logcdf(double z);
/// log(Phi(b) - Phi(a)) for a < b on the standard scale.
double normal_log_interval(double a, double b);

/// Scalar families (gaussian, binomial, gamma, poisson, lognorm, beta,
/// weibull). `y` is the response (0/1 code for binomial); `precision` is
/// tau; `shape` and `event` are used by the Weibull family only. Returns
/// -inf outside the support.
double family_logpdf(Family family, Link link, double y, double eta, double precision, double shape = 1.0,
                     double event = 1.0);

/// Cumulative logit: P(y <= k) = logistic(gamma_k - eta), k = 0..K-2.
double ordinal_logprob(int y, double eta, std::span<const double> gamma);
std::vector<double> ordinal_probs(double eta, std::span<const double> gamma);

/// Multinomial logit with the first category as baseline; `eta` holds the
/// K-1 non-baseline linear predictors.
double multinomial_logprob(int y, std::span<const double> eta);
std::vector<double> multinomial_probs(std::span<const double> eta);

}  // namespace jointgibbs
