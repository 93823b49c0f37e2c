#include "jointgibbs/densities.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace jointgibbs {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178;
}  // namespace

double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

double log_diff_sigmoid(double a, double b) {
  if (!(a > b)) return kNegInf;
  // F(a) - F(b) = (e^a - e^b) / ((1 + e^a)(1 + e^b))
  double log_num = a + std::log1p(-std::exp(b - a));
  return log_num + log_sigmoid(-a) + log_sigmoid(b) - b;
}

double log_sum_exp(std::span<const double> v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

double inverse_link(Link link, double eta) {
  switch (link) {
    case Link::Identity: return eta;
    case Link::Logit: return 1.0 / (1.0 + std::exp(-eta));
    case Link::Probit: return 0.5 * std::erfc(-eta / std::numbers::sqrt2);
    case Link::Log: return std::exp(eta);
    case Link::Cloglog: return -std::expm1(-std::exp(eta));
    case Link::Inverse: return 1.0 / eta;
  }
  return eta;
}

double apply_link(Link link, double mu) {
  switch (link) {
    case Link::Identity: return mu;
    case Link::Logit: return std::log(mu / (1.0 - mu));
    case Link::Probit: {
      // Newton iterations on Phi(x) = mu
      double x = 0.0;
      for (int i = 0; i < 60; ++i) {
        double f = 0.5 * std::erfc(-x / std::numbers::sqrt2) - mu;
        double d = std::exp(-0.5 * x * x - kLogSqrt2Pi);
        x -= f / d;
      }
      return x;
    }
    case Link::Log: return std::log(mu);
    case Link::Cloglog: return std::log(-std::log1p(-mu));
    case Link::Inverse: return 1.0 / mu;
  }
  return mu;
}

double normal_logpdf(double y, double mean, double precision) {
  double d = y - mean;
  return 0.5 * std::log(precision) - kLogSqrt2Pi - 0.5 * precision * d * d;
}

double normal_logcdf(double z) {
  if (z > -37.0) return std::log(0.5 * std::erfc(-z / std::numbers::sqrt2));
  // asymptotic expansion for the far lower tail
  double z2 = z * z;
  double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
  return -0.5 * z2 - kLogSqrt2Pi - std::log(-z) + std::log(series);
}

double normal_log_interval(double a, double b) {
  if (!(a < b)) return kNegInf;
  if (a > 0) return normal_log_interval(-b, -a);
  double lb = normal_logcdf(b);
  if (a == -std::numeric_limits<double>::infinity()) return lb;
  double la = normal_logcdf(a);
  return lb + std::log1p(-std::exp(la - lb));
}

double family_logpdf(Family family, Link link, double y, double eta, double precision, double shape, double event) {
  switch (family) {
    case Family::Gaussian: {
      double mu = inverse_link(link, eta);
      if (!std::isfinite(mu)) return kNegInf;
      return normal_logpdf(y, mu, precision);
    }
    case Family::Lognorm:
      if (!(y > 0)) return kNegInf;
      return normal_logpdf(std::log(y), eta, precision) - std::log(y);
    case Family::Binomial: {
      if (link == Link::Logit) return y > 0.5 ? log_sigmoid(eta) : log_sigmoid(-eta);
      double p = inverse_link(link, eta);
      if (!(p > 0.0 && p < 1.0)) {
        if (p == 1.0 && y > 0.5) return 0.0;
        if (p == 0.0 && y < 0.5) return 0.0;
        return kNegInf;
      }
      return y > 0.5 ? std::log(p) : std::log1p(-p);
    }
    case Family::Gamma: {
      double mu = inverse_link(link, eta);
      if (!(mu > 0.0) || !(y > 0.0) || !std::isfinite(mu)) return kNegInf;
      double a = mu * mu * precision;
      double rate = mu * precision;
      return a * std::log(rate) - std::lgamma(a) + (a - 1.0) * std::log(y) - rate * y;
    }
    case Family::Poisson: {
      double lambda = inverse_link(link, eta);
      if (!(lambda > 0.0) || y < 0 || !std::isfinite(lambda)) return kNegInf;
      return y * std::log(lambda) - lambda - std::lgamma(y + 1.0);
    }
    case Family::Beta: {
      if (!(y > 0.0 && y < 1.0)) return kNegInf;
      double mu = inverse_link(Link::Logit, eta);
      double a = mu * precision;
      double b = (1.0 - mu) * precision;
      if (!(a > 0.0 && b > 0.0)) return kNegInf;
      return std::lgamma(precision) - std::lgamma(a) - std::lgamma(b) + (a - 1.0) * std::log(y) +
             (b - 1.0) * std::log1p(-y);
    }
    case Family::Weibull: {
      if (!(y > 0.0) || !(shape > 0.0)) return kNegInf;
      double log_rate = -eta;
      double log_rt = log_rate + std::log(y);
      double cum = std::exp(shape * log_rt);
      if (event > 0.5) return std::log(shape) + shape * log_rate + (shape - 1.0) * std::log(y) - cum;
      return -cum;
    }
    case Family::Ordinal:
    case Family::Multinomial:
      break;
  }
  return kNegInf;
}

double ordinal_logprob(int y, double eta, std::span<const double> gamma) {
  const int K = static_cast<int>(gamma.size()) + 1;
  if (y < 0 || y >= K) return kNegInf;
  if (y == 0) return log_sigmoid(gamma[0] - eta);
  if (y == K - 1) return log_sigmoid(eta - gamma[K - 2]);
  return log_diff_sigmoid(gamma[y] - eta, gamma[y - 1] - eta);
}

std::vector<double> ordinal_probs(double eta, std::span<const double> gamma) {
  std::vector<double> p(gamma.size() + 1);
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::exp(ordinal_logprob(static_cast<int>(k), eta, gamma));
  return p;
}

double multinomial_logprob(int y, std::span<const double> eta) {
  std::vector<double> all(eta.size() + 1, 0.0);
  std::copy(eta.begin(), eta.end(), all.begin() + 1);
  if (y < 0 || y >= static_cast<int>(all.size())) return kNegInf;
  return all[y] - log_sum_exp(all);
}

std::vector<double> multinomial_probs(std::span<const double> eta) {
  std::vector<double> p(eta.size() + 1);
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::exp(multinomial_logprob(static_cast<int>(k), eta));
  return p;
}

}  // namespace jointgibbs
