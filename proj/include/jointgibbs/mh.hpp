#pragma once

// Random-walk Metropolis with Robbins-Monro step-size adaptation.

#include <cmath>
#include <functional>
#include <string>

#include "jointgibbs/random.hpp"

namespace jointgibbs {

struct AdaptiveStep {
  double log_step = std::log(0.5);
  double target = 0.44;
  std::size_t n_updates = 0;  // adaptation updates so far
  std::size_t window_tried = 0;
  std::size_t window_accepted = 0;

  double step() const { return std::exp(log_step); }
  /// Records an outcome; the step only moves while `adapting`.
  void record(bool accepted, bool adapting);
  double window_rate() const { return window_tried ? double(window_accepted) / window_tried : target; }
  void reset_window() { window_tried = window_accepted = 0; }
};

/// One Metropolis step for a scalar on an unconstrained scale. `log_target`
/// must include any Jacobian term. Returns the new value; throws SamplerError
/// naming `node` if the target is NaN.
double mh_scalar(Rng& rng, double current, double current_logp, const std::function<double(double)>& log_target,
                 AdaptiveStep& step, bool adapting, const std::string& node, double* new_logp = nullptr);

}  // namespace jointgibbs
