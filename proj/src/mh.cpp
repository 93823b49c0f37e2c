#include "jointgibbs/mh.hpp"

#include <algorithm>

#include "jointgibbs/error.hpp"

namespace jointgibbs {

void AdaptiveStep::record(bool accepted, bool adapting) {
  ++window_tried;
  if (accepted) ++window_accepted;
  if (!adapting) return;
  ++n_updates;
  double gain = 1.0 / std::pow(static_cast<double>(n_updates), 0.6);
  log_step += gain * ((accepted ? 1.0 : 0.0) - target);
  log_step = std::clamp(log_step, -25.0, 10.0);
}

double mh_scalar(Rng& rng, double current, double current_logp, const std::function<double(double)>& log_target,
                 AdaptiveStep& step, bool adapting, const std::string& node, double* new_logp) {
  double proposal = current + step.step() * rnorm(rng);
  double lp = log_target(proposal);
  if (std::isnan(lp)) throw SamplerError("log-density is NaN for node '" + node + "'");
  double log_u = std::log(runif(rng));
  bool accept = lp - current_logp > log_u;
  step.record(accept, adapting);
  if (new_logp) *new_logp = accept ? lp : current_logp;
  return accept ? proposal : current;
}

}  // namespace jointgibbs
