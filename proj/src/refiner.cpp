#include "foresight/refiner.hpp"

#include <cmath>

#include "foresight/error.hpp"

namespace foresight {

void RefinerConfig::validate() const {
  if (tau && !(*tau >= 0.0)) throw ValidationError("refiner tau must be >= 0");
  if (!(tau_fraction >= 0.0) || !std::isfinite(tau_fraction))
    throw ValidationError("refiner tau_fraction must be finite and >= 0");
}

double RefinerConfig::resolve_tau(double reward_range) const {
  if (tau) return *tau;
  return tau_fraction * std::max(reward_range, 0.0);
}

RefinementDecision refine_action(std::span<const RefinementCandidate> candidates, ActionId a_t,
                                 double tau, const ActionSpace& space) {
  RefinementDecision d;
  d.original = a_t;
  d.refined = a_t;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (c.graph == nullptr) continue;
    const auto best = c.graph->best_action_for_transition(c.current, c.future, space);
    if (!best) continue;
    const double r_agent = c.graph->mean_reward(c.current, a_t).value_or(0.0);
    if (!d.r_best) {
      d.r_best = best->second;
      d.r_agent = r_agent;
    }
    if (best->second > r_agent + tau) {
      // The loop stops here even when the best action is a_t itself.
      d.refined = best->first;
      d.overridden = best->first != a_t;
      d.trigger = i;
      d.r_best = best->second;
      d.r_agent = r_agent;
      return d;
    }
  }
  return d;
}

double refinement_rate(std::span<const RefinementDecision> history) {
  if (history.empty()) throw ValidationError("refinement rate of an empty history");
  std::size_t n = 0;
  for (const auto& d : history) n += d.overridden ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(history.size());
}

}  // namespace foresight
