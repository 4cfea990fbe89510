#include "dgflive/schedule.hpp"

#include <algorithm>
#include <cmath>

namespace dgflive {

double annealing_factor(double r_norm, double t, double t_x,
                        double max_factor_exp) {
  double t_exp = std::pow(20.0, -t / t_x);
  double p = (1.0 - r_norm) * (1.0 - t_exp) + 0.5 * t_exp;
  double factor = std::exp2(max_factor_exp * (2.0 * p - 1.0));
  return std::clamp(factor, std::exp2(-max_factor_exp), std::exp2(max_factor_exp));
}

uint64_t assign_power(const NormalizedRisk& risk, const CampaignClock& clock,
                      const ScheduleConfig& cfg, double t_x) {
  double base = static_cast<double>(cfg.base_energy);

  double power_library = 0.0;
  if (risk.r_library != kInvalidRisk)
    power_library =
        base * annealing_factor(risk.r_library, clock.t_library, t_x,
                                cfg.max_factor_exp);

  double power_client;
  if (power_library > 0.0)
    power_client =
        base * annealing_factor(0.0, clock.t_global, t_x, cfg.max_factor_exp);
  else if (risk.r_client != kInvalidRisk)
    power_client = base * annealing_factor(risk.r_client, clock.t_global, t_x,
                                           cfg.max_factor_exp);
  else
    power_client = base;  // floor: fully-invalid seeds are never starved

  long long energy = std::llround(power_client + power_library);
  return energy < 1 ? 1 : static_cast<uint64_t>(energy);
}

double fine_ratio(double t, double t_x, double r_client, double r_library) {
  double ramp = 0.25 * (1.0 - std::pow(20.0, -t / t_x));
  if (r_library != kInvalidRisk) return ramp * std::exp2(1.0 - r_library);
  if (r_client != kInvalidRisk) return ramp * (std::exp2(1.0 - r_client) - 1.0);
  return 0.0;
}

}  // namespace dgflive
