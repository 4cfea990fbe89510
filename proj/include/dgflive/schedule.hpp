#pragma once

#include <cstdint>

#include "dgflive/risk.hpp"

namespace dgflive {

struct ScheduleConfig {
  double t_x = 1800.0;        // exploitation switch, wall seconds
  double t_x_sim = 50000.0;   // same, in executed inputs (simulated clock)
  double max_factor_exp = 10.0;
  uint32_t base_energy = 64;  // mutations per scheduling turn at factor 1
};

struct CampaignClock {
  double t_global = 0.0;   // elapsed since campaign start
  double t_library = 0.0;  // elapsed since library risk first became non-zero
};

// AFLGo-shape annealing: T = 20^(-t/t_x), p = (1-r)(1-T) + T/2,
// factor = 2^(max_exp * (2p - 1)), clamped. Neutral (1.0) at t = 0; at large
// t a zero-risk seed climbs to 2^max_exp and a risk-1 seed sinks to
// 2^-max_exp.
double annealing_factor(double r_norm, double t, double t_x,
                        double max_factor_exp = 10.0);

// Energy for one scheduling turn. Power_library anneals library risk on the
// library clock; any seed with library power gets the maximal client power
// for the current time (risk treated as 0), repairing CC-incompleteness.
// Seeds valid on neither side fall back to the base energy.
uint64_t assign_power(const NormalizedRisk& risk, const CampaignClock& clock,
                      const ScheduleConfig& cfg, double t_x);

// Fine-grained operator ratio. [0, 0.25] while the seed has not entered the
// library, [0.25*(1 - 20^(-t/t_x)), 0.5] once it has, 0 when both risks are
// invalid.
double fine_ratio(double t, double t_x, double r_client, double r_library);

}  // namespace dgflive
