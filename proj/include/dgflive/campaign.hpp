#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dgflive/coverage.hpp"
#include "dgflive/distance.hpp"
#include "dgflive/mutation.hpp"
#include "dgflive/risk.hpp"
#include "dgflive/schedule.hpp"

namespace dgflive {

struct BudgetZero : ValidationError {
  using ValidationError::ValidationError;
};
struct SeedTriggersTarget : ValidationError {
  using ValidationError::ValidationError;
};

enum class Mode : uint8_t { LiveFuzz, AflGo, Coverage };

const char* mode_name(Mode mode);
std::optional<Mode> parse_mode(const std::string& name);

struct CampaignConfig {
  Mode mode = Mode::LiveFuzz;
  uint64_t budget_execs = 0;  // 0 = no execution budget
  double budget_secs = 0.0;   // 0 = no wall budget; at least one must be set
  bool sim_clock = true;      // schedule time measured in executed inputs
  uint64_t rng_seed = 1;
  ScheduleConfig schedule;
  DistanceOptions distance;
  uint32_t step_budget = kDefaultStepBudget;
  std::vector<std::vector<uint8_t>> initial_seeds;
  bool no_apm = false;  // ablation: AFLGo average distance instead of seed risk
  bool no_mos = false;  // ablation: uniform HMS draws instead of the FR schedule
  bool stop_when_all_triggered = false;
  std::string stats_path;      // NDJSON event stream, empty = off
  uint64_t stats_every = 10000;
};

struct SeedMeta {
  uint32_t id = 0;
  std::vector<uint8_t> input;
  uint64_t digest = 0;
  RiskTuple risk;
  NormalizedRisk norm;
  std::optional<double> merged_avg;   // AFLGo-style raw scalar
  double merged_norm = kInvalidRisk;  // queue-relative
  uint64_t discovered_at_execs = 0;
  double discovered_at_secs = 0.0;
  int64_t parent = -1;
};

struct TriggerRecord {
  uint64_t tte_execs = 0;
  double tte_secs = 0.0;
  std::vector<uint8_t> input;
};

struct CampaignReport {
  std::map<std::string, TriggerRecord> triggered;
  std::vector<std::string> cves;  // all CVEs the spec names
  uint64_t p_vt = 0;
  uint64_t executions = 0;
  std::vector<std::pair<uint64_t, uint32_t>> queue_over_time;  // (execs, size)
  std::vector<SeedMeta> queue;
  double wall_secs = 0.0;
};

// Runs one deterministic fuzzing campaign. `apm` is the two-sided distance
// map, `merged` the owner-erased one used by the baselines and ablations.
CampaignReport run_campaign(const Program& program, const TargetSpec& spec,
                            const TargetTuple& tuple, const DistanceMap& apm,
                            const DistanceMap& merged, const CampaignConfig& config);

}  // namespace dgflive
