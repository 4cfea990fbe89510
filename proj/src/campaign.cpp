#include "dgflive/campaign.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace dgflive {

const char* mode_name(Mode mode) {
  switch (mode) {
    case Mode::LiveFuzz: return "livefuzz";
    case Mode::AflGo: return "aflgo";
    case Mode::Coverage: return "coverage";
  }
  return "?";
}

std::optional<Mode> parse_mode(const std::string& name) {
  if (name == "livefuzz") return Mode::LiveFuzz;
  if (name == "aflgo") return Mode::AflGo;
  if (name == "coverage") return Mode::Coverage;
  return std::nullopt;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Queue-relative min-max over a scalar column; invalid entries stay -1 and a
// degenerate valid set maps to 0.5.
void normalize_column(std::vector<double>& out,
                      const std::vector<std::optional<double>>& values) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& v : values)
    if (v) {
      lo = std::min(lo, *v);
      hi = std::max(hi, *v);
    }
  out.assign(values.size(), kInvalidRisk);
  for (size_t i = 0; i < values.size(); ++i)
    if (values[i]) out[i] = hi == lo ? 0.5 : (*values[i] - lo) / (hi - lo);
}

struct Engine {
  const Program& program;
  const TargetSpec& spec;
  const TargetTuple& tuple;
  const DistanceMap& apm;
  const DistanceMap& merged;
  const CampaignConfig& cfg;

  Interpreter interp;
  Trace trace;
  CoverageMap coverage;
  PathAccounting paths;
  RiskModel risk_model;
  Rng rng;
  const OperatorSets& op_sets = default_operator_sets();

  std::vector<SeedMeta> queue;
  std::vector<std::vector<uint8_t>> corpus_inputs;
  std::vector<uint8_t> entered_library;  // per queue entry
  std::vector<uint8_t> is_vt;

  CampaignReport report;
  uint64_t execs = 0;
  bool lib_anchor_set = false;
  double lib_anchor_t = 0.0;
  Clock::time_point start = Clock::now();
  std::ofstream stats;

  Engine(const Program& p, const TargetSpec& s, const TargetTuple& t,
         const DistanceMap& a, const DistanceMap& m, const CampaignConfig& c)
      : program(p),
        spec(s),
        tuple(t),
        apm(a),
        merged(m),
        cfg(c),
        interp(p),
        coverage(p.total_blocks),
        risk_model(p, s, t, a),
        rng(c.rng_seed) {
    is_vt.assign(p.total_blocks, 0);
    for (uint32_t g : t.vt_blocks) is_vt[g] = 1;
    if (!cfg.stats_path.empty()) {
      std::filesystem::path sp(cfg.stats_path);
      if (sp.has_parent_path()) std::filesystem::create_directories(sp.parent_path());
      stats.open(cfg.stats_path);
    }
  }

  double t_x() const { return cfg.sim_clock ? cfg.schedule.t_x_sim : cfg.schedule.t_x; }

  double now() { return cfg.sim_clock ? static_cast<double>(execs) : seconds_since(start); }

  CampaignClock clock_now() {
    CampaignClock c;
    c.t_global = now();
    c.t_library = lib_anchor_set ? c.t_global - lib_anchor_t : 0.0;
    return c;
  }

  bool budget_done() {
    if (cfg.budget_execs && execs >= cfg.budget_execs) return true;
    if (cfg.budget_secs > 0 && seconds_since(start) >= cfg.budget_secs) return true;
    if (cfg.stop_when_all_triggered && !report.cves.empty() &&
        report.triggered.size() == report.cves.size())
      return true;
    return false;
  }

  void emit_stats(const nlohmann::json& j) {
    if (stats.is_open()) stats << j.dump() << "\n" << std::flush;
  }

  bool touches_vt() const {
    for (uint32_t g : trace.library_path)
      if (is_vt[g]) return true;
    return false;
  }

  // Executes one input and does all per-execution accounting. Returns true if
  // it was admitted to the queue.
  bool run_input(std::vector<uint8_t> input, int64_t parent) {
    interp.run(input, cfg.step_budget, trace);
    ++execs;

    bool fresh = coverage.is_new_coverage(trace);
    uint64_t digest = coverage.last_digest();
    if (touches_vt()) paths.record(digest);

    for (const std::string& cve : trace.triggers_fired) {
      if (report.triggered.count(cve)) continue;
      TriggerRecord rec;
      rec.tte_execs = execs;
      rec.tte_secs = seconds_since(start);
      rec.input = input;
      report.triggered.emplace(cve, std::move(rec));
      emit_stats({{"event", "trigger"}, {"cve", cve}, {"execs", execs}});
    }

    if (fresh) admit(std::move(input), digest, parent);

    if (stats.is_open() && execs % cfg.stats_every == 0)
      emit_stats({{"event", "exec"},
                  {"execs", execs},
                  {"queue", queue.size()},
                  {"p_vt", paths.count()}});
    return fresh;
  }

  void admit(std::vector<uint8_t> input, uint64_t digest, int64_t parent) {
    SeedMeta m;
    m.id = static_cast<uint32_t>(queue.size());
    m.digest = digest;
    m.risk = risk_model.seed_risk(trace);
    m.merged_avg = baseline_seed_metric(trace, merged);
    m.discovered_at_execs = execs;
    m.discovered_at_secs = seconds_since(start);
    m.parent = parent;
    m.input = input;
    corpus_inputs.push_back(std::move(input));
    entered_library.push_back(!trace.library_path.empty());
    queue.push_back(std::move(m));

    if (!lib_anchor_set && queue.back().risk.r_library != kInvalidRisk) {
      lib_anchor_set = true;
      lib_anchor_t = now();
    }
    refresh_normalization();
    report.queue_over_time.emplace_back(execs, static_cast<uint32_t>(queue.size()));
    emit_stats({{"event", "new_seed"},
                {"id", queue.back().id},
                {"execs", execs},
                {"parent", parent},
                {"r_client", queue.back().risk.r_client},
                {"r_library", queue.back().risk.r_library}});
  }

  void refresh_normalization() {
    std::vector<RiskTuple> risks;
    risks.reserve(queue.size());
    for (const SeedMeta& s : queue) risks.push_back(s.risk);
    auto norms = normalize_risks(risks);

    std::vector<std::optional<double>> merged_col;
    merged_col.reserve(queue.size());
    for (const SeedMeta& s : queue) merged_col.push_back(s.merged_avg);
    std::vector<double> merged_norm;
    normalize_column(merged_norm, merged_col);

    for (size_t i = 0; i < queue.size(); ++i) {
      queue[i].norm = norms[i];
      queue[i].merged_norm = merged_norm[i];
    }
  }

  uint64_t energy_for(const SeedMeta& seed) {
    CampaignClock clk = clock_now();
    if (cfg.mode == Mode::Coverage) return cfg.schedule.base_energy;
    if (cfg.mode == Mode::AflGo || cfg.no_apm) {
      if (seed.merged_norm == kInvalidRisk) return cfg.schedule.base_energy;
      double f = annealing_factor(seed.merged_norm, clk.t_global, t_x(),
                                  cfg.schedule.max_factor_exp);
      long long e = std::llround(static_cast<double>(cfg.schedule.base_energy) * f);
      return e < 1 ? 1 : static_cast<uint64_t>(e);
    }
    return assign_power(seed.norm, clk, cfg.schedule, t_x());
  }

  double fr_for(size_t qi, double t) {
    if (cfg.mode != Mode::LiveFuzz || cfg.no_mos) return 0.0;
    const SeedMeta& seed = queue[qi];
    if (cfg.no_apm) {
      double d = seed.merged_norm;
      double r_lib = entered_library[qi] && d != kInvalidRisk ? d : kInvalidRisk;
      return fine_ratio(t, t_x(), d, r_lib);
    }
    return fine_ratio(t, t_x(), seed.norm.r_client, seed.norm.r_library);
  }

  CampaignReport run() {
    report.cves = spec.cve_list();

    // Startup assertion: initial seeds must not trigger any target.
    for (const auto& s : cfg.initial_seeds) {
      Trace probe = interp.run(s, cfg.step_budget);
      if (!probe.triggers_fired.empty())
        throw SeedTriggersTarget("initial seed triggers " + probe.triggers_fired[0]);
    }
    for (const auto& s : cfg.initial_seeds) run_input(s, -1);
    // Initial seeds enter the queue unconditionally.
    for (size_t i = 0; i < cfg.initial_seeds.size(); ++i) {
      bool queued = false;
      for (const SeedMeta& m : queue)
        if (m.input == cfg.initial_seeds[i]) queued = true;
      if (!queued) {
        interp.run(cfg.initial_seeds[i], cfg.step_budget, trace);
        coverage.is_new_coverage(trace);
        admit(cfg.initial_seeds[i], coverage.last_digest(), -1);
      }
    }

    size_t qi = 0;
    while (!budget_done() && !queue.empty()) {
      const size_t cur = qi % queue.size();
      uint64_t energy = energy_for(queue[cur]);
      for (uint64_t i = 0; i < energy && !budget_done(); ++i) {
        double fr = fr_for(cur, now());
        StackSelection sel = select_operator_stack(rng, fr, op_sets);
        // The corpus view is rebuilt per mutation: an admission may have
        // reallocated the backing vector.
        CorpusView corpus{corpus_inputs};
        std::vector<uint8_t> input =
            mutate(queue[cur].input, sel.ops, rng, corpus);
        run_input(std::move(input), queue[cur].id);
      }
      ++qi;
    }

    report.p_vt = paths.count();
    report.executions = execs;
    report.queue = queue;
    report.wall_secs = seconds_since(start);
    return report;
  }
};

}  // namespace

CampaignReport run_campaign(const Program& program, const TargetSpec& spec,
                            const TargetTuple& tuple, const DistanceMap& apm,
                            const DistanceMap& merged, const CampaignConfig& config) {
  if (config.budget_execs == 0 && config.budget_secs <= 0)
    throw BudgetZero("no budget given");
  if (config.initial_seeds.empty())
    throw ValidationError("initial seed set is empty");

  // Every trigger in the program must belong to a declared vulnerability.
  auto cves = spec.cve_list();
  for (const Function& fn : program.functions)
    for (const Block& b : fn.blocks)
      if (b.trigger &&
          std::find(cves.begin(), cves.end(), b.trigger->cve) == cves.end())
        throw ValidationError("trigger cve " + b.trigger->cve +
                              " has no vulnerable-function entry in the target spec");

  Engine engine(program, spec, tuple, apm, merged, config);
  return engine.run();
}

}  // namespace dgflive
