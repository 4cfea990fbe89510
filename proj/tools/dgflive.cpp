#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "dgflive/campaign.hpp"
#include "dgflive/report.hpp"
#include "dgflive/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dgflive;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitSeedTriggers = 3;
constexpr uint32_t kCacheVersion = 1;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  if (fs::path(path).has_parent_path())
    fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  out << content;
}

struct Analysis {
  Program program;
  TargetSpec spec;
  TargetTuple tuple;
  DistanceMap apm;
  DistanceMap merged;
  std::string program_text;
  std::string targets_text;
  double analysis_secs = 0;
  bool from_cache = false;
};

uint64_t cache_key(const std::string& program_text, const std::string& targets_text,
                   const DistanceOptions& opts) {
  uint64_t key = fnv1a64(program_text);
  key = mix64(key ^ fnv1a64(targets_text));
  key = mix64(key ^ static_cast<uint64_t>(opts.call_scale * 1024.0));
  key = mix64(key ^ (opts.strict_harmonic ? 2 : 1) ^ (uint64_t{kCacheVersion} << 32));
  return key;
}

std::string cache_path(const std::string& program_path, uint64_t key) {
  fs::path p(program_path);
  char hex[17];
  snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(key));
  return (p.parent_path() / ".dgflive-cache" / (p.stem().string() + "-" + hex + ".json"))
      .string();
}

Analysis load_analysis(const std::string& program_path, const std::string& targets_path,
                       const DistanceOptions& opts, bool use_cache) {
  Analysis a;
  a.program_text = read_file(program_path);
  a.targets_text = read_file(targets_path);
  a.program = Program::load(a.program_text);
  a.spec = TargetSpec::load(a.targets_text);

  uint64_t key = cache_key(a.program_text, a.targets_text, opts);
  std::string cpath = cache_path(program_path, key);
  if (use_cache && fs::exists(cpath)) {
    try {
      json doc = json::parse(read_file(cpath));
      a.tuple = target_tuple_from_json(a.program, doc.at("tuple").dump());
      a.apm = distance_map_from_json(a.program, doc.at("distances").dump(), false);
      a.merged = distance_map_from_json(a.program, doc.at("merged").dump(), true);
      a.apm.options = opts;
      a.merged.options = opts;
      a.from_cache = true;
      return a;
    } catch (const std::exception&) {
      // stale or corrupt cache entry; fall through to recompute
    }
  }

  auto t0 = std::chrono::steady_clock::now();
  a.tuple = build_target_tuple(a.program, a.spec);
  a.apm = compute_distance_map(a.program, a.tuple, opts);
  a.merged = compute_merged_distance_map(a.program, a.tuple, opts);
  a.analysis_secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                        .count();

  if (use_cache) {
    json doc{{"version", kCacheVersion},
             {"tuple", json::parse(target_tuple_to_json(a.program, a.tuple))},
             {"distances", json::parse(distance_map_to_json(a.program, a.apm))},
             {"merged", json::parse(distance_map_to_json(a.program, a.merged))}};
    try {
      write_file(cpath, doc.dump(2) + "\n");
    } catch (const std::exception&) {
      // cache directory not writable; analysis still succeeds
    }
  }
  return a;
}

struct FuzzOptions {
  std::string program_path, targets_path;
  std::string mode = "livefuzz";
  uint64_t rng_seed = 1;
  bool rng_seed_given = false;
  uint64_t budget_execs = 0;
  double budget_secs = 0;
  bool sim_clock = false;
  std::string out_dir = "dgflive-out";
  std::vector<std::string> seed_hex;
  std::vector<std::string> seed_files;
  uint32_t step_budget = kDefaultStepBudget;
  ScheduleConfig schedule;
  DistanceOptions distance;
  bool no_apm = false, no_mos = false;
  bool stop_on_trigger = false;
  bool no_cache = false;
  std::string stats_file;
};

// Pseudo-modes map ablation switches onto the livefuzz engine.
bool resolve_mode(const std::string& name, CampaignConfig& cfg) {
  if (name == "livefuzz-noapm") {
    cfg.mode = Mode::LiveFuzz;
    cfg.no_apm = true;
    return true;
  }
  if (name == "livefuzz-nomos") {
    cfg.mode = Mode::LiveFuzz;
    cfg.no_mos = true;
    return true;
  }
  auto m = parse_mode(name);
  if (!m) return false;
  cfg.mode = *m;
  return true;
}

std::vector<std::vector<uint8_t>> gather_seeds(const FuzzOptions& opt) {
  std::vector<std::vector<uint8_t>> seeds;
  for (const std::string& h : opt.seed_hex) seeds.push_back(hex_to_bytes(h));
  for (const std::string& f : opt.seed_files) {
    std::string text = read_file(f);
    seeds.emplace_back(text.begin(), text.end());
  }
  if (seeds.empty()) seeds.push_back({0, 0, 0, 0});  // documented default
  return seeds;
}

json resolved_config_json(const FuzzOptions& opt, const CampaignConfig& cfg,
                          const Analysis& a, const std::string& mode_label) {
  json seeds = json::array();
  for (const auto& s : cfg.initial_seeds) seeds.push_back(bytes_to_hex(s));
  char phash[17], thash[17];
  snprintf(phash, sizeof phash, "%016llx",
           static_cast<unsigned long long>(fnv1a64(a.program_text)));
  snprintf(thash, sizeof thash, "%016llx",
           static_cast<unsigned long long>(fnv1a64(a.targets_text)));
  return json{{"program", opt.program_path},
              {"program_hash", phash},
              {"targets", opt.targets_path},
              {"targets_hash", thash},
              {"mode", mode_label},
              {"rng_seed", cfg.rng_seed},
              {"sim_clock", cfg.sim_clock},
              {"budget_execs", cfg.budget_execs},
              {"budget_secs", cfg.budget_secs},
              {"step_budget", cfg.step_budget},
              {"no_apm", cfg.no_apm},
              {"no_mos", cfg.no_mos},
              {"stop_when_all_triggered", cfg.stop_when_all_triggered},
              {"seeds", seeds},
              {"schedule",
               {{"t_x", cfg.schedule.t_x},
                {"t_x_sim", cfg.schedule.t_x_sim},
                {"max_factor_exp", cfg.schedule.max_factor_exp},
                {"base_energy", cfg.schedule.base_energy}}},
              {"distance",
               {{"c", cfg.distance.call_scale},
                {"strict_harmonic", cfg.distance.strict_harmonic}}}};
}

uint64_t env_rng_seed(uint64_t fallback) {
  const char* env = std::getenv("DGF_LIVE_SEED");
  if (!env) return fallback;
  return std::strtoull(env, nullptr, 10);
}

int cmd_analyze(const std::string& program_path, const std::string& targets_path,
                const std::string& out_dir, const DistanceOptions& opts,
                bool no_cache) {
  Analysis a = load_analysis(program_path, targets_path, opts, !no_cache);
  fs::create_directories(out_dir);
  write_file(out_dir + "/tuple.json", target_tuple_to_json(a.program, a.tuple));
  write_file(out_dir + "/distances.json", distance_map_to_json(a.program, a.apm));
  if (a.tuple.empty_cc)
    std::cerr << "warning: CC is empty (no client caller of the reachable library "
                 "set); fuzzing still proceeds\n";
  std::cout << "analysis wall time: "
            << (a.from_cache ? 0.0 : a.analysis_secs) << " s"
            << (a.from_cache ? " (cached)" : "") << "\n";
  std::cout << "wrote " << out_dir << "/tuple.json and " << out_dir
            << "/distances.json\n";
  return kExitOk;
}

int cmd_fuzz(const FuzzOptions& opt) {
  if (opt.budget_execs == 0 && opt.budget_secs <= 0) {
    std::cerr << "error: no budget given (use --budget-execs and/or --budget-secs)\n";
    return kExitValidation;
  }
  CampaignConfig cfg;
  if (!resolve_mode(opt.mode, cfg)) {
    std::cerr << "error: unknown mode '" << opt.mode << "'\n";
    return kExitValidation;
  }
  cfg.no_apm |= opt.no_apm;
  cfg.no_mos |= opt.no_mos;
  cfg.budget_execs = opt.budget_execs;
  cfg.budget_secs = opt.budget_secs;
  cfg.sim_clock = opt.sim_clock;
  cfg.rng_seed = opt.rng_seed_given ? opt.rng_seed : env_rng_seed(opt.rng_seed);
  cfg.schedule = opt.schedule;
  cfg.distance = opt.distance;
  cfg.step_budget = opt.step_budget;
  cfg.stop_when_all_triggered = opt.stop_on_trigger;
  cfg.stats_path = opt.stats_file;
  cfg.initial_seeds = gather_seeds(opt);

  Analysis a = load_analysis(opt.program_path, opt.targets_path, opt.distance,
                             !opt.no_cache);
  CampaignReport report = run_campaign(a.program, a.spec, a.tuple, a.apm, a.merged, cfg);

  fs::create_directories(opt.out_dir);
  json resolved = resolved_config_json(opt, cfg, a, opt.mode);
  write_file(opt.out_dir + "/report.json", report_to_json(report, resolved.dump()));
  std::string csv = report_csv_header(false);
  append_report_csv(csv, "", opt.mode, 0, report);
  write_file(opt.out_dir + "/report.csv", csv);
  write_corpus(opt.out_dir + "/corpus", report);

  std::cout << "mode " << opt.mode << ", " << report.executions << " execs, queue "
            << report.queue.size() << ", P_vt " << report.p_vt << "\n";
  for (const std::string& cve : report.cves) {
    auto it = report.triggered.find(cve);
    if (it != report.triggered.end())
      std::cout << "  " << cve << " triggered at exec " << it->second.tte_execs
                << " (" << it->second.tte_secs << " s), input "
                << bytes_to_hex(it->second.input) << "\n";
    else
      std::cout << "  " << cve << " not triggered\n";
  }
  std::cout << "report: " << opt.out_dir << "/report.json\n";
  return kExitOk;
}

struct BenchCase {
  std::string name, program, targets;
  uint64_t budget_execs = 0;
  double budget_secs = 0;
  uint32_t step_budget = kDefaultStepBudget;
  double t_x_sim = 50000;
  std::vector<std::vector<uint8_t>> seeds;
};

int cmd_bench(const std::string& suite_path, uint64_t runs_override,
              const std::vector<std::string>& modes_override,
              const std::string& out_dir, unsigned jobs) {
  json suite = json::parse(read_file(suite_path));
  fs::path suite_dir = fs::path(suite_path).parent_path();

  uint64_t runs = suite.value("runs", uint64_t{5});
  if (runs_override) runs = runs_override;
  uint64_t seed_base = suite.value("rng_seed_base", uint64_t{1});
  std::vector<std::string> modes;
  if (!modes_override.empty())
    modes = modes_override;
  else
    for (const auto& m : suite.at("modes")) modes.push_back(m.get<std::string>());

  std::vector<BenchCase> cases;
  for (const json& jc : suite.at("cases")) {
    BenchCase c;
    c.name = jc.at("name").get<std::string>();
    c.program = (suite_dir / jc.at("program").get<std::string>()).string();
    c.targets = (suite_dir / jc.at("targets").get<std::string>()).string();
    c.budget_execs = jc.value("budget_execs", uint64_t{0});
    c.budget_secs = jc.value("budget_secs", 0.0);
    c.step_budget = jc.value("step_budget", kDefaultStepBudget);
    c.t_x_sim = jc.value("t_x_sim", 50000.0);
    if (jc.contains("seeds"))
      for (const auto& s : jc.at("seeds")) c.seeds.push_back(hex_to_bytes(s));
    if (c.seeds.empty()) c.seeds.push_back({0, 0, 0, 0});
    if (c.budget_execs == 0 && c.budget_secs <= 0)
      throw ValidationError("case " + c.name + ": no budget given");
    cases.push_back(std::move(c));
  }

  struct Task {
    size_t case_ix;
    std::string mode;
    uint64_t run;
    CampaignReport report;
  };
  std::vector<Task> tasks;
  for (size_t ci = 0; ci < cases.size(); ++ci)
    for (const std::string& mode : modes)
      for (uint64_t r = 0; r < runs; ++r) tasks.push_back({ci, mode, r, {}});

  // Analyses are shared per case and immutable during the runs.
  std::vector<Analysis> analyses;
  for (const BenchCase& c : cases)
    analyses.push_back(load_analysis(c.program, c.targets, DistanceOptions{}, true));

  auto run_task = [&](Task& t) {
    const BenchCase& c = cases[t.case_ix];
    const Analysis& a = analyses[t.case_ix];
    CampaignConfig cfg;
    if (!resolve_mode(t.mode, cfg))
      throw ValidationError("unknown mode '" + t.mode + "' in suite");
    cfg.budget_execs = c.budget_execs;
    cfg.budget_secs = c.budget_secs;
    cfg.sim_clock = true;
    cfg.rng_seed = seed_base + t.run;
    cfg.step_budget = c.step_budget;
    cfg.schedule.t_x_sim = c.t_x_sim;
    cfg.initial_seeds = c.seeds;
    cfg.stop_when_all_triggered = true;
    t.report = run_campaign(a.program, a.spec, a.tuple, a.apm, a.merged, cfg);
  };

  if (jobs <= 1) {
    for (Task& t : tasks) run_task(t);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j)
      pool.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1))
          run_task(tasks[i]);
      });
    for (auto& th : pool) th.join();
  }

  fs::create_directories(out_dir);
  std::string csv = report_csv_header(true);
  for (const Task& t : tasks)
    append_report_csv(csv, cases[t.case_ix].name, t.mode, t.run, t.report);
  write_file(out_dir + "/bench.csv", csv);

  // Per-(case, cve, mode) medians plus rank-sum p-values against livefuzz.
  // Untriggered runs are censored at the execution budget.
  std::string summary =
      "case,cve,mode,runs,triggered_runs,median_tte_execs,median_p_vt,"
      "p_vs_livefuzz\n";
  for (size_t ci = 0; ci < cases.size(); ++ci) {
    const Analysis& a = analyses[ci];
    std::vector<std::string> cves = a.spec.cve_list();
    if (cves.empty()) cves.push_back("");
    for (const std::string& cve : cves) {
      auto ttes_for = [&](const std::string& mode) {
        std::vector<double> out;
        for (const Task& t : tasks) {
          if (t.case_ix != ci || t.mode != mode) continue;
          auto it = t.report.triggered.find(cve);
          out.push_back(it != t.report.triggered.end()
                            ? static_cast<double>(it->second.tte_execs)
                            : static_cast<double>(cases[ci].budget_execs));
        }
        return out;
      };
      std::vector<double> live = ttes_for("livefuzz");
      for (const std::string& mode : modes) {
        std::vector<double> ttes = ttes_for(mode);
        std::vector<double> pvts;
        uint64_t triggered = 0;
        for (const Task& t : tasks)
          if (t.case_ix == ci && t.mode == mode) {
            pvts.push_back(static_cast<double>(t.report.p_vt));
            if (t.report.triggered.count(cve)) ++triggered;
          }
        std::string p = "";
        if (mode != "livefuzz" && !live.empty())
          p = std::to_string(mann_whitney_less(live, ttes));
        summary += cases[ci].name + "," + cve + "," + mode + "," +
                   std::to_string(ttes.size()) + "," + std::to_string(triggered) +
                   "," + std::to_string(median(ttes)) + "," +
                   std::to_string(median(pvts)) + "," + p + "\n";
      }
    }
  }
  write_file(out_dir + "/summary.csv", summary);
  std::cout << "wrote " << out_dir << "/bench.csv and " << out_dir
            << "/summary.csv (" << tasks.size() << " campaigns)\n";
  return kExitOk;
}

int cmd_trace(const std::string& program_path, const std::string& targets_path,
              const std::string& input_path, const std::string& input_hex,
              bool as_json, const DistanceOptions& opts, bool no_cache) {
  Analysis a = load_analysis(program_path, targets_path, opts, !no_cache);
  std::vector<uint8_t> input;
  if (!input_hex.empty()) {
    input = hex_to_bytes(input_hex);
  } else {
    std::string text = read_file(input_path);
    input.assign(text.begin(), text.end());
  }

  Trace trace = execute(a.program, input);
  RiskTuple risk = seed_risk(trace, a.apm, a.spec, a.program, a.tuple.w_v);

  auto names = [&](const std::vector<uint32_t>& path) {
    std::vector<std::string> out;
    for (uint32_t g : path) out.push_back(a.program.block_names[g]);
    return out;
  };

  if (as_json) {
    json out{{"input", bytes_to_hex(input)},
             {"xi", names(trace.client_path)},
             {"gamma", names(trace.library_path)},
             {"risk",
              {{"r_client", risk.r_client},
               {"r_library", risk.r_library},
               {"d_s_ct", risk.d_s_ct},
               {"d_s_vt", risk.d_s_vt},
               {"d_r_ct", risk.d_r_ct},
               {"d_r_vt", risk.d_r_vt},
               {"is", risk.is_score}}},
             {"triggers", trace.triggers_fired},
             {"terminated",
              trace.terminated == Terminated::Returned ? "returned"
                                                       : "step_budget_exhausted"}};
    std::cout << out.dump(2) << "\n";
    return kExitOk;
  }

  auto join = [](const std::vector<std::string>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + v[i];
    return out.empty() ? "(empty)" : out;
  };
  std::cout << "input: " << input.size() << " bytes\n";
  std::cout << "client path xi:   " << join(names(trace.client_path)) << "\n";
  std::cout << "library path gamma: " << join(names(trace.library_path)) << "\n";
  std::cout << "client:  d_s=" << risk.d_s_ct << " d_r=" << risk.d_r_ct
            << " R=" << risk.r_client << "\n";
  std::cout << "library: d_s=" << risk.d_s_vt << " d_r=" << risk.d_r_vt
            << " R=" << risk.r_library << "\n";
  std::cout << "IS: " << risk.is_score << "\n";
  std::cout << "triggers:";
  for (const auto& t : trace.triggers_fired) std::cout << " " << t;
  if (trace.triggers_fired.empty()) std::cout << " (none)";
  std::cout << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"directed greybox fuzzing engine for library-vulnerability "
               "exposure from client programs"};
  app.require_subcommand(1);
  app.set_config("--config");

  DistanceOptions dist_opts;
  bool no_cache = false;

  auto add_distance_flags = [&](CLI::App* cmd) {
    cmd->add_option("--c", dist_opts.call_scale, "call-scale constant (default 10)");
    cmd->add_flag("--strict-harmonic", dist_opts.strict_harmonic,
                  "divided harmonic mean instead of reciprocal sum");
    cmd->add_flag("--no-cache", no_cache, "do not read or write analysis cache");
  };

  // analyze
  auto* analyze = app.add_subcommand("analyze", "static phase: target tuple + distances");
  std::string program_path, targets_path, out_dir = "dgflive-out";
  analyze->add_option("--program", program_path, "program document")->required();
  analyze->add_option("--targets", targets_path, "target spec document")->required();
  analyze->add_option("--out", out_dir, "output directory");
  add_distance_flags(analyze);

  // fuzz
  auto* fuzz = app.add_subcommand("fuzz", "run one campaign");
  FuzzOptions fopt;
  fuzz->add_option("--program", fopt.program_path, "program document")->required();
  fuzz->add_option("--targets", fopt.targets_path, "target spec document")->required();
  fuzz->add_option("--mode", fopt.mode,
                   "livefuzz | aflgo | coverage | livefuzz-noapm | livefuzz-nomos");
  auto* seed_opt = fuzz->add_option("--rng-seed", fopt.rng_seed,
                                    "campaign seed (env DGF_LIVE_SEED as fallback)");
  fuzz->add_option("--budget-execs", fopt.budget_execs, "execution budget");
  fuzz->add_option("--budget-secs", fopt.budget_secs, "wall-clock budget");
  fuzz->add_flag("--sim-clock", fopt.sim_clock,
                 "schedule time in executed inputs (deterministic)");
  fuzz->add_option("--out", fopt.out_dir, "output directory");
  fuzz->add_option("--seed-hex", fopt.seed_hex, "initial seed as hex (repeatable)");
  fuzz->add_option("--seed-file", fopt.seed_files, "initial seed file (repeatable)");
  fuzz->add_option("--step-budget", fopt.step_budget, "interpreter step budget");
  fuzz->add_option("--t-x", fopt.schedule.t_x, "exploitation switch time (s)");
  fuzz->add_option("--t-x-sim", fopt.schedule.t_x_sim,
                   "exploitation switch time (execs, sim clock)");
  fuzz->add_option("--base-energy", fopt.schedule.base_energy, "base energy");
  fuzz->add_flag("--no-apm", fopt.no_apm, "ablation: AFLGo average distance");
  fuzz->add_flag("--no-mos", fopt.no_mos, "ablation: uniform HMS operator draws");
  fuzz->add_flag("--stop-on-trigger", fopt.stop_on_trigger,
                 "stop once every CVE has fired");
  fuzz->add_option("--stats-file", fopt.stats_file, "NDJSON event stream");
  add_distance_flags(fuzz);

  // bench
  auto* bench = app.add_subcommand("bench", "seeded campaign matrix + aggregates");
  std::string suite_path, bench_out = "dgflive-bench";
  uint64_t runs_override = 0;
  std::vector<std::string> modes_override;
  unsigned jobs = 1;
  bench->add_option("--suite", suite_path, "suite document")->required();
  bench->add_option("--runs", runs_override, "runs per (case, mode)");
  bench->add_option("--modes", modes_override, "modes to run")->delimiter(',');
  bench->add_option("--out", bench_out, "output directory");
  bench->add_option("--jobs", jobs, "parallel campaigns");

  // trace
  auto* trace = app.add_subcommand("trace", "diagnose one input");
  std::string input_path, input_hex;
  bool trace_json = false;
  trace->add_option("--program", program_path, "program document")->required();
  trace->add_option("--targets", targets_path, "target spec document")->required();
  trace->add_option("--input", input_path, "input file");
  trace->add_option("--hex", input_hex, "input as hex string");
  trace->add_flag("--json", trace_json, "machine-readable output");
  add_distance_flags(trace);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (analyze->parsed())
      return cmd_analyze(program_path, targets_path, out_dir, dist_opts, no_cache);
    if (fuzz->parsed()) {
      fopt.rng_seed_given = seed_opt->count() > 0;
      fopt.distance = dist_opts;
      return cmd_fuzz(fopt);
    }
    if (bench->parsed())
      return cmd_bench(suite_path, runs_override, modes_override, bench_out, jobs);
    if (trace->parsed()) {
      if (input_path.empty() && input_hex.empty()) {
        std::cerr << "error: trace needs --input or --hex\n";
        return kExitValidation;
      }
      return cmd_trace(program_path, targets_path, input_path, input_hex, trace_json,
                       dist_opts, no_cache);
    }
  } catch (const SeedTriggersTarget& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSeedTriggers;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}
