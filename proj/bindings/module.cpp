// Python bindings over the core analysis and campaign operations.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "dgflive/campaign.hpp"
#include "dgflive/report.hpp"

namespace py = pybind11;
using namespace dgflive;

namespace {

std::vector<uint8_t> to_bytes(const py::bytes& b) {
  std::string s = b;
  return {s.begin(), s.end()};
}

py::dict trace_to_dict(const Program& program, const Trace& trace) {
  auto names = [&](const std::vector<uint32_t>& path) {
    py::list out;
    for (uint32_t g : path) out.append(program.block_names[g]);
    return out;
  };
  py::dict hits;
  for (const auto& [g, c] : trace.hit_counts)
    hits[py::str(program.block_names[g])] = c;
  py::list steps;
  for (uint32_t g : trace.steps) steps.append(program.block_names[g]);

  py::dict d;
  d["steps"] = steps;
  d["hit_counts"] = hits;
  d["client_path"] = names(trace.client_path);
  d["library_path"] = names(trace.library_path);
  d["triggers_fired"] = trace.triggers_fired;
  d["terminated"] = trace.terminated == Terminated::Returned
                        ? "returned"
                        : "step_budget_exhausted";
  return d;
}

py::dict risk_to_dict(const RiskTuple& r) {
  py::dict d;
  d["r_client"] = r.r_client;
  d["r_library"] = r.r_library;
  d["d_s_ct"] = r.d_s_ct;
  d["d_s_vt"] = r.d_s_vt;
  d["d_r_ct"] = r.d_r_ct;
  d["d_r_vt"] = r.d_r_vt;
  d["is"] = r.is_score;
  return d;
}

}  // namespace

PYBIND11_MODULE(_dgflive, m) {
  m.doc() = "directed greybox fuzzing engine for library-vulnerability exposure";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

  py::class_<Program>(m, "Program")
      .def_static("load", &Program::load, py::arg("text"))
      .def_property_readonly("name", [](const Program& p) { return p.name; })
      .def_property_readonly("entry", [](const Program& p) { return p.entry; })
      .def_property_readonly("function_names",
                             [](const Program& p) {
                               std::vector<std::string> out;
                               for (const auto& f : p.functions) out.push_back(f.name);
                               return out;
                             })
      .def_property_readonly("block_count",
                             [](const Program& p) { return p.total_blocks; })
      .def("execute",
           [](const Program& p, const py::bytes& input, uint32_t step_budget) {
             return trace_to_dict(p, execute(p, to_bytes(input), step_budget));
           },
           py::arg("input"), py::arg("step_budget") = kDefaultStepBudget);

  py::class_<TargetSpec>(m, "TargetSpec")
      .def_static("load", &TargetSpec::load, py::arg("text"))
      .def_property_readonly("cves", &TargetSpec::cve_list);

  m.def("bucket_hits", &bucket_hits, py::arg("count"));
  m.def("annealing_factor", &annealing_factor, py::arg("r_norm"), py::arg("t"),
        py::arg("t_x"), py::arg("max_factor_exp") = 10.0);
  m.def("fine_ratio", &fine_ratio, py::arg("t"), py::arg("t_x"),
        py::arg("r_client"), py::arg("r_library"));
  m.def("weighted_path_length", &weighted_path_length, py::arg("p_short"),
        py::arg("w"));
  m.def("path_length", &path_length, py::arg("k"), py::arg("d_s"));

  // One-call static phase: returns (tuple_json, distances_json).
  m.def("analyze",
        [](const std::string& program_text, const std::string& targets_text,
           double c, bool strict_harmonic) {
          Program p = Program::load(program_text);
          TargetSpec spec = TargetSpec::load(targets_text);
          TargetTuple tuple = build_target_tuple(p, spec);
          DistanceOptions opts{c, strict_harmonic};
          DistanceMap map = compute_distance_map(p, tuple, opts);
          return py::make_tuple(target_tuple_to_json(p, tuple),
                                distance_map_to_json(p, map));
        },
        py::arg("program_text"), py::arg("targets_text"), py::arg("c") = 10.0,
        py::arg("strict_harmonic") = false);

  // Risk diagnosis of one input against a program/targets pair.
  m.def("diagnose",
        [](const std::string& program_text, const std::string& targets_text,
           const py::bytes& input) {
          Program p = Program::load(program_text);
          TargetSpec spec = TargetSpec::load(targets_text);
          TargetTuple tuple = build_target_tuple(p, spec);
          DistanceMap map = compute_distance_map(p, tuple);
          Trace trace = execute(p, to_bytes(input));
          RiskTuple risk = seed_risk(trace, map, spec, p, tuple.w_v);
          py::dict out = trace_to_dict(p, trace);
          out["risk"] = risk_to_dict(risk);
          return out;
        },
        py::arg("program_text"), py::arg("targets_text"), py::arg("input"));

  m.def("run_campaign",
        [](const std::string& program_text, const std::string& targets_text,
           const std::string& mode, uint64_t budget_execs, uint64_t rng_seed,
           uint32_t step_budget, const std::vector<py::bytes>& seeds,
           bool stop_on_trigger, double t_x_sim) {
          Program p = Program::load(program_text);
          TargetSpec spec = TargetSpec::load(targets_text);
          TargetTuple tuple = build_target_tuple(p, spec);
          DistanceMap apm = compute_distance_map(p, tuple);
          DistanceMap merged = compute_merged_distance_map(p, tuple);

          CampaignConfig cfg;
          auto parsed = parse_mode(mode);
          if (!parsed) throw ValidationError("unknown mode '" + mode + "'");
          cfg.mode = *parsed;
          cfg.budget_execs = budget_execs;
          cfg.sim_clock = true;
          cfg.rng_seed = rng_seed;
          cfg.step_budget = step_budget;
          cfg.stop_when_all_triggered = stop_on_trigger;
          cfg.schedule.t_x_sim = t_x_sim;
          for (const auto& s : seeds) cfg.initial_seeds.push_back(to_bytes(s));
          if (cfg.initial_seeds.empty()) cfg.initial_seeds.push_back({0, 0, 0, 0});

          CampaignReport report = run_campaign(p, spec, tuple, apm, merged, cfg);
          nlohmann::json cfg_json{{"mode", mode},
                                  {"rng_seed", rng_seed},
                                  {"budget_execs", budget_execs}};
          std::string doc = report_to_json(report, cfg_json.dump());
          py::module_ json_mod = py::module_::import("json");
          return json_mod.attr("loads")(doc);
        },
        py::arg("program_text"), py::arg("targets_text"),
        py::arg("mode") = "livefuzz", py::arg("budget_execs") = 100000,
        py::arg("rng_seed") = 1, py::arg("step_budget") = 512,
        py::arg("seeds") = std::vector<py::bytes>{},
        py::arg("stop_on_trigger") = true, py::arg("t_x_sim") = 50000.0);
}
