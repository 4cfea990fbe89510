#include "dgflive/distance.hpp"

#include <algorithm>
#include <deque>
#include <limits>

#include <json.hpp>

namespace dgflive {

using nlohmann::json;

double weighted_path_length(double p_short, double w) {
  return p_short * (2.0 - w) / 2.0;
}

namespace {

constexpr uint32_t kUnreached = std::numeric_limits<uint32_t>::max();

// Unweighted shortest path lengths from start over the adjacency list.
void bfs(const std::vector<std::vector<uint32_t>>& adj, uint32_t start,
         std::vector<uint32_t>& dist) {
  dist.assign(adj.size(), kUnreached);
  dist[start] = 0;
  std::deque<uint32_t> q{start};
  while (!q.empty()) {
    uint32_t n = q.front();
    q.pop_front();
    for (uint32_t m : adj[n])
      if (dist[m] == kUnreached) {
        dist[m] = dist[n] + 1;
        q.push_back(m);
      }
  }
}

double aggregate(const std::vector<double>& terms, bool strict_harmonic) {
  for (double t : terms)
    if (t == 0.0) return 0.0;
  double recip = 0;
  for (double t : terms) recip += 1.0 / t;
  double v = 1.0 / recip;
  return strict_harmonic ? v * static_cast<double>(terms.size()) : v;
}

}  // namespace

std::vector<DistValue> function_distances(
    const std::vector<std::vector<uint32_t>>& callees,
    const std::vector<uint8_t>& in_domain,
    const std::map<uint32_t, double>& target_weights, bool strict_harmonic) {
  std::vector<DistValue> out(callees.size());
  std::vector<uint32_t> dist;
  for (uint32_t n = 0; n < callees.size(); ++n) {
    if (!in_domain[n]) continue;
    if (target_weights.count(n)) {
      out[n] = 0.0;
      continue;
    }
    bfs(callees, n, dist);
    std::vector<double> terms;
    for (const auto& [t, w] : target_weights)
      if (dist[t] != kUnreached)
        terms.push_back(weighted_path_length(static_cast<double>(dist[t]), w));
    if (!terms.empty()) out[n] = aggregate(terms, strict_harmonic);
  }
  return out;
}

std::vector<DistValue> block_distances(const Program& program,
                                       const std::vector<DistValue>& fn_dist,
                                       const std::set<uint32_t>& target_blocks,
                                       std::optional<Owner> domain,
                                       const DistanceOptions& options) {
  std::vector<DistValue> out(program.total_blocks);

  for (uint32_t fi = 0; fi < program.functions.size(); ++fi) {
    const Function& fn = program.functions[fi];
    if (domain && fn.owner != *domain) continue;
    uint32_t nb = static_cast<uint32_t>(fn.blocks.size());

    // Intra-function CFG successors.
    std::vector<std::vector<uint32_t>> succ(nb);
    for (uint32_t b = 0; b < nb; ++b) {
      const Block& blk = fn.blocks[b];
      if (blk.then_block != kReturnTarget)
        succ[b].push_back(static_cast<uint32_t>(blk.then_block));
      if (blk.is_cond && blk.else_block != kReturnTarget)
        succ[b].push_back(static_cast<uint32_t>(blk.else_block));
    }

    // Anchor values: blocks calling a function with a defined distance.
    std::vector<DistValue> anchor(nb);
    for (uint32_t b = 0; b < nb; ++b) {
      double best = std::numeric_limits<double>::infinity();
      for (uint32_t callee : fn.blocks[b].calls)
        if (fn_dist[callee]) best = std::min(best, *fn_dist[callee]);
      if (best != std::numeric_limits<double>::infinity())
        anchor[b] = options.call_scale * best;
    }

    std::vector<uint32_t> dist;
    for (uint32_t b = 0; b < nb; ++b) {
      uint32_t g = program.fn_start[fi] + b;
      if (target_blocks.count(g)) {
        out[g] = 0.0;
        continue;
      }
      bfs(succ, b, dist);
      std::vector<double> terms;
      for (uint32_t a = 0; a < nb; ++a)
        if (anchor[a] && dist[a] != kUnreached)
          terms.push_back(static_cast<double>(dist[a]) + *anchor[a]);
      if (!terms.empty()) out[g] = aggregate(terms, options.strict_harmonic);
    }
  }
  return out;
}

namespace {

std::vector<std::vector<uint32_t>> owner_subgraph(const Program& p, Owner owner) {
  std::vector<std::vector<uint32_t>> adj(p.functions.size());
  for (uint32_t f = 0; f < p.functions.size(); ++f) {
    if (p.functions[f].owner != owner) continue;
    for (uint32_t c : p.callees[f])
      if (p.functions[c].owner == owner) adj[f].push_back(c);
  }
  return adj;
}

std::vector<uint8_t> owner_mask(const Program& p, Owner owner) {
  std::vector<uint8_t> m(p.functions.size(), 0);
  for (uint32_t f = 0; f < p.functions.size(); ++f)
    m[f] = p.functions[f].owner == owner;
  return m;
}

}  // namespace

DistanceMap compute_distance_map(const Program& program, const TargetTuple& tuple,
                                 const DistanceOptions& options) {
  DistanceMap map;
  map.options = options;

  map.d_f_client = function_distances(owner_subgraph(program, Owner::Client),
                                      owner_mask(program, Owner::Client),
                                      tuple.w_cc, options.strict_harmonic);
  map.d_f_library = function_distances(owner_subgraph(program, Owner::Library),
                                       owner_mask(program, Owner::Library),
                                       tuple.w_v, options.strict_harmonic);

  auto client_blocks = block_distances(program, map.d_f_client, tuple.ct_blocks,
                                       Owner::Client, options);
  auto library_blocks = block_distances(program, map.d_f_library, tuple.vt_blocks,
                                        Owner::Library, options);
  map.d_b.resize(program.total_blocks);
  for (uint32_t g = 0; g < program.total_blocks; ++g)
    map.d_b[g] = program.block_owner[g] == Owner::Client ? client_blocks[g]
                                                         : library_blocks[g];
  return map;
}

DistanceMap compute_merged_distance_map(const Program& program,
                                        const TargetTuple& tuple,
                                        const DistanceOptions& options) {
  DistanceMap map;
  map.options = options;
  map.merged = true;

  std::vector<uint8_t> all(program.functions.size(), 1);
  std::vector<DistValue> d_f =
      function_distances(program.callees, all, tuple.w_v, options.strict_harmonic);
  map.d_f_client = d_f;
  map.d_f_library = std::move(d_f);
  map.d_b = block_distances(program, map.d_f_library, tuple.vt_blocks,
                            std::nullopt, options);
  return map;
}

namespace {

json dist_json(const DistValue& v) {
  if (!v) return nullptr;
  return *v;
}

}  // namespace

std::string distance_map_to_json(const Program& program, const DistanceMap& map) {
  json d_f_client = json::object();
  json d_f_library = json::object();
  for (uint32_t f = 0; f < program.functions.size(); ++f) {
    bool client = program.functions[f].owner == Owner::Client;
    if (map.merged || client)
      d_f_client[program.functions[f].name] = dist_json(map.d_f_client[f]);
    if (map.merged || !client)
      d_f_library[program.functions[f].name] = dist_json(map.d_f_library[f]);
  }
  json d_b_ct = json::object();
  json d_b_vt = json::object();
  for (uint32_t g = 0; g < program.total_blocks; ++g) {
    bool client = program.block_owner[g] == Owner::Client;
    if (!map.merged && client)
      d_b_ct[program.block_names[g]] = dist_json(map.d_b[g]);
    else
      d_b_vt[program.block_names[g]] = dist_json(map.d_b[g]);
  }
  json out{{"c", map.options.call_scale},
           {"d_f", {{"client", d_f_client}, {"library", d_f_library}}},
           {"d_b", {{"CT", d_b_ct}, {"VT", d_b_vt}}}};
  return out.dump(2) + "\n";
}

std::string target_tuple_to_json(const Program& program, const TargetTuple& tuple) {
  auto fn_names = [&](const std::set<uint32_t>& fns) {
    std::vector<std::string> out;
    for (uint32_t f : fns) out.push_back(program.functions[f].name);
    std::sort(out.begin(), out.end());
    return out;
  };
  auto block_names = [&](const std::set<uint32_t>& blocks) {
    std::vector<std::string> out;
    for (uint32_t g : blocks) out.push_back(program.block_names[g]);
    std::sort(out.begin(), out.end());
    return out;
  };
  json w_v = json::object();
  for (const auto& [f, w] : tuple.w_v) w_v[program.functions[f].name] = w;
  json w_cc = json::object();
  for (const auto& [f, w] : tuple.w_cc) w_cc[program.functions[f].name] = w;

  json out{{"V", fn_names(tuple.v_fns)},       {"A", fn_names(tuple.a_fns)},
           {"CC", fn_names(tuple.cc_fns)},     {"VT", block_names(tuple.vt_blocks)},
           {"CT", block_names(tuple.ct_blocks)}, {"w_V", w_v},
           {"w_CC", w_cc},                     {"empty_cc", tuple.empty_cc}};
  return out.dump(2) + "\n";
}

namespace {

uint32_t fn_by_name(const Program& p, const std::string& name) {
  auto ix = p.find_function(name);
  if (!ix) throw ParseError("unknown function '" + name + "' in cached artifact");
  return *ix;
}

uint32_t gid_by_name(const Program& p, const std::string& name) {
  for (uint32_t g = 0; g < p.total_blocks; ++g)
    if (p.block_names[g] == name) return g;
  throw ParseError("unknown block '" + name + "' in cached artifact");
}

DistValue dist_from_json(const json& v) {
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

}  // namespace

DistanceMap distance_map_from_json(const Program& program, const std::string& text,
                                   bool merged) {
  json doc = json::parse(text);
  DistanceMap map;
  map.merged = merged;
  map.options.call_scale = doc.at("c").get<double>();
  map.d_f_client.resize(program.functions.size());
  map.d_f_library.resize(program.functions.size());
  map.d_b.resize(program.total_blocks);
  for (const auto& [name, v] : doc.at("d_f").at("client").items())
    map.d_f_client[fn_by_name(program, name)] = dist_from_json(v);
  for (const auto& [name, v] : doc.at("d_f").at("library").items())
    map.d_f_library[fn_by_name(program, name)] = dist_from_json(v);
  for (const auto& [name, v] : doc.at("d_b").at("CT").items())
    map.d_b[gid_by_name(program, name)] = dist_from_json(v);
  for (const auto& [name, v] : doc.at("d_b").at("VT").items())
    map.d_b[gid_by_name(program, name)] = dist_from_json(v);
  if (merged) map.d_f_library = map.d_f_client;
  return map;
}

TargetTuple target_tuple_from_json(const Program& program, const std::string& text) {
  json doc = json::parse(text);
  TargetTuple t;
  for (const auto& v : doc.at("V")) t.v_fns.insert(fn_by_name(program, v));
  for (const auto& v : doc.at("A")) t.a_fns.insert(fn_by_name(program, v));
  for (const auto& v : doc.at("CC")) t.cc_fns.insert(fn_by_name(program, v));
  for (const auto& v : doc.at("VT")) t.vt_blocks.insert(gid_by_name(program, v));
  for (const auto& v : doc.at("CT")) t.ct_blocks.insert(gid_by_name(program, v));
  for (const auto& [name, w] : doc.at("w_V").items())
    t.w_v[fn_by_name(program, name)] = w.get<double>();
  for (const auto& [name, w] : doc.at("w_CC").items())
    t.w_cc[fn_by_name(program, name)] = w.get<double>();
  t.empty_cc = doc.at("empty_cc").get<bool>();
  return t;
}

}  // namespace dgflive
