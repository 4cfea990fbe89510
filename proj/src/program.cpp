#include "dgflive/program.hpp"

#include <algorithm>
#include <unordered_set>

#include <json.hpp>

namespace dgflive {

using nlohmann::json;

namespace {

[[noreturn]] void parse_fail(const std::string& ctx, const std::string& what) {
  throw ParseError(ctx + ": " + what);
}

void expect_object(const json& j, const std::string& ctx) {
  if (!j.is_object()) parse_fail(ctx, "expected an object");
}

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                    const std::string& ctx) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok) parse_fail(ctx, "unknown field '" + it.key() + "'");
  }
}

const json& need(const json& obj, const char* key, const std::string& ctx) {
  auto it = obj.find(key);
  if (it == obj.end()) parse_fail(ctx, std::string("missing field '") + key + "'");
  return *it;
}

std::string need_string(const json& obj, const char* key, const std::string& ctx) {
  const json& v = need(obj, key, ctx);
  if (!v.is_string()) parse_fail(ctx, std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

uint32_t guard_int(const json& v, uint32_t max, const std::string& ctx) {
  if (!v.is_number_integer() || v.get<int64_t>() < 0 ||
      v.get<int64_t>() > static_cast<int64_t>(max))
    parse_fail(ctx, "expected an integer in [0, " + std::to_string(max) + "]");
  return static_cast<uint32_t>(v.get<int64_t>());
}

int32_t parse_guard(const json& g, std::vector<Guard>& pool, const std::string& ctx) {
  expect_object(g, ctx);
  if (g.size() != 1) parse_fail(ctx, "guard must have exactly one constructor key");
  const std::string key = g.begin().key();
  const json& args = g.begin().value();

  auto leaf = [&](Guard::Kind kind, uint32_t vmax) {
    if (!args.is_array() || args.size() != 2)
      parse_fail(ctx, "'" + key + "' takes [offset, value]");
    Guard gd;
    gd.kind = kind;
    gd.offset = guard_int(args[0], 1u << 30, ctx + "." + key);
    gd.value = guard_int(args[1], vmax, ctx + "." + key);
    pool.push_back(gd);
    return static_cast<int32_t>(pool.size() - 1);
  };

  if (key == "byte_eq") return leaf(Guard::Kind::ByteEq, 255);
  if (key == "byte_ge") return leaf(Guard::Kind::ByteGe, 255);
  if (key == "byte_le") return leaf(Guard::Kind::ByteLe, 255);
  if (key == "u16_eq") return leaf(Guard::Kind::U16Eq, 65535);
  if (key == "len_ge") {
    Guard gd;
    gd.kind = Guard::Kind::LenGe;
    if (args.is_array() && args.size() == 1)
      gd.offset = guard_int(args[0], 1u << 30, ctx + ".len_ge");
    else
      gd.offset = guard_int(args, 1u << 30, ctx + ".len_ge");
    pool.push_back(gd);
    return static_cast<int32_t>(pool.size() - 1);
  }
  if (key == "and" || key == "or") {
    if (!args.is_array() || args.size() != 2)
      parse_fail(ctx, "'" + key + "' takes [g1, g2]");
    int32_t l = parse_guard(args[0], pool, ctx + "." + key);
    int32_t r = parse_guard(args[1], pool, ctx + "." + key);
    Guard gd;
    gd.kind = key == "and" ? Guard::Kind::And : Guard::Kind::Or;
    gd.lhs = l;
    gd.rhs = r;
    pool.push_back(gd);
    return static_cast<int32_t>(pool.size() - 1);
  }
  if (key == "not") {
    const json& inner = args.is_array() && args.size() == 1 ? args[0] : args;
    int32_t l = parse_guard(inner, pool, ctx + ".not");
    Guard gd;
    gd.kind = Guard::Kind::Not;
    gd.lhs = l;
    pool.push_back(gd);
    return static_cast<int32_t>(pool.size() - 1);
  }
  parse_fail(ctx, "unknown guard constructor '" + key + "'");
}

}  // namespace

bool eval_guard(const std::vector<Guard>& pool, int32_t root,
                std::span<const uint8_t> input) {
  const Guard& g = pool[static_cast<size_t>(root)];
  switch (g.kind) {
    case Guard::Kind::ByteEq:
      return g.offset < input.size() && input[g.offset] == g.value;
    case Guard::Kind::ByteGe:
      return g.offset < input.size() && input[g.offset] >= g.value;
    case Guard::Kind::ByteLe:
      return g.offset < input.size() && input[g.offset] <= g.value;
    case Guard::Kind::U16Eq: {
      if (g.offset + 1 >= input.size()) return false;
      uint32_t v = input[g.offset] | (static_cast<uint32_t>(input[g.offset + 1]) << 8);
      return v == g.value;
    }
    case Guard::Kind::LenGe:
      return input.size() >= g.offset;
    case Guard::Kind::And:
      return eval_guard(pool, g.lhs, input) && eval_guard(pool, g.rhs, input);
    case Guard::Kind::Or:
      return eval_guard(pool, g.lhs, input) || eval_guard(pool, g.rhs, input);
    case Guard::Kind::Not:
      return !eval_guard(pool, g.lhs, input);
  }
  return false;
}

Program Program::load(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }

  Program p;
  expect_object(doc, "document");
  reject_unknown(doc, {"name", "entry", "functions"}, "document");
  p.name = need_string(doc, "name", "document");
  p.entry = need_string(doc, "entry", "document");
  const json& fns = need(doc, "functions", "document");
  if (!fns.is_array() || fns.empty())
    parse_fail("document", "'functions' must be a non-empty array");

  // First pass: declare function names so calls can resolve forward.
  std::unordered_map<std::string, uint32_t> fn_ix;
  for (const json& jf : fns) {
    expect_object(jf, "functions[]");
    std::string fname = need_string(jf, "name", "functions[]");
    if (fn_ix.count(fname))
      throw ValidationError("duplicate function name " + fname);
    fn_ix.emplace(fname, static_cast<uint32_t>(fn_ix.size()));
  }

  for (const json& jf : fns) {
    const std::string fctx = "function " + need_string(jf, "name", "functions[]");
    reject_unknown(jf, {"name", "owner", "blocks"}, fctx);
    Function fn;
    fn.name = need_string(jf, "name", fctx);
    std::string owner = need_string(jf, "owner", fctx);
    if (owner == "client")
      fn.owner = Owner::Client;
    else if (owner == "library")
      fn.owner = Owner::Library;
    else
      parse_fail(fctx, "owner must be 'client' or 'library'");

    const json& blocks = need(jf, "blocks", fctx);
    if (!blocks.is_array() || blocks.empty())
      parse_fail(fctx, "'blocks' must be a non-empty array");

    std::unordered_map<std::string, int32_t> block_ix;
    for (const json& jb : blocks) {
      expect_object(jb, fctx + ".blocks[]");
      std::string bid = need_string(jb, "id", fctx + ".blocks[]");
      if (block_ix.count(bid))
        throw ValidationError("duplicate block id " + bid + " in " + fn.name);
      block_ix.emplace(bid, static_cast<int32_t>(block_ix.size()));
    }

    auto resolve_block = [&](const json& v, const std::string& ctx) -> int32_t {
      if (!v.is_string()) parse_fail(ctx, "expected a block id or \"return\"");
      std::string s = v.get<std::string>();
      if (s == "return") return kReturnTarget;
      auto it = block_ix.find(s);
      if (it == block_ix.end())
        throw ValidationError("unknown block " + s + " referenced from " + ctx);
      return it->second;
    };

    for (const json& jb : blocks) {
      const std::string bctx = fctx + "." + need_string(jb, "id", fctx);
      reject_unknown(jb, {"id", "calls", "branch", "trigger"}, bctx);
      Block b;
      b.id = need_string(jb, "id", bctx);

      const json& calls = need(jb, "calls", bctx);
      if (!calls.is_array()) parse_fail(bctx, "'calls' must be an array");
      for (const json& jc : calls) {
        if (!jc.is_string()) parse_fail(bctx, "call entries must be function names");
        auto it = fn_ix.find(jc.get<std::string>());
        if (it == fn_ix.end())
          throw ValidationError("unknown function " + jc.get<std::string>() +
                                " called from " + bctx);
        b.calls.push_back(it->second);
      }

      const json& br = need(jb, "branch", bctx);
      expect_object(br, bctx + ".branch");
      if (br.size() != 1) parse_fail(bctx, "branch must be uncond or cond");
      if (br.contains("uncond")) {
        b.is_cond = false;
        b.then_block = resolve_block(br["uncond"], bctx + ".branch.uncond");
      } else if (br.contains("cond")) {
        const json& c = br["cond"];
        expect_object(c, bctx + ".branch.cond");
        reject_unknown(c, {"guard", "then", "else"}, bctx + ".branch.cond");
        b.is_cond = true;
        b.guard = parse_guard(need(c, "guard", bctx), p.guards, bctx + ".guard");
        b.then_block = resolve_block(need(c, "then", bctx), bctx + ".branch.then");
        b.else_block = resolve_block(need(c, "else", bctx), bctx + ".branch.else");
      } else {
        parse_fail(bctx, "branch must be uncond or cond");
      }

      if (jb.contains("trigger")) {
        const json& jt = jb["trigger"];
        expect_object(jt, bctx + ".trigger");
        reject_unknown(jt, {"cve", "condition"}, bctx + ".trigger");
        TriggerDef t;
        t.cve = need_string(jt, "cve", bctx + ".trigger");
        t.condition = parse_guard(need(jt, "condition", bctx + ".trigger"), p.guards,
                                  bctx + ".trigger.condition");
        if (fn.owner != Owner::Library)
          throw ValidationError("trigger on client-owned block " + fn.name + "." + b.id);
        b.trigger = std::move(t);
      }
      fn.blocks.push_back(std::move(b));
    }
    p.functions.push_back(std::move(fn));
  }

  p.finalize();
  return p;
}

void Program::finalize() {
  if (functions.empty()) throw ValidationError("program has no functions");

  fn_index.clear();
  for (uint32_t i = 0; i < functions.size(); ++i) {
    if (!fn_index.emplace(functions[i].name, i).second)
      throw ValidationError("duplicate function name " + functions[i].name);
    if (functions[i].blocks.empty())
      throw ValidationError("function " + functions[i].name + " has no blocks");
  }

  auto e = fn_index.find(entry);
  if (e == fn_index.end()) throw ValidationError("unknown entry function " + entry);
  entry_fn = e->second;
  if (functions[entry_fn].owner != Owner::Client)
    throw ValidationError("entry function " + entry + " must be client-owned");

  fn_start.assign(functions.size(), 0);
  total_blocks = 0;
  for (uint32_t i = 0; i < functions.size(); ++i) {
    fn_start[i] = total_blocks;
    total_blocks += static_cast<uint32_t>(functions[i].blocks.size());
  }

  block_owner.assign(total_blocks, Owner::Client);
  block_fn.assign(total_blocks, 0);
  block_names.assign(total_blocks, {});
  callees.assign(functions.size(), {});
  for (uint32_t i = 0; i < functions.size(); ++i) {
    const Function& fn = functions[i];
    std::unordered_set<uint32_t> seen;
    int32_t nblocks = static_cast<int32_t>(fn.blocks.size());
    for (uint32_t b = 0; b < fn.blocks.size(); ++b) {
      const Block& blk = fn.blocks[b];
      uint32_t g = fn_start[i] + b;
      block_owner[g] = fn.owner;
      block_fn[g] = i;
      block_names[g] = fn.name + "." + blk.id;
      for (uint32_t c : blk.calls) {
        if (c >= functions.size())
          throw ValidationError("dangling call index in " + fn.name);
        if (seen.insert(c).second) callees[i].push_back(c);
      }
      auto check_target = [&](int32_t t) {
        if (t != kReturnTarget && (t < 0 || t >= nblocks))
          throw ValidationError("dangling successor in " + fn.name + "." + blk.id);
      };
      check_target(blk.then_block);
      if (blk.is_cond) check_target(blk.else_block);
      if (blk.trigger && fn.owner != Owner::Library)
        throw ValidationError("trigger on client-owned block " + block_names[g]);
    }
  }
}

Interpreter::Interpreter(const Program& program) : program_(program) {
  hit_.assign(program.total_blocks, 0);
  hit_epoch_.assign(program.total_blocks, 0);
  fired_epoch_.assign(program.total_blocks, 0);
}

bool Interpreter::run_function(uint32_t fn, std::span<const uint8_t> input,
                               uint32_t depth, Trace& out) {
  if (depth > kMaxCallDepth) return false;  // surfaced as budget exhaustion
  const Function& f = program_.functions[fn];
  uint32_t start = program_.fn_start[fn];
  int32_t cur = 0;
  while (true) {
    if (budget_left_ == 0) return false;
    --budget_left_;
    uint32_t g = start + static_cast<uint32_t>(cur);
    const Block& blk = f.blocks[static_cast<uint32_t>(cur)];

    out.steps.push_back(g);
    if (hit_epoch_[g] != epoch_) {
      hit_epoch_[g] = epoch_;
      hit_[g] = 1;
      if (program_.block_owner[g] == Owner::Client)
        out.client_path.push_back(g);
      else
        out.library_path.push_back(g);
    } else {
      ++hit_[g];
    }

    if (blk.trigger && fired_epoch_[g] != epoch_ &&
        eval_guard(program_.guards, blk.trigger->condition, input)) {
      fired_epoch_[g] = epoch_;
      if (std::find(out.triggers_fired.begin(), out.triggers_fired.end(),
                    blk.trigger->cve) == out.triggers_fired.end())
        out.triggers_fired.push_back(blk.trigger->cve);
    }

    for (uint32_t callee : blk.calls)
      if (!run_function(callee, input, depth + 1, out)) return false;

    int32_t next;
    if (blk.is_cond)
      next = eval_guard(program_.guards, blk.guard, input) ? blk.then_block
                                                           : blk.else_block;
    else
      next = blk.then_block;
    if (next == kReturnTarget) return true;
    cur = next;
  }
}

void Interpreter::run(std::span<const uint8_t> input, uint32_t step_budget,
                      Trace& out) {
  out.steps.clear();
  out.hit_counts.clear();
  out.client_path.clear();
  out.library_path.clear();
  out.triggers_fired.clear();

  ++epoch_;
  budget_left_ = step_budget;
  bool returned = run_function(program_.entry_fn, input, 0, out);
  out.terminated = returned ? Terminated::Returned : Terminated::StepBudgetExhausted;

  for (uint32_t g : out.client_path) out.hit_counts.emplace_back(g, hit_[g]);
  for (uint32_t g : out.library_path) out.hit_counts.emplace_back(g, hit_[g]);
  std::sort(out.hit_counts.begin(), out.hit_counts.end());
}

Trace execute(const Program& program, std::span<const uint8_t> input,
              uint32_t step_budget) {
  Interpreter interp(program);
  return interp.run(input, step_budget);
}

uint32_t bucket_hits(uint32_t count) {
  if (count <= 3) return count - 1;  // 1, 2, 3
  if (count < 8) return 3;
  if (count < 16) return 4;
  if (count < 32) return 5;
  if (count < 128) return 6;
  return 7;
}

}  // namespace dgflive
