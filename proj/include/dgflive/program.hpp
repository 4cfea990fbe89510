#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace dgflive {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Owner : uint8_t { Client, Library };

// Predicate over the raw input byte string. Out-of-range reads evaluate to
// false so that execution stays total under arbitrary mutation.
struct Guard {
  enum class Kind : uint8_t { ByteEq, ByteGe, ByteLe, U16Eq, LenGe, And, Or, Not };
  Kind kind;
  uint32_t offset = 0;  // byte offset, or required length for LenGe
  uint32_t value = 0;
  int32_t lhs = -1;  // child indices into Program::guards
  int32_t rhs = -1;
};

struct TriggerDef {
  std::string cve;
  int32_t condition;  // guard index
};

// Branch targets are local block indices; kReturnTarget means return.
inline constexpr int32_t kReturnTarget = -1;

struct Block {
  std::string id;
  std::vector<uint32_t> calls;  // function indices, invoked in order
  bool is_cond = false;
  int32_t guard = -1;
  int32_t then_block = kReturnTarget;  // uncond branches use then_block only
  int32_t else_block = kReturnTarget;
  std::optional<TriggerDef> trigger;
};

struct Function {
  std::string name;
  Owner owner;
  std::vector<Block> blocks;  // first entry is the function's first basic block
};

inline constexpr uint32_t kMaxCallDepth = 64;
inline constexpr uint32_t kDefaultStepBudget = 100000;

// A two-owner (client/library) interprocedural program with executable
// byte-predicate semantics.
//
// Document format (JSON):
//   { "name": str, "entry": str,
//     "functions": [ { "name": str, "owner": "client"|"library",
//       "blocks": [ { "id": str, "calls": [str],
//                     "branch": {"uncond": str|"return"}
//                            | {"cond": {"guard": G, "then": str|"return",
//                                        "else": str|"return"}},
//                     "trigger": {"cve": str, "condition": G}?  } ] } ] }
// Guards G mirror the Guard constructors, e.g. {"byte_eq":[1,5]},
// {"len_ge":[4]}, {"and":[G1,G2]}, {"not":[G]}. Unknown fields are rejected.
struct Program {
  std::string name;
  std::string entry;
  std::vector<Function> functions;
  std::vector<Guard> guards;  // shared pool referenced by index

  // Derived, filled by finalize().
  uint32_t entry_fn = 0;
  std::vector<std::vector<uint32_t>> callees;  // per function, deduplicated
  std::vector<uint32_t> fn_start;              // function -> first global block id
  uint32_t total_blocks = 0;
  std::vector<Owner> block_owner;         // by global block id
  std::vector<uint32_t> block_fn;         // by global block id
  std::vector<std::string> block_names;   // "function.block"
  std::unordered_map<std::string, uint32_t> fn_index;

  // Parses and validates a program document. Throws ParseError on malformed
  // JSON or schema violations, ValidationError on broken invariants.
  static Program load(const std::string& text);

  // Validates invariants and computes the derived tables. load() calls this;
  // programmatically built programs must call it before use.
  void finalize();

  uint32_t gid(uint32_t fn, uint32_t block) const { return fn_start[fn] + block; }
  uint32_t fbb(uint32_t fn) const { return fn_start[fn]; }
  const Block& block_at(uint32_t gid) const {
    uint32_t f = block_fn[gid];
    return functions[f].blocks[gid - fn_start[f]];
  }
  std::optional<uint32_t> find_function(const std::string& fn_name) const {
    auto it = fn_index.find(fn_name);
    if (it == fn_index.end()) return std::nullopt;
    return it->second;
  }
};

bool eval_guard(const std::vector<Guard>& pool, int32_t root,
                std::span<const uint8_t> input);

enum class Terminated : uint8_t { Returned, StepBudgetExhausted };

struct Trace {
  std::vector<uint32_t> steps;  // global block ids in execution order
  std::vector<std::pair<uint32_t, uint32_t>> hit_counts;  // (gid, count), sorted
  std::vector<uint32_t> client_path;   // distinct client blocks, first-occurrence order
  std::vector<uint32_t> library_path;  // distinct library blocks, same order
  std::vector<std::string> triggers_fired;  // deduplicated, firing order
  Terminated terminated = Terminated::Returned;
};

// Deterministic interpreter. One instance per worker; run() reuses internal
// scratch, so a single Interpreter must not be shared across threads.
class Interpreter {
 public:
  explicit Interpreter(const Program& program);

  void run(std::span<const uint8_t> input, uint32_t step_budget, Trace& out);

  Trace run(std::span<const uint8_t> input, uint32_t step_budget = kDefaultStepBudget) {
    Trace t;
    run(input, step_budget, t);
    return t;
  }

 private:
  bool run_function(uint32_t fn, std::span<const uint8_t> input, uint32_t depth,
                    Trace& out);

  const Program& program_;
  std::vector<uint32_t> hit_;        // per gid, epoch-stamped
  std::vector<uint64_t> hit_epoch_;
  std::vector<uint64_t> fired_epoch_;  // per trigger-bearing gid
  uint64_t epoch_ = 0;
  uint32_t budget_left_ = 0;
};

Trace execute(const Program& program, std::span<const uint8_t> input,
              uint32_t step_budget = kDefaultStepBudget);

// Classic 8-bucket hit-count classification: 1, 2, 3, 4-7, 8-15, 16-31,
// 32-127, 128+.
uint32_t bucket_hits(uint32_t count);

}  // namespace dgflive
