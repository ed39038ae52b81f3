#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dagrun/value.hpp"

namespace dagrun {

enum class OpKind { Const, Add, SleepAdd, Sum, MatmulBlock, Custom };

std::string op_kind_name(OpKind k);
std::optional<OpKind> op_kind_from_name(const std::string& s);

// What a task computes. Ops are pure; sleep_add's delay is charged as
// simulated compute time by whoever runs the task, never by apply_op.
struct OpSpec {
  OpKind kind = OpKind::Const;
  Value const_value = int64_t{0};          // Const
  double delay_ms = 0;                     // SleepAdd
  std::string custom_name;                 // Custom
  std::optional<size_t> block_rows;        // MatmulBlock, optional shape check
  std::optional<size_t> block_cols;

  bool operator==(const OpSpec& o) const;
};

using CustomFn = std::function<Value(const std::vector<Value>&)>;

// Pure-function table for `custom` ops. Frozen before runs begin; the same
// registry instance must be shared by the oracle and every engine so results
// agree.
class OpRegistry {
 public:
  void register_fn(const std::string& name, CustomFn fn);  // throws DuplicateName
  bool has(const std::string& name) const;
  const CustomFn& get(const std::string& name) const;      // throws OpFailure-adjacent Error

 private:
  std::map<std::string, CustomFn> fns_;
};

// Applies `op` to the argument list. `task` is only used to label errors.
// Throws OpFailure on arity/type mismatch or a throwing custom fn.
Value apply_op(const OpSpec& op, const std::vector<Value>& args, const OpRegistry& reg,
               const std::string& task);

// Simulated compute duration of the op (sleep_add's delay; 0 for the rest).
double op_delay_ms(const OpSpec& op);

nlohmann::json op_params_to_json(const OpSpec& op);
OpSpec op_from_json(const std::string& kind_name, const nlohmann::json& params);

}  // namespace dagrun
