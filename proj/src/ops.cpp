#include "dagrun/ops.hpp"

#include "dagrun/errors.hpp"

namespace dagrun {

std::string op_kind_name(OpKind k) {
  switch (k) {
    case OpKind::Const: return "const";
    case OpKind::Add: return "add";
    case OpKind::SleepAdd: return "sleep_add";
    case OpKind::Sum: return "sum";
    case OpKind::MatmulBlock: return "matmul_block";
    case OpKind::Custom: return "custom";
  }
  return "?";
}

std::optional<OpKind> op_kind_from_name(const std::string& s) {
  if (s == "const") return OpKind::Const;
  if (s == "add") return OpKind::Add;
  if (s == "sleep_add") return OpKind::SleepAdd;
  if (s == "sum") return OpKind::Sum;
  if (s == "matmul_block") return OpKind::MatmulBlock;
  if (s == "custom") return OpKind::Custom;
  return std::nullopt;
}

bool OpSpec::operator==(const OpSpec& o) const {
  return kind == o.kind && value_equal(const_value, o.const_value) && delay_ms == o.delay_ms &&
         custom_name == o.custom_name && block_rows == o.block_rows && block_cols == o.block_cols;
}

void OpRegistry::register_fn(const std::string& name, CustomFn fn) {
  if (fns_.count(name)) throw DuplicateName(name);
  fns_.emplace(name, std::move(fn));
}

bool OpRegistry::has(const std::string& name) const { return fns_.count(name) > 0; }

const CustomFn& OpRegistry::get(const std::string& name) const {
  auto it = fns_.find(name);
  if (it == fns_.end()) throw Error("no custom op registered under: " + name);
  return it->second;
}

namespace {

// add / sum / sleep_add share numeric semantics: fold the arguments.
// int-only input stays int64; any double promotes; matrices add elementwise.
Value fold_sum(const std::vector<Value>& args, const std::string& task) {
  if (args.empty()) throw OpFailure(task, "sum of zero inputs");
  if (std::holds_alternative<Matrix>(args[0])) {
    Matrix acc = std::get<Matrix>(args[0]);
    for (size_t i = 1; i < args.size(); ++i) {
      const auto* m = std::get_if<Matrix>(&args[i]);
      if (!m) throw OpFailure(task, "cannot mix matrix and scalar inputs");
      acc = madd(acc, *m);
    }
    return acc;
  }
  bool all_int = true;
  for (const auto& a : args) {
    if (std::holds_alternative<Matrix>(a) || std::holds_alternative<std::string>(a))
      throw OpFailure(task, "non-numeric input to arithmetic op");
    if (!std::holds_alternative<int64_t>(a)) all_int = false;
  }
  if (all_int) {
    int64_t s = 0;
    for (const auto& a : args) s += std::get<int64_t>(a);
    return s;
  }
  double s = 0;
  for (const auto& a : args)
    s += std::holds_alternative<int64_t>(a) ? static_cast<double>(std::get<int64_t>(a))
                                            : std::get<double>(a);
  return s;
}

}  // namespace

Value apply_op(const OpSpec& op, const std::vector<Value>& args, const OpRegistry& reg,
               const std::string& task) {
  switch (op.kind) {
    case OpKind::Const:
      if (!args.empty()) throw OpFailure(task, "const takes no inputs");
      return op.const_value;
    case OpKind::Add:
      if (args.empty() || args.size() > 2)
        throw OpFailure(task, "add takes one or two inputs, got " + std::to_string(args.size()));
      return fold_sum(args, task);
    case OpKind::SleepAdd:
      // Sleep only consumes simulated time; the value is the plain sum.
      return fold_sum(args, task);
    case OpKind::Sum:
      return fold_sum(args, task);
    case OpKind::MatmulBlock: {
      if (args.size() != 2) throw OpFailure(task, "matmul_block takes exactly two inputs");
      const auto* a = std::get_if<Matrix>(&args[0]);
      const auto* b = std::get_if<Matrix>(&args[1]);
      if (!a || !b) throw OpFailure(task, "matmul_block inputs must be matrices");
      if (op.block_rows && (a->rows != *op.block_rows || b->cols != *op.block_cols))
        throw OpFailure(task, "matmul_block shape does not match declared dims");
      try {
        return matmul(*a, *b);
      } catch (const Error& e) {
        throw OpFailure(task, e.what());
      }
    }
    case OpKind::Custom: {
      if (!reg.has(op.custom_name)) throw OpFailure(task, "unregistered custom op " + op.custom_name);
      try {
        return reg.get(op.custom_name)(args);
      } catch (const OpFailure&) {
        throw;
      } catch (const std::exception& e) {
        throw OpFailure(task, std::string("custom op threw: ") + e.what());
      }
    }
  }
  throw OpFailure(task, "unhandled op kind");
}

double op_delay_ms(const OpSpec& op) { return op.kind == OpKind::SleepAdd ? op.delay_ms : 0.0; }

nlohmann::json op_params_to_json(const OpSpec& op) {
  nlohmann::json p = nlohmann::json::object();
  switch (op.kind) {
    case OpKind::Const: p["value"] = value_to_json(op.const_value); break;
    case OpKind::SleepAdd:
      if (op.delay_ms != 0) p["delay_ms"] = op.delay_ms;
      break;
    case OpKind::Custom: p["name"] = op.custom_name; break;
    case OpKind::MatmulBlock:
      if (op.block_rows) {
        p["rows"] = *op.block_rows;
        p["cols"] = *op.block_cols;
      }
      break;
    default: break;
  }
  return p;
}

OpSpec op_from_json(const std::string& kind_name, const nlohmann::json& params) {
  auto kind = op_kind_from_name(kind_name);
  if (!kind) throw SchemaViolation("unknown op: " + kind_name);
  OpSpec op;
  op.kind = *kind;
  if (!params.is_object()) throw SchemaViolation("params must be an object");

  auto reject_unknown = [&](std::initializer_list<const char*> allowed) {
    for (auto it = params.begin(); it != params.end(); ++it) {
      bool ok = false;
      for (const char* a : allowed)
        if (it.key() == a) ok = true;
      if (!ok) throw SchemaViolation("unknown param '" + it.key() + "' for op " + kind_name);
    }
  };

  switch (op.kind) {
    case OpKind::Const:
      reject_unknown({"value"});
      if (!params.contains("value")) throw SchemaViolation("const requires params.value");
      op.const_value = value_from_json(params.at("value"));
      break;
    case OpKind::SleepAdd:
      reject_unknown({"delay_ms"});
      if (params.contains("delay_ms")) {
        if (!params.at("delay_ms").is_number())
          throw SchemaViolation("delay_ms must be a number");
        op.delay_ms = params.at("delay_ms").get<double>();
        if (op.delay_ms < 0) throw SchemaViolation("delay_ms must be >= 0");
      }
      break;
    case OpKind::Custom:
      reject_unknown({"name"});
      if (!params.contains("name") || !params.at("name").is_string())
        throw SchemaViolation("custom requires params.name");
      op.custom_name = params.at("name").get<std::string>();
      break;
    case OpKind::MatmulBlock:
      reject_unknown({"rows", "cols"});
      if (params.contains("rows") != params.contains("cols"))
        throw SchemaViolation("matmul_block dims need both rows and cols");
      if (params.contains("rows")) {
        op.block_rows = params.at("rows").get<size_t>();
        op.block_cols = params.at("cols").get<size_t>();
      }
      break;
    case OpKind::Add:
    case OpKind::Sum:
      reject_unknown({});
      break;
  }
  return op;
}

}  // namespace dagrun
