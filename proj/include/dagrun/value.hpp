#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace dagrun {

// Dense row-major matrix of doubles. Workloads only ever move small blocks
// (a few KiB), so a plain vector beats pulling in a linear algebra library.
struct Matrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> data;  // rows * cols, row-major

  Matrix() = default;
  Matrix(size_t r, size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(size_t r, size_t c) { return data[r * cols + c]; }
  double at(size_t r, size_t c) const { return data[r * cols + c]; }

  bool operator==(const Matrix& o) const {
    return rows == o.rows && cols == o.cols && data == o.data;
  }
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix madd(const Matrix& a, const Matrix& b);
double frobenius(const Matrix& m);
// ||a-b||_F / max(||b||_F, eps); used by tests comparing block-wise results
// against a direct dense product.
double rel_frobenius_error(const Matrix& a, const Matrix& b);

// A task's payload. Text carries opaque blobs (serialized schedules) through
// the KV store; arithmetic ops reject it.
using Value = std::variant<int64_t, double, Matrix, std::string>;
using ValuePtr = std::shared_ptr<const Value>;

inline ValuePtr make_value(Value v) { return std::make_shared<const Value>(std::move(v)); }

nlohmann::json value_to_json(const Value& v);
Value value_from_json(const nlohmann::json& j);

bool value_equal(const Value& a, const Value& b);
std::string value_repr(const Value& v);

// Serialized size; drives inline-vs-key decisions and KV transfer latency.
int64_t value_bytes(const Value& v);

}  // namespace dagrun
