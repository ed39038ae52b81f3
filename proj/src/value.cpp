#include "dagrun/value.hpp"

#include <cmath>
#include <stdexcept>

#include "dagrun/errors.hpp"

namespace dagrun {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw Error("matmul shape mismatch");
  Matrix c(a.rows, b.cols);
  for (size_t i = 0; i < a.rows; ++i) {
    for (size_t k = 0; k < a.cols; ++k) {
      double aik = a.at(i, k);
      if (aik == 0.0) continue;
      for (size_t j = 0; j < b.cols; ++j) c.at(i, j) += aik * b.at(k, j);
    }
  }
  return c;
}

Matrix madd(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows || a.cols != b.cols) throw Error("matrix add shape mismatch");
  Matrix c = a;
  for (size_t i = 0; i < c.data.size(); ++i) c.data[i] += b.data[i];
  return c;
}

double frobenius(const Matrix& m) {
  double s = 0;
  for (double v : m.data) s += v * v;
  return std::sqrt(s);
}

double rel_frobenius_error(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows || a.cols != b.cols) return std::numeric_limits<double>::infinity();
  double num = 0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    double d = a.data[i] - b.data[i];
    num += d * d;
  }
  double den = frobenius(b);
  return std::sqrt(num) / std::max(den, 1e-300);
}

nlohmann::json value_to_json(const Value& v) {
  // Plain JSON numbers round-trip: nlohmann keeps integer vs float apart.
  if (const auto* i = std::get_if<int64_t>(&v)) return *i;
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  const auto& m = std::get<Matrix>(v);
  return nlohmann::json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

Value value_from_json(const nlohmann::json& j) {
  if (j.is_number_integer()) return j.get<int64_t>();
  if (j.is_number_float()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  if (j.is_object() && j.contains("rows") && j.contains("cols") && j.contains("data")) {
    Matrix m;
    m.rows = j.at("rows").get<size_t>();
    m.cols = j.at("cols").get<size_t>();
    m.data = j.at("data").get<std::vector<double>>();
    if (m.data.size() != m.rows * m.cols)
      throw SchemaViolation("matrix data length does not match rows*cols");
    return m;
  }
  throw SchemaViolation("unsupported value literal: " + j.dump());
}

bool value_equal(const Value& a, const Value& b) {
  if (a.index() != b.index()) return false;
  return std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        return x == std::get<T>(b);
      },
      a);
}

std::string value_repr(const Value& v) { return value_to_json(v).dump(); }

int64_t value_bytes(const Value& v) {
  return static_cast<int64_t>(value_to_json(v).dump().size());
}

}  // namespace dagrun
