// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "webexpert/matrix.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "webexpert/errors.hpp"

namespace webexpert {

using nlohmann::json;

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::vector<double> Matrix::apply(const std::vector<double>& v) const {
  std::vector<double> out(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = &a[r * cols];
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += row[c] * v[c];
    out[r] = s;
  }
  return out;
}

void save_matrix(const Matrix& m, const std::string& path) {
  json j;
  j["rows"] = m.rows;
  j["cols"] = m.cols;
  j["data"] = m.a;
  std::ofstream out(path);
  if (!out) throw Error("cannot write matrix: " + path);
  out << j.dump() << "\n";
}

Matrix load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open matrix: " + path);
  json j = json::parse(in);
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  m.a = j.at("data").get<std::vector<double>>();
  if (m.a.size() != m.rows * m.cols) throw Error("matrix size mismatch: " + path);
  return m;
}

}  // namespace webexpert
