#include "entcert/json_io.hpp"

namespace entcert::json_io {

nlohmann::json matrix_to_json(const CMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

CMatrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw std::runtime_error("matrix must be a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.at(0).size());
  CMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j.at(r);
    if (static_cast<Eigen::Index>(row.size()) != cols) throw std::runtime_error("ragged matrix rows");
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& entry = row.at(c);
      if (entry.is_number()) {
        m(r, c) = cplx(entry.get<double>(), 0.0);
      } else {
        if (entry.size() != 2) throw std::runtime_error("matrix entries must be [re, im]");
        m(r, c) = cplx(entry.at(0).get<double>(), entry.at(1).get<double>());
      }
    }
  }
  return m;
}

}  // namespace entcert::json_io
