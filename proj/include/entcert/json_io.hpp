#pragma once

#include <nlohmann/json.hpp>

#include "entcert/linalg.hpp"

namespace entcert::json_io {

/// Row-major [[[re, im], ...], ...]. Doubles round-trip with 17 significant digits.
nlohmann::json matrix_to_json(const CMatrix& m);
CMatrix matrix_from_json(const nlohmann::json& j);

}  // namespace entcert::json_io
