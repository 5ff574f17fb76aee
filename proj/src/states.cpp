#include "entcert/states.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "entcert/json_io.hpp"

namespace entcert {

StateSpec StateSpec::parse(std::string_view name, int n) {
  StateSpec spec;
  spec.n = n;
  if (name == "ghz") {
    spec.kind = StateKind::kGhz;
  } else if (name == "w") {
    spec.kind = StateKind::kW;
  } else if (name == "cluster" || name == "cluster-linear") {
    spec.kind = StateKind::kClusterLinear;
  } else if (name.starts_with("dicke")) {
    spec.kind = StateKind::kDicke;
    spec.excitations = n / 2;
    if (name.size() > 5) {
      if (name[5] != ':') throw std::invalid_argument("expected dicke:K, got " + std::string(name));
      spec.excitations = std::stoi(std::string(name.substr(6)));
      if (spec.excitations < 1 || spec.excitations > n - 1)
        throw std::invalid_argument("Dicke excitation count must be in [1, n-1]");
    }
  } else {
    throw std::invalid_argument("unknown state '" + std::string(name) + "'");
  }
  return spec;
}

std::string StateSpec::name() const {
  switch (kind) {
    case StateKind::kGhz: return "ghz";
    case StateKind::kW: return "w";
    case StateKind::kClusterLinear: return "cluster";
    case StateKind::kDicke: return "dicke:" + std::to_string(excitations);
  }
  return "?";
}

DensityMatrix make_state(const StateSpec& spec) {
  const int n = spec.n;
  if (n < 2 || n > 12) throw std::invalid_argument("state needs 2 <= n <= 12 qubits");
  const int d = 1 << n;
  CVector psi = CVector::Zero(d);
  switch (spec.kind) {
    case StateKind::kGhz:
      psi(0) = psi(d - 1) = 1.0 / std::sqrt(2.0);
      break;
    case StateKind::kW:
      for (int q = 0; q < n; ++q) psi(1 << q) = 1.0 / std::sqrt(static_cast<double>(n));
      break;
    case StateKind::kDicke: {
      const int k = spec.excitations;
      if (k < 1 || k > n - 1) throw std::invalid_argument("Dicke excitation count must be in [1, n-1]");
      int count = 0;
      for (int x = 0; x < d; ++x)
        if (std::popcount(static_cast<unsigned>(x)) == k) ++count;
      const double amp = 1.0 / std::sqrt(static_cast<double>(count));
      for (int x = 0; x < d; ++x)
        if (std::popcount(static_cast<unsigned>(x)) == k) psi(x) = amp;
      break;
    }
    case StateKind::kClusterLinear: {
      // CZ on every neighbouring pair applied to |+>^n.
      const double amp = 1.0 / std::sqrt(static_cast<double>(d));
      for (int x = 0; x < d; ++x) {
        const unsigned ux = static_cast<unsigned>(x);
        const int parity = std::popcount(ux & (ux >> 1)) & 1;
        psi(x) = parity ? -amp : amp;
      }
      break;
    }
  }
  const PartyLayout layout = PartyLayout::qubits(n);
  return DensityMatrix(layout, psi * psi.adjoint());
}

NoiseModel NoiseModel::white(const PartyLayout& layout) {
  return NoiseModel{DensityMatrix::maximally_mixed(layout)};
}

NoiseModel NoiseModel::biased_product(const PartyLayout& layout) {
  if (!layout.all_qubits()) throw std::invalid_argument("biased product noise is defined for qubits");
  CMatrix local = CMatrix::Zero(2, 2);
  local(0, 0) = 0.75;
  local(1, 1) = 0.25;
  std::vector<PlacedFactor> factors;
  for (int p = 0; p < layout.parties(); ++p) factors.push_back({local, {p}});
  return NoiseModel{embed_product(factors, layout)};
}

DensityMatrix mix(const DensityMatrix& rho, double t, const NoiseModel& noise) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("mixing parameter t must lie in [0, 1]");
  if (!(rho.layout() == noise.endpoint.layout())) throw InvariantError("layout mismatch");
  return DensityMatrix(rho.layout(), t * rho.matrix() + (1.0 - t) * noise.endpoint.matrix());
}

DensityMatrix load_state(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open state file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("cannot parse state file " + path.string() + ": " + e.what());
  }
  PartyLayout layout(doc.at("dims").get<std::vector<int>>());
  CMatrix m = json_io::matrix_from_json(doc.at("matrix"));
  return DensityMatrix::validated(std::move(layout), std::move(m));
}

void save_state(const DensityMatrix& state, const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["dims"] = state.layout().dims();
  doc["matrix"] = json_io::matrix_to_json(state.matrix());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write state file " + path.string());
  out << doc.dump(1) << '\n';
}

}  // namespace entcert
