#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "entcert/linalg.hpp"

namespace entcert {

enum class StateKind { kGhz, kW, kDicke, kClusterLinear };

struct StateSpec {
  StateKind kind = StateKind::kGhz;
  int n = 2;
  int excitations = 1;  // Dicke only

  /// Accepts "ghz", "w", "cluster", "dicke" (k = n/2) and "dicke:K".
  static StateSpec parse(std::string_view name, int n);
  std::string name() const;
};

/// Pure-state projector for one of the benchmark families on n qubits.
DensityMatrix make_state(const StateSpec& spec);

/// The endpoint sigma of rho(t) = t rho + (1 - t) sigma.
struct NoiseModel {
  DensityMatrix endpoint;

  static NoiseModel white(const PartyLayout& layout);
  /// Product of (3|0><0| + |1><1|)/4 on every qubit.
  static NoiseModel biased_product(const PartyLayout& layout);
};

DensityMatrix mix(const DensityMatrix& rho, double t, const NoiseModel& noise);

/// JSON state file: {"dims": [...], "matrix": [[[re, im], ...], ...]} (row-major).
DensityMatrix load_state(const std::filesystem::path& path);
void save_state(const DensityMatrix& state, const std::filesystem::path& path);

}  // namespace entcert
