#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "entcert/ensemble.hpp"
#include "entcert/partitions.hpp"
#include "entcert/sdp.hpp"
#include "entcert/states.hpp"

namespace entcert {

enum class MubMode { kAuto, kOn, kOff };

struct CertifyConfig {
  int per_partition = 100;
  GdConfig gd;
  int max_sweeps = 20;
  /// Sweeps stop once a full rotation of free parts gains less than this.
  double sweep_tol = 1e-4;
  /// kAuto adds the Pauli-eigenstate vertices for full separability, and
  /// whenever a sweep comes back infeasible or with t* < 0.
  MubMode mub = MubMode::kAuto;
  /// Cap on Pauli-eigenstate vertices (subsampled beyond it); 0 means no cap.
  int mub_sample = 2000;
  double prune_trace = 1e-9;
  SdpOptions sdp;
  std::uint64_t seed = 1;

  nlohmann::json to_json() const;
  /// 16-hex-digit FNV-1a digest of to_json().dump().
  std::string digest() const;
};

/// One term fixed_i ⊗ tau_i of the decomposition. `fixed_factors` holds one
/// unit-trace factor per part; the slot of `free_part` is empty.
struct DecompositionEntry {
  Partition partition;
  int free_part = 0;
  std::vector<CMatrix> fixed_factors;
  CMatrix tau;
  bool augmentation = false;
};

struct Certificate {
  std::string spec;
  std::vector<int> dims;
  double t_certified = 0.0;
  double residual = 0.0;
  double fidelity = 0.0;
  std::vector<DecompositionEntry> entries;

  std::uint64_t seed = 0;
  std::string config_digest;
  double gd_seconds = 0.0;
  double sdp_seconds = 0.0;
  std::vector<double> sweep_history;
  bool mub_used = false;
  bool gd_segment_warning = false;

  /// sum_i P(fixed_i ⊗ tau_i)P†.
  CMatrix assemble() const;

  nlohmann::json to_json() const;
  static Certificate from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static Certificate load(const std::filesystem::path& path);
};

/// Solver failure that survived the augmentation retry.
class CertificationError : public std::runtime_error {
 public:
  CertificationError(const std::string& what, std::vector<double> residuals)
      : std::runtime_error(what), residuals_(std::move(residuals)) {}
  const std::vector<double>& residuals() const { return residuals_; }

 private:
  std::vector<double> residuals_;
};

/// Full pipeline: polytope initialization, two-stage descent, then alternating
/// max-t SDP sweeps over which part of each vertex is free.
Certificate certify(const DensityMatrix& rho, const NoiseModel& noise, const StructureSpec& spec,
                    const CertifyConfig& cfg, const ConicSolver& solver);
Certificate certify(const DensityMatrix& rho, const NoiseModel& noise, const StructureSpec& spec,
                    const CertifyConfig& cfg);

/// Certificate for rho(t) from an explicit list of vertices and a single SDP,
/// without descent or sweeps.
std::optional<Certificate> certify_vertices(const DensityMatrix& rho, const NoiseModel& noise,
                                            const StructureSpec& spec, std::span<const SdpVertex> vertices,
                                            const ConicSolver& solver);

struct VerificationCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerificationReport {
  bool passed = false;
  double residual = 0.0;
  double fidelity = 0.0;
  std::vector<VerificationCheck> checks;
};

inline constexpr double kResidualTolerance = 1e-6;
inline constexpr double kFidelityThreshold = 0.99999;
inline constexpr double kTauEigenvalueFloor = -1e-8;

/// Recomputes the decomposition from scratch and checks it against rho(t).
/// Never throws on a bad certificate; failures are reported per check.
VerificationReport verify(const Certificate& cert, const DensityMatrix& rho, const NoiseModel& noise);

}  // namespace entcert
