#pragma once

#include <cstdint>
#include <vector>

#include "entcert/linalg.hpp"
#include "entcert/partitions.hpp"

namespace entcert {

/// One polytope vertex: a pure product state across `partition`, stored as
/// unnormalized amplitude vectors, one per part (in the partition's part order).
struct VertexParams {
  Partition partition;
  std::vector<CVector> amplitudes;

  /// |phi> = P (psi_1 ⊗ psi_2 ⊗ ...) with every factor normalized.
  CVector product_vector(const PartyLayout& layout) const;
  /// Normalized projector of one part.
  CMatrix part_state(int part) const;
};

/// The parametrized polytope: vertices plus squared-weight simplex parameters,
/// p_i = w_i^2 / sum_j w_j^2.
struct EnsembleParams {
  PartyLayout layout;
  std::vector<VertexParams> vertices;
  Eigen::VectorXd weights;
  double threshold_r = 0.0;

  Eigen::VectorXd probabilities() const;

  /// Flat real parameter vector: for every vertex and part, the amplitudes as
  /// interleaved (re, im) pairs; then all weights.
  Eigen::Index parameter_count() const;
  Eigen::VectorXd flatten() const;
  void assign(const Eigen::VectorXd& flat);
};

enum class OptimizerKind { kPlain, kMomentum, kAdam };
enum class LossKind { kSegment, kTarget };

struct GdConfig {
  int stage1_max_iterations = 1000;  // per stage-1 episode
  int stage2_max_iterations = 1000;
  double step = 0.01;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  int guard_period = 50;
  /// Stop stage 2 once the loss improved by less than `convergence_tol`
  /// (relative) over this many iterations. 0 disables the check.
  int convergence_window = 0;
  double convergence_tol = 1e-6;
  /// <= 0 selects 0.01 * ||rho - sigma||_F.
  double threshold_r = 0.0;
  std::uint64_t seed = 1;
  bool record_trace = false;
};

struct TraceRow {
  int iteration = 0;
  int stage = 1;
  double loss = 0.0;
  double segment_distance = 0.0;
};

struct GdResult {
  EnsembleParams params;
  double final_segment_distance = 0.0;
  double final_stage1_loss = 0.0;
  double final_stage2_loss = 0.0;
  int stage1_iterations = 0;
  int stage2_iterations = 0;
  int guard_reentries = 0;
  /// Some stage-1 episode hit its iteration cap with the segment distance above r.
  bool segment_warning = false;
  std::vector<TraceRow> trace;
};

/// `per_partition` vertices for every maximal partition of the family, with
/// i.i.d. complex-normal amplitudes and equal weights.
EnsembleParams init_ensemble(const StructureFamily& fam, const PartyLayout& layout, int per_partition,
                             std::uint64_t seed);

/// sum_i p_i |phi_i><phi_i|.
DensityMatrix realize(const EnsembleParams& e);

/// Squared Frobenius distance from the realized state to the segment [sigma, rho].
double loss_stage1(const EnsembleParams& e, const CMatrix& rho, const CMatrix& sigma);
/// Squared Frobenius distance from the realized state to rho.
double loss_stage2(const EnsembleParams& e, const CMatrix& rho);

/// Exact gradient of the chosen loss with respect to `e.flatten()`.
Eigen::VectorXd gradient(const EnsembleParams& e, LossKind kind, const CMatrix& rho, const CMatrix& sigma);

/// Two-stage descent: pull the realized state onto the segment, then towards
/// rho while a periodic guard sends it back to stage 1 if it drifts further
/// than r from the segment. Degenerate input rho == sigma returns immediately.
GdResult run(EnsembleParams e, const CMatrix& rho, const CMatrix& sigma, const GdConfig& cfg);

}  // namespace entcert
