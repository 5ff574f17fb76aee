#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "entcert/ensemble.hpp"
#include "entcert/linalg.hpp"
#include "entcert/partitions.hpp"

namespace entcert {

/// A polytope vertex prepared for the SDP: one unit-trace factor per part of
/// its partition, with one part left free (its factor slot is ignored).
struct SdpVertex {
  Partition partition;
  std::vector<CMatrix> factors;
  int free_part = 0;
  bool augmentation = false;  // member of the Pauli-eigenstate (MUB) polytope

  const std::vector<int>& free_parties() const { return partition.part(free_part); }
};

/// Index of the part left free in the given round: round 0 picks the largest
/// part (ties go to the part with the lowest smallest element), later rounds
/// step cyclically through the parts in canonical order.
int select_free_part(const Partition& p, int round);
std::vector<int> select_free_part(const VertexParams& v, int round);

SdpVertex to_sdp_vertex(const VertexParams& v, int round);

/// Products of the six Pauli eigenstates on parties 0..n-2 with the last party
/// free. `sample`, when set, draws that many members uniformly without
/// replacement using `seed`.
std::vector<SdpVertex> mub_polytope(const PartyLayout& layout, std::optional<int> sample = std::nullopt,
                                    std::uint64_t seed = 0);

/// Orthonormal Hermitian basis element m of d x d matrices: the diagonal units
/// first, then for every a < b the pair (E_ab + E_ba)/sqrt2, i(E_ab - E_ba)/sqrt2.
CMatrix hermitian_basis_element(int d, int m);

/// The max-t program
///   maximize t  s.t.  sum_i P(F_i ⊗ tau_i)P† = t rho + (1 - t) sigma,  tau_i >= 0,  t <= 1,
/// with F_i the fixed factors of vertex i. Every block is stored through
/// index tables so that E_i(tau)(g,h) = F_i(c_g, c_h) tau(f_g, f_h).
class ConicProblem {
 public:
  struct Block {
    int dim = 0;                     // dimension of the free part
    std::vector<int> free_index;     // global index -> free-part index
    std::vector<int> comp_index;     // global index -> complement index
    CMatrix fixed;                   // operator on the complement (1x1 [1] if empty)
  };

  ConicProblem(PartyLayout layout, CMatrix rho, CMatrix sigma);

  void add_block(const SdpVertex& v);

  const PartyLayout& layout() const { return layout_; }
  int dim() const { return layout_.total(); }
  int constraint_count() const { return dim() * dim(); }
  const CMatrix& rho() const { return rho_; }
  const CMatrix& sigma() const { return sigma_; }
  const std::vector<Block>& blocks() const { return blocks_; }

  /// E_i(tau).
  CMatrix apply(std::size_t block, const CMatrix& tau) const;
  /// E_i*(Y), the Hilbert-Schmidt adjoint.
  CMatrix adjoint(std::size_t block, const CMatrix& y) const;
  /// A_{i,m} = E_i*(H_m).
  CMatrix constraint_matrix(std::size_t block, int m) const { return adjoint(block, hermitian_basis_element(dim(), m)); }

 private:
  PartyLayout layout_;
  CMatrix rho_, sigma_;
  std::vector<Block> blocks_;
};

ConicProblem build_sdp(std::span<const SdpVertex> vertices, const DensityMatrix& rho, const DensityMatrix& sigma,
                       std::span<const SdpVertex> augmentation = {});

enum class SdpStatus { kOptimal, kInfeasible, kNumericalFailure };
std::string to_string(SdpStatus s);

struct SdpSolution {
  SdpStatus status = SdpStatus::kNumericalFailure;
  double t_star = 0.0;
  std::vector<CMatrix> tau_blocks;
  double primal_residual = 0.0;  // ||sum_i E_i(tau_i) - rho(t*)||_F
  double gap = 0.0;
  int iterations = 0;
};

struct SdpOptions {
  double feasibility_tol = 1e-10;  // relative primal/dual residual
  double gap_tol = 1e-9;           // relative duality gap
  /// Looser bounds under which a stalled run still counts as optimal.
  double accept_feasibility = 1e-8;
  double accept_gap = 1e-6;
  int max_iterations = 120;
  double step_fraction = 0.95;
  bool verbose = false;  // per-iteration log on stderr
};

/// Solver contract: any conic method that meets the residual tolerances.
class ConicSolver {
 public:
  virtual ~ConicSolver() = default;
  virtual SdpSolution solve(const ConicProblem& problem) const = 0;
};

/// Infeasible-start primal-dual path following with the HKM direction and
/// Mehrotra predictor-corrector steps.
class InteriorPointSolver : public ConicSolver {
 public:
  explicit InteriorPointSolver(SdpOptions options = {}) : options_(options) {}
  SdpSolution solve(const ConicProblem& problem) const override;

 private:
  SdpOptions options_;
};

}  // namespace entcert
