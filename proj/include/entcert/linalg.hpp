#pragma once

#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace entcert {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Thrown when a matrix violates a density-matrix invariant or shapes disagree.
class InvariantError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Local dimensions of an ordered list of parties. Party 0 is the most
/// significant tensor factor (standard Kronecker ordering).
class PartyLayout {
 public:
  PartyLayout() = default;
  explicit PartyLayout(std::vector<int> dims);

  static PartyLayout qubits(int n) { return PartyLayout(std::vector<int>(n, 2)); }

  int parties() const { return static_cast<int>(dims_.size()); }
  int dim(int party) const { return dims_.at(party); }
  int total() const { return total_; }
  const std::vector<int>& dims() const { return dims_; }
  bool all_qubits() const;

  /// Layout of the given parties, in the order listed.
  PartyLayout restrict_to(std::span<const int> parties) const;
  PartyLayout concat(const PartyLayout& other) const;

  /// For every global basis index, the index inside the subsystem made of
  /// `parties` (listed order gives the significance order).
  std::vector<int> local_indices(std::span<const int> parties) const;

  friend bool operator==(const PartyLayout&, const PartyLayout&) = default;

 private:
  std::vector<int> dims_;
  int total_ = 1;
};

/// A Hermitian operator on a party layout. Instances built through
/// `DensityMatrix::validated` satisfy the state invariants (unit trace, PSD);
/// the plain constructor is also used for unnormalized blocks.
class DensityMatrix {
 public:
  DensityMatrix() = default;
  DensityMatrix(PartyLayout layout, CMatrix entries);

  struct Tolerance {
    double hermitian = 1e-10;
    double trace = 1e-10;
    double min_eigenvalue = -1e-9;
    bool require_unit_trace = true;
  };

  /// Checks the invariants and returns the Hermitized matrix. Throws
  /// InvariantError naming the violated invariant.
  static DensityMatrix validated(PartyLayout layout, CMatrix entries, const Tolerance& tol);
  static DensityMatrix validated(PartyLayout layout, CMatrix entries) {
    return validated(std::move(layout), std::move(entries), Tolerance{});
  }

  static DensityMatrix maximally_mixed(const PartyLayout& layout);
  static DensityMatrix pure(const PartyLayout& layout, const CVector& amplitudes);

  const PartyLayout& layout() const { return layout_; }
  const CMatrix& matrix() const { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }
  double trace() const { return m_.trace().real(); }
  double purity() const;
  double min_eigenvalue() const;

 private:
  PartyLayout layout_;
  CMatrix m_;
};

struct SegmentProjection {
  double s = 0.0;
  double distance = 0.0;
};

/// One factor of a product operator together with the (global) parties it
/// acts on. The factor's own party order is the ascending order of `parties`.
struct PlacedFactor {
  CMatrix matrix;
  std::vector<int> parties;
};

DensityMatrix tensor_product(const DensityMatrix& a, const DensityMatrix& b);

/// P (F_1 ⊗ F_2 ⊗ ...) P† with the permutation realized by index remapping.
/// The subsets must partition {0..n-1}.
DensityMatrix embed_product(std::span<const PlacedFactor> factors, const PartyLayout& layout);

/// Reduced operator on `keep` (ascending order).
CMatrix partial_trace(const CMatrix& m, const PartyLayout& layout, std::span<const int> keep);

double frobenius_distance(const DensityMatrix& a, const DensityMatrix& b);
double frobenius_distance(const CMatrix& a, const CMatrix& b);

/// Hilbert-Schmidt inner product Re tr(a† b).
double hs_inner(const CMatrix& a, const CMatrix& b);

SegmentProjection segment_projection(const DensityMatrix& q, const DensityMatrix& endpoint_rho,
                                     const DensityMatrix& endpoint_sigma);
SegmentProjection segment_projection(const CMatrix& q, const CMatrix& rho, const CMatrix& sigma);

/// (tr sqrt(sqrt(a) b sqrt(a)))^2. Eigenvalues in [-1e-9, 0) are clipped.
double uhlmann_fidelity(const DensityMatrix& a, const DensityMatrix& b);
double uhlmann_fidelity(const CMatrix& a, const CMatrix& b);

/// PSD square root with the clipping rule above.
CMatrix psd_sqrt(const CMatrix& m);

CMatrix hermitize(const CMatrix& m);

}  // namespace entcert
