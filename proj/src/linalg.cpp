#include "entcert/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace entcert {

namespace {

constexpr double kClipFloor = -1e-9;

Eigen::SelfAdjointEigenSolver<CMatrix> hermitian_eig(const CMatrix& m) {
  return Eigen::SelfAdjointEigenSolver<CMatrix>(hermitize(m));
}

CMatrix clipped_psd(const CMatrix& m) {
  auto eig = hermitian_eig(m);
  Eigen::VectorXd lam = eig.eigenvalues();
  for (int i = 0; i < lam.size(); ++i) {
    if (lam(i) < kClipFloor) {
      std::ostringstream msg;
      msg << "matrix is not positive semidefinite: eigenvalue " << lam(i);
      throw InvariantError(msg.str());
    }
    lam(i) = std::max(lam(i), 0.0);
  }
  return eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().adjoint();
}

}  // namespace

PartyLayout::PartyLayout(std::vector<int> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw InvariantError("layout needs at least one party");
  for (int d : dims_) {
    if (d < 2) throw InvariantError("local dimensions must be >= 2");
    total_ *= d;
  }
}

bool PartyLayout::all_qubits() const {
  return std::all_of(dims_.begin(), dims_.end(), [](int d) { return d == 2; });
}

PartyLayout PartyLayout::restrict_to(std::span<const int> parties) const {
  std::vector<int> dims;
  dims.reserve(parties.size());
  for (int p : parties) dims.push_back(dims_.at(p));
  return PartyLayout(std::move(dims));
}

PartyLayout PartyLayout::concat(const PartyLayout& other) const {
  std::vector<int> dims = dims_;
  dims.insert(dims.end(), other.dims_.begin(), other.dims_.end());
  return PartyLayout(std::move(dims));
}

std::vector<int> PartyLayout::local_indices(std::span<const int> parties) const {
  const int n = this->parties();
  std::vector<int> stride(n, 1);
  for (int p = n - 2; p >= 0; --p) stride[p] = stride[p + 1] * dims_[p + 1];

  std::vector<int> local_stride(parties.size(), 1);
  for (int k = static_cast<int>(parties.size()) - 2; k >= 0; --k)
    local_stride[k] = local_stride[k + 1] * dims_.at(parties[k + 1]);

  std::vector<int> out(total_, 0);
  for (int g = 0; g < total_; ++g) {
    int loc = 0;
    for (std::size_t k = 0; k < parties.size(); ++k) {
      const int p = parties[k];
      loc += ((g / stride[p]) % dims_[p]) * local_stride[k];
    }
    out[g] = loc;
  }
  return out;
}

DensityMatrix::DensityMatrix(PartyLayout layout, CMatrix entries)
    : layout_(std::move(layout)), m_(std::move(entries)) {
  if (m_.rows() != layout_.total() || m_.cols() != layout_.total())
    throw InvariantError("matrix shape does not match layout dimension");
}

DensityMatrix DensityMatrix::validated(PartyLayout layout, CMatrix entries, const Tolerance& tol) {
  if (entries.rows() != layout.total() || entries.cols() != layout.total())
    throw InvariantError("matrix shape does not match layout dimension");
  const double asym = (entries - entries.adjoint()).cwiseAbs().maxCoeff();
  if (asym > tol.hermitian) {
    std::ostringstream msg;
    msg << "hermiticity violated: max |m - m^dagger| = " << asym;
    throw InvariantError(msg.str());
  }
  CMatrix h = hermitize(entries);
  const double tr = h.trace().real();
  if (tol.require_unit_trace && std::abs(tr - 1.0) > tol.trace) {
    std::ostringstream msg;
    msg << "trace violated: trace = " << tr;
    throw InvariantError(msg.str());
  }
  const double lmin = hermitian_eig(h).eigenvalues().minCoeff();
  if (lmin < tol.min_eigenvalue) {
    std::ostringstream msg;
    msg << "positivity violated: smallest eigenvalue = " << lmin;
    throw InvariantError(msg.str());
  }
  return DensityMatrix(std::move(layout), std::move(h));
}

DensityMatrix DensityMatrix::maximally_mixed(const PartyLayout& layout) {
  const int d = layout.total();
  return DensityMatrix(layout, CMatrix::Identity(d, d) / static_cast<double>(d));
}

DensityMatrix DensityMatrix::pure(const PartyLayout& layout, const CVector& amplitudes) {
  if (amplitudes.size() != layout.total()) throw InvariantError("state vector length mismatch");
  const double nrm = amplitudes.norm();
  if (nrm == 0.0) throw InvariantError("zero state vector");
  const CVector psi = amplitudes / nrm;
  return DensityMatrix(layout, psi * psi.adjoint());
}

double DensityMatrix::purity() const { return (m_ * m_).trace().real(); }

double DensityMatrix::min_eigenvalue() const { return hermitian_eig(m_).eigenvalues().minCoeff(); }

CMatrix hermitize(const CMatrix& m) { return 0.5 * (m + m.adjoint()); }

DensityMatrix tensor_product(const DensityMatrix& a, const DensityMatrix& b) {
  const CMatrix& x = a.matrix();
  const CMatrix& y = b.matrix();
  CMatrix out(x.rows() * y.rows(), x.cols() * y.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      out.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
  return DensityMatrix(a.layout().concat(b.layout()), std::move(out));
}

DensityMatrix embed_product(std::span<const PlacedFactor> factors, const PartyLayout& layout) {
  const int n = layout.parties();
  std::vector<int> owner(n, -1);
  for (std::size_t f = 0; f < factors.size(); ++f) {
    const auto& parties = factors[f].parties;
    if (parties.empty()) throw InvariantError("empty party subset in product");
    if (!std::is_sorted(parties.begin(), parties.end()))
      throw InvariantError("party subsets must be listed in ascending order");
    for (int p : parties) {
      if (p < 0 || p >= n) throw InvariantError("party index out of range");
      if (owner[p] != -1) throw InvariantError("party subsets overlap");
      owner[p] = static_cast<int>(f);
    }
    const int dim = layout.restrict_to(parties).total();
    if (factors[f].matrix.rows() != dim || factors[f].matrix.cols() != dim)
      throw InvariantError("factor dimension does not match its party subset");
  }
  if (std::find(owner.begin(), owner.end(), -1) != owner.end())
    throw InvariantError("party subsets do not cover all parties");

  const int d = layout.total();
  std::vector<std::vector<int>> loc;
  loc.reserve(factors.size());
  for (const auto& f : factors) loc.push_back(layout.local_indices(f.parties));

  CMatrix out(d, d);
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) {
      cplx v = 1.0;
      for (std::size_t f = 0; f < factors.size(); ++f) v *= factors[f].matrix(loc[f][i], loc[f][j]);
      out(i, j) = v;
    }
  }
  return DensityMatrix(layout, std::move(out));
}

CMatrix partial_trace(const CMatrix& m, const PartyLayout& layout, std::span<const int> keep) {
  std::vector<int> rest;
  for (int p = 0; p < layout.parties(); ++p)
    if (std::find(keep.begin(), keep.end(), p) == keep.end()) rest.push_back(p);
  const auto keep_loc = layout.local_indices(keep);
  const auto rest_loc = layout.local_indices(rest);
  const int dk = layout.restrict_to(keep).total();
  const int dr = layout.total() / dk;

  // Group global indices by their complement index.
  std::vector<std::vector<int>> by_rest(dr);
  for (int g = 0; g < layout.total(); ++g) by_rest[rest_loc[g]].push_back(g);

  CMatrix out = CMatrix::Zero(dk, dk);
  for (const auto& group : by_rest)
    for (int i : group)
      for (int j : group) out(keep_loc[i], keep_loc[j]) += m(i, j);
  return out;
}

double hs_inner(const CMatrix& a, const CMatrix& b) { return (a.adjoint() * b).trace().real(); }

double frobenius_distance(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvariantError("shape mismatch");
  return (a - b).norm();
}

double frobenius_distance(const DensityMatrix& a, const DensityMatrix& b) {
  if (!(a.layout() == b.layout())) throw InvariantError("layout mismatch");
  return frobenius_distance(a.matrix(), b.matrix());
}

SegmentProjection segment_projection(const CMatrix& q, const CMatrix& rho, const CMatrix& sigma) {
  const CMatrix dir = rho - sigma;
  const double len2 = dir.squaredNorm();
  if (len2 < 1e-24) throw InvariantError("segment endpoints coincide");
  const CMatrix rel = q - sigma;
  const double s = std::clamp(hs_inner(rel, dir) / len2, 0.0, 1.0);
  return {s, (rel - s * dir).norm()};
}

SegmentProjection segment_projection(const DensityMatrix& q, const DensityMatrix& endpoint_rho,
                                     const DensityMatrix& endpoint_sigma) {
  if (!(q.layout() == endpoint_rho.layout()) || !(q.layout() == endpoint_sigma.layout()))
    throw InvariantError("layout mismatch");
  return segment_projection(q.matrix(), endpoint_rho.matrix(), endpoint_sigma.matrix());
}

CMatrix psd_sqrt(const CMatrix& m) {
  auto eig = hermitian_eig(m);
  Eigen::VectorXd lam = eig.eigenvalues();
  for (int i = 0; i < lam.size(); ++i) {
    if (lam(i) < kClipFloor) {
      std::ostringstream msg;
      msg << "matrix is not positive semidefinite: eigenvalue " << lam(i);
      throw InvariantError(msg.str());
    }
    lam(i) = std::sqrt(std::max(lam(i), 0.0));
  }
  return eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().adjoint();
}

double uhlmann_fidelity(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvariantError("shape mismatch");
  const CMatrix sa = psd_sqrt(a);
  const CMatrix inner = sa * clipped_psd(b) * sa;
  const Eigen::VectorXd lam = hermitian_eig(inner).eigenvalues();
  double root_sum = 0.0;
  for (int i = 0; i < lam.size(); ++i) root_sum += std::sqrt(std::max(lam(i), 0.0));
  return std::min(1.0, root_sum * root_sum);
}

double uhlmann_fidelity(const DensityMatrix& a, const DensityMatrix& b) {
  if (!(a.layout() == b.layout())) throw InvariantError("layout mismatch");
  return uhlmann_fidelity(a.matrix(), b.matrix());
}

}  // namespace entcert
