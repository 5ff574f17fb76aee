#include "entcert/sdp.hpp"

#include <algorithm>
#include <cstdio>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace entcert {

int select_free_part(const Partition& p, int round) {
  int largest = 0;
  for (int i = 1; i < p.size(); ++i)
    if (p.part(i).size() > p.part(largest).size()) largest = i;  // parts are ordered by smallest element
  return (largest + round) % p.size();
}

std::vector<int> select_free_part(const VertexParams& v, int round) {
  return v.partition.part(select_free_part(v.partition, round));
}

SdpVertex to_sdp_vertex(const VertexParams& v, int round) {
  SdpVertex out{v.partition, {}, select_free_part(v.partition, round), false};
  for (int x = 0; x < v.partition.size(); ++x) out.factors.push_back(v.part_state(x));
  return out;
}

std::vector<SdpVertex> mub_polytope(const PartyLayout& layout, std::optional<int> sample, std::uint64_t seed) {
  if (!layout.all_qubits()) throw std::invalid_argument("Pauli-eigenstate polytope needs a qubit layout");
  const int n = layout.parties();
  const double h = 1.0 / std::sqrt(2.0);
  const cplx I(0.0, 1.0);
  std::vector<CVector> eig;
  for (const auto& v : {CVector::Unit(2, 0), CVector::Unit(2, 1)}) eig.push_back(v);
  for (const cplx phase : {cplx(1.0), cplx(-1.0), I, -I}) {
    CVector v(2);
    v << h, h * phase;
    eig.push_back(v);
  }
  std::vector<CMatrix> local;
  for (const auto& v : eig) local.push_back(v * v.adjoint());

  long long count = 1;
  for (int q = 0; q + 1 < n; ++q) count *= 6;
  std::vector<long long> chosen(count);
  std::iota(chosen.begin(), chosen.end(), 0LL);
  if (sample && *sample < count) {
    std::vector<long long> picked;
    std::mt19937_64 rng(seed);
    std::sample(chosen.begin(), chosen.end(), std::back_inserter(picked), *sample, rng);
    chosen = std::move(picked);
  }

  const Partition finest = Partition::finest(n);
  std::vector<SdpVertex> out;
  out.reserve(chosen.size());
  for (long long code : chosen) {
    SdpVertex v{finest, std::vector<CMatrix>(n), n - 1, true};
    for (int q = n - 2; q >= 0; --q) {
      v.factors[q] = local[code % 6];
      code /= 6;
    }
    v.factors[n - 1] = CMatrix::Identity(2, 2) / 2.0;
    out.push_back(std::move(v));
  }
  return out;
}

CMatrix hermitian_basis_element(int d, int m) {
  if (m < 0 || m >= d * d) throw std::out_of_range("Hermitian basis index out of range");
  CMatrix h = CMatrix::Zero(d, d);
  if (m < d) {
    h(m, m) = 1.0;
    return h;
  }
  int k = (m - d) / 2;
  const bool imag = (m - d) % 2 == 1;
  int a = 0;
  while (k >= d - 1 - a) {
    k -= d - 1 - a;
    ++a;
  }
  const int b = a + 1 + k;
  const double r = 1.0 / std::sqrt(2.0);
  if (imag) {
    h(a, b) = cplx(0.0, r);
    h(b, a) = cplx(0.0, -r);
  } else {
    h(a, b) = h(b, a) = r;
  }
  return h;
}

ConicProblem::ConicProblem(PartyLayout layout, CMatrix rho, CMatrix sigma)
    : layout_(std::move(layout)), rho_(std::move(rho)), sigma_(std::move(sigma)) {
  if (rho_.rows() != layout_.total() || sigma_.rows() != layout_.total())
    throw InvariantError("target and noise must live on the problem layout");
}

void ConicProblem::add_block(const SdpVertex& v) {
  const int n = layout_.parties();
  if (v.partition.parties() != n) throw InvariantError("vertex partition does not match the layout");
  if (static_cast<int>(v.factors.size()) != v.partition.size()) throw InvariantError("one factor per part required");
  const auto& free = v.free_parties();
  std::vector<int> comp;
  for (int p = 0; p < n; ++p)
    if (std::find(free.begin(), free.end(), p) == free.end()) comp.push_back(p);

  Block b;
  b.dim = layout_.restrict_to(free).total();
  b.free_index = layout_.local_indices(free);
  if (comp.empty()) {
    b.comp_index.assign(layout_.total(), 0);
    b.fixed = CMatrix::Ones(1, 1);
  } else {
    b.comp_index = layout_.local_indices(comp);
    // Re-express the fixed factors on the complement's own party numbering.
    const PartyLayout comp_layout = layout_.restrict_to(comp);
    std::vector<PlacedFactor> placed;
    for (int x = 0; x < v.partition.size(); ++x) {
      if (x == v.free_part) continue;
      const auto& f = v.factors[x];
      const int want = layout_.restrict_to(v.partition.part(x)).total();
      if (f.rows() != want || f.cols() != want) throw InvariantError("fixed factor has the wrong dimension");
      std::vector<int> local;
      for (int p : v.partition.part(x))
        local.push_back(static_cast<int>(std::find(comp.begin(), comp.end(), p) - comp.begin()));
      placed.push_back({f, local});
    }
    b.fixed = embed_product(placed, comp_layout).matrix();
  }
  blocks_.push_back(std::move(b));
}

CMatrix ConicProblem::apply(std::size_t block, const CMatrix& tau) const {
  const Block& b = blocks_.at(block);
  const int d = dim();
  CMatrix out(d, d);
  for (int h = 0; h < d; ++h)
    for (int g = 0; g < d; ++g)
      out(g, h) = b.fixed(b.comp_index[g], b.comp_index[h]) * tau(b.free_index[g], b.free_index[h]);
  return out;
}

CMatrix ConicProblem::adjoint(std::size_t block, const CMatrix& y) const {
  const Block& b = blocks_.at(block);
  const int d = dim();
  CMatrix out = CMatrix::Zero(b.dim, b.dim);
  for (int h = 0; h < d; ++h)
    for (int g = 0; g < d; ++g)
      out(b.free_index[g], b.free_index[h]) += y(g, h) * std::conj(b.fixed(b.comp_index[g], b.comp_index[h]));
  return out;
}

ConicProblem build_sdp(std::span<const SdpVertex> vertices, const DensityMatrix& rho, const DensityMatrix& sigma,
                       std::span<const SdpVertex> augmentation) {
  if (!(rho.layout() == sigma.layout())) throw InvariantError("target and noise layouts differ");
  ConicProblem problem(rho.layout(), rho.matrix(), sigma.matrix());
  for (const auto& v : vertices) problem.add_block(v);
  for (const auto& v : augmentation) problem.add_block(v);
  return problem;
}

std::string to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::kOptimal: return "optimal";
    case SdpStatus::kInfeasible: return "infeasible";
    case SdpStatus::kNumericalFailure: return "numerical-failure";
  }
  return "?";
}

namespace {

// Real coordinates of Hermitian d x d matrices in the orthonormal basis of
// hermitian_basis_element: y_m = tr(H_m Y).
class HermitianCoords {
 public:
  explicit HermitianCoords(int d) : d_(d) {
    const double r = 1.0 / std::sqrt(2.0);
    for (int a = 0; a < d; ++a) entries_.push_back({{{a * d + a, 1.0}, {-1, 0.0}}});
    for (int a = 0; a < d; ++a)
      for (int b = a + 1; b < d; ++b) {
        entries_.push_back({{{a * d + b, r}, {b * d + a, r}}});
        entries_.push_back({{{a * d + b, cplx(0.0, r)}, {b * d + a, cplx(0.0, -r)}}});
      }
  }

  int size() const { return d_ * d_; }

  Eigen::VectorXd to_coords(const CMatrix& y) const {
    Eigen::VectorXd c(size());
    for (int m = 0; m < size(); ++m) {
      cplx acc = 0.0;
      for (const auto& [pos, coef] : entries_[m])
        if (pos >= 0) acc += std::conj(coef) * y(pos / d_, pos % d_);
      c(m) = acc.real();
    }
    return c;
  }

  CMatrix from_coords(const Eigen::VectorXd& c) const {
    CMatrix y = CMatrix::Zero(d_, d_);
    for (int m = 0; m < size(); ++m)
      for (const auto& [pos, coef] : entries_[m])
        if (pos >= 0) y(pos / d_, pos % d_) += c(m) * coef;
    return y;
  }

  // M_jk = Re(u_j^dagger K u_k) for K stored row-major over (g*d+h, k*d+l).
  void add_real_form(const std::vector<cplx>& k, Eigen::MatrixXd& m) const {
    const int n = size();
    const std::size_t stride = static_cast<std::size_t>(n);
    for (int j = 0; j < n; ++j) {
      for (int c = j; c < n; ++c) {
        cplx acc = 0.0;
        for (const auto& [p, cp] : entries_[j]) {
          if (p < 0) continue;
          const cplx* row = k.data() + static_cast<std::size_t>(p) * stride;
          for (const auto& [q, cq] : entries_[c])
            if (q >= 0) acc += std::conj(cp) * row[q] * cq;
        }
        m(j, c) += acc.real();
      }
    }
    for (int j = 0; j < n; ++j)
      for (int c = 0; c < j; ++c) m(j, c) = m(c, j);
  }

 private:
  int d_;
  std::vector<std::array<std::pair<int, cplx>, 2>> entries_;
};

struct Iterate {
  std::vector<CMatrix> x, z;  // product blocks
  double xs = 1.0, zs = 1.0;  // scalar block s = 1 - t
  CMatrix y;
};

struct Direction {
  std::vector<CMatrix> dx, dz;
  double dxs = 0.0, dzs = 0.0;
  CMatrix dy;
};

CMatrix sym(const CMatrix& a) { return 0.5 * (a + a.adjoint()); }

double hs(const CMatrix& a, const CMatrix& b) { return (a.adjoint().cwiseProduct(b.transpose())).sum().real(); }

// Largest alpha with x + alpha dx >= 0 (x positive definite).
double max_step(const CMatrix& x, const CMatrix& dx) {
  Eigen::LLT<CMatrix> llt(x);
  if (llt.info() != Eigen::Success) return 0.0;
  const auto& l = llt.matrixL();
  CMatrix s = l.solve(dx);
  s = l.solve(s.adjoint().eval());
  const double lmin = Eigen::SelfAdjointEigenSolver<CMatrix>(sym(s), Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  return lmin < 0.0 ? -1.0 / lmin : std::numeric_limits<double>::infinity();
}

double max_step_scalar(double x, double dx) {
  return dx < 0.0 ? -x / dx : std::numeric_limits<double>::infinity();
}

class Engine {
 public:
  Engine(const ConicProblem& p, const SdpOptions& o)
      : p_(p), o_(o), d_(p.dim()), coords_(p.dim()), dir_(p.rho() - p.sigma()) {
    dir_coords_ = coords_.to_coords(dir_);
    // Lift every fixed factor onto the global index pairs once.
    lifted_.reserve(p.blocks().size());
    for (const auto& b : p.blocks()) {
      CMatrix f(d_, d_);
      for (int h = 0; h < d_; ++h)
        for (int g = 0; g < d_; ++g) f(g, h) = b.fixed(b.comp_index[g], b.comp_index[h]);
      lifted_.push_back(std::move(f));
    }
  }

  SdpSolution run() {
    const auto& blocks = p_.blocks();
    const std::size_t nb = blocks.size();
    Iterate it;
    double ntot = 1.0;
    for (const auto& b : blocks) {
      it.x.push_back(CMatrix::Identity(b.dim, b.dim));
      it.z.push_back(CMatrix::Identity(b.dim, b.dim));
      ntot += b.dim;
    }
    it.y = CMatrix::Zero(d_, d_);

    SdpSolution sol;
    const double rho_norm = p_.rho().norm();
    // Best iterate seen so far, ranked by how far it is from the stopping test.
    Iterate best = it;
    double best_merit = std::numeric_limits<double>::infinity();
    double best_pinf = 0.0, best_rgap = 0.0;
    int since_best = 0;
    int stalls = 0;
    sol.status = SdpStatus::kNumericalFailure;
    for (int iter = 0; iter < o_.max_iterations; ++iter) {
      sol.iterations = iter;
      const CMatrix ax = forward(it.x, it.xs);
      rp_ = p_.rho() - ax;
      rd_.resize(nb);
      double dinf2 = 0.0;
      double gap = it.xs * it.zs;
      for (std::size_t i = 0; i < nb; ++i) {
        rd_[i] = -adjoint(i, it.y) - it.z[i];
        dinf2 += rd_[i].squaredNorm();
        gap += hs(it.x[i], it.z[i]);
      }
      rds_ = 1.0 - hs(dir_, it.y) - it.zs;
      dinf2 += rds_ * rds_;
      const double mu = gap / ntot;
      const double pobj = it.xs;
      const double dobj = hs(p_.rho(), it.y);
      const double pinf = rp_.norm() / (1.0 + rho_norm);
      const double dinf = std::sqrt(dinf2);
      const double rgap = gap / (1.0 + std::abs(pobj) + std::abs(dobj));
      if (o_.verbose)
        std::fprintf(stderr, "%3d  pobj %+.10f  dobj %+.10f  pinf %.2e  dinf %.2e  gap %.2e\n", iter, pobj, dobj, pinf, dinf,
                     gap);

      if (!std::isfinite(gap) || !std::isfinite(pinf) || !std::isfinite(dinf)) break;
      if (pinf < o_.feasibility_tol && dinf < o_.feasibility_tol && rgap < o_.gap_tol) {
        sol.status = SdpStatus::kOptimal;
        best = it;
        best_merit = 0.0;
        break;
      }
      // The dual is always strictly feasible (Y = -cI), so an unbounded dual
      // objective certifies primal infeasibility.
      if (dobj > 1e7 && dinf < 1e-6 * (1.0 + it.y.norm())) {
        sol.status = SdpStatus::kInfeasible;
        break;
      }
      const double merit = std::max({pinf / o_.feasibility_tol, dinf / o_.feasibility_tol, rgap / o_.gap_tol});
      if (merit < 0.5 * best_merit) {
        best = it;
        best_merit = merit;
        best_pinf = pinf;
        best_rgap = rgap;
        since_best = 0;
      } else if (++since_best >= 8) {
        break;
      }

      zinv_.resize(nb);
      for (std::size_t i = 0; i < nb; ++i)
        zinv_[i] = sym(it.z[i].llt().solve(CMatrix::Identity(it.z[i].rows(), it.z[i].cols())));
      if (!assemble_and_factor(it)) break;

      // Predictor.
      Direction aff = direction(it, 0.0, nullptr);
      const double ap_aff = std::min(1.0, primal_step(it, aff));
      const double ad_aff = std::min(1.0, dual_step(it, aff));
      double gap_aff = (it.xs + ap_aff * aff.dxs) * (it.zs + ad_aff * aff.dzs);
      for (std::size_t i = 0; i < nb; ++i) gap_aff += hs(it.x[i] + ap_aff * aff.dx[i], it.z[i] + ad_aff * aff.dz[i]);
      const double ratio = std::clamp(gap_aff / gap, 0.0, 1.0);
      const double sigma = ratio * ratio * ratio;

      // Corrector.
      std::vector<CMatrix> corr(nb);
      for (std::size_t i = 0; i < nb; ++i) corr[i] = aff.dx[i] * aff.dz[i];
      const double corr_s = aff.dxs * aff.dzs;
      Direction dir = direction(it, sigma * mu, &corr, corr_s);
      const double ap = std::min(1.0, o_.step_fraction * primal_step(it, dir));
      const double ad = std::min(1.0, o_.step_fraction * dual_step(it, dir));

      for (std::size_t i = 0; i < nb; ++i) {
        it.x[i] = sym(it.x[i] + ap * dir.dx[i]);
        it.z[i] = sym(it.z[i] + ad * dir.dz[i]);
      }
      it.xs += ap * dir.dxs;
      it.zs += ad * dir.dzs;
      it.y += ad * dir.dy;

      stalls = (ap < 1e-10 && ad < 1e-10) ? stalls + 1 : 0;
      if (stalls >= 3) break;
      sol.iterations = iter + 1;
    }
    if (sol.status == SdpStatus::kNumericalFailure) {
      // Accept a slightly inaccurate end point: the certificate residual is
      // checked independently downstream.
      if (std::isfinite(best_merit) && best_pinf <= o_.accept_feasibility && best_rgap <= o_.accept_gap)
        sol.status = SdpStatus::kOptimal;
      else if (!std::isfinite(best_merit) || best_pinf > 1e-6)
        sol.status = SdpStatus::kInfeasible;
    }
    if (sol.status != SdpStatus::kInfeasible) it = best;

    sol.t_star = 1.0 - it.xs;
    sol.tau_blocks = it.x;
    sol.primal_residual = (forward(it.x, it.xs) - p_.rho()).norm();
    return sol;
  }

 private:
  CMatrix apply(std::size_t i, const CMatrix& tau) const {
    const auto& b = p_.blocks()[i];
    const CMatrix& f = lifted_[i];
    CMatrix out(d_, d_);
    for (int h = 0; h < d_; ++h)
      for (int g = 0; g < d_; ++g) out(g, h) = f(g, h) * tau(b.free_index[g], b.free_index[h]);
    return out;
  }

  CMatrix adjoint(std::size_t i, const CMatrix& y) const {
    const auto& b = p_.blocks()[i];
    const CMatrix& f = lifted_[i];
    CMatrix out = CMatrix::Zero(b.dim, b.dim);
    for (int h = 0; h < d_; ++h)
      for (int g = 0; g < d_; ++g) out(b.free_index[g], b.free_index[h]) += y(g, h) * std::conj(f(g, h));
    return out;
  }

  CMatrix forward(const std::vector<CMatrix>& x, double xs) const {
    CMatrix out = xs * dir_;
    for (std::size_t i = 0; i < x.size(); ++i) out += apply(i, x[i]);
    return out;
  }

  // Schur complement M(Y) = sum_i E_i(X_i E_i*(Y) Z_i^{-1}) in real coordinates.
  bool assemble_and_factor(const Iterate& it) {
    const int d = d_;
    const std::size_t d2 = static_cast<std::size_t>(d) * d;
    kbuf_.assign(d2 * d2, cplx(0.0));
    std::vector<cplx> w(static_cast<std::size_t>(d) * d * d);
    for (std::size_t i = 0; i < p_.blocks().size(); ++i) {
      const auto& b = p_.blocks()[i];
      const CMatrix& f = lifted_[i];
      const CMatrix& x = it.x[i];
      const CMatrix& zi = zinv_[i];
      const int* fi = b.free_index.data();
      // w[(h*d + k)*d + l] = conj(F(k,l)) Zinv(f_l, f_h)
      for (int h = 0; h < d; ++h)
        for (int k = 0; k < d; ++k) {
          cplx* wr = w.data() + (static_cast<std::size_t>(h) * d + k) * d;
          for (int l = 0; l < d; ++l) wr[l] = std::conj(f(k, l)) * zi(fi[l], fi[h]);
        }
      for (int g = 0; g < d; ++g) {
        for (int h = 0; h < d; ++h) {
          const cplx c0 = f(g, h);
          if (c0 == cplx(0.0)) continue;
          cplx* row = kbuf_.data() + (static_cast<std::size_t>(g) * d + h) * d2;
          for (int k = 0; k < d; ++k) {
            const cplx c = c0 * x(fi[g], fi[k]);
            if (c == cplx(0.0)) continue;
            const cplx* wr = w.data() + (static_cast<std::size_t>(h) * d + k) * d;
            cplx* out = row + static_cast<std::size_t>(k) * d;
            for (int l = 0; l < d; ++l) out[l] += c * wr[l];
          }
        }
      }
    }
    schur_ = Eigen::MatrixXd::Zero(coords_.size(), coords_.size());
    coords_.add_real_form(kbuf_, schur_);
    schur_ += (it.xs / it.zs) * dir_coords_ * dir_coords_.transpose();

    double reg = 0.0;
    const double scale = std::max(schur_.diagonal().maxCoeff(), 1e-300);
    for (int attempt = 0; attempt < 6; ++attempt) {
      Eigen::MatrixXd m = schur_;
      if (reg > 0.0) m.diagonal().array() += reg;
      llt_.compute(m);
      if (llt_.info() == Eigen::Success) return true;
      reg = reg == 0.0 ? 1e-14 * scale : reg * 100.0;
    }
    return false;
  }

  Direction direction(const Iterate& it, double target_mu, const std::vector<CMatrix>* corr, double corr_s = 0.0) {
    const std::size_t nb = p_.blocks().size();
    std::vector<CMatrix> q(nb);
    CMatrix rhs = rp_;
    for (std::size_t i = 0; i < nb; ++i) {
      CMatrix inner = it.x[i] * rd_[i];
      if (corr) inner += (*corr)[i];
      q[i] = target_mu * zinv_[i] - it.x[i] - sym(inner * zinv_[i]);
      rhs -= apply(i, q[i]);
    }
    const double qs = (target_mu - it.xs * rds_ - corr_s) / it.zs - it.xs;
    rhs -= qs * dir_;

    Direction out;
    Eigen::VectorXd dy = llt_.solve(coords_.to_coords(rhs));
    // Refinement against the operator itself keeps the primal residual from
    // drifting once the Schur complement becomes ill-conditioned.
    for (int pass = 0;; ++pass) {
      out.dy = coords_.from_coords(dy);
      out.dx.resize(nb);
      out.dz.resize(nb);
      CMatrix achieved = CMatrix::Zero(d_, d_);
      for (std::size_t i = 0; i < nb; ++i) {
        const CMatrix ady = adjoint(i, out.dy);
        out.dz[i] = rd_[i] - ady;
        out.dx[i] = q[i] + sym(it.x[i] * ady * zinv_[i]);
        achieved += apply(i, out.dx[i]);
      }
      const double ady_s = hs(dir_, out.dy);
      out.dzs = rds_ - ady_s;
      out.dxs = qs + it.xs * ady_s / it.zs;
      if (pass == 2) break;
      achieved += out.dxs * dir_;
      dy += llt_.solve(coords_.to_coords(sym(rp_ - achieved)));
    }
    return out;
  }

  double primal_step(const Iterate& it, const Direction& dir) const {
    double a = max_step_scalar(it.xs, dir.dxs);
    for (std::size_t i = 0; i < it.x.size(); ++i) a = std::min(a, max_step(it.x[i], dir.dx[i]));
    return a;
  }

  double dual_step(const Iterate& it, const Direction& dir) const {
    double a = max_step_scalar(it.zs, dir.dzs);
    for (std::size_t i = 0; i < it.z.size(); ++i) a = std::min(a, max_step(it.z[i], dir.dz[i]));
    return a;
  }

  const ConicProblem& p_;
  const SdpOptions& o_;
  int d_;
  HermitianCoords coords_;
  CMatrix dir_;
  Eigen::VectorXd dir_coords_;
  std::vector<CMatrix> lifted_;
  CMatrix rp_;
  std::vector<CMatrix> rd_;
  double rds_ = 0.0;
  std::vector<CMatrix> zinv_;
  std::vector<cplx> kbuf_;
  Eigen::MatrixXd schur_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

}  // namespace

SdpSolution InteriorPointSolver::solve(const ConicProblem& problem) const {
  if (problem.blocks().empty()) {
    SdpSolution sol;
    sol.status = SdpStatus::kInfeasible;
    return sol;
  }
  Engine engine(problem, options_);
  return engine.run();
}

}  // namespace entcert
