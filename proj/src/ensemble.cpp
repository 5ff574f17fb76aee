#include "entcert/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <random>
#include <stdexcept>

namespace entcert {

namespace {

constexpr double kCollapsedNorm = 1e-8;

CVector random_amplitudes(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  CVector z(dim);
  for (int a = 0; a < dim; ++a) {
    const double re = normal(rng);
    const double im = normal(rng);
    z(a) = cplx(re, im);
  }
  return z;
}

// Local index tables for every part of every distinct partition in an ensemble.
class IndexCache {
 public:
  IndexCache(const PartyLayout& layout, const std::vector<VertexParams>& vertices) {
    slot_.reserve(vertices.size());
    for (const auto& v : vertices) {
      const std::string key = v.partition.to_string();
      auto it = index_.find(key);
      if (it == index_.end()) {
        std::vector<std::vector<int>> tables;
        for (const auto& part : v.partition.parts()) tables.push_back(layout.local_indices(part));
        it = index_.emplace(key, tables_.size()).first;
        tables_.push_back(std::move(tables));
      }
      slot_.push_back(it->second);
    }
  }
  const std::vector<std::vector<int>>& tables(std::size_t vertex) const { return tables_[slot_[vertex]]; }

 private:
  std::map<std::string, std::size_t> index_;
  std::vector<std::vector<std::vector<int>>> tables_;
  std::vector<std::size_t> slot_;
};

// Normalized factors and product vectors of all vertices.
struct Realization {
  std::vector<std::vector<CVector>> psi;
  std::vector<std::vector<double>> norms;
  CMatrix phi;  // d x N, column i = |phi_i>
  Eigen::VectorXd p;
  CMatrix rho;  // sum_i p_i |phi_i><phi_i|
};

Realization realize_all(const EnsembleParams& e, const IndexCache& cache) {
  const int d = e.layout.total();
  const auto n_vert = static_cast<Eigen::Index>(e.vertices.size());
  Realization r;
  r.psi.resize(n_vert);
  r.norms.resize(n_vert);
  r.phi.resize(d, n_vert);
  r.p = e.probabilities();
  for (Eigen::Index i = 0; i < n_vert; ++i) {
    const auto& v = e.vertices[i];
    const auto& tables = cache.tables(i);
    for (const auto& z : v.amplitudes) {
      const double nrm = z.norm();
      r.norms[i].push_back(nrm);
      r.psi[i].push_back(z / nrm);
    }
    for (int g = 0; g < d; ++g) {
      cplx amp = 1.0;
      for (std::size_t x = 0; x < tables.size(); ++x) amp *= r.psi[i][x](tables[x][g]);
      r.phi(g, i) = amp;
    }
  }
  r.rho = r.phi * r.p.asDiagonal() * r.phi.adjoint();
  return r;
}

// dL/d(varrho) for each loss; the segment parameter is re-optimized (Danskin).
CMatrix loss_matrix_gradient(const CMatrix& varrho, LossKind kind, const CMatrix& rho, const CMatrix& sigma,
                             double* loss_out) {
  CMatrix residual;
  if (kind == LossKind::kTarget) {
    residual = varrho - rho;
  } else {
    const SegmentProjection proj = segment_projection(varrho, rho, sigma);
    residual = varrho - (proj.s * rho + (1.0 - proj.s) * sigma);
  }
  if (loss_out) *loss_out = residual.squaredNorm();
  return 2.0 * residual;
}

Eigen::VectorXd gradient_from(const EnsembleParams& e, const IndexCache& cache, const Realization& r,
                              const CMatrix& dldrho) {
  const int d = e.layout.total();
  const auto n_vert = static_cast<Eigen::Index>(e.vertices.size());
  Eigen::VectorXd grad(e.parameter_count());
  const CMatrix v_all = dldrho * r.phi;  // column i = G |phi_i>
  Eigen::VectorXd g(n_vert);
  for (Eigen::Index i = 0; i < n_vert; ++i) g(i) = r.phi.col(i).dot(v_all.col(i)).real();

  Eigen::Index pos = 0;
  for (Eigen::Index i = 0; i < n_vert; ++i) {
    const auto& tables = cache.tables(i);
    const auto& psi = r.psi[i];
    const std::size_t parts = psi.size();
    for (std::size_t x = 0; x < parts; ++x) {
      // u = G_X psi_X: contract G|phi> with the conjugated other factors.
      CVector u = CVector::Zero(psi[x].size());
      for (int gi = 0; gi < d; ++gi) {
        cplx others = 1.0;
        for (std::size_t y = 0; y < parts; ++y)
          if (y != x) others *= psi[y](tables[y][gi]);
        u(tables[x][gi]) += std::conj(others) * v_all(gi, i);
      }
      const CVector dz = (2.0 * r.p(i) / r.norms[i][x]) * (u - g(i) * psi[x]);
      for (Eigen::Index a = 0; a < dz.size(); ++a) {
        grad(pos++) = dz(a).real();
        grad(pos++) = dz(a).imag();
      }
    }
  }
  const double wsum = e.weights.squaredNorm();
  const double mean_g = r.p.dot(g);
  for (Eigen::Index j = 0; j < n_vert; ++j) grad(pos++) = 2.0 * e.weights(j) / wsum * (g(j) - mean_g);
  return grad;
}

class Optimizer {
 public:
  Optimizer(const GdConfig& cfg, Eigen::Index size) : cfg_(cfg) { reset(size); }

  void reset(Eigen::Index size) {
    m_ = Eigen::VectorXd::Zero(size);
    v_ = Eigen::VectorXd::Zero(size);
    t_ = 0;
  }

  void step(Eigen::VectorXd& x, const Eigen::VectorXd& g) {
    switch (cfg_.optimizer) {
      case OptimizerKind::kPlain:
        x -= cfg_.step * g;
        break;
      case OptimizerKind::kMomentum:
        m_ = cfg_.beta1 * m_ + g;
        x -= cfg_.step * m_;
        break;
      case OptimizerKind::kAdam: {
        ++t_;
        m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * g;
        v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * g.cwiseAbs2();
        const double c1 = 1.0 - std::pow(cfg_.beta1, t_);
        const double c2 = 1.0 - std::pow(cfg_.beta2, t_);
        x.array() -= cfg_.step * (m_.array() / c1) / ((v_.array() / c2).sqrt() + 1e-12);
        break;
      }
    }
  }

 private:
  const GdConfig& cfg_;
  Eigen::VectorXd m_, v_;
  int t_ = 0;
};

void rerandomize_collapsed(EnsembleParams& e, std::mt19937_64& rng) {
  for (auto& v : e.vertices)
    for (auto& z : v.amplitudes)
      if (z.norm() < kCollapsedNorm) z = random_amplitudes(static_cast<int>(z.size()), rng);
}

}  // namespace

CVector VertexParams::product_vector(const PartyLayout& layout) const {
  const int d = layout.total();
  CVector phi = CVector::Ones(d);
  for (int x = 0; x < partition.size(); ++x) {
    const auto loc = layout.local_indices(partition.part(x));
    const CVector psi = amplitudes.at(x).normalized();
    for (int g = 0; g < d; ++g) phi(g) *= psi(loc[g]);
  }
  return phi;
}

CMatrix VertexParams::part_state(int part) const {
  const CVector psi = amplitudes.at(part).normalized();
  return psi * psi.adjoint();
}

Eigen::VectorXd EnsembleParams::probabilities() const {
  const double s = weights.squaredNorm();
  if (!(s > 0.0)) throw std::runtime_error("all ensemble weights vanished");
  return weights.cwiseAbs2() / s;
}

Eigen::Index EnsembleParams::parameter_count() const {
  Eigen::Index count = weights.size();
  for (const auto& v : vertices)
    for (const auto& z : v.amplitudes) count += 2 * z.size();
  return count;
}

Eigen::VectorXd EnsembleParams::flatten() const {
  Eigen::VectorXd flat(parameter_count());
  Eigen::Index pos = 0;
  for (const auto& v : vertices)
    for (const auto& z : v.amplitudes)
      for (Eigen::Index a = 0; a < z.size(); ++a) {
        flat(pos++) = z(a).real();
        flat(pos++) = z(a).imag();
      }
  flat.tail(weights.size()) = weights;
  return flat;
}

void EnsembleParams::assign(const Eigen::VectorXd& flat) {
  if (flat.size() != parameter_count()) throw std::invalid_argument("parameter vector size mismatch");
  Eigen::Index pos = 0;
  for (auto& v : vertices)
    for (auto& z : v.amplitudes)
      for (Eigen::Index a = 0; a < z.size(); ++a) {
        z(a) = cplx(flat(pos), flat(pos + 1));
        pos += 2;
      }
  weights = flat.tail(weights.size());
}

EnsembleParams init_ensemble(const StructureFamily& fam, const PartyLayout& layout, int per_partition,
                             std::uint64_t seed) {
  if (per_partition < 1) throw std::invalid_argument("per_partition must be >= 1");
  if (fam.maximal_partitions.empty()) throw std::invalid_argument("structure family is empty");
  if (fam.spec.n != layout.parties()) throw std::invalid_argument("family and layout disagree on party count");
  std::mt19937_64 rng(seed);
  EnsembleParams e;
  e.layout = layout;
  for (const auto& partition : fam.maximal_partitions) {
    for (int k = 0; k < per_partition; ++k) {
      VertexParams v{partition, {}};
      for (const auto& part : partition.parts())
        v.amplitudes.push_back(random_amplitudes(layout.restrict_to(part).total(), rng));
      e.vertices.push_back(std::move(v));
    }
  }
  e.weights = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(e.vertices.size()));
  return e;
}

DensityMatrix realize(const EnsembleParams& e) {
  const IndexCache cache(e.layout, e.vertices);
  return DensityMatrix(e.layout, realize_all(e, cache).rho);
}

double loss_stage1(const EnsembleParams& e, const CMatrix& rho, const CMatrix& sigma) {
  const double dist = segment_projection(realize(e).matrix(), rho, sigma).distance;
  return dist * dist;
}

double loss_stage2(const EnsembleParams& e, const CMatrix& rho) {
  return (realize(e).matrix() - rho).squaredNorm();
}

Eigen::VectorXd gradient(const EnsembleParams& e, LossKind kind, const CMatrix& rho, const CMatrix& sigma) {
  const IndexCache cache(e.layout, e.vertices);
  const Realization r = realize_all(e, cache);
  return gradient_from(e, cache, r, loss_matrix_gradient(r.rho, kind, rho, sigma, nullptr));
}

GdResult run(EnsembleParams e, const CMatrix& rho, const CMatrix& sigma, const GdConfig& cfg) {
  if (cfg.stage1_max_iterations < 0 || cfg.stage2_max_iterations < 0 || cfg.guard_period < 1)
    throw std::invalid_argument("GD iteration counts must be positive");
  if (!(cfg.step > 0.0)) throw std::invalid_argument("GD step size must be positive");

  GdResult res;
  const double span = (rho - sigma).norm();
  if (span < 1e-14) {
    res.params = std::move(e);
    return res;
  }
  e.threshold_r = cfg.threshold_r > 0.0 ? cfg.threshold_r : 0.01 * span;
  const double r = e.threshold_r;

  const IndexCache cache(e.layout, e.vertices);
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  Eigen::VectorXd x = e.flatten();
  Optimizer opt(cfg, x.size());

  int stage = 1;
  int episode = 0;
  int iteration = 0;
  std::deque<double> window;
  bool converged = false;
  auto stage2_finished = [&] { return converged || res.stage2_iterations >= cfg.stage2_max_iterations; };

  auto segment_distance = [&](const CMatrix& varrho) { return segment_projection(varrho, rho, sigma).distance; };

  while (true) {
    Realization real = realize_all(e, cache);
    const double seg = segment_distance(real.rho);

    if (stage == 1) {
      if (seg <= r || episode >= cfg.stage1_max_iterations) {
        if (seg > r) res.segment_warning = true;
        if (stage2_finished()) break;
        stage = 2;
        opt.reset(x.size());
        continue;
      }
      double loss = 0.0;
      const CMatrix dl = loss_matrix_gradient(real.rho, LossKind::kSegment, rho, sigma, &loss);
      if (cfg.record_trace) res.trace.push_back({iteration, 1, loss, seg});
      opt.step(x, gradient_from(e, cache, real, dl));
      ++episode;
      ++res.stage1_iterations;
    } else {
      if (res.stage2_iterations > 0 && res.stage2_iterations % cfg.guard_period == 0 && seg > r) {
        stage = 1;
        episode = 0;
        ++res.guard_reentries;
        opt.reset(x.size());
        continue;
      }
      if (stage2_finished()) {
        // Final guard: leave the polytope anchored to the segment.
        if (seg > r && episode < cfg.stage1_max_iterations && stage == 2) {
          stage = 1;
          episode = 0;
          ++res.guard_reentries;
          opt.reset(x.size());
          continue;
        }
        break;
      }
      double loss = 0.0;
      const CMatrix dl = loss_matrix_gradient(real.rho, LossKind::kTarget, rho, sigma, &loss);
      if (cfg.record_trace) res.trace.push_back({iteration, 2, loss, seg});
      if (cfg.convergence_window > 0) {
        window.push_back(loss);
        if (static_cast<int>(window.size()) > cfg.convergence_window) {
          const double old = window.front();
          window.pop_front();
          if (old - loss <= cfg.convergence_tol * std::max(old, 1e-300)) {
            converged = true;
            continue;
          }
        }
      }
      opt.step(x, gradient_from(e, cache, real, dl));
      ++res.stage2_iterations;
    }
    ++iteration;
    e.assign(x);
    rerandomize_collapsed(e, rng);
    x = e.flatten();
  }

  const Realization fin = realize_all(e, cache);
  res.final_segment_distance = segment_distance(fin.rho);
  res.final_stage1_loss = res.final_segment_distance * res.final_segment_distance;
  res.final_stage2_loss = (fin.rho - rho).squaredNorm();
  res.params = std::move(e);
  return res;
}

}  // namespace entcert
