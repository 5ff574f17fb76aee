#include "entcert/certify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "entcert/json_io.hpp"

namespace entcert {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string to_string(MubMode m) {
  switch (m) {
    case MubMode::kAuto: return "auto";
    case MubMode::kOn: return "on";
    case MubMode::kOff: return "off";
  }
  return "?";
}

std::string to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::kPlain: return "plain";
    case OptimizerKind::kMomentum: return "momentum";
    case OptimizerKind::kAdam: return "adam";
  }
  return "?";
}

bool is_full_separability(const StructureFamily& fam) {
  return fam.maximal_partitions.size() == 1 && fam.maximal_partitions.front() == Partition::finest(fam.spec.n);
}

CMatrix mixed_target(const DensityMatrix& rho, const NoiseModel& noise, double t) {
  return t * rho.matrix() + (1.0 - t) * noise.endpoint.matrix();
}

DecompositionEntry make_entry(const SdpVertex& v, const CMatrix& tau) {
  DecompositionEntry e{v.partition, v.free_part, v.factors, tau, v.augmentation};
  e.fixed_factors[v.free_part] = CMatrix();
  return e;
}

Certificate assemble_certificate(const DensityMatrix& rho, const NoiseModel& noise, const StructureSpec& spec,
                                 std::vector<DecompositionEntry> entries, double t) {
  Certificate c;
  c.spec = spec.to_string();
  c.dims = rho.layout().dims();
  c.t_certified = t;
  c.entries = std::move(entries);
  const CMatrix sum = c.assemble();
  const CMatrix target = mixed_target(rho, noise, t);
  c.residual = (sum - target).norm();
  try {
    c.fidelity = uhlmann_fidelity(target, sum / sum.trace().real());
  } catch (const InvariantError&) {
    c.fidelity = 0.0;
  }
  return c;
}

// The endpoint itself, written as a product of its single-party marginals.
// Exact whenever the noise is a product state (white or biased product noise).
Certificate degenerate_certificate(const DensityMatrix& rho, const NoiseModel& noise, const StructureSpec& spec) {
  const auto& layout = rho.layout();
  const int n = layout.parties();
  DecompositionEntry e{Partition::finest(n), n - 1, {}, {}, false};
  for (int p = 0; p < n; ++p) {
    const std::vector<int> keep{p};
    e.fixed_factors.push_back(partial_trace(noise.endpoint.matrix(), layout, keep));
  }
  e.tau = e.fixed_factors.back();
  e.fixed_factors.back() = CMatrix();
  return assemble_certificate(rho, noise, spec, {std::move(e)}, 1.0);
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

nlohmann::json partition_to_json(const Partition& p) {
  nlohmann::json parts = nlohmann::json::array();
  for (const auto& part : p.parts()) {
    nlohmann::json labels = nlohmann::json::array();
    for (int x : part) labels.push_back(x + 1);
    parts.push_back(labels);
  }
  return parts;
}

Partition partition_from_json(const nlohmann::json& j, int n) {
  std::vector<std::vector<int>> parts;
  for (const auto& part : j) {
    std::vector<int> labels;
    for (const auto& x : part) labels.push_back(x.get<int>() - 1);
    parts.push_back(std::move(labels));
  }
  return Partition(n, std::move(parts));
}

}  // namespace

nlohmann::json CertifyConfig::to_json() const {
  return {
      {"per_partition", per_partition},
      {"gd",
       {{"stage1_max_iterations", gd.stage1_max_iterations},
        {"stage2_max_iterations", gd.stage2_max_iterations},
        {"step", gd.step},
        {"optimizer", to_string(gd.optimizer)},
        {"beta1", gd.beta1},
        {"beta2", gd.beta2},
        {"guard_period", gd.guard_period},
        {"convergence_window", gd.convergence_window},
        {"convergence_tol", gd.convergence_tol},
        {"threshold_r", gd.threshold_r}}},
      {"max_sweeps", max_sweeps},
      {"sweep_tol", sweep_tol},
      {"mub", to_string(mub)},
      {"mub_sample", mub_sample},
      {"prune_trace", prune_trace},
      {"sdp",
       {{"feasibility_tol", sdp.feasibility_tol},
        {"gap_tol", sdp.gap_tol},
        {"max_iterations", sdp.max_iterations},
        {"step_fraction", sdp.step_fraction}}},
      {"seed", seed},
  };
}

std::string CertifyConfig::digest() const {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << fnv1a(to_json().dump());
  return out.str();
}

CMatrix Certificate::assemble() const {
  const PartyLayout layout(dims);
  CMatrix sum = CMatrix::Zero(layout.total(), layout.total());
  for (const auto& e : entries) {
    std::vector<PlacedFactor> placed;
    for (int x = 0; x < e.partition.size(); ++x)
      placed.push_back({x == e.free_part ? e.tau : e.fixed_factors.at(x), e.partition.part(x)});
    sum += embed_product(placed, layout).matrix();
  }
  return sum;
}

nlohmann::json Certificate::to_json() const {
  nlohmann::json j;
  j["spec"] = spec;
  j["dims"] = dims;
  j["t_certified"] = t_certified;
  j["residual"] = residual;
  j["fidelity"] = fidelity;
  nlohmann::json list = nlohmann::json::array();
  for (const auto& e : entries) {
    nlohmann::json factors = nlohmann::json::array();
    for (int x = 0; x < e.partition.size(); ++x)
      factors.push_back(x == e.free_part ? nlohmann::json(nullptr) : json_io::matrix_to_json(e.fixed_factors.at(x)));
    list.push_back({{"partition", partition_to_json(e.partition)},
                    {"free_part", e.free_part},
                    {"augmentation", e.augmentation},
                    {"fixed_factors", std::move(factors)},
                    {"tau", json_io::matrix_to_json(e.tau)}});
  }
  j["entries"] = std::move(list);
  j["provenance"] = {{"seed", seed},
                     {"config_digest", config_digest},
                     {"sweep_history", sweep_history},
                     {"mub_used", mub_used},
                     {"gd_segment_warning", gd_segment_warning}};
  j["timings"] = {{"gd_seconds", gd_seconds}, {"sdp_seconds", sdp_seconds}};
  return j;
}

Certificate Certificate::from_json(const nlohmann::json& j) {
  Certificate c;
  c.spec = j.at("spec").get<std::string>();
  c.dims = j.at("dims").get<std::vector<int>>();
  c.t_certified = j.at("t_certified").get<double>();
  c.residual = j.value("residual", 0.0);
  c.fidelity = j.value("fidelity", 0.0);
  const int n = static_cast<int>(c.dims.size());
  for (const auto& je : j.at("entries")) {
    DecompositionEntry e;
    e.partition = partition_from_json(je.at("partition"), n);
    e.free_part = je.at("free_part").get<int>();
    if (e.free_part < 0 || e.free_part >= e.partition.size()) throw std::runtime_error("free_part out of range");
    e.augmentation = je.value("augmentation", false);
    const auto& factors = je.at("fixed_factors");
    if (static_cast<int>(factors.size()) != e.partition.size())
      throw std::runtime_error("fixed_factors needs one slot per part");
    for (int x = 0; x < e.partition.size(); ++x)
      e.fixed_factors.push_back(x == e.free_part || factors.at(x).is_null() ? CMatrix()
                                                                             : json_io::matrix_from_json(factors.at(x)));
    e.tau = json_io::matrix_from_json(je.at("tau"));
    c.entries.push_back(std::move(e));
  }
  if (j.contains("provenance")) {
    const auto& p = j.at("provenance");
    c.seed = p.value("seed", std::uint64_t{0});
    c.config_digest = p.value("config_digest", std::string());
    c.sweep_history = p.value("sweep_history", std::vector<double>{});
    c.mub_used = p.value("mub_used", false);
    c.gd_segment_warning = p.value("gd_segment_warning", false);
  }
  if (j.contains("timings")) {
    c.gd_seconds = j.at("timings").value("gd_seconds", 0.0);
    c.sdp_seconds = j.at("timings").value("sdp_seconds", 0.0);
  }
  return c;
}

void Certificate::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json().dump() << '\n';
}

Certificate Certificate::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return from_json(nlohmann::json::parse(in));
}

std::optional<Certificate> certify_vertices(const DensityMatrix& rho, const NoiseModel& noise,
                                            const StructureSpec& spec, std::span<const SdpVertex> vertices,
                                            const ConicSolver& solver) {
  const ConicProblem problem = build_sdp(vertices, rho, noise.endpoint);
  const SdpSolution sol = solver.solve(problem);
  if (sol.status != SdpStatus::kOptimal) return std::nullopt;
  std::vector<DecompositionEntry> entries;
  for (std::size_t i = 0; i < vertices.size(); ++i) entries.push_back(make_entry(vertices[i], sol.tau_blocks[i]));
  return assemble_certificate(rho, noise, spec, std::move(entries), sol.t_star);
}

Certificate certify(const DensityMatrix& rho, const NoiseModel& noise, const StructureSpec& spec,
                    const CertifyConfig& cfg) {
  return certify(rho, noise, spec, cfg, InteriorPointSolver(cfg.sdp));
}

Certificate certify(const DensityMatrix& rho, const NoiseModel& noise, const StructureSpec& spec,
                    const CertifyConfig& cfg, const ConicSolver& solver) {
  const PartyLayout& layout = rho.layout();
  if (!(noise.endpoint.layout() == layout)) throw InvariantError("noise layout differs from the target layout");
  if (spec.n != layout.parties()) throw std::invalid_argument("structure spec and state disagree on party count");

  if ((rho.matrix() - noise.endpoint.matrix()).norm() < 1e-14) {
    Certificate c = degenerate_certificate(rho, noise, spec);
    c.seed = cfg.seed;
    c.config_digest = cfg.digest();
    return c;
  }

  const StructureFamily fam = family(spec);
  const auto gd_start = Clock::now();
  GdConfig gd = cfg.gd;
  gd.seed = cfg.seed;
  const GdResult descent =
      run(init_ensemble(fam, layout, cfg.per_partition, cfg.seed), rho.matrix(), noise.endpoint.matrix(), gd);
  const double gd_seconds = seconds_since(gd_start);

  const auto sdp_start = Clock::now();
  std::vector<SdpVertex> vertices;
  for (const auto& v : descent.params.vertices) vertices.push_back(to_sdp_vertex(v, 0));

  bool use_mub = cfg.mub == MubMode::kOn || (cfg.mub == MubMode::kAuto && is_full_separability(fam));
  if (use_mub && !layout.all_qubits()) use_mub = false;
  std::vector<SdpVertex> mub;
  auto ensure_mub = [&] {
    if (mub.empty())
      mub = mub_polytope(layout, cfg.mub_sample > 0 ? std::optional<int>(cfg.mub_sample) : std::nullopt, cfg.seed);
  };

  std::optional<Certificate> best;
  std::vector<double> history;
  std::vector<double> failed_residuals;
  for (int round = 0; round < cfg.max_sweeps && !vertices.empty(); ++round) {
    for (auto& v : vertices) v.free_part = select_free_part(v.partition, round);
    if (use_mub) ensure_mub();
    SdpSolution sol = solver.solve(build_sdp(vertices, rho, noise.endpoint, use_mub ? std::span<const SdpVertex>(mub)
                                                                                     : std::span<const SdpVertex>()));
    const bool unusable = sol.status != SdpStatus::kOptimal || sol.t_star < 0.0;
    if (unusable && !use_mub && layout.all_qubits() && cfg.mub != MubMode::kOff) {
      use_mub = true;
      ensure_mub();
      sol = solver.solve(build_sdp(vertices, rho, noise.endpoint, mub));
    }
    if (sol.status != SdpStatus::kOptimal) {
      failed_residuals.push_back(sol.primal_residual);
      if (best) break;
      if (sol.status == SdpStatus::kInfeasible && !layout.all_qubits())
        throw CertificationError("SDP infeasible and Pauli-eigenstate augmentation is unavailable for non-qubit layouts",
                                 failed_residuals);
      throw CertificationError("SDP solver reported " + to_string(sol.status), failed_residuals);
    }

    std::vector<DecompositionEntry> entries;
    for (std::size_t i = 0; i < vertices.size(); ++i)
      if (sol.tau_blocks[i].trace().real() > cfg.prune_trace) entries.push_back(make_entry(vertices[i], sol.tau_blocks[i]));
    if (use_mub)
      for (std::size_t i = 0; i < mub.size(); ++i) {
        const CMatrix& tau = sol.tau_blocks[vertices.size() + i];
        if (tau.trace().real() > cfg.prune_trace) entries.push_back(make_entry(mub[i], tau));
      }
    const double t = std::min(sol.t_star, 1.0);
    Certificate cand = assemble_certificate(rho, noise, spec, std::move(entries), t);
    history.push_back(t);
    if (cand.residual <= kResidualTolerance && (!best || cand.t_certified > best->t_certified)) {
      cand.mub_used = use_mub;
      best = std::move(cand);
    }

    // Warm start: each surviving vertex keeps its solved block as a fixed factor.
    std::vector<SdpVertex> next;
    for (std::size_t i = 0; i < vertices.size(); ++i) {
      const CMatrix& tau = sol.tau_blocks[i];
      const double tr = tau.trace().real();
      if (tr <= cfg.prune_trace) continue;
      SdpVertex v = vertices[i];
      v.factors[v.free_part] = hermitize(tau) / tr;
      next.push_back(std::move(v));
    }
    vertices = std::move(next);

    int cycle = 1;
    for (const auto& v : vertices) cycle = std::max(cycle, v.partition.size());
    const int r = static_cast<int>(history.size()) - 1;
    if (r >= cycle && history[r] - history[r - cycle] < cfg.sweep_tol) break;
  }
  if (!best) throw CertificationError("no SDP solution met the residual tolerance", failed_residuals);

  best->seed = cfg.seed;
  best->config_digest = cfg.digest();
  best->gd_seconds = gd_seconds;
  best->sdp_seconds = seconds_since(sdp_start);
  best->sweep_history = std::move(history);
  best->gd_segment_warning = descent.segment_warning;
  return *std::move(best);
}

VerificationReport verify(const Certificate& cert, const DensityMatrix& rho, const NoiseModel& noise) {
  VerificationReport rep;
  auto add = [&](std::string name, bool ok, std::string detail) {
    rep.checks.push_back({std::move(name), ok, std::move(detail)});
  };

  const PartyLayout& layout = rho.layout();
  if (cert.dims != layout.dims() || !(noise.endpoint.layout() == layout)) {
    add("layout", false, "certificate dims do not match the target state");
    rep.passed = false;
    return rep;
  }
  add("layout", true, "");

  StructureSpec spec;
  try {
    spec = StructureSpec::parse(cert.spec, layout.parties());
    add("spec", true, cert.spec);
  } catch (const std::exception& e) {
    add("spec", false, e.what());
    rep.passed = false;
    return rep;
  }

  bool shapes_ok = true;
  {
    std::ostringstream bad;
    int violations = 0;
    for (std::size_t i = 0; i < cert.entries.size(); ++i) {
      const auto& p = cert.entries[i].partition;
      if (p.parties() != spec.n || !spec.allows(p)) {
        if (violations++ < 5) bad << "entry " << i << " partition " << p.to_string() << " not allowed by " << cert.spec << "; ";
      }
    }
    add("family", violations == 0, violations ? bad.str() : std::to_string(cert.entries.size()) + " entries allowed");
  }
  {
    std::ostringstream bad;
    int violations = 0;
    for (std::size_t i = 0; i < cert.entries.size(); ++i) {
      const auto& e = cert.entries[i];
      for (int x = 0; x < e.partition.size(); ++x) {
        const int want = layout.restrict_to(e.partition.part(x)).total();
        if (x == e.free_part) {
          if (e.tau.rows() != want || e.tau.cols() != want) {
            shapes_ok = false;
            if (violations++ < 5) bad << "entry " << i << " tau has the wrong dimension; ";
          }
          continue;
        }
        const CMatrix& f = e.fixed_factors.at(x);
        if (f.rows() != want || f.cols() != want) {
          shapes_ok = false;
          if (violations++ < 5) bad << "entry " << i << " factor " << x << " has the wrong dimension; ";
          continue;
        }
        try {
          DensityMatrix::validated(layout.restrict_to(e.partition.part(x)), f, {1e-8, 1e-8, -1e-9, true});
        } catch (const InvariantError& err) {
          if (violations++ < 5) bad << "entry " << i << " factor " << x << ": " << err.what() << "; ";
        }
      }
    }
    add("product", violations == 0, violations ? bad.str() : "every fixed factor is a unit-trace state");
  }
  {
    std::ostringstream bad;
    int violations = 0;
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cert.entries.size(); ++i) {
      const auto& tau = cert.entries[i].tau;
      if (tau.rows() == 0 || tau.rows() != tau.cols()) continue;
      const double lmin = Eigen::SelfAdjointEigenSolver<CMatrix>(hermitize(tau)).eigenvalues().minCoeff();
      const double asym = (tau - tau.adjoint()).cwiseAbs().maxCoeff();
      worst = std::min(worst, lmin);
      if (lmin < kTauEigenvalueFloor || asym > 1e-8) {
        if (violations++ < 5) bad << "entry " << i << " tau min eigenvalue " << lmin << "; ";
      }
    }
    std::ostringstream ok;
    ok << "smallest tau eigenvalue " << worst;
    add("tau-psd", violations == 0, violations ? "PSD violation: " + bad.str() : ok.str());
  }
  add("t-range", std::isfinite(cert.t_certified) && cert.t_certified <= 1.0,
      "t_certified = " + std::to_string(cert.t_certified));

  if (shapes_ok) {
    const CMatrix sum = cert.assemble();
    const CMatrix target = mixed_target(rho, noise, std::clamp(cert.t_certified, -1e6, 1e6));
    rep.residual = (sum - target).norm();
    std::ostringstream r;
    r << "||sum - rho(t)||_F = " << rep.residual;
    add("residual", rep.residual <= kResidualTolerance, r.str());
    try {
      rep.fidelity = uhlmann_fidelity(target, sum / sum.trace().real());
      std::ostringstream f;
      f << std::setprecision(10) << "fidelity = " << rep.fidelity;
      add("fidelity", rep.fidelity >= kFidelityThreshold, f.str());
    } catch (const InvariantError& e) {
      add("fidelity", false, e.what());
    }
  } else {
    add("residual", false, "decomposition shapes invalid");
    add("fidelity", false, "decomposition shapes invalid");
  }

  rep.passed = std::all_of(rep.checks.begin(), rep.checks.end(), [](const auto& c) { return c.passed; });
  return rep;
}

}  // namespace entcert
