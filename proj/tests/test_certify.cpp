#include <gtest/gtest.h>

#include "entcert/certify.hpp"
#include "oracles.hpp"

using namespace entcert;

namespace {

struct Fixture {
  DensityMatrix rho;
  NoiseModel noise;
  StructureSpec spec;
};

Fixture setup(const std::string& state, int n, const std::string& spec, bool biased = false) {
  DensityMatrix rho = make_state(StateSpec::parse(state, n));
  NoiseModel noise = biased ? NoiseModel::biased_product(rho.layout()) : NoiseModel::white(rho.layout());
  return {rho, noise, StructureSpec::parse(spec, n)};
}

CertifyConfig small_config() {
  CertifyConfig c;
  c.per_partition = 30;
  c.gd.stage1_max_iterations = 300;
  c.gd.stage2_max_iterations = 300;
  return c;
}

const VerificationCheck& check(const VerificationReport& r, const std::string& name) {
  for (const auto& c : r.checks)
    if (c.name == name) return c;
  throw std::runtime_error("missing check " + name);
}

}  // namespace

TEST(Certify, BellIsotropicMatchesPptBoundary) {
  const auto f = setup("ghz", 2, "full-sep");
  const Certificate c = certify(f.rho, f.noise, f.spec, small_config());
  const double boundary = oracle::ppt_boundary(
      [&](double t) { return CMatrix(t * f.rho.matrix() + (1 - t) * f.noise.endpoint.matrix()); }, {2, 2});
  EXPECT_GE(c.t_certified, 0.327);
  EXPECT_LE(c.t_certified, boundary + 5e-3);
  const auto report = verify(c, f.rho, f.noise);
  EXPECT_TRUE(report.passed);
  EXPECT_LE(report.residual, 1e-6);
  EXPECT_GE(report.fidelity, 0.99999);
}

TEST(Certify, SweepsAreMonotone) {
  for (const auto& [state, spec] : std::vector<std::pair<std::string, std::string>>{
           {"w", "full-sep"}, {"ghz", "part:2"}, {"w", "prod:2"}}) {
    const auto f = setup(state, 3, spec);
    CertifyConfig cfg = small_config();
    cfg.mub = MubMode::kOff;
    cfg.sweep_tol = 0.0;
    cfg.max_sweeps = 6;
    const Certificate c = certify(f.rho, f.noise, f.spec, cfg);
    ASSERT_GE(c.sweep_history.size(), 2u) << state << spec;
    for (std::size_t i = 1; i < c.sweep_history.size(); ++i)
      EXPECT_GE(c.sweep_history[i], c.sweep_history[i - 1] - 1e-6) << state << spec << " sweep " << i;
    EXPECT_DOUBLE_EQ(c.t_certified, *std::max_element(c.sweep_history.begin(), c.sweep_history.end()));
    EXPECT_TRUE(verify(c, f.rho, f.noise).passed);
  }
}

TEST(Certify, CertificateTransfersToWeakerStructure) {
  const auto f = setup("w", 3, "part:3");
  Certificate c = certify(f.rho, f.noise, f.spec, small_config());
  ASSERT_TRUE(verify(c, f.rho, f.noise).passed);
  c.spec = "part:2";
  EXPECT_TRUE(verify(c, f.rho, f.noise).passed);
  c.spec = "prod:2";
  EXPECT_TRUE(verify(c, f.rho, f.noise).passed);

  const auto g = setup("ghz", 3, "prod:2");
  Certificate d = certify(g.rho, g.noise, g.spec, small_config());
  ASSERT_TRUE(verify(d, g.rho, g.noise).passed);
  d.spec = "prod:3";
  EXPECT_TRUE(verify(d, g.rho, g.noise).passed);
}

TEST(Certify, DegenerateInputReturnsOne) {
  const DensityMatrix mixed = DensityMatrix::maximally_mixed(PartyLayout::qubits(3));
  const NoiseModel white = NoiseModel::white(mixed.layout());
  const Certificate c = certify(mixed, white, StructureSpec::parse("full-sep", 3), small_config());
  EXPECT_EQ(c.t_certified, 1.0);
  EXPECT_TRUE(verify(c, mixed, white).passed);
}

TEST(Certify, BiasedNoiseAndNonQubitLayouts) {
  const auto f = setup("w", 3, "full-sep", true);
  const Certificate c = certify(f.rho, f.noise, f.spec, small_config());
  EXPECT_GT(c.t_certified, 0.0);
  EXPECT_TRUE(verify(c, f.rho, f.noise).passed);

  // Qutrit-qubit isotropic-like state: certified, but no augmentation available.
  const PartyLayout layout({3, 2});
  CVector psi = CVector::Zero(6);
  psi(0) = psi(3) = 1.0 / std::sqrt(2.0);
  const DensityMatrix rho = DensityMatrix::pure(layout, psi);
  const NoiseModel white = NoiseModel::white(layout);
  CertifyConfig cfg = small_config();
  const Certificate q = certify(rho, white, StructureSpec::parse("full-sep", 2), cfg);
  EXPECT_FALSE(q.mub_used);
  EXPECT_TRUE(verify(q, rho, white).passed);
  const double boundary = oracle::ppt_boundary(
      [&](double t) { return CMatrix(t * rho.matrix() + (1 - t) * white.endpoint.matrix()); }, {3, 2});
  EXPECT_LE(q.t_certified, boundary + 5e-3);
}

TEST(Certify, DeterministicGivenSeed) {
  const auto f = setup("ghz", 3, "part:2");
  const Certificate a = certify(f.rho, f.noise, f.spec, small_config());
  const Certificate b = certify(f.rho, f.noise, f.spec, small_config());
  EXPECT_EQ(a.t_certified, b.t_certified);
  EXPECT_EQ(a.sweep_history, b.sweep_history);
  EXPECT_EQ(a.config_digest, b.config_digest);
}

TEST(CertifyVertices, TrivialPartitionPassesWithZeroResidual) {
  const auto f = setup("ghz", 3, "part:1");
  const std::vector<SdpVertex> v{{Partition::trivial(3), {CMatrix()}, 0, false}};
  const auto c = certify_vertices(f.rho, f.noise, f.spec, v, InteriorPointSolver());
  ASSERT_TRUE(c.has_value());
  EXPECT_NEAR(c->t_certified, 1.0, 1e-7);
  const auto r = verify(*c, f.rho, f.noise);
  EXPECT_TRUE(r.passed);
  EXPECT_LE(r.residual, 1e-7);
}

TEST(Verify, RejectsInjectedNegativeEigenvalue) {
  const auto f = setup("ghz", 2, "full-sep");
  Certificate c = certify(f.rho, f.noise, f.spec, small_config());
  ASSERT_TRUE(verify(c, f.rho, f.noise).passed);
  auto& tau = c.entries.front().tau;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(tau);
  Eigen::VectorXd ev = es.eigenvalues();
  ev(0) = -1e-3;
  tau = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
  const auto r = verify(c, f.rho, f.noise);
  EXPECT_FALSE(r.passed);
  EXPECT_FALSE(check(r, "tau-psd").passed);
  EXPECT_NE(check(r, "tau-psd").detail.find("PSD"), std::string::npos);
}

TEST(Verify, RejectsEditedT) {
  const auto f = setup("ghz", 2, "full-sep");
  Certificate c = certify(f.rho, f.noise, f.spec, small_config());
  c.t_certified += 0.05;
  const auto r = verify(c, f.rho, f.noise);
  EXPECT_FALSE(r.passed);
  EXPECT_FALSE(check(r, "residual").passed);
  c.t_certified = 1.5;
  EXPECT_FALSE(check(verify(c, f.rho, f.noise), "t-range").passed);
}

TEST(Verify, RejectsPartitionOutsideFamily) {
  const auto f = setup("w", 3, "part:2");
  Certificate c = certify(f.rho, f.noise, f.spec, small_config());
  ASSERT_TRUE(verify(c, f.rho, f.noise).passed);
  c.spec = "full-sep";
  const auto r = verify(c, f.rho, f.noise);
  EXPECT_FALSE(r.passed);
  EXPECT_FALSE(check(r, "family").passed);
}

TEST(Verify, RejectsNonStateFixedFactorAndWrongState) {
  const auto f = setup("ghz", 2, "full-sep");
  Certificate c = certify(f.rho, f.noise, f.spec, small_config());
  Certificate bad = c;
  for (auto& e : bad.entries)
    for (int x = 0; x < e.partition.size(); ++x)
      if (x != e.free_part) {
        e.fixed_factors[x] *= 2.0;
        break;
      }
  EXPECT_FALSE(check(verify(bad, f.rho, f.noise), "product").passed);

  const DensityMatrix w = make_state(StateSpec::parse("w", 2));
  EXPECT_FALSE(verify(c, w, f.noise).passed);
  const DensityMatrix three = make_state(StateSpec::parse("ghz", 3));
  const auto r = verify(c, three, NoiseModel::white(three.layout()));
  EXPECT_FALSE(r.passed);
  EXPECT_FALSE(check(r, "layout").passed);
}

TEST(Certificate, JsonRoundTrip) {
  const auto f = setup("w", 3, "prod:2");
  const Certificate c = certify(f.rho, f.noise, f.spec, small_config());
  const Certificate back = Certificate::from_json(nlohmann::json::parse(c.to_json().dump()));
  EXPECT_EQ(back.t_certified, c.t_certified);
  EXPECT_EQ(back.spec, c.spec);
  EXPECT_EQ(back.entries.size(), c.entries.size());
  EXPECT_EQ(back.config_digest, c.config_digest);
  EXPECT_EQ(back.sweep_history, c.sweep_history);
  EXPECT_EQ(back.assemble(), c.assemble());
  EXPECT_TRUE(verify(back, f.rho, f.noise).passed);
}

TEST(CertifyConfig, DigestTracksSettings) {
  CertifyConfig a, b;
  EXPECT_EQ(a.digest(), b.digest());
  EXPECT_EQ(a.digest().size(), 16u);
  b.per_partition = 101;
  EXPECT_NE(a.digest(), b.digest());
}
