#include <random>

#include <gtest/gtest.h>

#include "entcert/certify.hpp"
#include "entcert/sdp.hpp"
#include "entcert/states.hpp"
#include "oracles.hpp"

using namespace entcert;

namespace {

SdpVertex random_vertex(const Partition& p, const PartyLayout& layout, int free_part, std::mt19937_64& rng) {
  SdpVertex v{p, {}, free_part, false};
  for (int x = 0; x < p.size(); ++x) v.factors.push_back(oracle::random_density(layout.restrict_to(p.part(x)).total(), rng));
  return v;
}

std::vector<SdpVertex> gd_vertices(const DensityMatrix& rho, const NoiseModel& noise, const std::string& spec,
                                   int per_partition) {
  const auto fam = family(StructureSpec::parse(spec, rho.layout().parties()));
  const GdResult res = run(init_ensemble(fam, rho.layout(), per_partition, 1), rho.matrix(), noise.endpoint.matrix(),
                           GdConfig{});
  std::vector<SdpVertex> out;
  for (const auto& v : res.params.vertices) out.push_back(to_sdp_vertex(v, 0));
  return out;
}

}  // namespace

TEST(SelectFreePart, LargestFirstThenRotate) {
  const Partition p31(4, {{0, 1, 2}, {3}});
  EXPECT_EQ(p31.part(select_free_part(p31, 0)), (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(p31.part(select_free_part(p31, 1)), (std::vector<int>{3}));
  EXPECT_EQ(p31.part(select_free_part(p31, 2)), (std::vector<int>{0, 1, 2}));
  const Partition p22(4, {{2, 3}, {0, 1}});
  EXPECT_EQ(p22.part(select_free_part(p22, 0)), (std::vector<int>{0, 1}));
  EXPECT_EQ(p22.part(select_free_part(p22, 1)), (std::vector<int>{2, 3}));
  const Partition p13(4, {{0}, {1, 2, 3}});
  EXPECT_EQ(p13.part(select_free_part(p13, 0)), (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(p13.part(select_free_part(p13, 1)), (std::vector<int>{0}));
}

TEST(MubPolytope, Counts) {
  EXPECT_EQ(mub_polytope(PartyLayout::qubits(2)).size(), 6u);
  EXPECT_EQ(mub_polytope(PartyLayout::qubits(4)).size(), 216u);
  EXPECT_EQ(mub_polytope(PartyLayout::qubits(4), 50, 3).size(), 50u);
  EXPECT_THROW(mub_polytope(PartyLayout({2, 3})), std::invalid_argument);
  for (const auto& v : mub_polytope(PartyLayout::qubits(3))) {
    EXPECT_TRUE(v.augmentation);
    EXPECT_EQ(v.free_parties(), std::vector<int>{2});
  }
}

TEST(MubPolytope, SubsampleIsSeeded) {
  const auto a = mub_polytope(PartyLayout::qubits(4), 20, 9);
  const auto b = mub_polytope(PartyLayout::qubits(4), 20, 9);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].factors, b[i].factors);
}

TEST(MubPolytope, UniformMixtureIsMaximallyMixed) {
  for (int n = 2; n <= 4; ++n) {
    const PartyLayout layout = PartyLayout::qubits(n);
    const auto mub = mub_polytope(layout);
    const DensityMatrix mixed = DensityMatrix::maximally_mixed(layout);
    const ConicProblem prob = build_sdp({}, mixed, mixed, mub);
    CMatrix sum = CMatrix::Zero(layout.total(), layout.total());
    const CMatrix tau = CMatrix::Identity(2, 2) / (2.0 * static_cast<double>(mub.size()));
    for (std::size_t i = 0; i < mub.size(); ++i) sum += prob.apply(i, tau);
    EXPECT_LE((sum - mixed.matrix()).norm(), 1e-12) << n;
  }
}

TEST(HermitianBasis, Orthonormal) {
  const int d = 3;
  for (int a = 0; a < d * d; ++a) {
    const CMatrix ha = hermitian_basis_element(d, a);
    EXPECT_LT((ha - ha.adjoint()).norm(), 1e-15);
    for (int b = 0; b < d * d; ++b)
      EXPECT_NEAR(hs_inner(ha, hermitian_basis_element(d, b)), a == b ? 1.0 : 0.0, 1e-15);
  }
}

TEST(ConicProblem, ApplyMatchesEmbedAndAdjointIsAdjoint) {
  std::mt19937_64 rng(31);
  const PartyLayout layout({2, 3, 2});
  const DensityMatrix mixed = DensityMatrix::maximally_mixed(layout);
  ConicProblem prob(layout, mixed.matrix(), mixed.matrix());
  std::vector<SdpVertex> vs{random_vertex(Partition(3, {{0, 2}, {1}}), layout, 0, rng),
                            random_vertex(Partition(3, {{0, 2}, {1}}), layout, 1, rng),
                            random_vertex(Partition(3, {{0}, {1}, {2}}), layout, 2, rng),
                            random_vertex(Partition::trivial(3), layout, 0, rng)};
  for (const auto& v : vs) prob.add_block(v);
  EXPECT_EQ(prob.constraint_count(), 144);
  for (std::size_t i = 0; i < vs.size(); ++i) {
    const auto& v = vs[i];
    const int df = layout.restrict_to(v.free_parties()).total();
    const CMatrix tau = oracle::random_density(df, rng) * 2.5;
    std::vector<PlacedFactor> placed;
    for (int x = 0; x < v.partition.size(); ++x)
      placed.push_back({x == v.free_part ? tau : v.factors[x], v.partition.part(x)});
    EXPECT_LT((prob.apply(i, tau) - oracle::embed_by_permutation(placed, layout.dims())).norm(), 1e-13);

    const CMatrix y = oracle::random_density(12, rng) - 0.3 * oracle::random_density(12, rng);
    EXPECT_NEAR(hs_inner(prob.apply(i, tau), y), hs_inner(tau, prob.adjoint(i, y)), 1e-13);
    const CMatrix a = prob.constraint_matrix(i, 17);
    EXPECT_LT((a - a.adjoint()).norm(), 1e-14);
  }
}

TEST(Solver, TrivialPartitionSelfTest) {
  const DensityMatrix rho = make_state(StateSpec::parse("w", 3));
  const NoiseModel noise = NoiseModel::white(rho.layout());
  const std::vector<SdpVertex> v{{Partition::trivial(3), {CMatrix()}, 0, false}};
  const SdpSolution sol = InteriorPointSolver().solve(build_sdp(v, rho, noise.endpoint));
  ASSERT_EQ(sol.status, SdpStatus::kOptimal);
  EXPECT_NEAR(sol.t_star, 1.0, 1e-7);
  EXPECT_LT((sol.tau_blocks[0] - rho.matrix()).norm(), 1e-6);
  EXPECT_LE(sol.primal_residual, 1e-6);
}

TEST(Solver, CoincidentEndpoints) {
  const DensityMatrix mixed = DensityMatrix::maximally_mixed(PartyLayout::qubits(2));
  const auto mub = mub_polytope(mixed.layout());
  const SdpSolution sol = InteriorPointSolver().solve(build_sdp({}, mixed, mixed, mub));
  ASSERT_EQ(sol.status, SdpStatus::kOptimal);
  EXPECT_NEAR(sol.t_star, 1.0, 1e-7);
}

TEST(Solver, ReportsInfeasibility) {
  // A single product vertex |0><0| ⊗ free can never produce an entangled target mixture.
  const DensityMatrix rho = make_state(StateSpec::parse("ghz", 2));
  const NoiseModel noise = NoiseModel::white(rho.layout());
  CMatrix zero = CMatrix::Zero(2, 2);
  zero(0, 0) = 1.0;
  const std::vector<SdpVertex> v{{Partition::finest(2), {zero, CMatrix()}, 1, false}};
  const SdpSolution sol = InteriorPointSolver().solve(build_sdp(v, rho, noise.endpoint));
  EXPECT_EQ(sol.status, SdpStatus::kInfeasible);
}

TEST(Solver, BellWithDescentVertices) {
  const DensityMatrix rho = make_state(StateSpec::parse("ghz", 2));
  const NoiseModel noise = NoiseModel::white(rho.layout());
  const auto vs = gd_vertices(rho, noise, "full-sep", 50);
  const SdpSolution sol = InteriorPointSolver().solve(build_sdp(vs, rho, noise.endpoint));
  ASSERT_EQ(sol.status, SdpStatus::kOptimal);
  EXPECT_GE(sol.t_star, 0.32);
  EXPECT_LE(sol.t_star, 1.0 / 3.0 + 5e-3);
  for (const auto& tau : sol.tau_blocks) EXPECT_GE(oracle::min_eigenvalue(tau), -1e-8);
  EXPECT_LE(sol.primal_residual, 1e-6);
}

TEST(Solver, AgreesAcrossToleranceSettings) {
  struct Case {
    const char* state;
    int n;
    const char* spec;
  };
  SdpOptions loose;
  loose.feasibility_tol = 1e-7;
  loose.gap_tol = 1e-6;
  for (const Case& c : {Case{"ghz", 2, "full-sep"}, Case{"w", 3, "full-sep"}, Case{"ghz", 3, "part:2"},
                        Case{"w", 3, "prod:2"}}) {
    const DensityMatrix rho = make_state(StateSpec::parse(c.state, c.n));
    const NoiseModel noise = NoiseModel::white(rho.layout());
    auto vs = gd_vertices(rho, noise, c.spec, 20);
    const auto mub = mub_polytope(rho.layout());
    const ConicProblem prob = build_sdp(vs, rho, noise.endpoint, mub);
    const SdpSolution tight = InteriorPointSolver().solve(prob);
    const SdpSolution rough = InteriorPointSolver(loose).solve(prob);
    ASSERT_EQ(tight.status, SdpStatus::kOptimal) << c.state << c.n << c.spec;
    ASSERT_EQ(rough.status, SdpStatus::kOptimal) << c.state << c.n << c.spec;
    EXPECT_NEAR(tight.t_star, rough.t_star, 1e-4) << c.state << c.n << c.spec;
  }
}

TEST(Solver, IsotropicStatesStayBelowPptBoundary) {
  const DensityMatrix bell = make_state(StateSpec::parse("ghz", 2));
  const NoiseModel white = NoiseModel::white(bell.layout());
  const double boundary = oracle::ppt_boundary(
      [&](double t) { return CMatrix(t * bell.matrix() + (1 - t) * white.endpoint.matrix()); }, {2, 2});
  EXPECT_NEAR(boundary, 1.0 / 3.0, 1e-12);
  const auto vs = gd_vertices(bell, white, "full-sep", 30);
  const auto mub = mub_polytope(bell.layout());
  const SdpSolution sol = InteriorPointSolver().solve(build_sdp(vs, bell, white.endpoint, mub));
  ASSERT_EQ(sol.status, SdpStatus::kOptimal);
  EXPECT_LE(sol.t_star, boundary + 5e-3);
}
