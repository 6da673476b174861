// Copyright 2026 The dilation-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>

#include "dilation_lab/symmetry.hpp"
#include "dilation_lab/scenarios.hpp"
#include "test_support.hpp"

namespace dilation_lab {
namespace {

const ComplexMatrix kNs = number_op(2);

ComplexMatrix diag(std::initializer_list<double> v) {
  ComplexMatrix m = ComplexMatrix::Zero(static_cast<Index>(v.size()), static_cast<Index>(v.size()));
  Index k = 0;
  for (double x : v) m(k, k) = x, ++k;
  return m;
}

TEST(SymmetryRep, OneParameterElements) {
  SymmetryRep rep = SymmetryRep::one_parameter(kNs);
  ASSERT_EQ(rep.elements().size(), 16u);
  EXPECT_EQ(rep.elements().front().label, "e");
  for (const auto& e : rep.elements()) {
    EXPECT_TRUE(is_unitary(e.unitary));
    if (e.label == "e") continue;
    ASSERT_EQ(e.params.size(), 1u);
    EXPECT_LE((e.unitary - matexp(kNs, Complex{0.0, -e.params[0]})).norm(), 1e-14);
  }
  EXPECT_THROW(SymmetryRep::one_parameter(testing::random_matrix(2, 2)), PreconditionError);
}

TEST(SymmetryRep, MatchingReusesParametersAndLabels) {
  SymmetryRep sys = SymmetryRep::one_parameter(kNs, {0.5, 1.5});
  SymmetryRep env = SymmetryRep::matching(sys, {diag({-1.0, 0.0})});
  ASSERT_EQ(env.elements().size(), sys.elements().size());
  for (std::size_t k = 0; k < env.elements().size(); ++k) EXPECT_EQ(env.elements()[k].label, sys.elements()[k].label);
  EXPECT_LE(std::abs(env.elements()[1].unitary(0, 0) - std::exp(Complex{0.0, 0.5})), 1e-14);
  SymmetryRep su2 = SymmetryRep::lie_algebra(spin_matrices(1.0));
  SymmetryRep adj = SymmetryRep::matching(su2, adjoint_generators());
  EXPECT_EQ(adj.elements().size(), 13u);
  EXPECT_NO_THROW(ProductRep(su2, adj));
  EXPECT_THROW(ProductRep(sys, SymmetryRep::one_parameter(kNs, {0.5})), PreconditionError);
}

TEST(SpinMatrices, CasimirAndCommutators) {
  for (double j : {0.5, 1.0, 1.5, 2.0}) {
    auto s = spin_matrices(j);
    const Index n = s[0].rows();
    EXPECT_EQ(n, static_cast<Index>(std::lround(2 * j)) + 1);
    ComplexMatrix c = s[0] * s[0] + s[1] * s[1] + s[2] * s[2];
    EXPECT_LE((c - j * (j + 1) * identity(n)).norm(), 1e-12) << "j=" << j;
    EXPECT_LE((commutator(s[0], s[1]) - kI * s[2]).norm(), 1e-12);
    EXPECT_LE((commutator(s[1], s[2]) - kI * s[0]).norm(), 1e-12);
    for (const auto& m : s) EXPECT_TRUE(is_hermitian(m));
  }
  auto t = adjoint_generators();
  EXPECT_LE((commutator(t[0], t[1]) - kI * t[2]).norm(), 1e-14);
  EXPECT_LE((t[0] * t[0] + t[1] * t[1] + t[2] * t[2] - 2.0 * identity(3)).norm(), 1e-14);
}

TEST(Covariance, DetectsWeakSymmetryAndItsAbsence) {
  const Scenario s = build_example(1);
  SymmetryRep rep = SymmetryRep::one_parameter(kNs);
  Superoperator phi = map_from_dilation(s.cases.front().dilation, 0.9);
  EXPECT_TRUE(check_covariance(phi, rep).pass);
  ComplexMatrix had(2, 2);
  had << 1, 1, 1, -1;
  had /= std::sqrt(2.0);
  SymmetryCertificate bad = check_covariance(conjugation_superoperator(had), rep);
  EXPECT_FALSE(bad.pass);
  EXPECT_GT(bad.residual, 0.1);
  // Unitary conjugation by a random unitary commuting with N_S is covariant.
  ComplexMatrix phase = diag({1.0, 0.0}) + std::exp(Complex{0.0, 0.7}) * diag({0.0, 1.0});
  EXPECT_TRUE(check_covariance(conjugation_superoperator(phase), rep).pass);
  EXPECT_THROW(check_covariance(identity_superoperator(3), rep), DimensionError);
}

TEST(Covariance, CommutatorSuperoperatorMatchesDefinition) {
  testing::reseed(301);
  ComplexMatrix j = testing::random_hermitian(3), x = testing::random_matrix(3, 3);
  EXPECT_LE((commutator_superoperator(j) * vectorize(x) - vectorize(j * x - x * j)).norm(), 1e-12);
}

TEST(HermitianBasis, OrthonormalAndComplete) {
  for (Index n : {1, 2, 3}) {
    auto b = hermitian_basis(n);
    ASSERT_EQ(static_cast<Index>(b.size()), n * n);
    for (std::size_t a = 0; a < b.size(); ++a) {
      EXPECT_TRUE(is_hermitian(b[a]));
      for (std::size_t c = 0; c < b.size(); ++c) {
        EXPECT_NEAR(std::abs((b[a].adjoint() * b[c]).trace()), a == c ? 1.0 : 0.0, 1e-14);
      }
    }
  }
}

TEST(SolveEnvGenerator, ExampleOne) {
  const Scenario s = build_example(1);
  const Dilation& d = s.cases.front().dilation;
  KrylovResult k = k_parallel(*d.evolution.hamiltonian(), d.env_state.vector(), d.split_space());
  EnvGeneratorSolution sol = solve_env_generator(d, kNs, k.subspace);
  EXPECT_TRUE(sol.unique);
  EXPECT_LE((sol.j_e - diag({-1.0, 0.0})).norm(), 1e-9);
  EXPECT_LE(sol.certificate.residual, 1e-12);
  // pi_E(g) = exp(-i g (N_E - I)) at every sampled g.
  SymmetryRep env = SymmetryRep::matching(SymmetryRep::one_parameter(kNs), {sol.j_e});
  for (const auto& e : env.elements()) {
    if (e.label == "e") continue;
    ComplexMatrix expected = matexp(diag({-1.0, 0.0}), Complex{0.0, -e.params[0]});
    EXPECT_LE((e.unitary - expected).norm(), 1e-9);
  }
  // Global conservation of N_S + N_E.
  ComplexMatrix total = kron(kNs, identity(2)) + kron(identity(2), kNs);
  EXPECT_LE(commutator(*d.evolution.hamiltonian(), total).norm(), 1e-12);
}

TEST(SolveEnvGenerator, ExamplesTwoAndThree) {
  const Scenario s2 = build_example(2);
  Dilation d2 = purify(s2.cases.front().dilation);
  KrylovResult k2 = k_parallel(*d2.evolution.hamiltonian(), d2.env_state.vector(), d2.split_space());
  EnvGeneratorSolution sol2 = solve_env_generator(d2, kNs, k2.subspace);
  EXPECT_TRUE(sol2.unique);
  EXPECT_LE((sol2.j_e - diag({0.0, -1.0, 1.0, 0.0})).norm(), 1e-9);
  EXPECT_LE((sol2.j_e * d2.env_state.vector()).norm(), 1e-12);

  const Scenario s3 = build_example(3);
  const Dilation& d3 = s3.cases.front().dilation;
  const ComplexMatrix& h3 = *d3.evolution.hamiltonian();
  for (bool order2 : {false, true}) {
    KrylovResult k = order2 ? k_parallel_order2(h3, d3.env_state.vector(), d3.split_space())
                            : k_parallel(h3, d3.env_state.vector(), d3.split_space());
    EnvGeneratorSolution sol = solve_env_generator(d3, number_op(4), k.subspace);
    EXPECT_LE((sol.j_e - number_op(4)).norm(), 1e-9) << "order2=" << order2;
  }
}

TEST(SolveEnvGenerator, Preconditions) {
  const Scenario s = build_example(1);
  const Dilation& d = s.cases.front().dilation;
  Subspace full = full_space(d.split_space());
  EXPECT_THROW(solve_env_generator(d, testing::random_matrix(2, 2), full), PreconditionError);
  const Scenario s4 = build_example(4);
  EXPECT_THROW(solve_env_generator(s4.cases.front().dilation, kNs, full), PreconditionError);
  const Scenario s2 = build_example(2);
  EXPECT_THROW(solve_env_generator(s2.cases.front().dilation, kNs, full), PreconditionError);
}

TEST(FitEnvGenerator, AgreesWithKrylovSolveOnExampleOne) {
  const Scenario s = build_example(1);
  const Dilation& d = s.cases.front().dilation;
  std::vector<ComplexMatrix> isos;
  for (double t : TimeGrid{}.times()) isos.push_back(isometry_from_dilation(d, t).v);
  EnvFit fit = fit_env_generator(isos, kNs, 2);
  KrylovResult k = k_parallel(*d.evolution.hamiltonian(), d.env_state.vector(), d.split_space());
  EnvGeneratorSolution sol = solve_env_generator(d, kNs, k.subspace);
  EXPECT_TRUE(fit.unique);
  EXPECT_LE(fit.residual, 1e-12);
  EXPECT_LE((fit.j_e - sol.j_e).norm(), 1e-9);
}

TEST(FitEnvGenerator, ExampleSevenAdjointGenerators) {
  for (double j : {0.5, 1.0, 1.5}) {
    const Scenario s = build_example(7, ScenarioParams{.j = j});
    const Dilation& d = s.cases.front().dilation;
    StinespringIsometry iso = isometry_from_dilation(d, 0.0);
    auto spin = spin_matrices(j);
    auto t = adjoint_generators();
    for (std::size_t a = 0; a < 3; ++a) {
      EnvFit f = fit_env_generator({iso.v}, spin[a], 3);
      EXPECT_TRUE(f.unique);
      EXPECT_LE((f.j_e - t[a]).norm(), 1e-9) << "j=" << j << " a=" << a;
    }
  }
}

TEST(FitEnvElement, ReproducesGroupAction) {
  const Scenario s = build_example(4);
  const Dilation& d = s.cases.front().dilation;
  std::vector<ComplexMatrix> isos{isometry_from_dilation(d, 0.7).v, isometry_from_dilation(d, 1.9).v};
  const double g = 1.1;
  EnvFit f = fit_env_element(isos, matexp(kNs, Complex{0.0, -g}), 2);
  EXPECT_LE((f.j_e - matexp(diag({1.0, 0.0}), Complex{0.0, -g})).norm(), 1e-9);
  EXPECT_THROW(fit_env_element(isos, identity(3), 2), DimensionError);
}

TEST(Intertwiner, ExampleFourSamplesAndStationarity) {
  const Scenario s = build_example(4);
  const Dilation& d = s.cases.front().dilation;
  SymmetryRep sys = SymmetryRep::one_parameter(kNs, {0.4, 1.3, 2.9, 4.4});
  SymmetryRep env = SymmetryRep::matching(sys, {diag({1.0, 0.0})});
  std::vector<TimedIsometry> samples;
  for (double t : {0.25, 1.0}) samples.push_back({t, isometry_from_dilation(d, t)});
  IntertwinerReport r = verify_intertwiner(samples, sys, env, 1e-10);
  EXPECT_TRUE(r.certificate.pass);
  EXPECT_LE(r.certificate.residual, 1e-10);
  EXPECT_LE(r.drift, 1e-10);
  EXPECT_EQ(r.audited_times, 2);
  EXPECT_FALSE(r.stationarity.required);
  // A wrong environment representation is rejected.
  SymmetryRep wrong = SymmetryRep::matching(sys, {diag({0.0, 1.0})});
  EXPECT_FALSE(verify_intertwiner(samples, sys, wrong).certificate.pass);
}

TEST(InvariantState, MutuallyExclusiveWithNoInvariantState) {
  SymmetryRep qubit = SymmetryRep::one_parameter(diag({-1.0, 0.0}));
  SymmetryCertificate none = no_invariant_state(qubit);
  EXPECT_FALSE(none.pass);
  EXPECT_EQ(none.residual, 1.0);
  EXPECT_TRUE(check_invariant_env_state(qubit, basis_vector(2, 1)).pass);
  EXPECT_FALSE(check_invariant_env_state(qubit, basis_vector(2, 0)).pass);

  SymmetryRep adj = SymmetryRep::lie_algebra(adjoint_generators());
  EXPECT_TRUE(no_invariant_state(adj).pass);
  testing::reseed(302);
  for (int trial = 0; trial < 5; ++trial) {
    EXPECT_FALSE(check_invariant_env_state(adj, testing::random_state(3)).pass);
  }
  SymmetryRep trivial = SymmetryRep::one_parameter(ComplexMatrix::Zero(3, 3));
  EXPECT_EQ(no_invariant_state(trivial).residual, 3.0);
}

TEST(StrongSymmetry, ExampleFiveGoldenResidual) {
  const Scenario s = build_example(5);
  const Dilation& d = s.cases.front().dilation;
  SymmetryRep sys = SymmetryRep::one_parameter(kNs, {kPi});
  SymmetryRep env = SymmetryRep::matching(sys, {diag({-1.0, 0.0})});
  Subspace sub = orthonormalize_columns(kron(identity(2), ComplexMatrix(basis_vector(2, 0))), d.split_space());
  SymmetryCertificate c = strong_symmetry_on_subspace(d.evolution.at(kPi / 4), ProductRep(sys, env), sub);
  EXPECT_FALSE(c.pass);
  EXPECT_NEAR(c.residual, 2.0 * std::sqrt(2.0), 1e-9);
}

TEST(StrongSymmetry, InvariancePrecondition) {
  const Scenario s = build_example(1);
  const Dilation& d = s.cases.front().dilation;
  SymmetryRep sys = SymmetryRep::one_parameter(kNs);
  SymmetryRep env = SymmetryRep::matching(sys, {diag({-1.0, 0.0})});
  Subspace not_invariant = orthonormalize_columns(ComplexMatrix(basis_vector(4, 1)), d.split_space());
  StrongSymmetryOptions opt;
  opt.require_invariant = true;
  EXPECT_THROW(strong_symmetry_on_subspace(*d.evolution.hamiltonian(), ProductRep(sys, env), not_invariant, opt),
               PreconditionError);
}

TEST(BlockDiagonal, QuadratureOfOffBlocks) {
  ComplexMatrix x = ComplexMatrix::Zero(3, 3);
  x(0, 2) = 1.0;
  x(2, 0) = 1.0;
  Subspace sub = orthonormalize_columns(ComplexMatrix(identity(3).leftCols(2)), TensorSpace{3});
  SymmetryCertificate c = block_diagonal_check(x, sub);
  EXPECT_NEAR(c.residual, std::sqrt(2.0), 1e-15);
  EXPECT_TRUE(block_diagonal_check(identity(3), sub).pass);
}

TEST(Symmetrize, CompressionIsGloballySymmetric) {
  const Scenario s = build_example(2);
  Dilation d = purify(s.cases.front().dilation);
  const Scenario s2 = build_example(2);
  const Dilation& hp = s2.cases[1].dilation;
  const ComplexMatrix& h = *hp.evolution.hamiltonian();
  KrylovResult k = k_parallel(h, hp.env_state.vector(), hp.split_space());
  SymmetryRep sys = SymmetryRep::one_parameter(kNs);
  SymmetryRep env = SymmetryRep::matching(sys, {diag({0.0, -1.0, 1.0, 0.0})});
  ProductRep ug(sys, env);
  ComplexMatrix sym = symmetrize_hamiltonian(h, ug, k.subspace);
  EXPECT_FALSE(strong_symmetry_on_subspace(h, ug, full_space(hp.split_space())).pass);
  EXPECT_TRUE(strong_symmetry_on_subspace(sym, ug, full_space(hp.split_space())).pass);
  EXPECT_LE(((sym - h) * k.subspace.basis()).norm(), 1e-12);
  EXPECT_LE(superoperator_distance(map_from_dilation(d, 1.2), map_from_dilation(
                                                                   Dilation{2, {2, 2}, hp.env_state,
                                                                            UnitaryFamily::generator(sym)},
                                                                   1.2)),
            1e-10);
}

}  // namespace
}  // namespace dilation_lab
