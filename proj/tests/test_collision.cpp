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

#include "dilation_lab/collision.hpp"
#include "dilation_lab/scenarios.hpp"
#include "test_support.hpp"

namespace dilation_lab {
namespace {

const Index kD = 4;

CollisionSpec ex3_spec(double dt = 0.05, double gamma = 1.0) {
  CollisionSpec s = *build_example(3, ScenarioParams{.gamma = gamma, .dt = dt}).cases.front().collision;
  return s;
}

// L(rho) written out on matrices, independent of the vec layout.
ComplexMatrix damping(const ComplexMatrix& rho, double gamma) {
  const ComplexMatrix a = annihilation(kD), ad = a.adjoint();
  return gamma * (a * rho * ad - 0.5 * (ad * a * rho + rho * ad * a));
}

double min_eigenvalue(const ComplexMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

TEST(Gkls, ExampleThreeIsAmplitudeDamping) {
  for (double gamma : {0.5, 1.0, 2.0}) {
    CollisionSpec spec = ex3_spec(0.05, gamma);
    GKLSGenerator g = derive_gkls(spec);
    ASSERT_EQ(g.rates.rows(), 2);
    EXPECT_LE((g.rates - ComplexMatrix(ComplexVector::Unit(2, 1).asDiagonal())).norm(), 1e-15);
    EXPECT_LE(g.hamiltonian.norm(), 0.0);
    Superoperator l = g.superoperator();
    testing::reseed(401);
    for (int trial = 0; trial < 5; ++trial) {
      ComplexMatrix rho = testing::random_density(kD, 2);
      EXPECT_LE((l.apply(rho) - damping(rho, gamma)).norm(), 1e-12);
    }
  }
}

TEST(Gkls, RatesArePositiveSemidefinite) {
  testing::reseed(402);
  for (int trial = 0; trial < 10; ++trial) {
    CollisionSpec spec;
    spec.dim_s = 2;
    spec.dim_e = 3;
    spec.rho_e = testing::random_density(3, 3);
    for (int k = 0; k < 2; ++k) {
      ComplexMatrix a = testing::random_matrix(2, 2), b = testing::random_matrix(3, 3);
      b -= (b * spec.rho_e).trace() * identity(3);
      spec.terms.push_back({a, b});
      spec.terms.push_back({a.adjoint(), b.adjoint()});
    }
    GKLSGenerator g = derive_gkls(spec);
    EXPECT_TRUE(is_hermitian(g.rates));
    EXPECT_GE(min_eigenvalue(g.rates), -1e-12);
  }
}

TEST(Gkls, SingleStepTransferProbability) {
  CollisionSpec spec = ex3_spec(0.05);
  ComplexMatrix rho = matrix_unit(kD, 1, 1);
  ComplexMatrix out = collision_step(spec).apply(rho);
  EXPECT_NEAR(out(0, 0).real(), 0.04917220242497735, 1e-14);
  EXPECT_NEAR(out(0, 0).real(), std::pow(std::sin(std::sqrt(0.05)), 2), 1e-14);
}

TEST(Gkls, FirstOrderAgreementWithGenerator) {
  const double golden[] = {0.11953079484649153, 0.03112672634140031, 0.007943845803233748};
  const double dts[] = {0.1, 0.05, 0.025};
  const Superoperator l = derive_gkls(ex3_spec()).superoperator();
  double prev = 0.0;
  for (int k = 0; k < 3; ++k) {
    ComplexMatrix step = collision_step(ex3_spec(dts[k])).matrix;
    double dev = (step - identity(kD * kD) - dts[k] * l.matrix).norm();
    EXPECT_NEAR(dev, golden[k], 1e-10);
    if (k > 0) {
      EXPECT_NEAR(prev / dev, 4.0, 0.3);
    }
    prev = dev;
  }
}

TEST(Gkls, SemigroupConvergenceGoldens) {
  ConvergenceReport r = semigroup_convergence(ex3_spec(), 1.0, {0.1, 0.05, 0.025});
  const double golden[] = {0.026870956216364254, 0.013308412176541296, 0.0066230153385406};
  ASSERT_EQ(r.entries.size(), 3u);
  for (int k = 0; k < 3; ++k) {
    EXPECT_NEAR(r.entries[k].frobenius_error, golden[k], 1e-10);
    EXPECT_EQ(r.entries[k].steps, std::lround(1.0 / r.entries[k].dt));
    EXPECT_NEAR(r.entries[k].residual_time, 0.0, 1e-12);
  }
  ASSERT_TRUE(r.order.has_value());
  EXPECT_GE(*r.order, 0.8);
  EXPECT_LE(*r.order, 1.3);
  EXPECT_THROW(semigroup_convergence(ex3_spec(), 1.0, {}), PreconditionError);
}

TEST(Gkls, TrajectoriesStayPhysical) {
  Superoperator step = collision_step(ex3_spec(0.01));
  testing::reseed(403);
  auto traj = iterate(step, testing::random_density(kD, 4), 200);
  ASSERT_EQ(traj.size(), 201u);
  for (const auto& rho : traj) {
    EXPECT_NEAR(rho.trace().real(), 1.0, 1e-12);
    EXPECT_TRUE(is_hermitian(rho, 1e-12));
    EXPECT_GE(min_eigenvalue(rho), -1e-12);
  }
  // Populations decay monotonically towards the ground state.
  for (std::size_t k = 1; k < traj.size(); ++k) EXPECT_GE(traj[k](0, 0).real(), traj[k - 1](0, 0).real() - 1e-14);
  EXPECT_THROW(iterate(step, traj.front(), -1), PreconditionError);
}

TEST(Gkls, ModifiedInteractionAgreesToHighOrder) {
  const Scenario s = build_example(3);
  const CollisionSpec hp = *s.cases[1].collision;
  double prev = 0.0;
  for (double dt : {0.01, 0.005}) {
    CollisionSpec a = ex3_spec(dt), b = hp;
    b.dt = dt;
    double dist = superoperator_distance(collision_step(a), collision_step(b));
    EXPECT_LE(dist, 5e-3);
    if (dt == 0.01) {
      EXPECT_NEAR(dist, 5.458279340731936e-08, 1e-11);
    }
    if (prev > 0.0) {
      EXPECT_LT(dist, prev);
    }
    prev = dist;
  }
}

TEST(CollisionSpec, ValidateRejectsBadInput) {
  CollisionSpec good = ex3_spec();
  EXPECT_NO_THROW(good.validate());
  CollisionSpec s = good;
  s.dt = 0.0;
  EXPECT_THROW(s.validate(), PreconditionError);
  s = good;
  s.rho_e = identity(kD);
  EXPECT_THROW(s.validate(), PreconditionError);
  s = good;
  s.rho_e = identity(3) / 3.0;
  EXPECT_THROW(s.validate(), DimensionError);
  s = good;
  s.terms.push_back({identity(kD), matrix_unit(kD, 0, 0)});
  EXPECT_THROW(s.validate(), PreconditionError);
  s = good;
  s.terms.push_back({identity(2), identity(kD)});
  EXPECT_THROW(s.validate(), DimensionError);
  s = good;
  s.terms.pop_back();
  EXPECT_THROW(s.validate(), PreconditionError);
}

TEST(CollisionPipeline, ExampleThreeSymmetry) {
  CollisionSymmetryReport r = collision_symmetry_pipeline(ex3_spec(), number_op(kD));
  EXPECT_TRUE(r.generator_covariance.pass);
  EXPECT_TRUE(r.step_covariance.pass);
  EXPECT_EQ(r.k_par2.rank(), 9);
  EXPECT_LE((r.j_e - number_op(kD)).norm(), 1e-9);
  EXPECT_TRUE(r.invariant_env_state.pass);
  EXPECT_TRUE(r.strong.pass);
}

TEST(CollisionPipeline, MixedAncillaIsPurified) {
  CollisionSpec spec;
  spec.dim_s = 2;
  spec.dim_e = 2;
  spec.rho_e = ComplexMatrix(ComplexVector(ComplexVector::Constant(2, 0.5)).asDiagonal());
  spec.terms = {{sigma_plus(), sigma_minus()}, {sigma_minus(), sigma_plus()}};
  CollisionSymmetryReport r = collision_symmetry_pipeline(spec, number_op(2));
  EXPECT_EQ(r.dilation.dim_e(), 4);
  EXPECT_TRUE(r.generator_covariance.pass);
  EXPECT_TRUE(r.strong.pass);
  // Both emission and absorption channels at equal rates.
  EXPECT_LE((r.gkls.rates - 0.5 * identity(2)).norm(), 1e-14);
}

TEST(CollisionPipeline, ZeroInteraction) {
  CollisionSpec spec;
  spec.dim_s = 2;
  spec.dim_e = 2;
  spec.rho_e = matrix_unit(2, 0, 0);
  spec.terms = {{ComplexMatrix::Zero(2, 2), ComplexMatrix::Zero(2, 2)}};
  CollisionSymmetryReport r = collision_symmetry_pipeline(spec, number_op(2));
  EXPECT_LE(r.j_e.norm(), 1e-12);
  EXPECT_LE(r.gkls.superoperator().matrix.norm(), 0.0);
  EXPECT_LE(superoperator_distance(collision_step(spec), identity_superoperator(2)), 1e-14);
}

}  // namespace
}  // namespace dilation_lab
