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

#include "dilation_lab/krylov.hpp"
#include "dilation_lab/scenarios.hpp"
#include "test_support.hpp"

namespace dilation_lab {
namespace {

using testing::random_hermitian;
using testing::random_state;

// Rank of [h^k (|j> kron psi)] for k < powers by SVD of the raw power columns.
Index power_rank(const ComplexMatrix& h, const ComplexVector& psi, Index ds, Index powers) {
  std::vector<ComplexVector> cols;
  for (Index j = 0; j < ds; ++j) {
    ComplexVector v = kron(basis_vector(ds, j), psi);
    for (Index k = 0; k < powers; ++k) {
      cols.push_back(v / v.norm());
      v = h * v;
      if (v.norm() == 0.0) break;
    }
  }
  ComplexMatrix m(h.rows(), static_cast<Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) m.col(static_cast<Index>(c)) = cols[c];
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  const auto& s = svd.singularValues();
  Index r = 0;
  for (Index k = 0; k < s.size(); ++k) r += s(k) > 1e-9 * s(0);
  return r;
}

TEST(KrylovBasis, CyclicSubspaceDimension) {
  ComplexMatrix a = ComplexMatrix::Zero(5, 5);
  for (Index k = 0; k < 5; ++k) a(k, k) = static_cast<double>(k + 1);
  ComplexVector v = ComplexVector::Zero(5);
  v(0) = 1.0;
  v(2) = 2.0;
  v(4) = -1.0;
  KrylovResult r = krylov_basis(a, v);
  EXPECT_EQ(r.rank(), 3);
  const ComplexMatrix& q = r.subspace.basis();
  EXPECT_LE((q.adjoint() * q - identity(3)).norm(), 1e-13);
  EXPECT_LE(r.subspace.distance_to(v), 1e-12);
  EXPECT_EQ(krylov_basis(a, v, Index{2}).rank(), 2);
  EXPECT_EQ(krylov_basis(a, ComplexVector::Zero(5)).rank(), 0);
  EXPECT_THROW(krylov_basis(a, ComplexVector::Zero(4)), DimensionError);
}

TEST(KParallel, InvariantUnderGenerator) {
  testing::reseed(201);
  for (int trial = 0; trial < 50; ++trial) {
    const Index ds = 2 + trial % 2, de = 2 + (trial / 2) % 2;
    ComplexMatrix h = random_hermitian(ds * de);
    // Sparse couplings give proper subspaces in some trials.
    if (trial % 3 == 0) {
      for (Index i = 0; i < h.rows(); ++i)
        for (Index j = 0; j < h.cols(); ++j)
          if ((i + 2 * j) % 3 == 0 && i != j) h(i, j) = h(j, i) = 0.0;
    }
    ComplexVector psi = trial % 3 == 0 ? ComplexVector(basis_vector(de, 0)) : random_state(de);
    KrylovResult k = k_parallel(h, psi, TensorSpace{ds, de});
    const ComplexMatrix p = k.subspace.projector();
    EXPECT_LE(((identity(p.rows()) - p) * h * p).norm(), 1e-10) << "trial " << trial;
    for (Index j = 0; j < ds; ++j) EXPECT_LE(k.subspace.distance_to(kron(basis_vector(ds, j), psi)), 1e-10);
    EXPECT_EQ(k.rank(), power_rank(h, psi, ds, ds * de)) << "trial " << trial;
    EXPECT_EQ(k.rank() + k.perp().rank(), ds * de);
  }
}

TEST(KParallel, ExampleOneRanks) {
  const Scenario s = build_example(1);
  const Dilation& d = s.cases.front().dilation;
  const ComplexMatrix& h = *d.evolution.hamiltonian();
  KrylovResult k = k_parallel(h, d.env_state.vector(), d.split_space());
  EXPECT_EQ(k.rank(), 3);
  EXPECT_EQ(k.perp().rank(), 1);
  EXPECT_EQ(k_parallel_order2(h, d.env_state.vector(), d.split_space()).rank(), 3);
  // K_perp is |0_S 0_E>.
  EXPECT_LE(k.perp().distance_to(basis_vector(4, 0)), 1e-12);
}

TEST(KParallel, ExampleTwoPurifiedRanks) {
  const Scenario s = build_example(2);
  Dilation d = purify(s.cases.front().dilation);
  KrylovResult k = k_parallel(*d.evolution.hamiltonian(), d.env_state.vector(), d.split_space());
  EXPECT_EQ(k.rank(), 6);
  EXPECT_EQ(k.perp().rank(), 2);
  // K_perp = span{|0_S 0_E 1_C>, |1_S 1_E 0_C>}.
  EXPECT_LE(k.perp().distance_to(basis_vector(8, 1)), 1e-12);
  EXPECT_LE(k.perp().distance_to(basis_vector(8, 6)), 1e-12);
}

TEST(KParallel, ExampleThreeRanksAndSeeds) {
  const Scenario s = build_example(3);
  const Dilation& d = s.cases.front().dilation;
  const ComplexMatrix& h = *d.evolution.hamiltonian();
  KrylovResult k = k_parallel(h, d.env_state.vector(), d.split_space());
  EXPECT_EQ(k.rank(), 10);
  EXPECT_EQ(k.perp().rank(), 6);
  ASSERT_EQ(k.seeds.size(), 4u);
  for (Index j = 0; j < 4; ++j) EXPECT_EQ(k.seeds[j].dim, j + 1);
  KrylovResult k2 = k_parallel_order2(h, d.env_state.vector(), d.split_space());
  EXPECT_EQ(k2.rank(), 9);
  EXPECT_EQ(k2.rank(), power_rank(h, d.env_state.vector(), 4, kOrderTwoVectors));
  // Order 2 misses exactly |0_S 3_E> from K_par.
  EXPECT_GT(k2.subspace.distance_to(basis_vector(16, 0 * 4 + 3)), 0.99);
  EXPECT_LE(k.subspace.distance_to(basis_vector(16, 0 * 4 + 3)), 1e-12);
}

TEST(KParallel, ZeroGeneratorGivesSystemDimension) {
  KrylovResult k = k_parallel(ComplexMatrix::Zero(6, 6), basis_vector(2, 1), TensorSpace{3, 2});
  EXPECT_EQ(k.rank(), 3);
}

TEST(KParallel, Preconditions) {
  EXPECT_THROW(k_parallel(identity(4), basis_vector(3, 0), TensorSpace{2, 2}), DimensionError);
  EXPECT_THROW(k_parallel(identity(4), ComplexVector(2 * basis_vector(2, 0)), TensorSpace{2, 2}), PreconditionError);
}

TEST(SigmaParallel, MatchesKrylovForGenerators) {
  const Scenario s = build_example(1);
  const Dilation& d = s.cases.front().dilation;
  SigmaResult sig = sigma_parallel_sampled(d.evolution, d.env_state.vector(), d.split_space(), TimeGrid{});
  EXPECT_EQ(sig.rank, 3);
  ASSERT_TRUE(sig.stabilized.has_value());
  EXPECT_TRUE(*sig.stabilized);
  KrylovResult k = k_parallel(*d.evolution.hamiltonian(), d.env_state.vector(), d.split_space());
  EXPECT_LE((sig.subspace.projector() - k.subspace.projector()).norm(), 1e-9);
}

TEST(SigmaParallel, NonHamiltonianFamilies) {
  const Scenario s = build_example(4);
  const Dilation& d = s.cases.front().dilation;
  SigmaResult sig = sigma_parallel_sampled(d.evolution, d.env_state.vector(), d.split_space(), TimeGrid{});
  EXPECT_EQ(sig.rank, 3);
  EXPECT_TRUE(sig.stabilized.value_or(false));
  auto times = TimeGrid{}.times();
  std::vector<TableSample> samples;
  for (double t : times) samples.push_back({t, d.evolution.at(t)});
  SigmaResult tab = sigma_parallel_sampled(UnitaryFamily::table(samples), d.env_state.vector(), d.split_space(),
                                           TimeGrid{});
  EXPECT_EQ(tab.rank, 3);
  EXPECT_FALSE(tab.stabilized.has_value());
}

}  // namespace
}  // namespace dilation_lab
