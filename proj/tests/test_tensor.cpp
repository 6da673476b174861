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

#include <cstdlib>
#include <stdexcept>

#include "dilation_lab/parallel.hpp"
#include "dilation_lab/tensor.hpp"
#include "test_support.hpp"

namespace dilation_lab {
namespace {

using testing::random_hermitian;
using testing::random_matrix;
using testing::random_state;
using testing::random_unitary;

TEST(Kron, MatchesIndexFormula) {
  testing::reseed(1);
  for (int trial = 0; trial < 20; ++trial) {
    ComplexMatrix a = random_matrix(2 + trial % 2, 3), b = random_matrix(3, 1 + trial % 3);
    EXPECT_LE((kron(a, b) - testing::kron_by_index(a, b)).norm(), 1e-14);
  }
}

TEST(Kron, VectorAndListOverloads) {
  ComplexVector a = basis_vector(2, 1), b = basis_vector(3, 2);
  ComplexVector ab = kron(a, b);
  EXPECT_EQ(ab.size(), 6);
  EXPECT_EQ(ab(1 * 3 + 2), Complex(1.0, 0.0));
  testing::reseed(2);
  ComplexMatrix x = random_matrix(2, 2), y = random_matrix(2, 2), z = random_matrix(2, 2);
  EXPECT_LE((kron({x, y, z}) - kron(kron(x, y), z)).norm(), 1e-13);
}

TEST(Kron, VecIdentity) {
  testing::reseed(3);
  ComplexMatrix a = random_matrix(3, 3), x = random_matrix(3, 3), b = random_matrix(3, 3);
  ComplexMatrix axb = a * x * b;
  ComplexVector lhs(9), vx(9);
  for (Index j = 0; j < 3; ++j)
    for (Index i = 0; i < 3; ++i) lhs(i + 3 * j) = axb(i, j), vx(i + 3 * j) = x(i, j);
  ComplexMatrix bt = b.transpose();
  EXPECT_LE((lhs - kron(bt, a) * vx).norm(), 1e-12);
}

TEST(PartialTrace, MatchesIndexSums) {
  testing::reseed(4);
  for (Index da : {2, 3}) {
    for (Index db : {2, 4}) {
      ComplexMatrix m = random_matrix(da * db, da * db);
      TensorSpace space{da, db};
      EXPECT_LE((partial_trace(m, space, {0}) - testing::trace_second(m, da, db)).norm(), 1e-13);
      EXPECT_LE((partial_trace(m, space, {1}) - testing::trace_first(m, da, db)).norm(), 1e-13);
    }
  }
}

TEST(PartialTrace, ThreeFactorsKeepsAmbientOrder) {
  testing::reseed(5);
  ComplexMatrix a = random_matrix(2, 2), b = random_matrix(3, 3), c = random_matrix(2, 2);
  ComplexMatrix m = kron({a, b, c});
  TensorSpace space{2, 3, 2};
  EXPECT_LE((partial_trace(m, space, {0, 2}) - b.trace() * kron(a, c)).norm(), 1e-12);
  EXPECT_LE((partial_trace(m, space, {2, 0}) - b.trace() * kron(a, c)).norm(), 1e-12);
  EXPECT_LE(std::abs(partial_trace(m, space, {})(0, 0) - m.trace()), 1e-12);
}

TEST(PartialTrace, RejectsMismatchedDims) {
  ComplexMatrix m = identity(5);
  EXPECT_THROW(partial_trace(m, TensorSpace{2, 2}, {0}), DimensionError);
  EXPECT_THROW(partial_trace(identity(4), TensorSpace{2, 2}, {2}), DimensionError);
  EXPECT_THROW(TensorSpace({2, 0}), DimensionError);
}

TEST(Matexp, HermitianPathMatchesTaylor) {
  testing::reseed(6);
  for (int trial = 0; trial < 10; ++trial) {
    ComplexMatrix h = random_hermitian(4);
    const double t = 0.3 + 0.2 * trial;
    ComplexMatrix u = matexp(h, Complex{0.0, -t});
    EXPECT_LE((u - testing::taylor_exp(Complex{0.0, -t} * h)).norm(), 1e-11);
    EXPECT_TRUE(is_unitary(u));
  }
}

TEST(Matexp, GeneralPathMatchesTaylor) {
  testing::reseed(7);
  for (int trial = 0; trial < 10; ++trial) {
    ComplexMatrix a = random_matrix(4, 4);
    EXPECT_LE((matexp(a, Complex{0.7, 0.0}) - testing::taylor_exp(0.7 * a)).norm(), 1e-10);
  }
}

TEST(Matexp, PathsAgreeOnHermitianInput) {
  testing::reseed(8);
  ComplexMatrix h = random_hermitian(5);
  EXPECT_LE((matexp(h, Complex{0.0, -1.3}, ExpPath::hermitian) - matexp(h, Complex{0.0, -1.3}, ExpPath::general)).norm(),
            1e-11);
}

TEST(Matexp, SemigroupProperty) {
  testing::reseed(9);
  for (int trial = 0; trial < 10; ++trial) {
    ComplexMatrix h = random_hermitian(3), a = random_matrix(3, 3);
    EXPECT_LE((unitary_from_generator(h, 0.4 + 0.9) - unitary_from_generator(h, 0.4) * unitary_from_generator(h, 0.9))
                  .norm(),
              1e-12);
    EXPECT_LE((matexp(a, {1.1, 0}) - matexp(a, {0.5, 0}) * matexp(a, {0.6, 0})).norm(),
              1e-10 * matexp(a, {1.1, 0}).norm());
  }
  EXPECT_EQ(matexp(random_matrix(3, 3), Complex{0.0, 0.0}), identity(3));
}

TEST(Matexp, RejectsNonSquare) { EXPECT_THROW(matexp(ComplexMatrix::Zero(2, 3), {1, 0}), DimensionError); }

TEST(Predicates, HermitianUnitaryIsometry) {
  testing::reseed(10);
  EXPECT_TRUE(is_hermitian(random_hermitian(3)));
  EXPECT_FALSE(is_hermitian(random_matrix(3, 3)));
  ComplexMatrix u = random_unitary(4);
  EXPECT_TRUE(is_unitary(u));
  EXPECT_TRUE(is_isometry(u.leftCols(2)));
  EXPECT_FALSE(is_unitary(2.0 * u));
  EXPECT_TRUE(is_normalized(random_state(5)));
}

TEST(Orthonormalize, DropsDependentVectors) {
  testing::reseed(11);
  ComplexVector a = random_state(4), b = random_state(4);
  std::vector<ComplexVector> vs{a, b, 0.5 * a - Complex{0, 2} * b, ComplexVector::Zero(4)};
  Subspace s = orthonormalize(vs, TensorSpace{2, 2});
  EXPECT_EQ(s.rank(), 2);
  EXPECT_LE((s.basis().adjoint() * s.basis() - identity(2)).norm(), 1e-13);
  EXPECT_LE(s.distance_to(a), 1e-12);
  EXPECT_LE(s.distance_to(b), 1e-12);
  EXPECT_LE((s.projector() * s.projector() - s.projector()).norm(), 1e-12);
}

TEST(Orthonormalize, PhaseConvention) {
  ComplexVector v = ComplexVector::Zero(3);
  v(1) = Complex{0.0, -2.0};
  v(2) = 1.0;
  Subspace s = orthonormalize({v}, TensorSpace{3});
  ASSERT_EQ(s.rank(), 1);
  EXPECT_NEAR(std::abs(s.vector(0)(0)), 0.0, 1e-15);
  EXPECT_GT(s.vector(0)(1).real(), 0.0);
  EXPECT_NEAR(s.vector(0)(1).imag(), 0.0, 1e-15);
}

TEST(Subspace, ComplementAndSum) {
  testing::reseed(12);
  std::vector<ComplexVector> vs{random_state(6), random_state(6)};
  Subspace s = orthonormalize(vs, TensorSpace{2, 3});
  Subspace c = complement(s);
  EXPECT_EQ(c.rank(), 4);
  EXPECT_LE((s.basis().adjoint() * c.basis()).norm(), 1e-12);
  EXPECT_EQ(span_sum(s, c).rank(), 6);
  EXPECT_LE((s.projector() + c.projector() - identity(6)).norm(), 1e-12);
  EXPECT_EQ(complement(full_space(TensorSpace{2, 3})).rank(), 0);
}

TEST(Subspace, RestrictAndRank) {
  testing::reseed(13);
  ComplexMatrix h = random_hermitian(4);
  Subspace s = orthonormalize({ComplexVector(basis_vector(4, 0)), ComplexVector(basis_vector(4, 2))}, TensorSpace{4});
  ComplexMatrix r = restrict(h, s);
  EXPECT_EQ(r.rows(), 2);
  EXPECT_LE(std::abs(r(0, 1) - h(0, 2)), 1e-14);
  ComplexMatrix low = random_matrix(5, 2) * random_matrix(2, 5);
  EXPECT_EQ(numerical_rank(low), 2);
  ComplexMatrix ns = null_space(low);
  EXPECT_EQ(ns.cols(), 3);
  EXPECT_LE((low * ns).norm(), 1e-10);
}

TEST(Commutator, Basics) {
  testing::reseed(14);
  ComplexMatrix a = random_matrix(3, 3);
  EXPECT_LE(commutator(a, a).norm(), 1e-14);
  EXPECT_THROW(commutator(identity(2), identity(3)), DimensionError);
}

TEST(Parallel, OrderedResultsAndErrors) {
  setenv("DILATION_LAB_THREADS", "3", 1);
  EXPECT_EQ(max_threads(), 3u);
  auto squares = parallel_map(50, [](std::size_t i) { return static_cast<int>(i * i); });
  for (std::size_t i = 0; i < squares.size(); ++i) EXPECT_EQ(squares[i], static_cast<int>(i * i));
  EXPECT_THROW(parallel_map(10,
                            [](std::size_t i) {
                              if (i == 7) throw std::runtime_error("boom");
                              return 0;
                            }),
               std::runtime_error);
  unsetenv("DILATION_LAB_THREADS");
}

}  // namespace
}  // namespace dilation_lab
