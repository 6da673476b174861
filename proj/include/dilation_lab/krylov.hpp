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

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dilation_lab/maps.hpp"
#include "dilation_lab/parallel.hpp"
#include "dilation_lab/tensor.hpp"

namespace dilation_lab {

struct SeedDimension {
  std::string label;
  Index dim = 0;
};

struct KrylovResult {
  Subspace subspace;
  std::vector<SeedDimension> seeds;
  std::optional<Index> max_vectors;

  Index rank() const { return subspace.rank(); }
  Subspace perp() const { return complement(subspace); }
};

// Arnoldi chain spanning {v, Av, A^2 v, ...}, stopped at the first dependent
// vector or after max_vectors vectors.
inline KrylovResult krylov_basis(const ComplexMatrix& a, const ComplexVector& v,
                                 std::optional<Index> max_vectors = std::nullopt,
                                 std::optional<TensorSpace> ambient = std::nullopt,
                                 double tol = kRankTolerance) {
  require_square(a, "krylov_basis");
  if (v.size() != a.rows()) throw DimensionError("krylov_basis: seed dim does not match operator");
  TensorSpace space = ambient.value_or(TensorSpace{a.rows()});
  if (space.dim() != a.rows()) throw DimensionError("krylov_basis: ambient dim does not match operator");
  const Index cap = std::min(max_vectors.value_or(a.rows()), a.rows());

  std::vector<ComplexVector> basis;
  if (v.norm() > 0.0 && cap > 0) {
    ComplexVector q = v / v.norm();
    basis.push_back(q);
    while (static_cast<Index>(basis.size()) < cap) {
      ComplexVector w = a * basis.back();
      double ref = std::max(1.0, w.norm());
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& b : basis) w -= b.dot(w) * b;
      if (w.norm() < tol * ref) break;
      basis.push_back(w / w.norm());
    }
  }
  KrylovResult res;
  res.subspace = orthonormalize(basis, space, tol);
  res.seeds.push_back({"seed", res.subspace.rank()});
  res.max_vectors = max_vectors;
  return res;
}

namespace detail {

inline KrylovResult seeded_krylov_sum(const ComplexMatrix& h, const ComplexVector& psi_e, const TensorSpace& space,
                                      std::optional<Index> max_vectors) {
  require_square(h, "k_parallel");
  if (space.size() < 2) throw DimensionError("k_parallel: space needs system and environment factors");
  if (h.rows() != space.dim()) throw DimensionError("k_parallel: generator dim does not match space");
  const Index ds = space.factors[0];
  if (psi_e.size() * ds != space.dim()) throw DimensionError("k_parallel: environment state dim mismatch");
  if (!is_normalized(psi_e)) throw PreconditionError("k_parallel: environment state is not normalized");

  KrylovResult res;
  res.max_vectors = max_vectors;
  std::vector<ComplexVector> all;
  for (Index j = 0; j < ds; ++j) {
    KrylovResult chain = krylov_basis(h, kron(basis_vector(ds, j), psi_e), max_vectors, space);
    res.seeds.push_back({"|" + std::to_string(j) + "_S>|psi_E>", chain.rank()});
    for (Index k = 0; k < chain.rank(); ++k) all.push_back(chain.subspace.vector(k));
  }
  res.subspace = orthonormalize(all, space);
  return res;
}

}  // namespace detail

// Sum of maximal Krylov spaces of h seeded at |j_S> kron psi_E.
inline KrylovResult k_parallel(const ComplexMatrix& h, const ComplexVector& psi_e, const TensorSpace& space) {
  return detail::seeded_krylov_sum(h, psi_e, space, std::nullopt);
}

// Seeds with their first and second powers of h: span{v, hv, h^2 v}.
inline constexpr Index kOrderTwoVectors = 3;

inline KrylovResult k_parallel_order2(const ComplexMatrix& h, const ComplexVector& psi_e, const TensorSpace& space) {
  return detail::seeded_krylov_sum(h, psi_e, space, kOrderTwoVectors);
}

struct SigmaResult {
  Subspace subspace;
  Index rank = 0;
  std::optional<Index> doubled_rank;
  // Unset when the family cannot be evaluated on the doubled grid.
  std::optional<bool> stabilized;
};

namespace detail {

inline Subspace sigma_on_times(const UnitaryFamily& family, const ComplexVector& psi_e, const TensorSpace& space,
                               const std::vector<double>& times) {
  const Index ds = space.factors.at(0);
  if (family.dim() != space.dim() || psi_e.size() * ds != space.dim()) {
    throw DimensionError("sigma_parallel_sampled: dimension mismatch");
  }
  auto per_time = parallel_map(times.size(), [&](std::size_t i) {
    ComplexMatrix u = family.at(times[i]);
    std::vector<ComplexVector> out;
    for (Index j = 0; j < ds; ++j) out.emplace_back(u * kron(basis_vector(ds, j), psi_e));
    return out;
  });
  std::vector<ComplexVector> all;
  for (auto& v : per_time) all.insert(all.end(), v.begin(), v.end());
  return orthonormalize(all, space);
}

}  // namespace detail

// Span of U(t)|j_S>|psi_E> over the sampled times.
inline SigmaResult sigma_parallel_sampled(const UnitaryFamily& family, const ComplexVector& psi_e,
                                          const TensorSpace& space, const std::vector<double>& times) {
  SigmaResult res;
  res.subspace = detail::sigma_on_times(family, psi_e, space, times);
  res.rank = res.subspace.rank();
  return res;
}

// As above with a rank-stabilization check on the doubled grid.
inline SigmaResult sigma_parallel_sampled(const UnitaryFamily& family, const ComplexVector& psi_e,
                                          const TensorSpace& space, const TimeGrid& grid) {
  SigmaResult res = sigma_parallel_sampled(family, psi_e, space, grid.times());
  auto fine = grid.doubled().times();
  bool evaluable = std::all_of(fine.begin(), fine.end(), [&](double t) { return family.evaluable_at(t); });
  if (evaluable) {
    res.doubled_rank = detail::sigma_on_times(family, psi_e, space, fine).rank();
    res.stabilized = *res.doubled_rank == res.rank;
  }
  return res;
}

}  // namespace dilation_lab
