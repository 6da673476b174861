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

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

namespace dilation_lab {

using Complex = std::complex<double>;
using Index = Eigen::Index;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double kHermitianTolerance = 1e-12;
inline constexpr double kUnitaryTolerance = 1e-10;
inline constexpr double kRankTolerance = 1e-10;
inline constexpr double kNormTolerance = 1e-10;

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

inline double max_abs(const ComplexMatrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

inline bool is_square(const ComplexMatrix& a) { return a.rows() == a.cols(); }

inline void require_square(const ComplexMatrix& a, const char* what) {
  if (!is_square(a)) {
    throw DimensionError(std::string(what) + ": matrix is " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + ", expected square");
  }
}

inline bool is_hermitian(const ComplexMatrix& a, double tol = kHermitianTolerance) {
  if (!is_square(a)) return false;
  return max_abs(a - a.adjoint()) <= tol * std::max(1.0, max_abs(a));
}

inline bool is_unitary(const ComplexMatrix& a, double tol = kUnitaryTolerance) {
  if (!is_square(a)) return false;
  return max_abs(a.adjoint() * a - ComplexMatrix::Identity(a.rows(), a.cols())) <= tol;
}

inline bool is_isometry(const ComplexMatrix& v, double tol = kUnitaryTolerance) {
  return max_abs(v.adjoint() * v - ComplexMatrix::Identity(v.cols(), v.cols())) <= tol;
}

inline bool is_normalized(const ComplexVector& v, double tol = kNormTolerance) {
  return std::abs(v.norm() - 1.0) <= tol;
}

inline ComplexVector basis_vector(Index dim, Index k) {
  ComplexVector e = ComplexVector::Zero(dim);
  e(k) = 1.0;
  return e;
}

inline ComplexMatrix matrix_unit(Index dim, Index i, Index j) {
  ComplexMatrix e = ComplexMatrix::Zero(dim, dim);
  e(i, j) = 1.0;
  return e;
}

inline ComplexMatrix identity(Index dim) { return ComplexMatrix::Identity(dim, dim); }

inline ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_square(a, "commutator");
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("commutator: operand dims differ");
  return a * b - b * a;
}

// Ordered tensor factors; index of factor k runs fastest for the last factor.
struct TensorSpace {
  std::vector<Index> factors;

  TensorSpace() = default;
  TensorSpace(std::initializer_list<Index> dims) : factors(dims) { validate(); }
  explicit TensorSpace(std::vector<Index> dims) : factors(std::move(dims)) { validate(); }

  Index dim() const {
    return std::accumulate(factors.begin(), factors.end(), Index{1}, std::multiplies<>());
  }
  std::size_t size() const { return factors.size(); }

  void validate() const {
    for (Index d : factors) {
      if (d < 1) throw DimensionError("TensorSpace: factor dimension must be positive");
    }
  }

  bool operator==(const TensorSpace&) const = default;
};

// a's indices outermost.
inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

inline ComplexVector kron(const ComplexVector& a, const ComplexVector& b) {
  ComplexVector out(a.size() * b.size());
  for (Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

inline ComplexMatrix kron(std::initializer_list<ComplexMatrix> factors) {
  ComplexMatrix out = ComplexMatrix::Identity(1, 1);
  for (const auto& f : factors) out = kron(out, f);
  return out;
}

namespace detail {

inline std::vector<Index> digits(Index flat, const std::vector<Index>& dims) {
  std::vector<Index> out(dims.size());
  for (std::size_t k = dims.size(); k-- > 0;) {
    out[k] = flat % dims[k];
    flat /= dims[k];
  }
  return out;
}

}  // namespace detail

// Traces out every factor not listed in keep. Kept factors stay in ambient order.
inline ComplexMatrix partial_trace(const ComplexMatrix& m, const TensorSpace& space,
                                   std::vector<std::size_t> keep) {
  const Index dim = space.dim();
  if (m.rows() != dim || m.cols() != dim) {
    throw DimensionError("partial_trace: matrix dim " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + " does not match space dim " +
                         std::to_string(dim));
  }
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  for (std::size_t k : keep) {
    if (k >= space.size()) throw DimensionError("partial_trace: keep index out of range");
  }
  std::vector<bool> kept(space.size(), false);
  for (std::size_t k : keep) kept[k] = true;

  Index out_dim = 1;
  for (std::size_t k : keep) out_dim *= space.factors[k];

  std::vector<Index> kept_index(dim), traced_index(dim);
  for (Index flat = 0; flat < dim; ++flat) {
    auto d = detail::digits(flat, space.factors);
    Index ki = 0, ti = 0;
    for (std::size_t k = 0; k < space.size(); ++k) {
      if (kept[k]) {
        ki = ki * space.factors[k] + d[k];
      } else {
        ti = ti * space.factors[k] + d[k];
      }
    }
    kept_index[flat] = ki;
    traced_index[flat] = ti;
  }

  ComplexMatrix out = ComplexMatrix::Zero(out_dim, out_dim);
  for (Index i = 0; i < dim; ++i) {
    for (Index j = 0; j < dim; ++j) {
      if (traced_index[i] == traced_index[j]) out(kept_index[i], kept_index[j]) += m(i, j);
    }
  }
  return out;
}

enum class ExpPath { automatic, hermitian, general };

// exp(scale * a). Hermitian input goes through the eigendecomposition.
inline ComplexMatrix matexp(const ComplexMatrix& a, Complex scale, ExpPath path = ExpPath::automatic) {
  require_square(a, "matexp");
  if (scale == Complex{0.0, 0.0}) return identity(a.rows());
  const bool herm = path == ExpPath::hermitian || (path == ExpPath::automatic && is_hermitian(a));
  if (herm) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (a + a.adjoint()));
    ComplexVector phases(a.rows());
    for (Index k = 0; k < a.rows(); ++k) phases(k) = std::exp(scale * es.eigenvalues()(k));
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
  }
  ComplexMatrix scaled = scale * a;
  return scaled.exp();
}

inline ComplexMatrix unitary_from_generator(const ComplexMatrix& h, double t) {
  return matexp(h, Complex{0.0, -t});
}

// First component with magnitude above this threshold fixes the phase.
inline constexpr double kPhaseThreshold = 1e-10;

inline void fix_phase(ComplexVector& v) {
  for (Index k = 0; k < v.size(); ++k) {
    double a = std::abs(v(k));
    if (a > kPhaseThreshold) {
      v *= std::conj(v(k)) / a;
      v(k) = Complex{std::abs(v(k)), 0.0};
      return;
    }
  }
}

// Orthonormal basis (columns) of a subspace of a tensor-product space.
class Subspace {
 public:
  Subspace() = default;

  Subspace(TensorSpace ambient, ComplexMatrix basis)
      : ambient_(std::move(ambient)), basis_(std::move(basis)) {
    if (basis_.rows() != ambient_.dim()) {
      if (basis_.cols() == 0) {
        basis_.resize(ambient_.dim(), 0);
      } else {
        throw DimensionError("Subspace: basis rows do not match ambient dimension");
      }
    }
    projector_ = basis_ * basis_.adjoint();
  }

  const TensorSpace& ambient() const { return ambient_; }
  Index ambient_dim() const { return ambient_.dim(); }
  const ComplexMatrix& basis() const { return basis_; }
  ComplexVector vector(Index k) const { return basis_.col(k); }
  const ComplexMatrix& projector() const { return projector_; }
  ComplexMatrix complement_projector() const { return identity(ambient_dim()) - projector_; }
  Index rank() const { return basis_.cols(); }
  bool empty() const { return basis_.cols() == 0; }

  double distance_to(const ComplexVector& v) const { return (v - projector_ * v).norm(); }

 private:
  TensorSpace ambient_;
  ComplexMatrix basis_;
  ComplexMatrix projector_;
};

// Modified Gram-Schmidt with one re-orthogonalization pass. Inputs whose
// residual falls below tol times the largest input norm are dropped.
inline Subspace orthonormalize(const std::vector<ComplexVector>& vectors, const TensorSpace& ambient,
                               double tol = kRankTolerance) {
  const Index dim = ambient.dim();
  double ref = 0.0;
  for (const auto& v : vectors) {
    if (v.size() != dim) throw DimensionError("orthonormalize: vector dim does not match ambient");
    ref = std::max(ref, v.norm());
  }
  std::vector<ComplexVector> out;
  if (ref == 0.0) return Subspace(ambient, ComplexMatrix(dim, 0));
  for (const auto& v : vectors) {
    ComplexVector w = v;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : out) w -= q.dot(w) * q;
    }
    double n = w.norm();
    if (n < tol * ref) continue;
    w /= n;
    fix_phase(w);
    out.push_back(std::move(w));
  }
  ComplexMatrix basis(dim, static_cast<Index>(out.size()));
  for (std::size_t k = 0; k < out.size(); ++k) basis.col(static_cast<Index>(k)) = out[k];
  return Subspace(ambient, std::move(basis));
}

inline Subspace orthonormalize(const std::vector<ComplexVector>& vectors, double tol = kRankTolerance) {
  if (vectors.empty()) return Subspace(TensorSpace{1}, ComplexMatrix(1, 0));
  return orthonormalize(vectors, TensorSpace{vectors.front().size()}, tol);
}

inline Subspace orthonormalize_columns(const ComplexMatrix& columns, const TensorSpace& ambient,
                                       double tol = kRankTolerance) {
  std::vector<ComplexVector> v;
  v.reserve(columns.cols());
  for (Index k = 0; k < columns.cols(); ++k) v.emplace_back(columns.col(k));
  return orthonormalize(v, ambient, tol);
}

inline Subspace full_space(const TensorSpace& ambient) {
  return Subspace(ambient, identity(ambient.dim()));
}

// Orthogonal complement, spanned by projected computational basis vectors in order.
inline Subspace complement(const Subspace& sub) {
  const Index dim = sub.ambient_dim();
  ComplexMatrix q = sub.complement_projector();
  if (q.norm() < 1e-8) return Subspace(sub.ambient(), ComplexMatrix(dim, 0));
  std::vector<ComplexVector> cols;
  for (Index k = 0; k < dim; ++k) cols.emplace_back(q.col(k));
  auto c = orthonormalize(cols, sub.ambient(), 1e-8);
  if (c.rank() + sub.rank() != dim) {
    throw PreconditionError("complement: rank mismatch while completing basis");
  }
  return c;
}

inline Subspace span_sum(const Subspace& a, const Subspace& b) {
  if (!(a.ambient() == b.ambient())) throw DimensionError("span_sum: ambient spaces differ");
  std::vector<ComplexVector> cols;
  for (Index k = 0; k < a.rank(); ++k) cols.push_back(a.vector(k));
  for (Index k = 0; k < b.rank(); ++k) cols.push_back(b.vector(k));
  return orthonormalize(cols, a.ambient());
}

// B^dagger m B for the subspace basis B.
inline ComplexMatrix restrict(const ComplexMatrix& m, const Subspace& sub) {
  if (m.rows() != sub.ambient_dim() || m.cols() != sub.ambient_dim()) {
    throw DimensionError("restrict: operator dim does not match subspace ambient dim");
  }
  return sub.basis().adjoint() * m * sub.basis();
}

// Numerical rank with singular values below tol * max(1, s_max) treated as zero.
inline Index numerical_rank(const ComplexMatrix& a, double tol = kRankTolerance) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<ComplexMatrix> svd(a);
  const auto& s = svd.singularValues();
  double cut = tol * std::max(1.0, s.size() ? s(0) : 0.0);
  Index r = 0;
  for (Index k = 0; k < s.size(); ++k) r += s(k) > cut ? 1 : 0;
  return r;
}

// Columns spanning the right null space of a.
inline ComplexMatrix null_space(const ComplexMatrix& a, double tol = kRankTolerance) {
  Eigen::JacobiSVD<ComplexMatrix> svd(a, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  double cut = tol * std::max(1.0, s.size() ? s(0) : 0.0);
  Index r = 0;
  for (Index k = 0; k < s.size(); ++k) r += s(k) > cut ? 1 : 0;
  return svd.matrixV().rightCols(a.cols() - r);
}

}  // namespace dilation_lab
