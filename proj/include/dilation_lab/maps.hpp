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

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dilation_lab/tensor.hpp"

namespace dilation_lab {

// Linear map on column-stacked density matrices: vec(X)[i + j*d] = X(i, j).
struct Superoperator {
  Index dim_s = 0;
  ComplexMatrix matrix;

  Superoperator() = default;
  Superoperator(Index d, ComplexMatrix m) : dim_s(d), matrix(std::move(m)) {
    if (matrix.rows() != d * d || matrix.cols() != d * d) {
      throw DimensionError("Superoperator: matrix must be d^2 x d^2");
    }
  }

  ComplexMatrix apply(const ComplexMatrix& rho) const;
};

inline ComplexVector vectorize(const ComplexMatrix& x) {
  ComplexVector v(x.size());
  for (Index j = 0; j < x.cols(); ++j)
    for (Index i = 0; i < x.rows(); ++i) v(i + j * x.rows()) = x(i, j);
  return v;
}

inline ComplexMatrix unvectorize(const ComplexVector& v, Index d) {
  if (v.size() != d * d) throw DimensionError("unvectorize: length is not d^2");
  ComplexMatrix x(d, d);
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < d; ++i) x(i, j) = v(i + j * d);
  return x;
}

inline ComplexMatrix Superoperator::apply(const ComplexMatrix& rho) const {
  if (rho.rows() != dim_s || rho.cols() != dim_s) {
    throw DimensionError("Superoperator::apply: operand dim does not match");
  }
  return unvectorize(matrix * vectorize(rho), dim_s);
}

inline Superoperator identity_superoperator(Index d) { return {d, identity(d * d)}; }

// vec(A X B) = (B^T kron A) vec(X)
inline Superoperator conjugation_superoperator(const ComplexMatrix& u) {
  require_square(u, "conjugation_superoperator");
  return {u.rows(), kron(ComplexMatrix(u.conjugate()), u)};
}

inline Superoperator compose(const Superoperator& outer, const Superoperator& inner) {
  if (outer.dim_s != inner.dim_s) throw DimensionError("compose: dimension mismatch");
  return {outer.dim_s, outer.matrix * inner.matrix};
}

inline double superoperator_distance(const Superoperator& a, const Superoperator& b) {
  if (a.dim_s != b.dim_s) throw DimensionError("superoperator_distance: dimension mismatch");
  return (a.matrix - b.matrix).norm();
}

// Sum_ij E_ij kron phi(E_ij).
inline ComplexMatrix choi(const Superoperator& s) {
  const Index d = s.dim_s;
  ComplexMatrix c = ComplexMatrix::Zero(d * d, d * d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) c += kron(matrix_unit(d, i, j), s.apply(matrix_unit(d, i, j)));
  return c;
}

inline double min_choi_eigenvalue(const Superoperator& s) {
  ComplexMatrix c = choi(s);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (c + c.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

// Heisenberg-picture map: Tr[A phi(rho)] = Tr[dual(A) rho].
inline ComplexMatrix dual_apply(const Superoperator& s, const ComplexMatrix& a) {
  if (a.rows() != s.dim_s || a.cols() != s.dim_s) throw DimensionError("dual_apply: dim mismatch");
  ComplexVector v = s.matrix.transpose() * vectorize(a.transpose());
  return unvectorize(v, s.dim_s).transpose();
}

enum class DilationKind { time_independent_hamiltonian, time_dependent_hamiltonian, explicit_unitary_family, fixed_unitary };

inline const char* to_string(DilationKind k) {
  switch (k) {
    case DilationKind::time_independent_hamiltonian: return "time_independent_hamiltonian";
    case DilationKind::time_dependent_hamiltonian: return "time_dependent_hamiltonian";
    case DilationKind::explicit_unitary_family: return "explicit_unitary_family";
    case DilationKind::fixed_unitary: return "fixed_unitary";
  }
  return "unknown";
}

struct GeneratorFamily {
  ComplexMatrix h;
};

// Time-ordered product of midpoint exponentials.
struct TimeDependentFamily {
  Index dim = 0;
  std::function<ComplexMatrix(double)> h;
  int steps_per_unit_time = 400;
};

struct Segment {
  double duration = 0.0;
  ComplexMatrix h;
};

// Piecewise-constant generator; the last segment extends past the listed durations.
struct PiecewiseFamily {
  std::vector<Segment> segments;
};

struct ExplicitFamily {
  Index dim = 0;
  std::function<ComplexMatrix(double)> u;
};

struct TableSample {
  double t = 0.0;
  ComplexMatrix u;
};

struct TableFamily {
  std::vector<TableSample> samples;
};

struct ConstantFamily {
  ComplexMatrix u;
};

class UnitaryFamily {
 public:
  using Storage = std::variant<GeneratorFamily, TimeDependentFamily, PiecewiseFamily, ExplicitFamily,
                               TableFamily, ConstantFamily>;

  UnitaryFamily() : storage_(ConstantFamily{identity(1)}) {}
  template <class F>
    requires std::is_constructible_v<Storage, F>
  UnitaryFamily(F f) : storage_(std::move(f)) {}  // NOLINT(google-explicit-constructor)

  static UnitaryFamily generator(ComplexMatrix h) { return {GeneratorFamily{std::move(h)}}; }
  static UnitaryFamily constant(ComplexMatrix u) { return {ConstantFamily{std::move(u)}}; }
  static UnitaryFamily explicit_fn(Index dim, std::function<ComplexMatrix(double)> u) {
    return {ExplicitFamily{dim, std::move(u)}};
  }
  static UnitaryFamily table(std::vector<TableSample> samples) { return {TableFamily{std::move(samples)}}; }

  const Storage& storage() const { return storage_; }

  DilationKind kind() const {
    return std::visit(
        [](const auto& f) {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, GeneratorFamily>) return DilationKind::time_independent_hamiltonian;
          if constexpr (std::is_same_v<F, TimeDependentFamily> || std::is_same_v<F, PiecewiseFamily>)
            return DilationKind::time_dependent_hamiltonian;
          if constexpr (std::is_same_v<F, ExplicitFamily> || std::is_same_v<F, TableFamily>)
            return DilationKind::explicit_unitary_family;
          if constexpr (std::is_same_v<F, ConstantFamily>) return DilationKind::fixed_unitary;
        },
        storage_);
  }

  const ComplexMatrix* hamiltonian() const {
    if (auto* g = std::get_if<GeneratorFamily>(&storage_)) return &g->h;
    return nullptr;
  }

  Index dim() const {
    return std::visit(
        [](const auto& f) -> Index {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, GeneratorFamily>) return f.h.rows();
          if constexpr (std::is_same_v<F, TimeDependentFamily> || std::is_same_v<F, ExplicitFamily>) return f.dim;
          if constexpr (std::is_same_v<F, PiecewiseFamily>) return f.segments.empty() ? 0 : f.segments.front().h.rows();
          if constexpr (std::is_same_v<F, TableFamily>) return f.samples.empty() ? 0 : f.samples.front().u.rows();
          if constexpr (std::is_same_v<F, ConstantFamily>) return f.u.rows();
        },
        storage_);
  }

  bool evaluable_at(double t) const {
    if (auto* tab = std::get_if<TableFamily>(&storage_)) return find_sample(*tab, t) != nullptr;
    return true;
  }

  ComplexMatrix at(double t) const {
    return std::visit(
        [t](const auto& f) -> ComplexMatrix {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, GeneratorFamily>) {
            return unitary_from_generator(f.h, t);
          } else if constexpr (std::is_same_v<F, TimeDependentFamily>) {
            int steps = std::max(1, static_cast<int>(std::ceil(std::abs(t) * f.steps_per_unit_time)));
            double dt = t / steps;
            ComplexMatrix u = identity(f.dim);
            for (int k = 0; k < steps; ++k) u = unitary_from_generator(f.h((k + 0.5) * dt), dt) * u;
            return u;
          } else if constexpr (std::is_same_v<F, PiecewiseFamily>) {
            if (t < 0) throw PreconditionError("piecewise family: negative time");
            ComplexMatrix u = identity(f.segments.front().h.rows());
            double remaining = t;
            for (std::size_t k = 0; k < f.segments.size() && remaining > 0; ++k) {
              bool last = k + 1 == f.segments.size();
              double step = last ? remaining : std::min(remaining, f.segments[k].duration);
              u = unitary_from_generator(f.segments[k].h, step) * u;
              remaining -= step;
            }
            return u;
          } else if constexpr (std::is_same_v<F, ExplicitFamily>) {
            return f.u(t);
          } else if constexpr (std::is_same_v<F, TableFamily>) {
            const TableSample* s = find_sample(f, t);
            if (!s) throw PreconditionError("table family: time " + std::to_string(t) + " is not a sample");
            return s->u;
          } else {
            return f.u;
          }
        },
        storage_);
  }

  // Same family acting as U(t) kron I_r.
  UnitaryFamily with_identity(Index r) const {
    const ComplexMatrix id = identity(r);
    return std::visit(
        [&](const auto& f) -> UnitaryFamily {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, GeneratorFamily>) {
            return GeneratorFamily{kron(f.h, id)};
          } else if constexpr (std::is_same_v<F, TimeDependentFamily>) {
            auto h = f.h;
            return TimeDependentFamily{f.dim * r, [h, id](double t) { return kron(h(t), id); }, f.steps_per_unit_time};
          } else if constexpr (std::is_same_v<F, PiecewiseFamily>) {
            PiecewiseFamily out;
            for (const auto& s : f.segments) out.segments.push_back({s.duration, kron(s.h, id)});
            return out;
          } else if constexpr (std::is_same_v<F, ExplicitFamily>) {
            auto u = f.u;
            return ExplicitFamily{f.dim * r, [u, id](double t) { return kron(u(t), id); }};
          } else if constexpr (std::is_same_v<F, TableFamily>) {
            TableFamily out;
            for (const auto& s : f.samples) out.samples.push_back({s.t, kron(s.u, id)});
            return out;
          } else {
            return ConstantFamily{kron(f.u, id)};
          }
        },
        storage_);
  }

 private:
  static const TableSample* find_sample(const TableFamily& f, double t) {
    for (const auto& s : f.samples) {
      if (std::abs(s.t - t) <= 1e-12 * std::max(1.0, std::abs(t))) return &s;
    }
    return nullptr;
  }

  Storage storage_;
};

// Environment state: pure vector or density matrix.
class EnvState {
 public:
  EnvState() = default;
  EnvState(ComplexVector psi) : state_(std::move(psi)) {}    // NOLINT(google-explicit-constructor)
  EnvState(ComplexMatrix rho) : state_(std::move(rho)) {}    // NOLINT(google-explicit-constructor)

  bool is_pure() const { return std::holds_alternative<ComplexVector>(state_); }
  Index dim() const {
    return is_pure() ? std::get<ComplexVector>(state_).size() : std::get<ComplexMatrix>(state_).rows();
  }
  const ComplexVector& vector() const {
    if (!is_pure()) throw PreconditionError("environment state is mixed; purify first");
    return std::get<ComplexVector>(state_);
  }
  const ComplexMatrix& matrix() const { return std::get<ComplexMatrix>(state_); }
  ComplexMatrix density() const {
    if (is_pure()) {
      const auto& v = std::get<ComplexVector>(state_);
      return v * v.adjoint();
    }
    return std::get<ComplexMatrix>(state_);
  }

 private:
  std::variant<ComplexVector, ComplexMatrix> state_ = ComplexVector(ComplexVector::Ones(1));
};

struct Dilation {
  Index dim_s = 1;
  std::vector<Index> env_factors{1};
  EnvState env_state;
  UnitaryFamily evolution;

  Index dim_e() const { return TensorSpace(env_factors).dim(); }
  TensorSpace space() const {
    std::vector<Index> f{dim_s};
    f.insert(f.end(), env_factors.begin(), env_factors.end());
    return TensorSpace(f);
  }
  // System factor first, environment flattened into one factor.
  TensorSpace split_space() const { return TensorSpace{dim_s, dim_e()}; }
  TensorSpace env_space() const { return TensorSpace(env_factors); }
  DilationKind kind() const { return evolution.kind(); }

  void validate() const {
    if (dim_s < 1) throw DimensionError("Dilation: system dimension must be positive");
    TensorSpace(env_factors).validate();
    if (env_state.dim() != dim_e()) throw DimensionError("Dilation: environment state dimension mismatch");
    if (env_state.is_pure()) {
      if (!is_normalized(env_state.vector())) throw PreconditionError("Dilation: environment state is not normalized");
    } else {
      const auto& rho = env_state.matrix();
      if (!is_hermitian(rho)) throw PreconditionError("Dilation: environment density is not Hermitian");
      if (std::abs(rho.trace() - Complex{1.0, 0.0}) > kNormTolerance) {
        throw PreconditionError("Dilation: environment density does not have unit trace");
      }
    }
    if (evolution.dim() != dim_s * dim_e()) throw DimensionError("Dilation: evolution dimension mismatch");
    if (auto* h = evolution.hamiltonian()) {
      if (!is_hermitian(*h)) throw PreconditionError("Dilation: generator is not Hermitian");
    }
    if (auto* c = std::get_if<ConstantFamily>(&evolution.storage())) {
      if (!is_unitary(c->u)) throw PreconditionError("Dilation: fixed evolution is not unitary");
    }
    if (auto* tab = std::get_if<TableFamily>(&evolution.storage())) {
      for (const auto& s : tab->samples)
        if (!is_unitary(s.u)) throw PreconditionError("Dilation: table sample is not unitary");
    }
  }
};

// phi_t[rho] = Tr_E[U (rho kron rho_E) U^dagger], built on matrix units.
inline Superoperator map_from_dilation(const Dilation& d, double t) {
  if (!d.evolution.evaluable_at(t)) {
    throw PreconditionError("map_from_dilation: time " + std::to_string(t) + " not evaluable");
  }
  const ComplexMatrix u = d.evolution.at(t);
  const ComplexMatrix rho_e = d.env_state.density();
  const Index ds = d.dim_s;
  const TensorSpace split = d.split_space();
  ComplexMatrix m(ds * ds, ds * ds);
  for (Index j = 0; j < ds; ++j) {
    for (Index i = 0; i < ds; ++i) {
      ComplexMatrix x = u * kron(matrix_unit(ds, i, j), rho_e) * u.adjoint();
      m.col(i + j * ds) = vectorize(partial_trace(x, split, {0}));
    }
  }
  return {ds, m};
}

struct StinespringIsometry {
  ComplexMatrix v;
  Index dim_s = 0;
  Index dim_e = 0;

  ComplexVector image(Index j) const { return v.col(j); }
};

// V = U(t) (I_S kron |psi_E>).
inline StinespringIsometry isometry_from_dilation(const Dilation& d, double t) {
  const ComplexVector& psi = d.env_state.vector();
  if (!d.evolution.evaluable_at(t)) {
    throw PreconditionError("isometry_from_dilation: time " + std::to_string(t) + " not evaluable");
  }
  ComplexMatrix embed = kron(identity(d.dim_s), ComplexMatrix(psi));
  return {d.evolution.at(t) * embed, d.dim_s, d.dim_e()};
}

// Environment vectors r_s with V|j> = sum_s |s> kron r_s, over all j.
inline std::vector<ComplexVector> environment_components(const StinespringIsometry& iso) {
  std::vector<ComplexVector> out;
  for (Index j = 0; j < iso.dim_s; ++j) {
    for (Index s = 0; s < iso.dim_s; ++s) out.emplace_back(iso.v.col(j).segment(s * iso.dim_e, iso.dim_e));
  }
  return out;
}

inline Subspace environment_support(const StinespringIsometry& iso, const TensorSpace& env) {
  return orthonormalize(environment_components(iso), env);
}

struct MinimalityReport {
  bool minimal = false;
  Subspace support;
  std::vector<double> times;
  std::vector<Index> support_dims;
};

// Minimal iff some sampled t != 0 has full environment support; the reported
// support is the union over all samples.
inline MinimalityReport is_minimal(const Dilation& d, const std::vector<double>& times) {
  if (times.empty()) throw PreconditionError("is_minimal: empty time list");
  const TensorSpace env = d.env_space();
  MinimalityReport rep;
  rep.times = times;
  std::vector<ComplexVector> all;
  for (double t : times) {
    auto comps = environment_components(isometry_from_dilation(d, t));
    Index dim = orthonormalize(comps, env).rank();
    rep.support_dims.push_back(dim);
    bool nonzero_time = t != 0.0 || d.kind() == DilationKind::fixed_unitary;
    if (dim == d.dim_e() && nonzero_time) rep.minimal = true;
    all.insert(all.end(), comps.begin(), comps.end());
  }
  rep.support = orthonormalize(all, env);
  return rep;
}

// Unitary on [d_s, k] with U(|s> kron psi) = V|s>, completed deterministically.
inline ComplexMatrix complete_to_unitary(const ComplexMatrix& v, Index ds, const ComplexVector& psi) {
  const Index k = psi.size();
  const Index dim = ds * k;
  if (v.rows() != dim || v.cols() != ds) throw DimensionError("complete_to_unitary: isometry shape mismatch");
  auto complete = [&](const ComplexMatrix& head) {
    ComplexMatrix out(dim, dim);
    out.leftCols(head.cols()) = head;
    Index n = head.cols();
    std::vector<ComplexVector> basis;
    for (Index c = 0; c < head.cols(); ++c) basis.emplace_back(head.col(c));
    for (Index c = 0; c < dim && n < dim; ++c) {
      ComplexVector w = basis_vector(dim, c);
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& q : basis) w -= q.dot(w) * q;
      if (w.norm() < 1e-8) continue;
      w.normalize();
      fix_phase(w);
      basis.push_back(w);
      out.col(n++) = w;
    }
    return out;
  };
  ComplexMatrix in_head = kron(identity(ds), ComplexMatrix(psi));
  ComplexMatrix in = complete(in_head);
  ComplexMatrix out = complete(v);
  return out * in.adjoint();
}

struct MinimalizationResult {
  Dilation dilation;
  Subspace support;
  bool changed = false;
  bool env_state_in_support = true;
};

// Restricts the environment to the sampled support. Generator families are
// compressed; other families become tables (or constants) of completed unitaries.
inline MinimalizationResult minimalize(const Dilation& d, const std::vector<double>& times) {
  MinimalityReport rep = is_minimal(d, times);
  MinimalizationResult res;
  res.support = rep.support;
  if (rep.support.rank() == d.dim_e()) {
    res.dilation = d;
    return res;
  }
  res.changed = true;
  const ComplexMatrix& b = rep.support.basis();
  const Index k = b.cols();
  const ComplexVector& psi = d.env_state.vector();
  ComplexVector projected = b.adjoint() * psi;
  res.env_state_in_support = std::abs(projected.norm() - 1.0) <= 1e-10;

  Dilation out;
  out.dim_s = d.dim_s;
  out.env_factors = {k};
  ComplexMatrix embed = kron(identity(d.dim_s), b);

  if (res.env_state_in_support && d.evolution.hamiltonian()) {
    out.env_state = ComplexVector(projected / projected.norm());
    out.evolution = UnitaryFamily::generator(embed.adjoint() * *d.evolution.hamiltonian() * embed);
    res.dilation = out;
    return res;
  }

  ComplexVector psi_min = res.env_state_in_support ? ComplexVector(projected / projected.norm())
                                                   : basis_vector(k, 0);
  out.env_state = psi_min;
  auto reduced = [&](double t) {
    ComplexMatrix v = embed.adjoint() * isometry_from_dilation(d, t).v;
    return complete_to_unitary(v, d.dim_s, psi_min);
  };
  if (d.kind() == DilationKind::fixed_unitary) {
    out.evolution = UnitaryFamily::constant(reduced(times.front()));
  } else {
    std::vector<TableSample> samples;
    for (double t : times) samples.push_back({t, reduced(t)});
    out.evolution = UnitaryFamily::table(std::move(samples));
  }
  res.dilation = out;
  return res;
}

inline constexpr double kPurifyCutoff = 1e-12;

// Adds an ancilla factor C with |Psi_EC> = sum_i sqrt(p_i) |e_i>|i>. Ancilla
// label i follows the dominant computational index of e_i.
inline Dilation purify(const Dilation& d) {
  if (d.env_state.is_pure()) return d;
  const ComplexMatrix& rho = d.env_state.matrix();
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (rho + rho.adjoint()));
  const RealVector& p = es.eigenvalues();
  const Index de = rho.rows();
  if (p(0) < -1e-10) throw PreconditionError("purify: environment density has a negative eigenvalue");
  const double pmax = p(de - 1);

  struct Kept {
    double p;
    ComplexVector v;
  };
  std::vector<Kept> kept;
  // Degenerate clusters are re-based onto projected computational vectors.
  Index k = 0;
  while (k < de) {
    Index end = k + 1;
    while (end < de && std::abs(p(end) - p(k)) <= 1e-10 * std::max(1.0, pmax)) ++end;
    if (p(k) > kPurifyCutoff * pmax) {
      ComplexMatrix block = es.eigenvectors().middleCols(k, end - k);
      ComplexMatrix proj = block * block.adjoint();
      std::vector<ComplexVector> cols;
      for (Index c = 0; c < de; ++c) cols.emplace_back(proj.col(c));
      Subspace sub = orthonormalize(cols, TensorSpace{de}, 1e-8);
      double mean = p.segment(k, end - k).mean();
      for (Index c = 0; c < sub.rank(); ++c) kept.push_back({mean, sub.vector(c)});
    }
    k = end;
  }
  auto dominant = [](const ComplexVector& v) {
    Index arg = 0;
    double best = -1.0;
    for (Index i = 0; i < v.size(); ++i) {
      if (std::abs(v(i)) > best + 1e-12) {
        best = std::abs(v(i));
        arg = i;
      }
    }
    return arg;
  };
  std::stable_sort(kept.begin(), kept.end(),
                   [&](const Kept& a, const Kept& b) { return dominant(a.v) < dominant(b.v); });
  const Index r = static_cast<Index>(kept.size());
  ComplexVector psi = ComplexVector::Zero(de * r);
  for (Index i = 0; i < r; ++i) psi += std::sqrt(kept[i].p) * kron(kept[i].v, basis_vector(r, i));
  psi.normalize();

  Dilation out;
  out.dim_s = d.dim_s;
  out.env_factors = d.env_factors;
  out.env_factors.push_back(r);
  out.env_state = psi;
  out.evolution = d.evolution.with_identity(r);
  return out;
}

struct TimeGrid {
  double start = 0.0;
  double stop = 2.0 * kPi;
  int count = 32;

  std::vector<double> times() const {
    std::vector<double> t(count);
    if (count == 1) {
      t[0] = start;
      return t;
    }
    for (int k = 0; k < count; ++k) t[k] = start + (stop - start) * k / (count - 1);
    return t;
  }
  TimeGrid doubled() const { return {start, stop, 2 * count}; }
};

}  // namespace dilation_lab
