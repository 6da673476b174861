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

#include <array>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "dilation_lab/krylov.hpp"
#include "dilation_lab/maps.hpp"
#include "dilation_lab/tensor.hpp"

namespace dilation_lab {

inline constexpr double kCertificateTolerance = 1e-9;

inline std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

// params: {g} for one-parameter samples, {theta, n1, n2, n3} for axis-angle samples.
struct GroupElement {
  std::string label;
  ComplexMatrix unitary;
  std::vector<double> params;
};

struct AxisAngle {
  double theta = 0.0;
  std::array<double, 3> axis{0.0, 0.0, 1.0};
};

// g_k = 2 pi k / count, k = 0..count-1.
inline std::vector<double> uniform_g_samples(int count = 16) {
  std::vector<double> g(count);
  for (int k = 0; k < count; ++k) g[k] = 2.0 * kPi * k / count;
  return g;
}

// Twelve rotations, including angle pi about each coordinate axis.
inline std::vector<AxisAngle> su2_default_samples() {
  const double r2 = 1.0 / std::sqrt(2.0), r3 = 1.0 / std::sqrt(3.0);
  return {{kPi, {1, 0, 0}},           {kPi, {0, 1, 0}},          {kPi, {0, 0, 1}},
          {kPi / 2, {1, 0, 0}},       {kPi / 2, {0, 1, 0}},      {kPi / 2, {0, 0, 1}},
          {2 * kPi / 3, {r3, r3, r3}}, {kPi / 3, {r2, -r2, 0}},   {3 * kPi / 4, {0, r2, r2}},
          {1.1, {r2, 0, r2}},         {4 * kPi / 3, {-r3, r3, r3}}, {5.0, {0.6, 0.0, 0.8}}};
}

inline std::string axis_angle_label(const AxisAngle& a) {
  return "theta=" + format_number(a.theta) + ",n=(" + format_number(a.axis[0]) + "," + format_number(a.axis[1]) +
         "," + format_number(a.axis[2]) + ")";
}

// Unitary representation in Lie-algebra form (Hermitian generators), sampled
// form (labelled elements), or both. Sampled form always contains "e".
class SymmetryRep {
 public:
  SymmetryRep() = default;

  // pi(g) = exp(-i g J) sampled at the given g values.
  static SymmetryRep one_parameter(const ComplexMatrix& j, const std::vector<double>& gs = uniform_g_samples()) {
    if (!is_hermitian(j)) throw PreconditionError("SymmetryRep: generator is not Hermitian");
    SymmetryRep rep;
    rep.dim_ = j.rows();
    rep.generators_ = {j};
    rep.elements_.push_back({"e", identity(j.rows()), {}});
    for (double g : gs) {
      if (g == 0.0) continue;
      rep.elements_.push_back({"g=" + format_number(g), matexp(j, Complex{0.0, -g}), {g}});
    }
    return rep;
  }

  // pi(theta, n) = exp(-i theta sum_a n_a J_a) for three generators.
  static SymmetryRep lie_algebra(const std::vector<ComplexMatrix>& gens,
                                 const std::vector<AxisAngle>& samples = su2_default_samples()) {
    if (gens.empty()) throw PreconditionError("SymmetryRep: no generators");
    SymmetryRep rep;
    rep.dim_ = gens.front().rows();
    for (const auto& j : gens) {
      if (!is_hermitian(j) || j.rows() != rep.dim_) throw PreconditionError("SymmetryRep: invalid generator");
    }
    rep.generators_ = gens;
    rep.elements_.push_back({"e", identity(rep.dim_), {}});
    for (const auto& s : samples) {
      if (gens.size() != 3) throw PreconditionError("SymmetryRep: axis-angle samples need three generators");
      ComplexMatrix x = s.axis[0] * gens[0] + s.axis[1] * gens[1] + s.axis[2] * gens[2];
      rep.elements_.push_back(
          {axis_angle_label(s), matexp(x, Complex{0.0, -s.theta}), {s.theta, s.axis[0], s.axis[1], s.axis[2]}});
    }
    return rep;
  }

  static SymmetryRep sampled(std::vector<GroupElement> elements) {
    if (elements.empty()) throw PreconditionError("SymmetryRep: no elements");
    SymmetryRep rep;
    rep.dim_ = elements.front().unitary.rows();
    bool has_identity = false;
    for (const auto& e : elements) {
      if (e.unitary.rows() != rep.dim_ || !is_unitary(e.unitary)) {
        throw PreconditionError("SymmetryRep: element '" + e.label + "' is not a unitary of the right size");
      }
      has_identity = has_identity || e.label == "e";
    }
    if (!has_identity) elements.insert(elements.begin(), {"e", identity(rep.dim_), {}});
    rep.elements_ = std::move(elements);
    return rep;
  }

  // Generators and elements given together, e.g. when loaded from a document.
  static SymmetryRep combined(std::vector<ComplexMatrix> gens, std::vector<GroupElement> elements) {
    SymmetryRep rep = elements.empty() ? SymmetryRep() : sampled(std::move(elements));
    if (!gens.empty()) {
      for (const auto& j : gens)
        if (!is_hermitian(j)) throw PreconditionError("SymmetryRep: generator is not Hermitian");
      if (rep.dim_ != 0 && rep.dim_ != gens.front().rows()) throw DimensionError("SymmetryRep: dims disagree");
      rep.dim_ = gens.front().rows();
      rep.generators_ = std::move(gens);
      if (rep.elements_.empty()) rep.elements_.push_back({"e", identity(rep.dim_), {}});
    }
    return rep;
  }

  // Representation generated by gens, sampled at the same parameters as `like`.
  static SymmetryRep matching(const SymmetryRep& like, const std::vector<ComplexMatrix>& gens) {
    if (gens.size() != like.generators().size()) throw PreconditionError("SymmetryRep: generator count mismatch");
    std::vector<double> gs;
    std::vector<AxisAngle> axes;
    for (const auto& e : like.elements()) {
      if (e.label == "e") continue;
      if (e.params.size() == 1) {
        gs.push_back(e.params[0]);
      } else if (e.params.size() == 4) {
        axes.push_back({e.params[0], {e.params[1], e.params[2], e.params[3]}});
      } else {
        throw PreconditionError("SymmetryRep: element '" + e.label + "' has no group parameters");
      }
    }
    if (!gs.empty() && !axes.empty()) throw PreconditionError("SymmetryRep: mixed element parametrizations");
    SymmetryRep rep = gens.size() == 1 && axes.empty() ? one_parameter(gens.front(), gs) : lie_algebra(gens, axes);
    for (std::size_t k = 0; k < rep.elements_.size(); ++k) rep.elements_[k].label = like.elements()[k].label;
    return rep;
  }

  Index dim() const { return dim_; }
  bool has_generators() const { return !generators_.empty(); }
  const std::vector<ComplexMatrix>& generators() const { return generators_; }
  const std::vector<GroupElement>& elements() const { return elements_; }

 private:
  Index dim_ = 0;
  std::vector<ComplexMatrix> generators_;
  std::vector<GroupElement> elements_;
};

// U_g = pi_S(g) kron pi_E(g); elements are paired by position and label.
class ProductRep {
 public:
  ProductRep(SymmetryRep sys, SymmetryRep env) : sys_(std::move(sys)), env_(std::move(env)) {
    if (sys_.has_generators() && env_.has_generators() && sys_.generators().size() != env_.generators().size()) {
      throw PreconditionError("ProductRep: generator counts differ");
    }
    if (sys_.elements().size() != env_.elements().size()) throw PreconditionError("ProductRep: element counts differ");
    for (std::size_t k = 0; k < sys_.elements().size(); ++k) {
      if (sys_.elements()[k].label != env_.elements()[k].label) {
        throw PreconditionError("ProductRep: element labels differ at position " + std::to_string(k));
      }
    }
  }

  const SymmetryRep& sys() const { return sys_; }
  const SymmetryRep& env() const { return env_; }
  Index dim() const { return sys_.dim() * env_.dim(); }
  bool has_generators() const { return sys_.has_generators() && env_.has_generators(); }
  std::size_t generator_count() const { return has_generators() ? sys_.generators().size() : 0; }
  std::size_t element_count() const { return sys_.elements().size(); }

  ComplexMatrix generator(std::size_t k) const {
    return kron(sys_.generators()[k], identity(env_.dim())) + kron(identity(sys_.dim()), env_.generators()[k]);
  }
  ComplexMatrix element(std::size_t k) const {
    return kron(sys_.elements()[k].unitary, env_.elements()[k].unitary);
  }
  const std::string& label(std::size_t k) const { return sys_.elements()[k].label; }

 private:
  SymmetryRep sys_;
  SymmetryRep env_;
};

enum class CertificateKind {
  weak_covariance,
  conserved_quantity,
  intertwiner,
  stationarity,
  invariant_env_state,
  no_invariant_state,
  strong_symmetry,
  block_diagonal,
};

inline const char* to_string(CertificateKind k) {
  switch (k) {
    case CertificateKind::weak_covariance: return "weak_covariance";
    case CertificateKind::conserved_quantity: return "conserved_quantity";
    case CertificateKind::intertwiner: return "intertwiner";
    case CertificateKind::stationarity: return "stationarity";
    case CertificateKind::invariant_env_state: return "invariant_env_state";
    case CertificateKind::no_invariant_state: return "no_invariant_state";
    case CertificateKind::strong_symmetry: return "strong_symmetry";
    case CertificateKind::block_diagonal: return "block_diagonal";
  }
  return "unknown";
}

struct Evidence {
  std::string label;
  double residual = 0.0;
};

struct SymmetryCertificate {
  CertificateKind kind = CertificateKind::weak_covariance;
  std::string label;
  double residual = 0.0;
  double tolerance = kCertificateTolerance;
  bool pass = false;
  std::optional<Index> subspace_rank;
  std::vector<Evidence> evidence;
  // Audits are reported but do not affect exit status.
  bool required = true;

  static SymmetryCertificate make(CertificateKind kind, std::string label, double residual, double tolerance,
                                  std::vector<Evidence> evidence = {}, std::optional<Index> rank = std::nullopt) {
    SymmetryCertificate c;
    c.kind = kind;
    c.label = std::move(label);
    c.residual = residual;
    c.tolerance = tolerance;
    c.pass = residual <= tolerance;
    c.evidence = std::move(evidence);
    c.subspace_rank = rank;
    return c;
  }
};

inline double max_residual(const std::vector<Evidence>& ev) {
  double r = 0.0;
  for (const auto& e : ev) r = std::max(r, e.residual);
  return r;
}

// vec(JX - XJ) = (I kron J - J^T kron I) vec(X)
inline ComplexMatrix commutator_superoperator(const ComplexMatrix& j) {
  const Index d = j.rows();
  return kron(identity(d), j) - kron(ComplexMatrix(j.transpose()), identity(d));
}

namespace detail {

// Reproducible uniform doubles in [-1, 1) from a fixed 64-bit generator.
class ProbeStream {
 public:
  explicit ProbeStream(std::uint64_t seed) : state_(seed) {}
  double next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return 2.0 * static_cast<double>(z >> 11) * 0x1.0p-53 - 1.0;
  }

 private:
  std::uint64_t state_;
};

inline constexpr Index kProbeCount = 20;

// Matrix units when they fit in the probe budget, else fixed pseudo-random matrices.
inline std::vector<ComplexMatrix> covariance_probes(Index d) {
  std::vector<ComplexMatrix> probes;
  if (d * d <= kProbeCount) {
    for (Index j = 0; j < d; ++j)
      for (Index i = 0; i < d; ++i) probes.push_back(matrix_unit(d, i, j));
    return probes;
  }
  ProbeStream rng(20);
  for (Index k = 0; k < kProbeCount; ++k) {
    ComplexMatrix m(d, d);
    for (Index j = 0; j < d; ++j)
      for (Index i = 0; i < d; ++i) m(i, j) = Complex(rng.next(), rng.next());
    probes.push_back(m);
  }
  return probes;
}

}  // namespace detail

// Weak symmetry pi phi(X) pi^dagger = phi(pi X pi^dagger). Each sampled element is
// checked on the probe set and on the full superoperator; generators are
// checked through the commutator superoperator.
inline SymmetryCertificate check_covariance(const Superoperator& s, const SymmetryRep& rep,
                                            double tol = kCertificateTolerance) {
  if (rep.dim() != s.dim_s) throw DimensionError("check_covariance: representation dim does not match map");
  const auto probes = detail::covariance_probes(s.dim_s);
  std::vector<Evidence> ev;
  for (const auto& g : rep.elements()) {
    const ComplexMatrix& p = g.unitary;
    double r = 0.0;
    for (const auto& x : probes) {
      r = std::max(r, (p * s.apply(x) * p.adjoint() - s.apply(p * x * p.adjoint())).norm());
    }
    ComplexMatrix ug = conjugation_superoperator(p).matrix;
    r = std::max(r, (ug * s.matrix - s.matrix * ug).norm());
    ev.push_back({g.label, r});
  }
  for (std::size_t k = 0; k < rep.generators().size(); ++k) {
    ComplexMatrix jj = commutator_superoperator(rep.generators()[k]);
    ev.push_back({"generator " + std::to_string(k), (jj * s.matrix - s.matrix * jj).norm()});
  }
  const double r = max_residual(ev);
  return SymmetryCertificate::make(CertificateKind::weak_covariance, "map covariance", r, tol, std::move(ev));
}

// Orthonormal basis of n x n Hermitian matrices under the Frobenius product.
inline std::vector<ComplexMatrix> hermitian_basis(Index n) {
  std::vector<ComplexMatrix> b;
  const double r = 1.0 / std::sqrt(2.0);
  for (Index i = 0; i < n; ++i) b.push_back(matrix_unit(n, i, i));
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      b.push_back(r * (matrix_unit(n, i, j) + matrix_unit(n, j, i)));
      b.push_back(r * (-kI * matrix_unit(n, i, j) + kI * matrix_unit(n, j, i)));
    }
  }
  return b;
}

namespace detail {

struct RealSolve {
  RealVector x;
  Index rank = 0;
};

// Minimum-norm least squares for sum_k x_k cols[k] = rhs with real x.
inline RealSolve solve_real_combination(const std::vector<ComplexVector>& cols, const ComplexVector& rhs) {
  const Index m = rhs.size();
  RealMatrix a(2 * m, static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    a.col(static_cast<Index>(k)).head(m) = cols[k].real();
    a.col(static_cast<Index>(k)).tail(m) = cols[k].imag();
  }
  RealVector b(2 * m);
  b.head(m) = rhs.real();
  b.tail(m) = rhs.imag();
  Eigen::CompleteOrthogonalDecomposition<RealMatrix> cod;
  cod.setThreshold(kRankTolerance);
  cod.compute(a);
  return {cod.solve(b), cod.rank()};
}

inline ComplexVector flatten(const std::vector<ComplexMatrix>& blocks) {
  Index n = 0;
  for (const auto& b : blocks) n += b.size();
  ComplexVector out(n);
  Index off = 0;
  for (const auto& b : blocks) {
    out.segment(off, b.size()) = Eigen::Map<const ComplexVector>(b.data(), b.size());
    off += b.size();
  }
  return out;
}

}  // namespace detail

struct EnvGeneratorSolution {
  ComplexMatrix j_e;
  SymmetryCertificate certificate;
  Index constraint_rank = 0;
  Index unknowns = 0;
  bool unique = false;
};

// Hermitian J_E with [H, J_S kron I + I kron J_E] P = 0 on the subspace and
// J_E psi_E = 0 (gauge). Minimum-norm solution when not unique.
inline EnvGeneratorSolution solve_env_generator(const Dilation& d, const ComplexMatrix& j_s, const Subspace& sub,
                                                double tol = kCertificateTolerance) {
  const ComplexMatrix* h = d.evolution.hamiltonian();
  if (!h) throw PreconditionError("solve_env_generator: dilation is not generated by a time-independent Hamiltonian");
  const ComplexVector& psi = d.env_state.vector();
  if (j_s.rows() != d.dim_s || !is_hermitian(j_s)) {
    throw PreconditionError("solve_env_generator: J_S must be a Hermitian d_S x d_S matrix");
  }
  if (sub.ambient_dim() != h->rows()) throw DimensionError("solve_env_generator: subspace ambient dim mismatch");
  if (!is_minimal(d, TimeGrid{}.times()).minimal) {
    throw PreconditionError("solve_env_generator: dilation is not minimal; minimalize first");
  }
  const Index de = d.dim_e();
  const ComplexMatrix& q = sub.basis();
  const ComplexMatrix id_s = identity(d.dim_s);
  const auto basis = hermitian_basis(de);

  std::vector<ComplexVector> cols;
  for (const auto& b : basis) {
    cols.push_back(detail::flatten({commutator(*h, kron(id_s, b)) * q, ComplexMatrix(b * psi)}));
  }
  ComplexMatrix rhs_block = -commutator(*h, kron(j_s, identity(de))) * q;
  ComplexVector rhs = detail::flatten({rhs_block, ComplexMatrix::Zero(de, 1)});
  auto sol = detail::solve_real_combination(cols, rhs);

  EnvGeneratorSolution out;
  out.j_e = ComplexMatrix::Zero(de, de);
  for (std::size_t k = 0; k < basis.size(); ++k) out.j_e += sol.x(static_cast<Index>(k)) * basis[k];
  out.constraint_rank = sol.rank;
  out.unknowns = static_cast<Index>(basis.size());
  out.unique = sol.rank == out.unknowns;

  ComplexMatrix j_total = kron(j_s, identity(de)) + kron(id_s, out.j_e);
  double comm = (commutator(*h, j_total) * q).norm();
  double gauge = (out.j_e * psi).norm();
  out.certificate = SymmetryCertificate::make(CertificateKind::conserved_quantity, "[H, J_S + J_E] on subspace",
                                              std::hypot(comm, gauge), tol,
                                              {{"commutator", comm}, {"gauge J_E psi_E", gauge}}, sub.rank());
  return out;
}

struct EnvFit {
  ComplexMatrix j_e;
  double residual = 0.0;
  Index rank = 0;
  Index unknowns = 0;
  bool unique = false;
};

// Hermitian J_E with (J_S kron I + I kron J_E) V = V J_S for every given V.
inline EnvFit fit_env_generator(const std::vector<ComplexMatrix>& isometries, const ComplexMatrix& j_s, Index de) {
  const Index ds = j_s.rows();
  const auto basis = hermitian_basis(de);
  std::vector<ComplexVector> cols;
  for (const auto& b : basis) {
    std::vector<ComplexMatrix> blocks;
    for (const auto& v : isometries) blocks.push_back(kron(identity(ds), b) * v);
    cols.push_back(detail::flatten(blocks));
  }
  std::vector<ComplexMatrix> rhs;
  for (const auto& v : isometries) rhs.push_back(v * j_s - kron(j_s, identity(de)) * v);
  auto sol = detail::solve_real_combination(cols, detail::flatten(rhs));
  EnvFit out;
  out.j_e = ComplexMatrix::Zero(de, de);
  for (std::size_t k = 0; k < basis.size(); ++k) out.j_e += sol.x(static_cast<Index>(k)) * basis[k];
  double r2 = 0.0;
  for (const auto& v : isometries) {
    r2 += ((kron(j_s, identity(de)) + kron(identity(ds), out.j_e)) * v - v * j_s).squaredNorm();
  }
  out.residual = std::sqrt(r2);
  out.rank = sol.rank;
  out.unknowns = static_cast<Index>(basis.size());
  out.unique = out.rank == out.unknowns;
  return out;
}

// Complex W with (pi_S kron W) V = V pi_S for every given V.
inline EnvFit fit_env_element(const std::vector<ComplexMatrix>& isometries, const ComplexMatrix& pi_s, Index de) {
  const Index ds = pi_s.rows();
  const Index n = de * de;
  Index rows = 0;
  for (const auto& v : isometries) {
    if (v.rows() != ds * de || v.cols() != ds) throw DimensionError("fit_env_element: isometry shape mismatch");
    rows += v.size();
  }
  ComplexMatrix a(rows, n);
  for (Index c = 0; c < n; ++c) {
    ComplexMatrix w = matrix_unit(de, c % de, c / de);
    std::vector<ComplexMatrix> blocks;
    for (const auto& v : isometries) blocks.push_back(kron(pi_s, w) * v);
    a.col(c) = detail::flatten(blocks);
  }
  std::vector<ComplexMatrix> rhs;
  for (const auto& v : isometries) rhs.push_back(v * pi_s);
  ComplexVector b = detail::flatten(rhs);
  Eigen::CompleteOrthogonalDecomposition<ComplexMatrix> cod;
  cod.setThreshold(kRankTolerance);
  cod.compute(a);
  ComplexVector x = cod.solve(b);
  EnvFit out;
  out.j_e = Eigen::Map<ComplexMatrix>(x.data(), de, de);
  out.residual = (a * x - b).norm();
  out.rank = cod.rank();
  out.unknowns = n;
  out.unique = out.rank == n;
  return out;
}

// B J B^dagger: acts as j_min on the support and as zero elsewhere.
inline ComplexMatrix extend_env_generator(const ComplexMatrix& j_min, const Subspace& support) {
  return support.basis() * j_min * support.basis().adjoint();
}

struct TimedIsometry {
  double t = 0.0;
  StinespringIsometry iso;
};

struct IntertwinerReport {
  SymmetryCertificate certificate;
  SymmetryCertificate stationarity;
  double drift = 0.0;
  Index audited_times = 0;
  Index skipped_times = 0;
};

// (pi_S kron pi_E) V(t) = V(t) pi_S at every element and time, plus the
// generator form when both reps carry generators. The stationarity audit
// refits pi_E per time on the minimal samples and reports the largest spread.
inline IntertwinerReport verify_intertwiner(const std::vector<TimedIsometry>& samples, const SymmetryRep& rep_s,
                                            const SymmetryRep& rep_e, double tol = kCertificateTolerance) {
  if (samples.empty()) throw PreconditionError("verify_intertwiner: no isometry samples");
  const Index ds = rep_s.dim(), de = rep_e.dim();
  ProductRep ug(rep_s, rep_e);
  std::vector<Evidence> ev;
  for (const auto& s : samples) {
    if (s.iso.dim_s != ds || s.iso.dim_e != de) throw DimensionError("verify_intertwiner: isometry dims mismatch");
    const ComplexMatrix& v = s.iso.v;
    for (std::size_t k = 0; k < ug.element_count(); ++k) {
      double r = (ug.element(k) * v - v * rep_s.elements()[k].unitary).norm();
      ev.push_back({"t=" + format_number(s.t) + " " + ug.label(k), r});
    }
    for (std::size_t k = 0; k < ug.generator_count(); ++k) {
      double r = (ug.generator(k) * v - v * rep_s.generators()[k]).norm();
      ev.push_back({"t=" + format_number(s.t) + " generator " + std::to_string(k), r});
    }
  }
  IntertwinerReport out;
  const double worst = max_residual(ev);
  out.certificate = SymmetryCertificate::make(CertificateKind::intertwiner, "(pi_S x pi_E) V = V pi_S", worst, tol,
                                              std::move(ev));

  std::vector<std::vector<ComplexMatrix>> fits;
  const TensorSpace env{de};
  for (const auto& s : samples) {
    if (environment_support(s.iso, env).rank() != de) {
      ++out.skipped_times;
      continue;
    }
    std::vector<ComplexMatrix> f;
    if (rep_s.has_generators()) {
      for (const auto& j : rep_s.generators()) f.push_back(fit_env_generator({s.iso.v}, j, de).j_e);
    } else {
      for (const auto& g : rep_s.elements()) f.push_back(fit_env_element({s.iso.v}, g.unitary, de).j_e);
    }
    fits.push_back(std::move(f));
  }
  out.audited_times = static_cast<Index>(fits.size());
  for (std::size_t a = 0; a < fits.size(); ++a)
    for (std::size_t b = a + 1; b < fits.size(); ++b)
      for (std::size_t k = 0; k < fits[a].size(); ++k) out.drift = std::max(out.drift, (fits[a][k] - fits[b][k]).norm());
  out.stationarity = SymmetryCertificate::make(
      CertificateKind::stationarity, "max drift of fitted pi_E across t", out.drift, tol,
      {{"audited times", static_cast<double>(out.audited_times)},
       {"skipped times", static_cast<double>(out.skipped_times)}});
  out.stationarity.required = false;
  return out;
}

inline SymmetryCertificate check_invariant_env_state(const SymmetryRep& rep_e, const ComplexVector& psi,
                                                     double tol = kCertificateTolerance) {
  if (psi.size() != rep_e.dim()) throw DimensionError("check_invariant_env_state: state dim mismatch");
  std::vector<Evidence> ev;
  for (const auto& g : rep_e.elements()) ev.push_back({g.label, (g.unitary * psi - psi).norm()});
  for (std::size_t k = 0; k < rep_e.generators().size(); ++k) {
    ev.push_back({"generator " + std::to_string(k), (rep_e.generators()[k] * psi).norm()});
  }
  const double r = max_residual(ev);
  return SymmetryCertificate::make(CertificateKind::invariant_env_state, "pi_E(g) psi_E = psi_E", r, tol,
                                   std::move(ev));
}

// Passes iff the common fixed space of the representation is trivial. The
// residual is that dimension, so the tolerance is zero.
inline SymmetryCertificate no_invariant_state(const SymmetryRep& rep_e) {
  const Index d = rep_e.dim();
  std::vector<ComplexMatrix> blocks;
  for (const auto& j : rep_e.generators()) blocks.push_back(j);
  for (const auto& g : rep_e.elements()) {
    if (g.label != "e") blocks.push_back(g.unitary - identity(d));
  }
  if (blocks.empty()) throw PreconditionError("no_invariant_state: representation is trivial");
  ComplexMatrix stacked(d * static_cast<Index>(blocks.size()), d);
  for (std::size_t k = 0; k < blocks.size(); ++k) stacked.middleRows(static_cast<Index>(k) * d, d) = blocks[k];
  Eigen::JacobiSVD<ComplexMatrix> svd(stacked);
  Index fixed = null_space(stacked).cols();
  double smin = svd.singularValues().size() ? svd.singularValues()(svd.singularValues().size() - 1) : 0.0;
  return SymmetryCertificate::make(CertificateKind::no_invariant_state, "common fixed space of pi_E",
                                   static_cast<double>(fixed), 0.0,
                                   {{"smallest singular value", smin}, {"fixed space dim", static_cast<double>(fixed)}});
}

struct StrongSymmetryOptions {
  double tolerance = kCertificateTolerance;
  bool require_invariant = false;
  std::string label = "strong symmetry on subspace";
};

// max_g ||(U_g^dagger X U_g - X) Q|| over the subspace basis Q.
inline SymmetryCertificate strong_symmetry_on_subspace(const ComplexMatrix& x, const ProductRep& ug,
                                                       const Subspace& sub, const StrongSymmetryOptions& opt = {}) {
  if (x.rows() != ug.dim() || sub.ambient_dim() != ug.dim()) throw DimensionError("strong_symmetry: dim mismatch");
  const ComplexMatrix& q = sub.basis();
  if (opt.require_invariant) {
    double leak = (x * q - sub.projector() * x * q).norm();
    if (leak > opt.tolerance) {
      throw PreconditionError("strong_symmetry: subspace is not invariant (leak " + format_number(leak) + ")");
    }
  }
  std::vector<Evidence> ev;
  for (std::size_t k = 0; k < ug.element_count(); ++k) {
    ComplexMatrix u = ug.element(k);
    ev.push_back({ug.label(k), ((u.adjoint() * x * u - x) * q).norm()});
  }
  double r = max_residual(ev);
  if (is_hermitian(x)) {
    for (std::size_t k = 0; k < ug.generator_count(); ++k) {
      ev.push_back({"generator commutator " + std::to_string(k), (commutator(x, ug.generator(k)) * q).norm()});
    }
  }
  return SymmetryCertificate::make(CertificateKind::strong_symmetry, opt.label, r, opt.tolerance, std::move(ev),
                                   sub.rank());
}

inline SymmetryCertificate strong_symmetry_on_subspace(const UnitaryFamily& family, const std::vector<double>& times,
                                                       const ProductRep& ug, const Subspace& sub,
                                                       const StrongSymmetryOptions& opt = {}) {
  if (times.empty()) throw PreconditionError("strong_symmetry: no time samples");
  std::vector<Evidence> ev;
  double r = 0.0;
  for (double t : times) {
    StrongSymmetryOptions inner = opt;
    inner.require_invariant = false;
    auto c = strong_symmetry_on_subspace(family.at(t), ug, sub, inner);
    for (auto& e : c.evidence) ev.push_back({"t=" + format_number(t) + " " + e.label, e.residual});
    r = std::max(r, c.residual);
  }
  return SymmetryCertificate::make(CertificateKind::strong_symmetry, opt.label, r, opt.tolerance, std::move(ev),
                                   sub.rank());
}

// Frobenius norm of the off-diagonal blocks of x with respect to sub.
inline SymmetryCertificate block_diagonal_check(const ComplexMatrix& x, const Subspace& sub,
                                                double tol = kCertificateTolerance) {
  if (x.rows() != sub.ambient_dim() || x.cols() != sub.ambient_dim()) {
    throw DimensionError("block_diagonal_check: dim mismatch");
  }
  const ComplexMatrix& p = sub.projector();
  ComplexMatrix q = sub.complement_projector();
  double upper = (p * x * q).norm(), lower = (q * x * p).norm();
  return SymmetryCertificate::make(CertificateKind::block_diagonal, "off-block norm", std::hypot(upper, lower), tol,
                                   {{"P x P_perp", upper}, {"P_perp x P", lower}}, sub.rank());
}

// P h P: agrees with h on the subspace and is trivially symmetric on its complement.
inline ComplexMatrix symmetrize_hamiltonian(const ComplexMatrix& h, const ProductRep& ug, const Subspace& k_par,
                                            double tol = kCertificateTolerance) {
  if (!is_hermitian(h)) throw PreconditionError("symmetrize_hamiltonian: h is not Hermitian");
  if (!block_diagonal_check(h, k_par, tol).pass) {
    throw PreconditionError("symmetrize_hamiltonian: h is not block-diagonal on the subspace");
  }
  for (std::size_t k = 0; k < ug.element_count(); ++k) {
    if (!block_diagonal_check(ug.element(k), k_par, tol).pass) {
      throw PreconditionError("symmetrize_hamiltonian: U_g is not block-diagonal at " + ug.label(k));
    }
  }
  const ComplexMatrix& p = k_par.projector();
  ComplexMatrix out = p * h * p;
  return 0.5 * (out + out.adjoint());
}

}  // namespace dilation_lab
