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

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dilation_lab/collision.hpp"
#include "dilation_lab/krylov.hpp"
#include "dilation_lab/maps.hpp"
#include "dilation_lab/symmetry.hpp"
#include "dilation_lab/tensor.hpp"

namespace dilation_lab {

enum class Provenance { reference, computed };

inline const char* to_string(Provenance p) { return p == Provenance::reference ? "reference" : "computed"; }

template <class T>
struct Expected {
  T value;
  Provenance provenance = Provenance::reference;
};

struct ExpectedResidual {
  double value = 0.0;
  double tolerance = 1e-9;
  Provenance provenance = Provenance::computed;
};

// Keys of `verdicts` and `residuals` are check ids (see kCheckIds).
struct Expectations {
  std::map<std::string, Expected<bool>> verdicts;
  std::map<std::string, Expected<Index>> ranks;
  std::map<std::string, ExpectedResidual> residuals;
  std::map<std::string, Expected<ComplexMatrix>> matrices;
  std::optional<Expected<bool>> minimal;

  bool empty() const {
    return verdicts.empty() && ranks.empty() && residuals.empty() && matrices.empty() && !minimal;
  }
};

inline const std::vector<std::string>& check_ids() {
  static const std::vector<std::string> ids{
      "covariance",         "conserved_quantity", "intertwiner",       "stationarity",
      "invariant_env_state", "no_invariant_state", "strong_symmetry",  "strong_symmetry_k2",
      "global_symmetry",    "perp_symmetry",      "block_diagonal",    "reference_block_diagonal",
      "gkls_covariance"};
  return ids;
}

// Subspace order used by the Hamiltonian pipeline.
enum class KrylovOrder { maximal, order2 };

struct ScenarioCase {
  std::string name;
  Dilation dilation;
  Expectations expected;
  std::string basis_order = "|s_S e_E>, system index outermost, |0> first";
  std::string notes;
  KrylovOrder order = KrylovOrder::maximal;
  // Case whose maximal K_par serves as the block-diagonality reference.
  std::optional<std::string> reference_case;
  std::optional<CollisionSpec> collision;
};

struct ConvergenceSetup {
  double t = 1.0;
  std::vector<double> dts{0.1, 0.05, 0.025};
};

struct Scenario {
  std::string name;
  SymmetryRep sys_rep;
  std::vector<ScenarioCase> cases;
  TimeGrid grid;
  // Overrides `grid` when non-empty.
  std::vector<double> explicit_times;
  double tolerance = kCertificateTolerance;
  std::optional<ConvergenceSetup> convergence;
  Expectations expected;  // scenario-level: GKLS generator, convergence order
  std::string notes;

  std::vector<double> times() const { return explicit_times.empty() ? grid.times() : explicit_times; }
};

struct ScenarioParams {
  double c1 = 0.3;
  double gamma = 1.0;
  double j = 1.0;
  double dt = 0.05;
  double t = 1.0;
};

// ---------------------------------------------------------------------------
// Operators in the canonical ordering (|0> first, system factor outermost).

// sigma^+ = |1><0|
inline ComplexMatrix sigma_plus() {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(1, 0) = 1.0;
  return m;
}

inline ComplexMatrix sigma_minus() { return sigma_plus().adjoint(); }

inline ComplexMatrix number_op(Index d) {
  ComplexMatrix n = ComplexMatrix::Zero(d, d);
  for (Index k = 0; k < d; ++k) n(k, k) = static_cast<double>(k);
  return n;
}

// Truncated annihilation operator.
inline ComplexMatrix annihilation(Index d) {
  ComplexMatrix a = ComplexMatrix::Zero(d, d);
  for (Index k = 1; k < d; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
  return a;
}

// Spin-j matrices {J_x, J_y, J_z} with J_z = diag(j, j-1, ..., -j).
inline std::vector<ComplexMatrix> spin_matrices(double j) {
  const Index n = static_cast<Index>(std::lround(2.0 * j)) + 1;
  ComplexMatrix jz = ComplexMatrix::Zero(n, n), jp = ComplexMatrix::Zero(n, n);
  for (Index k = 0; k < n; ++k) {
    double m = j - static_cast<double>(k);
    jz(k, k) = m;
    if (k > 0) jp(k - 1, k) = std::sqrt(j * (j + 1.0) - m * (m + 1.0));
  }
  ComplexMatrix jm = jp.adjoint();
  return {0.5 * (jp + jm), -0.5 * kI * (jp - jm), jz};
}

// Generators of the adjoint representation, (T_a)_{bc} = -i eps_{abc}.
inline std::vector<ComplexMatrix> adjoint_generators() {
  std::vector<ComplexMatrix> t(3, ComplexMatrix::Zero(3, 3));
  t[0](1, 2) = -kI;
  t[0](2, 1) = kI;
  t[1](0, 2) = kI;
  t[1](2, 0) = -kI;
  t[2](0, 1) = -kI;
  t[2](1, 0) = kI;
  return t;
}

inline ComplexMatrix reversal(Index n) {
  ComplexMatrix r = ComplexMatrix::Zero(n, n);
  for (Index k = 0; k < n; ++k) r(k, n - 1 - k) = 1.0;
  return r;
}

// Maps index e*ds + s (environment outermost) to s*de + e.
inline ComplexMatrix swap_factors(Index de, Index ds) {
  ComplexMatrix p = ComplexMatrix::Zero(de * ds, de * ds);
  for (Index e = 0; e < de; ++e)
    for (Index s = 0; s < ds; ++s) p(s * de + e, e * ds + s) = 1.0;
  return p;
}

namespace detail {

inline Dilation make_dilation(Index ds, std::vector<Index> env, EnvState state, UnitaryFamily family) {
  Dilation d;
  d.dim_s = ds;
  d.env_factors = std::move(env);
  d.env_state = std::move(state);
  d.evolution = std::move(family);
  d.validate();
  return d;
}

inline Expected<bool> reference(bool v) { return {v, Provenance::reference}; }
inline Expected<bool> computed(bool v) { return {v, Provenance::computed}; }
inline Expected<Index> reference_rank(Index v) { return {v, Provenance::reference}; }
inline Expected<Index> computed_rank(Index v) { return {v, Provenance::computed}; }

inline ComplexMatrix diag(std::initializer_list<double> values) {
  ComplexMatrix m = ComplexMatrix::Zero(static_cast<Index>(values.size()), static_cast<Index>(values.size()));
  Index k = 0;
  for (double v : values) m(k, k) = v, ++k;
  return m;
}

inline Scenario example1() {
  Scenario s;
  s.name = "ex1";
  s.sys_rep = SymmetryRep::one_parameter(number_op(2));
  const ComplexMatrix sp = sigma_plus(), sm = sigma_minus();

  ScenarioCase c;
  c.name = "ex1";
  c.dilation = make_dilation(2, {2}, ComplexVector(basis_vector(2, 1)),
                             UnitaryFamily::generator(kron(sp, sm) + kron(sm, sp)));
  auto& e = c.expected;
  e.ranks = {{"k_par", reference_rank(3)}, {"k_perp", reference_rank(1)}, {"env_support", reference_rank(2)}};
  e.minimal = reference(true);
  for (auto id : {"covariance", "conserved_quantity", "intertwiner", "invariant_env_state", "strong_symmetry",
                  "global_symmetry", "perp_symmetry", "block_diagonal"})
    e.verdicts[id] = reference(true);
  e.matrices["j_e"] = {diag({-1.0, 0.0}), Provenance::reference};
  c.notes = "H_I = sigma_S^+ sigma_E^- + h.c., psi_E = |1_E>; N_S + N_E conserved globally.";
  s.cases.push_back(c);

  ScenarioCase b;
  b.name = "ex1b";
  b.dilation = make_dilation(2, {2}, ComplexVector(basis_vector(2, 1)),
                             UnitaryFamily::generator(kron(sm, sm) + kron(sp, sp)));
  b.expected.ranks = {{"k_par", computed_rank(3)}, {"k_perp", computed_rank(1)}};
  for (auto id : {"covariance", "conserved_quantity", "strong_symmetry", "global_symmetry", "block_diagonal",
                  "invariant_env_state", "intertwiner"})
    b.expected.verdicts[id] = computed(true);
  b.expected.matrices["j_e"] = {diag({1.0, 0.0}), Provenance::computed};
  b.notes = "H_I = sigma_S^- sigma_E^- + h.c.; N_S - N_E conserved.";
  s.cases.push_back(b);
  return s;
}

inline Scenario example2(double c1) {
  if (!(c1 > 0.0 && c1 < 1.0)) throw PreconditionError("example 2: c1 must lie in (0, 1)");
  Scenario s;
  s.name = "ex2";
  s.sys_rep = SymmetryRep::one_parameter(number_op(2));
  const ComplexMatrix sp = sigma_plus(), sm = sigma_minus();
  const ComplexMatrix h = kron(sp, sm) + kron(sm, sp);

  ScenarioCase c;
  c.name = "ex2";
  ComplexMatrix rho = diag({c1, 1.0 - c1});
  c.dilation = make_dilation(2, {2}, rho, UnitaryFamily::generator(h));
  auto& e = c.expected;
  e.ranks = {{"k_par", reference_rank(6)}, {"k_perp", reference_rank(2)}};
  e.minimal = reference(true);
  for (auto id : {"covariance", "conserved_quantity", "intertwiner", "invariant_env_state", "strong_symmetry",
                  "global_symmetry", "perp_symmetry", "block_diagonal"})
    e.verdicts[id] = reference(true);
  e.matrices["j_e"] = {diag({0.0, -1.0, 1.0, 0.0}), Provenance::reference};
  c.notes = "rho_E = c1 |0><0| + (1 - c1) |1><1|, purified with ancilla C.";
  s.cases.push_back(c);

  // H' = H kron I_C + |0_S 0_E 1_C><1_S 1_E 0_C| + h.c. on the purified space.
  ScenarioCase v;
  v.name = "ex2-hprime";
  ComplexVector psi = std::sqrt(c1) * basis_vector(4, 0) + std::sqrt(1.0 - c1) * basis_vector(4, 3);
  ComplexMatrix hp = kron(h, identity(2));
  const Index a = 0 * 4 + 0 * 2 + 1, b = 1 * 4 + 1 * 2 + 0;
  hp(a, b) += 1.0;
  hp(b, a) += 1.0;
  v.dilation = make_dilation(2, {2, 2}, psi, UnitaryFamily::generator(hp));
  v.expected.ranks = {{"k_par", reference_rank(6)}, {"k_perp", reference_rank(2)}};
  for (auto id : {"covariance", "conserved_quantity", "strong_symmetry", "block_diagonal", "invariant_env_state"})
    v.expected.verdicts[id] = reference(true);
  v.expected.verdicts["perp_symmetry"] = reference(false);
  v.expected.verdicts["global_symmetry"] = reference(false);
  v.expected.residuals["perp_symmetry"] = {2.0 * std::sqrt(2.0), 1e-9, Provenance::computed};
  v.expected.matrices["j_e"] = {diag({0.0, -1.0, 1.0, 0.0}), Provenance::reference};
  v.notes = "Extra coupling inside K_perp breaks the symmetry there only.";
  s.cases.push_back(v);
  return s;
}

inline Scenario example3(double gamma, double dt, double t) {
  if (!(gamma > 0.0) || !(dt > 0.0) || !(t > 0.0)) throw PreconditionError("example 3: gamma, dt, t must be positive");
  Scenario s;
  s.name = "ex3";
  const Index d = 4;
  const ComplexMatrix a = annihilation(d), ad = a.adjoint();
  s.sys_rep = SymmetryRep::one_parameter(number_op(d));
  const ComplexMatrix rho_e = matrix_unit(d, 0, 0);

  CollisionSpec spec;
  spec.dim_s = d;
  spec.dim_e = d;
  spec.terms = {{ad, a}, {a, ad}};
  spec.rho_e = rho_e;
  spec.gamma = gamma;
  spec.dt = dt;

  ScenarioCase c;
  c.name = "ex3";
  c.dilation = make_dilation(d, {d}, ComplexVector(basis_vector(d, 0)), UnitaryFamily::generator(spec.interaction()));
  c.collision = spec;
  auto& e = c.expected;
  e.ranks = {{"k_par", reference_rank(10)}, {"k_perp", computed_rank(6)}, {"k_par2", reference_rank(9)}};
  e.minimal = computed(true);
  for (auto id : {"covariance", "conserved_quantity", "intertwiner", "invariant_env_state", "strong_symmetry",
                  "strong_symmetry_k2", "global_symmetry", "perp_symmetry", "block_diagonal", "gkls_covariance"})
    e.verdicts[id] = reference(true);
  e.matrices["j_e"] = {diag({0.0, 1.0, 2.0, 3.0}), Provenance::reference};
  c.notes = "H_I = a_S^dagger a_E + a_S a_E^dagger on two ququarts, psi_E = |0_E>.";
  s.cases.push_back(c);

  // H' = H + |0_S 3_E><2_S 3_E| + h.c., a valid dilation of the collision step only.
  ScenarioCase v;
  v.name = "ex3-hprime";
  CollisionSpec vspec = spec;
  vspec.terms.push_back({matrix_unit(d, 0, 2), matrix_unit(d, 3, 3)});
  vspec.terms.push_back({matrix_unit(d, 2, 0), matrix_unit(d, 3, 3)});
  v.dilation = make_dilation(d, {d}, ComplexVector(basis_vector(d, 0)), UnitaryFamily::generator(vspec.interaction()));
  v.collision = vspec;
  v.order = KrylovOrder::order2;
  v.reference_case = "ex3";
  v.expected.ranks = {{"k_par2", reference_rank(9)}};
  v.expected.verdicts["strong_symmetry_k2"] = reference(true);
  v.expected.verdicts["gkls_covariance"] = computed(true);
  v.expected.verdicts["reference_block_diagonal"] = reference(false);
  v.expected.residuals["reference_block_diagonal"] = {std::sqrt(2.0), 1e-9, Provenance::computed};
  v.expected.matrices["j_e"] = {diag({0.0, 1.0, 2.0, 3.0}), Provenance::computed};
  v.notes = "Collision step agrees with H_I up to O(dt^2); not block-diagonal on the maximal K_par of H_I.";
  s.cases.push_back(v);

  // L = gamma (a rho a^dagger - 1/2 {a^dagger a, rho}) written out directly.
  const ComplexMatrix id = identity(d), n = ad * a;
  ComplexMatrix l = gamma * (kron(ComplexMatrix(a.conjugate()), a) - 0.5 * kron(id, n) -
                             0.5 * kron(ComplexMatrix(n.transpose()), id));
  s.expected.matrices["gkls_superoperator"] = {l, Provenance::reference};
  s.expected.residuals["convergence_order"] = {1.05, 0.25, Provenance::computed};
  s.convergence = ConvergenceSetup{t, {2.0 * dt, dt, 0.5 * dt}};
  return s;
}

// Rows/columns in the order {|1_S1_E>, |1_S0_E>, |0_S1_E>, |0_S0_E>}.
inline ComplexMatrix example4_unitary(double gamma, double t, bool global) {
  const double l1 = std::sqrt(std::exp(-gamma * t)), l0 = std::sqrt(1.0 - std::exp(-gamma * t));
  ComplexMatrix u(4, 4);
  if (global) {
    u << l1, 0, 0, -l0, 0, 1, 0, 0, 0, 0, 1, 0, l0, 0, 0, l1;
  } else {
    u << l1, -l0, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0, l0, l1, 0, 0;
  }
  const ComplexMatrix r = reversal(4);
  return r * u * r;
}

inline Scenario example4(double gamma) {
  if (!(gamma > 0.0)) throw PreconditionError("example 4: gamma must be positive");
  Scenario s;
  s.name = "ex4";
  s.sys_rep = SymmetryRep::one_parameter(number_op(2));
  for (bool global : {false, true}) {
    ScenarioCase c;
    c.name = global ? "ex4-prime" : "ex4";
    c.dilation = make_dilation(
        2, {2}, ComplexVector(basis_vector(2, 1)),
        UnitaryFamily::explicit_fn(4, [gamma, global](double t) { return example4_unitary(gamma, t, global); }));
    c.basis_order = "entered as {|1_S1_E>, |1_S0_E>, |0_S1_E>, |0_S0_E>}, stored reversed";
    auto& e = c.expected;
    e.minimal = computed(true);
    e.ranks = {{"env_support", computed_rank(2)}};
    for (auto id : {"covariance", "conserved_quantity", "intertwiner", "invariant_env_state", "strong_symmetry"})
      e.verdicts[id] = reference(true);
    e.verdicts["stationarity"] = reference(true);
    e.verdicts["global_symmetry"] = reference(global);
    e.matrices["j_e"] = {diag({1.0, 0.0}), Provenance::reference};
    c.notes = global ? "U_I' conserves N_S - N_E on the whole space." : "Symmetry only on H_S x span{|1_E>}.";
    s.cases.push_back(c);
  }
  return s;
}

// Rows/columns in the order {|1_S1_E>, |1_S0_E>, |0_S1_E>, |0_S0_E>}.
inline ComplexMatrix example5_unitary(double t) {
  const double c = std::cos(t), sn = std::sin(t);
  ComplexMatrix u(4, 4);
  u << 0, 1, 0, 0, c, 0, 0, -kI * sn, -kI * sn, 0, 0, c, 0, 0, 1, 0;
  const ComplexMatrix r = reversal(4);
  return r * u * r;
}

inline Scenario example5() {
  Scenario s;
  s.name = "ex5";
  s.sys_rep = SymmetryRep::one_parameter(number_op(2));
  ScenarioCase c;
  c.name = "ex5";
  c.dilation = make_dilation(2, {2}, ComplexVector(basis_vector(2, 0)),
                             UnitaryFamily::explicit_fn(4, [](double t) { return example5_unitary(t); }));
  c.basis_order = "entered as {|1_S1_E>, |1_S0_E>, |0_S1_E>, |0_S0_E>}, stored reversed";
  auto& e = c.expected;
  e.minimal = computed(true);
  for (auto id : {"covariance", "conserved_quantity", "intertwiner", "stationarity"}) e.verdicts[id] = reference(true);
  e.verdicts["invariant_env_state"] = reference(false);
  e.verdicts["strong_symmetry"] = reference(false);
  e.verdicts["global_symmetry"] = reference(false);
  e.residuals["strong_symmetry"] = {2.0 * std::sqrt(2.0), 1e-9, Provenance::computed};
  e.matrices["j_e"] = {diag({-1.0, 0.0}), Provenance::reference};
  c.notes = "psi_E = |0_E> is not invariant under pi_E; no strong symmetry.";
  s.cases.push_back(c);
  return s;
}

inline ComplexMatrix example6_unitary(bool prime) {
  const double r = 1.0 / std::sqrt(2.0);
  ComplexMatrix u(6, 6);
  if (prime) {
    u << 0, 0, 0, r, 0, r, 0, 0, 1, 0, 0, 0, -r, r, 0, 0, 0, 0, r, r, 0, 0, 0, 0, 0, 0, 0, -r, 0, r, 0, 0, 0, 0, 1,
        0;
  } else {
    u << 0, 0, 0, r, 0, r, -r, r, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, r, r, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, -r, 0,
        r;
  }
  const ComplexMatrix rv = reversal(6);
  return rv * u * rv;
}

inline Scenario example6() {
  Scenario s;
  s.name = "ex6";
  s.sys_rep = SymmetryRep::one_parameter(number_op(2));
  s.grid = TimeGrid{0.0, 0.0, 1};
  for (bool prime : {false, true}) {
    ScenarioCase c;
    c.name = prime ? "ex6-prime" : "ex6";
    c.dilation = make_dilation(2, {3}, ComplexVector(basis_vector(3, 0)), UnitaryFamily::constant(example6_unitary(prime)));
    c.basis_order = "entered as system {1,0} x environment {2,1,0}, stored reversed";
    auto& e = c.expected;
    e.minimal = reference(false);
    e.ranks = {{"env_support", reference_rank(2)}};
    ComplexMatrix support = prime ? diag({0.0, 1.0, 1.0}) : diag({1.0, 0.0, 1.0});
    e.matrices["env_support_projector"] = {support, Provenance::reference};
    for (auto id : {"covariance", "conserved_quantity", "intertwiner", "invariant_env_state", "strong_symmetry"})
      e.verdicts[id] = reference(true);
    e.verdicts["global_symmetry"] = reference(false);
    e.matrices["j_e"] = {diag({0.0, 0.0, -1.0}), Provenance::reference};
    c.notes = prime ? "psi_E lies outside the minimal support." : "Minimal support span{|0_E>, |2_E>}.";
    s.cases.push_back(c);
  }
  return s;
}

inline Scenario example7(double j) {
  const double twice = 2.0 * j;
  if (std::abs(twice - std::round(twice)) > 1e-12 || j < 0.5 || j > 2.0) {
    throw PreconditionError("example 7: j must be one of 1/2, 1, 3/2, 2");
  }
  Scenario s;
  s.name = "ex7";
  const auto spin = spin_matrices(j);
  const Index n = spin[0].rows();
  s.sys_rep = SymmetryRep::lie_algebra(spin);
  s.grid = TimeGrid{0.0, 0.0, 1};

  // V stacks J_1, J_2, J_3 with the environment index outermost.
  ComplexMatrix v(3 * n, n);
  for (Index a = 0; a < 3; ++a) v.middleRows(a * n, n) = spin[a] / std::sqrt(j * (j + 1.0));
  ComplexMatrix v_se = swap_factors(3, n) * v;
  ComplexVector psi = basis_vector(3, 0);

  ScenarioCase c;
  c.name = "ex7";
  c.dilation = make_dilation(n, {3}, psi, UnitaryFamily::constant(complete_to_unitary(v_se, n, psi)));
  c.basis_order = "dilated space reordered from H_E x H_S to H_S x H_E";
  auto& e = c.expected;
  e.minimal = reference(true);
  e.ranks = {{"env_support", reference_rank(3)}};
  for (auto id : {"covariance", "conserved_quantity", "intertwiner", "no_invariant_state"}) e.verdicts[id] = reference(true);
  e.verdicts["invariant_env_state"] = reference(false);
  e.verdicts["strong_symmetry"] = reference(false);
  const auto t = adjoint_generators();
  for (std::size_t k = 0; k < 3; ++k) e.matrices["j_e[" + std::to_string(k) + "]"] = {t[k], Provenance::reference};
  c.notes = "Landau-Streater channel; U_I completes V with psi_E = |0_E>.";
  s.cases.push_back(c);
  return s;
}

}  // namespace detail

inline Scenario build_example(int n, const ScenarioParams& p = {}) {
  switch (n) {
    case 1: return detail::example1();
    case 2: return detail::example2(p.c1);
    case 3: return detail::example3(p.gamma, p.dt, p.t);
    case 4: return detail::example4(p.gamma);
    case 5:
      if (!(p.gamma > 0.0)) throw PreconditionError("example 5: gamma must be positive");
      return detail::example5();
    case 6: return detail::example6();
    case 7: return detail::example7(p.j);
    default: throw PreconditionError("example number must be in 1..7");
  }
}

// ---------------------------------------------------------------------------
// Running.

struct NamedCertificate {
  std::string check;
  SymmetryCertificate cert;
};

struct ExpectationOutcome {
  std::string name;
  std::string expected;
  std::string actual;
  Provenance provenance = Provenance::reference;
  bool pass = false;
};

struct CaseReport {
  std::string name;
  DilationKind kind = DilationKind::fixed_unitary;
  bool purified = false;
  std::optional<bool> minimal;
  std::map<std::string, Index> ranks;
  std::optional<ComplexMatrix> env_support_projector;
  std::vector<ComplexMatrix> j_e;
  std::vector<NamedCertificate> certificates;
  std::vector<ExpectationOutcome> expectations;
  std::optional<std::string> error;  // pipeline aborted
};

struct GklsSummary {
  ComplexMatrix superoperator;
  ComplexMatrix rates;
  std::optional<ConvergenceReport> convergence;
};

struct ScenarioReport {
  std::string name;
  std::vector<CaseReport> cases;
  std::optional<GklsSummary> gkls;
  std::vector<ExpectationOutcome> expectations;  // scenario-level

  bool has_errors() const {
    for (const auto& c : cases)
      if (c.error) return true;
    return false;
  }

  // Required certificates that ran all pass.
  bool certificates_pass() const {
    if (has_errors()) return false;
    for (const auto& c : cases)
      for (const auto& nc : c.certificates)
        if (nc.cert.required && !nc.cert.pass) return false;
    return true;
  }

  bool expectations_pass() const {
    for (const auto& e : expectations)
      if (!e.pass) return false;
    for (const auto& c : cases)
      for (const auto& e : c.expectations)
        if (!e.pass) return false;
    return true;
  }
};

struct RunOptions {
  // Empty means every check.
  std::set<std::string> checks;

  bool wants(const std::string& id) const { return checks.empty() || checks.count(id) > 0; }
};

namespace detail {

inline std::string bool_text(bool b) { return b ? "pass" : "fail"; }

struct CaseContext {
  Dilation dilation;  // pure (purified when needed)
  std::optional<Subspace> k_par;
};

inline void add(CaseReport& r, const RunOptions& opt, std::string check, SymmetryCertificate cert,
                bool required = true) {
  if (!opt.wants(check)) return;
  cert.required = cert.required && required;
  r.certificates.push_back({std::move(check), std::move(cert)});
}

inline SymmetryCertificate covariance_over_times(const Dilation& d, const SymmetryRep& rep,
                                                 const std::vector<double>& times, double tol) {
  std::vector<Evidence> ev;
  double worst = 0.0;
  const bool fixed = d.kind() == DilationKind::fixed_unitary;
  for (double t : fixed ? std::vector<double>{times.front()} : times) {
    auto c = check_covariance(map_from_dilation(d, t), rep, tol);
    ev.push_back({"t=" + format_number(t), c.residual});
    worst = std::max(worst, c.residual);
  }
  return SymmetryCertificate::make(CertificateKind::weak_covariance, "map covariance over time grid", worst, tol,
                                   std::move(ev));
}

inline SymmetryCertificate with_label(SymmetryCertificate c, std::string label) {
  c.label = std::move(label);
  return c;
}

inline void run_hamiltonian(const Scenario& s, const ScenarioCase& sc, const std::vector<CaseContext>& done,
                            const std::vector<ScenarioCase>& all, const RunOptions& opt, CaseReport& r,
                            CaseContext& ctx) {
  const Dilation& d = ctx.dilation;
  const ComplexMatrix& h = *d.evolution.hamiltonian();
  const ComplexVector& psi = d.env_state.vector();
  const TensorSpace split = d.split_space();
  const auto times = s.times();
  const double tol = s.tolerance;

  MinimalityReport mr = is_minimal(d, times);
  r.minimal = mr.minimal;
  r.ranks["env_support"] = mr.support.rank();
  r.env_support_projector = mr.support.projector();

  KrylovResult kp = k_parallel(h, psi, split);
  KrylovResult k2 = k_parallel_order2(h, psi, split);
  ctx.k_par = kp.subspace;
  Subspace kperp = kp.perp();
  r.ranks["k_par"] = kp.rank();
  r.ranks["k_perp"] = kperp.rank();
  r.ranks["k_par2"] = k2.rank();

  MinimalizationResult m = minimalize(d, times);
  const Dilation& dm = m.dilation;
  const TensorSpace msplit = dm.split_space();
  const Subspace target_min = sc.order == KrylovOrder::maximal
                                  ? k_parallel(*dm.evolution.hamiltonian(), dm.env_state.vector(), msplit).subspace
                                  : k_parallel_order2(*dm.evolution.hamiltonian(), dm.env_state.vector(), msplit).subspace;
  std::vector<ComplexMatrix> j_e;
  double conserved = 0.0;
  std::vector<Evidence> conserved_ev;
  for (std::size_t k = 0; k < s.sys_rep.generators().size(); ++k) {
    auto sol = solve_env_generator(dm, s.sys_rep.generators()[k], target_min, tol);
    j_e.push_back(m.changed ? extend_env_generator(sol.j_e, m.support) : sol.j_e);
    conserved = std::max(conserved, sol.certificate.residual);
    conserved_ev.push_back({"generator " + std::to_string(k) + (sol.unique ? " (unique)" : " (min-norm)"),
                            sol.certificate.residual});
  }
  r.j_e = j_e;
  const Subspace& target = sc.order == KrylovOrder::maximal ? kp.subspace : k2.subspace;
  add(r, opt, "conserved_quantity",
      SymmetryCertificate::make(CertificateKind::conserved_quantity,
                                sc.order == KrylovOrder::maximal ? "[H, J] on K_par" : "[H, J] on K_par^(2)", conserved,
                                tol, conserved_ev, target.rank()));

  SymmetryRep env = SymmetryRep::matching(s.sys_rep, j_e);
  ProductRep ug(s.sys_rep, env);
  StrongSymmetryOptions so;
  so.tolerance = tol;

  if (sc.order == KrylovOrder::maximal) {
    so.label = "strong symmetry on K_par";
    so.require_invariant = true;
    add(r, opt, "strong_symmetry", strong_symmetry_on_subspace(h, ug, kp.subspace, so));
    so.require_invariant = false;
    so.label = "strong symmetry on full space";
    add(r, opt, "global_symmetry", strong_symmetry_on_subspace(h, ug, full_space(split), so), false);
    if (kperp.rank() > 0) {
      so.label = "strong symmetry on K_perp";
      add(r, opt, "perp_symmetry", strong_symmetry_on_subspace(h, ug, kperp, so), false);
    }
    add(r, opt, "block_diagonal", with_label(block_diagonal_check(h, kp.subspace, tol), "H off-block norm on K_par"));
  }
  so.label = "strong symmetry on K_par^(2)";
  add(r, opt, "strong_symmetry_k2", strong_symmetry_on_subspace(h, ug, k2.subspace, so));

  if (sc.reference_case) {
    for (std::size_t k = 0; k < done.size(); ++k) {
      if (all[k].name == *sc.reference_case && done[k].k_par) {
        add(r, opt, "reference_block_diagonal",
            with_label(block_diagonal_check(h, *done[k].k_par, tol), "H off-block norm on K_par of " + all[k].name),
            false);
      }
    }
  }

  if (sc.order == KrylovOrder::maximal) {
    std::vector<TimedIsometry> isos;
    for (double t : times) isos.push_back({t, isometry_from_dilation(d, t)});
    IntertwinerReport ir = verify_intertwiner(isos, s.sys_rep, env, tol);
    add(r, opt, "intertwiner", ir.certificate);
    add(r, opt, "stationarity", ir.stationarity);
  }
  add(r, opt, "invariant_env_state", check_invariant_env_state(env, psi, tol));
}

inline void run_unitary(const Scenario& s, const ScenarioCase& sc, const RunOptions& opt, CaseReport& r,
                        CaseContext& ctx) {
  const Dilation& d = ctx.dilation;
  const ComplexVector& psi = d.env_state.vector();
  const auto times = d.kind() == DilationKind::fixed_unitary ? std::vector<double>{s.times().front()} : s.times();
  const double tol = s.tolerance;
  const Index ds = d.dim_s;

  MinimalityReport mr = is_minimal(d, times);
  r.minimal = mr.minimal;
  r.ranks["env_support"] = mr.support.rank();
  r.env_support_projector = mr.support.projector();
  const ComplexMatrix& b = mr.support.basis();
  const ComplexMatrix embed = kron(identity(ds), b);

  std::vector<TimedIsometry> isos;
  std::vector<ComplexMatrix> reduced;
  for (double t : times) {
    isos.push_back({t, isometry_from_dilation(d, t)});
    reduced.push_back(embed.adjoint() * isos.back().iso.v);
  }
  std::vector<ComplexMatrix> j_e;
  std::vector<Evidence> fit_ev;
  double fit = 0.0;
  for (std::size_t k = 0; k < s.sys_rep.generators().size(); ++k) {
    EnvFit f = fit_env_generator(reduced, s.sys_rep.generators()[k], b.cols());
    j_e.push_back(extend_env_generator(f.j_e, mr.support));
    fit = std::max(fit, f.residual);
    fit_ev.push_back({"generator " + std::to_string(k) + (f.unique ? " (unique)" : " (min-norm)"), f.residual});
  }
  r.j_e = j_e;
  add(r, opt, "conserved_quantity",
      SymmetryCertificate::make(CertificateKind::conserved_quantity, "intertwiner fit on minimal support", fit, tol,
                                fit_ev, mr.support.rank()));

  SymmetryRep env = SymmetryRep::matching(s.sys_rep, j_e);
  ProductRep ug(s.sys_rep, env);
  IntertwinerReport ir = verify_intertwiner(isos, s.sys_rep, env, tol);
  add(r, opt, "intertwiner", ir.certificate);
  add(r, opt, "stationarity", ir.stationarity);
  add(r, opt, "invariant_env_state", check_invariant_env_state(env, psi, tol));
  if (env.generators().size() > 1 || sc.expected.verdicts.count("no_invariant_state")) {
    add(r, opt, "no_invariant_state", no_invariant_state(env));
  }

  const TensorSpace split = d.split_space();
  Subspace hs_psi = orthonormalize_columns(kron(identity(ds), ComplexMatrix(psi)), split);
  StrongSymmetryOptions so;
  so.tolerance = tol;
  so.label = "strong symmetry on H_S x span{psi_E}";
  add(r, opt, "strong_symmetry", strong_symmetry_on_subspace(d.evolution, times, ug, hs_psi, so));
  so.label = "strong symmetry on full space";
  add(r, opt, "global_symmetry", strong_symmetry_on_subspace(d.evolution, times, ug, full_space(split), so), false);
}

inline std::string matrix_summary(const ComplexMatrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

inline void compare(const Expectations& e, const std::map<std::string, const SymmetryCertificate*>& certs,
                    const std::map<std::string, Index>& ranks, const std::map<std::string, ComplexMatrix>& matrices,
                    const std::map<std::string, double>& scalars, std::optional<bool> minimal, const RunOptions& opt,
                    std::vector<ExpectationOutcome>& out) {
  for (const auto& [id, exp] : e.verdicts) {
    if (!opt.wants(id)) continue;
    auto it = certs.find(id);
    ExpectationOutcome o{"verdict:" + id, bool_text(exp.value), "not run", exp.provenance, false};
    if (it != certs.end()) {
      o.actual = bool_text(it->second->pass);
      o.pass = it->second->pass == exp.value;
    }
    out.push_back(o);
  }
  for (const auto& [id, exp] : e.residuals) {
    if (!opt.wants(id) && !scalars.count(id)) continue;
    double actual = std::numeric_limits<double>::quiet_NaN();
    if (auto it = certs.find(id); it != certs.end()) actual = it->second->residual;
    if (auto it = scalars.find(id); it != scalars.end()) actual = it->second;
    ExpectationOutcome o{"residual:" + id, format_number(exp.value) + " +- " + format_number(exp.tolerance),
                         format_number(actual), exp.provenance, std::abs(actual - exp.value) <= exp.tolerance};
    out.push_back(o);
  }
  for (const auto& [id, exp] : e.ranks) {
    auto it = ranks.find(id);
    ExpectationOutcome o{"rank:" + id, std::to_string(exp.value), "not run", exp.provenance, false};
    if (it != ranks.end()) {
      o.actual = std::to_string(it->second);
      o.pass = it->second == exp.value;
    }
    out.push_back(o);
  }
  for (const auto& [id, exp] : e.matrices) {
    auto it = matrices.find(id);
    ExpectationOutcome o{"matrix:" + id, matrix_summary(exp.value), "not run", exp.provenance, false};
    if (it != matrices.end()) {
      bool same_shape = it->second.rows() == exp.value.rows() && it->second.cols() == exp.value.cols();
      double dist = same_shape ? (it->second - exp.value).norm() : std::numeric_limits<double>::infinity();
      o.actual = "distance " + format_number(dist);
      o.pass = dist <= 1e-9;
    }
    out.push_back(o);
  }
  if (e.minimal) {
    ExpectationOutcome o{"minimal", e.minimal->value ? "true" : "false", "not run", e.minimal->provenance, false};
    if (minimal) {
      o.actual = *minimal ? "true" : "false";
      o.pass = *minimal == e.minimal->value;
    }
    out.push_back(o);
  }
}

}  // namespace detail

// Runs the pipeline matching each case's dilation kind and compares with the
// recorded expectations. Failures are report entries, never exceptions.
inline ScenarioReport run_scenario(const Scenario& s, const RunOptions& opt = {}) {
  ScenarioReport rep;
  rep.name = s.name;
  std::vector<detail::CaseContext> done;
  std::map<std::string, double> scenario_scalars;
  std::map<std::string, ComplexMatrix> scenario_matrices;

  for (const auto& sc : s.cases) {
    CaseReport r;
    r.name = sc.name;
    r.kind = sc.dilation.kind();
    detail::CaseContext ctx;
    ctx.dilation = sc.dilation;
    if (!sc.dilation.env_state.is_pure()) {
      ctx.dilation = purify(sc.dilation);
      r.purified = true;
    }
    std::map<std::string, double> scalars;
    try {
      if (sc.order == KrylovOrder::maximal || !sc.collision) {
        detail::add(r, opt, "covariance",
                    detail::covariance_over_times(sc.dilation, s.sys_rep, s.times(), s.tolerance));
      }
      if (!s.sys_rep.has_generators()) {
        // Sampled elements alone only support the map-level check.
      } else if (ctx.dilation.evolution.hamiltonian()) {
        detail::run_hamiltonian(s, sc, done, s.cases, opt, r, ctx);
      } else {
        detail::run_unitary(s, sc, opt, r, ctx);
      }
      if (sc.collision && s.sys_rep.generators().size() == 1) {
        CollisionSymmetryReport cr = collision_symmetry_pipeline(*sc.collision, s.sys_rep.generators().front(),
                                                                 s.tolerance);
        detail::add(r, opt, "gkls_covariance", cr.generator_covariance);
        if (!rep.gkls) {
          GklsSummary g;
          g.superoperator = cr.gkls.superoperator().matrix;
          g.rates = cr.gkls.rates;
          if (s.convergence) g.convergence = semigroup_convergence(*sc.collision, s.convergence->t, s.convergence->dts);
          if (g.convergence && g.convergence->order) scenario_scalars["convergence_order"] = *g.convergence->order;
          scenario_matrices["gkls_superoperator"] = g.superoperator;
          rep.gkls = g;
        }
      }
    } catch (const std::exception& ex) {
      r.error = ex.what();
      r.expectations.push_back({"pipeline", "completes", ex.what(), Provenance::computed, false});
    }
    std::map<std::string, const SymmetryCertificate*> certs;
    for (const auto& nc : r.certificates) certs[nc.check] = &nc.cert;
    std::map<std::string, ComplexMatrix> matrices;
    if (r.j_e.size() == 1) matrices["j_e"] = r.j_e.front();
    for (std::size_t k = 0; k < r.j_e.size(); ++k) matrices["j_e[" + std::to_string(k) + "]"] = r.j_e[k];
    if (r.env_support_projector) matrices["env_support_projector"] = *r.env_support_projector;
    detail::compare(sc.expected, certs, r.ranks, matrices, scalars, r.minimal, opt, r.expectations);
    done.push_back(std::move(ctx));
    rep.cases.push_back(std::move(r));
  }
  detail::compare(s.expected, {}, {}, scenario_matrices, scenario_scalars, std::nullopt, opt, rep.expectations);
  return rep;
}

}  // namespace dilation_lab
