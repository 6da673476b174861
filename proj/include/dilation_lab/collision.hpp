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

#include "dilation_lab/krylov.hpp"
#include "dilation_lab/maps.hpp"
#include "dilation_lab/parallel.hpp"
#include "dilation_lab/symmetry.hpp"
#include "dilation_lab/tensor.hpp"

namespace dilation_lab {

struct InteractionTerm {
  ComplexMatrix a;  // system factor
  ComplexMatrix b;  // ancilla factor
};

// Repeated collisions with identical ancillas in rho_e:
// U = exp(-i g_I dt H_I), H_I = sum_a A_a kron B_a, g_I = sqrt(gamma / dt).
struct CollisionSpec {
  Index dim_s = 1;
  Index dim_e = 1;
  std::vector<InteractionTerm> terms;
  ComplexMatrix rho_e;
  double gamma = 1.0;
  double dt = 0.05;

  ComplexMatrix interaction() const {
    ComplexMatrix h = ComplexMatrix::Zero(dim_s * dim_e, dim_s * dim_e);
    for (const auto& term : terms) h += kron(term.a, term.b);
    return h;
  }

  double coupling() const { return std::sqrt(gamma / dt); }

  void validate() const {
    if (dim_s < 1 || dim_e < 1) throw DimensionError("CollisionSpec: dimensions must be positive");
    if (!(gamma > 0.0) || !(dt > 0.0)) throw PreconditionError("CollisionSpec: gamma and dt must be positive");
    if (rho_e.rows() != dim_e || rho_e.cols() != dim_e) throw DimensionError("CollisionSpec: rho_e dim mismatch");
    if (!is_hermitian(rho_e) || std::abs(rho_e.trace() - Complex{1.0, 0.0}) > kNormTolerance) {
      throw PreconditionError("CollisionSpec: rho_e is not a unit-trace Hermitian matrix");
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho_e, Eigen::EigenvaluesOnly);
    if (es.eigenvalues()(0) < -kNormTolerance) throw PreconditionError("CollisionSpec: rho_e is not positive");
    for (std::size_t k = 0; k < terms.size(); ++k) {
      const auto& t = terms[k];
      if (t.a.rows() != dim_s || t.a.cols() != dim_s || t.b.rows() != dim_e || t.b.cols() != dim_e) {
        throw DimensionError("CollisionSpec: term " + std::to_string(k) + " has wrong operator dims");
      }
      if (std::abs((t.b * rho_e).trace()) > 1e-10) {
        throw PreconditionError("CollisionSpec: Tr[B_" + std::to_string(k) + " rho_E] != 0");
      }
    }
    if (!is_hermitian(interaction())) throw PreconditionError("CollisionSpec: interaction is not Hermitian");
  }
};

inline ComplexMatrix collision_unitary(const CollisionSpec& spec) {
  return matexp(spec.interaction(), Complex{0.0, -std::sqrt(spec.gamma * spec.dt)});
}

inline Superoperator collision_step(const CollisionSpec& spec) {
  spec.validate();
  Dilation d;
  d.dim_s = spec.dim_s;
  d.env_factors = {spec.dim_e};
  d.env_state = spec.rho_e;
  d.evolution = UnitaryFamily::constant(collision_unitary(spec));
  return map_from_dilation(d, 0.0);
}

// rho_0, rho_1, ..., rho_n.
inline std::vector<ComplexMatrix> iterate(const Superoperator& step, const ComplexMatrix& rho0, int n) {
  if (n < 0) throw PreconditionError("iterate: negative step count");
  std::vector<ComplexMatrix> out{rho0};
  ComplexVector v = vectorize(rho0);
  for (int k = 0; k < n; ++k) {
    v = step.matrix * v;
    out.push_back(unvectorize(v, step.dim_s));
  }
  return out;
}

// L = -i[H, .] + gamma sum mu_{ab} (A_b . A_a^dagger - 1/2 {A_a^dagger A_b, .})
struct GKLSGenerator {
  ComplexMatrix hamiltonian;
  std::vector<ComplexMatrix> jump_ops;
  ComplexMatrix rates;
  double gamma = 1.0;

  Index dim() const { return hamiltonian.rows(); }

  Superoperator superoperator() const {
    const Index d = dim();
    const ComplexMatrix id = identity(d);
    ComplexMatrix l = -kI * (kron(id, hamiltonian) - kron(ComplexMatrix(hamiltonian.transpose()), id));
    for (std::size_t a = 0; a < jump_ops.size(); ++a) {
      for (std::size_t b = 0; b < jump_ops.size(); ++b) {
        Complex mu = rates(static_cast<Index>(a), static_cast<Index>(b));
        if (mu == Complex{0.0, 0.0}) continue;
        const ComplexMatrix& A = jump_ops[a];
        const ComplexMatrix& B = jump_ops[b];
        ComplexMatrix ab = A.adjoint() * B;
        l += gamma * mu *
             (kron(ComplexMatrix(A.conjugate()), B) - 0.5 * kron(id, ab) - 0.5 * kron(ComplexMatrix(ab.transpose()), id));
      }
    }
    return {d, l};
  }
};

// mu_{ab} = Tr[B_a^dagger B_b rho_E]; jump operators are the A_a.
inline GKLSGenerator derive_gkls(const CollisionSpec& spec) {
  spec.validate();
  GKLSGenerator g;
  g.hamiltonian = ComplexMatrix::Zero(spec.dim_s, spec.dim_s);
  g.gamma = spec.gamma;
  const Index n = static_cast<Index>(spec.terms.size());
  g.rates = ComplexMatrix::Zero(n, n);
  for (Index a = 0; a < n; ++a) {
    g.jump_ops.push_back(spec.terms[a].a);
    for (Index b = 0; b < n; ++b) g.rates(a, b) = (spec.terms[a].b.adjoint() * spec.terms[b].b * spec.rho_e).trace();
  }
  return g;
}

struct ConvergenceEntry {
  double dt = 0.0;
  int steps = 0;
  double residual_time = 0.0;  // t - steps * dt
  double frobenius_error = 0.0;
  double max_entry_error = 0.0;
};

struct ConvergenceReport {
  double t = 0.0;
  std::vector<ConvergenceEntry> entries;
  std::optional<double> order;  // least-squares slope of log error against log dt
};

// ||phi_dt^n - exp(L t)|| with n = round(t / dt).
inline ConvergenceReport semigroup_convergence(const CollisionSpec& spec, double t, const std::vector<double>& dts) {
  spec.validate();
  if (dts.empty()) throw PreconditionError("semigroup_convergence: no time steps");
  const ComplexMatrix exact = matexp(derive_gkls(spec).superoperator().matrix, Complex{t, 0.0});
  ConvergenceReport rep;
  rep.t = t;
  rep.entries = parallel_map(dts.size(), [&](std::size_t i) {
    CollisionSpec s = spec;
    s.dt = dts[i];
    ConvergenceEntry e;
    e.dt = dts[i];
    e.steps = static_cast<int>(std::lround(t / dts[i]));
    e.residual_time = t - e.steps * dts[i];
    ComplexMatrix step = collision_step(s).matrix;
    ComplexMatrix power = identity(step.rows());
    for (int k = 0; k < e.steps; ++k) power = step * power;
    e.frobenius_error = (power - exact).norm();
    e.max_entry_error = max_abs(power - exact);
    return e;
  });
  std::vector<double> xs, ys;
  for (const auto& e : rep.entries) {
    if (e.frobenius_error > 0.0) {
      xs.push_back(std::log(e.dt));
      ys.push_back(std::log(e.frobenius_error));
    }
  }
  if (xs.size() >= 2) {
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) mx += xs[k], my += ys[k];
    mx /= xs.size();
    my /= ys.size();
    double sxy = 0, sxx = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) sxy += (xs[k] - mx) * (ys[k] - my), sxx += (xs[k] - mx) * (xs[k] - mx);
    if (sxx > 0) rep.order = sxy / sxx;
  }
  return rep;
}

struct CollisionSymmetryReport {
  GKLSGenerator gkls;
  SymmetryCertificate generator_covariance;
  SymmetryCertificate step_covariance;
  Dilation dilation;  // pure-state dilation driven by H_I
  KrylovResult k_par2;
  EnvGeneratorSolution env;
  ComplexMatrix j_e;  // on the full environment of `dilation`
  SymmetryCertificate invariant_env_state;
  SymmetryCertificate strong;
};

// Pure-state dilation of one collision: (H_I, psi_E), purified when rho_E is mixed.
inline Dilation collision_dilation(const CollisionSpec& spec) {
  spec.validate();
  Dilation d;
  d.dim_s = spec.dim_s;
  d.env_factors = {spec.dim_e};
  d.evolution = UnitaryFamily::generator(spec.interaction());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(spec.rho_e);
  if (std::abs(es.eigenvalues()(spec.dim_e - 1) - 1.0) <= kNormTolerance) {
    ComplexVector psi = es.eigenvectors().col(spec.dim_e - 1);
    fix_phase(psi);
    d.env_state = psi;
    return d;
  }
  d.env_state = spec.rho_e;
  return purify(d);
}

inline CollisionSymmetryReport collision_symmetry_pipeline(const CollisionSpec& spec, const ComplexMatrix& j_s,
                                                           double tol = kCertificateTolerance) {
  spec.validate();
  CollisionSymmetryReport rep;
  rep.gkls = derive_gkls(spec);
  SymmetryRep sys = SymmetryRep::one_parameter(j_s);
  rep.generator_covariance = check_covariance(rep.gkls.superoperator(), sys, tol);
  rep.generator_covariance.label = "GKLS generator covariance";
  rep.step_covariance = check_covariance(collision_step(spec), sys, tol);
  rep.step_covariance.label = "collision step covariance";

  rep.dilation = collision_dilation(spec);
  const ComplexVector& psi = rep.dilation.env_state.vector();
  const TensorSpace split = rep.dilation.split_space();
  rep.k_par2 = k_parallel_order2(*rep.dilation.evolution.hamiltonian(), psi, split);

  MinimalizationResult m = minimalize(rep.dilation, TimeGrid{}.times());
  const Dilation& dm = m.dilation;
  KrylovResult k2_min = k_parallel_order2(*dm.evolution.hamiltonian(), dm.env_state.vector(), dm.split_space());
  rep.env = solve_env_generator(dm, j_s, k2_min.subspace, tol);
  rep.j_e = m.changed ? extend_env_generator(rep.env.j_e, m.support) : rep.env.j_e;

  SymmetryRep env = SymmetryRep::one_parameter(rep.j_e);
  rep.invariant_env_state = check_invariant_env_state(env, psi, tol);
  StrongSymmetryOptions opt;
  opt.tolerance = tol;
  opt.label = "strong symmetry on K_par^(2)";
  rep.strong = strong_symmetry_on_subspace(*rep.dilation.evolution.hamiltonian(), ProductRep(sys, env),
                                           rep.k_par2.subspace, opt);
  return rep;
}

}  // namespace dilation_lab
