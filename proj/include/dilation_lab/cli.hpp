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

#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dilation_lab/io.hpp"
#include "dilation_lab/scenarios.hpp"

namespace dilation_lab::cli {

enum ExitCode : int { kOk = 0, kCertificateFailure = 1, kUsageError = 2 };

inline constexpr const char* kExitCodeHelp =
    "Exit codes:\n"
    "  0  every required certificate passed (with --expect-fail: every recorded expectation met)\n"
    "  1  a required certificate failed (with --expect-fail: an expectation was not met)\n"
    "  2  parse, validation or usage error";

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

inline double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    double x = std::stod(s, &pos);
    if (pos != s.size() || !std::isfinite(x)) throw std::invalid_argument(s);
    return x;
  } catch (const std::exception&) {
    throw DocumentError(what + ": '" + s + "' is not a number");
  }
}

inline void apply_time_grid(Scenario& s, const std::string& spec) {
  if (spec.find(':') != std::string::npos) {
    auto parts = split(spec, ':');
    if (parts.size() != 3) throw DocumentError("--time-grid: expected start:stop:count");
    double count = parse_double(parts[2], "--time-grid count");
    if (count < 1 || count != std::floor(count)) throw DocumentError("--time-grid: count must be a positive integer");
    s.grid = TimeGrid{parse_double(parts[0], "--time-grid start"), parse_double(parts[1], "--time-grid stop"),
                      static_cast<int>(count)};
    s.explicit_times.clear();
  } else {
    s.explicit_times.clear();
    for (const auto& p : split(spec, ',')) s.explicit_times.push_back(parse_double(p, "--time-grid"));
    if (s.explicit_times.empty()) throw DocumentError("--time-grid: no times given");
  }
}

inline void apply_g_samples(Scenario& s, const std::string& spec) {
  const auto& gens = s.sys_rep.generators();
  if (gens.empty()) throw DocumentError("--g-samples: the symmetry has no generators");
  const bool is_count = spec.find(',') == std::string::npos && spec.find('.') == std::string::npos &&
                        !spec.empty() && std::all_of(spec.begin(), spec.end(), ::isdigit);
  if (gens.size() == 1) {
    std::vector<double> gs;
    if (is_count) {
      int n = std::stoi(spec);
      if (n < 1) throw DocumentError("--g-samples: count must be positive");
      gs = uniform_g_samples(n);
    } else {
      for (const auto& p : split(spec, ',')) gs.push_back(parse_double(p, "--g-samples"));
    }
    s.sys_rep = SymmetryRep::one_parameter(gens.front(), gs);
    return;
  }
  if (!is_count || gens.size() != 3) throw DocumentError("--g-samples: three-generator symmetries accept a count only");
  auto axes = su2_default_samples();
  const std::size_t n = static_cast<std::size_t>(std::stoi(spec));
  if (n < 1 || n > axes.size()) {
    throw DocumentError("--g-samples: count must be in 1.." + std::to_string(axes.size()));
  }
  axes.resize(n);
  s.sys_rep = SymmetryRep::lie_algebra(gens, axes);
}

inline std::set<std::string> parse_checks(const std::string& spec) {
  if (spec == "covariance-only") return {"covariance"};
  std::set<std::string> out;
  for (const auto& p : split(spec, ',')) {
    const auto& ids = check_ids();
    if (std::find(ids.begin(), ids.end(), p) == ids.end()) throw DocumentError("--check: unknown check id '" + p + "'");
    out.insert(p);
  }
  return out;
}

}  // namespace detail

struct Streams {
  std::ostream& out = std::cout;
  std::ostream& err = std::cerr;
};

struct CommonFlags {
  std::optional<double> tol;
  std::string time_grid;
  std::string g_samples;
  std::string check;
  std::string json_path;
  bool expect_fail = false;
};

inline void emit(const Json& report, const std::string& json_path, Streams io) {
  const std::string text = report.dump(2) + "\n";
  if (json_path.empty()) {
    io.out << text;
  } else {
    write_atomic(json_path, text);
  }
}

inline int run_and_report(Scenario s, std::set<std::string> checks, const CommonFlags& f, const std::string& command,
                          Streams io) {
  if (f.tol) {
    if (!(*f.tol >= 0)) throw DocumentError("--tol: must be non-negative");
    s.tolerance = *f.tol;
  }
  if (!f.time_grid.empty()) detail::apply_time_grid(s, f.time_grid);
  if (!f.g_samples.empty()) detail::apply_g_samples(s, f.g_samples);
  if (!f.check.empty()) checks = detail::parse_checks(f.check);
  for (const auto& c : s.cases) {
    for (double t : s.times()) {
      if (!c.dilation.evolution.evaluable_at(t)) {
        throw DocumentError("case '" + c.name + "': no unitary sample at t = " + format_number(t));
      }
    }
  }
  RunOptions opt;
  opt.checks = std::move(checks);
  ScenarioReport rep = run_scenario(s, opt);
  Json j = report_to_json(rep, command);
  j["expect_fail"] = f.expect_fail;
  emit(j, f.json_path, io);
  for (const auto& c : rep.cases) {
    if (c.error) {
      io.err << "error: case '" << c.name << "': " << *c.error << "\n";
      return kUsageError;
    }
  }
  const bool ok = f.expect_fail ? rep.expectations_pass() : rep.certificates_pass();
  io.err << rep.name << ": " << (ok ? "ok" : "FAILED")
         << (f.expect_fail ? " (expectations)" : " (required certificates)") << "\n";
  return ok ? kOk : kCertificateFailure;
}

inline Json inspect_document(const Document& doc) {
  const Scenario& s = doc.scenario;
  Json cases = Json::array();
  for (const auto& c : s.cases) {
    Json cj = {{"name", c.name},
               {"system_dim", c.dilation.dim_s},
               {"environment", c.dilation.env_factors},
               {"env_state", c.dilation.env_state.is_pure() ? "pure" : "mixed"},
               {"evolution", to_string(c.dilation.kind())},
               {"basis_order", c.basis_order},
               {"krylov_order", c.order == KrylovOrder::order2 ? "order2" : "maximal"},
               {"collision", c.collision.has_value()},
               {"expectations", c.expected.verdicts.size() + c.expected.ranks.size() + c.expected.residuals.size() +
                                    c.expected.matrices.size() + (c.expected.minimal ? 1 : 0)}};
    cases.push_back(cj);
  }
  Json times = s.times();
  return {{"name", s.name},
          {"symmetry", {{"dim", s.sys_rep.dim()},
                        {"generators", s.sys_rep.generators().size()},
                        {"elements", s.sys_rep.elements().size()}}},
          {"tolerance", s.tolerance},
          {"times", times.size()},
          {"time_range", {s.times().front(), s.times().back()}},
          {"checks", doc.checks},
          {"cases", cases}};
}

// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, Streams io = {}) {
  CLI::App app{"Symmetry certification for quantum maps and their dilations", "dilation-lab"};
  app.footer(kExitCodeHelp);
  app.require_subcommand(1);
  app.set_version_flag("--version", "dilation-lab 1.0.0");

  CommonFlags f;
  std::string path;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--tol", f.tol, "Certificate tolerance");
    sub->add_option("--time-grid", f.time_grid, "start:stop:count or a comma-separated list of times");
    sub->add_option("--g-samples", f.g_samples, "Number of group samples or a comma-separated list of g values");
    sub->add_option("--check", f.check, "covariance-only or a comma-separated list of check ids");
    sub->add_option("--json", f.json_path, "Write the report to this file instead of stdout");
    sub->add_flag("--expect-fail", f.expect_fail, "Exit 0 iff every recorded expectation, pass or fail, is met");
  };

  auto* verify = app.add_subcommand("verify", "Certify the symmetries of a dilation document");
  verify->add_option("document", path, "Dilation document (JSON)")->required();
  add_common(verify);

  int example_n = 0;
  ScenarioParams params;
  std::string export_path;
  auto* example = app.add_subcommand("example", "Build, certify and optionally export a built-in scenario");
  example->add_option("n", example_n, "Scenario number 1..7")->required()->check(CLI::Range(1, 7));
  example->add_option("--c1", params.c1, "Environment population c1 in (0, 1) (scenario 2)");
  example->add_option("--gamma", params.gamma, "Decay rate gamma > 0 (scenarios 3-5)");
  example->add_option("--j", params.j, "Spin j in {0.5, 1, 1.5, 2} (scenario 7)");
  example->add_option("--deltat", params.dt, "Collision time step; convergence uses {2 dt, dt, dt/2} (scenario 3)");
  example->add_option("--t", params.t, "Final time of the convergence study (scenario 3)");
  example->add_option("--export", export_path, "Write the scenario as a dilation document");
  add_common(example);

  auto* krylov = app.add_subcommand("krylov", "Report K_par and K_par^(2) for Hamiltonian dilations");
  krylov->add_option("document", path, "Dilation document (JSON)")->required();
  krylov->add_option("--json", f.json_path, "Write the report to this file instead of stdout");

  double gkls_t = 0.0;
  std::string gkls_dts;
  int steps = 0;
  auto* gkls = app.add_subcommand("gkls", "Derive the GKLS generator of a collision model and test convergence");
  gkls->add_option("document", path, "Dilation document with a collision block")->required();
  gkls->add_option("--t", gkls_t, "Final time (default: document convergence t, else 1)");
  gkls->add_option("--dts", gkls_dts, "Comma-separated time steps (default: document convergence dts)");
  gkls->add_option("--steps", steps, "Also emit a trajectory of this many collision steps")->check(CLI::NonNegativeNumber);
  gkls->add_option("--json", f.json_path, "Write the report to this file instead of stdout");

  auto* inspect = app.add_subcommand("inspect", "Summarize a dilation document");
  inspect->add_option("document", path, "Dilation document (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    io.out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    io.out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion& e) {
    io.out << e.what() << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    io.err << "error: " << e.what() << "\n";
    return kUsageError;
  }

  try {
    if (verify->parsed()) {
      Document doc = load_document(path);
      return run_and_report(doc.scenario, doc.checks, f, "verify", io);
    }
    if (example->parsed()) {
      Scenario s = build_example(example_n, params);
      if (!export_path.empty()) {
        write_atomic(export_path, scenario_to_json(s).dump(2) + "\n");
      }
      return run_and_report(s, {}, f, "example", io);
    }
    if (krylov->parsed()) {
      Document doc = load_document(path);
      Json cases = Json::array();
      for (const auto& c : doc.scenario.cases) cases.push_back(krylov_report(c));
      emit({{"schema_version", kSchemaVersion}, {"command", "krylov"}, {"name", doc.scenario.name}, {"cases", cases}},
           f.json_path, io);
      return kOk;
    }
    if (gkls->parsed()) {
      Document doc = load_document(path);
      const Scenario& s = doc.scenario;
      const ScenarioCase* c = nullptr;
      for (const auto& sc : s.cases) {
        if (sc.collision) {
          c = &sc;
          break;
        }
      }
      if (!c) throw DocumentError("document has no collision block");
      const CollisionSpec& spec = *c->collision;
      double t = gkls_t > 0 ? gkls_t : (s.convergence ? s.convergence->t : 1.0);
      std::vector<double> dts;
      if (!gkls_dts.empty()) {
        for (const auto& p : detail::split(gkls_dts, ',')) dts.push_back(detail::parse_double(p, "--dts"));
      } else if (s.convergence) {
        dts = s.convergence->dts;
      } else {
        dts = {2.0 * spec.dt, spec.dt, 0.5 * spec.dt};
      }
      for (double d : dts) {
        if (!(d > 0)) throw DocumentError("--dts: time steps must be positive");
      }
      Json out = {{"schema_version", kSchemaVersion}, {"command", "gkls"}, {"name", s.name}, {"case", c->name}};
      out["generator"] = gkls_to_json(derive_gkls(spec));
      out["convergence"] = convergence_to_json(semigroup_convergence(spec, t, dts));
      if (steps > 0) {
        ComplexMatrix rho0 = matrix_unit(spec.dim_s, spec.dim_s - 1, spec.dim_s - 1);
        out["trajectory"] = trajectory_to_json(iterate(collision_step(spec), rho0, steps), spec.dt);
      }
      emit(out, f.json_path, io);
      return kOk;
    }
    if (inspect->parsed()) {
      emit(inspect_document(load_document(path)), "", io);
      return kOk;
    }
  } catch (const DocumentError& e) {
    io.err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << "\n";
    return kUsageError;
  }
  return kUsageError;
}

}  // namespace dilation_lab::cli
