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

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "dilation_lab/collision.hpp"
#include "dilation_lab/krylov.hpp"
#include "dilation_lab/scenarios.hpp"

namespace dilation_lab {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

// Malformed or inconsistent document.
class DocumentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Numeric payloads: complex numbers are [re, im], matrices are row-major.

inline Json complex_to_json(Complex z) { return Json::array({z.real(), z.imag()}); }

inline Json vector_to_json(const ComplexVector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(complex_to_json(v(i)));
  return out;
}

inline Json matrix_to_json(const ComplexMatrix& m) {
  Json out = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(complex_to_json(m(i, j)));
    out.push_back(std::move(row));
  }
  return out;
}

inline double number_from_json(const Json& j, const std::string& where) {
  if (!j.is_number()) throw DocumentError(where + ": expected a number");
  double x = j.get<double>();
  if (!std::isfinite(x)) throw DocumentError(where + ": number is not finite");
  return x;
}

inline Complex complex_from_json(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) throw DocumentError(where + ": expected [re, im]");
  return {number_from_json(j[0], where), number_from_json(j[1], where)};
}

inline ComplexVector vector_from_json(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw DocumentError(where + ": expected a non-empty array of [re, im]");
  ComplexVector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = complex_from_json(j[i], where);
  return v;
}

inline ComplexMatrix matrix_from_json(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty()) {
    throw DocumentError(where + ": expected a non-empty row-major matrix");
  }
  const std::size_t cols = j[0].size();
  ComplexMatrix m(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw DocumentError(where + ": ragged matrix row " + std::to_string(r));
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Index>(r), static_cast<Index>(c)) = complex_from_json(j[r][c], where);
    }
  }
  return m;
}

inline ComplexMatrix square_from_json(const Json& j, Index n, const std::string& where) {
  ComplexMatrix m = matrix_from_json(j, where);
  if (m.rows() != n || m.cols() != n) {
    throw DocumentError(where + ": expected " + std::to_string(n) + "x" + std::to_string(n) + " matrix, got " +
                        std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  return m;
}

namespace detail {

inline void check_keys(const Json& obj, const std::string& where, std::initializer_list<const char*> allowed,
                       std::initializer_list<const char*> required = {}) {
  if (!obj.is_object()) throw DocumentError(where + ": expected an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : allowed) known = known || item.key() == k;
    if (!known) throw DocumentError(where + ": unknown field '" + item.key() + "'");
  }
  for (const char* k : required) {
    if (!obj.contains(k)) throw DocumentError(where + ": missing field '" + k + "'");
  }
}

inline std::string string_field(const Json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) return {};
  if (!obj[key].is_string()) throw DocumentError(where + "." + key + ": expected a string");
  return obj[key].get<std::string>();
}

inline Index index_from_json(const Json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<long long>() < 0) throw DocumentError(where + ": expected a non-negative integer");
  return static_cast<Index>(j.get<long long>());
}

inline std::vector<double> numbers_from_json(const Json& j, const std::string& where) {
  if (!j.is_array()) throw DocumentError(where + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : j) out.push_back(number_from_json(x, where));
  return out;
}

inline Provenance provenance_from_json(const Json& obj, const std::string& where) {
  std::string p = string_field(obj, "provenance", where);
  if (p.empty() || p == "reference") return Provenance::reference;
  if (p == "computed") return Provenance::computed;
  throw DocumentError(where + ".provenance: expected 'reference' or 'computed'");
}

inline bool is_known_check(const std::string& id) {
  const auto& ids = check_ids();
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

inline bool is_matrix_key(const std::string& k) {
  if (k == "j_e" || k == "env_support_projector" || k == "gkls_superoperator") return true;
  if (k.size() > 5 && k.rfind("j_e[", 0) == 0 && k.back() == ']') {
    return std::all_of(k.begin() + 4, k.end() - 1, [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
  }
  return false;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Expectations.

inline Json expectations_to_json(const Expectations& e) {
  Json out = Json::object();
  if (!e.verdicts.empty()) {
    Json v = Json::object();
    for (const auto& [k, x] : e.verdicts) v[k] = {{"value", x.value}, {"provenance", to_string(x.provenance)}};
    out["verdicts"] = v;
  }
  if (!e.ranks.empty()) {
    Json v = Json::object();
    for (const auto& [k, x] : e.ranks) v[k] = {{"value", x.value}, {"provenance", to_string(x.provenance)}};
    out["ranks"] = v;
  }
  if (!e.residuals.empty()) {
    Json v = Json::object();
    for (const auto& [k, x] : e.residuals) {
      v[k] = {{"value", x.value}, {"tolerance", x.tolerance}, {"provenance", to_string(x.provenance)}};
    }
    out["residuals"] = v;
  }
  if (!e.matrices.empty()) {
    Json v = Json::object();
    for (const auto& [k, x] : e.matrices) {
      v[k] = {{"value", matrix_to_json(x.value)}, {"provenance", to_string(x.provenance)}};
    }
    out["matrices"] = v;
  }
  if (e.minimal) out["minimal"] = {{"value", e.minimal->value}, {"provenance", to_string(e.minimal->provenance)}};
  return out;
}

inline Expectations expectations_from_json(const Json& j, const std::string& where) {
  detail::check_keys(j, where, {"verdicts", "ranks", "residuals", "matrices", "minimal"});
  Expectations e;
  auto entries = [&](const char* key) {
    std::vector<std::pair<std::string, Json>> out;
    if (!j.contains(key)) return out;
    if (!j[key].is_object()) throw DocumentError(where + "." + key + ": expected an object");
    for (const auto& item : j[key].items()) out.emplace_back(item.key(), item.value());
    return out;
  };
  for (const auto& [k, v] : entries("verdicts")) {
    const std::string w = where + ".verdicts." + k;
    if (!detail::is_known_check(k)) throw DocumentError(w + ": unknown check id");
    detail::check_keys(v, w, {"value", "provenance"}, {"value"});
    if (!v["value"].is_boolean()) throw DocumentError(w + ".value: expected a boolean");
    e.verdicts[k] = {v["value"].get<bool>(), detail::provenance_from_json(v, w)};
  }
  for (const auto& [k, v] : entries("ranks")) {
    const std::string w = where + ".ranks." + k;
    if (k != "k_par" && k != "k_perp" && k != "k_par2" && k != "env_support") throw DocumentError(w + ": unknown rank");
    detail::check_keys(v, w, {"value", "provenance"}, {"value"});
    e.ranks[k] = {detail::index_from_json(v["value"], w + ".value"), detail::provenance_from_json(v, w)};
  }
  for (const auto& [k, v] : entries("residuals")) {
    const std::string w = where + ".residuals." + k;
    if (!detail::is_known_check(k) && k != "convergence_order") throw DocumentError(w + ": unknown residual");
    detail::check_keys(v, w, {"value", "tolerance", "provenance"}, {"value", "tolerance"});
    e.residuals[k] = {number_from_json(v["value"], w + ".value"), number_from_json(v["tolerance"], w + ".tolerance"),
                      detail::provenance_from_json(v, w)};
  }
  for (const auto& [k, v] : entries("matrices")) {
    const std::string w = where + ".matrices." + k;
    if (!detail::is_matrix_key(k)) throw DocumentError(w + ": unknown matrix");
    detail::check_keys(v, w, {"value", "provenance"}, {"value"});
    e.matrices[k] = {matrix_from_json(v["value"], w + ".value"), detail::provenance_from_json(v, w)};
  }
  if (j.contains("minimal")) {
    const Json& v = j["minimal"];
    detail::check_keys(v, where + ".minimal", {"value", "provenance"}, {"value"});
    if (!v["value"].is_boolean()) throw DocumentError(where + ".minimal.value: expected a boolean");
    e.minimal = Expected<bool>{v["value"].get<bool>(), detail::provenance_from_json(v, where + ".minimal")};
  }
  return e;
}

// ---------------------------------------------------------------------------
// Documents.

struct Document {
  Scenario scenario;
  std::set<std::string> checks;  // options.checks
};

namespace detail {

inline Json evolution_to_json(const UnitaryFamily& f, const std::vector<double>& times) {
  Json out = Json::object();
  out["kind"] = to_string(f.kind());
  if (const auto* g = std::get_if<GeneratorFamily>(&f.storage())) {
    out["generator"] = matrix_to_json(g->h);
  } else if (const auto* p = std::get_if<PiecewiseFamily>(&f.storage())) {
    Json segs = Json::array();
    for (const auto& s : p->segments) segs.push_back({{"duration", s.duration}, {"generator", matrix_to_json(s.h)}});
    out["segments"] = segs;
  } else if (const auto* c = std::get_if<ConstantFamily>(&f.storage())) {
    out["unitary"] = matrix_to_json(c->u);
  } else if (const auto* t = std::get_if<TableFamily>(&f.storage())) {
    out["kind"] = "explicit_unitary_family";
    Json samples = Json::array();
    for (const auto& s : t->samples) samples.push_back({{"t", s.t}, {"unitary", matrix_to_json(s.u)}});
    out["samples"] = samples;
  } else {
    // Closed-form families are tabulated on the scenario's times.
    out["kind"] = "explicit_unitary_family";
    Json samples = Json::array();
    for (double t : times) samples.push_back({{"t", t}, {"unitary", matrix_to_json(f.at(t))}});
    out["samples"] = samples;
  }
  return out;
}

inline UnitaryFamily evolution_from_json(const Json& j, Index dim, const std::string& where) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw DocumentError(where + ": expected an object with a string 'kind'");
  }
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "time_independent_hamiltonian") {
    check_keys(j, where, {"kind", "generator"}, {"generator"});
    return UnitaryFamily::generator(square_from_json(j["generator"], dim, where + ".generator"));
  }
  if (kind == "time_dependent_hamiltonian") {
    check_keys(j, where, {"kind", "segments"}, {"segments"});
    if (!j["segments"].is_array() || j["segments"].empty()) throw DocumentError(where + ".segments: expected array");
    PiecewiseFamily p;
    for (std::size_t k = 0; k < j["segments"].size(); ++k) {
      const Json& s = j["segments"][k];
      const std::string w = where + ".segments[" + std::to_string(k) + "]";
      check_keys(s, w, {"duration", "generator"}, {"duration", "generator"});
      double d = number_from_json(s["duration"], w + ".duration");
      if (d < 0) throw DocumentError(w + ".duration: must be non-negative");
      p.segments.push_back({d, square_from_json(s["generator"], dim, w + ".generator")});
    }
    return p;
  }
  if (kind == "explicit_unitary_family") {
    check_keys(j, where, {"kind", "samples"}, {"samples"});
    if (!j["samples"].is_array() || j["samples"].empty()) throw DocumentError(where + ".samples: expected array");
    std::vector<TableSample> samples;
    for (std::size_t k = 0; k < j["samples"].size(); ++k) {
      const Json& s = j["samples"][k];
      const std::string w = where + ".samples[" + std::to_string(k) + "]";
      check_keys(s, w, {"t", "unitary"}, {"t", "unitary"});
      samples.push_back({number_from_json(s["t"], w + ".t"), square_from_json(s["unitary"], dim, w + ".unitary")});
    }
    return UnitaryFamily::table(std::move(samples));
  }
  if (kind == "fixed_unitary") {
    check_keys(j, where, {"kind", "unitary"}, {"unitary"});
    return UnitaryFamily::constant(square_from_json(j["unitary"], dim, where + ".unitary"));
  }
  throw DocumentError(where + ".kind: unknown evolution kind '" + kind + "'");
}

inline Json case_to_json(const ScenarioCase& c, const std::vector<double>& times) {
  Json out = Json::object();
  out["name"] = c.name;
  out["basis_order"] = c.basis_order;
  if (!c.notes.empty()) out["notes"] = c.notes;
  out["spaces"] = {{"system", c.dilation.dim_s}, {"environment", c.dilation.env_factors}};
  if (c.dilation.env_state.is_pure()) {
    out["env_state"] = {{"vector", vector_to_json(c.dilation.env_state.vector())}};
  } else {
    out["env_state"] = {{"density", matrix_to_json(c.dilation.env_state.matrix())}};
  }
  out["evolution"] = evolution_to_json(c.dilation.evolution, times);
  if (c.order == KrylovOrder::order2) out["krylov_order"] = "order2";
  if (c.reference_case) out["reference_case"] = *c.reference_case;
  if (c.collision) {
    Json terms = Json::array();
    for (const auto& t : c.collision->terms) {
      terms.push_back({{"system", matrix_to_json(t.a)}, {"ancilla", matrix_to_json(t.b)}});
    }
    out["collision"] = {{"terms", terms},
                        {"rho_e", matrix_to_json(c.collision->rho_e)},
                        {"gamma", c.collision->gamma},
                        {"dt", c.collision->dt}};
  }
  if (!c.expected.empty()) out["expected"] = expectations_to_json(c.expected);
  return out;
}

inline ScenarioCase case_from_json(const Json& j, const std::string& where) {
  check_keys(j, where,
             {"name", "basis_order", "notes", "spaces", "env_state", "evolution", "krylov_order", "reference_case",
              "collision", "expected"},
             {"name", "spaces", "env_state", "evolution"});
  ScenarioCase c;
  c.name = string_field(j, "name", where);
  if (c.name.empty()) throw DocumentError(where + ".name: must be non-empty");
  if (j.contains("basis_order")) c.basis_order = string_field(j, "basis_order", where);
  c.notes = string_field(j, "notes", where);

  const Json& sp = j["spaces"];
  check_keys(sp, where + ".spaces", {"system", "environment"}, {"system", "environment"});
  Dilation& d = c.dilation;
  d.dim_s = index_from_json(sp["system"], where + ".spaces.system");
  if (!sp["environment"].is_array() || sp["environment"].empty()) {
    throw DocumentError(where + ".spaces.environment: expected a non-empty array of dims");
  }
  d.env_factors.clear();
  for (const auto& f : sp["environment"]) d.env_factors.push_back(index_from_json(f, where + ".spaces.environment"));
  if (d.dim_s < 1 || std::any_of(d.env_factors.begin(), d.env_factors.end(), [](Index f) { return f < 1; })) {
    throw DocumentError(where + ".spaces: dimensions must be positive");
  }
  const Index de = d.dim_e();

  const Json& es = j["env_state"];
  check_keys(es, where + ".env_state", {"vector", "density"});
  if (es.contains("vector") == es.contains("density")) {
    throw DocumentError(where + ".env_state: give exactly one of 'vector' or 'density'");
  }
  if (es.contains("vector")) {
    ComplexVector v = vector_from_json(es["vector"], where + ".env_state.vector");
    if (v.size() != de) throw DocumentError(where + ".env_state.vector: length does not match environment dim");
    d.env_state = v;
  } else {
    d.env_state = square_from_json(es["density"], de, where + ".env_state.density");
  }
  d.evolution = evolution_from_json(j["evolution"], d.dim_s * de, where + ".evolution");
  try {
    d.validate();
  } catch (const std::invalid_argument& e) {
    throw DocumentError(where + ": " + e.what());
  }

  if (j.contains("krylov_order")) {
    std::string o = string_field(j, "krylov_order", where);
    if (o == "order2") {
      c.order = KrylovOrder::order2;
    } else if (o != "maximal") {
      throw DocumentError(where + ".krylov_order: expected 'maximal' or 'order2'");
    }
  }
  if (j.contains("reference_case")) c.reference_case = string_field(j, "reference_case", where);
  if (j.contains("collision")) {
    const Json& cj = j["collision"];
    const std::string w = where + ".collision";
    check_keys(cj, w, {"terms", "rho_e", "gamma", "dt"}, {"terms", "rho_e"});
    CollisionSpec spec;
    spec.dim_s = d.dim_s;
    spec.dim_e = de;
    if (!cj["terms"].is_array()) throw DocumentError(w + ".terms: expected an array");
    for (std::size_t k = 0; k < cj["terms"].size(); ++k) {
      const Json& t = cj["terms"][k];
      const std::string tw = w + ".terms[" + std::to_string(k) + "]";
      check_keys(t, tw, {"system", "ancilla"}, {"system", "ancilla"});
      spec.terms.push_back({square_from_json(t["system"], d.dim_s, tw + ".system"),
                            square_from_json(t["ancilla"], de, tw + ".ancilla")});
    }
    spec.rho_e = square_from_json(cj["rho_e"], de, w + ".rho_e");
    if (cj.contains("gamma")) spec.gamma = number_from_json(cj["gamma"], w + ".gamma");
    if (cj.contains("dt")) spec.dt = number_from_json(cj["dt"], w + ".dt");
    try {
      spec.validate();
    } catch (const std::invalid_argument& e) {
      throw DocumentError(w + ": " + e.what());
    }
    c.collision = spec;
  }
  if (j.contains("expected")) c.expected = expectations_from_json(j["expected"], where + ".expected");
  return c;
}

}  // namespace detail

inline Json symmetry_to_json(const SymmetryRep& rep) {
  Json sys = Json::object();
  if (rep.has_generators()) {
    Json gens = Json::array();
    for (const auto& g : rep.generators()) gens.push_back(matrix_to_json(g));
    sys["generators"] = gens;
  }
  Json elements = Json::array();
  for (const auto& e : rep.elements()) {
    Json el = {{"label", e.label}, {"unitary", matrix_to_json(e.unitary)}};
    if (!e.params.empty()) el["params"] = e.params;
    elements.push_back(el);
  }
  sys["elements"] = elements;
  return {{"system", sys}};
}

inline SymmetryRep symmetry_from_json(const Json& j, const std::optional<std::vector<double>>& g_samples,
                                      const std::string& where) {
  detail::check_keys(j, where, {"system"}, {"system"});
  const Json& s = j["system"];
  const std::string w = where + ".system";
  detail::check_keys(s, w, {"generators", "elements"});
  std::vector<ComplexMatrix> gens;
  if (s.contains("generators")) {
    if (!s["generators"].is_array()) throw DocumentError(w + ".generators: expected an array");
    for (std::size_t k = 0; k < s["generators"].size(); ++k) {
      gens.push_back(matrix_from_json(s["generators"][k], w + ".generators[" + std::to_string(k) + "]"));
    }
  }
  std::vector<GroupElement> elements;
  if (s.contains("elements") && !g_samples) {
    if (!s["elements"].is_array()) throw DocumentError(w + ".elements: expected an array");
    std::set<std::string> labels;
    for (std::size_t k = 0; k < s["elements"].size(); ++k) {
      const Json& e = s["elements"][k];
      const std::string ew = w + ".elements[" + std::to_string(k) + "]";
      detail::check_keys(e, ew, {"label", "unitary", "params"}, {"label", "unitary"});
      GroupElement g;
      g.label = detail::string_field(e, "label", ew);
      if (!labels.insert(g.label).second) throw DocumentError(ew + ".label: duplicate label '" + g.label + "'");
      g.unitary = matrix_from_json(e["unitary"], ew + ".unitary");
      if (e.contains("params")) g.params = detail::numbers_from_json(e["params"], ew + ".params");
      elements.push_back(std::move(g));
    }
  }
  if (gens.empty() && elements.empty()) throw DocumentError(w + ": needs generators or elements");
  try {
    if (g_samples) {
      if (gens.size() != 1) throw DocumentError(w + ": g samples need exactly one generator");
      return SymmetryRep::one_parameter(gens.front(), *g_samples);
    }
    if (elements.empty() && gens.size() == 1) return SymmetryRep::one_parameter(gens.front());
    if (elements.empty() && gens.size() == 3) return SymmetryRep::lie_algebra(gens);
    return SymmetryRep::combined(std::move(gens), std::move(elements));
  } catch (const std::invalid_argument& e) {
    throw DocumentError(w + ": " + e.what());
  }
}

inline Json time_grid_to_json(const Scenario& s) {
  if (!s.explicit_times.empty()) return {{"times", s.explicit_times}};
  return {{"start", s.grid.start}, {"stop", s.grid.stop}, {"count", s.grid.count}};
}

inline Json scenario_to_json(const Scenario& s, const std::set<std::string>& checks = {}) {
  if (s.cases.empty()) throw PreconditionError("scenario_to_json: scenario has no cases");
  const auto times = s.times();
  Json doc = Json::object();
  doc["schema_version"] = kSchemaVersion;
  Json primary = detail::case_to_json(s.cases.front(), times);
  for (const auto& item : primary.items()) doc[item.key()] = item.value();
  doc["name"] = s.name;
  doc["case_name"] = s.cases.front().name;
  if (!s.notes.empty()) doc["scenario_notes"] = s.notes;
  doc["symmetry"] = symmetry_to_json(s.sys_rep);
  Json options = {{"tolerance", s.tolerance}, {"time_grid", time_grid_to_json(s)}};
  if (!checks.empty()) options["checks"] = checks;
  doc["options"] = options;
  if (s.convergence) doc["convergence"] = {{"t", s.convergence->t}, {"dts", s.convergence->dts}};
  if (!s.expected.empty()) doc["scenario_expected"] = expectations_to_json(s.expected);
  if (s.cases.size() > 1) {
    Json cases = Json::array();
    for (std::size_t k = 1; k < s.cases.size(); ++k) cases.push_back(detail::case_to_json(s.cases[k], times));
    doc["cases"] = cases;
  }
  return doc;
}

// A document's top level holds the primary case plus scenario-wide fields;
// `cases` lists further dilations checked against the same symmetry.
inline Document document_from_json(const Json& j) {
  detail::check_keys(j, "document",
                     {"schema_version", "name", "case_name", "basis_order", "notes", "scenario_notes", "spaces",
                      "env_state", "evolution", "krylov_order", "reference_case", "collision", "expected",
                      "symmetry", "options", "convergence", "scenario_expected", "cases"},
                     {"schema_version", "name", "spaces", "env_state", "evolution", "symmetry"});
  if (!j["schema_version"].is_number_integer() || j["schema_version"].get<int>() != kSchemaVersion) {
    throw DocumentError("document.schema_version: expected " + std::to_string(kSchemaVersion));
  }
  Document doc;
  Scenario& s = doc.scenario;
  s.name = detail::string_field(j, "name", "document");
  if (s.name.empty()) throw DocumentError("document.name: must be non-empty");
  s.notes = detail::string_field(j, "scenario_notes", "document");

  std::optional<std::vector<double>> g_samples;
  if (j.contains("options")) {
    const Json& o = j["options"];
    detail::check_keys(o, "document.options", {"tolerance", "time_grid", "g_samples", "checks"});
    if (o.contains("tolerance")) {
      s.tolerance = number_from_json(o["tolerance"], "document.options.tolerance");
      if (!(s.tolerance >= 0)) throw DocumentError("document.options.tolerance: must be non-negative");
    }
    if (o.contains("time_grid")) {
      const Json& g = o["time_grid"];
      detail::check_keys(g, "document.options.time_grid", {"start", "stop", "count", "times"});
      if (g.contains("times")) {
        if (g.size() != 1) throw DocumentError("document.options.time_grid: 'times' excludes start/stop/count");
        s.explicit_times = detail::numbers_from_json(g["times"], "document.options.time_grid.times");
        if (s.explicit_times.empty()) throw DocumentError("document.options.time_grid.times: empty");
      } else {
        detail::check_keys(g, "document.options.time_grid", {"start", "stop", "count"}, {"start", "stop", "count"});
        s.grid.start = number_from_json(g["start"], "document.options.time_grid.start");
        s.grid.stop = number_from_json(g["stop"], "document.options.time_grid.stop");
        s.grid.count = static_cast<int>(detail::index_from_json(g["count"], "document.options.time_grid.count"));
        if (s.grid.count < 1) throw DocumentError("document.options.time_grid.count: must be positive");
      }
    }
    if (o.contains("g_samples")) g_samples = detail::numbers_from_json(o["g_samples"], "document.options.g_samples");
    if (o.contains("checks")) {
      if (!o["checks"].is_array()) throw DocumentError("document.options.checks: expected an array");
      for (const auto& c : o["checks"]) {
        if (!c.is_string() || !detail::is_known_check(c.get<std::string>())) {
          throw DocumentError("document.options.checks: unknown check id " + c.dump());
        }
        doc.checks.insert(c.get<std::string>());
      }
    }
  }

  Json primary = Json::object();
  for (const char* k : {"basis_order", "notes", "spaces", "env_state", "evolution", "krylov_order", "reference_case",
                        "collision", "expected"}) {
    if (j.contains(k)) primary[k] = j[k];
  }
  primary["name"] = j.contains("case_name") ? j["case_name"] : j["name"];
  s.cases.push_back(detail::case_from_json(primary, "document"));
  if (j.contains("cases")) {
    if (!j["cases"].is_array()) throw DocumentError("document.cases: expected an array");
    for (std::size_t k = 0; k < j["cases"].size(); ++k) {
      s.cases.push_back(detail::case_from_json(j["cases"][k], "document.cases[" + std::to_string(k) + "]"));
    }
  }
  std::set<std::string> names;
  for (const auto& c : s.cases) {
    if (!names.insert(c.name).second) throw DocumentError("document: duplicate case name '" + c.name + "'");
  }
  for (const auto& c : s.cases) {
    if (c.reference_case && !names.count(*c.reference_case)) {
      throw DocumentError("document: case '" + c.name + "' references unknown case '" + *c.reference_case + "'");
    }
  }

  s.sys_rep = symmetry_from_json(j["symmetry"], g_samples, "document.symmetry");
  for (const auto& c : s.cases) {
    if (s.sys_rep.dim() != c.dilation.dim_s) {
      throw DocumentError("document: symmetry dim " + std::to_string(s.sys_rep.dim()) + " does not match system dim of case '" +
                          c.name + "'");
    }
  }
  if (j.contains("convergence")) {
    const Json& c = j["convergence"];
    detail::check_keys(c, "document.convergence", {"t", "dts"}, {"t", "dts"});
    ConvergenceSetup cs;
    cs.t = number_from_json(c["t"], "document.convergence.t");
    cs.dts = detail::numbers_from_json(c["dts"], "document.convergence.dts");
    if (!(cs.t > 0) || cs.dts.empty() || std::any_of(cs.dts.begin(), cs.dts.end(), [](double d) { return !(d > 0); })) {
      throw DocumentError("document.convergence: t and every dt must be positive");
    }
    s.convergence = cs;
  }
  if (j.contains("scenario_expected")) {
    s.expected = expectations_from_json(j["scenario_expected"], "document.scenario_expected");
  }
  return doc;
}

inline Document parse_document(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw DocumentError(std::string("invalid JSON: ") + e.what());
  }
  return document_from_json(j);
}

inline Document load_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DocumentError("cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_document(ss.str());
}

// Writes via a sibling temporary and rename so readers never see partial output.
inline void write_atomic(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << text;
    if (!out.flush()) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Reports.

inline Json certificate_to_json(const std::string& check, const SymmetryCertificate& c) {
  Json ev = Json::array();
  for (const auto& e : c.evidence) ev.push_back({{"label", e.label}, {"residual", e.residual}});
  Json out = {{"check", check},
              {"kind", to_string(c.kind)},
              {"label", c.label},
              {"residual", c.residual},
              {"tolerance", c.tolerance},
              {"pass", c.pass},
              {"required", c.required}};
  if (c.subspace_rank) out["subspace_rank"] = *c.subspace_rank;
  out["evidence"] = ev;
  return out;
}

inline Json outcomes_to_json(const std::vector<ExpectationOutcome>& os) {
  Json out = Json::array();
  for (const auto& o : os) {
    out.push_back({{"name", o.name},
                   {"expected", o.expected},
                   {"actual", o.actual},
                   {"provenance", to_string(o.provenance)},
                   {"pass", o.pass}});
  }
  return out;
}

inline Json convergence_to_json(const ConvergenceReport& c) {
  Json entries = Json::array();
  for (const auto& e : c.entries) {
    entries.push_back({{"dt", e.dt},
                       {"steps", e.steps},
                       {"residual_time", e.residual_time},
                       {"frobenius_error", e.frobenius_error},
                       {"max_entry_error", e.max_entry_error}});
  }
  Json out = {{"t", c.t}, {"entries", entries}};
  out["order"] = c.order ? Json(*c.order) : Json(nullptr);
  return out;
}

inline Json report_to_json(const ScenarioReport& r, const std::string& command) {
  Json cases = Json::array();
  for (const auto& c : r.cases) {
    Json cj = Json::object();
    cj["name"] = c.name;
    cj["kind"] = to_string(c.kind);
    cj["purified"] = c.purified;
    cj["minimal"] = c.minimal ? Json(*c.minimal) : Json(nullptr);
    Json ranks = Json::object();
    for (const auto& [k, v] : c.ranks) ranks[k] = v;
    cj["ranks"] = ranks;
    if (c.env_support_projector) cj["env_support_projector"] = matrix_to_json(*c.env_support_projector);
    Json je = Json::array();
    for (const auto& m : c.j_e) je.push_back(matrix_to_json(m));
    cj["j_e"] = je;
    Json certs = Json::array();
    for (const auto& nc : c.certificates) certs.push_back(certificate_to_json(nc.check, nc.cert));
    cj["certificates"] = certs;
    cj["expectations"] = outcomes_to_json(c.expectations);
    if (c.error) cj["error"] = *c.error;
    cases.push_back(std::move(cj));
  }
  Json out = Json::object();
  out["schema_version"] = kSchemaVersion;
  out["command"] = command;
  out["name"] = r.name;
  out["certificates_pass"] = r.certificates_pass();
  out["expectations_pass"] = r.expectations_pass();
  out["cases"] = cases;
  if (r.gkls) {
    Json g = {{"superoperator", matrix_to_json(r.gkls->superoperator)}, {"rates", matrix_to_json(r.gkls->rates)}};
    if (r.gkls->convergence) g["convergence"] = convergence_to_json(*r.gkls->convergence);
    out["gkls"] = g;
  }
  out["expectations"] = outcomes_to_json(r.expectations);
  return out;
}

// Order-independent fingerprint of a projector.
inline Json projector_checksum(const ComplexMatrix& p) {
  return {{"trace", p.trace().real()}, {"frobenius", p.norm()}, {"abs_sum", p.cwiseAbs().sum()}};
}

inline Json krylov_to_json(const KrylovResult& k) {
  Json seeds = Json::array();
  for (const auto& s : k.seeds) seeds.push_back({{"label", s.label}, {"dim", s.dim}});
  ComplexMatrix basis = k.subspace.basis();
  for (Index c = 0; c < basis.cols(); ++c) {
    ComplexVector v = basis.col(c);
    fix_phase(v);
    basis.col(c) = v;
  }
  Json out = {{"rank", k.rank()}, {"seeds", seeds}};
  out["max_vectors"] = k.max_vectors ? Json(*k.max_vectors) : Json(nullptr);
  out["basis"] = matrix_to_json(basis);
  out["projector_checksum"] = projector_checksum(k.subspace.projector());
  return out;
}

inline Json krylov_report(const ScenarioCase& c) {
  const ComplexMatrix* h = c.dilation.evolution.hamiltonian();
  if (!h) throw DocumentError("case '" + c.name + "': krylov needs a time_independent_hamiltonian evolution");
  const Dilation d = c.dilation.env_state.is_pure() ? c.dilation : purify(c.dilation);
  const ComplexVector& psi = d.env_state.vector();
  const TensorSpace split = d.split_space();
  const ComplexMatrix& hp = *d.evolution.hamiltonian();
  KrylovResult kp = k_parallel(hp, psi, split);
  KrylovResult k2 = k_parallel_order2(hp, psi, split);
  const ComplexMatrix p = kp.subspace.projector();
  const ComplexMatrix q = identity(p.rows()) - p;
  Json out = {{"name", c.name}, {"purified", !c.dilation.env_state.is_pure()}};
  out["k_par"] = krylov_to_json(kp);
  out["k_par2"] = krylov_to_json(k2);
  out["k_perp_rank"] = kp.perp().rank();
  out["invariance_residual"] = (q * hp * p).norm();
  return out;
}

inline Json trajectory_to_json(const std::vector<ComplexMatrix>& states, double dt) {
  Json rows = Json::array();
  for (std::size_t k = 0; k < states.size(); ++k) {
    rows.push_back({{"t", dt * static_cast<double>(k)}, {"rho", vector_to_json(vectorize(states[k]))}});
  }
  return rows;
}

inline Json gkls_to_json(const GKLSGenerator& g) {
  Json jumps = Json::array();
  for (const auto& a : g.jump_ops) jumps.push_back(matrix_to_json(a));
  return {{"gamma", g.gamma},
          {"hamiltonian", matrix_to_json(g.hamiltonian)},
          {"jump_operators", jumps},
          {"rates", matrix_to_json(g.rates)},
          {"superoperator", matrix_to_json(g.superoperator().matrix)}};
}

}  // namespace dilation_lab
