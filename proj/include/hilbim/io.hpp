#pragma once

// Wire format ("hilbim/1") and analysis orchestration.
//
// One self-describing JSON format carries everything the tools consume:
// complex numbers as [re, im] pairs, algebra elements as block lists,
// matrices over A as row-major entry grids.  FORMATS.md documents the
// shapes; fixtures/ holds worked instances.  Errors split into
//   ParseError          file unreadable / not JSON
//   SchemaError         wrong structure, with the offending path
//   InvariantViolation  well-formed data failing a mathematical axiom,
//                       again with the offending path

#include <chrono>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hilbim/bimod.hpp"
#include "hilbim/fock.hpp"
#include "hilbim/freeness.hpp"
#include "hilbim/hmod.hpp"
#include "hilbim/ideal_graph.hpp"
#include "hilbim/index_theory.hpp"
#include "hilbim/mmalg.hpp"
#include "hilbim/random.hpp"

namespace hilbim {

using json = nlohmann::json;

inline constexpr const char* kFormatVersion = "hilbim/1";

struct AnalysisOptions {
  double tol = 1e-8;
  int depth_cap = 8;
  int fock_level = 4;
  std::uint64_t seed = 0;
};

// A parsed specification file.  Either the module triple (algebra, module,
// phi) is given directly, or an inclusion A ⊆ B is given and the bimodule
// is its expectation presentation (X = B over A); the two presentations are
// mutually exclusive in one file.
struct SpecDocument {
  std::string version = kFormatVersion;
  std::string name;  // optional label, preserved verbatim
  AlgebraShape algebra;
  BimodulePtr bimodule;

  bool has_conjugate = false;
  AMatrix conjugate_r;  // level-2 column over A
  int conjugate_sign = +1;

  bool has_antilinear = false;
  CMat antilinear_f;  // stacked-coordinate matrix of the antilinear map

  bool has_inclusion = false;
  bool module_from_inclusion = false;
  AlgebraMap inclusion_embed;
  AlgebraMap inclusion_expect;

  AnalysisOptions options;

  Inclusion inclusion(double tol = kDefaultTol) const {
    if (!has_inclusion) fail("SchemaError", "inclusion: not present in this spec");
    return make_inclusion(inclusion_embed, inclusion_expect, tol);
  }
};

// ======================================================================
// JSON scalar and matrix codecs
// ======================================================================

namespace jio {

[[noreturn]] inline void schema_fail(const std::string& at, const std::string& what) {
  fail("SchemaError", at + ": " + what);
}

// Tags construction failures with the location of the offending entry.
template <typename Fn>
auto checked(const std::string& at, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    fail("InvariantViolation", at + ": " + e.what());
  }
}

inline const json& field(const json& j, const char* key, const std::string& at) {
  if (!j.is_object()) schema_fail(at, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) schema_fail(at, std::string("missing field '") + key + "'");
  return *it;
}

inline int get_int(const json& j, const std::string& at) {
  if (!j.is_number_integer()) schema_fail(at, "expected an integer");
  return j.get<int>();
}

inline double get_real(const json& j, const std::string& at) {
  if (!j.is_number()) schema_fail(at, "expected a number");
  return j.get<double>();
}

// Accepts [re, im] (the canonical form) or a bare real number.
inline Complex get_complex(const json& j, const std::string& at) {
  if (j.is_number()) return Complex(j.get<double>(), 0.0);
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    schema_fail(at, "complex numbers are [re, im] pairs");
  return Complex(j[0].get<double>(), j[1].get<double>());
}

inline json put_complex(const Complex& z) { return json::array({z.real(), z.imag()}); }

inline AlgebraShape get_shape(const json& j, const std::string& at) {
  const json* arr = &j;
  if (j.is_object()) arr = &field(j, "blocks", at);
  if (!arr->is_array() || arr->empty()) schema_fail(at, "expected a nonempty list of block sizes");
  AlgebraShape s;
  for (size_t i = 0; i < arr->size(); ++i)
    s.blocks.push_back(get_int((*arr)[i], at + ".blocks[" + std::to_string(i) + "]"));
  checked(at, [&] { s.validate(); return 0; });
  return s;
}

inline json put_shape(const AlgebraShape& s) { return json{{"blocks", s.blocks}}; }

inline AlgebraElement get_element(const json& j, const AlgebraShape& s, const std::string& at) {
  const json& bl = field(j, "blocks", at);
  if (!bl.is_array() || static_cast<int>(bl.size()) != s.num_blocks())
    schema_fail(at + ".blocks", "expected " + std::to_string(s.num_blocks()) + " block matrices");
  AlgebraElement a = AlgebraElement::zero(s);
  for (int i = 0; i < s.num_blocks(); ++i) {
    const std::string bat = at + ".blocks[" + std::to_string(i) + "]";
    const json& m = bl[static_cast<size_t>(i)];
    const int n = s.blocks[static_cast<size_t>(i)];
    if (!m.is_array() || static_cast<int>(m.size()) != n)
      schema_fail(bat, "expected " + std::to_string(n) + " rows");
    for (int r = 0; r < n; ++r) {
      const json& row = m[static_cast<size_t>(r)];
      if (!row.is_array() || static_cast<int>(row.size()) != n)
        schema_fail(bat + "[" + std::to_string(r) + "]",
                    "expected " + std::to_string(n) + " entries");
      for (int c = 0; c < n; ++c)
        a.blocks[static_cast<size_t>(i)](r, c) = get_complex(
            row[static_cast<size_t>(c)],
            bat + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    }
  }
  return a;
}

inline json put_element(const AlgebraElement& a) {
  json blocks = json::array();
  for (size_t i = 0; i < a.blocks.size(); ++i) {
    const CMat& m = a.blocks[i];
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) {
      json row = json::array();
      for (int c = 0; c < m.cols(); ++c) row.push_back(put_complex(m(r, c)));
      rows.push_back(std::move(row));
    }
    blocks.push_back(std::move(rows));
  }
  return json{{"blocks", std::move(blocks)}};
}

inline AMatrix get_amatrix(const json& j, const AlgebraShape& s, const std::string& at) {
  const int rows = get_int(field(j, "rows", at), at + ".rows");
  const int cols = get_int(field(j, "cols", at), at + ".cols");
  if (rows < 1 || cols < 1) schema_fail(at, "matrix dimensions must be positive");
  const json& ent = field(j, "entries", at);
  if (!ent.is_array() || static_cast<int>(ent.size()) != rows)
    schema_fail(at + ".entries", "expected " + std::to_string(rows) + " rows");
  AMatrix m = AMatrix::zero(s, rows, cols);
  for (int r = 0; r < rows; ++r) {
    const json& row = ent[static_cast<size_t>(r)];
    const std::string rat = at + ".entries[" + std::to_string(r) + "]";
    if (!row.is_array() || static_cast<int>(row.size()) != cols)
      schema_fail(rat, "expected " + std::to_string(cols) + " entries");
    for (int c = 0; c < cols; ++c)
      m.set(r, c, get_element(row[static_cast<size_t>(c)], s,
                              rat + "[" + std::to_string(c) + "]"));
  }
  return m;
}

inline json put_amatrix(const AMatrix& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows; ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols; ++c) row.push_back(put_element(m.at(r, c)));
    rows.push_back(std::move(row));
  }
  return json{{"rows", m.rows}, {"cols", m.cols}, {"entries", std::move(rows)}};
}

inline CMat get_cmatrix(const json& j, const std::string& at) {
  if (!j.is_array() || j.empty()) schema_fail(at, "expected a nonempty list of rows");
  const int rows = static_cast<int>(j.size());
  const json& first = j[0];
  if (!first.is_array() || first.empty()) schema_fail(at + "[0]", "expected a nonempty row");
  const int cols = static_cast<int>(first.size());
  CMat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const json& row = j[static_cast<size_t>(r)];
    const std::string rat = at + "[" + std::to_string(r) + "]";
    if (!row.is_array() || static_cast<int>(row.size()) != cols)
      schema_fail(rat, "expected " + std::to_string(cols) + " entries");
    for (int c = 0; c < cols; ++c)
      m(r, c) = get_complex(row[static_cast<size_t>(c)], rat + "[" + std::to_string(c) + "]");
  }
  return m;
}

inline json put_cmatrix(const CMat& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(put_complex(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

// phi serializes as {"phi": [unit images, block by block, row-major]},
// matching the matrix-unit basis order.
inline PhiMap get_phi(const json& j, const AlgebraShape& s, int k, const std::string& at) {
  const json& list = field(j, "phi", at);
  const int want = s.total_dim();
  if (!list.is_array() || static_cast<int>(list.size()) != want)
    schema_fail(at + ".phi", "expected " + std::to_string(want) + " matrix-unit images");
  PhiMap phi{s, k, {}};
  phi.img.resize(static_cast<size_t>(s.num_blocks()));
  size_t idx = 0;
  for (int b = 0; b < s.num_blocks(); ++b) {
    const int n = s.blocks[static_cast<size_t>(b)];
    phi.img[static_cast<size_t>(b)].reserve(static_cast<size_t>(n) * static_cast<size_t>(n));
    for (int rc = 0; rc < n * n; ++rc, ++idx) {
      const std::string iat = at + ".phi[" + std::to_string(idx) + "]";
      AMatrix im = get_amatrix(list[idx], s, iat);
      if (im.rows != k || im.cols != k)
        schema_fail(iat, "phi images must be " + std::to_string(k) + "x" + std::to_string(k));
      phi.img[static_cast<size_t>(b)].push_back(std::move(im));
    }
  }
  return phi;
}

inline json put_phi(const PhiMap& phi) {
  json list = json::array();
  for (int b = 0; b < phi.domain.num_blocks(); ++b) {
    const int n = phi.domain.blocks[static_cast<size_t>(b)];
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) list.push_back(put_amatrix(phi.unit_block(b, r, c)));
  }
  return list;
}

// Extracts the matrix-unit coordinates of an algebra element, in basis order.
inline CVec unit_coords(const AlgebraElement& a) {
  CVec v(a.shape.total_dim());
  int at = 0;
  for (const auto& blk : a.blocks)
    for (int r = 0; r < blk.rows(); ++r)
      for (int c = 0; c < blk.cols(); ++c) v(at++) = blk(r, c);
  return v;
}

inline AlgebraElement element_from_coords(const AlgebraShape& s, const CVec& v) {
  AlgebraElement a = AlgebraElement::zero(s);
  int at = 0;
  for (size_t i = 0; i < a.blocks.size(); ++i)
    for (int r = 0; r < a.blocks[i].rows(); ++r)
      for (int c = 0; c < a.blocks[i].cols(); ++c) a.blocks[i](r, c) = v(at++);
  return a;
}

}  // namespace jio

// ======================================================================
// Spec parsing and serialization
// ======================================================================

inline AnalysisOptions parse_options(const json& j, const std::string& at) {
  AnalysisOptions o;
  if (j.is_null()) return o;
  if (!j.is_object()) jio::schema_fail(at, "expected an object");
  if (j.contains("tol")) o.tol = jio::get_real(j["tol"], at + ".tol");
  if (j.contains("depth_cap")) o.depth_cap = jio::get_int(j["depth_cap"], at + ".depth_cap");
  if (j.contains("fock_level")) o.fock_level = jio::get_int(j["fock_level"], at + ".fock_level");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
      jio::schema_fail(at + ".seed", "expected an integer");
    o.seed = j["seed"].get<std::uint64_t>();
  }
  if (!(o.tol > 0.0)) jio::schema_fail(at + ".tol", "tolerance must be positive");
  if (o.depth_cap < 1) jio::schema_fail(at + ".depth_cap", "depth cap must be at least 1");
  if (o.fock_level < 0) jio::schema_fail(at + ".fock_level", "truncation level must be >= 0");
  return o;
}

// Inclusion spec: {"A": shape, "B": shape, "embed": [images of the A units
// in B], "E": dim(A) x dim(B) complex matrix in matrix-unit coordinates}.
inline std::pair<AlgebraMap, AlgebraMap> parse_inclusion_maps(const json& j,
                                                              const std::string& at) {
  AlgebraShape a = jio::get_shape(jio::field(j, "A", at), at + ".A");
  AlgebraShape b = jio::get_shape(jio::field(j, "B", at), at + ".B");
  const json& emb = jio::field(j, "embed", at);
  if (!emb.is_array() || static_cast<int>(emb.size()) != a.total_dim())
    jio::schema_fail(at + ".embed",
                     "expected " + std::to_string(a.total_dim()) + " images of the A units");
  AlgebraMap embed{a, b, {}};
  for (size_t i = 0; i < emb.size(); ++i)
    embed.img.push_back(jio::get_element(emb[i], b, at + ".embed[" + std::to_string(i) + "]"));
  CMat e = jio::get_cmatrix(jio::field(j, "E", at), at + ".E");
  if (e.rows() != a.total_dim() || e.cols() != b.total_dim())
    jio::schema_fail(at + ".E", "expected a " + std::to_string(a.total_dim()) + "x" +
                                    std::to_string(b.total_dim()) + " matrix");
  AlgebraMap expect{b, a, {}};
  for (int be = 0; be < b.total_dim(); ++be)
    expect.img.push_back(jio::element_from_coords(a, e.col(be)));
  return {std::move(embed), std::move(expect)};
}

inline SpecDocument parse_spec(const json& j) {
  if (!j.is_object()) jio::schema_fail("$", "a spec is a JSON object");
  SpecDocument doc;

  const json& v = jio::field(j, "version", "$");
  if (!v.is_string()) jio::schema_fail("version", "expected a string");
  doc.version = v.get<std::string>();
  if (doc.version != kFormatVersion)
    jio::schema_fail("version", "unrecognized tag '" + doc.version + "'");

  if (j.contains("name")) {
    if (!j["name"].is_string()) jio::schema_fail("name", "expected a string");
    doc.name = j["name"].get<std::string>();
  }
  doc.options = parse_options(j.contains("options") ? j["options"] : json(), "options");
  const double tol = std::max(doc.options.tol, 1e-10);

  const bool hasModule = j.contains("module") || j.contains("phi") || j.contains("algebra");
  doc.has_inclusion = j.contains("inclusion");
  if (hasModule && doc.has_inclusion)
    jio::schema_fail("$", "a spec carries either a module presentation or an inclusion, not both");

  if (hasModule) {
    doc.algebra = jio::get_shape(jio::field(j, "algebra", "$"), "algebra");
    const json& mod = jio::field(j, "module", "$");
    const int k = jio::get_int(jio::field(mod, "k", "module"), "module.k");
    if (k < 1) jio::schema_fail("module.k", "ambient rank must be positive");
    AMatrix p = jio::get_amatrix(jio::field(mod, "p", "module"), doc.algebra, "module.p");
    if (p.rows != k || p.cols != k) jio::schema_fail("module.p", "presentation must be k x k");
    HilbertModulePtr x =
        jio::checked("module.p", [&] { return make_module(doc.algebra, k, p, tol); });
    PhiMap phi = jio::get_phi(j, doc.algebra, k, "$");
    doc.bimodule = jio::checked("phi", [&] { return make_bimodule(x, phi, tol); });
  } else if (doc.has_inclusion) {
    auto maps = parse_inclusion_maps(j["inclusion"], "inclusion");
    doc.inclusion_embed = maps.first;
    doc.inclusion_expect = maps.second;
    Inclusion inc = jio::checked(
        "inclusion", [&] { return make_inclusion(doc.inclusion_embed, doc.inclusion_expect, tol); });
    doc.algebra = inc.a;
    doc.bimodule =
        jio::checked("inclusion", [&] { return present_module(inc, tol).bimodule; });
    doc.module_from_inclusion = true;
  } else {
    jio::schema_fail("$", "a spec needs either algebra/module/phi or an inclusion");
  }

  if (j.contains("conjugate")) {
    const json& c = j["conjugate"];
    if (!c.is_object()) jio::schema_fail("conjugate", "expected an object");
    if (c.contains("R") && c.contains("F"))
      jio::schema_fail("conjugate", "give either R or F, not both");
    if (c.contains("R")) {
      doc.conjugate_r = jio::get_amatrix(c["R"], doc.algebra, "conjugate.R");
      if (c.contains("sign")) {
        doc.conjugate_sign = jio::get_int(c["sign"], "conjugate.sign");
        if (doc.conjugate_sign != 1 && doc.conjugate_sign != -1)
          jio::schema_fail("conjugate.sign", "sign is +1 or -1");
      }
      jio::checked("conjugate.R", [&] {
        return make_conjugate(doc.bimodule, doc.conjugate_r, doc.conjugate_sign,
                              std::max(tol, 1e-7));
      });
      doc.has_conjugate = true;
    } else if (c.contains("F")) {
      doc.antilinear_f = jio::get_cmatrix(c["F"], "conjugate.F");
      const int want = detail::stacked_dim(*doc.bimodule->x);
      if (doc.antilinear_f.rows() != want || doc.antilinear_f.cols() != want)
        jio::schema_fail("conjugate.F", "expected a " + std::to_string(want) + "x" +
                                            std::to_string(want) + " stacked-coordinate matrix");
      jio::checked("conjugate.F", [&] {
        return conjugate_from_F(doc.bimodule, AntilinearMap{doc.bimodule, doc.antilinear_f},
                                std::max(tol, 1e-7));
      });
      doc.has_antilinear = true;
    } else {
      jio::schema_fail("conjugate", "needs a conjugate vector R or an antilinear map F");
    }
  }
  return doc;
}

inline SpecDocument parse_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("ParseError", path + ": cannot open file");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail("ParseError", path + ": " + e.what());
  }
  return parse_spec(j);
}

inline json serialize_spec(const SpecDocument& doc) {
  json j;
  j["version"] = doc.version;
  if (!doc.name.empty()) j["name"] = doc.name;
  if (doc.module_from_inclusion) {
    const AlgebraMap& em = doc.inclusion_embed;
    const AlgebraMap& ex = doc.inclusion_expect;
    json emb = json::array();
    for (const auto& im : em.img) emb.push_back(jio::put_element(im));
    CMat e(ex.codomain.total_dim(), ex.domain.total_dim());
    for (size_t be = 0; be < ex.img.size(); ++be)
      e.col(static_cast<int>(be)) = jio::unit_coords(ex.img[be]);
    j["inclusion"] = json{{"A", jio::put_shape(em.domain)},
                          {"B", jio::put_shape(em.codomain)},
                          {"embed", std::move(emb)},
                          {"E", jio::put_cmatrix(e)}};
  } else {
    const auto& b = doc.bimodule;
    j["algebra"] = jio::put_shape(b->shape());
    j["module"] = json{{"k", b->x->k}, {"p", jio::put_amatrix(b->x->p)}};
    j["phi"] = jio::put_phi(b->level(1).phi);
  }
  if (doc.has_conjugate)
    j["conjugate"] = json{{"R", jio::put_amatrix(doc.conjugate_r)}, {"sign", doc.conjugate_sign}};
  else if (doc.has_antilinear)
    j["conjugate"] = json{{"F", jio::put_cmatrix(doc.antilinear_f)}};
  j["options"] = json{{"tol", doc.options.tol},
                      {"depth_cap", doc.options.depth_cap},
                      {"fock_level", doc.options.fock_level},
                      {"seed", doc.options.seed}};
  return j;
}

// ======================================================================
// Report serializers
// ======================================================================

inline std::string verdict_name(Simplicity v) {
  switch (v) {
    case Simplicity::Simple: return "SIMPLE";
    case Simplicity::NotSimple: return "NOT SIMPLE";
    default: return "UNDECIDED";
  }
}

inline json mask_blocks(const IdealMask& m) {
  json out = json::array();
  for (int i = 0; i < m.d; ++i)
    if (m.contains(i)) out.push_back(i);
  return out;
}

// The ideal/graph report, including the per-ideal quotient diagnostics
// (condition (I) status of X/XJ when the quotient exists).
inline json ideal_report_json(const BimodulePtr& b, const SimplicityReport& rep,
                              double tol = kDefaultTol) {
  GraphData g = graph_data(b, tol);
  json ideals = json::array();
  for (const auto& mask : rep.ideal_lattice) {
    json e;
    e["mask"] = mask_blocks(mask);
    const bool proper = mask.bits != IdealMask::all(mask.d).bits;
    const bool trivial = mask.bits == 0;
    bool saturated = is_saturated(b, mask, tol);
    e["saturated"] = saturated;
    if (trivial) {
      e["quotient_condition_I"] = rep.condition_i;
    } else if (proper && saturated) {
      QuotientBimodule q = quotient_bimodule(b, mask, tol);
      e["quotient_condition_I"] = condition_I(q.bimodule, tol).holds;
    } else {
      e["quotient_condition_I"] = nullptr;
    }
    ideals.push_back(std::move(e));
  }
  json out;
  out["adjacency"] = g.adj;
  out["multiplicity"] = g.mult;
  out["x_simple"] = rep.x_simple;
  out["condition_I"] = rep.condition_i;
  out["ideals"] = std::move(ideals);
  out["verdict"] = verdict_name(rep.verdict);
  out["certified_by"] = rep.certified_by;
  if (!rep.permutation_cycle.empty()) out["permutation_cycle"] = rep.permutation_cycle;
  return out;
}

// Witness certificate: {"level", "degrees", "norm_TsT", "blocks_isometry",
// "certified"} plus the full residual table.
inline json witness_report_json(const Witness& w, const WitnessCheck& c) {
  const auto& s = w.op.base->shape();
  AMatrix g = w.op.block.adjoint() * w.op.block;
  const PhiMap& phir = w.op.base->level(w.op.r).phi;
  std::vector<double> blocks;
  blocks.reserve(static_cast<size_t>(s.num_blocks()));
  for (int i = 0; i < s.num_blocks(); ++i)
    blocks.push_back((phir.apply(AlgebraElement::central_projection(s, i)) * g).norm());
  json out;
  out["level"] = std::max(w.op.r, w.op.s);
  out["degrees"] = json::array({w.op.r, w.op.s});
  out["kind"] = w.kind == WitnessKind::Isometry ? "isometry" : "projection";
  out["route"] = w.route;
  out["order"] = w.order;
  out["norm_TsT"] = c.overlaps.empty() ? 0.0 : c.overlaps[0];
  out["max_overlap"] = c.max_overlap;
  out["overlaps"] = c.overlaps;
  out["blocks_isometry"] = blocks;
  out["commutant_residual"] = c.commutant_residual;
  out["structural_defect"] = c.structural_defect;
  out["support_defect"] = c.support_defect;
  out["certified"] = c.ok;
  return out;
}

// Index report; the index element of a quasi-basis is central in B, so it
// is reported as one scalar per block.
inline json index_report_json(const Inclusion& inc, const QuasiBasis& qb,
                              double tol = kDefaultTol) {
  json per = json::array();
  for (size_t i = 0; i < qb.index.blocks.size(); ++i) {
    const CMat& blk = qb.index.blocks[i];
    per.push_back(blk(0, 0).real());
    if ((blk - blk(0, 0) * CMat::Identity(blk.rows(), blk.cols())).norm() >
        100 * tol * std::max(1.0, std::abs(blk(0, 0))))
      fail("InternalDisagreement", "index_report: index element is not central");
  }
  json out;
  out["A"] = jio::put_shape(inc.a);
  out["B"] = jio::put_shape(inc.b);
  out["index_per_block"] = std::move(per);
  out["index_norm"] = qb.index.norm();
  out["basis_size"] = qb.basis.size();
  return out;
}

inline json fock_report_json(const FockRelationReport& r) {
  return json{{"toeplitz_below_cut", r.toeplitz_below_cut},
              {"toeplitz_top_defect", r.toeplitz_top_defect},
              {"covering_residual", r.covering_residual},
              {"covering_top_defect", r.covering_top_defect},
              {"bottom_defect", r.bottom_defect},
              {"cross_relation", r.cross_relation}};
}

// ======================================================================
// Analysis orchestration
// ======================================================================

struct AnalyzeOutcome {
  std::string verdict;       // SIMPLE / NOT SIMPLE / UNDECIDED
  std::string certified_by;  // route of the strongest certificate
  bool certified = false;    // decided verdict (exit 0) vs undecided (exit 1)
  json report;
};

namespace detail {

inline double ms_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

struct WitnessOutcome {
  bool ok = false;
  std::string route;  // route string of the verified witness
  json attempts;      // one entry per attempted route
};

// Tries the witness routes the document provides data for (conjugate vector,
// antilinear map, inclusion), falling back to the cylinder-projection
// search when nothing else is given.  Route failures are recorded per
// stage, never fatal; the first verified witness wins.
inline WitnessOutcome witness_routes(const SpecDocument& doc, int order = 1) {
  const BimodulePtr& b = doc.bimodule;
  const double tol = std::max(doc.options.tol, 1e-7);
  std::vector<std::pair<std::string, std::function<Witness()>>> routes;
  if (doc.has_conjugate)
    routes.emplace_back("real_structure", [&] {
      ConjugateDatum d = make_conjugate(b, doc.conjugate_r, doc.conjugate_sign, tol);
      return real_witness(b, d, order, tol);
    });
  if (doc.has_antilinear)
    routes.emplace_back("antilinear_structure", [&] {
      ConjugateDatum d = conjugate_from_F(b, AntilinearMap{b, doc.antilinear_f}, tol);
      return real_witness(b, d, order, tol);
    });
  if (doc.has_inclusion && doc.module_from_inclusion)
    routes.emplace_back("jones_projection", [&] {
      InclusionModule im = present_module(doc.inclusion(tol), tol);
      return jones_witness(im.bimodule, jones_graded(im, tol), order, tol);
    });
  if (routes.empty())
    routes.emplace_back("cylinder_search",
                        [&] { return ck_witness(b, order, doc.options.depth_cap, tol); });

  WitnessOutcome out;
  out.attempts = json::array();
  for (const auto& [route, build] : routes) {
    auto tr = std::chrono::steady_clock::now();
    try {
      Witness w = build();
      WitnessCheck chk = verify_witness(w, tol);
      json wr = witness_report_json(w, chk);
      wr["stage"] = route;
      wr["elapsed_ms"] = detail::ms_since(tr);
      out.attempts.push_back(std::move(wr));
      if (chk.ok) {
        out.ok = true;
        out.route = w.route;
        break;
      }
    } catch (const Error& e) {
      out.attempts.push_back(json{{"stage", route},
                                  {"error", e.code()},
                                  {"detail", e.what()},
                                  {"certified", false},
                                  {"elapsed_ms", detail::ms_since(tr)}});
    }
  }
  return out;
}

// Runs the ideal/graph analysis, then the witness routes.  A verified
// witness upgrades the certificate; the graph-level aperiodicity
// certificate keeps the verdict decided when no witness materializes.
inline AnalyzeOutcome analyze(const SpecDocument& doc) {
  const BimodulePtr& b = doc.bimodule;
  const double tol = std::max(doc.options.tol, 1e-12);
  AnalyzeOutcome out;
  json stages = json::array();

  auto t0 = std::chrono::steady_clock::now();
  SimplicityReport structure = simplicity_verdict(b, tol);
  json idealrep = ideal_report_json(b, structure, tol);
  stages.push_back(json{{"stage", "ideal_analysis"}, {"elapsed_ms", detail::ms_since(t0)}});

  WitnessOutcome wo = witness_routes(doc);
  const bool witnessOk = wo.ok;
  const std::string witnessRoute = wo.route;
  json witnessrep = std::move(wo.attempts);

  if (!structure.x_simple) {
    out.verdict = "NOT SIMPLE";
    out.certified_by = structure.certified_by;
    out.certified = true;
  } else if (witnessOk) {
    out.verdict = "SIMPLE";
    out.certified_by = witnessRoute;
    out.certified = true;
  } else if (structure.condition_i) {
    out.verdict = "SIMPLE";
    out.certified_by = structure.certified_by;
    out.certified = true;
  } else {
    out.verdict = "UNDECIDED";
    out.certified_by = "";
    out.certified = false;
  }

  out.report = json{{"verdict", out.verdict},
                    {"certified_by", out.certified_by},
                    {"ideals", std::move(idealrep)},
                    {"witnesses", std::move(witnessrep)},
                    {"stages", std::move(stages)},
                    {"options",
                     json{{"tol", doc.options.tol},
                          {"depth_cap", doc.options.depth_cap},
                          {"fock_level", doc.options.fock_level},
                          {"seed", doc.options.seed}}}};
  if (!doc.name.empty()) out.report["name"] = doc.name;
  return out;
}

}  // namespace hilbim
