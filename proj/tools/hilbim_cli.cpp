// Command line front end: validates spec files, runs the simplicity
// analysis, and exposes the single-operation probes (norms, tensor powers,
// witnesses, Fock residuals, index data).
//
// Exit codes: 0 certified verdict or successful probe, 1 uncertified or
// rejected, 2 malformed input.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hilbim/io.hpp"

namespace {

using hilbim::json;

bool is_input_error(const std::string& code) {
  return code == "ParseError" || code == "SchemaError" || code == "InvariantViolation";
}

// Plain-text rendering of a report tree: nested "key: value" lines, scalar
// arrays inline, object arrays as dashed items.
bool scalar_array(const json& a) {
  for (const auto& v : a)
    if (v.is_object() || v.is_array()) return false;
  return true;
}

void render_text(std::ostream& os, const json& j, int indent) {
  const std::string pad(static_cast<size_t>(indent) * 2, ' ');
  if (j.is_object()) {
    for (const auto& [key, val] : j.items()) {
      if (val.is_object() || (val.is_array() && !scalar_array(val))) {
        os << pad << key << ":\n";
        render_text(os, val, indent + 1);
      } else {
        os << pad << key << ": " << val.dump() << "\n";
      }
    }
  } else if (j.is_array()) {
    for (const auto& item : j) {
      if (item.is_object() || (item.is_array() && !scalar_array(item))) {
        os << pad << "-\n";
        render_text(os, item, indent + 1);
      } else {
        os << pad << "- " << item.dump() << "\n";
      }
    }
  } else {
    os << pad << j.dump() << "\n";
  }
}

void emit(const json& report, const std::string& format) {
  if (format == "structured")
    std::cout << report.dump(2) << "\n";
  else
    render_text(std::cout, report, 0);
}

json spec_summary(const hilbim::SpecDocument& doc) {
  json out;
  out["version"] = doc.version;
  if (!doc.name.empty()) out["name"] = doc.name;
  out["algebra_blocks"] = doc.algebra.blocks;
  out["module_rank"] = doc.bimodule->x->k;
  out["module_dim"] = doc.bimodule->x->complex_dim();
  out["conjugate"] = doc.has_conjugate ? "R" : (doc.has_antilinear ? "F" : "none");
  out["inclusion"] = doc.has_inclusion;
  return out;
}

int run_validate(const hilbim::SpecDocument& doc, const std::string& format) {
  json report = spec_summary(doc);
  report["valid"] = true;
  emit(report, format);
  return 0;
}

int run_analyze(const hilbim::SpecDocument& doc, const std::string& format) {
  hilbim::AnalyzeOutcome out = hilbim::analyze(doc);
  emit(out.report, format);
  return out.certified ? 0 : 1;
}

// Seeded theta-sum instances: the Gram-formula norm against the flattened
// operator norm of the same sum.
int run_norm(const hilbim::SpecDocument& doc, const std::string& format, int instances) {
  hilbim::Rng rng(doc.options.seed);
  const auto& x = doc.bimodule->x;
  const double tol = std::max(doc.options.tol, 1e-10);
  json rows = json::array();
  bool allAgree = true;
  for (int t = 0; t < instances; ++t) {
    int terms = rng.integer(1, 3);
    std::vector<hilbim::ModuleVector> xs, ys;
    for (int i = 0; i < terms; ++i) {
      xs.push_back(hilbim::ModuleVector::project(x, rng.matrix(x->shape, x->k, 1)));
      ys.push_back(hilbim::ModuleVector::project(x, rng.matrix(x->shape, x->k, 1)));
    }
    double gram = hilbim::op_norm_via_gram(xs, ys, tol);
    double flat = hilbim::theta_sum(xs, ys).norm();
    bool agree = std::abs(gram - flat) <= 1e-8 * std::max(1.0, flat);
    allAgree = allAgree && agree;
    rows.push_back(json{{"terms", terms}, {"gram_norm", gram}, {"flattened_norm", flat},
                        {"agree", agree}});
  }
  json report{{"seed", doc.options.seed}, {"instances", std::move(rows)},
              {"all_agree", allAgree}};
  emit(report, format);
  return allAgree ? 0 : 1;
}

int run_tensor(const hilbim::SpecDocument& doc, const std::string& format, int levels) {
  const auto& b = doc.bimodule;
  json rows = json::array();
  for (int r = 0; r <= levels; ++r) {
    const auto& lv = b->level(r);
    rows.push_back(json{{"level", r},
                        {"ambient_rank", lv.module->k},
                        {"complex_dim", lv.module->complex_dim()},
                        {"unit_norm", lv.phi.unit_image().norm()}});
  }
  json report{{"levels", std::move(rows)}};
  emit(report, format);
  return 0;
}

int run_witness(const hilbim::SpecDocument& doc, const std::string& format, int order) {
  hilbim::WitnessOutcome wo = hilbim::witness_routes(doc, order);
  json report{{"order", order}, {"attempts", wo.attempts}, {"certified", wo.ok}};
  if (wo.ok) report["route"] = wo.route;
  emit(report, format);
  return wo.ok ? 0 : 1;
}

int run_fock_check(const hilbim::SpecDocument& doc, const std::string& format, int pairs) {
  hilbim::FockPtr f = hilbim::truncated_fock(doc.bimodule, doc.options.fock_level);
  hilbim::Rng rng(doc.options.seed);
  const auto& x = doc.bimodule->x;
  const double tol = std::max(doc.options.tol, 1e-10);
  json rows = json::array();
  double worst = 0.0;
  for (int t = 0; t < pairs; ++t) {
    auto xv = hilbim::ModuleVector::project(x, rng.matrix(x->shape, x->k, 1));
    auto yv = hilbim::ModuleVector::project(x, rng.matrix(x->shape, x->k, 1));
    hilbim::FockRelationReport r = hilbim::relation_residuals(f, xv, yv);
    worst = std::max({worst, r.toeplitz_below_cut, r.covering_residual, r.cross_relation});
    rows.push_back(hilbim::fock_report_json(r));
  }
  bool certified = worst <= tol;
  json report{{"level", doc.options.fock_level}, {"seed", doc.options.seed},
              {"pairs", std::move(rows)}, {"max_relation_residual", worst},
              {"certified", certified}};
  emit(report, format);
  return certified ? 0 : 1;
}

int run_index(const hilbim::SpecDocument& doc, const std::string& format) {
  if (!doc.has_inclusion)
    hilbim::fail("SchemaError", "index: the document does not carry an inclusion");
  const double tol = std::max(doc.options.tol, 1e-10);
  hilbim::Inclusion inc = doc.inclusion(tol);
  hilbim::InclusionModule im = hilbim::present_module(inc, tol);
  hilbim::QuasiBasis qb = hilbim::quasi_basis(im, tol);
  json report = hilbim::index_report_json(inc, qb, tol);

  // cross-check against the left index of the finite-type structure
  hilbim::FiniteTypeStructure fts = hilbim::finite_type_structure(im.bimodule, {}, 1, tol);
  json rind = json::array();
  for (const auto& blk : fts.r_ind.blocks) rind.push_back(blk(0, 0).real());
  report["r_ind_per_block"] = std::move(rind);
  report["r_ind_matches_index"] =
      std::abs(fts.r_ind.norm() - qb.index.norm()) <= 1e-8 * std::max(1.0, qb.index.norm());
  emit(report, format);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-dimensional Hilbert bimodule toolkit"};
  app.require_subcommand(1);

  double tol = -1.0;
  int depthCap = -1;
  int fockLevel = -1;
  std::uint64_t seed = 0;
  std::string format = "text";
  app.add_option("--tol", tol, "analysis tolerance (overrides the document)");
  app.add_option("--depth-cap", depthCap, "tensor/search depth cap (overrides the document)");
  app.add_option("--fock-level", fockLevel, "Fock truncation level (overrides the document)");
  auto* seedOpt = app.add_option("--seed", seed, "random seed (overrides the document)");
  app.add_option("--format", format, "output format")
      ->check(CLI::IsMember({"text", "structured"}));

  std::string specPath;
  int instances = 4;
  int order = 1;
  int pairs = 4;
  auto* validate = app.add_subcommand("validate", "parse a spec and check every invariant");
  auto* analyze = app.add_subcommand("analyze", "ideal lattice, witnesses and verdict");
  auto* norm = app.add_subcommand("norm", "Gram-formula vs flattened norms on seeded sums");
  auto* tensor = app.add_subcommand("tensor", "tensor power table");
  auto* witness = app.add_subcommand("witness", "attempt the freeness witness routes");
  auto* fock = app.add_subcommand("fock-check", "truncated Fock relation residuals");
  auto* index = app.add_subcommand("index", "quasi-basis index data of an inclusion");
  for (auto* cmd : {validate, analyze, norm, tensor, witness, fock, index}) {
    cmd->add_option("spec", specPath, "spec file")->required();
    cmd->fallthrough();
  }
  norm->add_option("--instances", instances, "number of random sums")->check(CLI::PositiveNumber);
  witness->add_option("--order", order, "freeness order to certify")->check(CLI::PositiveNumber);
  fock->add_option("--pairs", pairs, "number of random vector pairs")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    hilbim::SpecDocument doc = hilbim::parse_spec_file(specPath);
    if (tol > 0.0) doc.options.tol = tol;
    if (depthCap > 0) doc.options.depth_cap = depthCap;
    if (fockLevel >= 0) doc.options.fock_level = fockLevel;
    if (seedOpt->count() > 0) doc.options.seed = seed;

    if (app.got_subcommand(validate)) return run_validate(doc, format);
    if (app.got_subcommand(analyze)) return run_analyze(doc, format);
    if (app.got_subcommand(norm)) return run_norm(doc, format, instances);
    if (app.got_subcommand(tensor))
      return run_tensor(doc, format, std::min(doc.options.depth_cap, 4));
    if (app.got_subcommand(witness)) return run_witness(doc, format, order);
    if (app.got_subcommand(fock)) return run_fock_check(doc, format, pairs);
    if (app.got_subcommand(index)) return run_index(doc, format);
    return 2;
  } catch (const hilbim::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_input_error(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
