#include "svfkit/cli.hpp"

#include "svfkit/dimension.hpp"
#include "svfkit/equilibrium.hpp"
#include "svfkit/errors.hpp"
#include "svfkit/linalg.hpp"
#include "svfkit/multilinear.hpp"
#include "svfkit/pressure.hpp"
#include "svfkit/structure.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace svfkit::cli {

namespace {

const std::vector<std::string> kCommands = {"classify", "pressure", "affdim", "equilibria",
                                            "lyapunov", "drop",     "lift",   "wedge"};

// ---- input -------------------------------------------------------------

[[noreturn]] void fail(const std::string& source, const std::string& field, const std::string& what) {
  throw InputError(source + ": " + field + ": " + what);
}

std::string entry_field(std::size_t i, std::size_t r, std::size_t c) {
  return "matrices[" + std::to_string(i) + "][" + std::to_string(r) + "][" + std::to_string(c) + "]";
}

double parse_float_entry(const std::string& text, const std::string& source, const std::string& field) {
  if (text.find('/') != std::string::npos) {
    try {
      return to_double(parse_rational(text));
    } catch (const InputError& e) {
      fail(source, field, e.what());
    }
  }
  const char* begin = text.c_str();
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(begin, &end);
  if (text.empty() || end != begin + text.size() || errno == ERANGE || !std::isfinite(x))
    fail(source, field, "not a finite decimal: '" + text + "'");
  return x;
}

// ---- output helpers ----------------------------------------------------

Json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

Json nums(const std::vector<double>& v) {
  Json out = Json::array();
  for (double x : v) out.push_back(num(x));
  return out;
}

Json matrix_json(const MatrixD& m) {
  Json out = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(num(m(i, j)));
    out.push_back(std::move(row));
  }
  return out;
}

Json matrix_json(const MatrixQ& m) {
  Json out = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(to_string(m(i, j)));
    out.push_back(std::move(row));
  }
  return out;
}

Json strings(const std::vector<std::string>& v) { return Json(v); }

std::string combo_string(const Combination& c) {
  std::string out = "{";
  for (std::size_t i = 0; i < c.size(); ++i) out += (i ? "," : "") + std::to_string(c[i] + 1);
  return out + "}";
}

Json estimate_json(const PressureEstimate& e) {
  Json out;
  out["lower"] = num(e.lower);
  out["upper"] = num(e.upper);
  out["n_used"] = e.n_used;
  out["exact"] = e.exact;
  out["methods"] = strings(e.methods);
  return out;
}

Json affdim_json(const AffinityDimension& a) {
  Json out;
  out["lo"] = num(a.lo);
  out["hi"] = num(a.hi);
  out["width"] = num(a.hi - a.lo);
  out["bound_lo"] = num(a.bound_lo);
  out["bound_hi"] = num(a.bound_hi);
  out["exact"] = a.exact;
  out["route"] = a.route;
  out["contractive"] = a.contractive;
  out["certified"] = a.certified;
  out["capped"] = a.capped;
  out["iterations"] = a.iterations;
  out["notes"] = strings(a.notes);
  return out;
}

Json structure_json(const StructureReport& r) {
  Json out;
  out["verdict"] = to_string(r.verdict);
  out["certified"] = r.certified;
  out["backend"] = r.backend == Backend::Exact ? "rational" : "float";
  out["method"] = r.method;
  out["algebra_dim"] = r.algebra_dim;
  if (r.verdict == Verdict::Reducible) {
    out["witness_dim"] = r.witness.cols();
    out["witness"] = r.witness_exact ? matrix_json(*r.witness_exact) : matrix_json(r.witness);
    out["witness_exact"] = r.witness_exact.has_value();
  } else {
    out["witness"] = nullptr;
  }
  out["notes"] = strings(r.notes);
  return out;
}

Json block_json(const BlockTriangularization& b) {
  Json out;
  out["blocks"] = b.blocks;
  out["certified"] = b.certified;
  out["basis"] = b.basis_exact ? matrix_json(*b.basis_exact) : matrix_json(b.basis);
  out["basis_exact"] = b.basis_exact.has_value();
  out["notes"] = strings(b.notes);
  return out;
}

Json permutation_json(const PermutationForm& f) {
  Json out;
  out["standard_basis"] = f.standard_basis;
  out["basis"] = f.basis_exact ? matrix_json(*f.basis_exact) : matrix_json(f.basis);
  Json perms = Json::array();
  for (const auto& p : f.permutation) {
    Json row = Json::array();
    for (int j : p) row.push_back(j + 1);
    perms.push_back(std::move(row));
  }
  out["permutations"] = std::move(perms);
  Json scalars = Json::array();
  for (std::size_t i = 0; i < f.scalars.size(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < f.scalars[i].size(); ++j) {
      if (f.scalars_exact)
        row.push_back(to_string((*f.scalars_exact)[i][j]));
      else
        row.push_back(num(f.scalars[i][j]));
    }
    scalars.push_back(std::move(row));
  }
  out["scalars"] = std::move(scalars);
  out["lines_examined"] = f.lines_examined;
  return out;
}

Json measure_json(const MeasureSpec& spec) {
  Json out;
  out["kind"] = spec_kind(spec);
  if (const auto* b = std::get_if<BernoulliSpec>(&spec)) {
    out["probs"] = nums(b->probs);
    if (b->exact) {
      Json ex = Json::array();
      for (const auto& q : *b->exact) ex.push_back(to_string(q));
      out["probs_exact"] = std::move(ex);
    }
  } else if (const auto* m = std::get_if<MarkovSpec>(&spec)) {
    out["transition"] = matrix_json(m->transition);
    out["stationary"] = nums(m->stationary);
    out["alphabet"] = m->alphabet;
  } else if (const auto* g = std::get_if<PerronGibbsSpec>(&spec)) {
    out["perron_value"] = num(g->perron_value);
    out["left"] = nums(g->left);
    out["right"] = nums(g->right);
    out["period"] = g->period;
    Json ms = Json::array();
    for (const auto& a : g->matrices) ms.push_back(matrix_json(a));
    out["matrices"] = std::move(ms);
  }
  return out;
}

Json state_json(const EquilibriumState& st) {
  Json out;
  out["measure"] = measure_json(st.spec);
  out["pressure"] = num(st.pressure);
  out["gibbs_constant"] = num(st.gibbs_constant);
  out["period"] = st.period;
  out["fully_supported"] = st.fully_supported;
  Json comp = Json::array();
  for (auto c : st.component) comp.push_back(c + 1);
  out["component"] = std::move(comp);
  out["labels"] = strings(st.labels);
  return out;
}

Json quasimult_json(const QuasimultReport& q) {
  Json out;
  out["s"] = num(q.s);
  out["found"] = q.found;
  out["c"] = num(q.c);
  out["K"] = q.K;
  out["c_by_length"] = nums(q.c_by_length);
  out["pairs_tested"] = q.pairs_tested;
  out["sampled"] = q.sampled;
  out["worst"] = {word_to_string(q.worst_i), word_to_string(q.worst_bridge), word_to_string(q.worst_j)};
  return out;
}

Json equilibria_json(const EquilibriumReport& r) {
  Json out;
  out["s"] = num(r.s);
  out["route"] = r.route;
  out["state_count"] = r.states.size();
  out["multiplicity_bound"] = r.multiplicity_bound;
  out["exact"] = r.exact;
  out["complete"] = r.complete;
  out["pressure"] = r.exact ? num(r.pressure) : Json(nullptr);
  out["pressure_estimate"] = estimate_json(r.pressure_estimate);
  Json states = Json::array();
  for (const auto& st : r.states) states.push_back(state_json(st));
  out["states"] = std::move(states);
  Json cands = Json::array();
  for (const auto& c : r.candidates) {
    Json cj;
    cj["name"] = c.name;
    cj["potential"] = c.potential.name();
    cj["estimate"] = estimate_json(c.estimate);
    cands.push_back(std::move(cj));
  }
  out["candidates"] = std::move(cands);
  out["quasimult"] = r.quasimult ? quasimult_json(*r.quasimult) : Json(nullptr);
  out["notes"] = strings(r.notes);
  return out;
}

Json spectrum_json(const LyapunovSpectrum& sp) {
  Json out;
  out["method"] = to_string(sp.method);
  out["exponents"] = nums(sp.exponents);
  out["half_widths"] = nums(sp.half_widths);
  out["std_errors"] = nums(sp.std_errors);
  out["partial_sums"] = nums(sp.partial_sums);
  out["partial_half_widths"] = nums(sp.partial_half_widths);
  out["partial_sums_upper"] = sp.partial_sums_upper;
  if (sp.method == LyapunovMethod::Deterministic) out["n"] = sp.n;
  if (sp.method == LyapunovMethod::MonteCarlo) {
    out["samples"] = sp.samples;
    out["length"] = sp.length;
    out["seed"] = sp.seed;
  }
  return out;
}

Json drop_json(const DropReport& r) {
  Json out;
  out["removed"] = r.removed + 1;
  out["verdict"] = to_string(r.verdict);
  out["gap"] = num(r.gap);
  out["full"] = affdim_json(r.full);
  out["reduced"] = affdim_json(r.reduced);
  Json gaps = Json::array();
  for (const auto& g : r.gaps) gaps.push_back({{"s", num(g.s)}, {"gap_lower", num(g.gap_lower)}, {"gap_upper", num(g.gap_upper)}});
  out["gaps"] = std::move(gaps);
  out["notes"] = strings(r.notes);
  return out;
}

// ---- commands ----------------------------------------------------------

double require_s(const JobConfig& cfg, const MatrixTuple& tuple) {
  if (!cfg.s) throw InputError(cfg.command + " needs --s");
  const double s = *cfg.s;
  if (!(s >= 0.0 && s <= static_cast<double>(tuple.dim())))
    throw InputError("--s must lie in [0, " + std::to_string(tuple.dim()) + "]");
  return s;
}

ComputeOptions compute_options(const JobConfig& cfg) {
  ComputeOptions c;
  c.threads = cfg.threads;
  return c;
}

ClassifyOptions classify_options(const JobConfig& cfg) {
  ClassifyOptions o;
  o.n_max = cfg.n_max;
  o.compute = compute_options(cfg);
  o.quasimult.threads = cfg.threads;
  if (cfg.seed) o.quasimult.seed = *cfg.seed;
  return o;
}

void write_csv_sidecar(const JobConfig& cfg, const std::function<void(std::ostream&)>& write) {
  std::ofstream out(*cfg.csv);
  if (!out) throw InputError("cannot open --csv file " + *cfg.csv);
  write(out);
}

struct Outcome {
  Json payload;
  bool exact = true;
  bool inconclusive = false;
};

Outcome cmd_classify(const JobConfig& cfg, const MatrixTuple& tuple) {
  Outcome o;
  auto structure = irreducibility_test(tuple);
  o.payload["structure"] = structure_json(structure);
  std::optional<BlockTriangularization> blocks;
  if (structure.verdict == Verdict::Reducible) blocks = block_triangularize(tuple);
  o.payload["block_form"] = blocks ? block_json(*blocks) : Json(nullptr);
  auto form = detect_generalized_permutation(tuple);
  o.payload["permutation_form"] = form ? permutation_json(*form) : Json(nullptr);
  o.payload["similitude"] = is_similitude_tuple(tuple);
  if (cfg.s) {
    auto report = equilibria(tuple, require_s(cfg, tuple), classify_options(cfg));
    o.payload["equilibria"] = equilibria_json(report);
    o.exact = report.exact;
    o.inconclusive = !report.complete;
  } else {
    o.payload["equilibria"] = nullptr;
    o.exact = structure.certified;
  }
  return o;
}

Outcome cmd_pressure(const JobConfig& cfg, const MatrixTuple& tuple) {
  std::vector<double> grid;
  if (cfg.grid && cfg.s) throw InputError("pressure takes --s or --grid, not both");
  if (cfg.grid) {
    grid = parse_grid(*cfg.grid);
  } else {
    grid = {require_s(cfg, tuple)};
  }
  for (double s : grid)
    if (s < 0.0 || s > static_cast<double>(tuple.dim()) + 1e-12) throw InputError("grid points must lie in [0, d]");
  auto route = find_exact_route(tuple);
  TupleSpectra spectra(tuple, compute_options(cfg));
  auto curve = pressure_curve(spectra, grid, cfg.n_max, route ? route->pressure : ExactPressure{});
  Outcome o;
  o.payload["route"] = route ? Json(route->name) : Json(nullptr);
  Json points = Json::array();
  for (const auto& p : curve) {
    Json pj;
    pj["s"] = num(p.s);
    pj["estimate"] = estimate_json(p.estimate);
    pj["exact"] = p.exact ? num(*p.exact) : Json(nullptr);
    o.exact = o.exact && p.exact.has_value();
    points.push_back(std::move(pj));
  }
  o.payload["points"] = std::move(points);
  if (cfg.csv) write_csv_sidecar(cfg, [&](std::ostream& out) { write_curve_csv(out, curve); });
  return o;
}

Outcome cmd_affdim(const JobConfig& cfg, const MatrixTuple& tuple) {
  AffinityOptions ao;
  ao.n_max = cfg.n_max;
  ao.tol = cfg.tol;
  auto a = affinity_dimension_auto(tuple, ao, true, compute_options(cfg));
  Outcome o;
  o.payload = affdim_json(a);
  o.exact = a.exact;
  o.inconclusive = !a.certified;
  return o;
}

Outcome cmd_equilibria(const JobConfig& cfg, const MatrixTuple& tuple) {
  const double s = require_s(cfg, tuple);
  auto report = equilibria(tuple, s, classify_options(cfg));
  Outcome o;
  o.payload = equilibria_json(report);
  if (report.exact && cfg.gibbs_n > 0) {
    Json rows = Json::array();
    for (const auto& g : gibbs_check(report, tuple, s, cfg.gibbs_n)) {
      Json gj;
      gj["gibbs_constant"] = num(g.gibbs_constant);
      gj["min_ratio"] = num(g.min_ratio);
      gj["max_ratio"] = num(g.max_ratio);
      gj["min_svf_ratio"] = num(g.min_svf_ratio);
      gj["max_svf_ratio"] = num(g.max_svf_ratio);
      gj["within"] = g.within;
      rows.push_back(std::move(gj));
    }
    o.payload["gibbs"] = {{"n", cfg.gibbs_n}, {"states", std::move(rows)}};
  } else {
    o.payload["gibbs"] = nullptr;
  }
  o.exact = report.exact;
  o.inconclusive = !report.complete;
  return o;
}

std::vector<double> parse_weights(const std::string& text, std::size_t N) {
  std::vector<double> p;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) p.push_back(to_double(parse_rational(item)));
  if (p.size() != N) throw InputError("--weights needs " + std::to_string(N) + " entries");
  double total = 0.0;
  for (double x : p) {
    if (x < 0.0) throw InputError("--weights must be nonnegative");
    total += x;
  }
  if (std::fabs(total - 1.0) > 1e-12) throw InputError("--weights must sum to 1");
  return p;
}

Outcome cmd_lyapunov(const JobConfig& cfg, const MatrixTuple& tuple) {
  MeasureSpec mu;
  Json measure;
  if (cfg.state) {
    if (cfg.weights) throw InputError("lyapunov takes --state or --weights, not both");
    const double s = require_s(cfg, tuple);
    auto report = equilibria(tuple, s, classify_options(cfg));
    if (*cfg.state == 0 || *cfg.state > report.states.size())
      throw InputError("--state out of range: " + std::to_string(report.states.size()) + " explicit states at this s");
    mu = report.states[*cfg.state - 1].spec;
    measure = {{"source", "equilibrium state"}, {"state", *cfg.state}, {"route", report.route}};
  } else {
    std::vector<double> p = cfg.weights ? parse_weights(*cfg.weights, tuple.size())
                                        : std::vector<double>(tuple.size(), 1.0 / static_cast<double>(tuple.size()));
    mu = BernoulliSpec{p, std::nullopt};
    measure = {{"source", cfg.weights ? "weights" : "uniform"}};
  }
  measure["measure"] = measure_json(mu);
  LyapunovOptions lo;
  lo.method = parse_lyapunov_method(cfg.method);
  lo.n = cfg.lyapunov_n;
  lo.samples = cfg.samples;
  lo.length = cfg.length;
  lo.seed = cfg.seed;
  lo.threads = cfg.threads;
  auto ld = lyapunov_dimension(tuple, mu, lo);
  Outcome o;
  o.payload["measure"] = std::move(measure);
  o.payload["spectrum"] = spectrum_json(ld.spectrum);
  Json dim;
  dim["lo"] = num(ld.lo);
  dim["hi"] = num(ld.hi);
  dim["entropy"] = num(ld.entropy);
  dim["entropy_exact"] = ld.entropy_exact;
  dim["capped"] = ld.capped;
  dim["certified"] = ld.certified;
  dim["notes"] = strings(ld.notes);
  o.payload["dimension"] = std::move(dim);
  o.exact = ld.spectrum.method == LyapunovMethod::ClosedForm && ld.entropy_exact;
  o.inconclusive = !ld.certified;
  return o;
}

Outcome cmd_drop(const JobConfig& cfg, const MatrixTuple& tuple) {
  if (!cfg.remove) throw InputError("drop needs --remove");
  if (*cfg.remove == 0 || *cfg.remove > tuple.size())
    throw InputError("--remove must lie in 1.." + std::to_string(tuple.size()));
  DropOptions d;
  d.affinity.n_max = cfg.n_max;
  d.affinity.tol = cfg.tol;
  d.compute = compute_options(cfg);
  if (cfg.grid) d.s_grid = parse_grid(*cfg.grid);
  auto r = dimension_drop(tuple, *cfg.remove - 1, d);
  Outcome o;
  o.payload = drop_json(r);
  o.exact = r.full.exact && r.reduced.exact;
  o.inconclusive = r.verdict == DropVerdict::Inconclusive;
  if (cfg.csv) write_csv_sidecar(cfg, [&](std::ostream& out) { write_gap_csv(out, r.gaps); });
  return o;
}

Outcome cmd_lift(const JobConfig& cfg, const MatrixTuple& tuple) {
  const double s = require_s(cfg, tuple);
  const int d = static_cast<int>(tuple.dim());
  int k = cfg.k ? *cfg.k : (s == 0.0 ? 0 : static_cast<int>(std::ceil(s)) - 1);
  if (k < 0 || k >= d || s < k || s > k + 1) throw InputError("lift needs 0 <= k < d and k <= s <= k + 1");
  auto form = detect_generalized_permutation(tuple);
  if (!form) throw DomainError("lift: the tuple is not a generalised permutation tuple in any detected basis");
  auto lift = permutation_lift(*form, s, k);
  Outcome o;
  o.payload["s"] = num(s);
  o.payload["k"] = k;
  o.payload["size"] = lift.labels.size();
  o.payload["standard_basis"] = form->standard_basis;
  Json labels = Json::array();
  for (const auto& l : lift.labels) labels.push_back(to_string(l));
  o.payload["labels"] = std::move(labels);
  Json ms = Json::array();
  for (const auto& m : lift.matrices) ms.push_back(matrix_json(m));
  o.payload["matrices"] = std::move(ms);
  o.exact = false;
  return o;
}

Outcome cmd_wedge(const JobConfig& cfg, const MatrixTuple& tuple) {
  if (!cfg.k) throw InputError("wedge needs --k");
  const int d = static_cast<int>(tuple.dim());
  const int k = *cfg.k;
  if (k < 0 || k > d) throw InputError("--k must lie in [0, d]");
  auto w = exterior_power_tuple(tuple, k);
  WedgeBasis index(d, k);
  Outcome o;
  o.payload["k"] = k;
  o.payload["size"] = index.size();
  Json basis = Json::array();
  for (const auto& c : index.combinations()) basis.push_back(combo_string(c));
  o.payload["basis"] = std::move(basis);
  Json ms = Json::array();
  if (w.is_exact()) {
    for (const auto& m : w.exact()) ms.push_back(matrix_json(m));
  } else {
    for (const auto& m : w.matrices()) ms.push_back(matrix_json(m));
  }
  o.payload["matrices"] = std::move(ms);
  o.exact = w.is_exact();
  return o;
}

Json config_json(const JobConfig& cfg) {
  Json c;
  c["s"] = cfg.s ? num(*cfg.s) : Json(nullptr);
  c["grid"] = cfg.grid ? Json(*cfg.grid) : Json(nullptr);
  c["n_max"] = cfg.n_max;
  c["tol"] = num(cfg.tol);
  c["seed"] = cfg.seed ? Json(*cfg.seed) : Json(nullptr);
  c["threads"] = cfg.threads;
  c["backend"] = cfg.backend ? Json(*cfg.backend) : Json(nullptr);
  c["strict"] = cfg.strict;
  c["exact"] = cfg.exact;
  if (cfg.command == "drop") c["remove"] = cfg.remove ? Json(*cfg.remove) : Json(nullptr);
  if (cfg.command == "lift" || cfg.command == "wedge") c["k"] = cfg.k ? Json(*cfg.k) : Json(nullptr);
  if (cfg.command == "lyapunov") {
    c["method"] = cfg.method;
    c["samples"] = cfg.samples;
    c["length"] = cfg.length;
    c["n"] = cfg.lyapunov_n;
    c["weights"] = cfg.weights ? Json(*cfg.weights) : Json(nullptr);
    c["state"] = cfg.state ? Json(*cfg.state) : Json(nullptr);
  }
  if (cfg.command == "equilibria") c["gibbs_n"] = cfg.gibbs_n;
  return c;
}

}  // namespace

MatrixTuple parse_input_text(const std::string& text, const std::string& source,
                             const std::optional<std::string>& backend) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(source + ": invalid JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!doc.is_object()) fail(source, "(top level)", "expected an object");
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    if (key != "dimension" && key != "scalars" && key != "matrices" && key != "labels")
      fail(source, key, "unknown field");
  }
  if (!doc.contains("dimension") || !doc["dimension"].is_number_integer()) fail(source, "dimension", "expected an integer");
  const long long dl = doc["dimension"].get<long long>();
  if (dl < 1 || dl > 64) fail(source, "dimension", "must lie in 1..64");
  const auto d = static_cast<std::size_t>(dl);

  if (!doc.contains("scalars") || !doc["scalars"].is_string()) fail(source, "scalars", "expected \"rational\" or \"float\"");
  std::string scalars = doc["scalars"].get<std::string>();
  if (scalars != "rational" && scalars != "float") fail(source, "scalars", "expected \"rational\" or \"float\"");
  if (backend) {
    if (*backend != "rational" && *backend != "float") throw InputError("--backend must be rational or float");
    scalars = *backend;
  }

  if (!doc.contains("matrices") || !doc["matrices"].is_array()) fail(source, "matrices", "expected an array");
  const auto& ms = doc["matrices"];
  if (ms.size() < 2) fail(source, "matrices", "need at least 2 matrices");

  std::vector<std::string> labels;
  if (doc.contains("labels")) {
    const auto& ls = doc["labels"];
    if (!ls.is_array()) fail(source, "labels", "expected an array of strings");
    for (std::size_t i = 0; i < ls.size(); ++i) {
      if (!ls[i].is_string()) fail(source, "labels[" + std::to_string(i) + "]", "expected a string");
      labels.push_back(ls[i].get<std::string>());
    }
    if (labels.size() != ms.size()) fail(source, "labels", "length differs from matrices");
  }

  std::vector<MatrixQ> exact;
  std::vector<MatrixD> floats;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const std::string mfield = "matrices[" + std::to_string(i) + "]";
    const auto& m = ms[i];
    if (!m.is_array()) fail(source, mfield, "expected an array of rows");
    if (m.size() != d) fail(source, mfield, "has " + std::to_string(m.size()) + " rows, dimension is " + std::to_string(d));
    MatrixQ q(d, d);
    MatrixD f(d, d);
    for (std::size_t r = 0; r < d; ++r) {
      const std::string rfield = mfield + "[" + std::to_string(r) + "]";
      if (!m[r].is_array()) fail(source, rfield, "expected an array of entries");
      if (m[r].size() != d)
        fail(source, rfield, "has " + std::to_string(m[r].size()) + " entries, matrix is not " + std::to_string(d) + "x" +
                                 std::to_string(d));
      for (std::size_t c = 0; c < d; ++c) {
        const std::string field = entry_field(i, r, c);
        if (!m[r][c].is_string()) fail(source, field, "entries must be strings such as \"1/3\" or \"0.25\"");
        const std::string entry = m[r][c].get<std::string>();
        if (scalars == "rational") {
          try {
            q(r, c) = parse_rational(entry);
          } catch (const InputError& e) {
            fail(source, field, e.what());
          }
        } else {
          f(r, c) = parse_float_entry(entry, source, field);
        }
      }
    }
    if (scalars == "rational") {
      if (determinant(q) == 0) fail(source, mfield, "is singular (det = 0)");
      exact.push_back(std::move(q));
    } else {
      floats.push_back(std::move(f));
    }
  }
  try {
    return scalars == "rational" ? MatrixTuple::from_exact(std::move(exact), labels)
                                 : MatrixTuple::from_float(std::move(floats), labels);
  } catch (const std::exception& e) {
    // Float singularity is only visible to the tuple's own check.
    throw InputError(source + ": matrices: " + e.what());
  }
}

MatrixTuple parse_input(const std::string& path, const std::optional<std::string>& backend) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_input_text(buf.str(), path, backend);
}

Json tuple_to_json(const MatrixTuple& tuple) {
  Json out;
  out["dimension"] = tuple.dim();
  out["scalars"] = tuple.is_exact() ? "rational" : "float";
  Json ms = Json::array();
  for (std::size_t i = 0; i < tuple.size(); ++i) {
    Json m = Json::array();
    for (std::size_t r = 0; r < tuple.dim(); ++r) {
      Json row = Json::array();
      for (std::size_t c = 0; c < tuple.dim(); ++c) {
        if (tuple.is_exact()) {
          row.push_back(to_string(tuple.exact()[i](r, c)));
        } else {
          std::ostringstream s;
          s.precision(17);
          s << tuple[i](r, c);
          row.push_back(s.str());
        }
      }
      m.push_back(std::move(row));
    }
    ms.push_back(std::move(m));
  }
  out["matrices"] = std::move(ms);
  if (!tuple.labels().empty()) out["labels"] = tuple.labels();
  return out;
}

RunResult run(const JobConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  if (cfg.threads == 0) throw InputError("--threads must be positive");
  auto tuple = parse_input(cfg.input, cfg.backend);

  Outcome o;
  if (cfg.command == "classify") o = cmd_classify(cfg, tuple);
  else if (cfg.command == "pressure") o = cmd_pressure(cfg, tuple);
  else if (cfg.command == "affdim") o = cmd_affdim(cfg, tuple);
  else if (cfg.command == "equilibria") o = cmd_equilibria(cfg, tuple);
  else if (cfg.command == "lyapunov") o = cmd_lyapunov(cfg, tuple);
  else if (cfg.command == "drop") o = cmd_drop(cfg, tuple);
  else if (cfg.command == "lift") o = cmd_lift(cfg, tuple);
  else if (cfg.command == "wedge") o = cmd_wedge(cfg, tuple);
  else throw InputError("unknown command '" + cfg.command + "'");

  RunResult res;
  Json& r = res.report;
  r["command"] = cfg.command;
  r["config"] = config_json(cfg);
  Json input;
  input["path"] = cfg.input;
  input["dimension"] = tuple.dim();
  input["count"] = tuple.size();
  input["backend"] = tuple.is_exact() ? "rational" : "float";
  input["labels"] = tuple.labels();
  r["input"] = std::move(input);
  r[cfg.command] = std::move(o.payload);
  r["flags"] = {{"exact", o.exact}, {"inconclusive", o.inconclusive}};
  if (cfg.timing) {
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
    r["timing"] = {{"seconds", dt.count()}};
  }

  if (cfg.exact && !o.exact) res.exit_code = kExitNumeric;
  else if (cfg.strict && o.inconclusive) res.exit_code = kExitInconclusive;
  return res;
}

std::string dump(const Json& report) { return report.dump(2) + "\n"; }

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  JobConfig cfg;
  if (const char* env = std::getenv("SVFKIT_THREADS"); env && *env) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (*end != '\0' || v == 0 || v > 1024) {
      err << "error: SVFKIT_THREADS must be a positive integer\n";
      return kExitParse;
    }
    cfg.threads = static_cast<unsigned>(v);
  }

  CLI::App app{"Singular value pressure, affinity dimension and equilibrium states of matrix tuples"};
  app.add_option("command", cfg.command, "classify | pressure | affdim | equilibria | lyapunov | drop | lift | wedge")
      ->required()
      ->check(CLI::IsMember(kCommands));
  app.add_option("input", cfg.input, "input JSON file")->required();
  app.add_option("--s", cfg.s, "exponent s in [0, d]");
  app.add_option("--grid", cfg.grid, "grid a:b:step for pressure curves and drop gaps");
  app.add_option("--nmax", cfg.n_max, "longest word length for the bounds")->check(CLI::Range(1, 64));
  app.add_option("--tol", cfg.tol, "bisection tolerance")->check(CLI::PositiveNumber);
  app.add_option("--seed", cfg.seed, "seed for every sampled computation");
  app.add_option("--threads", cfg.threads, "worker threads (default SVFKIT_THREADS or 1)")->check(CLI::Range(1, 1024));
  app.add_option("--backend", cfg.backend, "override the scalars field")->check(CLI::IsMember({"rational", "float"}));
  app.add_option("--remove", cfg.remove, "drop: 1-based index of the removed map");
  app.add_option("--k", cfg.k, "lift and wedge degree");
  app.add_flag("--exact", cfg.exact, "exit 3 unless the result comes from an exact route");
  app.add_flag("--strict", cfg.strict, "exit 4 on an inconclusive verdict");
  app.add_option("--output", cfg.output, "write the report here instead of stdout");
  app.add_option("--csv", cfg.csv, "CSV sidecar for pressure curves and drop gaps");
  app.add_flag("--timing", cfg.timing, "include wall time in the report");
  app.add_option("--method", cfg.method, "lyapunov: auto | closed-form | deterministic-n | monte-carlo");
  app.add_option("--samples", cfg.samples, "lyapunov: Monte Carlo trajectories");
  app.add_option("--length", cfg.length, "lyapunov: Monte Carlo trajectory length");
  app.add_option("--n", cfg.lyapunov_n, "lyapunov: deterministic word length");
  app.add_option("--weights", cfg.weights, "lyapunov: Bernoulli weights p1,p2,...");
  app.add_option("--state", cfg.state, "lyapunov: use equilibrium state j at --s");
  app.add_option("--gibbs-n", cfg.gibbs_n, "equilibria: word length for the Gibbs check (0 skips it)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitParse;
  }

  try {
    auto res = run(cfg);
    const std::string text = dump(res.report);
    if (cfg.output) {
      std::ofstream f(*cfg.output, std::ios::binary);
      if (!f) {
        err << "error: cannot open " << *cfg.output << "\n";
        return kExitParse;
      }
      f << text;
    } else {
      out << text;
    }
    if (res.exit_code == kExitNumeric) err << "error: no exact route for this input\n";
    if (res.exit_code == kExitInconclusive) err << "inconclusive\n";
    return res.exit_code;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const BudgetError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
}

}  // namespace svfkit::cli
