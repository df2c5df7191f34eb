#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "freecircle/freeconv.hpp"
#include "freecircle/rmtsim.hpp"

namespace freecircle::cli {

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& what) {
  throw Error(ErrorKind::Config, "config field '" + field + "': " + what);
}

std::string join(const std::string& where, const std::string& key) {
  return where.empty() ? key : where + "." + key;
}

std::string index(const std::string& where, std::size_t i) { return where + "[" + std::to_string(i) + "]"; }

const json& need(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object()) bad(where.empty() ? "<root>" : where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) bad(join(where, key), "missing");
  return *it;
}

double as_double(const json& j, const std::string& field) {
  if (!j.is_number()) bad(field, "expected a number");
  return j.get<double>();
}

int as_int(const json& j, const std::string& field) {
  if (!j.is_number_integer()) bad(field, "expected an integer");
  return j.get<int>();
}

int get_int(const json& obj, const std::string& key, const std::string& where, std::optional<int> fallback = {}) {
  if (fallback && (!obj.is_object() || !obj.contains(key))) return *fallback;
  return as_int(need(obj, key, where), join(where, key));
}

double get_double(const json& obj, const std::string& key, const std::string& where,
                  std::optional<double> fallback = {}) {
  if (fallback && (!obj.is_object() || !obj.contains(key))) return *fallback;
  return as_double(need(obj, key, where), join(where, key));
}

int positive(int v, const std::string& field) {
  if (v < 1) bad(field, "must be >= 1");
  return v;
}

std::vector<int> int_list(const json& j, const std::string& field) {
  if (j.is_number_integer()) return {j.get<int>()};
  if (!j.is_array()) bad(field, "expected an integer or a list of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_int(j[i], index(field, i)));
  return out;
}

Complex as_complex(const json& j, const std::string& field) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2) return {as_double(j[0], index(field, 0)), as_double(j[1], index(field, 1))};
  bad(field, "expected a number or a [re, im] pair");
}

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

template <typename F>
auto in_field(const std::string& field, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    const std::string what = e.what();
    if (e.kind() == ErrorKind::Config || what.rfind("config field", 0) == 0) throw;
    throw Error(e.kind(), "config field '" + field + "': " + what);
  }
}

TailBehavior parse_tail(const json& obj, const std::string& where) {
  if (!obj.contains("tail")) return TailBehavior::Unknown;
  const json& t = obj["tail"];
  const std::string field = join(where, "tail");
  if (!t.is_string()) bad(field, "expected \"diverges\", \"converges\" or \"unknown\"");
  const auto s = t.get<std::string>();
  if (s == "diverges") return TailBehavior::Diverges;
  if (s == "converges") return TailBehavior::Converges;
  if (s == "unknown") return TailBehavior::Unknown;
  bad(field, "unknown tail behavior \"" + s + "\"");
}

std::vector<CircleMeasure> measure_list(const json& j, const std::string& field) {
  if (!j.is_array()) bad(field, "expected a list of measures");
  std::vector<CircleMeasure> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(parse_measure(j[i], index(field, i)));
  return out;
}

std::string fmt(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void emit(const json& j, std::string& out, int depth) {
  const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(2 * depth), ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {  // std::map keeps keys sorted
        if (!first) out += ",\n";
        first = false;
        out += pad + json(it.key()).dump() + ": ";
        emit(it.value(), out, depth + 1);
      }
      out += "\n" + close + "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      const bool flat = std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_primitive(); });
      if (flat) {
        out += "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) out += ", ";
          emit(j[i], out, depth + 1);
        }
        out += "]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += pad;
        emit(j[i], out, depth + 1);
      }
      out += "\n" + close + "]";
      return;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? fmt(v) : "null";
      return;
    }
    default:
      out += j.dump();
  }
}

json params_json(const std::vector<std::pair<std::string, double>>& params) {
  json p = json::object();
  for (const auto& [k, v] : params) p[k] = v;
  return p;
}

std::string params_csv(const std::vector<std::pair<std::string, double>>& params) {
  std::string s;
  for (const auto& [k, v] : params) {
    if (!s.empty()) s += ';';
    s += k + "=" + fmt(v);
  }
  return s;
}

struct CommandResult {
  json doc;
  std::string csv;
  bool failed = false;
};

CommandResult convolve(const json& cfg) {
  const json& ms = need(cfg, "measures", "");
  if (!ms.is_array() || ms.size() != 2) bad("measures", "expected exactly two measures");
  const CircleMeasure m1 = parse_measure(ms[0], "measures[0]");
  const CircleMeasure m2 = parse_measure(ms[1], "measures[1]");
  const int K = positive(get_int(cfg, "K", ""), "K");
  const double threshold = get_double(cfg, "threshold", "", kSConditioningThreshold);
  JointMomentOptions options;
  options.max_letters = get_int(cfg, "max_letters", "", kDefaultMaxLetters);

  const MomentVector c1 = in_field("measures[0]", [&] { return m1.moments(K); });
  const MomentVector c2 = in_field("measures[1]", [&] { return m2.moments(K); });
  const MomentVector oracle = convolve_moments(c1, c2, K, options);
  std::optional<MomentVector> via_s;
  std::string s_status = "ok";
  try {
    via_s = convolve_s(c1, c2, K, threshold);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::STransformUndefined) throw;
    s_status = "undefined";
  }

  CommandResult r;
  json rows = json::array();
  double worst = 0.0;
  r.csv = "k,oracle_re,oracle_im,s_re,s_im,discrepancy\n";
  for (int k = 1; k <= K; ++k) {
    const Complex o = oracle[k];
    json row = {{"k", k}, {"oracle", complex_json(o)}};
    double gap = 0.0;
    if (via_s) {
      const Complex s = (*via_s)[k];
      gap = std::abs(s - o);
      row["s"] = complex_json(s);
      r.csv += std::to_string(k) + "," + fmt(o.real()) + "," + fmt(o.imag()) + "," + fmt(s.real()) + "," +
               fmt(s.imag()) + "," + fmt(gap) + "\n";
    } else {
      row["s"] = nullptr;
      r.csv += std::to_string(k) + "," + fmt(o.real()) + "," + fmt(o.imag()) + ",,," + fmt(gap) + "\n";
    }
    row["discrepancy"] = gap;
    worst = std::max(worst, gap);
    rows.push_back(row);
  }
  r.doc = {{"command", "convolve"}, {"K", K}, {"moments", rows}, {"max_discrepancy", worst}, {"s_route", s_status}};
  return r;
}

CommandResult iterate(const json& cfg) {
  const SequenceSpec spec = parse_sequence(need(cfg, "sequence", ""), "sequence");
  const int n_max = positive(get_int(cfg, "n_max", ""), "n_max");
  const int K = positive(get_int(cfg, "K", ""), "K");
  const double tol = get_double(cfg, "tolerance", "", 1e-3);
  JointMomentOptions options;
  options.max_letters = get_int(cfg, "max_letters", "", kDefaultMaxLetters);
  const auto table = diagnose(spec, n_max, K, options);

  CommandResult r;
  json rows = json::array();
  r.csv = "n,max_moment\n";
  for (const DiagnosticRow& row : table) {
    rows.push_back({{"n", row.n}, {"max_moment", row.max_moment}});
    r.csv += std::to_string(row.n) + "," + fmt(row.max_moment) + "\n";
  }
  r.doc = {{"command", "iterate"},
           {"K", K},
           {"rows", rows},
           {"tolerance", tol},
           {"empirically_converging", empirically_converging(table, tol)}};
  return r;
}

CommandResult classify_cmd(const json& cfg) {
  const SequenceSpec spec = parse_sequence(need(cfg, "sequence", ""), "sequence");
  const int horizon = get_int(cfg, "horizon", "");
  if (horizon < 2) bad("horizon", "must be >= 2");
  const ClassificationResult c = classify(spec, horizon);

  json witnesses = json::object();
  for (const auto& [k, v] : c.witnesses) witnesses[k] = v;
  CommandResult r;
  r.doc = {{"command", "classify"},
           {"case", to_string(c.label)},
           {"converges", c.converges_to_uniform},
           {"indeterminate", c.indeterminate},
           {"product_evidence", c.product_evidence},
           {"zero_mean_indices", c.zero_mean_indices},
           {"witnesses", witnesses},
           {"normalization_angles", c.normalization_angles},
           {"horizon", c.horizon}};
  r.csv = "field,value\n";
  r.csv += std::string("case,") + to_string(c.label) + "\n";
  r.csv += std::string("converges,") + (c.converges_to_uniform ? "true" : "false") + "\n";
  r.csv += std::string("indeterminate,") + (c.indeterminate ? "true" : "false") + "\n";
  r.csv += "product_evidence," + c.product_evidence + "\n";
  r.csv += "horizon," + std::to_string(c.horizon) + "\n";
  for (const auto& [k, v] : c.witnesses) r.csv += k + "," + fmt(v) + "\n";
  return r;
}

CommandResult verify_bounds(const json& cfg) {
  std::vector<BoundReport> reports;
  json skipped = json::array();
  bool any = false;

  std::vector<Complex> grid;
  if (cfg.contains("z_grid")) {
    const json& g = cfg["z_grid"];
    if (!g.is_array()) bad("z_grid", "expected a list of complex numbers");
    for (std::size_t i = 0; i < g.size(); ++i) grid.push_back(as_complex(g[i], index("z_grid", i)));
  }
  LemmaGridOptions lg;
  if (cfg.contains("lemma_grid")) {
    const json& o = cfg["lemma_grid"];
    if (!o.is_object()) bad("lemma_grid", "expected an object");
    lg.angles = positive(get_int(o, "angles", "lemma_grid", lg.angles), "lemma_grid.angles");
    lg.radii = positive(get_int(o, "radii", "lemma_grid", lg.radii), "lemma_grid.radii");
    lg.revert_order = positive(get_int(o, "revert_order", "lemma_grid", lg.revert_order), "lemma_grid.revert_order");
    lg.residual_tolerance = get_double(o, "residual_tolerance", "lemma_grid", lg.residual_tolerance);
  }

  if (cfg.contains("measure")) {
    any = true;
    const AtomicMeasure m = parse_atomic(cfg["measure"], "measure");
    const int k_max = positive(get_int(cfg, "k_max", "", 8), "k_max");
    // Lemma inequalities are stated for a real positive first moment.
    const PhaseNormalized norm = in_field("measure", [&] { return normalize_phase(m); });
    const AtomicMeasure normalized = *norm.measure.atoms();
    auto lemma = in_field("measure", [&] { return verify_lemma_bounds(normalized, grid, k_max, lg); });
    reports.insert(reports.end(), lemma.begin(), lemma.end());
  }

  if (cfg.contains("sequence")) {
    any = true;
    const SequenceSpec spec = parse_sequence(cfg["sequence"], "sequence");
    if (cfg.contains("ck_bound")) {
      const json& ck = cfg["ck_bound"];
      const int K = positive(get_int(ck, "K", "ck_bound", 4), "ck_bound.K");
      for (int n : int_list(need(ck, "n", "ck_bound"), "ck_bound.n")) {
        try {
          BoundReport rep = check_ck_bound(spec, n, K);
          rep.id += "@n=" + std::to_string(n);
          reports.push_back(std::move(rep));
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::NotApplicable) throw;
          skipped.push_back({{"id", "ck-bound@n=" + std::to_string(n)}, {"reason", e.what()}});
        }
      }
    }
    if (cfg.contains("f_estimate")) {
      const json& fe = cfg["f_estimate"];
      const int K = positive(get_int(fe, "K", "f_estimate", 4), "f_estimate.K");
      for (int n : int_list(need(fe, "n", "f_estimate"), "f_estimate.n")) {
        BoundReport rep = in_field("f_estimate", [&] { return verify_f_estimate(spec, n, K, grid, lg); });
        rep.id += "@n=" + std::to_string(n);
        reports.push_back(std::move(rep));
      }
    }
  }

  if (cfg.contains("a_list")) {
    any = true;
    const json& al = cfg["a_list"];
    if (!al.is_array()) bad("a_list", "expected a list of numbers");
    std::vector<double> a;
    for (std::size_t i = 0; i < al.size(); ++i) a.push_back(as_double(al[i], index("a_list", i)));
    const SumProduct sp = in_field("a_list", [&] { return sum_product_relation(a); });
    BoundReport rep;
    rep.id = "product-exp-bound";
    rep.add({{"alpha_sum", sp.alpha_sum}}, sp.product, std::exp(-sp.alpha_sum));
    reports.push_back(std::move(rep));
  }
  if (!any) bad("measure", "verify-bounds needs at least one of measure, sequence or a_list");

  CommandResult r;
  json out = json::array();
  bool pass = true;
  r.csv = "id,point,params,lhs,rhs,margin\n";
  for (const BoundReport& rep : reports) {
    json points = json::array();
    for (std::size_t i = 0; i < rep.points.size(); ++i) {
      const BoundPoint& p = rep.points[i];
      points.push_back({{"params", params_json(p.params)}, {"lhs", p.lhs}, {"rhs", p.rhs}, {"margin", p.margin}});
      r.csv += rep.id + "," + std::to_string(i) + "," + params_csv(p.params) + "," + fmt(p.lhs) + "," + fmt(p.rhs) +
               "," + fmt(p.margin) + "\n";
    }
    out.push_back({{"id", rep.id}, {"pass", rep.pass}, {"min_margin", rep.min_margin}, {"points", points}});
    pass = pass && rep.pass;
  }
  r.doc = {{"command", "verify-bounds"}, {"reports", out}, {"skipped", skipped}, {"pass", pass}};
  r.failed = !pass;
  return r;
}

CommandResult simulate(const json& cfg, const Budget& budget) {
  SimConfig sim;
  sim.N = get_int(cfg, "N", "");
  if (sim.N < 2) bad("N", "must be >= 2");
  sim.trials = positive(get_int(cfg, "trials", ""), "trials");
  sim.K = positive(get_int(cfg, "K", ""), "K");
  const json& seed = need(cfg, "seed", "");
  if (!seed.is_number_integer()) bad("seed", "expected an integer");
  sim.seed = seed.is_number_unsigned() ? seed.get<std::uint64_t>() : static_cast<std::uint64_t>(seed.get<std::int64_t>());
  const json& fs = need(cfg, "factors", "");
  if (!fs.is_array() || fs.empty()) bad("factors", "expected a non-empty list of atomic measures");
  for (std::size_t i = 0; i < fs.size(); ++i) sim.factors.push_back(parse_atomic(fs[i], index("factors", i)));
  if (cfg.contains("collect_angles")) {
    if (!cfg["collect_angles"].is_boolean()) bad("collect_angles", "expected true or false");
    sim.collect_angles = cfg["collect_angles"].get<bool>();
  }
  const int bins = get_int(cfg, "bins", "", 64);
  if (bins < 8) bad("bins", "must be >= 8");
  sim.flop_budget = budget.flops;
  const SimResult res = in_field("N", [&] { return simulate_product(sim); });

  CommandResult r;
  json rows = json::array();
  for (int k = 1; k <= sim.K; ++k) {
    const auto i = static_cast<std::size_t>(k);
    rows.push_back({{"k", k},
                    {"empirical", complex_json(res.empirical_moments[i])},
                    {"predicted", complex_json(res.predicted_moments[i])},
                    {"standard_error", res.standard_errors[i]},
                    {"error", std::abs(res.empirical_moments[i] - res.predicted_moments[i])}});
  }
  r.doc = {{"command", "simulate"}, {"N", sim.N},   {"trials", sim.trials}, {"seed", sim.seed},
           {"K", sim.K},            {"moments", rows}, {"max_unitarity_error", res.max_unitarity_error}};
  r.csv = "trial,index,angle\n";
  if (!res.eigenangles.empty()) {
    std::vector<double> angles;
    angles.reserve(res.eigenangles.size());
    for (const AngleSample& s : res.eigenangles) {
      angles.push_back(s.angle);
      r.csv += std::to_string(s.trial) + "," + std::to_string(s.index) + "," + fmt(s.angle) + "\n";
    }
    json hist = json::array();
    for (const HistogramBin& b : empirical_density(angles, bins)) {
      hist.push_back({{"left", b.left}, {"right", b.right}, {"mass", b.mass}});
    }
    r.doc["density"] = hist;
    r.doc["angle_count"] = angles.size();
  }
  if (cfg.contains("angles_output")) {
    if (!cfg["angles_output"].is_string()) bad("angles_output", "expected a path");
    if (res.eigenangles.empty()) bad("angles_output", "needs collect_angles = true");
    write_atomic(cfg["angles_output"].get<std::string>(), r.csv);
  }
  return r;
}

}  // namespace

CircleMeasure parse_measure(const json& j, const std::string& field) {
  if (!j.is_object()) bad(field, "expected a measure literal object");
  return in_field(field, [&]() -> CircleMeasure {
    if (j.contains("named")) {
      const json& n = j["named"];
      if (!n.is_string()) bad(join(field, "named"), "expected a string");
      const auto name = n.get<std::string>();
      if (name == "uniform") return CircleMeasure::uniform();
      if (name == "bernoulli") return AtomicMeasure::bernoulli(get_double(j, "p", field));
      if (name == "point") return AtomicMeasure::point_mass(get_double(j, "angle", field, 0.0));
      bad(join(field, "named"), "unknown measure \"" + name + "\"");
    }
    std::optional<AtomicMeasure> atoms;
    std::optional<MomentVector> moments;
    if (j.contains("atoms")) atoms = parse_atomic(j, field);
    if (j.contains("moments")) {
      const json& c = j["moments"];
      const std::string f = join(field, "moments");
      if (!c.is_array() || c.empty()) bad(f, "expected a non-empty list");
      Eigen::VectorXcd v(static_cast<Eigen::Index>(c.size()));
      for (std::size_t i = 0; i < c.size(); ++i) v[static_cast<Eigen::Index>(i)] = as_complex(c[i], index(f, i));
      moments = MomentVector(std::move(v));
    }
    if (atoms && moments) return CircleMeasure(*atoms, *moments);
    if (atoms) return *atoms;
    if (moments) return *moments;
    bad(field, "expected one of \"atoms\", \"moments\" or \"named\"");
  });
}

AtomicMeasure parse_atomic(const json& j, const std::string& field) {
  if (!j.is_object()) bad(field, "expected a measure literal object");
  if (j.contains("named")) {
    const CircleMeasure m = parse_measure(j, field);
    if (!m.atoms()) bad(field, "expected an atomic measure");
    return *m.atoms();
  }
  const json& a = need(j, "atoms", field);
  const std::string f = join(field, "atoms");
  if (!a.is_array() || a.empty()) bad(f, "expected a non-empty list of [angle, weight] pairs");
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::string fi = index(f, i);
    if (!a[i].is_array() || a[i].size() != 2) bad(fi, "expected an [angle, weight] pair");
    atoms.push_back({as_double(a[i][0], index(fi, 0)), as_double(a[i][1], index(fi, 1))});
  }
  return in_field(f, [&] { return AtomicMeasure(std::move(atoms)); });
}

SequenceSpec parse_sequence(const json& j, const std::string& field) {
  const json& kind_j = need(j, "kind", field);
  if (!kind_j.is_string()) bad(join(field, "kind"), "expected a string");
  const auto kind = kind_j.get<std::string>();
  const TailBehavior tail = parse_tail(j, field);
  if (kind == "explicit") {
    auto ms = measure_list(need(j, "measures", field), join(field, "measures"));
    return in_field(join(field, "measures"), [&] { return SequenceSpec::explicit_list(std::move(ms), tail); });
  }
  if (kind == "repeated") return SequenceSpec::repeated(parse_measure(need(j, "measure", field), join(field, "measure")), tail);
  if (kind != "bernoulli-rule") bad(join(field, "kind"), "unknown sequence kind \"" + kind + "\"");

  const std::string rf = join(field, "rule");
  const json& rule_j = need(j, "rule", field);
  const json& form_j = need(rule_j, "form", rf);
  if (!form_j.is_string()) bad(join(rf, "form"), "expected a string");
  const auto form = form_j.get<std::string>();
  BernoulliRule rule;
  if (form == "constant") {
    rule.form = BernoulliRule::Form::Constant;
    rule.p = get_double(rule_j, "p", rf);
    if (!(rule.p >= 0.0 && rule.p <= 1.0)) bad(join(rf, "p"), "must lie in [0, 1]");
  } else if (form == "c-over-k-pow-s" || form == "one-minus-c-over-k-pow-s") {
    rule.form = form == "c-over-k-pow-s" ? BernoulliRule::Form::COverKPowS : BernoulliRule::Form::OneMinusCOverKPowS;
    rule.c = get_double(rule_j, "c", rf);
    rule.s = get_double(rule_j, "s", rf);
    if (rule.s < 0.0) bad(join(rf, "s"), "must be >= 0");
  } else if (form == "explicit") {
    rule.form = BernoulliRule::Form::Explicit;
    const json& p = need(rule_j, "p", rf);
    if (!p.is_array()) bad(join(rf, "p"), "expected a list of probabilities");
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double v = as_double(p[i], index(join(rf, "p"), i));
      if (!(v >= 0.0 && v <= 1.0)) bad(index(join(rf, "p"), i), "must lie in [0, 1]");
      rule.p_list.push_back(v);
    }
  } else {
    bad(join(rf, "form"), "unknown rule form \"" + form + "\"");
  }
  std::vector<CircleMeasure> prefix;
  if (j.contains("prefix")) prefix = measure_list(j["prefix"], join(field, "prefix"));
  return in_field(field, [&] { return SequenceSpec::bernoulli_rule(std::move(rule), std::move(prefix), tail); });
}

Budget parse_budget(const std::string& text) {
  Budget b;
  const auto colon = text.find(':');
  const std::string flops = text.substr(0, colon);
  try {
    std::size_t used = 0;
    b.flops = std::stod(flops, &used);
    if (used != flops.size() || !(b.flops > 0.0)) throw std::invalid_argument("flops");
    if (colon != std::string::npos) {
      const std::string letters = text.substr(colon + 1);
      b.max_letters = std::stoi(letters, &used);
      if (used != letters.size() || b.max_letters < 1) throw std::invalid_argument("letters");
    }
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::Config, "FREECIRCLE_BUDGET: expected <flops>[:<max_letters>], got \"" + text + "\"");
  }
  return b;
}

Budget budget_from_env() {
  const char* v = std::getenv("FREECIRCLE_BUDGET");
  if (v == nullptr || *v == '\0') return {};
  return parse_budget(v);
}

std::string dump(const json& j) {
  std::string out;
  emit(j, out, 0);
  out += "\n";
  return out;
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorKind::Config, "cannot open output '" + path + "' for writing");
    f << content;
    f.close();
    if (!f) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error(ErrorKind::Config, "failed writing output '" + path + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorKind::Config, "cannot move output into place at '" + path + "'");
  }
}

RunOutcome execute(const json& config, const RunOptions& options) {
  if (!config.is_object()) bad("<root>", "config must be a JSON object");
  const json& cmd_j = need(config, "command", "");
  if (!cmd_j.is_string()) bad("command", "expected a string");
  const auto command = cmd_j.get<std::string>();

  std::string format = "json";
  if (config.contains("format")) {
    if (!config["format"].is_string()) bad("format", "expected \"json\" or \"csv\"");
    format = config["format"].get<std::string>();
  }
  if (options.format) format = *options.format;
  if (format != "json" && format != "csv") bad("format", "expected \"json\" or \"csv\", got \"" + format + "\"");

  json cfg = config;
  if (!cfg.contains("max_letters")) cfg["max_letters"] = options.budget.max_letters;

  CommandResult r;
  if (command == "convolve") {
    r = convolve(cfg);
  } else if (command == "iterate") {
    r = iterate(cfg);
  } else if (command == "classify") {
    r = classify_cmd(cfg);
  } else if (command == "verify-bounds") {
    r = verify_bounds(cfg);
  } else if (command == "simulate") {
    r = simulate(cfg, options.budget);
  } else {
    bad("command", "unknown command \"" + command + "\"");
  }
  r.doc["schema_version"] = kSchemaVersion;
  return {r.failed ? 2 : 0, format == "json" ? dump(r.doc) : r.csv};
}

int run(const std::string& config_path, const RunOptions& options, std::ostream& out, std::ostream& err) {
  try {
    std::ifstream f(config_path);
    if (!f) throw Error(ErrorKind::Config, "cannot read config '" + config_path + "'");
    json config;
    try {
      config = json::parse(f);
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::Config, "config '" + config_path + "' is not valid JSON: " + e.what());
    }
    RunOptions opts = options;
    if (!opts.output && config.is_object() && config.contains("output")) {
      if (!config["output"].is_string()) bad("output", "expected a path");
      opts.output = config["output"].get<std::string>();
    }
    const RunOutcome outcome = execute(config, opts);
    if (opts.output) {
      write_atomic(*opts.output, outcome.document);
    } else {
      out << outcome.document;
    }
    if (outcome.exit_code == 2) err << "freecircle: at least one bound report failed\n";
    return outcome.exit_code;
  } catch (const Error& e) {
    err << "freecircle: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "freecircle: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace freecircle::cli
