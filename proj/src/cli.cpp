#include "laclab/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "laclab/coupling.hpp"
#include "laclab/diophantine.hpp"
#include "laclab/discrepancy.hpp"
#include "laclab/error.hpp"
#include "laclab/limits.hpp"
#include "laclab/orbit.hpp"
#include "laclab/seqgen.hpp"

namespace laclab::cli {
namespace {

using Json = nlohmann::ordered_json;

enum class Type { integer, count, real, text, flag };

struct Param {
  std::string name;
  Type type;
  Json fallback;
  std::string help;
  std::optional<double> min = std::nullopt;
};

struct Command {
  std::string name;
  std::string help;
  std::vector<Param> params;
};

std::vector<Param> sequence_params(const std::string& kind, long theta, double gamma) {
  return {
      {"kind", Type::text, kind, "sequence kind: geometric, geometric-minus-one, power-gap, superlacunary-square, explicit"},
      {"theta", Type::integer, theta, "ratio (geometric) or base (superlacunary-square)", 2},
      {"gamma", Type::real, gamma, "power-gap exponent", 0},
      {"first", Type::text, "1", "power-gap first term"},
      {"sequence_file", Type::text, "", "explicit terms, one integer per line"},
  };
}

std::vector<Param> join(std::vector<Param> a, const std::vector<Param>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

const std::vector<Command>& commands() {
  static const std::vector<Command> table = [] {
    const Param seed{"seed", Type::count, 1, "random seed"};
    const Param tolerance{"tolerance", Type::real, 0.05, "KS tolerance before slack", 0};
    std::vector<Command> t;
    t.push_back({"gen", "print the first n terms of a sequence",
                 join(sequence_params("geometric", 2, 1.0), {{"n", Type::count, 10, "number of terms", 1}})});
    t.push_back({"gcdsum", "exact GCD sum of the first n terms",
                 join(sequence_params("geometric", 2, 1.0), {{"n", Type::count, 16, "number of terms", 1}})});
    t.push_back({"dh-sum", "sum of gcd(n_k,n_l)/sqrt(n_k n_l)",
                 join(sequence_params("geometric", 2, 1.0), {{"n", Type::count, 16, "number of terms", 1}})});
    t.push_back({"disc", "discrepancy of a point file or of an orbit {n_k x}",
                 join(sequence_params("geometric", 2, 1.0),
                      {{"points", Type::text, "", "file with one point in [0,1) per line"},
                       {"n", Type::count, 256, "orbit length when no point file is given", 1},
                       seed})});
    t.push_back({"dioph", "Diophantine condition profile",
                 join(sequence_params("geometric", 2, 1.0),
                      {{"n", Type::count, 64, "number of terms", 1},
                       {"d", Type::count, 2, "coefficient bound", 1},
                       {"nu", Type::text, "all", "all, all-with-zero, lo:hi or a comma list"},
                       {"mode", Type::text, "clt", "clt or lil"},
                       {"epsilon", Type::real, 0.1, "LIL exponent slack", 0}})});
    t.push_back({"couple", "coupling construction: Monte Carlo bound and exact filtration checks",
                 join(sequence_params("geometric", 8, 1.0),
                      {{"K", Type::count, 6, "number of coupled terms", 1},
                       {"M", Type::count, 100000, "replicas", 1},
                       seed,
                       {"verify", Type::flag, true, "run the exact rational checks"}})});
    t.push_back({"condition", "finite-window evaluation of the truncation/modulus series",
                 join(sequence_params("power-gap", 2, 2.0),
                      {{"function", Type::text, "heavy-tail:1", "periodic function"},
                       {"K", Type::count, 12, "number of terms", 3},
                       {"rule", Type::text, "summable", "truncation rule: root (k^(1/alpha)) or summable ((2k^2)^(1/alpha))"}})});
    t.push_back({"clt", "central limit experiment",
                 join(sequence_params("geometric", 2, 1.0),
                      {{"function", Type::text, "cos", "periodic function"},
                       {"N", Type::count, 4096, "inner sum length", 1},
                       {"M", Type::count, 20000, "replicas", 1},
                       seed,
                       {"normalization", Type::text, "auto", "auto, frequency, kac, sample, root-n"},
                       tolerance,
                       {"control", Type::flag, false, "add the single-term negative control"}})});
    t.push_back({"ef", "Erdos-Fortet mixture experiment",
                 {{"N", Type::count, 4096, "inner sum length", 1},
                  {"M", Type::count, 20000, "replicas", 1},
                  seed,
                  tolerance}});
    t.push_back({"kdist", "Kolmogorov law for sqrt(N) D_N",
                 join(sequence_params("superlacunary-square", 2, 1.0),
                      {{"N", Type::count, 256, "number of points", 1},
                       {"M", Type::count, 10000, "replicas", 1},
                       seed,
                       {"statistic", Type::text, "star", "star or extreme"},
                       tolerance,
                       {"control", Type::flag, true, "add the i.i.d. uniform control"}})});
    t.push_back({"stable", "stable limit: orbit sums against i.i.d. sums",
                 join(sequence_params("power-gap", 2, 2.0),
                      {{"alpha", Type::real, 1.5, "tail index in (0,2)", 0},
                       {"N", Type::count, 1024, "inner sum length", 1},
                       {"M", Type::count, 10000, "replicas", 1},
                       seed,
                       tolerance,
                       {"control", Type::flag, true, "add the i.i.d. calibration"}})});
    t.push_back({"frechet", "Frechet limit of normalized maxima",
                 join(sequence_params("power-gap", 2, 2.0),
                      {{"alpha", Type::real, 1.0, "tail index in (0,2)", 0},
                       {"n", Type::count, 1024, "number of terms", 1},
                       {"M", Type::count, 10000, "replicas", 1},
                       seed,
                       tolerance,
                       {"control", Type::flag, true, "add the i.i.d. control"}})});
    t.push_back({"lil-trace", "running LIL-normalized sums and discrepancies",
                 join(sequence_params("geometric", 2, 1.0),
                      {{"function", Type::text, "cos", "periodic function"},
                       {"N", Type::count, 65536, "largest checkpoint", 16},
                       seed})});
    t.push_back({"gamma", "Gaussian covariance Gamma(s,t) for n_k = a^k",
                 {{"a", Type::integer, 2, "ratio", 2},
                  {"s", Type::real, 0.5, "first level in [0,1]", 0},
                  {"t", Type::real, 0.5, "second level in [0,1]", 0},
                  {"kmax", Type::count, 48, "number of cross terms", 0}}});
    t.push_back({"kac", "Kac variance along 2^k",
                 {{"function", Type::text, "cos", "periodic function"},
                  {"kmax", Type::count, 16, "number of cross terms", 0}}});
    return t;
  }();
  return table;
}

const Command* find_command(const std::string& name) {
  for (const auto& c : commands()) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

const Param* find_param(const Command& c, const std::string& name) {
  for (const auto& p : c.params) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

const std::vector<std::string>& execution_keys() {
  static const std::vector<std::string> keys{"out", "samples", "format", "threads", "timing"};
  return keys;
}

const char* type_name(Type t) {
  switch (t) {
    case Type::integer: return "an integer";
    case Type::count: return "a non-negative integer";
    case Type::real: return "a number";
    case Type::text: return "a string";
    case Type::flag: return "a boolean";
  }
  return "a value";
}

bool type_matches(Type t, const Json& v, const std::string& name) {
  switch (t) {
    case Type::integer: return v.is_number_integer();
    case Type::count: return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
    case Type::real: return v.is_number();
    case Type::text: return v.is_string() || (name == "first" && v.is_number_integer());
    case Type::flag: return v.is_boolean();
  }
  return false;
}

Json normalise(Type t, const Json& v) {
  if (t == Type::text && v.is_number_integer()) return v.dump();
  if (t == Type::real) return v.get<double>();
  return v;
}

std::optional<std::string> check_min(const Param& p, const Json& v) {
  if (!p.min || !v.is_number()) return std::nullopt;
  if (v.get<double>() < *p.min) {
    std::ostringstream os;
    os << "guard violation: " << p.name << " must be >= " << *p.min;
    return os.str();
  }
  return std::nullopt;
}

// Line of each top-level key in a flat JSON object.
std::map<std::string, std::size_t> key_lines(const std::string& text) {
  std::map<std::string, std::size_t> lines;
  std::size_t line = 1;
  int depth = 0;
  bool expect_key = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') {
      ++line;
    } else if (c == '{' || c == '[') {
      ++depth;
      expect_key = (c == '{' && depth == 1);
    } else if (c == '}' || c == ']') {
      --depth;
    } else if (c == ',' && depth == 1) {
      expect_key = true;
    } else if (c == '"') {
      std::string s;
      const std::size_t start_line = line;
      for (++i; i < text.size() && text[i] != '"'; ++i) {
        if (text[i] == '\\' && i + 1 < text.size()) s += text[++i];
        else s += text[i];
        if (text[i] == '\n') ++line;
      }
      if (expect_key && depth == 1) {
        lines.emplace(s, start_line);
        expect_key = false;
      }
    }
  }
  return lines;
}

std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

RunConfig defaults_for(const Command& c) {
  RunConfig rc;
  rc.command = c.name;
  for (const auto& p : c.params) rc.params[p.name] = p.fallback;
  return rc;
}

// Applies one execution setting; returns an error message on mismatch.
std::optional<std::string> apply_execution(RunConfig& rc, const std::string& key, const Json& v) {
  if (key == "threads") {
    if (!type_matches(Type::count, v, key)) return "threads must be a non-negative integer";
    rc.threads = static_cast<unsigned>(v.get<std::uint64_t>());
  } else if (key == "timing") {
    if (!v.is_boolean()) return "timing must be a boolean";
    rc.timing = v.get<bool>();
  } else {
    if (!v.is_string()) return key + " must be a string";
    const auto s = v.get<std::string>();
    if (key == "out") rc.out = s;
    if (key == "samples") rc.samples = s;
    if (key == "format") {
      if (s != "json" && s != "csv") return "format must be json or csv";
      rc.format = s;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// execution helpers

std::string str(const Json& v) { return v.get<std::string>(); }
std::uint64_t u64(const Json& v) { return v.get<std::uint64_t>(); }

SequenceSpec sequence_spec(const Json& p, std::size_t length) {
  SequenceSpec spec;
  const std::string kind = str(p["kind"]);
  if (kind == "explicit" || kind == "explicit-terms" || kind == "explicit_terms") {
    const std::string file = str(p["sequence_file"]);
    if (file.empty()) throw DomainError("kind=explicit needs sequence_file");
    std::ifstream in(file);
    if (!in) throw DomainError("cannot open sequence file '" + file + "'");
    IntegerSequence seq = read_sequence(in);
    if (seq.size() < length) throw DomainError("sequence file holds fewer than the requested terms");
    std::vector<BigInt> terms(seq.terms().begin(), seq.terms().begin() + static_cast<std::ptrdiff_t>(length));
    return SequenceSpec::explicit_list(std::move(terms));
  }
  spec.kind = parse_sequence_kind(kind);
  spec.theta = p["theta"].get<std::int64_t>();
  spec.gamma = p["gamma"].get<double>();
  spec.first = parse_bigint(str(p["first"]));
  spec.length = length;
  return spec;
}

IntegerSequence sequence_of(const Json& p, std::size_t length) { return generate(sequence_spec(p, length)); }

Json check_json(const KsCheck& c) {
  Json j;
  j["label"] = c.label;
  j["reference"] = c.reference;
  j["ks"] = c.ks;
  j["threshold"] = c.threshold;
  j["direction"] = c.upper ? "at_most" : "more_than";
  j["pass"] = c.pass;
  return j;
}

struct Outcome {
  Json results = Json::object();
  bool pass = true;
  std::optional<KsCheck> primary;
  std::vector<double> samples;
  double runtime_ms = 0.0;
  std::string csv;  // table rendering for --format csv
};

Outcome experiment_outcome(const ExperimentResult& r) {
  Outcome o;
  o.pass = r.pass;
  o.runtime_ms = r.runtime_ms;
  o.samples = r.samples;
  if (!r.checks.empty()) o.primary = r.checks.front();
  o.results["normalizer"] = r.normalizer;
  o.results["normalizer_source"] = r.normalizer_source;
  o.results["replicas"] = r.samples.size();
  Json checks = Json::array();
  for (const auto& c : r.checks) checks.push_back(check_json(c));
  o.results["checks"] = checks;
  o.results["warnings"] = r.warnings;
  return o;
}

ExperimentConfig experiment_config(const RunConfig& rc, const std::string& length_key) {
  const Json& p = rc.params;
  ExperimentConfig cfg;
  cfg.terms = u64(p[length_key]);
  cfg.replicas = u64(p["M"]);
  cfg.seed = u64(p["seed"]);
  cfg.threads = rc.threads;
  cfg.tolerance = p["tolerance"].get<double>();
  if (p.contains("kind")) cfg.sequence = sequence_spec(p, cfg.terms);
  if (p.contains("function")) cfg.function = str(p["function"]);
  if (p.contains("alpha")) cfg.alpha = p["alpha"].get<double>();
  if (p.contains("control")) cfg.with_control = p["control"].get<bool>();
  if (p.contains("normalization")) cfg.normalization = parse_normalization(str(p["normalization"]));
  return cfg;
}

std::string render_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Outcome run_command(const RunConfig& rc) {
  const Json& p = rc.params;
  const std::string& cmd = rc.command;
  Outcome o;
  if (cmd == "gcdsum" || cmd == "dh-sum") {
    const std::size_t n = u64(p["n"]);
    const IntegerSequence seq = sequence_of(p, n);
    if (cmd == "gcdsum") {
      const Rational g = gcd_sum(seq);
      o.results["G"] = to_string(g);
      o.results["G_value"] = to_double(g);
      o.results["G_over_N"] = to_double(g) / static_cast<double>(n);
    } else {
      o.results["sum"] = dyer_harman_sum(seq);
    }
  } else if (cmd == "disc") {
    std::vector<double> pts;
    const std::string file = str(p["points"]);
    if (!file.empty()) {
      std::ifstream in(file);
      if (!in) throw DomainError("cannot open point file '" + file + "'");
      pts = read_points(in);
      o.results["source"] = "points";
    } else {
      const std::size_t n = u64(p["n"]);
      const IntegerSequence seq = sequence_of(p, n);
      const std::size_t bits = guarded_bits(seq, n);
      OrbitEvaluator(seq, n, bits).fractions(sample_point(u64(p["seed"]), 0, bits), pts);
      o.results["source"] = "orbit";
    }
    if (pts.empty()) throw DomainError("no points");
    o.results["N"] = pts.size();
    o.results["D_N"] = discrepancy(pts);
    o.results["D_star_N"] = star_discrepancy(pts);
  } else if (cmd == "dioph") {
    const std::size_t n = u64(p["n"]);
    const IntegerSequence seq = sequence_of(p, n);
    const auto d = static_cast<unsigned>(u64(p["d"]));
    const std::string nu = str(p["nu"]);
    NuSelection nus = NuSelection::every(false);
    if (nu == "all-with-zero") {
      nus = NuSelection::every(true);
    } else if (const auto colon = nu.find(':'); colon != std::string::npos) {
      nus = NuSelection::symmetric(std::stol(nu.substr(0, colon)), std::stol(nu.substr(colon + 1)));
    } else if (nu != "all") {
      std::vector<BigInt> values;
      std::stringstream ss(nu);
      for (std::string item; std::getline(ss, item, ',');) values.push_back(parse_bigint(item));
      nus = NuSelection::listed(std::move(values));
    }
    const std::string mode = str(p["mode"]);
    if (mode != "clt" && mode != "lil") throw DomainError("mode must be clt or lil");
    const DiophantineProfile prof = mode == "clt" ? clt_condition_profile(seq, n, d, nus)
                                                  : lil_condition_profile(seq, n, d, nus, p["epsilon"].get<double>());
    Json rows = Json::array();
    for (const auto& r : prof.rows) {
      Json j;
      j["N"] = r.window;
      j["nu_star"] = to_decimal(r.nu_star);
      j["L"] = r.count;
      j["ratio"] = r.ratio;
      if (prof.lil) j["lil_value"] = r.lil_value;
      rows.push_back(j);
    }
    o.results["nu"] = prof.nu_description;
    o.results["rows"] = rows;
    o.results["verdict"] = prof.verdict;
    std::ostringstream csv;
    prof.write_csv(csv);
    o.csv = csv.str();
  } else if (cmd == "couple") {
    const std::size_t K = u64(p["K"]);
    const IntegerSequence seq = sequence_of(p, K + 1);
    const CouplingReport rep = simulate_coupling(seq, K, u64(p["M"]), u64(p["seed"]), rc.threads);
    Json rows = Json::array();
    for (const auto& r : rep.rows) {
      Json j;
      j["k"] = r.k;
      j["n_k"] = to_decimal(r.n_k);
      j["eps_k"] = r.epsilon;
      j["delta_k"] = r.delta;
      j["exceedance"] = r.exceedance;
      j["exceedance_xy"] = r.exceedance_xy;
      j["wilson_lower"] = r.wilson_lower;
      j["good_replicas"] = r.good_count;
      j["vacuous"] = r.vacuous;
      j["pass"] = r.pass;
      rows.push_back(j);
    }
    o.results["rows"] = rows;
    o.results["max_abs_correlation"] = rep.max_abs_correlation;
    o.results["correlation_limit"] = rep.correlation_limit;
    o.results["monte_carlo_pass"] = rep.pass;
    o.pass = rep.pass;
    if (p["verify"].get<bool>()) {
      Json exact = Json::array();
      bool all = true;
      for (const auto& c : verify_filtration_bounds(seq, K)) {
        Json j;
        j["k"] = c.k;
        j["eps_k"] = to_string(c.epsilon);
        j["max_deviation"] = to_string(c.max_deviation);
        j["deviation_holds"] = c.deviation_holds;
        j["good_measure"] = to_string(c.good_measure);
        j["good_bound"] = to_string(c.good_bound);
        j["pre_asymptotic"] = c.pre_asymptotic;
        j["good_measure_holds"] = c.good_measure_holds;
        j["atoms"] = c.atoms;
        all = all && c.deviation_holds && (c.pre_asymptotic || c.good_measure_holds);
        exact.push_back(j);
      }
      o.results["exact_checks"] = exact;
      o.results["exact_pass"] = all;
      o.pass = o.pass && all;
    }
    std::ostringstream csv;
    rep.write_csv(csv);
    o.csv = csv.str();
  } else if (cmd == "condition") {
    const std::size_t K = u64(p["K"]);
    const IntegerSequence seq = sequence_of(p, K + 1);
    const std::string rule = str(p["rule"]);
    if (rule != "root" && rule != "summable") throw DomainError("rule must be root or summable");
    const ConditionReport rep = condition_maingap(PeriodicFunction::parse(str(p["function"])), seq, K,
                                                  rule == "root" ? TruncationRule::root : TruncationRule::summable);
    Json rows = Json::array();
    for (const auto& r : rep.rows) {
      Json j;
      j["k"] = r.k;
      j["T_k"] = r.level;
      j["delta_k"] = r.delta;
      j["level_term"] = r.level_term;
      j["omega2_term"] = r.omega_term;
      j["term"] = r.term;
      j["partial_sum"] = r.partial_sum;
      rows.push_back(j);
    }
    o.results["rows"] = rows;
    o.results["verdict"] = to_string(rep.verdict);
    o.results["decay_exponent"] = rep.decay_exponent;
    o.results["window"] = Json::array({rep.window_begin, rep.window_end});
    o.results["diagnostic"] = rep.diagnostic;
    std::ostringstream csv;
    rep.write_csv(csv);
    o.csv = csv.str();
  } else if (cmd == "clt") {
    o = experiment_outcome(clt_experiment(experiment_config(rc, "N")));
  } else if (cmd == "ef") {
    o = experiment_outcome(erdos_fortet_experiment(u64(p["N"]), u64(p["M"]), u64(p["seed"]), rc.threads,
                                                   p["tolerance"].get<double>()));
  } else if (cmd == "kdist") {
    const std::string stat = str(p["statistic"]);
    if (stat != "star" && stat != "extreme") throw DomainError("statistic must be star or extreme");
    o = experiment_outcome(discrepancy_limit_experiment(experiment_config(rc, "N"),
                                                        stat == "star" ? DiscrepancyKind::star : DiscrepancyKind::extreme));
  } else if (cmd == "stable") {
    o = experiment_outcome(stable_experiment(experiment_config(rc, "N")));
  } else if (cmd == "frechet") {
    o = experiment_outcome(frechet_experiment(experiment_config(rc, "n")));
  } else if (cmd == "lil-trace") {
    const std::size_t n = u64(p["N"]);
    const auto rows_in = lil_trace(PeriodicFunction::parse(str(p["function"])), sequence_spec(p, n), u64(p["seed"]), n);
    Json rows = Json::array();
    std::ostringstream csv;
    csv << "N,normalized_sum,discrepancy_lil\n";
    for (const auto& r : rows_in) {
      Json j;
      j["N"] = r.n;
      j["normalized_sum"] = r.normalized_sum;
      j["discrepancy_lil"] = r.discrepancy_lil;
      rows.push_back(j);
      csv << r.n << ',' << render_double(r.normalized_sum) << ',' << render_double(r.discrepancy_lil) << '\n';
    }
    o.results["rows"] = rows;
    o.csv = csv.str();
  } else if (cmd == "gamma") {
    const double s = p["s"].get<double>();
    const double t = p["t"].get<double>();
    const auto v = gaussian_covariance_exact(static_cast<long>(p["a"].get<std::int64_t>()), exact_rational(s),
                                             exact_rational(t), u64(p["kmax"]));
    o.results["value"] = to_double(v.value);
    o.results["exact"] = to_string(v.value);
    o.results["tail_bound"] = v.tail_bound;
  } else if (cmd == "kac") {
    const auto v = kac_variance(PeriodicFunction::parse(str(p["function"])), u64(p["kmax"]));
    o.results["sigma2"] = v.value;
    o.results["tail_bound"] = v.tail_bound;
  } else {
    throw DomainError("unknown command '" + cmd + "'");
  }
  return o;
}

std::ostream& output_stream(const RunConfig& rc, std::ostream& fallback, std::ofstream& file) {
  if (rc.out.empty()) return fallback;
  file.open(rc.out, std::ios::binary);
  if (!file) throw DomainError("cannot open output file '" + rc.out + "'");
  return file;
}

std::optional<Json> parse_flag_value(const Param& p, const std::string& raw, std::string& error) {
  auto parse_int = [&](auto& value) {
    const auto res = std::from_chars(raw.data(), raw.data() + raw.size(), value);
    return res.ec == std::errc() && res.ptr == raw.data() + raw.size();
  };
  switch (p.type) {
    case Type::integer: {
      std::int64_t v = 0;
      if (parse_int(v)) return Json(v);
      break;
    }
    case Type::count: {
      std::uint64_t v = 0;
      if (!raw.empty() && raw[0] != '-' && parse_int(v)) return Json(v);
      break;
    }
    case Type::real: {
      double v = 0.0;
      if (parse_int(v) && std::isfinite(v)) return Json(v);
      break;
    }
    case Type::text:
      return Json(raw);
    case Type::flag:
      if (raw == "true" || raw == "1") return Json(true);
      if (raw == "false" || raw == "0") return Json(false);
      break;
  }
  error = "--" + p.name + ": expected " + type_name(p.type) + ", got '" + raw + "'";
  return std::nullopt;
}

}  // namespace

std::vector<std::string> command_names() {
  std::vector<std::string> names;
  for (const auto& c : commands()) names.push_back(c.name);
  return names;
}

std::string config_hash(const nlohmann::ordered_json& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(config.dump())));
  return buf;
}

Validation validate_config_text(const std::string& text, const std::string& command) {
  Validation v;
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    v.errors.push_back({line_of_offset(text, e.byte), std::string("malformed JSON: ") + e.what()});
    return v;
  }
  if (!doc.is_object()) {
    v.errors.push_back({1, "config must be a JSON object"});
    return v;
  }
  const auto lines = key_lines(text);
  auto line_for = [&](const std::string& key) {
    const auto it = lines.find(key);
    return it == lines.end() ? std::size_t{0} : it->second;
  };

  std::string name = command;
  if (doc.contains("command")) {
    if (!doc["command"].is_string()) {
      v.errors.push_back({line_for("command"), "command must be a string"});
      return v;
    }
    const std::string named = doc["command"].get<std::string>();
    if (!name.empty() && named != name) {
      v.errors.push_back({line_for("command"), "config is for '" + named + "' but the command is '" + name + "'"});
      return v;
    }
    name = named;
  }
  if (name.empty()) {
    v.errors.push_back({0, "config does not name a command"});
    return v;
  }
  const Command* cmd = find_command(name);
  if (!cmd) {
    v.errors.push_back({line_for("command"), "unknown command '" + name + "'"});
    return v;
  }

  RunConfig rc = defaults_for(*cmd);
  for (const auto& [key, value] : doc.items()) {
    if (key == "command") continue;
    const std::size_t line = line_for(key);
    if (value.is_object() || value.is_array()) {
      v.errors.push_back({line, "key '" + key + "': nested values are not supported (flat config)"});
      continue;
    }
    if (const Param* p = find_param(*cmd, key)) {
      if (!type_matches(p->type, value, key)) {
        v.errors.push_back({line, "key '" + key + "': type mismatch, expected " + type_name(p->type)});
        continue;
      }
      const Json norm = normalise(p->type, value);
      if (auto err = check_min(*p, norm)) {
        v.errors.push_back({line, *err});
        continue;
      }
      rc.params[key] = norm;
    } else if (std::find(execution_keys().begin(), execution_keys().end(), key) != execution_keys().end()) {
      if (auto err = apply_execution(rc, key, value)) v.errors.push_back({line, *err});
    } else {
      v.errors.push_back({line, "unknown key '" + key + "' for command '" + name + "'"});
    }
  }
  if (v.errors.empty()) v.config = std::move(rc);
  return v;
}

Validation validate_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    Validation v;
    v.errors.push_back({0, "cannot read config file '" + path + "'"});
    return v;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return validate_config_text(ss.str());
}

int execute(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  const Json& config = rc.params;
  if (rc.command == "gen") {
    const IntegerSequence seq = sequence_of(config, u64(config["n"]));
    std::ofstream file;
    write_sequence(output_stream(rc, out, file), seq);
    return 0;
  }
  const std::string hash = config_hash(config);
  Outcome o = run_command(rc);

  if (!rc.samples.empty()) {
    std::ofstream s(rc.samples, std::ios::binary);
    if (!s) throw DomainError("cannot open samples file '" + rc.samples + "'");
    for (double v : o.samples) s << render_double(v) << '\n';
  }
  const int code = o.pass ? 0 : 2;
  std::ofstream file;
  std::ostream& dest = output_stream(rc, out, file);
  if (rc.format == "csv") {
    if (o.csv.empty()) throw DomainError("command '" + rc.command + "' has no CSV table; use --samples for samples");
    dest << "# laclab " << kVersion << " " << rc.command << " config_hash=" << hash << '\n' << o.csv;
  } else {
    Json doc;
    doc["command"] = rc.command;
    doc["version"] = kVersion;
    doc["config_hash"] = hash;
    doc["config"] = config;
    if (o.primary) {
      doc["ks"] = o.primary->ks;
      doc["threshold"] = o.primary->threshold;
    }
    doc["results"] = o.results;
    doc["pass"] = o.pass;
    doc["exit_code"] = code;
    if (rc.timing) doc["runtime_ms"] = o.runtime_ms;
    dest << doc.dump(2) << '\n';
  }
  if (!o.pass) err << "laclab " << rc.command << ": assertion failed\n";
  return code;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"laclab: lacunary sequence laboratory", "laclab"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1, 1);

  struct Common {
    std::string config;
    std::optional<std::string> out;
    std::optional<std::string> samples;
    std::optional<std::string> format;
    std::optional<unsigned> threads;
    bool timing = false;
  };
  std::map<std::string, Common> common;
  std::map<std::string, std::map<std::string, std::optional<std::string>>> raw;

  for (const auto& c : commands()) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    auto& store = raw[c.name];
    for (const auto& p : c.params) {
      std::ostringstream help;
      help << p.help << " (default " << p.fallback.dump() << ")";
      sub->add_option("--" + p.name, store[p.name], help.str());
    }
    Common& cm = common[c.name];
    sub->add_option("--config", cm.config, "flat JSON config; flags override it");
    sub->add_option("--out", cm.out, "output file (default stdout)");
    if (c.name != "gen") {
      sub->add_option("--samples", cm.samples, "write experiment samples, one per line");
      sub->add_option("--format", cm.format, "json or csv");
      sub->add_flag("--timing", cm.timing, "include runtime_ms in the report");
    }
    sub->add_option("--threads", cm.threads, "worker threads (default LACLAB_THREADS, else all cores)");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  const Command& cmd = *find_command(chosen->get_name());
  const Common& cm = common[cmd.name];

  RunConfig rc = defaults_for(cmd);
  if (!cm.config.empty()) {
    std::ifstream in(cm.config, std::ios::binary);
    if (!in) {
      err << "laclab: cannot read config file '" << cm.config << "'\n";
      return 1;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    Validation v = validate_config_text(ss.str(), cmd.name);
    if (!v.ok()) {
      for (const auto& e : v.errors) {
        err << cm.config;
        if (e.line) err << ':' << e.line;
        err << ": " << e.message << '\n';
      }
      return 1;
    }
    rc = std::move(*v.config);
  }
  std::vector<std::string> errors;
  for (const auto& p : cmd.params) {
    const auto& given = raw[cmd.name][p.name];
    if (!given) continue;
    std::string msg;
    auto value = parse_flag_value(p, *given, msg);
    if (!value) {
      errors.push_back(msg);
      continue;
    }
    if (auto e = check_min(p, *value)) {
      errors.push_back(*e);
      continue;
    }
    rc.params[p.name] = *value;
  }
  if (cm.out) rc.out = *cm.out;
  if (cm.samples) rc.samples = *cm.samples;
  if (cm.threads) rc.threads = *cm.threads;
  if (cm.timing) rc.timing = true;
  if (cm.format) {
    if (*cm.format != "json" && *cm.format != "csv") errors.push_back("--format must be json or csv");
    rc.format = *cm.format;
  }
  if (!errors.empty()) {
    for (const auto& e : errors) err << "laclab " << cmd.name << ": " << e << '\n';
    return 1;
  }

  try {
    return execute(rc, out, err);
  } catch (const std::exception& e) {
    err << "laclab " << cmd.name << ": " << e.what() << '\n';
    return 1;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace laclab::cli
