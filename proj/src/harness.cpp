#include "santalo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include "santalo/error.hpp"
#include "santalo/monotone_flow.hpp"
#include "santalo/util.hpp"

namespace santalo {

namespace {

using nlohmann::json;

[[noreturn]] void cfg_error(const std::string& path, const std::string& what) {
  throw Error(Errc::Config, path + ": " + what);
}

// Reads one JSON object, remembering which keys were consumed.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) cfg_error(path_.empty() ? "<root>" : path_, "must be an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key, double def) {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_number()) cfg_error(at(key), "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) cfg_error(at(key), "must be finite");
    return x;
  }
  long long integer(const std::string& key, long long def) {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) cfg_error(at(key), "must be an integer");
    return v.get<long long>();
  }
  std::uint64_t uint64(const std::string& key, std::uint64_t def) {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
    cfg_error(at(key), "must be a non-negative integer");
  }
  bool boolean(const std::string& key, bool def) {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_boolean()) cfg_error(at(key), "must be true or false");
    return v.get<bool>();
  }
  std::string string(const std::string& key, const std::string& def) {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_string()) cfg_error(at(key), "must be a string");
    return v.get<std::string>();
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) cfg_error(at(it.key()), "unknown field");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

const std::vector<std::string>& inequality_ids() {
  static const std::vector<std::string> ids{"bsunc",
                                            "bs_even_conjecture",
                                            "prekopa_leindler",
                                            "pointwise_pl",
                                            "displacement_convexity",
                                            "talagrand_barycenter",
                                            "pointwise_entropy_bound",
                                            "bs_bodies",
                                            "radial_bs",
                                            "affine_isoperimetric_functions",
                                            "affine_isoperimetric_bodies",
                                            "bs_monotone_iteration",
                                            "multimarginal_step"};
  return ids;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

std::vector<GridFunction> densities(const std::vector<GridFunction>& V, double shift = 0.0) {
  std::vector<GridFunction> f;
  for (const auto& v : V) f.push_back(v.map([shift](double x) { return std::exp(-x - shift); }));
  return f;
}

// e^{-V} / Z as a density relative to the standard Gaussian, normalized on the grid.
std::vector<GridFunction> gaussian_relative(const std::vector<GridFunction>& V) {
  std::vector<GridFunction> out;
  for (const auto& v : V) {
    const Grid& g = v.grid();
    const auto w = quadrature_weights(g);
    double top = kInf;
    for (std::size_t i = 0; i < g.size(); ++i) top = std::min(top, v[i]);
    double z = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) z += w[i] * std::exp(-(v[i] - top));
    if (!(z > 0)) throw Error(Errc::ZeroMass, "potential carries no mass");
    const double logc = 0.5 * g.dim * std::log(2 * std::numbers::pi) - std::log(z) + top;
    std::vector<double> vals(g.size());
    std::vector<double> x(g.dim);
    for (std::size_t i = 0; i < g.size(); ++i) {
      g.point(i, x.data());
      double r2 = 0.0;
      for (int d = 0; d < g.dim; ++d) r2 += x[d] * x[d];
      vals[i] = v.is_inf(i) ? 0.0 : std::exp(-v[i] + 0.5 * r2 + logc);
    }
    out.emplace_back(g, std::move(vals));
  }
  return out;
}

std::string prefix_rows(const std::string& csv, std::size_t index) {
  std::istringstream in(csv);
  std::string line, out;
  std::getline(in, line);  // header
  while (std::getline(in, line)) out += std::to_string(index) + "," + line + "\n";
  return out;
}

bool body_experiment(const std::string& e) { return e == "verify-bodies" || e == "verify-radial"; }

}  // namespace

const std::vector<std::string>& known_experiments() {
  static const std::vector<std::string> e{"verify-bsunc",     "verify-pl",         "verify-pointwise-pl",
                                          "verify-displacement", "verify-talagrand", "verify-pointwise-entropy",
                                          "verify-bodies",    "verify-radial",     "verify-asa",
                                          "iterate-pair",     "mm-step",           "search"};
  return e;
}

std::string experiment_inequality(const std::string& e) {
  if (e == "verify-bsunc") return "bsunc";
  if (e == "search") return "bs_even_conjecture";
  if (e == "verify-pl") return "prekopa_leindler";
  if (e == "verify-pointwise-pl") return "pointwise_pl";
  if (e == "verify-displacement") return "displacement_convexity";
  if (e == "verify-talagrand") return "talagrand_barycenter";
  if (e == "verify-pointwise-entropy") return "pointwise_entropy_bound";
  if (e == "verify-bodies") return "bs_bodies";
  if (e == "verify-radial") return "radial_bs";
  if (e == "verify-asa") return "affine_isoperimetric";
  if (e == "iterate-pair") return "bs_monotone_iteration";
  if (e == "mm-step") return "multimarginal_step";
  return e;
}

std::size_t max_cells() {
  const char* env = std::getenv("SANTALO_MAX_CELLS");
  if (!env || !*env) return 4000000;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end || v == 0) cfg_error("SANTALO_MAX_CELLS", "must be a positive integer");
  return static_cast<std::size_t>(v);
}

void apply_override(json& j, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) cfg_error("--override", "expected key=value, got '" + kv + "'");
  const std::string key = kv.substr(0, eq), text = kv.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) cfg_error(key, "empty path component");
    if (!node->is_object()) cfg_error(key.substr(0, start ? start - 1 : 0), "must be an object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  Reader root(j, "");
  c.experiment = root.string("experiment", "");
  if (c.experiment.empty()) cfg_error("experiment", "missing");
  if (!contains(known_experiments(), c.experiment)) cfg_error("experiment", "unknown experiment '" + c.experiment + "'");
  c.seed = root.uint64("seed", 0);
  const long long count = root.integer("count", 1);
  if (count < 1 || count > 1000000) cfg_error("count", "must be in [1, 1000000]");
  c.count = static_cast<std::size_t>(count);
  c.output = root.string("output", "santalo");
  if (c.output.empty()) cfg_error("output", "must not be empty");

  // experiment-dependent defaults
  if (c.experiment == "iterate-pair") {
    c.family.potential = "quartic";
    c.family.half_width = 10.0;
    c.family.points_per_axis = 2001;
  } else if (c.experiment == "mm-step") {
    c.family.potential = "quartic";
    c.family.half_width = 6.0;
    c.family.points_per_axis = 61;
  } else if (c.experiment == "search") {
    c.family.potential = "even-rotated";
    c.family.n = 2;
    c.family.points_per_axis = 41;
  } else if (body_experiment(c.experiment)) {
    c.family.potential = "balls";
    c.family.n = 2;
  }

  if (root.has("instance_family")) {
    Reader f(root.raw("instance_family"), "instance_family");
    c.family.potential = f.string("potential", c.family.potential);
    c.family.k = static_cast<int>(f.integer("k", c.family.k));
    c.family.n = static_cast<int>(f.integer("n", c.family.n));
    if (f.has("grid")) {
      Reader g(f.raw("grid"), "instance_family.grid");
      c.family.half_width = g.number("half_width", c.family.half_width);
      c.family.points_per_axis = static_cast<int>(g.integer("points_per_axis", c.family.points_per_axis));
      g.finish();
    }
    if (f.has("rho")) {
      try {
        c.family.rho = f.raw("rho").get<RhoProfile>();
      } catch (const std::exception& e) {
        cfg_error("instance_family.rho", e.what());
      }
    }
    if (f.has("lambda")) {
      const json& l = f.raw("lambda");
      if (!l.is_array()) cfg_error("instance_family.lambda", "must be an array of numbers");
      c.family.lambda.clear();
      for (std::size_t i = 0; i < l.size(); ++i) {
        if (!l[i].is_number()) cfg_error("instance_family.lambda[" + std::to_string(i) + "]", "must be a number");
        c.family.lambda.push_back(l[i].get<double>());
      }
    }
    c.family.radius = f.number("radius", c.family.radius);
    c.family.resolution = static_cast<int>(f.integer("resolution", c.family.resolution));
    f.finish();
  }
  if (const auto p = family_problem(c.family)) cfg_error("instance_family." + p->field, p->what);

  if (root.has("tolerances")) {
    Reader t(root.raw("tolerances"), "tolerances");
    c.margin_tol = t.number("margin_tol", c.margin_tol);
    if (c.margin_tol < 0) cfg_error("tolerances.margin_tol", "must be non-negative");
    for (const auto& id : inequality_ids()) {
      if (!t.has(id)) continue;
      Reader e(t.raw(id), "tolerances." + id);
      const Tolerance d = default_tolerance(id);
      Tolerance tol{e.number("c0", d.c0), e.number("c1", d.c1), e.number("floor", d.floor)};
      if (tol.c0 < 0 || tol.c1 < 0 || tol.floor < 0) cfg_error("tolerances." + id, "coefficients must be non-negative");
      e.finish();
      c.tolerances[id] = tol;
    }
    t.finish();
  }

  if (root.has("options")) {
    Reader o(root.raw("options"), "options");
    c.threads = static_cast<int>(o.integer("threads", c.threads));
    if (c.threads < 0) cfg_error("options.threads", "must be non-negative");
    c.steps = static_cast<int>(o.integer("steps", c.steps));
    if (c.steps < 1 || c.steps > 1000) cfg_error("options.steps", "must be in [1, 1000]");
    c.C = o.number("C", c.C);
    if (c.C < 0) cfg_error("options.C", "must be positive (0 picks k / (k - 1))");
    c.asa_lambda = o.number("asa_lambda", c.asa_lambda);
    if (c.asa_lambda < 0 || c.asa_lambda > 1) cfg_error("options.asa_lambda", "must be in [0, 1]");
    c.asa_p = o.number("asa_p", c.asa_p);
    c.scale_to_hypothesis = o.boolean("scale_to_hypothesis", c.scale_to_hypothesis);
    c.symmetrize = o.boolean("symmetrize", c.symmetrize);
    c.diagnostics = o.boolean("diagnostics", c.diagnostics);
    c.angle_samples = static_cast<int>(o.integer("angle_samples", c.angle_samples));
    if (c.angle_samples < 3) cfg_error("options.angle_samples", "must be at least 3");
    o.finish();
  }
  root.finish();

  // experiment / family compatibility
  const bool bodies = is_body_family(c.family.potential);
  if (body_experiment(c.experiment) && !bodies)
    cfg_error("instance_family.potential", c.experiment + " needs a body family (balls, lp-bodies)");
  if (!body_experiment(c.experiment) && c.experiment != "verify-asa" && bodies)
    cfg_error("instance_family.potential", c.experiment + " needs a potential family");
  if (c.experiment == "verify-asa" && bodies && c.family.n != 2)
    cfg_error("instance_family.n", "affine surface area of bodies is planar");
  if (c.experiment == "verify-asa" && bodies && (c.asa_p < 0 || c.asa_p > c.family.n))
    cfg_error("options.asa_p", "must be in [0, n]");
  if ((c.experiment == "iterate-pair" || c.experiment == "mm-step") && c.family.n != 1)
    cfg_error("instance_family.n", c.experiment + " is one-dimensional");
  if ((c.experiment == "verify-talagrand" || c.experiment == "verify-pointwise-entropy") && !c.family.lambda.empty())
    cfg_error("instance_family.lambda", c.experiment + " uses uniform weights");
  if (!bodies) {
    double cells = 1.0;
    for (int d = 0; d < c.family.n; ++d) cells *= c.family.points_per_axis;
    if (cells > static_cast<double>(max_cells()))
      cfg_error("instance_family.grid.points_per_axis",
                "grid has " + fmt_double(cells) + " cells, above SANTALO_MAX_CELLS = " + std::to_string(max_cells()));
  }
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json tol = {{"margin_tol", c.margin_tol}};
  for (const auto& [id, t] : c.tolerances) tol[id] = {{"c0", t.c0}, {"c1", t.c1}, {"floor", t.floor}};
  json fam = {{"potential", c.family.potential},
              {"k", c.family.k},
              {"n", c.family.n},
              {"grid", {{"half_width", c.family.half_width}, {"points_per_axis", c.family.points_per_axis}}},
              {"rho", c.family.rho}};
  if (!c.family.lambda.empty()) fam["lambda"] = c.family.lambda;
  if (is_body_family(c.family.potential)) {
    fam["radius"] = c.family.radius;
    fam["resolution"] = c.family.resolution;
  }
  return {{"experiment", c.experiment},
          {"instance_family", fam},
          {"seed", c.seed},
          {"count", c.count},
          {"tolerances", tol},
          {"options",
           {{"threads", c.threads},
            {"steps", c.steps},
            {"C", c.C},
            {"asa_lambda", c.asa_lambda},
            {"asa_p", c.asa_p},
            {"scale_to_hypothesis", c.scale_to_hypothesis},
            {"symmetrize", c.symmetrize},
            {"diagnostics", c.diagnostics},
            {"angle_samples", c.angle_samples}}},
          {"output", c.output}};
}

json run_instance(const ExperimentConfig& c, std::size_t index, bool parallel_inside, std::string* trace) {
  const std::uint64_t seed = corpus_seed(c.seed, index);
  json rec = {{"index", index},
              {"seed", seed},
              {"experiment", c.experiment},
              {"family", c.family.potential},
              {"inequality_id", experiment_inequality(c.experiment)}};
  try {
    const Instance in = generate_instance(c.family, seed);
    rec["generator_hash"] = in.hash;
    VerifyOptions opt;
    opt.margin_tol = c.margin_tol;
    opt.parallel = parallel_inside;
    opt.symmetrize = c.symmetrize;
    auto tol_for = [&](const std::string& id) -> std::optional<Tolerance> {
      const auto it = c.tolerances.find(id);
      if (it == c.tolerances.end()) return std::nullopt;
      return it->second;
    };
    const std::string& e = c.experiment;
    InequalityReport r;

    if (e == "verify-bsunc" || e == "search") {
      const bool conj = e == "search";
      opt.conjecture = conj;
      opt.tol = tol_for(conj ? "bs_even_conjecture" : "bsunc");
      double shift = 0.0;
      if (c.scale_to_hypothesis) shift = max_log_ratio(in.potentials, in.rho, !conj, opt.search).value / in.k;
      const auto f = densities(in.potentials, shift);
      r = verify_bsunc(f, in.rho, opt);
      r.extra["scale_shift"] = shift;
      if (c.diagnostics) r.extra["equality"] = equality_diagnostics(f, in.rho);
    } else if (e == "verify-pl") {
      opt.tol = tol_for("prekopa_leindler");
      r = verify_prekopa_leindler(densities(in.potentials), in.lambda, std::nullopt, opt);
    } else if (e == "verify-pointwise-pl") {
      opt.tol = tol_for("pointwise_pl");
      r = verify_pointwise_pl(densities(in.potentials), in.lambda, opt);
    } else if (e == "verify-displacement") {
      opt.tol = tol_for("displacement_convexity");
      r = verify_displacement_convexity(gaussian_relative(in.potentials), in.lambda, opt);
    } else if (e == "verify-talagrand") {
      opt.tol = tol_for("talagrand_barycenter");
      r = verify_talagrand_barycenter(gaussian_relative(in.potentials), opt);
    } else if (e == "verify-pointwise-entropy") {
      opt.tol = tol_for("pointwise_entropy_bound");
      r = verify_pointwise_entropy_bound(gaussian_relative(in.potentials), opt);
    } else if (e == "verify-bodies") {
      opt.tol = tol_for("bs_bodies");
      r = verify_bs_bodies(in.bodies, in.rho, opt);
    } else if (e == "verify-radial") {
      opt.tol = tol_for("radial_bs");
      r = verify_radial_bs(in.bodies, opt, c.angle_samples);
    } else if (e == "verify-asa") {
      if (!in.bodies.empty()) {
        opt.tol = tol_for("affine_isoperimetric_bodies");
        r = verify_affine_isoperimetric(in.bodies, c.asa_p, in.rho, opt);
      } else {
        opt.tol = tol_for("affine_isoperimetric_functions");
        r = verify_affine_isoperimetric(in.potentials, c.asa_lambda, in.rho, opt);
      }
    } else if (e == "iterate-pair") {
      PairIterationOptions po;
      po.early_stop = false;
      const auto tr = bs_iterate_pair(in.potentials[0], c.steps, po);
      const TraceCheck chk = check_trace(tr);
      r.inequality_id = "bs_monotone_iteration";
      r.lhs = tr.back().bs_value;
      r.rhs = std::pow(2 * std::numbers::pi, in.n);
      const auto t = tol_for(r.inequality_id);
      r.tol = t ? t->at(in.grid.spacing(), r.rhs) : 1e-3 * r.rhs;
      r.margin_tol = c.margin_tol;
      r.certification = Certification::NotApplicable;
      r.count = tr.size();
      r.instance_hash = in.hash;
      r.finalize();
      if (!chk.monotone || !chk.sandwich) {
        r.pass = false;
        r.reason = "slack";
      }
      r.extra = {{"monotone", chk.monotone},
                 {"sandwich", chk.sandwich},
                 {"worst_monotone", chk.worst_monotone},
                 {"worst_sandwich", chk.worst_sandwich},
                 {"delta_decreasing", chk.delta_decreasing},
                 {"bs_first", tr.front().bs_value},
                 {"delta_last", tr.back().delta_to_quadratic}};
      if (trace) *trace = prefix_rows(trace_csv(tr), index);
    } else if (e == "mm-step") {
      MultiStepOptions mo;
      mo.margin_tol = c.margin_tol;
      if (const auto t = tol_for("multimarginal_step")) mo.slack_tol = t->floor;
      const double C = c.C > 0 ? c.C : in.k / (in.k - 1.0);
      const auto res = multimarginal_monotone_step(in.potentials, in.lambda, C, mo);
      r = res.report;
      r.extra["C"] = C;
      if (c.steps > 1) {
        const auto tr = iterate_multimarginal(in.potentials, in.lambda, C, c.steps, mo);
        r.extra["trace_monotone"] = check_trace(tr, false).monotone;
        if (trace) *trace = prefix_rows(trace_csv(tr), index);
      }
    }
    rec["inequality_id"] = r.inequality_id;
    rec["report"] = r;
  } catch (const Error& err) {
    rec["error"] = err.what();
    rec["error_code"] = errc_name(err.code());
  } catch (const std::exception& err) {
    rec["error"] = err.what();
    rec["error_code"] = "internal";
  }
  return rec;
}

void tally(RunResult& out) {
  out.passed = out.theorem_failures = out.conjecture_findings = out.hypothesis_skips = out.errors = 0;
  for (const auto& rec : out.records) {
    if (rec.contains("error")) {
      ++out.errors;
      continue;
    }
    const auto& r = rec.at("report");
    if (r.at("pass").get<bool>()) {
      ++out.passed;
    } else if (r.at("reason") == "hypothesis") {
      ++out.hypothesis_skips;
    } else if (r.value("conjecture", false)) {
      ++out.conjecture_findings;
    } else {
      ++out.theorem_failures;
    }
  }
  // a conjecture finding outranks everything: it must not hide behind an error code
  out.exit_code = out.conjecture_findings ? 2 : (out.errors || out.theorem_failures) ? 1 : 0;
}

RunResult run_experiment(const ExperimentConfig& c) {
  RunResult out;
  out.records.resize(c.count);
  std::vector<std::string> traces(c.count);
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t T = std::min<std::size_t>(c.count, c.threads > 0 ? static_cast<std::size_t>(c.threads) : hw);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < c.count; i = next++) out.records[i] = run_instance(c, i, T == 1, &traces[i]);
  };
  if (T <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < T; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  tally(out);
  if (c.experiment == "iterate-pair" || c.experiment == "mm-step") {
    std::string csv = "instance,step,bs,j_sq,delta_quad\n";
    for (const auto& t : traces) csv += t;
    out.trace_csv = csv;
  }
  return out;
}

std::string summary_csv(const RunResult& r) {
  std::string s = "inequality_id,seed,slack,margin,pass\n";
  for (const auto& rec : r.records) {
    s += rec.at("inequality_id").get<std::string>() + "," + std::to_string(rec.at("seed").get<std::uint64_t>()) + ",";
    if (rec.contains("report")) {
      const auto& rep = rec.at("report");
      s += fmt_double(rep.at("slack").get<double>()) + "," + fmt_double(rep.at("hypothesis_margin").get<double>()) + "," +
           (rep.at("pass").get<bool>() ? "true" : "false") + "\n";
    } else {
      s += ",,error\n";
    }
  }
  return s;
}

void write_artifacts(const RunResult& r, const std::string& prefix) {
  const std::filesystem::path parent = std::filesystem::path(prefix).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  auto write = [](const std::string& path, const std::string& body) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::Config, "output: cannot write " + path);
    f << body;
  };
  std::string lines;
  for (const auto& rec : r.records) lines += rec.dump() + "\n";
  write(prefix + ".reports.jsonl", lines);
  write(prefix + ".summary.csv", summary_csv(r));
  if (!r.trace_csv.empty()) write(prefix + ".trace.csv", r.trace_csv);
}

}  // namespace santalo
