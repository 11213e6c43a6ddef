#include "fractrans/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "fractrans/mlf.hpp"
#include "fractrans/solver.hpp"
#include "fractrans/toml_lite.hpp"

namespace fractrans::cli {

using nlohmann::json;

namespace {

constexpr struct {
  Command command;
  const char* name;
} kCommands[] = {
    {Command::Solve, "solve"},   {Command::Verify, "verify"}, {Command::Compare, "compare"},
    {Command::Cauchy, "cauchy"}, {Command::Convergence, "convergence"}, {Command::Mlf, "mlf"},
    {Command::Fuzz, "fuzz"},
};

const std::set<std::string> kPrinciples{"max_principle", "uniqueness"};
const std::set<std::string> kFuzzKinds{"max_principle", "min_principle", "boundary_equality", "comparison_shared",
                                       "comparison_ordered"};

class Section {
 public:
  Section(const toml::Table& table, std::string name) : table_(table), name_(std::move(name)) {}

  void allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& k : table_.order) {
      if (!allowed.count(k)) {
        throw ConfigError("unknown key '" + k + "' " + (name_.empty() ? "at top level" : "in [" + name_ + "]"));
      }
    }
  }

  bool has(const std::string& key) const { return table_.entries.count(key) != 0; }

  std::string path(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

  const toml::Value& get(const std::string& key) const {
    auto it = table_.entries.find(key);
    if (it == table_.entries.end()) {
      throw ConfigError("missing required key '" + key + "'" + (name_.empty() ? "" : " in [" + name_ + "]"));
    }
    return it->second;
  }

  [[noreturn]] void type_error(const std::string& key, const toml::Value& v, const char* want) const {
    throw ConfigError(path(key) + " (line " + std::to_string(v.line) + "): expected " + want + ", found " +
                      v.type_name());
  }

  double as_number(const std::string& key, const toml::Value& v) const {
    if (auto d = std::get_if<double>(&v.data)) return *d;
    if (auto i = std::get_if<std::int64_t>(&v.data)) return static_cast<double>(*i);
    type_error(key, v, "a number");
  }

  std::size_t as_count(const std::string& key, const toml::Value& v) const {
    if (auto i = std::get_if<std::int64_t>(&v.data)) {
      if (*i < 0) throw ConfigError(path(key) + ": must be non-negative");
      return static_cast<std::size_t>(*i);
    }
    type_error(key, v, "a non-negative integer");
  }

  std::string as_string(const std::string& key, const toml::Value& v) const {
    if (auto s = std::get_if<std::string>(&v.data)) return *s;
    type_error(key, v, "a string");
  }

  double number(const std::string& key) const { return as_number(key, get(key)); }
  double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }
  std::optional<double> optional_number(const std::string& key) const {
    return has(key) ? std::optional<double>(number(key)) : std::nullopt;
  }

  std::size_t count(const std::string& key, std::size_t fallback) const {
    return has(key) ? as_count(key, get(key)) : fallback;
  }

  std::uint64_t unsigned64(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const auto& v = get(key);
    if (auto u = std::get_if<std::uint64_t>(&v.data)) return *u;
    if (auto i = std::get_if<std::int64_t>(&v.data)) {
      if (*i < 0) throw ConfigError(path(key) + ": must be a 64-bit unsigned integer");
      return static_cast<std::uint64_t>(*i);
    }
    type_error(key, v, "a 64-bit unsigned integer");
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& v = get(key);
    if (auto b = std::get_if<bool>(&v.data)) return *b;
    type_error(key, v, "a boolean");
  }

  std::string string(const std::string& key) const { return as_string(key, get(key)); }
  std::optional<std::string> optional_string(const std::string& key) const {
    return has(key) ? std::optional<std::string>(string(key)) : std::nullopt;
  }

  const toml::Array& array(const std::string& key) const {
    const auto& v = get(key);
    if (auto a = std::get_if<toml::Array>(&v.data)) return *a;
    type_error(key, v, "an array");
  }

  std::vector<double> numbers(const std::string& key) const {
    std::vector<double> out;
    for (const auto& v : array(key)) out.push_back(as_number(key, v));
    return out;
  }

  std::vector<std::size_t> counts(const std::string& key) const {
    std::vector<std::size_t> out;
    for (const auto& v : array(key)) out.push_back(as_count(key, v));
    return out;
  }

  std::vector<std::string> strings(const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& v : array(key)) out.push_back(as_string(key, v));
    return out;
  }

  expr::Expression expression(const std::string& key, const std::string& source,
                              const expr::Variables& vars = expr::Variables::xt()) const {
    try {
      return expr::Expression(source, vars);
    } catch (const expr::LexError& e) {
      throw ConfigError(path(key) + " at position " + std::to_string(e.position()) + ": " + e.what());
    } catch (const expr::ParseError& e) {
      throw ConfigError(path(key) + " at position " + std::to_string(e.position()) + ": " + e.what());
    }
  }

  expr::Expression expression(const std::string& key) const { return expression(key, string(key)); }
  expr::Expression expression(const std::string& key, const char* fallback) const {
    return expression(key, has(key) ? string(key) : std::string(fallback));
  }
  std::optional<expr::Expression> optional_expression(const std::string& key) const {
    return has(key) ? std::optional<expr::Expression>(expression(key)) : std::nullopt;
  }

  std::vector<expr::Expression> expressions(const std::string& key) const {
    std::vector<expr::Expression> out;
    for (const auto& s : strings(key)) out.push_back(expression(key, s));
    return out;
  }

  template <class Enum>
  Enum choice(const std::string& key, Enum fallback, std::initializer_list<std::pair<const char*, Enum>> options) const {
    if (!has(key)) return fallback;
    const std::string v = string(key);
    std::string names;
    for (const auto& [name, value] : options) {
      if (v == name) return value;
      names += names.empty() ? name : std::string(", ") + name;
    }
    throw ConfigError(path(key) + ": unknown value '" + v + "' (expected one of " + names + ")");
  }

 private:
  const toml::Table& table_;
  std::string name_;
};

verify::ForcingSign forcing_sign(const Section& s, const std::string& key, verify::ForcingSign fallback) {
  return s.choice<verify::ForcingSign>(key, fallback,
                                       {{"nonpositive", verify::ForcingSign::NonPositive},
                                        {"nonnegative", verify::ForcingSign::NonNegative},
                                        {"zero", verify::ForcingSign::Zero}});
}

ProblemSection read_problem(const Section& s) {
  s.allow({"x_min", "x_max", "T", "nx", "nt", "time_orders", "time_coeffs", "space_orders", "space_coeffs",
           "reaction", "forcing", "initial", "boundary"});
  ProblemSection p;
  p.x_min = s.number("x_min", p.x_min);
  p.x_max = s.number("x_max", p.x_max);
  p.T = s.number("T", p.T);
  p.nx = s.count("nx", p.nx);
  p.nt = s.count("nt", p.nt);
  p.time_orders = s.numbers("time_orders");
  p.time_coeffs = s.expressions("time_coeffs");
  p.space_orders = s.numbers("space_orders");
  p.space_coeffs = s.expressions("space_coeffs");
  if (p.time_orders.size() != p.time_coeffs.size()) {
    throw ConfigError("problem.time_coeffs: need one coefficient per entry of problem.time_orders");
  }
  if (p.space_orders.size() != p.space_coeffs.size()) {
    throw ConfigError("problem.space_coeffs: need one coefficient per entry of problem.space_orders");
  }
  p.reaction = s.expression("reaction", "0");
  p.forcing = s.expression("forcing", "0");
  p.initial = s.optional_expression("initial");
  p.boundary = s.optional_expression("boundary");
  return p;
}

SemilinearSection read_semilinear(const Section& s) {
  s.allow({"f", "u_lo", "u_hi", "tol", "max_iter", "damping"});
  SemilinearSection m;
  m.f = s.string("f");
  s.expression("f", m.f, expr::Variables::single("u"));
  m.u_lo = s.number("u_lo", m.u_lo);
  m.u_hi = s.number("u_hi", m.u_hi);
  m.tol = s.number("tol", m.tol);
  m.max_iter = s.count("max_iter", m.max_iter);
  m.damping = s.number("damping", m.damping);
  return m;
}

VerifySection read_verify(const Section& s) {
  s.allow({"principles", "forcing_sign", "reaction_zero", "rel_tol", "uniqueness_tol", "count", "seed", "fuzz",
           "fuzz_nx", "fuzz_nt", "max_terms"});
  VerifySection v;
  if (s.has("principles")) {
    v.principles = s.strings("principles");
    for (const auto& p : v.principles)
      if (!kPrinciples.count(p)) throw ConfigError("verify.principles: unknown principle '" + p + "'");
  }
  v.forcing = forcing_sign(s, "forcing_sign", v.forcing);
  v.reaction_zero = s.boolean("reaction_zero", v.reaction_zero);
  v.rel_tol = s.number("rel_tol", v.rel_tol);
  v.uniqueness_tol = s.number("uniqueness_tol", v.uniqueness_tol);
  v.count = s.count("count", v.count);
  v.seed = s.unsigned64("seed", v.seed);
  if (s.has("fuzz")) {
    v.fuzz = s.strings("fuzz");
    for (const auto& k : v.fuzz)
      if (!kFuzzKinds.count(k)) throw ConfigError("verify.fuzz: unknown fuzz kind '" + k + "'");
  }
  v.fuzz_nx = s.count("fuzz_nx", v.fuzz_nx);
  v.fuzz_nt = s.count("fuzz_nt", v.fuzz_nt);
  v.max_terms = s.count("max_terms", v.max_terms);
  return v;
}

CompareSection read_compare(const Section& s) {
  s.allow({"mode", "reaction", "forcing", "initial", "boundary", "f", "tol"});
  CompareSection c;
  c.mode = s.choice<verify::ComparisonMode>(
      "mode", c.mode,
      {{"shared", verify::ComparisonMode::SharedReaction}, {"ordered", verify::ComparisonMode::OrderedReaction}});
  c.reaction = s.optional_expression("reaction");
  c.forcing = s.optional_expression("forcing");
  c.initial = s.optional_expression("initial");
  c.boundary = s.optional_expression("boundary");
  c.f = s.optional_string("f");
  if (c.f) s.expression("f", *c.f, expr::Variables::single("u"));
  c.tol = s.number("tol", c.tol);
  return c;
}

CauchySection read_cauchy(const Section& s) {
  s.allow({"alpha", "speed", "initial", "forcing", "phi", "extra_decay", "x_left", "x_right", "window_left",
           "window_right", "margin_fraction", "inverse_speed_diverges", "T", "nx", "nt", "forcing_sign"});
  CauchySection c;
  c.alpha = s.number("alpha", c.alpha);
  c.speed = s.optional_expression("speed");
  c.initial = s.optional_expression("initial");
  c.forcing = s.optional_expression("forcing");
  c.phi = s.optional_string("phi");
  if (c.phi) {
    s.expression("phi", *c.phi);
    if (c.speed || c.initial || c.forcing) {
      throw ConfigError("cauchy.phi: the separable scenario fixes speed, initial and forcing");
    }
  } else if (!c.initial) {
    throw ConfigError("missing required key 'initial' in [cauchy]");
  }
  c.extra_decay = s.number("extra_decay", c.extra_decay);
  c.x_left = s.number("x_left", c.x_left);
  c.x_right = s.number("x_right", c.x_right);
  c.window_left = s.number("window_left", c.window_left);
  c.window_right = s.number("window_right", c.window_right);
  c.margin_fraction = s.number("margin_fraction", c.margin_fraction);
  c.inverse_speed_diverges = s.boolean("inverse_speed_diverges", c.inverse_speed_diverges);
  c.T = s.number("T", c.T);
  c.nx = s.count("nx", c.nx);
  c.nt = s.count("nt", c.nt);
  c.forcing_sign = forcing_sign(s, "forcing_sign", c.forcing_sign);
  return c;
}

ConvergenceSection read_convergence(const Section& s) {
  s.allow({"nx", "nt", "norm", "oracle", "exact", "time_poly", "space_poly", "rate", "amplitude", "order_lo",
           "order_hi"});
  ConvergenceSection c;
  c.nx = s.counts("nx");
  c.nt = s.counts("nt");
  if (c.nx.empty() || c.nt.empty()) throw ConfigError("convergence.nx and convergence.nt must not be empty");
  if (c.nx.size() != c.nt.size() && c.nx.size() != 1 && c.nt.size() != 1) {
    throw ConfigError("convergence.nx and convergence.nt must have equal lengths (or one entry to broadcast)");
  }
  c.norm = s.choice<verify::ErrorNorm>("norm", c.norm,
                                       {{"sup_grid", verify::ErrorNorm::SupGrid},
                                        {"final_level", verify::ErrorNorm::SupFinalLevel},
                                        {"last_column", verify::ErrorNorm::SupLastColumn}});
  c.oracle = s.choice<OracleKind>("oracle", c.oracle,
                                  {{"expression", OracleKind::Expression},
                                   {"manufactured", OracleKind::Manufactured},
                                   {"ml_time", OracleKind::MlTime},
                                   {"ml_space", OracleKind::MlSpace}});
  c.exact = s.optional_expression("exact");
  if (c.oracle == OracleKind::Expression && !c.exact) {
    throw ConfigError("missing required key 'exact' in [convergence]");
  }
  if (c.oracle == OracleKind::Manufactured) {
    if (s.has("time_poly")) c.time_poly = s.numbers("time_poly");
    if (s.has("space_poly")) c.space_poly = s.numbers("space_poly");
  }
  c.rate = s.number("rate", c.rate);
  c.amplitude = s.number("amplitude", c.amplitude);
  c.order_lo = s.optional_number("order_lo");
  c.order_hi = s.optional_number("order_hi");
  return c;
}

MlfSection read_mlf(const Section& s) {
  s.allow({"alpha", "beta", "z"});
  MlfSection m;
  m.alpha = s.number("alpha");
  m.beta = s.number("beta", m.beta);
  m.z = s.number("z");
  return m;
}

OutputSection read_output(const Section& s) {
  s.allow({"dir", "record_timings"});
  OutputSection o;
  if (s.has("dir")) o.dir = s.string("dir");
  o.record_timings = s.boolean("record_timings", o.record_timings);
  return o;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

json report_json(const VerificationReport& r) {
  json details = json::object();
  for (const auto& [k, v] : r.details) details[k] = v;
  return json{{"principle", principle_name(r.principle)},
              {"verdict", r.verdict ? "pass" : "fail"},
              {"measured", r.measured},
              {"threshold", r.threshold},
              {"direction", r.direction == Direction::AtMost ? "at_most" : "at_least"},
              {"details", details},
              {"fingerprint", r.fingerprint}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

solver::PicardOptions picard_options(const SemilinearSection& s) {
  solver::PicardOptions p;
  p.tol = s.tol;
  p.max_iter = s.max_iter;
  p.damping = s.damping;
  return p;
}

const ProblemSection& need_problem(const RunConfig& c) {
  if (!c.problem) throw ConfigError("command '" + command_name(*c.command) + "' needs a [problem] section");
  return *c.problem;
}

CoefficientField field_of(const expr::Expression& e) { return CoefficientField::expression(e); }

class Runner {
 public:
  Runner(const RunConfig& c, std::ostream& out, std::ostream& err) : c_(c), out_(out), err_(err) {}

  int run() {
    switch (*c_.command) {
      case Command::Solve:
        return solve();
      case Command::Verify:
        return verify_cmd();
      case Command::Compare:
        return compare();
      case Command::Cauchy:
        return cauchy();
      case Command::Convergence:
        return convergence();
      case Command::Mlf:
        return mlf_cmd();
      case Command::Fuzz:
        return fuzz();
    }
    return kExitInput;
  }

 private:
  const RunConfig& c_;
  std::ostream& out_;
  std::ostream& err_;

  std::filesystem::path artifact(const char* name) const { return c_.output.dir / name; }

  UniformGrid problem_grid() const {
    const auto& p = need_problem(c_);
    return UniformGrid(p.x_min, p.x_max, p.T, p.nx, p.nt);
  }

  int finish(const std::vector<VerificationReport>& reports) {
    write_text(artifact("reports.json"), reports_json(reports));
    bool all = true;
    for (const auto& r : reports) {
      if (!r.verdict) {
        all = false;
        err_ << "failed: " << report_json(r).dump(2) << "\n";
      }
    }
    spdlog::info("{} report(s), {}", reports.size(), all ? "all pass" : "failures present");
    return all ? kExitPass : kExitFail;
  }

  int solve() {
    const UniformGrid grid = problem_grid();
    const auto spec = build_problem(*c_.problem, grid);
    const auto start = std::chrono::steady_clock::now();
    json manifest;
    manifest["command"] = "solve";
    SolutionField field(grid);
    if (c_.semilinear) {
      const auto f = solver::SemilinearTerm::expression(c_.semilinear->f, c_.semilinear->u_lo, c_.semilinear->u_hi);
      auto result = solver::solve_semilinear(spec, f, picard_options(*c_.semilinear));
      field = std::move(result.field);
      manifest["solver"] = "semilinear";
      manifest["semilinear"] = c_.semilinear->f;
      manifest["picard_iterations"] = result.iterations;
    } else {
      field = solver::solve_ibvp(spec);
      manifest["solver"] = "linear";
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    manifest["grid"] = {{"x_min", grid.x_min()}, {"x_max", grid.x_max()}, {"T", grid.T()},
                        {"nx", grid.nx()},       {"nt", grid.nt()}};
    manifest["time_orders"] = c_.problem->time_orders;
    manifest["space_orders"] = c_.problem->space_orders;
    manifest["fingerprint"] = fingerprint(spec);
    manifest["solution"] = "solution.csv";
    if (c_.output.record_timings) manifest["timings"] = {{"solve_seconds", seconds}};
    write_solution_csv(field, artifact("solution.csv"));
    write_text(artifact("manifest.json"), manifest.dump(2) + "\n");
    spdlog::info("solved {}x{} grid in {:.3f} s", grid.nx(), grid.nt(), seconds);
    if (!field.all_finite()) {
      err_ << "solution contains non-finite values\n";
      return kExitFail;
    }
    return kExitPass;
  }

  int verify_cmd() {
    const UniformGrid grid = problem_grid();
    const auto spec = build_problem(*c_.problem, grid);
    std::vector<VerificationReport> reports;
    const auto& v = c_.verify;
    for (const auto& p : v.principles) {
      if (p == "max_principle") {
        if (c_.semilinear) throw ConfigError("verify: max_principle applies to linear problems only");
        const auto u = solver::solve_ibvp(spec);
        reports.push_back(verify::check_max_principle(spec, u, {v.forcing, v.reaction_zero, v.rel_tol}));
      } else if (p == "uniqueness") {
        if (c_.semilinear) {
          const auto f =
              solver::SemilinearTerm::expression(c_.semilinear->f, c_.semilinear->u_lo, c_.semilinear->u_hi);
          reports.push_back(verify::check_uniqueness(spec, f, picard_options(*c_.semilinear)));
        } else {
          reports.push_back(verify::check_uniqueness(spec, v.uniqueness_tol));
        }
      }
    }
    return finish(reports);
  }

  int compare() {
    const UniformGrid grid = problem_grid();
    const auto first = build_problem(*c_.problem, grid);
    ProblemSpec second = first;
    const auto& cmp = c_.compare;
    if (cmp.reaction) second.reaction = field_of(*cmp.reaction);
    if (cmp.forcing) second.forcing = field_of(*cmp.forcing);
    if (cmp.initial) second.initial = field_of(*cmp.initial);
    if (cmp.boundary) second.boundary = field_of(*cmp.boundary);
    std::vector<VerificationReport> reports;
    if (cmp.f) {
      if (!c_.semilinear) throw ConfigError("compare.f needs a [semilinear] section for the first problem");
      const auto& s = *c_.semilinear;
      const auto f1 = solver::SemilinearTerm::expression(s.f, s.u_lo, s.u_hi);
      const auto f2 = solver::SemilinearTerm::expression(*cmp.f, s.u_lo, s.u_hi);
      reports.push_back(verify::check_semilinear_comparison(f1, f2, {first.initial, first.boundary},
                                                            {second.initial, second.boundary}, first,
                                                            picard_options(s), cmp.tol));
    } else {
      reports.push_back(verify::check_comparison(first, second, cmp.mode, c_.verify.rel_tol));
    }
    return finish(reports);
  }

  int cauchy() {
    if (!c_.cauchy) throw ConfigError("command 'cauchy' needs a [cauchy] section");
    const auto& s = *c_.cauchy;
    const UniformGrid grid(s.x_left, s.x_right, s.T, s.nx, s.nt);
    const FractionalOrder alpha(s.alpha);
    solver::CauchySpec spec{CoefficientField::constant(1.0), {}, {}, s.x_left, s.x_right, s.window_left,
                            s.window_right};
    std::optional<verify::SeparableScenario> scenario;
    if (s.phi) {
      scenario = verify::separable_scenario(*s.phi, alpha, s.extra_decay, s.x_left, s.x_right, s.window_left,
                                            s.window_right);
      spec = scenario->spec;
    } else {
      if (s.speed) spec.speed = field_of(*s.speed);
      spec.initial = field_of(*s.initial);
      spec.forcing = s.forcing ? field_of(*s.forcing) : CoefficientField::constant(0.0);
    }
    spec.margin_fraction = s.margin_fraction;
    spec.inverse_speed_diverges = s.inverse_speed_diverges;
    auto growth = solver::inverse_speed_growth(spec);
    if (growth.warning) {
      spdlog::warn("1/q grows slowly towards the left edge; divergence of its integral is only declared");
    }
    auto report = verify::check_cauchy_sup(spec, alpha, grid, s.forcing_sign, c_.verify.rel_tol);
    if (scenario) {
      report.details["slope_bound"] = scenario->slope_bound;
      report.details["slope_argmax"] = scenario->slope_argmax;
    }
    return finish({report});
  }

  int convergence() {
    if (!c_.convergence) throw ConfigError("command 'convergence' needs a [convergence] section");
    const auto& p = need_problem(c_);
    const auto& s = *c_.convergence;
    verify::GridLadder ladder;
    ladder.x_min = p.x_min;
    ladder.x_max = p.x_max;
    ladder.T = p.T;
    ladder.norm = s.norm;
    const std::size_t levels = std::max(s.nx.size(), s.nt.size());
    for (std::size_t k = 0; k < levels; ++k) {
      ladder.levels.emplace_back(s.nx[s.nx.size() == 1 ? 0 : k], s.nt[s.nt.size() == 1 ? 0 : k]);
    }
    std::function<double(double, double)> exact;
    const double x_min = p.x_min;
    switch (s.oracle) {
      case OracleKind::Expression: {
        ladder.build = [&p](const UniformGrid& g) { return build_problem(p, g); };
        const expr::Expression e = *s.exact;
        exact = [e](double x, double t) { return e(x, t); };
        break;
      }
      case OracleKind::Manufactured: {
        const verify::PolynomialSolution poly{s.time_poly, s.space_poly};
        ladder.build = [&p, poly](const UniformGrid& g) {
          std::vector<Term> time_terms;
          std::vector<Term> space_terms;
          for (std::size_t k = 0; k < p.time_orders.size(); ++k)
            time_terms.push_back({FractionalOrder(p.time_orders[k]), field_of(p.time_coeffs[k])});
          for (std::size_t k = 0; k < p.space_orders.size(); ++k)
            space_terms.push_back({FractionalOrder(p.space_orders[k]), field_of(p.space_coeffs[k])});
          return verify::manufactured_problem(time_terms, space_terms, field_of(p.reaction), poly, g);
        };
        exact = [poly, x_min](double x, double t) { return poly(x, t, x_min); };
        break;
      }
      case OracleKind::MlTime: {
        if (p.time_orders.size() != 1) throw ConfigError("convergence.oracle 'ml_time' needs exactly one time term");
        ladder.build = [&p](const UniformGrid& g) { return build_problem(p, g); };
        const double a = p.time_orders[0], r = s.rate, a0 = s.amplitude;
        exact = [=](double, double t) { return mlf::ml_time_solution(a, r, a0, t); };
        break;
      }
      case OracleKind::MlSpace: {
        if (p.space_orders.size() != 1) {
          throw ConfigError("convergence.oracle 'ml_space' needs exactly one space term");
        }
        ladder.build = [&p](const UniformGrid& g) { return build_problem(p, g); };
        const double b = p.space_orders[0], lambda = s.rate, g0 = s.amplitude;
        exact = [=](double x, double) { return mlf::ml_space_solution(b, lambda, g0, x - x_min); };
        break;
      }
    }
    const auto table = verify::convergence_study(ladder, exact);
    std::string csv = "level,Nx,Nt,sup_error,observed_order\n";
    for (const auto& row : table.rows) {
      csv += std::to_string(row.level) + "," + std::to_string(row.nx) + "," + std::to_string(row.nt) + "," +
             format_double(row.sup_error) + "," +
             (std::isnan(row.observed_order) ? std::string("nan") : format_double(row.observed_order)) + "\n";
    }
    write_text(artifact("convergence.csv"), csv);
    if (!table.monotone) spdlog::warn("error sequence is not monotone along the ladder");
    if (s.order_lo || s.order_hi) {
      const double lo = s.order_lo.value_or(-std::numeric_limits<double>::infinity());
      const double hi = s.order_hi.value_or(std::numeric_limits<double>::infinity());
      return finish({verify::convergence_report(table, lo, hi)});
    }
    return kExitPass;
  }

  int mlf_cmd() {
    if (!c_.mlf) throw ConfigError("command 'mlf' needs a [mlf] section");
    const double v = mlf::mittag_leffler(c_.mlf->alpha, c_.mlf->beta, c_.mlf->z);
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out_ << buf << "\n";
    return kExitPass;
  }

  int fuzz() {
    const auto& v = c_.verify;
    std::vector<VerificationReport> reports;
    for (const auto& kind : v.fuzz) {
      verify::FuzzOptions opts;
      opts.count = v.count;
      opts.seed = v.seed;
      opts.rel_tol = v.rel_tol;
      opts.spec.nx = v.fuzz_nx;
      opts.spec.nt = v.fuzz_nt;
      opts.spec.max_terms = v.max_terms;
      std::vector<VerificationReport> batch;
      if (kind == "max_principle") {
        opts.spec.forcing = verify::ForcingSign::NonPositive;
        batch = verify::fuzz_max_principle(opts);
      } else if (kind == "min_principle") {
        opts.spec.forcing = verify::ForcingSign::NonNegative;
        batch = verify::fuzz_max_principle(opts);
      } else if (kind == "boundary_equality") {
        opts.spec.forcing = verify::ForcingSign::Zero;
        opts.spec.reaction_zero = true;
        batch = verify::fuzz_max_principle(opts);
      } else if (kind == "comparison_shared") {
        batch = verify::fuzz_comparison(opts, verify::ComparisonMode::SharedReaction);
      } else {
        batch = verify::fuzz_comparison(opts, verify::ComparisonMode::OrderedReaction);
      }
      spdlog::info("fuzz {}: {} case(s)", kind, batch.size());
      reports.insert(reports.end(), batch.begin(), batch.end());
    }
    return finish(reports);
  }
};

}  // namespace

std::optional<Command> parse_command(const std::string& name) {
  for (const auto& c : kCommands)
    if (name == c.name) return c.command;
  return std::nullopt;
}

std::string command_name(Command c) {
  for (const auto& k : kCommands)
    if (k.command == c) return k.name;
  return "?";
}

RunConfig parse_config(const std::string& text) {
  toml::Document doc;
  try {
    doc = toml::parse(text);
  } catch (const toml::SyntaxError& e) {
    throw ConfigError(std::string("syntax error: ") + e.what());
  }
  static const std::set<std::string> known{"",       "problem", "semilinear",  "verify", "compare",
                                           "cauchy", "convergence", "mlf", "output"};
  for (const auto& name : doc.order)
    if (!known.count(name)) throw ConfigError("unknown table [" + name + "]");
  RunConfig c;
  auto section = [&](const char* name) -> std::optional<Section> {
    auto it = doc.tables.find(name);
    if (it == doc.tables.end()) return std::nullopt;
    return Section(it->second, name);
  };
  const Section root(doc.tables.at(""), "");
  root.allow({"command"});
  if (auto name = root.optional_string("command")) {
    c.command = parse_command(*name);
    if (!c.command) throw ConfigError("command: unknown command '" + *name + "'");
  }
  if (auto s = section("problem")) c.problem = read_problem(*s);
  if (auto s = section("semilinear")) c.semilinear = read_semilinear(*s);
  if (auto s = section("verify")) c.verify = read_verify(*s);
  if (auto s = section("compare")) c.compare = read_compare(*s);
  if (auto s = section("cauchy")) c.cauchy = read_cauchy(*s);
  if (auto s = section("convergence")) c.convergence = read_convergence(*s);
  if (auto s = section("mlf")) c.mlf = read_mlf(*s);
  if (auto s = section("output")) c.output = read_output(*s);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream text;
  text << f.rdbuf();
  return parse_config(text.str());
}

void apply_overrides(RunConfig& config, const Overrides& o) {
  if (o.command) config.command = o.command;
  if (o.out) config.output.dir = *o.out;
  if (o.seed) config.verify.seed = *o.seed;
  if (o.nx) {
    if (config.problem) config.problem->nx = *o.nx;
    if (config.cauchy) config.cauchy->nx = *o.nx;
    config.verify.fuzz_nx = *o.nx;
  }
  if (o.nt) {
    if (config.problem) config.problem->nt = *o.nt;
    if (config.cauchy) config.cauchy->nt = *o.nt;
    config.verify.fuzz_nt = *o.nt;
  }
}

ProblemSpec build_problem(const ProblemSection& p, const UniformGrid& grid) {
  if (!p.initial) throw ConfigError("missing required key 'initial' in [problem]");
  if (!p.boundary) throw ConfigError("missing required key 'boundary' in [problem]");
  ProblemSpec spec{{}, {}, field_of(p.reaction), field_of(p.forcing), field_of(*p.initial), field_of(*p.boundary),
                   grid};
  try {
    for (std::size_t k = 0; k < p.time_orders.size(); ++k)
      spec.time_terms.push_back({FractionalOrder(p.time_orders[k]), field_of(p.time_coeffs[k])});
    for (std::size_t k = 0; k < p.space_orders.size(); ++k)
      spec.space_terms.push_back({FractionalOrder(p.space_orders[k]), field_of(p.space_coeffs[k])});
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("problem orders: ") + e.what());
  }
  return spec;
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  if (!config.command) {
    err << "error: no command given\n";
    return kExitInput;
  }
  spdlog::debug("running '{}'", command_name(*config.command));
  try {
    return Runner(config, out, err).run();
  } catch (const solver::InadmissibleProblem& e) {
    err << "error: inadmissible problem\n";
    for (const auto& v : e.violations()) {
      err << "  condition " << condition_name(v.condition) << (v.term.empty() ? "" : " (" + v.term + ")") << ": "
          << v.message << "\n";
    }
    return kExitInput;
  } catch (const verify::HypothesisError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const StructuralError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFail;
  }
}

void write_solution_csv(const SolutionField& field, const std::filesystem::path& path) {
  const auto& g = field.grid();
  std::string text = "x,t,u\n";
  text.reserve(text.size() + g.node_count() * 72);
  for (std::size_t n = 0; n <= g.nt(); ++n) {
    const std::string t = format_double(g.t(n));
    for (std::size_t i = 0; i <= g.nx(); ++i) {
      text += format_double(g.x(i));
      text += ',';
      text += t;
      text += ',';
      text += format_double(field(i, n));
      text += '\n';
    }
  }
  write_text(path, text);
}

SolutionField read_solution_csv(const std::filesystem::path& path, const UniformGrid& grid) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(f, line) || line != "x,t,u") throw std::runtime_error(path.string() + ": missing header x,t,u");
  SolutionField field(grid);
  const double scale = std::max({1.0, std::abs(grid.x_min()), std::abs(grid.x_max()), grid.T()});
  std::size_t row = 0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (row >= grid.node_count()) throw std::runtime_error(path.string() + ": more rows than grid nodes");
    double v[3];
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (int k = 0; k < 3; ++k) {
      auto [ptr, ec] = std::from_chars(p, end, v[k]);
      if (ec != std::errc() || (k < 2 && (ptr == end || *ptr != ',')) || (k == 2 && ptr != end)) {
        throw std::runtime_error(path.string() + ": malformed row " + std::to_string(row + 2));
      }
      p = ptr + 1;
    }
    const std::size_t n = row / (grid.nx() + 1);
    const std::size_t i = row % (grid.nx() + 1);
    if (std::abs(v[0] - grid.x(i)) > 1e-12 * scale || std::abs(v[1] - grid.t(n)) > 1e-12 * scale) {
      throw std::runtime_error(path.string() + ": row " + std::to_string(row + 2) + " does not match the grid");
    }
    field(i, n) = v[2];
    ++row;
  }
  if (row != grid.node_count()) throw std::runtime_error(path.string() + ": fewer rows than grid nodes");
  return field;
}

std::string reports_json(const std::vector<VerificationReport>& reports) {
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(report_json(r));
  return arr.dump(2) + "\n";
}

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("fractrans");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("FRACTRANS_LOG")) {
    const auto level = spdlog::level::from_str(env);
    if (level != spdlog::level::off || std::string(env) == "off") spdlog::set_level(level);
  }
}

}  // namespace fractrans::cli
