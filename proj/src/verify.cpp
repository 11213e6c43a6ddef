#include "fractrans/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

#include "fractrans/expr.hpp"
#include "fractrans/fracops.hpp"

namespace fractrans::verify {

namespace {

std::string node_text(const UniformGrid& g, std::size_t i, std::size_t n) {
  std::ostringstream os;
  os << "node (" << i << ", " << n << ") at x=" << g.x(i) << ", t=" << g.t(n);
  return os.str();
}

void put_location(VerificationReport& r, const std::string& key, const UniformGrid& g, double value, std::size_t i,
                  std::size_t n) {
  r.details[key] = value;
  r.details[key + "_i"] = static_cast<double>(i);
  r.details[key + "_n"] = static_cast<double>(n);
  r.details[key + "_x"] = g.x(i);
  r.details[key + "_t"] = g.t(n);
}

void check_forcing_sign(const ProblemSpec& spec, ForcingSign sign) {
  const auto& g = spec.grid;
  for (std::size_t n = 0; n <= g.nt(); ++n) {
    for (std::size_t i = 0; i <= g.nx(); ++i) {
      const double f = spec.forcing.at(g, i, n);
      const bool bad = (sign == ForcingSign::NonPositive && f > 0.0) ||
                       (sign == ForcingSign::NonNegative && f < 0.0) || (sign == ForcingSign::Zero && f != 0.0);
      if (bad) {
        throw HypothesisError("declared forcing sign '" + forcing_sign_name(sign) + "' contradicted at " +
                              node_text(g, i, n) + " (F=" + std::to_string(f) + ")");
      }
    }
  }
}

void check_reaction_zero(const ProblemSpec& spec) {
  const auto& g = spec.grid;
  for (std::size_t n = 0; n <= g.nt(); ++n) {
    for (std::size_t i = 0; i <= g.nx(); ++i) {
      if (spec.reaction.at(g, i, n) != 0.0) {
        throw HypothesisError("declared r == 0 contradicted at " + node_text(g, i, n));
      }
    }
  }
}

struct MaxDiff {
  double value = 0.0;
  std::size_t i = 0;
  std::size_t n = 0;
};

MaxDiff locate_sup_difference(const SolutionField& a, const SolutionField& b) {
  MaxDiff d;
  const auto& g = a.grid();
  for (std::size_t n = 0; n <= g.nt(); ++n) {
    for (std::size_t i = 0; i <= g.nx(); ++i) {
      const double v = std::abs(a(i, n) - b(i, n));
      if (v > d.value) d = {v, i, n};
    }
  }
  return d;
}

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(next() % n); }
  bool chance(double p) { return uniform() < p; }

 private:
  std::uint64_t state_;
};

struct Wave {
  double kx, px, kt, pt;
  double operator()(double x, double t) const { return std::sin(kx * x + px) * std::cos(kt * t + pt); }
};

Wave random_wave(SplitMix64& rng) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return {rng.uniform(0.0, 4.0), rng.uniform(0.0, two_pi), rng.uniform(0.0, 4.0), rng.uniform(0.0, two_pi)};
}

std::string wave_label(double amp, double theta, const Wave& w) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.6g*(1+%.6g*sin(%.6g*x+%.6g)*cos(%.6g*t+%.6g))", amp, theta, w.kx, w.px, w.kt,
                w.pt);
  return buf;
}

// amp * (1 + theta * wave) with theta <= 1, so the sign of amp is kept.
CoefficientField signed_field(SplitMix64& rng, double amp, bool may_vanish) {
  const double theta = may_vanish ? 1.0 : rng.uniform(0.0, 0.9);
  const Wave w = random_wave(rng);
  return CoefficientField::function([=](double x, double t) { return amp * (1.0 + theta * w(x, t)); },
                                    wave_label(amp, theta, w));
}

std::vector<double> random_orders(SplitMix64& rng, std::size_t count) {
  for (;;) {
    std::vector<double> v(count);
    for (auto& a : v) a = rng.uniform(0.05, 1.0);
    std::sort(v.begin(), v.end());
    if (rng.chance(0.25)) v.back() = 1.0;
    bool ok = true;
    for (std::size_t k = 1; k < v.size(); ++k) ok = ok && v[k] - v[k - 1] >= 1e-3;
    if (ok) return v;
  }
}

CoefficientField sum_field(CoefficientField a, CoefficientField b) {
  return CoefficientField::function([a, b](double x, double t) { return a(x, t) + b(x, t); },
                                    "(" + a.describe() + ")+(" + b.describe() + ")");
}

CoefficientField scaled_field(double s, CoefficientField a) {
  return CoefficientField::function([s, a](double x, double t) { return s * a(x, t); },
                                    std::to_string(s) + "*(" + a.describe() + ")");
}

struct GeneratedData {
  CoefficientField initial;
  CoefficientField boundary;
};

GeneratedData random_data(SplitMix64& rng, double x_min, bool nonnegative) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double a0 = nonnegative ? rng.uniform(0.0, 1.0) : rng.uniform(-1.0, 1.0);
  const double a1 = nonnegative ? rng.uniform(-a0, a0) : rng.uniform(-1.0, 1.0);
  const double k = rng.uniform(0.0, 4.0);
  const double ph = rng.uniform(0.0, two_pi);
  const double omega = rng.uniform(0.0, 6.0);
  const double g1 = nonnegative ? rng.uniform(0.0, 1.0) : rng.uniform(-1.0, 1.0);
  auto a = [=](double x) { return a0 + a1 * std::sin(k * x + ph); };
  const double a_left = a(x_min);
  GeneratedData d;
  d.initial = CoefficientField::function([a](double x, double) { return a(x); }, "a");
  if (nonnegative) {
    d.boundary = CoefficientField::function(
        [=](double, double t) { return a_left + g1 * (1.0 - std::cos(omega * t)); }, "g");
  } else {
    d.boundary =
        CoefficientField::function([=](double, double t) { return a_left + g1 * std::sin(omega * t); }, "g");
  }
  return d;
}

ProblemSpec generate(SplitMix64& rng, const RandomSpecOptions& opts) {
  const double x_max = rng.uniform(0.5, 2.0);
  const double T = rng.uniform(0.5, 2.0);
  UniformGrid grid(0.0, x_max, T, opts.nx, opts.nt);
  const std::size_t cap = std::max<std::size_t>(1, opts.max_terms);
  const std::size_t n_time = 1 + rng.index(cap);
  const std::size_t n_space = 1 + rng.index(cap);

  ProblemSpec spec{{}, {}, {}, {}, {}, {}, grid};
  const auto alphas = random_orders(rng, n_time);
  for (std::size_t k = 0; k < n_time; ++k) {
    // the first time coefficient stays bounded away from zero
    const bool vanish = k > 0 && rng.chance(0.3);
    spec.time_terms.push_back({FractionalOrder(alphas[k]), signed_field(rng, rng.uniform(0.1, 2.0), vanish)});
  }
  const auto betas = random_orders(rng, n_space);
  for (std::size_t k = 0; k < n_space; ++k) {
    const double amp = rng.chance(0.1) ? 0.0 : rng.uniform(0.0, 2.0);
    spec.space_terms.push_back({FractionalOrder(betas[k]), signed_field(rng, amp, rng.chance(0.3))});
  }
  if (opts.reaction_zero) {
    spec.reaction = CoefficientField::constant(0.0);
  } else {
    spec.reaction = signed_field(rng, -rng.uniform(0.0, 3.0), rng.chance(0.3));
  }
  switch (opts.forcing) {
    case ForcingSign::NonPositive:
      spec.forcing = signed_field(rng, -rng.uniform(0.0, 2.0), rng.chance(0.3));
      break;
    case ForcingSign::NonNegative:
      spec.forcing = signed_field(rng, rng.uniform(0.0, 2.0), rng.chance(0.3));
      break;
    case ForcingSign::Zero:
      spec.forcing = CoefficientField::constant(0.0);
      break;
  }
  auto data = random_data(rng, grid.x_min(), opts.nonnegative_data);
  spec.initial = std::move(data.initial);
  spec.boundary = std::move(data.boundary);
  return spec;
}

double norm_error(const SolutionField& u, ErrorNorm norm, const std::function<double(double, double)>& exact) {
  const auto& g = u.grid();
  double e = 0.0;
  auto visit = [&](std::size_t i, std::size_t n) { e = std::max(e, std::abs(u(i, n) - exact(g.x(i), g.t(n)))); };
  switch (norm) {
    case ErrorNorm::SupGrid:
      for (std::size_t n = 0; n <= g.nt(); ++n)
        for (std::size_t i = 0; i <= g.nx(); ++i) visit(i, n);
      break;
    case ErrorNorm::SupFinalLevel:
      for (std::size_t i = 0; i <= g.nx(); ++i) visit(i, g.nt());
      break;
    case ErrorNorm::SupLastColumn:
      for (std::size_t n = 0; n <= g.nt(); ++n) visit(g.nx(), n);
      break;
  }
  return e;
}

}  // namespace

std::string forcing_sign_name(ForcingSign s) {
  switch (s) {
    case ForcingSign::NonPositive:
      return "nonpositive";
    case ForcingSign::NonNegative:
      return "nonnegative";
    case ForcingSign::Zero:
      return "zero";
  }
  return "?";
}

VerificationReport check_max_principle(const SolutionField& field, const MaxPrincipleOptions& opts) {
  const auto& g = field.grid();
  const Extrema bx = boundary_extrema(field);
  const Extrema gx = grid_extrema(field);
  VerificationReport r;
  r.direction = Direction::AtMost;
  if (opts.reaction_zero) {
    r.principle = Principle::BoundaryEquality;
  } else if (opts.forcing == ForcingSign::NonNegative) {
    r.principle = Principle::MinPrinciple;
  } else {
    r.principle = Principle::MaxPrinciple;
  }
  const bool upper = opts.forcing != ForcingSign::NonNegative;
  const bool lower = opts.forcing != ForcingSign::NonPositive;
  double measured = 0.0;
  if (upper) {
    const double bound = opts.reaction_zero ? bx.max : std::max(0.0, bx.max);
    const double excess = gx.max - bound;
    r.details["upper_excess"] = excess;
    r.details["upper_bound"] = bound;
    measured = std::max(measured, excess);
  }
  if (lower) {
    const double bound = opts.reaction_zero ? bx.min : std::min(0.0, bx.min);
    const double excess = bound - gx.min;
    r.details["lower_excess"] = excess;
    r.details["lower_bound"] = bound;
    measured = std::max(measured, excess);
  }
  put_location(r, "grid_max", g, gx.max, gx.max_i, gx.max_n);
  put_location(r, "grid_min", g, gx.min, gx.min_i, gx.min_n);
  put_location(r, "boundary_max", g, bx.max, bx.max_i, bx.max_n);
  put_location(r, "boundary_min", g, bx.min, bx.min_i, bx.min_n);
  const double scale = field.sup_abs();
  r.details["scale"] = scale;
  r.measured = measured;
  r.threshold = opts.rel_tol * scale;
  r.decide();
  return r;
}

VerificationReport check_max_principle(const ProblemSpec& spec, const SolutionField& field,
                                       const MaxPrincipleOptions& opts) {
  if (!(spec.grid == field.grid())) throw std::invalid_argument("check_max_principle: grid mismatch");
  check_forcing_sign(spec, opts.forcing);
  if (opts.reaction_zero) check_reaction_zero(spec);
  auto r = check_max_principle(field, opts);
  r.fingerprint = fingerprint(spec);
  return r;
}

VerificationReport check_uniqueness(const ProblemSpec& spec, double tol) {
  solver::SolveOptions asc;
  solver::SolveOptions desc;
  desc.assembly = solver::AssemblyOrder::Descending;
  const auto u1 = solver::solve_ibvp(spec, asc);
  const auto u2 = solver::solve_ibvp(spec, desc);
  const auto d = locate_sup_difference(u1, u2);
  VerificationReport r;
  r.principle = Principle::Uniqueness;
  r.direction = Direction::AtMost;
  r.measured = d.value;
  r.threshold = tol;
  put_location(r, "sup_difference", spec.grid, d.value, d.i, d.n);
  r.fingerprint = fingerprint(spec);
  r.decide();
  return r;
}

VerificationReport check_uniqueness(const ProblemSpec& spec, const solver::SemilinearTerm& f,
                                    const solver::PicardOptions& picard, std::optional<double> tol) {
  const auto& g = spec.grid;
  solver::PicardOptions first = picard;
  first.initial_iterate.reset();
  SolutionField extended(g);
  for (std::size_t n = 0; n <= g.nt(); ++n) {
    for (std::size_t i = 0; i <= g.nx(); ++i) {
      extended(i, n) = n == 0 ? spec.initial.at(g, i, 0) : spec.boundary.at(g, 0, n);
    }
  }
  solver::PicardOptions second = picard;
  second.initial_iterate = extended;
  const auto r1 = solver::solve_semilinear(spec, f, first);
  const auto r2 = solver::solve_semilinear(spec, f, second);
  const auto d = locate_sup_difference(r1.field, r2.field);
  VerificationReport r;
  r.principle = Principle::Uniqueness;
  r.direction = Direction::AtMost;
  r.measured = d.value;
  r.threshold = tol.value_or(10.0 * picard.tol);
  put_location(r, "sup_difference", g, d.value, d.i, d.n);
  auto total = [](const std::vector<std::size_t>& it) {
    double s = 0.0;
    for (auto k : it) s += static_cast<double>(k);
    return s;
  };
  r.details["iterations_default"] = total(r1.iterations);
  r.details["iterations_extended"] = total(r2.iterations);
  r.fingerprint = fingerprint(spec);
  r.decide();
  return r;
}

VerificationReport check_uniqueness(const ProblemSpec& a, const ProblemSpec& b, double tol) {
  if (!(a.grid == b.grid)) throw std::invalid_argument("check_uniqueness: problems must share a grid");
  const auto u1 = solver::solve_ibvp(a);
  const auto u2 = solver::solve_ibvp(b);
  const auto d = locate_sup_difference(u1, u2);
  VerificationReport r;
  r.principle = Principle::Uniqueness;
  r.direction = Direction::AtMost;
  r.measured = d.value;
  r.threshold = tol;
  put_location(r, "sup_difference", a.grid, d.value, d.i, d.n);
  r.fingerprint = fingerprint(a) + ":" + fingerprint(b);
  r.decide();
  return r;
}

VerificationReport check_comparison(const ProblemSpec& first, const ProblemSpec& second, ComparisonMode mode,
                                    double rel_tol) {
  const auto& g = first.grid;
  if (!(g == second.grid)) throw HypothesisError("comparison problems must share a grid");
  auto same_orders = [](const std::vector<Term>& a, const std::vector<Term>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t k = 0; k < a.size(); ++k)
      if (a[k].order != b[k].order) return false;
    return true;
  };
  if (!same_orders(first.time_terms, second.time_terms) || !same_orders(first.space_terms, second.space_terms)) {
    throw HypothesisError("comparison problems must share their derivative orders");
  }
  auto fail = [&](const std::string& what, std::size_t i, std::size_t n) {
    throw HypothesisError("hypothesis " + what + " violated at " + node_text(g, i, n));
  };
  for (std::size_t n = 0; n <= g.nt(); ++n) {
    for (std::size_t i = 0; i <= g.nx(); ++i) {
      for (std::size_t k = 0; k < first.time_terms.size(); ++k) {
        if (first.time_terms[k].coefficient.at(g, i, n) != second.time_terms[k].coefficient.at(g, i, n))
          fail("p_" + std::to_string(k + 1) + " shared", i, n);
      }
      for (std::size_t k = 0; k < first.space_terms.size(); ++k) {
        if (first.space_terms[k].coefficient.at(g, i, n) != second.space_terms[k].coefficient.at(g, i, n))
          fail("q_" + std::to_string(k + 1) + " shared", i, n);
      }
      const double r1 = first.reaction.at(g, i, n);
      const double r2 = second.reaction.at(g, i, n);
      const double f1 = first.forcing.at(g, i, n);
      const double f2 = second.forcing.at(g, i, n);
      if (mode == ComparisonMode::SharedReaction && r1 != r2) fail("r shared", i, n);
      if (f1 < f2) fail("F1 >= F2", i, n);
      if (mode == ComparisonMode::OrderedReaction) {
        if (f2 < 0.0) fail("F2 >= 0", i, n);
        if (r1 > 0.0) fail("r1 <= 0", i, n);
        if (r1 < r2) fail("r1 >= r2", i, n);
      }
    }
  }
  for (std::size_t i = 0; i <= g.nx(); ++i) {
    const double a1 = first.initial.at(g, i, 0);
    const double a2 = second.initial.at(g, i, 0);
    if (a1 < a2) fail("a1 >= a2", i, 0);
    if (mode == ComparisonMode::OrderedReaction && a2 < 0.0) fail("a2 >= 0", i, 0);
  }
  for (std::size_t n = 0; n <= g.nt(); ++n) {
    const double g1 = first.boundary.at(g, 0, n);
    const double g2 = second.boundary.at(g, 0, n);
    if (g1 < g2) fail("g1 >= g2", 0, n);
    if (mode == ComparisonMode::OrderedReaction && g2 < 0.0) fail("g2 >= 0", 0, n);
  }

  const auto u1 = solver::solve_ibvp(first);
  const auto u2 = solver::solve_ibvp(second);
  double min_diff = std::numeric_limits<double>::infinity();
  std::size_t di = 0, dn = 0;
  for (std::size_t n = 0; n <= g.nt(); ++n) {
    for (std::size_t i = 0; i <= g.nx(); ++i) {
      const double d = u1(i, n) - u2(i, n);
      if (d < min_diff) {
        min_diff = d;
        di = i;
        dn = n;
      }
    }
  }
  VerificationReport r;
  r.principle = Principle::Comparison;
  r.direction = Direction::AtMost;
  put_location(r, "min_difference", g, min_diff, di, dn);
  double measured = std::max(0.0, -min_diff);
  if (mode == ComparisonMode::OrderedReaction) {
    const auto ex = grid_extrema(u2);
    put_location(r, "second_min", g, ex.min, ex.min_i, ex.min_n);
    measured = std::max(measured, -ex.min);
  }
  const double scale = std::max(u1.sup_abs(), u2.sup_abs());
  r.details["scale"] = scale;
  r.measured = measured;
  r.threshold = rel_tol * scale;
  r.fingerprint = fingerprint(first) + ":" + fingerprint(second);
  r.decide();
  return r;
}

VerificationReport check_cauchy_sup(const solver::CauchySpec& spec, FractionalOrder alpha, const UniformGrid& grid,
                                    ForcingSign forcing, double rel_tol) {
  if (!spec.inverse_speed_diverges) {
    throw HypothesisError("the integral of 1/q over (-inf, 0] is not declared divergent");
  }
  const auto problem = solver::cauchy_problem(spec, alpha, grid);
  check_forcing_sign(problem, forcing);
  const auto u = solver::solve_ibvp(problem);
  const auto [lo, hi] = solver::window_columns(spec, grid);
  const Extrema wx = grid_extrema(u, lo, hi);
  double row_max = -std::numeric_limits<double>::infinity();
  double row_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = lo; i <= hi; ++i) {
    row_max = std::max(row_max, u(i, 0));
    row_min = std::min(row_min, u(i, 0));
  }
  double sup_a = -std::numeric_limits<double>::infinity();
  double inf_a = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i <= grid.nx(); ++i) {
    sup_a = std::max(sup_a, u(i, 0));
    inf_a = std::min(inf_a, u(i, 0));
  }
  VerificationReport r;
  r.principle = Principle::CauchySup;
  r.direction = Direction::AtMost;
  double measured = 0.0;
  if (forcing != ForcingSign::NonNegative) {
    measured = std::max(measured, wx.max - row_max);
    r.details["upper_excess"] = wx.max - row_max;
  }
  if (forcing != ForcingSign::NonPositive) {
    measured = std::max(measured, row_min - wx.min);
    r.details["lower_excess"] = row_min - wx.min;
  }
  put_location(r, "window_max", grid, wx.max, wx.max_i, wx.max_n);
  put_location(r, "window_min", grid, wx.min, wx.min_i, wx.min_n);
  r.details["window_initial_max"] = row_max;
  r.details["window_initial_min"] = row_min;
  r.details["sup_a"] = sup_a;
  r.details["inf_a"] = inf_a;
  r.details["window_lo"] = static_cast<double>(lo);
  r.details["window_hi"] = static_cast<double>(hi);
  const auto growth = solver::inverse_speed_growth(spec);
  r.details["inverse_speed_far_half"] = growth.far_half;
  r.details["inverse_speed_near_half"] = growth.near_half;
  r.details["inverse_speed_warning"] = growth.warning ? 1.0 : 0.0;
  const double scale = u.sup_abs();
  r.details["scale"] = scale;
  r.measured = measured;
  r.threshold = rel_tol * scale;
  r.fingerprint = fingerprint(problem);
  r.decide();
  return r;
}

std::pair<double, double> max_abs_derivative(const std::string& phi, double lo, double hi) {
  if (!(hi > lo)) throw std::invalid_argument("max_abs_derivative: empty interval");
  const auto ast = expr::parse(phi, expr::Variables::xt());
  const auto d = expr::differentiate(ast, 0);
  auto slope = [&](double x) { return std::abs(expr::eval(*d, x, 0.0)); };
  constexpr std::size_t samples = 4000;
  const double step = (hi - lo) / static_cast<double>(samples);
  std::size_t best = 0;
  double best_val = -1.0;
  for (std::size_t k = 0; k <= samples; ++k) {
    const double v = slope(lo + static_cast<double>(k) * step);
    if (v > best_val) {
      best_val = v;
      best = k;
    }
  }
  double a = lo + static_cast<double>(best == 0 ? 0 : best - 1) * step;
  double b = lo + static_cast<double>(std::min(best + 1, samples)) * step;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double e = a + inv_phi * (b - a);
  double fc = slope(c);
  double fe = slope(e);
  for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
    if (fc > fe) {
      b = e;
      e = c;
      fe = fc;
      c = b - inv_phi * (b - a);
      fc = slope(c);
    } else {
      a = c;
      c = e;
      fc = fe;
      e = a + inv_phi * (b - a);
      fe = slope(e);
    }
  }
  double arg = fc > fe ? c : e;
  double val = std::max(fc, fe);
  if (best_val > val) {
    val = best_val;
    arg = lo + static_cast<double>(best) * step;
  }
  return {val, arg};
}

SeparableScenario separable_scenario(const std::string& phi, FractionalOrder alpha, double extra_decay,
                                     double x_left, double x_right, double window_left, double window_right) {
  if (!(extra_decay >= 0.0)) throw std::invalid_argument("separable_scenario: extra decay must be non-negative");
  const auto [K, argmax] = max_abs_derivative(phi, x_left, x_right);
  const double a = alpha.value();
  const double c = extra_decay;
  const auto phi_ast = expr::parse(phi, expr::Variables::xt());
  const auto dphi = expr::differentiate(phi_ast, 0);
  const double g1 = std::tgamma(1.0 + a);
  const double g2 = std::tgamma(2.0 - a);
  auto psi = [=](double t) { return -K * std::pow(t, a) / g1 - c * t; };
  auto forcing = [=](double x, double t) { return -K - c * std::pow(t, 1.0 - a) / g2 + expr::eval(*dphi, x, 0.0); };
  SeparableScenario s{
      solver::CauchySpec{CoefficientField::constant(1.0), CoefficientField::expression(phi),
                         CoefficientField::function(forcing, "separable forcing"), x_left, x_right, window_left,
                         window_right},
      K, argmax, [=](double x, double t) { return psi(t) + expr::eval(*phi_ast, x, 0.0); }};
  return s;
}

VerificationReport check_semilinear_comparison(const solver::SemilinearTerm& f1, const solver::SemilinearTerm& f2,
                                               const BoundaryData& data1, const BoundaryData& data2,
                                               const ProblemSpec& shared, const solver::PicardOptions& picard,
                                               double tol) {
  for (const auto* f : {&f1, &f2}) {
    try {
      solver::validate_semilinear(*f);
    } catch (const solver::NotAdmissibleTerm& e) {
      throw HypothesisError(std::string("semilinear term not admissible: ") + e.what());
    }
  }
  const double lo = std::max(f1.u_lo(), f2.u_lo());
  const double hi = std::min(f1.u_hi(), f2.u_hi());
  if (!(hi >= lo)) throw HypothesisError("semilinear terms have disjoint declared ranges");
  constexpr std::size_t samples = 1000;
  for (std::size_t k = 0; k <= samples; ++k) {
    const double u = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(samples);
    if (f1(u) > f2(u)) throw HypothesisError("hypothesis f1 <= f2 violated at u=" + std::to_string(u));
  }
  const auto& g = shared.grid;
  for (std::size_t i = 0; i <= g.nx(); ++i) {
    if (data1.initial.at(g, i, 0) > data2.initial.at(g, i, 0))
      throw HypothesisError("hypothesis a1 <= a2 violated at " + node_text(g, i, 0));
  }
  for (std::size_t n = 0; n <= g.nt(); ++n) {
    if (data1.boundary.at(g, 0, n) > data2.boundary.at(g, 0, n))
      throw HypothesisError("hypothesis g1 <= g2 violated at " + node_text(g, 0, n));
  }
  ProblemSpec s1 = shared;
  s1.initial = data1.initial;
  s1.boundary = data1.boundary;
  ProblemSpec s2 = shared;
  s2.initial = data2.initial;
  s2.boundary = data2.boundary;
  const auto u1 = solver::solve_semilinear(s1, f1, picard);
  const auto u2 = solver::solve_semilinear(s2, f2, picard);
  double max_diff = -std::numeric_limits<double>::infinity();
  std::size_t di = 0, dn = 0;
  for (std::size_t n = 0; n <= g.nt(); ++n) {
    for (std::size_t i = 0; i <= g.nx(); ++i) {
      const double d = u1.field(i, n) - u2.field(i, n);
      if (d > max_diff) {
        max_diff = d;
        di = i;
        dn = n;
      }
    }
  }
  VerificationReport r;
  r.principle = Principle::SemilinearComparison;
  r.direction = Direction::AtMost;
  put_location(r, "max_difference", g, max_diff, di, dn);
  r.measured = std::max(0.0, max_diff);
  r.threshold = tol;
  r.fingerprint = fingerprint(s1) + ":" + fingerprint(s2);
  r.decide();
  return r;
}

void validate_ladder(const GridLadder& ladder) {
  if (ladder.levels.size() < 2) throw std::invalid_argument("convergence ladder needs at least two levels");
  if (!ladder.build) throw std::invalid_argument("convergence ladder has no problem builder");
  for (std::size_t k = 1; k < ladder.levels.size(); ++k) {
    const auto [px, pt] = ladder.levels[k - 1];
    const auto [cx, ct] = ladder.levels[k];
    const bool refines = (cx > px && ct >= pt) || (cx >= px && ct > pt);
    if (!refines || cx < px || ct < pt) {
      throw std::invalid_argument("convergence ladder level " + std::to_string(k) +
                                  " does not refine the previous level");
    }
  }
}

ConvergenceTable convergence_study(const GridLadder& ladder, const std::function<double(double, double)>& exact) {
  validate_ladder(ladder);
  ConvergenceTable table;
  for (std::size_t k = 0; k < ladder.levels.size(); ++k) {
    const auto [nx, nt] = ladder.levels[k];
    UniformGrid grid(ladder.x_min, ladder.x_max, ladder.T, nx, nt);
    const auto u = solver::solve_ibvp(ladder.build(grid));
    const double e = norm_error(u, ladder.norm, exact);
    double order = std::numeric_limits<double>::quiet_NaN();
    if (k > 0) {
      const auto& prev = table.rows.back();
      const double ratio = std::max(static_cast<double>(nx) / static_cast<double>(prev.nx),
                                    static_cast<double>(nt) / static_cast<double>(prev.nt));
      if (e > 0.0 && prev.sup_error > 0.0) order = std::log(prev.sup_error / e) / std::log(ratio);
      if (e > prev.sup_error) table.monotone = false;
    }
    table.rows.push_back({k, nx, nt, e, order});
  }
  return table;
}

VerificationReport convergence_report(const ConvergenceTable& table, double lo, double hi) {
  if (table.rows.empty()) throw std::invalid_argument("convergence_report: empty table");
  VerificationReport r;
  r.principle = Principle::Convergence;
  r.direction = Direction::AtLeast;
  r.measured = table.rows.back().observed_order;
  r.threshold = lo;
  r.details["order_upper"] = hi;
  r.details["monotone"] = table.monotone ? 1.0 : 0.0;
  for (const auto& row : table.rows) r.details["error_level_" + std::to_string(row.level)] = row.sup_error;
  r.decide();
  r.verdict = r.verdict && r.measured <= hi;
  return r;
}

double PolynomialSolution::operator()(double x, double t, double x_min) const {
  double v = 0.0;
  for (std::size_t k = time_coeffs.size(); k-- > 0;) v = v * t + time_coeffs[k];
  double w = 0.0;
  const double s = x - x_min;
  for (std::size_t k = space_coeffs.size(); k-- > 0;) w = w * s + space_coeffs[k];
  return v + w;
}

ProblemSpec manufactured_problem(const std::vector<Term>& time_terms, const std::vector<Term>& space_terms,
                                 const CoefficientField& reaction, const PolynomialSolution& solution,
                                 const UniformGrid& grid) {
  const std::size_t nxn = grid.nx() + 1;
  const std::size_t ntn = grid.nt() + 1;
  std::vector<double> forcing(nxn * ntn);
  for (std::size_t n = 0; n < ntn; ++n) {
    const double t = grid.t(n);
    for (std::size_t i = 0; i < nxn; ++i) {
      const double x = grid.x(i);
      const double s = x - grid.x_min();
      double lhs = 0.0;
      for (const auto& term : time_terms) {
        double d = 0.0;
        for (std::size_t k = 0; k < solution.time_coeffs.size(); ++k) {
          d += solution.time_coeffs[k] * fracops::caputo_monomial(static_cast<unsigned>(k), term.order.value(), t);
        }
        lhs += term.coefficient.at(grid, i, n) * d;
      }
      for (const auto& term : space_terms) {
        double d = 0.0;
        for (std::size_t k = 0; k < solution.space_coeffs.size(); ++k) {
          d += solution.space_coeffs[k] * fracops::caputo_monomial(static_cast<unsigned>(k), term.order.value(), s);
        }
        lhs += term.coefficient.at(grid, i, n) * d;
      }
      forcing[n * nxn + i] = lhs - reaction.at(grid, i, n) * solution(x, t, grid.x_min());
    }
  }
  const double x_min = grid.x_min();
  auto u = [solution, x_min](double x, double t) { return solution(x, t, x_min); };
  return ProblemSpec{time_terms,
                     space_terms,
                     reaction,
                     CoefficientField::tabulated(nxn, ntn, std::move(forcing)),
                     CoefficientField::function(u, "manufactured initial"),
                     CoefficientField::function(u, "manufactured boundary"),
                     grid};
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  SplitMix64 rng(seed ^ (0xD1B54A32D192ED03ull * (index + 1)));
  return rng.next();
}

ProblemSpec random_admissible_spec(std::uint64_t seed, const RandomSpecOptions& opts) {
  SplitMix64 rng(seed);
  return generate(rng, opts);
}

std::vector<VerificationReport> fuzz_max_principle(const FuzzOptions& opts) {
  std::vector<VerificationReport> out;
  out.reserve(opts.count);
  for (std::size_t k = 0; k < opts.count; ++k) {
    const auto spec = random_admissible_spec(derive_seed(opts.seed, k), opts.spec);
    const auto u = solver::solve_ibvp(spec);
    auto r = check_max_principle(spec, u, {opts.spec.forcing, opts.spec.reaction_zero, opts.rel_tol});
    r.details["index"] = static_cast<double>(k);
    out.push_back(std::move(r));
  }
  return out;
}

ProblemPair random_ordered_pair(std::uint64_t seed, const RandomSpecOptions& opts, ComparisonMode mode) {
  RandomSpecOptions base_opts = opts;
  if (mode == ComparisonMode::OrderedReaction) {
    base_opts.forcing = ForcingSign::NonNegative;
    base_opts.nonnegative_data = true;
    base_opts.reaction_zero = false;
  }
  SplitMix64 rng(seed);
  ProblemSpec second = generate(rng, base_opts);
  ProblemSpec first = second;
  first.forcing = sum_field(second.forcing, signed_field(rng, rng.uniform(0.0, 1.0), rng.chance(0.3)));
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double lift = rng.uniform(0.0, 0.5);
  const double theta = rng.uniform(0.0, 1.0);
  const double kx = rng.uniform(0.0, 4.0);
  const double ph = rng.uniform(0.0, two_pi);
  const double gamma = rng.uniform(0.0, 0.5);
  const double omega = rng.uniform(0.0, 6.0);
  auto bump = [=](double x) { return lift * (1.0 + theta * std::sin(kx * x + ph)); };
  const double bump_left = bump(second.grid.x_min());
  auto a2 = second.initial;
  auto g2 = second.boundary;
  first.initial = CoefficientField::function([a2, bump](double x, double t) { return a2(x, t) + bump(x); }, "a1");
  first.boundary = CoefficientField::function(
      [=](double x, double t) { return g2(x, t) + bump_left + gamma * (1.0 - std::cos(omega * t)); }, "g1");
  if (mode == ComparisonMode::OrderedReaction) first.reaction = scaled_field(rng.uniform(0.0, 1.0), second.reaction);
  return {std::move(first), std::move(second)};
}

std::vector<VerificationReport> fuzz_comparison(const FuzzOptions& opts, ComparisonMode mode) {
  std::vector<VerificationReport> out;
  out.reserve(opts.count);
  for (std::size_t k = 0; k < opts.count; ++k) {
    const auto pair = random_ordered_pair(derive_seed(opts.seed, k), opts.spec, mode);
    auto r = check_comparison(pair.first, pair.second, mode, opts.rel_tol);
    r.details["index"] = static_cast<double>(k);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace fractrans::verify
