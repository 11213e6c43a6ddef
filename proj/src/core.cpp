#include "fractrans/core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>

namespace fractrans {

FractionalOrder::FractionalOrder(double value) : value_(value) {
  if (!(value > 0.0 && value <= 1.0)) {
    throw std::invalid_argument("fractional order must lie in (0, 1], got " + std::to_string(value));
  }
}

UniformGrid::UniformGrid(double x_min, double x_max, double T, std::size_t nx, std::size_t nt)
    : x_min_(x_min), x_max_(x_max), T_(T), nx_(nx), nt_(nt) {
  if (!(x_min < x_max)) throw std::invalid_argument("grid requires x_min < x_max");
  if (!(T > 0.0)) throw std::invalid_argument("grid requires T > 0");
  if (nx < 2 || nt < 2) throw std::invalid_argument("grid requires at least 2 steps in each direction");
}

CoefficientField::CoefficientField() : source_(0.0) {}

CoefficientField CoefficientField::constant(double c) {
  CoefficientField f;
  f.source_ = c;
  return f;
}

CoefficientField CoefficientField::expression(expr::Expression e) {
  CoefficientField f;
  f.source_ = std::move(e);
  return f;
}

CoefficientField CoefficientField::expression(const std::string& source) {
  return expression(expr::Expression(source));
}

CoefficientField CoefficientField::function(Function fn, std::string label) {
  CoefficientField f;
  f.source_ = Function_{std::move(fn), std::move(label)};
  return f;
}

CoefficientField CoefficientField::tabulated(std::size_t nx_nodes, std::size_t nt_nodes, std::vector<double> values) {
  if (values.size() != nx_nodes * nt_nodes) {
    throw StructuralError("tabulated field has " + std::to_string(values.size()) + " values, expected " +
                          std::to_string(nx_nodes * nt_nodes));
  }
  CoefficientField f;
  f.source_ = Table{nx_nodes, nt_nodes, std::move(values)};
  return f;
}

void CoefficientField::check_dimensions(const UniformGrid& grid) const {
  if (const auto* tab = std::get_if<Table>(&source_)) {
    if (tab->nx_nodes != grid.nx() + 1 || tab->nt_nodes != grid.nt() + 1) {
      throw StructuralError("tabulated field is " + std::to_string(tab->nx_nodes) + "x" +
                            std::to_string(tab->nt_nodes) + " but the grid has " + std::to_string(grid.nx() + 1) +
                            "x" + std::to_string(grid.nt() + 1) + " nodes");
    }
  }
}

double CoefficientField::at(const UniformGrid& grid, std::size_t i, std::size_t n) const {
  if (const auto* tab = std::get_if<Table>(&source_)) {
    check_dimensions(grid);
    return tab->values[n * tab->nx_nodes + i];
  }
  try {
    return (*this)(grid.x(i), grid.t(n));
  } catch (const expr::EvalError& e) {
    throw StructuralError(describe() + " failed to evaluate at node (" + std::to_string(i) + ", " +
                          std::to_string(n) + "): " + e.what());
  }
}

double CoefficientField::operator()(double x, double t) const {
  return std::visit(
      [&](const auto& s) -> double {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, double>) {
          return s;
        } else if constexpr (std::is_same_v<S, expr::Expression>) {
          return s(x, t);
        } else if constexpr (std::is_same_v<S, Function_>) {
          return s.f(x, t);
        } else {
          throw StructuralError("tabulated field cannot be evaluated off-grid");
        }
      },
      source_);
}

std::vector<double> CoefficientField::sample(const UniformGrid& grid) const {
  check_dimensions(grid);
  if (const auto* tab = std::get_if<Table>(&source_)) return tab->values;
  std::vector<double> out(grid.node_count());
  if (const auto* c = std::get_if<double>(&source_)) {
    std::fill(out.begin(), out.end(), *c);
    return out;
  }
  const std::size_t stride = grid.nx() + 1;
  for (std::size_t n = 0; n <= grid.nt(); ++n) {
    for (std::size_t i = 0; i <= grid.nx(); ++i) out[n * stride + i] = at(grid, i, n);
  }
  return out;
}

std::string CoefficientField::describe() const {
  return std::visit(
      [](const auto& s) -> std::string {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, double>) {
          char buf[32];
          std::snprintf(buf, sizeof buf, "%.17g", s);
          return buf;
        } else if constexpr (std::is_same_v<S, expr::Expression>) {
          return "\"" + s.source() + "\"";
        } else if constexpr (std::is_same_v<S, Function_>) {
          return s.label;
        } else {
          return "<table " + std::to_string(s.nx_nodes) + "x" + std::to_string(s.nt_nodes) + ">";
        }
      },
      source_);
}

std::string condition_name(Condition c) {
  switch (c) {
    case Condition::TimeOrdersIncreasing: return "time orders strictly increasing";
    case Condition::SpaceOrdersIncreasing: return "space orders strictly increasing";
    case Condition::TimeCoefficientNonNegative: return "time coefficient non-negative";
    case Condition::SpaceCoefficientNonNegative: return "space coefficient non-negative";
    case Condition::TimeCoefficientSumPositive: return "sum of time coefficients positive";
    case Condition::ReactionNonPositive: return "reaction coefficient non-positive";
    case Condition::InitialBoundaryCompatible: return "initial and boundary data compatible";
  }
  return "unknown";
}

namespace {

Violation violation(Condition c, std::string term) {
  Violation v;
  v.condition = c;
  v.term = std::move(term);
  return v;
}

template <typename Pred>
bool first_offender(const UniformGrid& grid, const std::vector<double>& values, Pred bad, Violation& v) {
  const std::size_t stride = grid.nx() + 1;
  for (std::size_t n = 0; n <= grid.nt(); ++n) {
    for (std::size_t i = 0; i <= grid.nx(); ++i) {
      const double val = values[n * stride + i];
      if (bad(val)) {
        v.i = i;
        v.n = n;
        v.x = grid.x(i);
        v.t = grid.t(n);
        v.value = val;
        return true;
      }
    }
  }
  return false;
}

void check_orders(const std::vector<Term>& terms, Condition c, const char* prefix, std::vector<Violation>& out) {
  for (std::size_t k = 1; k < terms.size(); ++k) {
    if (!(terms[k - 1].order < terms[k].order)) {
      Violation v = violation(c, prefix + std::to_string(k + 1));
      v.value = terms[k].order.value();
      v.message = std::string(prefix) + " orders must be strictly increasing: order " + std::to_string(k + 1) +
                  " is " + std::to_string(terms[k].order.value()) + " after " +
                  std::to_string(terms[k - 1].order.value());
      out.push_back(std::move(v));
    }
  }
}

std::string at_node(const Violation& v) {
  char buf[128];
  std::snprintf(buf, sizeof buf, " at node (%zu, %zu) = (x=%.6g, t=%.6g), value %.6g", v.i, v.n, v.x, v.t, v.value);
  return buf;
}

}  // namespace

std::vector<Violation> validate_problem(const ProblemSpec& spec, const ValidationOptions& opts) {
  const UniformGrid& grid = spec.grid;
  if (spec.time_terms.empty()) throw StructuralError("problem has no time-derivative terms");
  if (spec.space_terms.empty()) throw StructuralError("problem has no space-derivative terms");

  std::vector<Violation> out;
  check_orders(spec.time_terms, Condition::TimeOrdersIncreasing, "p_", out);
  check_orders(spec.space_terms, Condition::SpaceOrdersIncreasing, "q_", out);

  std::vector<double> p_sum(grid.node_count(), 0.0);
  for (std::size_t k = 0; k < spec.time_terms.size(); ++k) {
    const auto p = spec.time_terms[k].coefficient.sample(grid);
    Violation v = violation(Condition::TimeCoefficientNonNegative, "p_" + std::to_string(k + 1));
    if (first_offender(grid, p, [](double val) { return !(val >= 0.0); }, v)) {
      v.message = v.term + " must be non-negative" + at_node(v);
      out.push_back(std::move(v));
    }
    for (std::size_t m = 0; m < p.size(); ++m) p_sum[m] += p[m];
  }
  {
    Violation v = violation(Condition::TimeCoefficientSumPositive, "sum p_i");
    if (first_offender(grid, p_sum, [&](double val) { return !(val >= opts.p_floor); }, v)) {
      v.message = "sum of time coefficients must be positive (>= " + std::to_string(opts.p_floor) + ")" + at_node(v);
      out.push_back(std::move(v));
    }
  }
  for (std::size_t k = 0; k < spec.space_terms.size(); ++k) {
    const auto q = spec.space_terms[k].coefficient.sample(grid);
    Violation v = violation(Condition::SpaceCoefficientNonNegative, "q_" + std::to_string(k + 1));
    if (first_offender(grid, q, [](double val) { return !(val >= 0.0); }, v)) {
      v.message = v.term + " must be non-negative" + at_node(v);
      out.push_back(std::move(v));
    }
  }
  {
    const auto r = spec.reaction.sample(grid);
    Violation v = violation(Condition::ReactionNonPositive, "r");
    if (first_offender(grid, r, [](double val) { return !(val <= 0.0); }, v)) {
      v.message = "reaction coefficient r must be non-positive" + at_node(v);
      out.push_back(std::move(v));
    }
  }
  // Forcing must at least evaluate everywhere.
  (void)spec.forcing.sample(grid);
  {
    const double a0 = spec.initial.at(grid, 0, 0);
    const double g0 = spec.boundary.at(grid, 0, 0);
    for (std::size_t i = 1; i <= grid.nx(); ++i) (void)spec.initial.at(grid, i, 0);
    for (std::size_t n = 1; n <= grid.nt(); ++n) (void)spec.boundary.at(grid, 0, n);
    const double tol = opts.compat_rel_tol * std::max(1.0, std::abs(g0));
    if (!(std::abs(a0 - g0) <= tol)) {
      Violation v = violation(Condition::InitialBoundaryCompatible, "a, g");
      v.x = grid.x_min();
      v.value = a0 - g0;
      v.message = "initial value a(x_min) = " + std::to_string(a0) + " differs from boundary value g(0) = " +
                  std::to_string(g0);
      out.push_back(std::move(v));
    }
  }
  return out;
}

SolutionField::SolutionField(UniformGrid grid) : grid_(grid), values_(grid.node_count(), 0.0) {}

SolutionField::SolutionField(UniformGrid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.node_count()) {
    throw StructuralError("solution field has " + std::to_string(values_.size()) + " values, grid has " +
                          std::to_string(grid_.node_count()) + " nodes");
  }
}

bool SolutionField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double SolutionField::sup_abs() const {
  double s = 0.0;
  for (double v : values_) s = std::max(s, std::abs(v));
  return s;
}

double sup_difference(const SolutionField& a, const SolutionField& b) {
  if (!(a.grid() == b.grid())) throw std::invalid_argument("sup_difference: fields live on different grids");
  double s = 0.0;
  for (std::size_t k = 0; k < a.values().size(); ++k) s = std::max(s, std::abs(a.values()[k] - b.values()[k]));
  return s;
}

namespace {

void consider(Extrema& e, double v, std::size_t i, std::size_t n) {
  if (v > e.max) {
    e.max = v;
    e.max_i = i;
    e.max_n = n;
  }
  if (v < e.min) {
    e.min = v;
    e.min_i = i;
    e.min_n = n;
  }
}

Extrema empty_extrema() {
  return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), 0, 0, 0, 0};
}

}  // namespace

Extrema boundary_extrema(const SolutionField& field, BoundarySet set) {
  const UniformGrid& g = field.grid();
  Extrema e = empty_extrema();
  for (std::size_t i = 0; i <= g.nx(); ++i) consider(e, field(i, 0), i, 0);
  if (set == BoundarySet::InitialAndInflow) {
    for (std::size_t n = 1; n <= g.nt(); ++n) consider(e, field(0, n), 0, n);
  }
  return e;
}

Extrema grid_extrema(const SolutionField& field) { return grid_extrema(field, 0, field.grid().nx()); }

Extrema grid_extrema(const SolutionField& field, std::size_t i_lo, std::size_t i_hi) {
  const UniformGrid& g = field.grid();
  if (i_lo > i_hi || i_hi > g.nx()) throw std::out_of_range("grid_extrema: bad column range");
  Extrema e = empty_extrema();
  for (std::size_t n = 0; n <= g.nt(); ++n) {
    for (std::size_t i = i_lo; i <= i_hi; ++i) consider(e, field(i, n), i, n);
  }
  return e;
}

std::string principle_name(Principle p) {
  switch (p) {
    case Principle::MaxPrinciple: return "max_principle";
    case Principle::MinPrinciple: return "min_principle";
    case Principle::BoundaryEquality: return "boundary_equality";
    case Principle::Uniqueness: return "uniqueness";
    case Principle::Comparison: return "comparison";
    case Principle::CauchySup: return "cauchy_sup";
    case Principle::SemilinearComparison: return "semilinear_comparison";
    case Principle::Convergence: return "convergence";
  }
  return "unknown";
}

void VerificationReport::decide() {
  verdict = direction == Direction::AtMost ? measured <= threshold : measured >= threshold;
}

namespace {

struct Fnv1a {
  std::uint64_t state = 14695981039346656037ull;

  void bytes(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t k = 0; k < len; ++k) {
      state ^= p[k];
      state *= 1099511628211ull;
    }
  }
  void real(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    bytes(&bits, sizeof bits);
  }
  void integer(std::uint64_t v) { bytes(&v, sizeof v); }
  void values(const std::vector<double>& vs) {
    integer(vs.size());
    for (double v : vs) real(v);
  }
};

}  // namespace

std::string fingerprint(const ProblemSpec& spec) {
  Fnv1a h;
  const UniformGrid& g = spec.grid;
  h.real(g.x_min());
  h.real(g.x_max());
  h.real(g.T());
  h.integer(g.nx());
  h.integer(g.nt());
  for (const auto* terms : {&spec.time_terms, &spec.space_terms}) {
    h.integer(terms->size());
    for (const Term& term : *terms) {
      h.real(term.order.value());
      h.values(term.coefficient.sample(g));
    }
  }
  h.values(spec.reaction.sample(g));
  h.values(spec.forcing.sample(g));
  for (std::size_t i = 0; i <= g.nx(); ++i) h.real(spec.initial.at(g, i, 0));
  for (std::size_t n = 0; n <= g.nt(); ++n) h.real(spec.boundary.at(g, 0, n));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h.state));
  return buf;
}

}  // namespace fractrans
