#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "fractrans/core.hpp"

using namespace fractrans;

namespace {

ProblemSpec basic(double p = 1.0, double q = 1.0, double r = -1.0) {
  UniformGrid g(0.0, 1.0, 1.0, 8, 8);
  return ProblemSpec{{{FractionalOrder(0.5), CoefficientField::constant(p)}},
                     {{FractionalOrder(0.5), CoefficientField::constant(q)}},
                     CoefficientField::constant(r),
                     CoefficientField::constant(0.0),
                     CoefficientField::constant(1.0),
                     CoefficientField::constant(1.0),
                     g};
}

std::size_t count(const std::vector<Violation>& vs, Condition c) {
  std::size_t n = 0;
  for (const auto& v : vs) n += v.condition == c;
  return n;
}

}  // namespace

TEST_CASE("fractional orders live in (0, 1]") {
  CHECK(FractionalOrder(1.0).is_classical());
  CHECK_FALSE(FractionalOrder(0.5).is_classical());
  CHECK(FractionalOrder(1e-9).value() == 1e-9);
  for (double bad : {0.0, -0.1, 1.0000001, 2.0, std::numeric_limits<double>::quiet_NaN()}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(FractionalOrder{bad}, std::invalid_argument);
  }
  CHECK(FractionalOrder(0.3) < FractionalOrder(0.4));
}

TEST_CASE("uniform grid geometry") {
  UniformGrid g(-1.0, 3.0, 2.0, 8, 4);
  CHECK(g.h() == 0.5);
  CHECK(g.tau() == 0.5);
  CHECK(g.x(0) == -1.0);
  CHECK(g.x(8) == 3.0);
  CHECK(g.t(4) == 2.0);
  CHECK(g.node_count() == 45);
  CHECK_THROWS_AS(UniformGrid(0, 1, 1, 1, 4), std::invalid_argument);
  CHECK_THROWS_AS(UniformGrid(0, 1, 1, 4, 1), std::invalid_argument);
  CHECK_THROWS_AS(UniformGrid(1, 1, 1, 4, 4), std::invalid_argument);
  CHECK_THROWS_AS(UniformGrid(0, 1, 0, 4, 4), std::invalid_argument);
}

TEST_CASE("coefficient fields") {
  UniformGrid g(0.0, 1.0, 1.0, 2, 2);
  auto e = CoefficientField::expression("x + 10*t");
  CHECK(e.at(g, 1, 2) == 10.5);
  CHECK(e(0.25, 0.0) == 0.25);
  auto f = CoefficientField::function([](double x, double t) { return x * t; }, "xt");
  CHECK(f.at(g, 2, 2) == 1.0);
  CHECK(f.describe() == "xt");
  std::vector<double> vals(9);
  for (std::size_t k = 0; k < 9; ++k) vals[k] = static_cast<double>(k);
  auto tab = CoefficientField::tabulated(3, 3, vals);
  CHECK(tab.is_tabulated());
  CHECK(tab.at(g, 1, 2) == 7.0);
  CHECK(tab.sample(g) == vals);
  CHECK_THROWS_AS(tab(0.5, 0.5), StructuralError);
  CHECK_THROWS_AS(tab.check_dimensions(UniformGrid(0, 1, 1, 3, 2)), StructuralError);
  CHECK_THROWS_AS(CoefficientField::tabulated(3, 3, {1.0, 2.0}), StructuralError);
  CHECK_THROWS_AS(CoefficientField::expression("1/x").at(g, 0, 0), StructuralError);
  CHECK(CoefficientField().at(g, 1, 1) == 0.0);
}

TEST_CASE("validate_problem: admissible problem has no violations") {
  auto spec = basic();
  CHECK(validate_problem(spec).empty());
}

TEST_CASE("validate_problem: positive reaction at the first node") {
  auto spec = basic(1.0, 1.0, 0.5);
  auto vs = validate_problem(spec);
  REQUIRE(vs.size() == 1);
  CHECK(vs[0].condition == Condition::ReactionNonPositive);
  CHECK(vs[0].i == 0);
  CHECK(vs[0].n == 0);
  CHECK(vs[0].value == 0.5);
  CHECK(condition_name(vs[0].condition) == "reaction coefficient non-positive");
}

TEST_CASE("validate_problem: vanishing time coefficient sum") {
  auto spec = basic(0.0);
  auto vs = validate_problem(spec);
  REQUIRE(count(vs, Condition::TimeCoefficientSumPositive) == 1);
  CHECK(vs.size() == 1);
  CHECK(vs[0].i == 0);
  CHECK(vs[0].n == 0);
}

TEST_CASE("validate_problem: every condition") {
  auto spec = basic(-1.0, -1.0, 1.0);
  spec.time_terms.push_back({FractionalOrder(0.5), CoefficientField::constant(1.0)});
  spec.space_terms.insert(spec.space_terms.begin(), {FractionalOrder(0.7), CoefficientField::constant(1.0)});
  spec.boundary = CoefficientField::constant(1.5);
  auto vs = validate_problem(spec);
  CHECK(count(vs, Condition::TimeOrdersIncreasing) == 1);
  CHECK(count(vs, Condition::SpaceOrdersIncreasing) == 1);
  CHECK(count(vs, Condition::TimeCoefficientNonNegative) == 1);
  CHECK(count(vs, Condition::SpaceCoefficientNonNegative) == 1);
  CHECK(count(vs, Condition::ReactionNonPositive) == 1);
  CHECK(count(vs, Condition::InitialBoundaryCompatible) == 1);
  for (const auto& v : vs) CHECK_FALSE(v.message.empty());
}

TEST_CASE("validate_problem: node location of a local violation") {
  auto spec = basic();
  spec.reaction = CoefficientField::expression("x*t - 0.5");
  auto vs = validate_problem(spec);
  REQUIRE(vs.size() == 1);
  // first node in time-major order with x*t > 0.5 on the 8x8 unit grid: t = 0.625, x = 0.875
  CHECK(vs[0].n == 5);
  CHECK(vs[0].i == 7);
  CHECK(vs[0].x == 0.875);
  CHECK(vs[0].t == 0.625);
}

TEST_CASE("validate_problem: compatibility tolerance") {
  auto spec = basic();
  spec.boundary = CoefficientField::constant(1.0 + 5e-13);
  CHECK(validate_problem(spec).empty());
  spec.boundary = CoefficientField::constant(1.0 + 5e-12);
  CHECK(validate_problem(spec).size() == 1);
}

TEST_CASE("validate_problem: structural errors are distinct") {
  auto spec = basic();
  spec.forcing = CoefficientField::tabulated(3, 3, std::vector<double>(9, 0.0));
  CHECK_THROWS_AS(validate_problem(spec), StructuralError);
  auto empty = basic();
  empty.time_terms.clear();
  CHECK_THROWS_AS(validate_problem(empty), StructuralError);
}

TEST_CASE("validate_problem is idempotent") {
  auto spec = basic(1.0, 1.0, 0.5);
  auto a = validate_problem(spec);
  auto b = validate_problem(spec);
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].condition == b[k].condition);
    CHECK(a[k].message == b[k].message);
  }
}

TEST_CASE("boundary extrema: linear data") {
  UniformGrid g(0.0, 1.0, 1.0, 10, 10);
  SolutionField u(g);
  for (std::size_t n = 0; n <= 10; ++n)
    for (std::size_t i = 0; i <= 10; ++i) u(i, n) = n == 0 ? g.x(i) : (i == 0 ? 0.0 : 7.0 * std::sin(i * n * 1.0));
  auto b = boundary_extrema(u);
  CHECK(b.max == 1.0);
  CHECK(b.min == 0.0);
  CHECK(b.max_i == 10);
  CHECK(b.max_n == 0);
}

TEST_CASE("boundary extrema: constant field") {
  UniformGrid g(0.0, 1.0, 1.0, 4, 4);
  SolutionField u(g, std::vector<double>(25, 3.5));
  auto b = boundary_extrema(u);
  CHECK(b.max == 3.5);
  CHECK(b.min == 3.5);
}

TEST_CASE("boundary extrema: Gaussian initial row only") {
  UniformGrid g(-8.0, 8.0, 1.0, 64, 4);
  SolutionField u(g);
  for (std::size_t i = 0; i <= 64; ++i) u(i, 0) = std::exp(-g.x(i) * g.x(i));
  for (std::size_t n = 1; n <= 4; ++n) u(0, n) = 5.0;
  auto b = boundary_extrema(u, BoundarySet::InitialOnly);
  CHECK(b.max == 1.0);
  CHECK(b.max_i == 32);
  CHECK(boundary_extrema(u).max == 5.0);
}

TEST_CASE("boundary extrema properties on random fields") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 50; ++k) {
    UniformGrid g(0.0, 1.0, 1.0, 2 + rng() % 9, 2 + rng() % 9);
    SolutionField u(g);
    for (std::size_t n = 0; n <= g.nt(); ++n)
      for (std::size_t i = 0; i <= g.nx(); ++i) u(i, n) = nd(rng);
    auto b = boundary_extrema(u);
    CHECK(b.min <= b.max);
    CHECK((b.max_n == 0 || b.max_i == 0));
    CHECK((b.min_n == 0 || b.min_i == 0));
    CHECK(u(b.max_i, b.max_n) == b.max);
    CHECK(u(b.min_i, b.min_n) == b.min);
    auto gx = grid_extrema(u);
    CHECK(gx.max >= b.max);
    CHECK(gx.min <= b.min);
    CHECK(u(gx.max_i, gx.max_n) == gx.max);
  }
}

TEST_CASE("solution field helpers") {
  UniformGrid g(0.0, 1.0, 1.0, 2, 2);
  SolutionField u(g, {1, 2, 3, 4, -5, 6, 7, 8, 9});
  CHECK(u(1, 1) == -5);
  CHECK(u.level(2)[0] == 7);
  CHECK(u.sup_abs() == 9);
  CHECK(u.all_finite());
  SolutionField v = u;
  v(2, 2) = 10;
  CHECK(sup_difference(u, v) == 1.0);
  v(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_FALSE(v.all_finite());
  auto w = grid_extrema(u, 1, 1);
  CHECK(w.max == 8);
  CHECK(w.min == -5);
  CHECK_THROWS_AS(SolutionField(g, {1.0}), StructuralError);
}

TEST_CASE("report verdicts") {
  VerificationReport r;
  r.principle = Principle::MaxPrinciple;
  r.measured = 0.5;
  r.threshold = 1.0;
  r.decide();
  CHECK(r.verdict);
  r.measured = 2.0;
  r.decide();
  CHECK_FALSE(r.verdict);
  r.direction = Direction::AtLeast;
  r.decide();
  CHECK(r.verdict);
  CHECK(principle_name(Principle::CauchySup) == "cauchy_sup");
  CHECK(principle_name(Principle::SemilinearComparison) == "semilinear_comparison");
  CHECK(principle_name(Principle::BoundaryEquality) == "boundary_equality");
}

TEST_CASE("fingerprints depend on the data only") {
  auto a = basic();
  auto b = basic();
  CHECK(fingerprint(a) == fingerprint(b));
  CHECK(fingerprint(a).size() == 16);
  b.forcing = CoefficientField::constant(1e-300);
  CHECK(fingerprint(a) != fingerprint(b));
  b = basic();
  b.forcing = CoefficientField::expression("0*x");
  CHECK(fingerprint(a) == fingerprint(b));
}
