#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fractrans/fracops.hpp"
#include "fractrans/mlf.hpp"
#include "fractrans/solver.hpp"
#include "fractrans/verify.hpp"

using namespace fractrans;
using namespace fractrans::solver;

namespace {

using Field = CoefficientField;

ProblemSpec single(double alpha, Field p, double beta, Field q, Field r, Field F, Field a, Field g,
                   const UniformGrid& grid) {
  return ProblemSpec{{{FractionalOrder(alpha), std::move(p)}},
                     {{FractionalOrder(beta), std::move(q)}},
                     std::move(r),
                     std::move(F),
                     std::move(a),
                     std::move(g),
                     grid};
}

double time_oracle_error(std::size_t nt) {
  UniformGrid grid(0.0, 1.0, 1.0, 4, nt);
  auto g = Field::function([](double, double t) { return mlf::ml_time_solution(0.5, -1.0, 1.0, t); });
  auto spec = single(0.5, Field::constant(1.0), 0.5, Field::constant(0.0), Field::constant(-1.0),
                     Field::constant(0.0), Field::constant(1.0), g, grid);
  auto u = solve_ibvp(spec);
  double err = 0.0;
  for (std::size_t i = 0; i <= grid.nx(); ++i) {
    err = std::max(err, std::abs(u(i, nt) - mlf::ml_time_solution(0.5, -1.0, 1.0, 1.0)));
  }
  return err;
}

double space_oracle_error(std::size_t nx) {
  UniformGrid grid(0.0, 1.0, 1.0, nx, 16);
  auto a = Field::function([](double x, double) { return mlf::ml_space_solution(0.5, -1.0, 1.0, x); });
  auto spec = single(0.5, Field::constant(1.0), 0.5, Field::constant(1.0), Field::constant(-1.0),
                     Field::constant(0.0), a, Field::constant(1.0), grid);
  auto u = solve_ibvp(spec);
  const double exact = mlf::ml_space_solution(0.5, -1.0, 1.0, 1.0);
  double err = 0.0;
  for (std::size_t n = 0; n <= grid.nt(); ++n) err = std::max(err, std::abs(u(nx, n) - exact));
  return err;
}

// Backward Euler in time, upwind in space, written directly from the
// classical equation p u_t + q u_x = r u + F.
SolutionField classical_upwind(const Field& p, const Field& q, const Field& r, const Field& F, const Field& a,
                               const Field& g, const UniformGrid& grid) {
  SolutionField u(grid);
  const double tau = grid.tau();
  const double h = grid.h();
  for (std::size_t i = 0; i <= grid.nx(); ++i) u(i, 0) = a.at(grid, i, 0);
  for (std::size_t n = 1; n <= grid.nt(); ++n) {
    u(0, n) = g.at(grid, 0, n);
    for (std::size_t i = 1; i <= grid.nx(); ++i) {
      const double pt = p.at(grid, i, n) / tau;
      const double qh = q.at(grid, i, n) / h;
      u(i, n) = (pt * u(i, n - 1) + qh * u(i - 1, n) + F.at(grid, i, n)) / (pt + qh - r.at(grid, i, n));
    }
  }
  return u;
}

}  // namespace

TEST_CASE("constant solution is reproduced") {
  UniformGrid grid(0.0, 1.0, 1.0, 32, 32);
  auto spec = single(0.5, Field::constant(1.0), 0.5, Field::constant(1.0), Field::constant(-1.0),
                     Field::constant(2.0), Field::constant(2.0), Field::constant(2.0), grid);
  auto u = solve_ibvp(spec);
  for (double v : u.values()) CHECK(v == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("constant reproduction on random admissible problems") {
  for (std::uint64_t k = 0; k < 20; ++k) {
    verify::RandomSpecOptions o;
    o.nx = 24;
    o.nt = 24;
    auto spec = verify::random_admissible_spec(verify::derive_seed(7, k), o);
    const double c = -1.5 + 0.25 * static_cast<double>(k);
    auto r = spec.reaction;
    spec.forcing = Field::function([r, c](double x, double t) { return -r(x, t) * c; });
    spec.initial = Field::constant(c);
    spec.boundary = Field::constant(c);
    auto u = solve_ibvp(spec);
    for (double v : u.values()) REQUIRE(std::abs(v - c) <= 1e-12 * std::max(1.0, std::abs(c)));
  }
}

TEST_CASE("time oracle at t = 1") {
  const double err = time_oracle_error(1024);
  CHECK(err <= 2e-3);
  MESSAGE("time oracle error at Nt=1024: " << err);
}

TEST_CASE("space oracle at x = 1") {
  const double err = space_oracle_error(1024);
  CHECK(err <= 2e-3);
  MESSAGE("space oracle error at Nx=1024: " << err);
}

TEST_CASE("oracle errors decrease along ladders") {
  double prev_t = INFINITY;
  double prev_x = INFINITY;
  for (std::size_t n : {64, 128, 256, 512, 1024}) {
    const double et = time_oracle_error(n);
    const double ex = space_oracle_error(n);
    CAPTURE(n);
    CHECK(et < prev_t);
    CHECK(ex < prev_x);
    prev_t = et;
    prev_x = ex;
  }
}

TEST_CASE("classical orders agree with a direct upwind scheme") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(0.2, 2.0);
  for (int trial = 0; trial < 3; ++trial) {
    const double p0 = U(rng), q0 = U(rng), r0 = U(rng), k = U(rng), w = U(rng);
    auto p = Field::function([=](double x, double t) { return p0 * (1.0 + 0.5 * std::sin(k * x + t)); });
    auto q = Field::function([=](double x, double t) { return q0 * (1.0 + 0.3 * std::cos(w * x - t)); });
    auto r = Field::function([=](double x, double t) { return -r0 * (1.0 + std::sin(x * t) * std::sin(x * t)); });
    auto F = Field::function([=](double x, double t) { return std::sin(3.0 * k * x) * std::cos(w * t); });
    auto a = Field::function([=](double x, double) { return std::cos(k * x); });
    auto g = Field::function([=](double, double t) { return 1.0 + w * t; });
    UniformGrid grid(0.0, U(rng), U(rng), 40, 50);
    auto spec = single(1.0, p, 1.0, q, r, F, a, g, grid);
    auto u = solve_ibvp(spec);
    auto v = classical_upwind(p, q, r, F, a, g, grid);
    CHECK(sup_difference(u, v) <= 1e-12 * std::max(1.0, v.sup_abs()));
  }
}

TEST_CASE("assembled rows keep their sign pattern") {
  SolveOptions o;
  o.check_m_matrix = true;
  for (std::uint64_t k = 0; k < 20; ++k) {
    verify::RandomSpecOptions ro;
    ro.nx = 16;
    ro.nt = 16;
    auto spec = verify::random_admissible_spec(verify::derive_seed(11, k), ro);
    CHECK_NOTHROW(solve_ibvp(spec, o));
  }
}

TEST_CASE("inadmissible problems are refused") {
  UniformGrid grid(0.0, 1.0, 1.0, 8, 8);
  auto spec = single(0.5, Field::constant(1.0), 0.5, Field::constant(1.0), Field::constant(1.0),
                     Field::constant(0.0), Field::constant(1.0), Field::constant(1.0), grid);
  try {
    solve_ibvp(spec);
    FAIL("expected InadmissibleProblem");
  } catch (const InadmissibleProblem& e) {
    REQUIRE_FALSE(e.violations().empty());
    CHECK(e.violations().front().condition == Condition::ReactionNonPositive);
    CHECK(e.violations().front().term == "r");
  }
}

TEST_CASE("solves are deterministic") {
  verify::RandomSpecOptions o;
  auto spec = verify::random_admissible_spec(99, o);
  CHECK(solve_ibvp(spec) == solve_ibvp(spec));
}

TEST_CASE("vanishing semilinear term matches the linear solve bitwise") {
  UniformGrid grid(0.0, 1.0, 1.0, 32, 32);
  auto spec = single(0.6, Field::constant(1.0), 0.4, Field::expression("1+x*t"), Field::constant(-0.5),
                     Field::expression("sin(x)-t"), Field::expression("cos(x)"), Field::constant(1.0), grid);
  auto f = SemilinearTerm::expression("0", -10.0, 10.0);
  auto s = solve_semilinear(spec, f);
  CHECK(s.field == solve_ibvp(spec));
  CHECK(s.iterations.size() == grid.nt());
}

TEST_CASE("linear semilinear term reproduces the reaction") {
  UniformGrid grid(0.0, 1.0, 1.0, 32, 32);
  auto base = single(0.5, Field::constant(1.0), 0.5, Field::constant(1.0), Field::constant(0.0),
                     Field::constant(0.0), Field::expression("1+x"), Field::constant(1.0), grid);
  auto linear = base;
  linear.reaction = Field::constant(-1.0);
  PicardOptions po;
  po.tol = 1e-9;
  auto s = solve_semilinear(base, SemilinearTerm::expression("-u", -10.0, 10.0), po);
  CHECK(sup_difference(s.field, solve_ibvp(linear)) <= po.tol);
}

TEST_CASE("fixed point of 1 - u") {
  UniformGrid grid(0.0, 2.0, 1.5, 24, 24);
  auto spec = single(0.3, Field::expression("2+sin(x*t)"), 0.7, Field::expression("1+x"), Field::constant(0.0),
                     Field::constant(0.0), Field::constant(1.0), Field::constant(1.0), grid);
  PicardOptions po;
  po.tol = 1e-9;
  auto s = solve_semilinear(spec, SemilinearTerm::expression("1-u", -10.0, 10.0), po);
  for (double v : s.field.values()) CHECK(std::abs(v - 1.0) <= po.tol);
}

TEST_CASE("semilinear solves are deterministic") {
  verify::RandomSpecOptions o;
  o.nx = 24;
  o.nt = 24;
  auto spec = verify::random_admissible_spec(5, o);
  auto f = SemilinearTerm::expression("-u^3", -50.0, 50.0);
  auto a = solve_semilinear(spec, f);
  auto b = solve_semilinear(spec, f);
  CHECK(a.field == b.field);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("semilinear term validation") {
  CHECK_NOTHROW(validate_semilinear(SemilinearTerm::expression("-u^3", -2.0, 2.0)));
  CHECK_NOTHROW(validate_semilinear(SemilinearTerm::expression("exp(-u)", -2.0, 2.0)));
  try {
    validate_semilinear(SemilinearTerm::expression("u^2", -1.0, 1.0));
    FAIL("expected NotAdmissibleTerm");
  } catch (const NotAdmissibleTerm& e) {
    CHECK(e.slope() > 0.0);
    CHECK(e.where() > 0.0);
  }
  CHECK_THROWS_AS(SemilinearTerm::expression("u", 1.0, -1.0), std::invalid_argument);
}

TEST_CASE("Picard iteration reports divergence") {
  UniformGrid grid(0.0, 1.0, 1.0, 4, 2);
  auto spec = single(0.5, Field::constant(1.0), 0.5, Field::constant(1.0), Field::constant(0.0),
                     Field::constant(0.0), Field::constant(1.0), Field::constant(1.0), grid);
  PicardOptions po;
  po.max_iter = 40;
  try {
    solve_semilinear(spec, SemilinearTerm::expression("-1000*u", -1e300, 1e300), po);
    FAIL("expected PicardDivergence");
  } catch (const PicardDivergence& e) {
    CHECK(e.level() == 1);
    CHECK(e.residuals().size() == 40);
    CHECK(e.residuals().back() > e.residuals().front());
  }
}

TEST_CASE("truncated Cauchy problem keeps constants") {
  CauchySpec cs{Field::expression("1+0.5*sin(x)"), Field::constant(0.75), Field::constant(0.0), -8.0, 8.0, -4.0,
                4.0};
  UniformGrid grid(-8.0, 8.0, 1.0, 128, 64);
  auto u = solve_cauchy_truncated(cs, FractionalOrder(0.5), grid);
  for (double v : u.values()) CHECK(v == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("Cauchy setup is validated") {
  CauchySpec cs{Field::constant(1.0), Field::constant(0.0), Field::constant(0.0), -8.0, 8.0, -4.0, 4.0};
  CHECK_NOTHROW(validate_cauchy(cs));
  auto narrow = cs;
  narrow.window_left = -6.0;
  CHECK_THROWS_AS(validate_cauchy(narrow), std::invalid_argument);
  auto reversed = cs;
  reversed.x_left = 1.0;
  CHECK_THROWS_AS(validate_cauchy(reversed), std::invalid_argument);
  auto stalled = cs;
  stalled.speed = Field::expression("x");
  CHECK_THROWS_AS(cauchy_problem(stalled, FractionalOrder(0.5), UniformGrid(-8.0, 8.0, 1.0, 16, 4)),
                  std::invalid_argument);
  CHECK_THROWS_AS(cauchy_problem(cs, FractionalOrder(0.5), UniformGrid(-7.0, 8.0, 1.0, 16, 4)),
                  std::invalid_argument);
  auto cols = window_columns(cs, UniformGrid(-8.0, 8.0, 1.0, 16, 4));
  CHECK(cols.first == 4);
  CHECK(cols.second == 12);
}

TEST_CASE("inverse speed heuristic") {
  CauchySpec cs{Field::constant(1.0), Field::constant(0.0), Field::constant(0.0), -8.0, 8.0, -4.0, 4.0};
  auto g = inverse_speed_growth(cs);
  CHECK(g.far_half == doctest::Approx(4.0));
  CHECK(g.near_half == doctest::Approx(4.0));
  CHECK_FALSE(g.warning);
  cs.speed = Field::expression("1+x^4");
  CHECK(inverse_speed_growth(cs).warning);
}

TEST_CASE("classical ODE is exact on a linear solution") {
  auto u = solve_multiterm_fode({FractionalOrder(1.0)}, {}, [](double) { return 1.0; }, 0.0, 64, 2.0);
  for (std::size_t n = 0; n <= 64; ++n) CHECK(u[n] == doctest::Approx(2.0 * n / 64.0).epsilon(1e-14));
}

TEST_CASE("fractional relaxation ODE with unit source") {
  auto u = solve_multiterm_fode({FractionalOrder(0.5)}, {}, [](double) { return 1.0; }, 0.0, 2048, 1.0);
  CHECK(std::abs(u.back() - 1.1283791671) <= 5e-3);
  // the Caputo derivative of the exact profile t^{1/2}/Gamma(3/2) is 1
  const double d = fracops::caputo_quad_oracle(
      [](double s) { return 0.5 / std::tgamma(1.5) / std::sqrt(s); }, FractionalOrder(0.5), 1.0, 1e-12);
  CHECK(d == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("multi-term ODE with unit source and constant coefficients is non-decreasing") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.05, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    double a1 = U(rng), a2 = U(rng), a3 = U(rng);
    std::vector<double> o{a1, a2, a3};
    std::sort(o.begin(), o.end());
    if (o[0] == o[1] || o[1] == o[2]) continue;
    const double c1 = 3.0 * U(rng), c2 = 3.0 * U(rng);
    auto u = solve_multiterm_fode({FractionalOrder(o[0]), FractionalOrder(o[1]), FractionalOrder(o[2])},
                                  {[=](double) { return c1; }, [=](double) { return c2; }},
                                  [](double) { return 1.0; }, 0.0, 12, 1.0 + U(rng));
    for (std::size_t n = 1; n < u.size(); ++n) CHECK(u[n] >= u[n - 1]);
  }
}

TEST_CASE("growing lower-order coefficient can turn the ODE solution down") {
  auto u = solve_multiterm_fode({FractionalOrder(0.3), FractionalOrder(0.9)}, {[](double t) { return 20.0 * t * t; }},
                                [](double) { return 1.0; }, 0.0, 64, 2.0);
  CHECK(u.back() < *std::max_element(u.begin(), u.end()));
}

TEST_CASE("ODE argument checks") {
  auto one = [](double) { return 1.0; };
  CHECK_THROWS_AS(solve_multiterm_fode({}, {}, one, 0.0, 4, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(solve_multiterm_fode({FractionalOrder(0.5)}, {one}, one, 0.0, 4, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(solve_multiterm_fode({FractionalOrder(0.5), FractionalOrder(0.3)}, {one}, one, 0.0, 4, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(solve_multiterm_fode({FractionalOrder(0.3), FractionalOrder(0.5)},
                                       {[](double) { return -1.0; }}, one, 0.0, 4, 1.0),
                  std::invalid_argument);
}
