#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fractrans/fracops.hpp"
#include "fractrans/mlf.hpp"
#include "fractrans/verify.hpp"
#include "support/dense_system.hpp"

using namespace fractrans;
using namespace fractrans::verify;
using Field = CoefficientField;

namespace {

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

SolutionField spike_field(double spike) {
  SolutionField f(UniformGrid(0.0, 1.0, 1.0, 4, 4));
  for (std::size_t n = 0; n <= 4; ++n)
    for (std::size_t i = 0; i <= 4; ++i) f(i, n) = 0.5;
  f(0, 0) = 1.0;
  f(2, 3) = spike;
  return f;
}

}  // namespace

TEST_CASE("planted maximum violation is measured") {
  auto r = check_max_principle(spike_field(1.5), {ForcingSign::NonPositive, false, kRelTol});
  CHECK_FALSE(r.verdict);
  CHECK(r.measured == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r.details.at("grid_max_i") == 2.0);
  CHECK(r.details.at("grid_max_n") == 3.0);
  CHECK(r.principle == Principle::MaxPrinciple);
}

TEST_CASE("planted minimum violation is measured") {
  auto r = check_max_principle(spike_field(-0.25), {ForcingSign::NonNegative, false, kRelTol});
  CHECK_FALSE(r.verdict);
  CHECK(r.principle == Principle::MinPrinciple);
  CHECK(r.measured == doctest::Approx(0.25).epsilon(1e-15));
  auto ok = check_max_principle(spike_field(0.75), {ForcingSign::NonNegative, false, kRelTol});
  CHECK(ok.verdict);
}

TEST_CASE("planted equality violation is measured") {
  auto f = spike_field(1.25);
  auto r = check_max_principle(f, {ForcingSign::Zero, true, kRelTol});
  CHECK_FALSE(r.verdict);
  CHECK(r.principle == Principle::BoundaryEquality);
  CHECK(r.measured == doctest::Approx(0.25).epsilon(1e-15));
  auto dip = spike_field(-0.5);
  auto r2 = check_max_principle(dip, {ForcingSign::Zero, true, kRelTol});
  CHECK_FALSE(r2.verdict);
  CHECK(r2.measured == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("constant field with positive forcing passes the minimum check") {
  UniformGrid grid(0.0, 1.0, 1.0, 16, 16);
  auto spec = single(0.5, Field::constant(1.0), 0.5, Field::constant(1.0), Field::constant(-1.0),
                     Field::constant(2.0), Field::constant(2.0), Field::constant(2.0), grid);
  auto u = solver::solve_ibvp(spec);
  auto r = check_max_principle(spec, u, {ForcingSign::NonNegative, false, kRelTol});
  CHECK(r.verdict);
  CHECK(r.details.at("grid_min") == doctest::Approx(2.0));
}

TEST_CASE("decaying relaxation problem attains its maximum initially") {
  UniformGrid grid(0.0, 1.0, 1.0, 8, 256);
  auto g = Field::function([](double, double t) { return mlf::ml_time_solution(0.5, -1.0, 1.0, t); });
  auto spec = single(0.5, Field::constant(1.0), 0.5, Field::constant(0.0), Field::constant(-1.0),
                     Field::constant(0.0), Field::constant(1.0), g, grid);
  auto u = solver::solve_ibvp(spec);
  auto r = check_max_principle(spec, u, {ForcingSign::NonPositive, false, kRelTol});
  CHECK(r.verdict);
  CHECK(r.measured == 0.0);
  CHECK(r.details.at("grid_max") == 1.0);
  CHECK(r.details.at("grid_max_n") == 0.0);
}

TEST_CASE("declared hypotheses are checked against the problem") {
  UniformGrid grid(0.0, 1.0, 1.0, 8, 8);
  auto spec = single(0.5, Field::constant(1.0), 0.5, Field::constant(1.0), Field::constant(-1.0),
                     Field::expression("x-0.5"), Field::constant(0.0), Field::constant(0.0), grid);
  auto u = solver::solve_ibvp(spec);
  CHECK_THROWS_AS(check_max_principle(spec, u, {ForcingSign::NonPositive, false, kRelTol}), HypothesisError);
  CHECK_THROWS_AS(check_max_principle(spec, u, {ForcingSign::NonNegative, false, kRelTol}), HypothesisError);
  CHECK_THROWS_AS(check_max_principle(spec, u, {ForcingSign::Zero, false, kRelTol}), HypothesisError);
  auto zero_f = spec;
  zero_f.forcing = Field::constant(0.0);
  CHECK_THROWS_AS(check_max_principle(zero_f, u, {ForcingSign::Zero, true, kRelTol}), HypothesisError);
}

TEST_CASE("randomized maximum and minimum principles") {
  FuzzOptions o;
  o.count = 60;
  o.seed = 1;
  for (auto sign : {ForcingSign::NonPositive, ForcingSign::NonNegative}) {
    o.spec.forcing = sign;
    for (const auto& r : fuzz_max_principle(o)) {
      CAPTURE(r.details.at("index"));
      CHECK(r.verdict);
    }
  }
  o.spec.forcing = ForcingSign::Zero;
  o.spec.reaction_zero = true;
  for (const auto& r : fuzz_max_principle(o)) {
    CHECK(r.principle == Principle::BoundaryEquality);
    CHECK(r.verdict);
  }
}

TEST_CASE("random specs are reproducible and admissible") {
  RandomSpecOptions o;
  o.nx = 12;
  o.nt = 12;
  for (std::uint64_t k = 0; k < 100; ++k) {
    auto a = random_admissible_spec(derive_seed(3, k), o);
    auto b = random_admissible_spec(derive_seed(3, k), o);
    CHECK(fingerprint(a) == fingerprint(b));
    CHECK(validate_problem(a).empty());
  }
  CHECK(derive_seed(3, 0) != derive_seed(3, 1));
  CHECK(derive_seed(3, 0) != derive_seed(4, 0));
}

TEST_CASE("dense system reproduces the marching solver") {
  RandomSpecOptions o;
  o.nx = 6;
  o.nt = 6;
  for (std::uint64_t k = 0; k < 30; ++k) {
    auto spec = random_admissible_spec(derive_seed(17, k), o);
    auto d = dense::assemble(spec);
    auto u = solver::solve_ibvp(spec);
    CHECK(dense::sup_difference(u, d, dense::solve(d)) <= 1e-11 * std::max(1.0, u.sup_abs()));
  }
}

TEST_CASE("matrix positivity agrees with the comparison checker") {
  RandomSpecOptions o;
  o.nx = 6;
  o.nt = 6;
  for (auto mode : {ComparisonMode::SharedReaction, ComparisonMode::OrderedReaction}) {
    for (std::uint64_t k = 0; k < 30; ++k) {
      auto pair = random_ordered_pair(derive_seed(23, k), o, mode);
      CHECK(dense::inverse_min_ratio(dense::assemble(pair.first)) >= -1e-14);
      CHECK(dense::inverse_min_ratio(dense::assemble(pair.second)) >= -1e-14);
      auto p = dense::predict_comparison(pair.first, pair.second);
      bool predicted = p.min_difference >= -1e-12;
      if (mode == ComparisonMode::OrderedReaction) predicted = predicted && p.min_second >= -1e-12;
      auto r = check_comparison(pair.first, pair.second, mode);
      CHECK(predicted);
      CHECK(r.verdict == predicted);
    }
  }
}

TEST_CASE("ordered pairs match the fuzzer") {
  FuzzOptions o;
  o.count = 5;
  o.seed = 8;
  o.spec.nx = 16;
  o.spec.nt = 16;
  auto reports = fuzz_comparison(o, ComparisonMode::OrderedReaction);
  for (std::uint64_t k = 0; k < o.count; ++k) {
    auto pair = random_ordered_pair(derive_seed(o.seed, k), o.spec, ComparisonMode::OrderedReaction);
    auto r = check_comparison(pair.first, pair.second, ComparisonMode::OrderedReaction);
    CHECK(r.fingerprint == reports[k].fingerprint);
    CHECK(r.measured == reports[k].measured);
  }
}

TEST_CASE("comparison examples") {
  UniformGrid grid(0.0, 1.0, 1.0, 32, 32);
  auto base = single(0.5, Field::constant(1.0), 0.5, Field::constant(1.0), Field::constant(-1.0),
                     Field::constant(0.0), Field::constant(1.0), Field::constant(1.0), grid);
  auto same = check_comparison(base, base, ComparisonMode::SharedReaction);
  CHECK(same.verdict);
  CHECK(same.details.at("min_difference") == 0.0);

  auto lifted = base;
  lifted.forcing = Field::constant(1.0);
  auto r = check_comparison(lifted, base, ComparisonMode::SharedReaction);
  CHECK(r.verdict);
  CHECK(r.details.at("min_difference") >= 0.0);

  auto weak = base;
  weak.reaction = Field::constant(-0.5);
  auto r2 = check_comparison(weak, base, ComparisonMode::OrderedReaction);
  CHECK(r2.verdict);
  CHECK(r2.details.at("second_min") >= -1e-10);
}

TEST_CASE("comparison hypotheses are enforced") {
  UniformGrid grid(0.0, 1.0, 1.0, 8, 8);
  auto base = single(0.5, Field::constant(1.0), 0.5, Field::constant(1.0), Field::constant(-1.0),
                     Field::constant(0.0), Field::constant(1.0), Field::constant(1.0), grid);
  auto lower = base;
  lower.forcing = Field::constant(-1.0);
  CHECK_THROWS_AS(check_comparison(lower, base, ComparisonMode::SharedReaction), HypothesisError);
  auto other_r = base;
  other_r.reaction = Field::constant(-0.5);
  CHECK_THROWS_AS(check_comparison(other_r, base, ComparisonMode::SharedReaction), HypothesisError);
  CHECK_THROWS_AS(check_comparison(base, other_r, ComparisonMode::OrderedReaction), HypothesisError);
  auto other_p = base;
  other_p.time_terms[0].coefficient = Field::constant(2.0);
  CHECK_THROWS_AS(check_comparison(other_p, base, ComparisonMode::SharedReaction), HypothesisError);
  auto negative = base;
  negative.initial = Field::constant(-1.0);
  negative.boundary = Field::constant(-1.0);
  CHECK_THROWS_AS(check_comparison(base, negative, ComparisonMode::OrderedReaction), HypothesisError);
  CHECK_NOTHROW(check_comparison(base, negative, ComparisonMode::SharedReaction));
}

TEST_CASE("comparison is transitive over ordered forcings") {
  RandomSpecOptions o;
  o.nx = 24;
  o.nt = 24;
  for (std::uint64_t k = 0; k < 10; ++k) {
    auto p3 = random_admissible_spec(derive_seed(31, k), o);
    auto p2 = p3;
    p2.forcing = Field::function([f = p3.forcing](double x, double t) { return f(x, t) + 0.5 * (1.0 + x * t); });
    auto p1 = p2;
    p1.forcing = Field::function([f = p2.forcing](double x, double t) { return f(x, t) + std::exp(-t); });
    CHECK(check_comparison(p1, p2, ComparisonMode::SharedReaction).verdict);
    CHECK(check_comparison(p2, p3, ComparisonMode::SharedReaction).verdict);
    CHECK(check_comparison(p1, p3, ComparisonMode::SharedReaction).verdict);
  }
}

TEST_CASE("linear uniqueness under permuted assembly") {
  RandomSpecOptions o;
  o.max_terms = 3;
  for (std::uint64_t k = 0; k < 10; ++k) {
    auto r = check_uniqueness(random_admissible_spec(derive_seed(37, k), o), 1e-12);
    CHECK(r.verdict);
  }
}

TEST_CASE("distinct boundary data are reported as distinct") {
  UniformGrid grid(0.0, 1.0, 1.0, 64, 64);
  auto a = single(0.5, Field::constant(1.0), 0.5, Field::constant(1.0), Field::constant(-1.0),
                  Field::constant(0.0), Field::constant(1.0), Field::constant(1.0), grid);
  auto b = a;
  b.boundary = Field::expression("1+0.1*(1-exp(-50*t))");
  auto r = check_uniqueness(a, b, 1e-12);
  CHECK_FALSE(r.verdict);
  CHECK(r.measured >= 0.1 * 0.99);
  CHECK(r.details.at("sup_difference_i") == 0.0);
}

TEST_CASE("semilinear uniqueness against a direct Newton solve") {
  UniformGrid grid(0.0, 1.0, 1.0, 4, 4);
  auto spec = single(0.5, Field::constant(1.0), 0.7, Field::expression("1+x"), Field::constant(-0.5),
                     Field::expression("t*x"), Field::expression("1-x/2"), Field::expression("1+t"), grid);
  auto f = solver::SemilinearTerm::expression("-u^3", 0.0, 2.0);
  solver::PicardOptions po;
  po.tol = 1e-9;
  auto r = check_uniqueness(spec, f, po);
  CHECK(r.verdict);
  CHECK(r.threshold == doctest::Approx(1e-8));

  auto d = dense::assemble(spec);
  Eigen::VectorXd v = dense::solve(d);
  for (int it = 0; it < 50; ++it) {
    Eigen::VectorXd res = d.A * v - d.b + v.array().cube().matrix();
    Eigen::MatrixXd J = d.A;
    J.diagonal() += (3.0 * v.array().square()).matrix();
    v -= J.fullPivLu().solve(res);
  }
  auto u = solver::solve_semilinear(spec, f, po).field;
  CHECK(dense::sup_difference(u, d, v) <= 1e-8);

  auto linear = solver::SemilinearTerm::expression("1-u", -10.0, 10.0);
  CHECK(check_uniqueness(spec, linear, po).verdict);
}

TEST_CASE("semilinear comparison examples") {
  UniformGrid grid(0.0, 1.0, 1.0, 24, 24);
  auto shared = single(0.5, Field::constant(1.0), 0.5, Field::constant(1.0), Field::constant(-0.5),
                       Field::constant(0.0), Field::constant(1.0), Field::constant(1.0), grid);
  BoundaryData data{Field::constant(1.0), Field::constant(1.0)};
  solver::PicardOptions po;
  auto f2 = solver::SemilinearTerm::expression("-u", -10.0, 10.0);
  auto same = check_semilinear_comparison(f2, f2, data, data, shared, po);
  CHECK(same.verdict);
  CHECK(same.details.at("max_difference") == 0.0);

  auto f1 = solver::SemilinearTerm::expression("-u-0.5", -10.0, 10.0);
  auto r = check_semilinear_comparison(f1, f2, data, data, shared, po);
  CHECK(r.verdict);
  CHECK(r.details.at("max_difference") == 0.0);
  CHECK(r.measured == 0.0);
  CHECK_THROWS_AS(check_semilinear_comparison(f2, f1, data, data, shared, po), HypothesisError);

  auto zero = solver::SemilinearTerm::expression("0", -10.0, 10.0);
  BoundaryData low{Field::expression("1-x/2"), Field::constant(1.0)};
  BoundaryData high{Field::expression("1+x"), Field::expression("1+t")};
  CHECK(check_semilinear_comparison(zero, zero, low, high, shared, po).verdict);
  CHECK_THROWS_AS(check_semilinear_comparison(zero, zero, high, low, shared, po), HypothesisError);

  auto rising = solver::SemilinearTerm::expression("u", -1.0, 1.0);
  CHECK_THROWS_AS(check_semilinear_comparison(rising, rising, data, data, shared, po), HypothesisError);
}

TEST_CASE("Cauchy supremum bound on a Gaussian profile") {
  solver::CauchySpec spec{Field::constant(1.0), Field::expression("exp(-x^2)"), Field::constant(-0.1), -8.0, 8.0,
                          -4.0, 4.0};
  UniformGrid grid(-8.0, 8.0, 1.0, 256, 256);
  auto r = check_cauchy_sup(spec, FractionalOrder(0.5), grid, ForcingSign::NonPositive);
  CHECK(r.verdict);
  CHECK(std::abs(r.details.at("window_max") - 1.0) <= 1e-10);
  CHECK(r.details.at("window_max_n") == 0.0);

  spec.forcing = Field::constant(0.1);
  spec.initial = Field::expression("-exp(-x^2)");
  auto m = check_cauchy_sup(spec, FractionalOrder(0.5), grid, ForcingSign::NonNegative);
  CHECK(m.verdict);
  CHECK(std::abs(m.details.at("window_min") + 1.0) <= 1e-10);

  CHECK_THROWS_AS(check_cauchy_sup(spec, FractionalOrder(0.5), grid, ForcingSign::NonPositive), HypothesisError);
  spec.inverse_speed_diverges = false;
  CHECK_THROWS_AS(check_cauchy_sup(spec, FractionalOrder(0.5), grid, ForcingSign::NonNegative), HypothesisError);
}

TEST_CASE("Cauchy constants are exact") {
  solver::CauchySpec spec{Field::constant(2.0), Field::constant(0.3), Field::constant(0.0), -8.0, 8.0, -4.0, 4.0};
  UniformGrid grid(-8.0, 8.0, 1.0, 64, 64);
  auto r = check_cauchy_sup(spec, FractionalOrder(0.7), grid, ForcingSign::Zero);
  CHECK(r.verdict);
  CHECK(r.details.at("window_max") == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(r.details.at("window_min") == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("separable scenario slope constant") {
  const double expected = std::sqrt(2.0) * std::exp(-0.5);
  CHECK(std::abs(expected - 0.8577638850) <= 5e-11);
  auto [K, arg] = max_abs_derivative("exp(-x^2)", -8.0, 8.0);
  CHECK(std::abs(K - expected) <= 1e-12);
  CHECK(std::abs(std::abs(arg) - std::sqrt(0.5)) <= 1e-6);
  auto s = separable_scenario("exp(-x^2)", FractionalOrder(0.5), 0.0, -8.0, 8.0, -4.0, 4.0);
  CHECK(std::abs(s.slope_bound - expected) <= 1e-12);
  // psi + phi solves the equation, so its Caputo time derivative plus phi'
  // reproduces the forcing
  const double t = 0.7;
  const double x = 0.3;
  const double dpsi = fracops::caputo_quad_oracle(
      [&](double tt) { return -expected * 0.5 * std::pow(tt, -0.5) / std::tgamma(1.5); }, FractionalOrder(0.5), t,
      1e-12);
  const double dphi = -2.0 * x * std::exp(-x * x);
  CHECK(dpsi + dphi == doctest::Approx(s.spec.forcing(x, t)).epsilon(1e-9));
  UniformGrid grid(-8.0, 8.0, 1.0, 128, 128);
  auto r = check_cauchy_sup(s.spec, FractionalOrder(0.5), grid, ForcingSign::NonPositive);
  CHECK(r.verdict);
  CHECK(r.details.at("window_max") == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("nonnegativity of the constant-speed transport problem") {
  for (int k = 0; k < 5; ++k) {
    const double alpha = 0.2 + 0.2 * k;
    const double q0 = 0.3 + 0.4 * k;
    UniformGrid grid(0.0, 1.0 + 0.5 * k, 1.0, 64, 64);
    auto spec = single(alpha, Field::constant(1.0), 1.0, Field::constant(q0),
                       Field::expression("-(0.2+sin(3*x*t)^2)"), Field::constant(0.0),
                       Field::expression("sin(2*x)^2"), Field::expression("t*(1-t)^2"), grid);
    auto u = solver::solve_ibvp(spec);
    CHECK(grid_extrema(u).min >= -1e-10);
  }
}

TEST_CASE("ladders must refine") {
  GridLadder l;
  l.build = [](const UniformGrid& g) {
    return single(0.5, Field::constant(1.0), 0.5, Field::constant(1.0), Field::constant(-1.0),
                  Field::constant(1.0), Field::constant(1.0), Field::constant(1.0), g);
  };
  l.levels = {{8, 8}};
  CHECK_THROWS_AS(validate_ladder(l), std::invalid_argument);
  l.levels = {{8, 8}, {16, 8}, {16, 16}};
  CHECK_NOTHROW(validate_ladder(l));
  l.levels = {{8, 8}, {8, 8}};
  CHECK_THROWS_AS(validate_ladder(l), std::invalid_argument);
  l.levels = {{8, 8}, {16, 4}};
  CHECK_THROWS_AS(validate_ladder(l), std::invalid_argument);
  l.levels = {{8, 8}, {16, 16}, {32, 32}};
  auto table = convergence_study(l, [](double, double) { return 1.0; });
  for (const auto& row : table.rows) CHECK(row.sup_error <= 1e-12);
}

TEST_CASE("manufactured convergence orders") {
  auto study = [](double a, double b) {
    PolynomialSolution sol{{0.0, 0.0, 1.0}, {0.0, 0.0, 1.0}};
    GridLadder l;
    l.levels = {{16, 16}, {32, 32}, {64, 64}, {128, 128}, {256, 256}};
    l.build = [=](const UniformGrid& g) {
      return manufactured_problem({{FractionalOrder(a), Field::constant(1.0)}},
                                  {{FractionalOrder(b), Field::constant(1.0)}}, Field::constant(-1.0), sol, g);
    };
    return convergence_study(l, [=](double x, double t) { return sol(x, t, 0.0); });
  };
  auto frac = study(0.5, 0.5);
  CHECK(frac.monotone);
  auto rep = convergence_report(frac, 1.3, 1.7);
  CHECK(rep.verdict);
  MESSAGE("order at 0.5: " << rep.measured);
  auto classical = study(1.0, 1.0);
  CHECK(classical.monotone);
  CHECK(classical.rows.back().observed_order == doctest::Approx(1.0).epsilon(0.15));
  CHECK(std::isnan(classical.rows.front().observed_order));
  CHECK_FALSE(convergence_report(classical, 1.3, 1.7).verdict);
}

TEST_CASE("polynomial solution evaluation") {
  PolynomialSolution p{{1.0, 2.0, 3.0}, {0.5, 0.0, -1.0}};
  CHECK(p(1.5, 2.0, 0.5) == doctest::Approx(1.0 + 4.0 + 12.0 + 0.5 - 1.0));
}
