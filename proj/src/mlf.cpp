#include "fractrans/mlf.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/quadrature/tanh_sinh.hpp>

namespace fractrans::mlf {

namespace {

[[noreturn]] void out_of_range(double alpha, double beta, double z, const char* why) {
  throw RangeError("mittag_leffler(" + std::to_string(alpha) + ", " + std::to_string(beta) + ", " + std::to_string(z) +
                   "): " + why);
}

// Compensated power series.
double series(double alpha, double beta, double z) {
  const double log_abs_z = std::log(std::abs(z));
  const bool negative = z < 0.0;
  double sum = 0.0;
  double comp = 0.0;
  double prev = INFINITY;
  for (std::size_t k = 0; k < Config::term_cap; ++k) {
    const double kd = static_cast<double>(k);
    double mag = std::exp(kd * log_abs_z - std::lgamma(alpha * kd + beta));
    const double term = (negative && (k % 2 == 1)) ? -mag : mag;
    const double y = term - comp;
    const double s = sum + y;
    comp = (s - sum) - y;
    sum = s;
    if (!std::isfinite(sum)) out_of_range(alpha, beta, z, "series overflow");
    if (mag < prev && mag <= Config::series_rel_tol * std::abs(sum)) return sum;
    prev = mag;
  }
  out_of_range(alpha, beta, z, "series did not converge within the term cap");
}

// E_{a,b}(z) = int_0^inf K(chi) dchi for 0 < a < 1, b < 1 + a, z < 0, with
// K = chi^{(1-b)/a} exp(-chi^{1/a}) (chi sin(pi(1-b)) - z sin(pi(1-b+a)))
//     / (pi a (chi^2 - 2 chi z cos(pi a) + z^2)).
double integral(double alpha, double beta, double z) {
  using std::numbers::pi;
  const double s1 = std::sin(pi * (1.0 - beta));
  const double s2 = std::sin(pi * (1.0 - beta + alpha));
  const double c = std::cos(pi * alpha);
  const double power = (1.0 - beta) / alpha;
  const double inv_alpha = 1.0 / alpha;
  // two-argument form: the complement is not needed, the kernel is
  // integrably singular only at chi = 0
  auto kernel = [=](double chi, double) {
    if (chi <= 0.0) return 0.0;
    const double num = chi * s1 - z * s2;
    const double den = chi * chi - 2.0 * chi * z * c + z * z;
    return std::pow(chi, power) * std::exp(-std::pow(chi, inv_alpha)) * num / (pi * alpha * den);
  };
  // exp(-chi^{1/a}) underflows past chi^{1/a} = 760
  const double chi_max = std::pow(760.0, alpha);
  const double peak = std::abs(z);
  thread_local boost::math::quadrature::tanh_sinh<double> integrator;
  double err1 = 0.0;
  double err2 = 0.0;
  double value = integrator.integrate(kernel, 0.0, std::min(peak, chi_max), Config::integral_rel_tol, &err1);
  if (peak < chi_max) value += integrator.integrate(kernel, peak, chi_max, Config::integral_rel_tol, &err2);
  const double err = err1 + err2;
  if (!std::isfinite(value) || err > 1e-11 * std::abs(value)) {
    out_of_range(alpha, beta, z, "integral representation did not converge");
  }
  return value;
}

}  // namespace

double mittag_leffler(double alpha, double beta, double z) {
  if (!(alpha > 0.0)) out_of_range(alpha, beta, z, "alpha must be positive");
  if (!(beta > 0.0)) out_of_range(alpha, beta, z, "beta must be positive");
  if (!std::isfinite(z)) out_of_range(alpha, beta, z, "argument must be finite");
  if (z == 0.0) return 1.0 / std::tgamma(beta);
  if (z > 0.0) return series(alpha, beta, z);
  if (std::pow(-z, 1.0 / alpha) <= Config::series_switch) return series(alpha, beta, z);
  if (alpha == 1.0 && beta == 1.0) return std::exp(z);
  if (alpha < 1.0 && beta < 1.0 + alpha) return integral(alpha, beta, z);
  out_of_range(alpha, beta, z, "unsupported parameter range");
}

double ml_time_solution(double alpha, double r, double a0, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("ml_time_solution: t must be non-negative");
  if (t == 0.0) return a0;
  return a0 * mittag_leffler(alpha, 1.0, r * std::pow(t, alpha));
}

double ml_space_solution(double beta, double lambda, double g0, double x) {
  if (!(x >= 0.0)) throw std::invalid_argument("ml_space_solution: x must be non-negative");
  if (x == 0.0) return g0;
  return g0 * mittag_leffler(beta, 1.0, lambda * std::pow(x, beta));
}

}  // namespace fractrans::mlf
