#include "fractrans/solver.hpp"

#include <algorithm>
#include <cmath>
#include <span>

#include "fractrans/fracops.hpp"

namespace fractrans::solver {

namespace {

std::string summarize(const std::vector<Violation>& vs) {
  std::string s = "problem is not admissible:";
  for (const auto& v : vs) s += "\n  - [" + condition_name(v.condition) + "] " + v.message;
  return s;
}

struct TermData {
  fracops::L1Weights weights;
  std::vector<double> coeff;  // sampled on every node
  std::vector<double> history;
};

// Time marching state for one problem. Levels are solved in order; each level
// is prepared once (time history from the committed past) and may be swept
// several times with different sources.
class Marcher {
 public:
  Marcher(const ProblemSpec& spec, const SolveOptions& opts)
      : grid_(spec.grid), opts_(opts), field_(spec.grid), diffs_(spec.grid.node_count(), 0.0) {
    auto violations = validate_problem(spec, opts.validation);
    if (!violations.empty()) throw InadmissibleProblem(std::move(violations));

    const std::size_t nx = grid_.nx();
    const std::size_t nt = grid_.nt();
    double diag_floor = INFINITY;
    for (const Term& t : spec.time_terms) {
      auto w = fracops::build_weights(t.order, grid_.tau(), nt);
      diag_floor = std::min(diag_floor, w.scale() * w[0]);
      time_.push_back({std::move(w), t.coefficient.sample(grid_), std::vector<double>(nx + 1, 0.0)});
    }
    for (const Term& t : spec.space_terms) {
      space_.push_back({fracops::build_weights(t.order, grid_.h(), nx), t.coefficient.sample(grid_), {}});
    }
    diag_floor_ = opts.validation.p_floor * diag_floor;
    reaction_ = spec.reaction.sample(grid_);
    forcing_ = spec.forcing.sample(grid_);
    for (std::size_t i = 0; i <= nx; ++i) field_(i, 0) = spec.initial.at(grid_, i, 0);
    boundary_.resize(nt + 1);
    for (std::size_t n = 0; n <= nt; ++n) boundary_[n] = spec.boundary.at(grid_, 0, n);
    steps_.resize(nx + 1, 0.0);
  }

  const UniformGrid& grid() const { return grid_; }
  SolutionField& field() { return field_; }
  double forcing(std::size_t i, std::size_t n) const { return forcing_[n * (grid_.nx() + 1) + i]; }
  double boundary(std::size_t n) const { return boundary_[n]; }

  void prepare_level(std::size_t n) {
    const std::size_t stride = grid_.nx() + 1;
    for (TermData& term : time_) {
      std::fill(term.history.begin(), term.history.end(), 0.0);
      if (term.weights.backward_difference()) continue;
      const auto b = term.weights.weights();
      for (std::size_t m = 1; m < n; ++m) {
        const double bm = b[m];
        const double* d = diffs_.data() + (n - m) * stride;
        for (std::size_t i = 1; i < stride; ++i) term.history[i] += bm * d[i];
      }
    }
  }

  // Solves level n for the given per-node source (index 0 unused).
  void sweep(std::size_t n, std::span<const double> source, std::span<double> out) {
    const std::size_t nx = grid_.nx();
    const std::size_t stride = nx + 1;
    const auto prev = field_.level(n - 1);
    out[0] = boundary_[n];
    const bool descending = opts_.assembly == AssemblyOrder::Descending;

    for (std::size_t i = 1; i <= nx; ++i) {
      const std::size_t idx = n * stride + i;
      double weight = 0.0;
      double rhs = source[i];

      auto add_time = [&](const TermData& term) {
        const double s = term.coeff[idx] * term.weights.scale();
        const double b0 = term.weights[0];
        weight += s * b0;
        rhs += s * (b0 * prev[i] - term.history[i]);
        if (opts_.check_m_matrix && !(s >= 0.0)) throw InvariantBreach("negative time-term weight at a node");
      };
      auto add_space = [&](const TermData& term) {
        const double s = term.coeff[idx] * term.weights.scale();
        const double c0 = term.weights[0];
        double hist = 0.0;
        if (!term.weights.backward_difference()) {
          const auto c = term.weights.weights();
          for (std::size_t m = 1; m < i; ++m) hist += c[m] * steps_[i - m];
        }
        weight += s * c0;
        rhs += s * (c0 * out[i - 1] - hist);
        if (opts_.check_m_matrix && !(s >= 0.0)) throw InvariantBreach("negative space-term weight at a node");
      };

      if (descending) {
        for (auto it = time_.rbegin(); it != time_.rend(); ++it) add_time(*it);
        for (auto it = space_.rbegin(); it != space_.rend(); ++it) add_space(*it);
      } else {
        for (const TermData& term : time_) add_time(term);
        for (const TermData& term : space_) add_space(term);
      }

      const double diag = weight - reaction_[idx];
      if (!(diag >= diag_floor_)) {
        throw InvariantBreach("diagonal " + std::to_string(diag) + " below floor at node (" + std::to_string(i) +
                              ", " + std::to_string(n) + ")");
      }
      if (opts_.check_m_matrix && !(diag >= weight)) throw InvariantBreach("positive reaction reached assembly");
      out[i] = rhs / diag;
      steps_[i] = out[i] - out[i - 1];
    }
  }

  void commit(std::size_t n, std::span<const double> values) {
    const std::size_t stride = grid_.nx() + 1;
    auto level = field_.level(n);
    const auto prev = field_.level(n - 1);
    std::copy(values.begin(), values.end(), level.begin());
    for (std::size_t i = 0; i < stride; ++i) diffs_[n * stride + i] = level[i] - prev[i];
  }

 private:
  UniformGrid grid_;
  SolveOptions opts_;
  SolutionField field_;
  std::vector<TermData> time_;
  std::vector<TermData> space_;
  std::vector<double> reaction_;
  std::vector<double> forcing_;
  std::vector<double> boundary_;
  std::vector<double> diffs_;  // u^n - u^{n-1}, time-major
  std::vector<double> steps_;  // u_i - u_{i-1} on the level being swept
  double diag_floor_ = 0.0;
};

}  // namespace

InadmissibleProblem::InadmissibleProblem(std::vector<Violation> violations)
    : std::runtime_error(summarize(violations)), violations_(std::move(violations)) {}

SolutionField solve_ibvp(const ProblemSpec& spec, const SolveOptions& opts) {
  Marcher m(spec, opts);
  const std::size_t nx = spec.grid.nx();
  std::vector<double> source(nx + 1, 0.0);
  std::vector<double> out(nx + 1, 0.0);
  for (std::size_t n = 1; n <= spec.grid.nt(); ++n) {
    m.prepare_level(n);
    for (std::size_t i = 1; i <= nx; ++i) source[i] = m.forcing(i, n);
    m.sweep(n, source, out);
    m.commit(n, out);
  }
  return std::move(m.field());
}

SemilinearTerm::SemilinearTerm(Function f, Function df, double lo, double hi, std::string label)
    : f_(std::move(f)), df_(std::move(df)), u_lo_(lo), u_hi_(hi), label_(std::move(label)) {
  if (!(lo < hi)) throw std::invalid_argument("semilinear term: declared range must satisfy u_lo < u_hi");
}

SemilinearTerm SemilinearTerm::expression(const std::string& source, double u_lo, double u_hi) {
  auto vars = expr::Variables::single("u");
  expr::NodePtr ast = expr::parse(source, vars);
  expr::NodePtr dast = expr::differentiate(ast, 0);
  return SemilinearTerm([ast](double u) { return expr::eval(*ast, u); },
                        [dast](double u) { return expr::eval(*dast, u); }, u_lo, u_hi, source);
}

SemilinearTerm SemilinearTerm::function(Function f, Function df, double u_lo, double u_hi, std::string label) {
  return SemilinearTerm(std::move(f), std::move(df), u_lo, u_hi, std::move(label));
}

void validate_semilinear(const SemilinearTerm& f, std::size_t samples) {
  if (samples < 2) throw std::invalid_argument("validate_semilinear: need at least two samples");
  const double lo = f.u_lo();
  const double hi = f.u_hi();
  for (std::size_t k = 0; k < samples; ++k) {
    const double u = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(samples - 1);
    const double slope = f.derivative(u);
    if (!(slope <= 0.0)) {
      throw NotAdmissibleTerm("semilinear term '" + f.label() + "' has slope " + std::to_string(slope) +
                                  " > 0 at u = " + std::to_string(u),
                              u, slope);
    }
  }
}

SemilinearResult solve_semilinear(const ProblemSpec& spec, const SemilinearTerm& f, const PicardOptions& opts) {
  validate_semilinear(f);
  if (opts.initial_iterate && !(opts.initial_iterate->grid() == spec.grid)) {
    throw std::invalid_argument("solve_semilinear: initial iterate lives on a different grid");
  }
  if (!(opts.damping > 0.0 && opts.damping <= 1.0)) throw std::invalid_argument("damping must lie in (0, 1]");

  Marcher m(spec, opts.solve);
  const std::size_t nx = spec.grid.nx();
  std::vector<double> source(nx + 1, 0.0);
  std::vector<double> iterate(nx + 1, 0.0);
  std::vector<double> out(nx + 1, 0.0);
  std::vector<std::size_t> iterations;
  iterations.reserve(spec.grid.nt());

  for (std::size_t n = 1; n <= spec.grid.nt(); ++n) {
    m.prepare_level(n);
    const auto first = opts.initial_iterate ? opts.initial_iterate->level(n) : m.field().level(n - 1);
    std::copy(first.begin(), first.end(), iterate.begin());
    iterate[0] = m.boundary(n);

    std::vector<double> residuals;
    bool converged = false;
    for (std::size_t it = 1; it <= opts.max_iter; ++it) {
      for (std::size_t i = 1; i <= nx; ++i) source[i] = m.forcing(i, n) + f(iterate[i]);
      m.sweep(n, source, out);
      double diff = 0.0;
      for (std::size_t i = 1; i <= nx; ++i) diff = std::max(diff, std::abs(out[i] - iterate[i]));
      residuals.push_back(diff);
      if (diff <= opts.tol) {
        m.commit(n, out);
        iterations.push_back(it);
        converged = true;
        break;
      }
      if (opts.damping == 1.0) {
        iterate.swap(out);
      } else {
        for (std::size_t i = 1; i <= nx; ++i) iterate[i] += opts.damping * (out[i] - iterate[i]);
      }
    }
    if (!converged) {
      throw PicardDivergence("Picard iteration did not converge at time level " + std::to_string(n) + " within " +
                                 std::to_string(opts.max_iter) + " iterations",
                             n, std::move(residuals));
    }
  }
  return {std::move(m.field()), std::move(iterations)};
}

void validate_cauchy(const CauchySpec& spec) {
  if (!(spec.x_left < 0.0 && 0.0 < spec.x_right)) {
    throw std::invalid_argument("Cauchy truncation must satisfy x_left < 0 < x_right");
  }
  if (!(spec.x_left < spec.window_left && spec.window_left < spec.window_right &&
        spec.window_right < spec.x_right)) {
    throw std::invalid_argument("Cauchy window must lie strictly inside the truncation interval");
  }
  const double margin = spec.margin_fraction * (spec.x_right - spec.x_left);
  const double slack = 1e-12 * (spec.x_right - spec.x_left);
  if (spec.window_left - spec.x_left < margin - slack || spec.x_right - spec.window_right < margin - slack) {
    throw std::invalid_argument("Cauchy window is closer than the declared margin (" + std::to_string(margin) +
                                ") to the truncation edge");
  }
}

std::pair<std::size_t, std::size_t> window_columns(const CauchySpec& spec, const UniformGrid& grid) {
  const double h = grid.h();
  const double lo = std::ceil((spec.window_left - grid.x_min()) / h - 1e-9);
  const double hi = std::floor((spec.window_right - grid.x_min()) / h + 1e-9);
  if (lo < 0.0 || hi > static_cast<double>(grid.nx()) || lo > hi) {
    throw std::invalid_argument("Cauchy window does not contain any grid column");
  }
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

ProblemSpec cauchy_problem(const CauchySpec& spec, FractionalOrder alpha, const UniformGrid& grid) {
  validate_cauchy(spec);
  const double width = spec.x_right - spec.x_left;
  if (std::abs(grid.x_min() - spec.x_left) > 1e-12 * width || std::abs(grid.x_max() - spec.x_right) > 1e-12 * width) {
    throw std::invalid_argument("Cauchy grid must span the truncation interval");
  }
  for (std::size_t n = 0; n <= grid.nt(); ++n) {
    for (std::size_t i = 0; i <= grid.nx(); ++i) {
      const double q = spec.speed.at(grid, i, n);
      if (!(q > 0.0)) {
        throw std::invalid_argument("Cauchy speed q must be positive; q = " + std::to_string(q) + " at x = " +
                                    std::to_string(grid.x(i)));
      }
    }
  }
  const double inflow = spec.initial.at(grid, 0, 0);
  return ProblemSpec{
      {Term{alpha, CoefficientField::constant(1.0)}},
      {Term{FractionalOrder(1.0), spec.speed}},
      CoefficientField::constant(0.0),
      spec.forcing,
      spec.initial,
      CoefficientField::constant(inflow),
      grid,
  };
}

SolutionField solve_cauchy_truncated(const CauchySpec& spec, FractionalOrder alpha, const UniformGrid& grid,
                                     const SolveOptions& opts) {
  return solve_ibvp(cauchy_problem(spec, alpha, grid), opts);
}

InverseSpeedGrowth inverse_speed_growth(const CauchySpec& spec, std::size_t samples) {
  auto integrate = [&](double a, double b) {
    // composite trapezoid on 1/q(x, 0)
    const double h = (b - a) / static_cast<double>(samples);
    double s = 0.5 * (1.0 / spec.speed(a, 0.0) + 1.0 / spec.speed(b, 0.0));
    for (std::size_t k = 1; k < samples; ++k) s += 1.0 / spec.speed(a + h * static_cast<double>(k), 0.0);
    return s * h;
  };
  const double mid = 0.5 * spec.x_left;
  InverseSpeedGrowth g{integrate(spec.x_left, mid), integrate(mid, 0.0), false};
  g.warning = g.far_half < 0.25 * g.near_half;
  return g;
}

std::vector<double> solve_multiterm_fode(const std::vector<FractionalOrder>& orders,
                                         const std::vector<std::function<double(double)>>& coeffs,
                                         const std::function<double(double)>& rhs, double u0, std::size_t Nt,
                                         double T) {
  if (orders.empty()) throw std::invalid_argument("solve_multiterm_fode: need at least one order");
  if (coeffs.size() + 1 != orders.size()) {
    throw std::invalid_argument("solve_multiterm_fode: need one coefficient per non-leading order");
  }
  for (std::size_t k = 1; k < orders.size(); ++k) {
    if (!(orders[k - 1] < orders[k])) throw std::invalid_argument("solve_multiterm_fode: orders must increase");
  }
  if (Nt < 1 || !(T > 0.0)) throw std::invalid_argument("solve_multiterm_fode: need Nt >= 1 and T > 0");

  const double tau = T / static_cast<double>(Nt);
  std::vector<fracops::L1Weights> weights;
  for (const auto& a : orders) weights.push_back(fracops::build_weights(a, tau, Nt));

  std::vector<double> u(Nt + 1, u0);
  std::vector<double> d(Nt + 1, 0.0);
  const std::size_t lead = orders.size() - 1;
  for (std::size_t n = 1; n <= Nt; ++n) {
    const double t = static_cast<double>(n) * tau;
    double diag = 0.0;
    double hist = 0.0;
    for (std::size_t k = 0; k < orders.size(); ++k) {
      const double c = k == lead ? 1.0 : coeffs[k](t);
      if (!(c >= 0.0)) throw std::invalid_argument("solve_multiterm_fode: coefficient negative at t = " + std::to_string(t));
      const double s = c * weights[k].scale();
      diag += s * weights[k][0];
      if (!weights[k].backward_difference()) {
        const auto b = weights[k].weights();
        double h = 0.0;
        for (std::size_t m = 1; m < n; ++m) h += b[m] * d[n - m];
        hist += s * h;
      }
    }
    if (!(diag > 0.0)) throw InvariantBreach("solve_multiterm_fode: zero effective diagonal");
    d[n] = (rhs(t) - hist) / diag;
    u[n] = u[n - 1] + d[n];
  }
  return u;
}

}  // namespace fractrans::solver
