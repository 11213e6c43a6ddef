#pragma once

// Run configuration loading and command execution for the fractrans tool.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fractrans/core.hpp"
#include "fractrans/expr.hpp"
#include "fractrans/verify.hpp"

namespace fractrans::cli {

enum class Command { Solve, Verify, Compare, Cauchy, Convergence, Mlf, Fuzz };

std::optional<Command> parse_command(const std::string& name);
std::string command_name(Command c);

/// Malformed configuration: syntax, unknown or missing keys, wrong types,
/// expression errors. The message names the key path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProblemSection {
  double x_min = 0.0;
  double x_max = 1.0;
  double T = 1.0;
  std::size_t nx = 128;
  std::size_t nt = 128;
  std::vector<double> time_orders;
  std::vector<expr::Expression> time_coeffs;
  std::vector<double> space_orders;
  std::vector<expr::Expression> space_coeffs;
  expr::Expression reaction;
  expr::Expression forcing;
  std::optional<expr::Expression> initial;
  std::optional<expr::Expression> boundary;
};

struct SemilinearSection {
  std::string f;  // expression in u
  double u_lo = -1e3;
  double u_hi = 1e3;
  double tol = 1e-9;
  std::size_t max_iter = 500;
  double damping = 1.0;
};

struct VerifySection {
  std::vector<std::string> principles{"max_principle"};  // max_principle | uniqueness
  verify::ForcingSign forcing = verify::ForcingSign::NonPositive;
  bool reaction_zero = false;
  double rel_tol = verify::kRelTol;
  double uniqueness_tol = 1e-12;
  std::size_t count = 200;
  std::uint64_t seed = 42;
  /// max_principle | min_principle | boundary_equality | comparison_shared |
  /// comparison_ordered
  std::vector<std::string> fuzz{"max_principle"};
  std::size_t fuzz_nx = 64;
  std::size_t fuzz_nt = 64;
  std::size_t max_terms = 3;
};

/// The second problem of a comparison: [problem] with these replacements.
struct CompareSection {
  verify::ComparisonMode mode = verify::ComparisonMode::SharedReaction;
  std::optional<expr::Expression> reaction;
  std::optional<expr::Expression> forcing;
  std::optional<expr::Expression> initial;
  std::optional<expr::Expression> boundary;
  /// Semilinear term of the second problem; the first uses [semilinear].
  std::optional<std::string> f;
  double tol = 1e-8;  // semilinear comparison only
};

struct CauchySection {
  double alpha = 0.5;
  std::optional<expr::Expression> speed;
  std::optional<expr::Expression> initial;
  std::optional<expr::Expression> forcing;
  /// Separable scenario: phi replaces speed, initial and forcing.
  std::optional<std::string> phi;
  double extra_decay = 0.0;
  double x_left = -8.0;
  double x_right = 8.0;
  double window_left = -4.0;
  double window_right = 4.0;
  double margin_fraction = 0.25;
  bool inverse_speed_diverges = true;
  double T = 1.0;
  std::size_t nx = 512;
  std::size_t nt = 512;
  verify::ForcingSign forcing_sign = verify::ForcingSign::NonPositive;
};

enum class OracleKind { Expression, Manufactured, MlTime, MlSpace };

struct ConvergenceSection {
  std::vector<std::size_t> nx;
  std::vector<std::size_t> nt;
  verify::ErrorNorm norm = verify::ErrorNorm::SupGrid;
  OracleKind oracle = OracleKind::Expression;
  std::optional<expr::Expression> exact;
  std::vector<double> time_poly;
  std::vector<double> space_poly;
  double rate = -1.0;       // r or lambda of the Mittag-Leffler oracles
  double amplitude = 1.0;   // a0 or g0
  std::optional<double> order_lo;
  std::optional<double> order_hi;
};

struct MlfSection {
  double alpha = 1.0;
  double beta = 1.0;
  double z = 0.0;
};

struct OutputSection {
  std::filesystem::path dir = "out";
  bool record_timings = false;
};

struct RunConfig {
  std::optional<Command> command;
  std::optional<ProblemSection> problem;
  std::optional<SemilinearSection> semilinear;
  VerifySection verify;
  CompareSection compare;
  std::optional<CauchySection> cauchy;
  std::optional<ConvergenceSection> convergence;
  std::optional<MlfSection> mlf;
  OutputSection output;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Command-line values that replace config scalars.
struct Overrides {
  std::optional<Command> command;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> nx;
  std::optional<std::size_t> nt;
};

void apply_overrides(RunConfig& config, const Overrides& o);

/// The [problem] section on a given grid.
ProblemSpec build_problem(const ProblemSection& p, const UniformGrid& grid);

/// Exit codes of run().
inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitInput = 2;

/// Executes the configured command, writing artifacts under output.dir.
/// Returns kExitPass iff every verdict passes.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

void write_solution_csv(const SolutionField& field, const std::filesystem::path& path);
/// Reads a CSV written by write_solution_csv; rows must match `grid`.
SolutionField read_solution_csv(const std::filesystem::path& path, const UniformGrid& grid);

std::string reports_json(const std::vector<VerificationReport>& reports);

/// Applies the FRACTRANS_LOG level (trace, debug, info, warn, error, off).
void configure_logging();

}  // namespace fractrans::cli
