#pragma once

// Experiment orchestration behind the command line tool: configuration,
// seeded Monte Carlo over a ladder of horizons, output files and reports.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "microvol/estimators.hpp"
#include "microvol/hawkes.hpp"
#include "microvol/kernel_json.hpp"
#include "microvol/limit_models.hpp"

namespace microvol {

struct LimitSettings {
    std::size_t paths = 10000;
    /// Grid steps on [0, 1].
    std::size_t steps = 1000;
    /// Heavy tail only.
    std::optional<RoughForm> rough_form;
};

/// Tolerances of the statistical report rows.
struct Tolerances {
    double bracket_abs = 0.05;
    double symmetry_rel = 0.02;
    double vanishing_ratio = 1.0;
    double ks_level = 0.01;
    double ks_critical_scale = 1.0;
    double hurst_halfwidth = 0.05;
};

/// Tolerances of the deterministic identity rows.
struct IdentityTolerances {
    double laplace = 1e-6;
    double fractional = 1e-4;
    double resolvent = 1e-6;
    double wiener_hopf = 1e-8;
};

struct ExperimentConfig {
    ModelSpec model;
    std::vector<double> horizons;
    /// One count per horizon (a single value applies to all).
    std::vector<std::size_t> paths;
    std::uint64_t master_seed = 0;
    std::string output_dir = "out";
    std::size_t workers = 1;
    SimulationOptions simulation;
    bool write_events = false;
    double leverage_window = kDefaultLeverageWindowFraction;
    LimitSettings limit;
    Tolerances tolerances;
    IdentityTolerances identity_tolerances;

    std::size_t paths_at(std::size_t horizon_index) const;
};

/// Parses and validates a config document; errors name the offending field.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);

ExperimentConfig load_config(const std::string& filename);

/// 64-bit FNV-1a of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& j);

/// Per-path statistics of one simulated micro path.
struct PathSummary {
    double horizon = 0.0;
    std::size_t path_index = 0;
    std::uint64_t seed = 0;
    std::size_t n_plus = 0;
    std::size_t n_minus = 0;
    /// Rescaled price at t = 1.
    double price_t1 = 0.0;
    /// Light tail: integrated rescaled price; heavy tail: same with the heavy scaling.
    double integrated_t1 = 0.0;
    BracketEstimate brackets;
    /// Light tail: sup |C+ - C-|; heavy tail: sup |Lambda - X| over both marks.
    double direction_sup = 0.0;
};

struct SimulationRun {
    std::vector<PathSummary> summaries;
    /// Rescaled price paths per horizon on the uniform grid, one per path.
    std::vector<std::vector<PathGrid>> prices;
    nlohmann::json manifest;
    std::vector<std::string> files;
};

struct LimitRun {
    nlohmann::json params;
    std::vector<double> price_t1;
    std::vector<double> variance_t1;
    /// Variance paths kept for the roughness estimate (heavy tail).
    std::vector<PathGrid> variance_paths;
    nlohmann::json manifest;
    std::vector<std::string> files;
};

struct ReportRow {
    std::string name;
    std::string kind;  // "statistical", "identity" or "info"
    double value = 0.0;
    double target = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    std::string detail;
};

struct VerifyReport {
    std::vector<ReportRow> rows;
    bool all_passed() const;
    nlohmann::json to_json() const;
    std::string table() const;
};

/// Runs the Hawkes engine over the horizon ladder and writes
/// paths/summary_T*.csv, paths/price_T*.csv (and events when requested) plus
/// manifest.json under the output directory.
SimulationRun cmd_simulate(const ExperimentConfig& c);

/// Simulates the limit model under the mapped parameters and writes
/// params.json, paths/limit_terminal.csv, paths/limit_sample.csv and manifest.json.
LimitRun cmd_limit(const ExperimentConfig& c);

/// Runs both, evaluates every report row and writes report.json and report.txt.
VerifyReport cmd_verify(const ExperimentConfig& c);

/// Deterministic identity rows shared with the acceptance checks.
double ml_laplace_residual(double alpha, double lambda, const std::vector<double>& zs);
double fractional_identity_residual(double alpha, double lambda, double step);

/// Closed-form resolvent for kernels with a single common exponential rate.
std::optional<double> resolvent_closed_form_error(const KernelMatrixSpec& spec, double a, double step,
                                                  std::size_t points);

}  // namespace microvol
