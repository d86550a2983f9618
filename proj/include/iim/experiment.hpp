#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "iim/config.hpp"
#include "iim/elasticity.hpp"
#include "iim/iim.hpp"
#include "iim/image.hpp"
#include "iim/mesh.hpp"
#include "iim/phantom.hpp"

namespace iim {

struct TraceRow {
    int iteration = 0;
    double objective = 0.0;
    double residual = 0.0;
    RelativeErrors error;
    std::vector<LameParameters> params;
};

struct RunRecord {
    std::string run_id;
    double delta = 0.0;
    std::uint64_t seed = 0;
    double alpha = 0.0;
    std::vector<LameParameters> recovered;
    RelativeErrors final_error;
    std::vector<LameParameters> best;
    RelativeErrors best_error;
    int best_iteration = 0;
    int iterations = 0;
    int evaluations = 0;
    double initial_objective = 0.0;
    double final_objective = 0.0;
    double final_residual = 0.0;
    /// False when the optimizer could not lower the objective at all.
    bool identifiable = true;
    std::vector<TraceRow> trace;
    double wall_ms = 0.0;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<LameParameters> truth;
    std::vector<double> region_areas;
    /// Round-trip interpolation floor of the noise-free setup.
    double interpolation_floor = 0.0;
    double truth_residual = 0.0;
    std::vector<RunRecord> runs;
};

/// Noise-free data of an experiment: mesh, phantom, ground-truth field and
/// the compressed image.
struct Scenario {
    Mesh mesh;
    Phantom phantom;
    std::vector<LameParameters> truth;
    ElasticityBVP bvp;
    DisplacementField displacement;
    ScalarImage deformed;
};

Scenario build_scenario(const ExperimentConfig& cfg);

/// Effective alpha for a noise level under the configured scaling rule.
double effective_alpha(const ExperimentConfig& cfg, double delta, const ScalarImage& reference,
                       std::span<const double> region_areas);

/// One inversion on (possibly noisy) images.
/// Noise sub-seeds come from (seed, level_index).
RunRecord run_inversion(const ExperimentConfig& cfg, const Scenario& sc, double delta, std::size_t level_index,
                        std::uint64_t seed);

using ProgressFn = std::function<void(const RunRecord&)>;

/// Noise-free inversion (alpha = 0) in the configured mode.
ExperimentReport run_noise_free_suite(const ExperimentConfig& cfg, const ProgressFn& progress = {});

/// One run per (noise level, seed), ordered by (delta, seed).
ExperimentReport run_noise_sweep(const ExperimentConfig& cfg, const ProgressFn& progress = {});

/// summary.csv, timing.csv, statistics.csv, traces/<run_id>.csv,
/// reference.pgm, deformed.pgm (when a scenario is given), manifest.json and
/// report.json.
void emit_report(const ExperimentReport& report, const std::filesystem::path& dir, const Scenario* scenario = nullptr);

/// Writes only the CSV files of a report (used by the `report` subcommand).
void write_report_csv(const ExperimentReport& report, const std::filesystem::path& dir);

nlohmann::ordered_json report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const nlohmann::json& j);
ExperimentReport read_report(const std::filesystem::path& dir);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

/// Least-squares slope of log(y) against log(x); pairs with a non-positive
/// entry are skipped.
double loglog_slope(std::span<const double> x, std::span<const double> y);

struct SweepStatistics {
    std::size_t runs = 0;
    double spearman_best = 0.0;
    double slope_best = 0.0;
    double spearman_final = 0.0;
    double slope_final = 0.0;
};

/// Statistics over runs with delta > 0.
SweepStatistics sweep_statistics(const ExperimentReport& report);

}  // namespace iim
