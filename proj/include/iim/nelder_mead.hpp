#pragma once

#include <functional>
#include <ostream>
#include <span>
#include <vector>

namespace iim {

struct NMOptions {
    int max_iterations = 100;
    double reflection = 1.0;
    double expansion = 2.0;
    double contraction = 0.5;
    double shrink = 0.5;
    /// Initial simplex offset per coordinate, as a fraction of (upper - lower)
    /// for bounded coordinates, else of |x0_i| (0.00025 when x0_i == 0).
    double initial_step = 0.05;
    double f_tolerance = 1e-12;
    double x_tolerance = 1e-12;
    /// Per-coordinate box; empty vectors mean unbounded.
    std::vector<double> lower;
    std::vector<double> upper;
    bool trace = true;
};

struct NMTraceEntry {
    int iteration = 0;
    double best_value = 0.0;
    std::vector<double> best_point;
    double diameter = 0.0;
};

struct NMResult {
    std::vector<double> best_point;
    double best_value = 0.0;
    double initial_value = 0.0;
    int iterations = 0;
    int evaluations = 0;
    /// Stopped because f and x spreads fell below the tolerances.
    bool converged = false;
    /// Stopped because the simplex diameter fell below 1e-14.
    bool degenerate = false;
    std::vector<NMTraceEntry> trace;
};

using Objective = std::function<double(std::span<const double>)>;

/// Nelder-Mead simplex minimization. Every trial point is clipped to the box
/// before it is evaluated. One iteration is one reflect / expand / contract /
/// shrink cycle.
NMResult nelder_mead(const Objective& f, std::vector<double> x0, const NMOptions& opts);

/// Rows: iteration, best_value, simplex_diameter, x0, x1, ...
void write_trace_csv(std::ostream& out, const NMResult& result);

}  // namespace iim
