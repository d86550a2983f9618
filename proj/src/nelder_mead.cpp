#include "iim/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace iim {
namespace {

using Point = std::vector<double>;

double diameter(const std::vector<Point>& simplex) {
    double d = 0.0;
    for (std::size_t a = 0; a < simplex.size(); ++a) {
        for (std::size_t b = a + 1; b < simplex.size(); ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < simplex[a].size(); ++i) {
                const double t = simplex[a][i] - simplex[b][i];
                s += t * t;
            }
            d = std::max(d, std::sqrt(s));
        }
    }
    return d;
}

void validate(const NMOptions& o, const Point& x0) {
    if (o.max_iterations < 1) throw std::invalid_argument("nelder_mead: max_iterations must be >= 1");
    if (!(o.reflection > 0.0)) throw std::invalid_argument("nelder_mead: reflection must be > 0");
    if (!(o.expansion > 1.0) || !(o.expansion > o.reflection)) {
        throw std::invalid_argument("nelder_mead: expansion must exceed 1 and the reflection coefficient");
    }
    if (!(o.contraction > 0.0 && o.contraction < 1.0)) throw std::invalid_argument("nelder_mead: contraction must be in (0,1)");
    if (!(o.shrink > 0.0 && o.shrink < 1.0)) throw std::invalid_argument("nelder_mead: shrink must be in (0,1)");
    if (!(o.initial_step > 0.0)) throw std::invalid_argument("nelder_mead: initial_step must be > 0");
    if (x0.empty()) throw std::invalid_argument("nelder_mead: empty starting point");
    const bool bounded = !o.lower.empty() || !o.upper.empty();
    if (bounded) {
        if (o.lower.size() != x0.size() || o.upper.size() != x0.size()) {
            throw std::invalid_argument("nelder_mead: bounds must match the dimension");
        }
        for (std::size_t i = 0; i < x0.size(); ++i) {
            if (!(o.lower[i] < o.upper[i])) throw std::invalid_argument("nelder_mead: bounds need lower < upper");
            if (!(x0[i] >= o.lower[i] && x0[i] <= o.upper[i])) {
                throw std::invalid_argument("nelder_mead: starting point outside the bounds");
            }
        }
    }
}

}  // namespace

NMResult nelder_mead(const Objective& f, std::vector<double> x0, const NMOptions& opts) {
    validate(opts, x0);
    const std::size_t n = x0.size();
    const bool bounded = !opts.lower.empty();

    NMResult result;
    auto clip = [&](Point& x) {
        if (!bounded) return;
        for (std::size_t i = 0; i < n; ++i) x[i] = std::clamp(x[i], opts.lower[i], opts.upper[i]);
    };
    auto eval = [&](const Point& x) {
        ++result.evaluations;
        return f(x);
    };

    std::vector<Point> simplex(n + 1, x0);
    for (std::size_t i = 0; i < n; ++i) {
        double step = 0.0;
        if (bounded) {
            step = opts.initial_step * (opts.upper[i] - opts.lower[i]);
            // Step inward when the start sits at the upper bound.
            if (x0[i] + step > opts.upper[i]) step = -step;
        } else {
            step = x0[i] != 0.0 ? opts.initial_step * std::abs(x0[i]) : 0.00025;
        }
        simplex[i + 1][i] += step;
        clip(simplex[i + 1]);
    }
    std::vector<double> values(n + 1);
    for (std::size_t v = 0; v <= n; ++v) values[v] = eval(simplex[v]);
    result.initial_value = values[0];

    std::vector<std::size_t> order(n + 1);
    auto sort_simplex = [&] {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        std::vector<Point> s(n + 1);
        std::vector<double> fv(n + 1);
        for (std::size_t k = 0; k <= n; ++k) {
            s[k] = std::move(simplex[order[k]]);
            fv[k] = values[order[k]];
        }
        simplex = std::move(s);
        values = std::move(fv);
    };
    sort_simplex();

    const double rho = opts.reflection;
    const double chi = opts.expansion;
    const double psi = opts.contraction;
    const double sigma = opts.shrink;

    for (int it = 1; it <= opts.max_iterations; ++it) {
        double x_spread = 0.0;
        double f_spread = 0.0;
        for (std::size_t v = 1; v <= n; ++v) {
            f_spread = std::max(f_spread, std::abs(values[v] - values[0]));
            for (std::size_t i = 0; i < n; ++i) x_spread = std::max(x_spread, std::abs(simplex[v][i] - simplex[0][i]));
        }
        if (x_spread <= opts.x_tolerance && f_spread <= opts.f_tolerance) {
            result.converged = true;
            break;
        }
        if (diameter(simplex) < 1e-14) {
            result.degenerate = true;
            break;
        }

        Point centroid(n, 0.0);
        for (std::size_t v = 0; v < n; ++v) {
            for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[v][i];
        }
        for (double& c : centroid) c /= static_cast<double>(n);
        const Point& worst = simplex[n];
        auto along = [&](double t) {
            Point x(n);
            for (std::size_t i = 0; i < n; ++i) x[i] = centroid[i] + t * (centroid[i] - worst[i]);
            clip(x);
            return x;
        };

        Point xr = along(rho);
        const double fr = eval(xr);
        bool do_shrink = false;
        if (fr < values[0]) {
            Point xe = along(rho * chi);
            const double fe = eval(xe);
            if (fe < fr) {
                simplex[n] = std::move(xe);
                values[n] = fe;
            } else {
                simplex[n] = std::move(xr);
                values[n] = fr;
            }
        } else if (fr < values[n - 1]) {
            simplex[n] = std::move(xr);
            values[n] = fr;
        } else if (fr < values[n]) {
            Point xc = along(psi * rho);
            const double fc = eval(xc);
            if (fc <= fr) {
                simplex[n] = std::move(xc);
                values[n] = fc;
            } else {
                do_shrink = true;
            }
        } else {
            Point xcc = along(-psi);
            const double fcc = eval(xcc);
            if (fcc < values[n]) {
                simplex[n] = std::move(xcc);
                values[n] = fcc;
            } else {
                do_shrink = true;
            }
        }
        if (do_shrink) {
            for (std::size_t v = 1; v <= n; ++v) {
                for (std::size_t i = 0; i < n; ++i) {
                    simplex[v][i] = simplex[0][i] + sigma * (simplex[v][i] - simplex[0][i]);
                }
                clip(simplex[v]);
                values[v] = eval(simplex[v]);
            }
        }
        sort_simplex();
        result.iterations = it;
        if (opts.trace) {
            result.trace.push_back({it, values[0], simplex[0], diameter(simplex)});
        }
    }

    result.best_point = simplex[0];
    result.best_value = values[0];
    return result;
}

void write_trace_csv(std::ostream& out, const NMResult& result) {
    const std::size_t n = result.best_point.size();
    out << "iteration,best_value,simplex_diameter";
    for (std::size_t i = 0; i < n; ++i) out << ",x" << i;
    out << '\n';
    char buf[64];
    for (const auto& e : result.trace) {
        out << e.iteration;
        for (double v : {e.best_value, e.diameter}) {
            std::snprintf(buf, sizeof buf, ",%.17g", v);
            out << buf;
        }
        for (double v : e.best_point) {
            std::snprintf(buf, sizeof buf, ",%.17g", v);
            out << buf;
        }
        out << '\n';
    }
}

}  // namespace iim
