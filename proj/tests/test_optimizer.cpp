#include <doctest.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include "iim/nelder_mead.hpp"

using namespace iim;

namespace {

double quadratic(std::span<const double> x) {
    const double c[3] = {1.5, -2.0, 0.25};
    const double w[3] = {1.0, 4.0, 0.5};
    double s = 0.0;
    for (int i = 0; i < 3; ++i) s += w[i] * (x[i] - c[i]) * (x[i] - c[i]);
    return s + 0.5 * (x[0] - c[0]) * (x[1] - c[1]);
}

double rosenbrock(std::span<const double> x) {
    return 100.0 * (x[1] - x[0] * x[0]) * (x[1] - x[0] * x[0]) + (1.0 - x[0]) * (1.0 - x[0]);
}

}  // namespace

TEST_SUITE("optimizer") {
    TEST_CASE("quadratic minimum") {
        NMOptions o;
        o.max_iterations = 2000;
        const auto r = nelder_mead(quadratic, {0.0, 0.0, 0.0}, o);
        CHECK(std::abs(r.best_point[0] - 1.5) <= 1e-6);
        CHECK(std::abs(r.best_point[1] + 2.0) <= 1e-6);
        CHECK(std::abs(r.best_point[2] - 0.25) <= 1e-6);
        CHECK(r.best_value <= 1e-11);
        CHECK(r.converged);
    }

    TEST_CASE("rosenbrock valley") {
        NMOptions o;
        o.max_iterations = 5000;
        const auto r = nelder_mead(rosenbrock, {-1.2, 1.0}, o);
        CHECK(std::abs(r.best_point[0] - 1.0) <= 1e-4);
        CHECK(std::abs(r.best_point[1] - 1.0) <= 1e-4);
    }

    TEST_CASE("bounded rosenbrock") {
        NMOptions o;
        o.max_iterations = 5000;
        o.lower = {-2.0, -1.0};
        o.upper = {2.0, 3.0};
        const auto r = nelder_mead(rosenbrock, {-1.2, 1.0}, o);
        CHECK(std::abs(r.best_point[0] - 1.0) <= 1e-4);
        CHECK(std::abs(r.best_point[1] - 1.0) <= 1e-4);
    }

    TEST_CASE("minimum on the boundary is reached under clipping") {
        NMOptions o;
        o.max_iterations = 1000;
        o.lower = {0.0, 10.0};
        o.upper = {5.0, 1000.0};
        int outside = 0;
        const auto f = [&](std::span<const double> x) {
            outside += x[0] < 0.0 || x[0] > 5.0 || x[1] < 10.0 || x[1] > 1000.0;
            return (x[0] + 2.0) * (x[0] + 2.0) + 1e-4 * (x[1] - 300.0) * (x[1] - 300.0);
        };
        const auto r = nelder_mead(f, {4.0, 900.0}, o);
        CHECK(outside == 0);
        CHECK(std::abs(r.best_point[0]) <= 1e-6);
        CHECK(std::abs(r.best_point[1] - 300.0) <= 1e-3);
    }

    TEST_CASE("start at the upper bound flips the simplex step") {
        NMOptions o;
        o.max_iterations = 500;
        o.lower = {0.0};
        o.upper = {1.0};
        const auto r = nelder_mead([](std::span<const double> x) { return (x[0] - 0.3) * (x[0] - 0.3); }, {1.0}, o);
        CHECK(std::abs(r.best_point[0] - 0.3) <= 1e-6);
        CHECK_FALSE(r.degenerate);
    }

    TEST_CASE("trace is monotone and one entry per iteration") {
        NMOptions o;
        o.max_iterations = 150;
        const auto r = nelder_mead(rosenbrock, {-1.2, 1.0}, o);
        REQUIRE(r.trace.size() == static_cast<std::size_t>(r.iterations));
        CHECK(r.iterations == 150);
        double prev = r.initial_value;
        for (std::size_t k = 0; k < r.trace.size(); ++k) {
            CHECK(r.trace[k].iteration == static_cast<int>(k) + 1);
            CHECK(r.trace[k].best_value <= prev);
            CHECK(rosenbrock(r.trace[k].best_point) == r.trace[k].best_value);
            prev = r.trace[k].best_value;
        }
        CHECK(r.trace.back().best_value == r.best_value);
        CHECK(r.best_value <= r.initial_value);
    }

    TEST_CASE("evaluation count matches calls") {
        int calls = 0;
        const auto f = [&](std::span<const double> x) {
            ++calls;
            return quadratic(x);
        };
        NMOptions o;
        o.max_iterations = 40;
        const auto r = nelder_mead(f, {0.0, 0.0, 0.0}, o);
        CHECK(r.evaluations == calls);
        CHECK(r.initial_value == quadratic(std::vector<double>{0.0, 0.0, 0.0}));
    }

    TEST_CASE("reruns are bit-identical") {
        NMOptions o;
        o.max_iterations = 300;
        const auto a = nelder_mead(rosenbrock, {-1.2, 1.0}, o);
        const auto b = nelder_mead(rosenbrock, {-1.2, 1.0}, o);
        CHECK(std::memcmp(a.best_point.data(), b.best_point.data(), 2 * sizeof(double)) == 0);
        std::ostringstream ta, tb;
        write_trace_csv(ta, a);
        write_trace_csv(tb, b);
        CHECK(ta.str() == tb.str());
    }

    TEST_CASE("trace csv layout") {
        NMOptions o;
        o.max_iterations = 7;
        const auto r = nelder_mead(quadratic, {0.0, 0.0, 0.0}, o);
        std::ostringstream out;
        write_trace_csv(out, r);
        const std::string s = out.str();
        CHECK(s.rfind("iteration,best_value,simplex_diameter,x0,x1,x2\n", 0) == 0);
        std::size_t lines = 0;
        for (char c : s) lines += c == '\n';
        CHECK(lines == 8);
        CHECK(s.find('\r') == std::string::npos);
    }

    TEST_CASE("degenerate simplex stops") {
        NMOptions o;
        o.max_iterations = 10000;
        o.f_tolerance = -1.0;
        o.x_tolerance = -1.0;
        const auto r = nelder_mead([](std::span<const double>) { return 1.0; }, {0.5, 0.5}, o);
        CHECK(r.degenerate);
        CHECK(r.iterations < 10000);
    }

    TEST_CASE("invalid options") {
        NMOptions o;
        CHECK_THROWS_AS(nelder_mead(quadratic, {}, o), std::invalid_argument);
        o.lower = {0.0, 0.0, 0.0};
        o.upper = {1.0, 1.0};
        CHECK_THROWS_AS(nelder_mead(quadratic, {0.5, 0.5, 0.5}, o), std::invalid_argument);
        o.upper = {1.0, 1.0, 1.0};
        CHECK_THROWS_AS(nelder_mead(quadratic, {0.5, 2.0, 0.5}, o), std::invalid_argument);
        NMOptions bad;
        bad.contraction = 1.5;
        CHECK_THROWS_AS(nelder_mead(quadratic, {0.0, 0.0, 0.0}, bad), std::invalid_argument);
        bad = {};
        bad.expansion = 0.5;
        CHECK_THROWS_AS(nelder_mead(quadratic, {0.0, 0.0, 0.0}, bad), std::invalid_argument);
    }
}
