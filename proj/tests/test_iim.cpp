#include <doctest.h>

#include <cmath>
#include <memory>

#include "iim/experiment.hpp"
#include "iim/iim.hpp"

using namespace iim;

namespace {

Scenario small_scenario(const std::string& preset, int nx, int ny) {
    auto cfg = default_config(preset);
    cfg.nx = nx;
    cfg.ny = ny;
    return build_scenario(cfg);
}

std::shared_ptr<const IIMContext> make_context(const Scenario& sc, IIMSettings s) {
    return std::make_shared<const IIMContext>(sc.mesh, sc.phantom.labels, sc.phantom.region_count, sc.phantom.image,
                                              sc.deformed, sc.bvp, std::move(s));
}

IIMSettings full_settings() {
    IIMSettings s;
    s.mode = InversionMode::Full;
    return s;
}

IIMSettings mu_only_settings(const Scenario& sc) {
    IIMSettings s;
    s.mode = InversionMode::MuOnly;
    for (const auto& t : sc.truth) s.fixed_lambda.push_back(t.lambda);
    return s;
}

ParamVector flatten(const std::vector<LameParameters>& pairs) {
    ParamVector p;
    for (const auto& q : pairs) {
        p.push_back(q.lambda);
        p.push_back(q.mu);
    }
    return p;
}

}  // namespace

TEST_SUITE("iim_core") {
    TEST_CASE("residual vanishes for identical images without compression") {
        auto sc = small_scenario("single", 68, 29);
        sc.bvp.compression = 0.0;
        sc.deformed = sc.phantom.image;
        const auto ctx = make_context(sc, full_settings());
        CHECK(residual(ctx, flatten(sc.truth)) == 0.0);
        CHECK(residual(ctx, ParamVector{300.0, 50.0, 20.0, 700.0}) == 0.0);
    }

    TEST_CASE("objective equals residual when alpha is zero") {
        const auto sc = small_scenario("single", 68, 29);
        const auto ctx = make_context(sc, full_settings());
        IIMEvaluator ev(ctx);
        for (const ParamVector& p : {flatten(sc.truth), ParamVector{100, 40, 300, 90}, ParamVector{900, 12, 15, 800}}) {
            const double r = ev.residual(p);
            CHECK(r >= 0.0);
            CHECK(ev.objective(p) == r);
            CHECK(r == squared_l2_distance(ev.forward_image(p), sc.phantom.image));
        }
    }

    TEST_CASE("homogeneous penalty is the constant-field integral") {
        auto sc = small_scenario("single", 68, 29);
        std::fill(sc.phantom.labels.begin(), sc.phantom.labels.end(), 0);
        sc.phantom.region_count = 1;
        auto s = full_settings();
        s.alpha = 1.0;
        const auto ctx = make_context(sc, s);
        IIMEvaluator ev(ctx);
        const ParamVector p{310.0, 34.5};
        const double expected = (310.0 * 310.0 + 34.5 * 34.5) * 6.8 * 2.9;
        CHECK(ctx->penalty(p) == doctest::Approx(expected).epsilon(1e-12));
        CHECK(ev.objective(p) - ev.residual(p) == doctest::Approx(expected).epsilon(1e-12));
    }

    TEST_CASE("objective splits into residual and weighted penalty") {
        const auto sc = small_scenario("four", 68, 29);
        auto s = full_settings();
        s.alpha = 0.1 * 0.05;
        const auto ctx = make_context(sc, s);
        IIMEvaluator ev(ctx);
        const auto p = flatten(sc.truth);
        double pen = 0.0;
        for (std::size_t k = 0; k < sc.truth.size(); ++k) {
            pen += (sc.truth[k].lambda * sc.truth[k].lambda + sc.truth[k].mu * sc.truth[k].mu) * ctx->region_areas[k];
        }
        const double r = ev.residual(p);
        CHECK((ev.objective(p) - r) == doctest::Approx(s.alpha * pen).epsilon(1e-12));
    }

    TEST_CASE("frozen lambda enters the penalty") {
        const auto sc = small_scenario("single", 68, 29);
        auto s = mu_only_settings(sc);
        const auto ctx = make_context(sc, s);
        const ParamVector mu{sc.truth[0].mu, sc.truth[1].mu};
        CHECK(ctx->penalty(mu) == doctest::Approx(make_context(sc, full_settings())->penalty(flatten(sc.truth))).epsilon(1e-14));
    }

    TEST_CASE("penalty offset shifts the prior") {
        const auto sc = small_scenario("single", 68, 29);
        auto s = full_settings();
        s.penalty_offset = sc.truth;
        const auto ctx = make_context(sc, s);
        CHECK(ctx->penalty(flatten(sc.truth)) == 0.0);
    }

    TEST_CASE("out-of-bounds parameters return the sentinel") {
        const auto sc = small_scenario("single", 68, 29);
        const auto ctx = make_context(sc, full_settings());
        IIMEvaluator ev(ctx);
        const double inside = ev.objective(flatten(sc.truth));
        for (const ParamVector& p : {ParamVector{5.0, 30, 300, 60}, ParamVector{300, 30, 1200, 60},
                                     ParamVector{NAN, 30, 300, 60}}) {
            CHECK(ev.objective(p) == ctx->out_of_bounds_value);
            CHECK(ev.residual(p) == ctx->out_of_bounds_value);
        }
        CHECK(ctx->out_of_bounds_value > 1e9 * inside);
        CHECK(ev.evaluations() == 7);
    }

    TEST_CASE("residual is invariant under joint material scaling") {
        const auto sc = small_scenario("four", 127, 54);
        auto s = full_settings();
        s.bounds = {1e-3, 1e6};
        const auto ctx = make_context(sc, s);
        IIMEvaluator ev(ctx);
        const auto p = flatten(sc.truth);
        const double base = ev.residual(p);
        const auto u0 = ev.displacement(p);
        for (double factor : {0.5, 2.0, 10.0}) {
            ParamVector q = p;
            for (double& v : q) v *= factor;
            CHECK(ev.residual(q) == doctest::Approx(base).epsilon(1e-9));
            const auto u = ev.displacement(q);
            double diff = 0.0, norm = 0.0;
            for (std::size_t i = 0; i < u.values.size(); ++i) {
                diff = std::max(diff, std::hypot(u.values[i].x1 - u0.values[i].x1, u.values[i].x2 - u0.values[i].x2));
                norm = std::max(norm, std::hypot(u0.values[i].x1, u0.values[i].x2));
            }
            CHECK(diff <= 1e-9 * norm);
        }
    }

    TEST_CASE("positive alpha breaks the scaling symmetry") {
        const auto sc = small_scenario("single", 68, 29);
        auto s = full_settings();
        s.alpha = 1e-6;
        s.bounds = {1e-3, 1e6};
        const auto ctx = make_context(sc, s);
        IIMEvaluator ev(ctx);
        double previous = ev.objective(flatten(sc.truth));
        for (double factor : {1.5, 2.0, 4.0}) {
            ParamVector q = flatten(sc.truth);
            for (double& v : q) v *= factor;
            const double f = ev.objective(q);
            CHECK(f > previous);
            previous = f;
        }
    }

    TEST_CASE("shear modulus scans have their minimum at the truth") {
        const auto sc = small_scenario("single", 254, 108);
        const auto ctx = make_context(sc, mu_only_settings(sc));
        IIMEvaluator ev(ctx);
        for (std::size_t region = 0; region < 2; ++region) {
            CAPTURE(region);
            int best = -100;
            double best_value = INFINITY;
            for (int k = -10; k <= 10; ++k) {
                ParamVector p{sc.truth[0].mu, sc.truth[1].mu};
                p[region] *= std::pow(2.0, k / 10.0);
                const double r = ev.residual(p);
                if (r < best_value) {
                    best_value = r;
                    best = k;
                }
            }
            CHECK(best == 0);
        }
    }

    TEST_CASE("relative errors") {
        const std::vector<double> areas{10.0, 6.0, 3.72};
        const std::vector<LameParameters> truth{{900, 30}, {1800, 60}, {450, 15}};
        const auto zero = relative_error(areas, truth, truth);
        CHECK(zero.lambda == 0.0);
        CHECK(zero.mu == 0.0);
        CHECK(zero.joint == 0.0);

        const double e = 0.03;
        auto one = truth;
        one[1].lambda *= 1.0 + e;
        double norm = 0.0;
        for (std::size_t k = 0; k < 3; ++k) norm += truth[k].lambda * truth[k].lambda * areas[k];
        const auto r = relative_error(areas, one, truth);
        CHECK(r.lambda == doctest::Approx(e * truth[1].lambda * std::sqrt(areas[1]) / std::sqrt(norm)).epsilon(1e-12));
        CHECK(r.mu == 0.0);
        CHECK(r.joint == doctest::Approx(r.lambda).epsilon(1e-15));

        std::vector<LameParameters> pert(3), scaled(3);
        const double dl[3] = {5.0, -12.0, 3.0}, dm[3] = {-1.0, 0.5, 2.0};
        for (std::size_t k = 0; k < 3; ++k) {
            pert[k] = {truth[k].lambda + dl[k], truth[k].mu + dm[k]};
            scaled[k] = {truth[k].lambda - 3.5 * dl[k], truth[k].mu - 3.5 * dm[k]};
        }
        const auto a = relative_error(areas, pert, truth);
        const auto b = relative_error(areas, scaled, truth);
        CHECK(b.lambda == doctest::Approx(3.5 * a.lambda).epsilon(1e-12));
        CHECK(b.mu == doctest::Approx(3.5 * a.mu).epsilon(1e-12));
        CHECK(b.joint == doctest::Approx(3.5 * a.joint).epsilon(1e-12));
        CHECK(a.joint == doctest::Approx(std::hypot(a.lambda, a.mu)).epsilon(1e-14));

        CHECK_THROWS_AS(relative_error(areas, truth, std::vector<LameParameters>(3)), std::invalid_argument);
        CHECK_THROWS_AS(relative_error(areas, truth, std::vector<LameParameters>(2)), std::invalid_argument);
    }

    TEST_CASE("joint error of small component errors") {
        CHECK(std::round(std::hypot(0.0041, 0.0069) * 1e4) / 1e4 == doctest::Approx(0.0080).epsilon(1e-12));
        const std::vector<double> areas{1.0};
        const std::vector<LameParameters> truth{{1.0, 1.0}};
        const std::vector<LameParameters> rec{{1.0041, 0.9931}};
        const auto r = relative_error(areas, rec, truth);
        CHECK(r.joint == doctest::Approx(0.0080).epsilon(0.01));
    }

    TEST_CASE("pack and expand") {
        const auto sc = small_scenario("four", 68, 29);
        const auto full = make_context(sc, full_settings());
        CHECK(full->dimension() == 10);
        CHECK(full->expand(full->pack(sc.truth)) == sc.truth);
        CHECK(full->pack(sc.truth) == flatten(sc.truth));
        const auto mu = make_context(sc, mu_only_settings(sc));
        CHECK(mu->dimension() == 5);
        const auto p = mu->pack(sc.truth);
        for (std::size_t k = 0; k < 5; ++k) CHECK(p[k] == sc.truth[k].mu);
        CHECK(mu->expand(p) == sc.truth);
        CHECK_THROWS_AS(mu->expand(ParamVector{1, 2}), std::invalid_argument);
    }

    TEST_CASE("context validation") {
        const auto sc = small_scenario("single", 68, 29);
        auto bad_alpha = full_settings();
        bad_alpha.alpha = -1.0;
        CHECK_THROWS_AS(make_context(sc, bad_alpha), std::invalid_argument);
        auto bad_box = full_settings();
        bad_box.bounds = {100.0, 10.0};
        CHECK_THROWS_AS(make_context(sc, bad_box), std::invalid_argument);
        auto missing = full_settings();
        missing.mode = InversionMode::MuOnly;
        CHECK_THROWS_AS(make_context(sc, missing), std::invalid_argument);
        auto wrong_grid = sc;
        wrong_grid.deformed = ScalarImage(PixelGrid{10, 10, 6.8, 2.9});
        CHECK_THROWS_AS(make_context(wrong_grid, full_settings()), std::invalid_argument);
    }
}
