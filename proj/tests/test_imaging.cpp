#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "iim/elasticity.hpp"
#include "iim/image.hpp"
#include "iim/noise.hpp"
#include "iim/phantom.hpp"
#include "iim/warp.hpp"

using namespace iim;

namespace {

ScalarImage smooth_image(PixelGrid g) {
    ScalarImage img(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Vec2 x = g.center(i);
        img.values()[i] = 0.5 + 0.3 * std::sin(1.3 * x.x1) * std::cos(2.1 * x.x2) + 0.1 * x.x2;
    }
    return img;
}

ScalarImage textured_image(PixelGrid g, std::uint64_t seed) {
    ScalarImage img(g);
    for (std::size_t i = 0; i < g.size(); ++i) img.values()[i] = 0.5 + 0.4 * keyed_uniform(seed, i);
    return img;
}

double relative_change(const ScalarImage& out, const ScalarImage& in) {
    double d = 0.0, n = 0.0;
    for (std::size_t i = 0; i < in.values().size(); ++i) {
        d += (out.values()[i] - in.values()[i]) * (out.values()[i] - in.values()[i]);
        n += in.values()[i] * in.values()[i];
    }
    return std::sqrt(d / n);
}

std::filesystem::path scratch(const char* name) {
    const auto dir = std::filesystem::temp_directory_path() / "iim_imaging_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_SUITE("imaging") {
    TEST_CASE("zero displacement is the identity in both modes") {
        const PixelGrid g{64, 27, 6.8, 2.9};
        const auto src = textured_image(g, 3);
        const std::vector<Vec2> zero(g.size(), Vec2{0.0, 0.0});
        for (auto mode : {WarpMode::PushForward, WarpMode::Composition}) {
            const auto out = warp_image(src, zero, mode);
            for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(out.values()[i] - src.values()[i]) <= 1e-12);
        }
    }

    TEST_CASE("zero displacement field from the mesh is the identity") {
        const Mesh m(40, 17, 6.8, 2.9);
        const auto src = textured_image(pixel_grid_of(m), 8);
        const DisplacementField u{std::vector<Vec2>(m.node_count(), Vec2{0.0, 0.0})};
        for (auto mode : {WarpMode::PushForward, WarpMode::Composition}) {
            const auto out = warp_image(src, u, m, mode);
            for (std::size_t i = 0; i < out.values().size(); ++i) {
                CHECK(std::abs(out.values()[i] - src.values()[i]) <= 1e-12);
            }
        }
    }

    TEST_CASE("integer downward shift matches a direct pixel shift") {
        const PixelGrid g{30, 20, 6.8, 2.9};
        const auto src = textured_image(g, 5);
        for (int k : {1, 3, 7}) {
            const std::vector<Vec2> d(g.size(), Vec2{0.0, -k * g.hy()});
            const auto push = warp_image(src, d, WarpMode::PushForward, 0.0);
            const auto comp = warp_image(src, d, WarpMode::Composition, 0.0);
            for (int r = 0; r < g.height; ++r) {
                for (int c = 0; c < g.width; ++c) {
                    const double want_push = r + k < g.height ? src.at(c, r + k) : 0.0;
                    const double want_comp = r - k >= 0 ? src.at(c, r - k) : 0.0;
                    CHECK(push.at(c, r) == want_push);
                    CHECK(comp.at(c, r) == want_comp);
                }
            }
        }
    }

    TEST_CASE("true compression shrinks the support by the compressed pixel rows") {
        const Mesh m(254, 108, 6.8, 2.9);
        const std::vector<std::int32_t> labels(m.triangle_count(), 0);
        const MaterialField mat(m, labels, {lame_from_moduli({100.0, 0.45})});
        const auto u = solve_displacement(m, mat, ElasticityBVP{0.267, {}, {}, {}});
        const ScalarImage ones(pixel_grid_of(m), 1.0);
        const auto out = warp_image(ones, u, m, WarpMode::PushForward, 0.0);
        for (int c : {20, 127, 233}) {
            int covered = 0;
            for (int r = 0; r < out.height(); ++r) covered += out.at(c, r) > 0.0;
            CHECK(out.height() - covered == 10);
            CHECK(out.at(c, 0) == doctest::Approx(1.0));
        }
    }

    TEST_CASE("clamping keeps every target inside the frame") {
        const PixelGrid g{20, 10, 2.0, 1.0};
        std::vector<Vec2> d(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) d[i] = {0.3 * keyed_uniform(1, i), 0.3 * keyed_uniform(2, i)};
        auto clamped = d;
        clamp_targets_to_frame(g, clamped);
        const auto before = in_frame_mask(g, d);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const Vec2 t = g.center(i) + clamped[i];
            CHECK(t.x1 >= 0.0);
            CHECK(t.x1 <= g.lx1);
            CHECK(t.x2 >= 0.0);
            CHECK(t.x2 <= g.lx2);
            if (before[i]) CHECK(clamped[i] == d[i]);
        }
    }

    TEST_CASE("push-forward and composition with opposite displacements converge together") {
        double previous = 0.0;
        for (int level = 0; level < 3; ++level) {
            const int scale = 1 << level;
            const PixelGrid g{68 * scale, 29 * scale, 6.8, 2.9};
            const auto src = smooth_image(g);
            std::vector<Vec2> d(g.size()), minus(g.size());
            for (std::size_t i = 0; i < g.size(); ++i) {
                const Vec2 x = g.center(i);
                d[i] = {2.0 * g.hx() * std::sin(x.x1 + 0.5 * x.x2), 1.4 * g.hy() * std::cos(0.8 * x.x1 - x.x2)};
                minus[i] = {-d[i].x1, -d[i].x2};
            }
            const auto push = warp_image(src, d, WarpMode::PushForward);
            const auto comp = warp_image(src, minus, WarpMode::Composition);
            double err = 0.0;
            for (int r = 4 * scale; r < g.height - 4 * scale; ++r) {
                for (int c = 4 * scale; c < g.width - 4 * scale; ++c) err = std::max(err, std::abs(push.at(c, r) - comp.at(c, r)));
            }
            if (level > 0) CHECK(err <= 0.5 * previous);
            previous = err;
        }
        CHECK(previous < 1e-3);
    }

    TEST_CASE("relative noise has the requested norm") {
        const PixelGrid g{254, 108, 6.8, 2.9};
        const auto img = textured_image(g, 12);
        for (double delta : {0.0, 0.01, 0.05, 0.1, 0.37}) {
            const auto out = add_relative_noise(img, {delta, 99});
            CHECK(std::abs(relative_change(out, img) - delta) <= 1e-12);
            CHECK(out.grid() == img.grid());
        }
        CHECK(add_relative_noise(img, {0.0, 5}) == img);
    }

    TEST_CASE("noise is deterministic per seed") {
        const PixelGrid g{80, 30, 6.8, 2.9};
        const auto img = textured_image(g, 1);
        const auto a = add_relative_noise(img, {0.05, 7});
        const auto b = add_relative_noise(img, {0.05, 7});
        const auto c = add_relative_noise(img, {0.05, 8});
        CHECK(std::memcmp(a.values().data(), b.values().data(), a.values().size_bytes()) == 0);
        std::size_t differing = 0;
        for (std::size_t i = 0; i < g.size(); ++i) differing += a.values()[i] != c.values()[i];
        CHECK(differing > g.size() * 9 / 10);
        CHECK(relative_change(a, img) == doctest::Approx(relative_change(c, img)).epsilon(1e-12));
        CHECK_THROWS_AS(add_relative_noise(img, {-0.1, 1}), std::invalid_argument);
    }

    TEST_CASE("noise generator is mean-zero and uniform") {
        const std::size_t n = 1000000;
        double sum = 0.0, sq = 0.0, lo = 1.0, hi = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = keyed_uniform(derive_seed(1, "noise-reference", 0), i);
            sum += v;
            sq += v * v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const double se = std::sqrt(1.0 / 3.0 / n);
        CHECK(std::abs(sum / n) <= 3.0 * se);
        CHECK(sq / n == doctest::Approx(1.0 / 3.0).epsilon(0.01));
        CHECK(lo >= -1.0);
        CHECK(hi < 1.0);
    }

    TEST_CASE("sub-seeds differ by tag and level") {
        CHECK(derive_seed(1, "noise-reference", 0) != derive_seed(1, "noise-deformed", 0));
        CHECK(derive_seed(1, "noise-reference", 0) != derive_seed(1, "noise-reference", 1));
        CHECK(derive_seed(1, "noise-reference", 0) != derive_seed(2, "noise-reference", 0));
        CHECK(derive_seed(3, "x", 4) == derive_seed(3, "x", 4));
    }

    TEST_CASE("pgm and csv round trips") {
        const PixelGrid g{33, 14, 6.8, 2.9};
        const auto img = textured_image(g, 4);
        write_pgm(img, scratch("img.pgm"));
        const auto pgm = read_pgm(scratch("img.pgm"));
        CHECK(pgm.grid() == g);
        for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(pgm.values()[i] - img.values()[i]) <= 0.5 / 65535 + 1e-15);
        write_image_csv(img, scratch("img.csv"));
        CHECK(read_image_csv(scratch("img.csv")) == img);
        CHECK_THROWS(read_pgm(scratch("missing.pgm")));
    }

    TEST_CASE("pgm stores the top row first") {
        const PixelGrid g{2, 2, 1.0, 1.0};
        ScalarImage img(g, 0.0);
        img.at(0, 1) = 1.0;
        write_pgm(img, scratch("flip.pgm"));
        std::ifstream in(scratch("flip.pgm"), std::ios::binary);
        const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        REQUIRE(bytes.size() >= 8);
        const auto* tail = reinterpret_cast<const unsigned char*>(bytes.data() + bytes.size() - 8);
        CHECK(tail[0] == 0xff);
        CHECK(tail[1] == 0xff);
        for (int k = 2; k < 8; ++k) CHECK(tail[k] == 0);
    }

    TEST_CASE("phantom presets") {
        for (const char* name : {"single", "four"}) {
            const Mesh m(254, 108, 6.8, 2.9);
            const auto spec = phantom_preset(name);
            const auto p = generate_phantom(spec, m);
            CHECK(p.image.min() == 0.0);
            CHECK(p.image.max() == 1.0);
            CHECK(p.region_count == spec.region_count());
            double total = 0.0;
            for (double a : region_areas(m, p.labels, p.region_count)) {
                CHECK(a > 0.0);
                total += a;
            }
            CHECK(total == doctest::Approx(19.72).epsilon(1e-12));
            const auto again = generate_phantom(spec, m);
            CHECK(std::memcmp(p.image.values().data(), again.image.values().data(), p.image.values().size_bytes()) == 0);
            CHECK(p.labels == again.labels);
        }
        CHECK(phantom_preset("four").region_count() == 5);
    }

    TEST_CASE("phantom at the full grid") {
        const Mesh m(508, 216, 6.8, 2.9);
        auto spec = phantom_preset("single");
        spec.seed = 42;
        const auto p = generate_phantom(spec, m);
        CHECK(p.image.width() == 508);
        CHECK(p.image.height() == 216);
        CHECK(p.image.min() == 0.0);
        CHECK(p.image.max() == 1.0);
    }

    TEST_CASE("phantom labels follow the inclusion shapes") {
        const Mesh m(68, 29, 6.8, 2.9);
        const auto spec = phantom_preset("single");
        const auto p = generate_phantom(spec, m);
        for (std::size_t t = 0; t < m.triangle_count(); ++t) {
            const auto& tri = m.triangles()[t];
            const Vec2 c = (1.0 / 3.0) * (m.nodes()[tri[0]] + m.nodes()[tri[1]] + m.nodes()[tri[2]]);
            CHECK(p.labels[t] == (spec.inclusions[0].shape.contains(c) ? 1 : 0));
        }
    }

    TEST_CASE("invalid phantoms are rejected") {
        auto spec = phantom_preset("single");
        spec.inclusions.push_back({{{3.5, 1.5}, {0.5, 0.5}}, 0.8, 2});
        CHECK_THROWS_AS(validate_phantom(spec, 6.8, 2.9), std::invalid_argument);
        auto outside = phantom_preset("single");
        outside.inclusions[0].shape.center = {6.5, 1.4};
        CHECK_THROWS_AS(validate_phantom(outside, 6.8, 2.9), std::invalid_argument);
        auto gap = phantom_preset("single");
        gap.inclusions[0].region = 2;
        CHECK_THROWS_AS(validate_phantom(gap, 6.8, 2.9), std::invalid_argument);
    }
}
