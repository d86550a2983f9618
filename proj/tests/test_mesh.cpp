#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "iim/mesh.hpp"

using namespace iim;

namespace {

// Brute force: lowest triangle index whose closed triangle contains p.
std::optional<BarycentricHit> brute_locate(const Mesh& m, Vec2 p) {
    for (std::size_t t = 0; t < m.triangle_count(); ++t) {
        const auto& tri = m.triangles()[t];
        const auto w = barycentric(p, m.nodes()[tri[0]], m.nodes()[tri[1]], m.nodes()[tri[2]]);
        if (w[0] >= -1e-12 && w[1] >= -1e-12 && w[2] >= -1e-12) {
            return BarycentricHit{static_cast<std::int32_t>(t), w};
        }
    }
    return std::nullopt;
}

}  // namespace

TEST_SUITE("mesh") {
    TEST_CASE("counts and node layout") {
        const Mesh m(4, 3, 6.8, 2.9);
        CHECK(m.node_count() == 20);
        CHECK(m.triangle_count() == 24);
        CHECK(m.nodes()[m.node_index(2, 1)].x1 == doctest::Approx(3.4));
        CHECK(m.nodes()[m.node_index(2, 1)].x2 == doctest::Approx(2.9 / 3));
        CHECK(m.nodes().back() == Vec2{6.8, 2.9});
    }

    TEST_CASE("cell split convention") {
        const Mesh m(3, 2, 3.0, 2.0);
        const int i = 1, j = 1;
        const auto n00 = m.node_index(i, j), n10 = m.node_index(i + 1, j);
        const auto n01 = m.node_index(i, j + 1), n11 = m.node_index(i + 1, j + 1);
        CHECK(m.triangles()[2 * (j * 3 + i)] == Triangle{n00, n10, n11});
        CHECK(m.triangles()[2 * (j * 3 + i) + 1] == Triangle{n00, n11, n01});
    }

    TEST_CASE("triangles are counter-clockwise and tile the rectangle") {
        const Mesh m(7, 5, 6.8, 2.9);
        double total = 0.0;
        for (std::size_t t = 0; t < m.triangle_count(); ++t) {
            CHECK(m.signed_area(t) == doctest::Approx(0.5 * m.hx() * m.hy()).epsilon(1e-12));
            total += m.signed_area(t);
        }
        CHECK(total == doctest::Approx(6.8 * 2.9).epsilon(1e-12));
    }

    TEST_CASE("boundary tags") {
        const Mesh m(4, 3, 1.0, 1.0);
        CHECK(m.boundary_tags()[m.node_index(0, 0)] == BoundaryTag::Bottom);
        CHECK(m.boundary_tags()[m.node_index(4, 0)] == BoundaryTag::Bottom);
        CHECK(m.boundary_tags()[m.node_index(2, 0)] == BoundaryTag::Bottom);
        CHECK(m.boundary_tags()[m.node_index(0, 3)] == BoundaryTag::Top);
        CHECK(m.boundary_tags()[m.node_index(4, 3)] == BoundaryTag::Top);
        CHECK(m.boundary_tags()[m.node_index(0, 1)] == BoundaryTag::LeftRight);
        CHECK(m.boundary_tags()[m.node_index(4, 2)] == BoundaryTag::LeftRight);
        CHECK(m.boundary_tags()[m.node_index(2, 1)] == BoundaryTag::Interior);
    }

    TEST_CASE("invalid dimensions") {
        CHECK_THROWS_AS(Mesh(0, 3, 1.0, 1.0), std::invalid_argument);
        CHECK_THROWS_AS(Mesh(3, 3, -1.0, 1.0), std::invalid_argument);
        CHECK_THROWS_AS(Mesh(3, 3, 1.0, 0.0), std::invalid_argument);
    }

    TEST_CASE("locate agrees with brute force on random points") {
        const Mesh m(9, 6, 6.8, 2.9);
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> ux(0.0, 6.8), uy(0.0, 2.9);
        for (int k = 0; k < 500; ++k) {
            const Vec2 p{ux(rng), uy(rng)};
            const auto hit = m.locate(p);
            const auto ref = brute_locate(m, p);
            REQUIRE(hit);
            REQUIRE(ref);
            CHECK(hit->triangle_index == ref->triangle_index);
            const auto& tri = m.triangles()[hit->triangle_index];
            Vec2 q{};
            for (int v = 0; v < 3; ++v) q = q + hit->weights[v] * m.nodes()[tri[v]];
            CHECK(q.x1 == doctest::Approx(p.x1).epsilon(1e-12));
            CHECK(q.x2 == doctest::Approx(p.x2).epsilon(1e-12));
            CHECK(hit->weights[0] + hit->weights[1] + hit->weights[2] == doctest::Approx(1.0).epsilon(1e-14));
        }
    }

    TEST_CASE("edges and vertices go to the lowest triangle index") {
        const Mesh m(4, 4, 4.0, 4.0);
        for (int j = 0; j <= 4; ++j) {
            for (int i = 0; i <= 4; ++i) {
                const Vec2 p{double(i), double(j)};
                const auto hit = m.locate(p);
                const auto ref = brute_locate(m, p);
                REQUIRE(hit);
                CHECK(hit->triangle_index == ref->triangle_index);
            }
        }
        for (const Vec2 p : {Vec2{1.5, 1.5}, Vec2{2.0, 2.5}, Vec2{2.5, 3.0}, Vec2{0.0, 0.5}, Vec2{4.0, 3.5}}) {
            CHECK(m.locate(p)->triangle_index == brute_locate(m, p)->triangle_index);
        }
    }

    TEST_CASE("points outside return nothing") {
        const Mesh m(4, 4, 4.0, 4.0);
        CHECK_FALSE(m.locate({-0.01, 1.0}));
        CHECK_FALSE(m.locate({1.0, 4.01}));
        CHECK(m.locate({4.0, 4.0}));
        CHECK(m.locate({-1e-11, 0.0}));
    }

    TEST_CASE("csv export") {
        const Mesh m(2, 1, 1.0, 1.0);
        std::ostringstream nodes, tris;
        m.write_csv(nodes, tris);
        std::size_t node_lines = 0, tri_lines = 0;
        for (char c : nodes.str()) node_lines += c == '\n';
        for (char c : tris.str()) tri_lines += c == '\n';
        CHECK(node_lines == m.node_count() + 1);
        CHECK(tri_lines == m.triangle_count() + 1);
    }
}
