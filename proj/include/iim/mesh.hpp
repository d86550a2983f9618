#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

namespace iim {

/// Point or vector in the sample plane, in millimetres.
struct Vec2 {
    double x1 = 0.0;
    double x2 = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x1 + b.x1, a.x2 + b.x2}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x1 - b.x1, a.x2 - b.x2}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x1, s * a.x2}; }
    friend bool operator==(Vec2 a, Vec2 b) = default;
};

enum class BoundaryTag : std::uint8_t { Interior, Bottom, Top, LeftRight };

using Triangle = std::array<std::int32_t, 3>;

/// Triangle containing a point, with barycentric weights of its three vertices.
struct BarycentricHit {
    std::int32_t triangle_index = -1;
    std::array<double, 3> weights{};
};

/// Uniform right-triangle discretization of (0,lx1) x (0,lx2).
///
/// Nodes are ordered row-major with x1 running fastest: node (i, j) has index
/// j*(nx+1) + i. Cell (i, j) is split along its lower-left to upper-right
/// diagonal into triangle 2*(j*nx+i) (below the diagonal) and 2*(j*nx+i)+1
/// (above it), both counter-clockwise.
class Mesh {
public:
    Mesh(std::int32_t nx, std::int32_t ny, double lx1, double lx2);

    std::int32_t nx() const { return nx_; }
    std::int32_t ny() const { return ny_; }
    double lx1() const { return lx1_; }
    double lx2() const { return lx2_; }
    double hx() const { return lx1_ / nx_; }
    double hy() const { return lx2_ / ny_; }
    double area() const { return lx1_ * lx2_; }

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t triangle_count() const { return triangles_.size(); }

    const std::vector<Vec2>& nodes() const { return nodes_; }
    const std::vector<Triangle>& triangles() const { return triangles_; }
    const std::vector<BoundaryTag>& boundary_tags() const { return tags_; }

    std::int32_t node_index(std::int32_t i, std::int32_t j) const { return j * (nx_ + 1) + i; }

    double signed_area(std::size_t t) const;
    Vec2 centroid(std::size_t t) const;

    /// O(1) point location. Points on shared edges resolve to the lowest
    /// triangle index; points farther than `tol` outside the closed
    /// rectangle return nullopt.
    std::optional<BarycentricHit> locate(Vec2 p, double tol = 1e-10) const;

    void write_csv(std::ostream& nodes_out, std::ostream& triangles_out) const;

private:
    std::int32_t nx_;
    std::int32_t ny_;
    double lx1_;
    double lx2_;
    std::vector<Vec2> nodes_;
    std::vector<Triangle> triangles_;
    std::vector<BoundaryTag> tags_;
};

Mesh build_uniform_mesh(std::int32_t nx, std::int32_t ny, double lx1, double lx2);

inline std::optional<BarycentricHit> locate_point(const Mesh& mesh, Vec2 p) { return mesh.locate(p); }

/// Barycentric coordinates of p with respect to triangle (a, b, c).
std::array<double, 3> barycentric(Vec2 p, Vec2 a, Vec2 b, Vec2 c);

}  // namespace iim
