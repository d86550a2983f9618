#include "iim/mesh.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace iim {

Mesh::Mesh(std::int32_t nx, std::int32_t ny, double lx1, double lx2) : nx_(nx), ny_(ny), lx1_(lx1), lx2_(lx2) {
    if (nx < 1 || ny < 1) {
        throw std::invalid_argument("mesh: cell counts must be >= 1, got " + std::to_string(nx) + "x" + std::to_string(ny));
    }
    if (!(lx1 > 0.0) || !(lx2 > 0.0) || !std::isfinite(lx1) || !std::isfinite(lx2)) {
        throw std::invalid_argument("mesh: side lengths must be positive and finite");
    }

    const double hx = lx1 / nx;
    const double hy = lx2 / ny;
    nodes_.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
    tags_.reserve(nodes_.capacity());
    for (std::int32_t j = 0; j <= ny; ++j) {
        // Exact end coordinates so that boundary nodes sit on the boundary.
        const double y = (j == ny) ? lx2 : j * hy;
        for (std::int32_t i = 0; i <= nx; ++i) {
            const double x = (i == nx) ? lx1 : i * hx;
            nodes_.push_back({x, y});
            if (j == 0) {
                tags_.push_back(BoundaryTag::Bottom);
            } else if (j == ny) {
                tags_.push_back(BoundaryTag::Top);
            } else if (i == 0 || i == nx) {
                tags_.push_back(BoundaryTag::LeftRight);
            } else {
                tags_.push_back(BoundaryTag::Interior);
            }
        }
    }

    triangles_.reserve(2 * static_cast<std::size_t>(nx) * ny);
    for (std::int32_t j = 0; j < ny; ++j) {
        for (std::int32_t i = 0; i < nx; ++i) {
            const std::int32_t n00 = node_index(i, j);
            const std::int32_t n10 = node_index(i + 1, j);
            const std::int32_t n01 = node_index(i, j + 1);
            const std::int32_t n11 = node_index(i + 1, j + 1);
            triangles_.push_back({n00, n10, n11});
            triangles_.push_back({n00, n11, n01});
        }
    }
}

double Mesh::signed_area(std::size_t t) const {
    const auto& tri = triangles_[t];
    const Vec2 a = nodes_[tri[0]];
    const Vec2 b = nodes_[tri[1]];
    const Vec2 c = nodes_[tri[2]];
    return 0.5 * ((b.x1 - a.x1) * (c.x2 - a.x2) - (c.x1 - a.x1) * (b.x2 - a.x2));
}

Vec2 Mesh::centroid(std::size_t t) const {
    const auto& tri = triangles_[t];
    const Vec2 a = nodes_[tri[0]];
    const Vec2 b = nodes_[tri[1]];
    const Vec2 c = nodes_[tri[2]];
    return {(a.x1 + b.x1 + c.x1) / 3.0, (a.x2 + b.x2 + c.x2) / 3.0};
}

std::optional<BarycentricHit> Mesh::locate(Vec2 p, double tol) const {
    if (!std::isfinite(p.x1) || !std::isfinite(p.x2)) {
        return std::nullopt;
    }
    if (p.x1 < -tol || p.x1 > lx1_ + tol || p.x2 < -tol || p.x2 > lx2_ + tol) {
        return std::nullopt;
    }

    const double fx = p.x1 / hx();
    const double fy = p.x2 / hy();
    const double ex = tol / hx();
    const double ey = tol / hy();

    auto cell_of = [](double f, double eps, std::int32_t n) {
        auto c = static_cast<std::int32_t>(std::floor(f));
        // On a grid line the cell below/left has the lower triangle indices.
        if (c > 0 && f - c <= eps) {
            --c;
        }
        if (c < 0) c = 0;
        if (c > n - 1) c = n - 1;
        return c;
    };
    const std::int32_t i = cell_of(fx, ex, nx_);
    const std::int32_t j = cell_of(fy, ey, ny_);
    const double s = fx - i;
    const double t = fy - j;

    BarycentricHit hit;
    const std::int32_t base = 2 * (j * nx_ + i);
    if (t <= s + std::max(ex, ey)) {
        hit.triangle_index = base;
        hit.weights = {1.0 - s, s - t, t};
    } else {
        hit.triangle_index = base + 1;
        hit.weights = {1.0 - t, s, t - s};
    }
    return hit;
}

void Mesh::write_csv(std::ostream& nodes_out, std::ostream& triangles_out) const {
    nodes_out << "node,x1,x2,tag\n";
    nodes_out.precision(17);
    for (std::size_t n = 0; n < nodes_.size(); ++n) {
        nodes_out << n << ',' << nodes_[n].x1 << ',' << nodes_[n].x2 << ',' << static_cast<int>(tags_[n]) << '\n';
    }
    triangles_out << "triangle,n0,n1,n2\n";
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
        const auto& tri = triangles_[t];
        triangles_out << t << ',' << tri[0] << ',' << tri[1] << ',' << tri[2] << '\n';
    }
}

Mesh build_uniform_mesh(std::int32_t nx, std::int32_t ny, double lx1, double lx2) { return Mesh(nx, ny, lx1, lx2); }

std::array<double, 3> barycentric(Vec2 p, Vec2 a, Vec2 b, Vec2 c) {
    const double det = (b.x1 - a.x1) * (c.x2 - a.x2) - (c.x1 - a.x1) * (b.x2 - a.x2);
    const double wb = ((p.x1 - a.x1) * (c.x2 - a.x2) - (c.x1 - a.x1) * (p.x2 - a.x2)) / det;
    const double wc = ((b.x1 - a.x1) * (p.x2 - a.x2) - (p.x1 - a.x1) * (b.x2 - a.x2)) / det;
    return {1.0 - wb - wc, wb, wc};
}

}  // namespace iim
