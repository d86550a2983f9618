#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "iim/kernels.hpp"

namespace iim::kernels {
namespace {

constexpr double kInsideTol = 1e-12;
constexpr double kSnapTol = 1e-9;
constexpr std::int32_t kUnowned = std::numeric_limits<std::int32_t>::max();

bool finite(Vec2 p) { return std::isfinite(p.x1) && std::isfinite(p.x2); }

struct PixelRange {
    std::int32_t c0, c1, r0, r1;
};

// Pixels whose centres can fall inside the bounding box of the triangle.
PixelRange candidate_pixels(const PixelGrid& grid, Vec2 a, Vec2 b, Vec2 c) {
    const double xmin = std::min({a.x1, b.x1, c.x1}) / grid.hx() - 0.5;
    const double xmax = std::max({a.x1, b.x1, c.x1}) / grid.hx() - 0.5;
    const double ymin = std::min({a.x2, b.x2, c.x2}) / grid.hy() - 0.5;
    const double ymax = std::max({a.x2, b.x2, c.x2}) / grid.hy() - 0.5;
    PixelRange r;
    r.c0 = std::max(0, static_cast<std::int32_t>(std::ceil(xmin - kSnapTol)));
    r.c1 = std::min(grid.width - 1, static_cast<std::int32_t>(std::floor(xmax + kSnapTol)));
    r.r0 = std::max(0, static_cast<std::int32_t>(std::ceil(ymin - kSnapTol)));
    r.r1 = std::min(grid.height - 1, static_cast<std::int32_t>(std::floor(ymax + kSnapTol)));
    return r;
}

bool usable(Vec2 a, Vec2 b, Vec2 c) {
    if (!finite(a) || !finite(b) || !finite(c)) return false;
    const double det = (b.x1 - a.x1) * (c.x2 - a.x2) - (c.x1 - a.x1) * (b.x2 - a.x2);
    const double scale = std::max({std::abs(b.x1 - a.x1), std::abs(c.x1 - a.x1), std::abs(b.x2 - a.x2),
                                   std::abs(c.x2 - a.x2)});
    return std::abs(det) > 1e-14 * scale * scale;
}

bool inside(const std::array<double, 3>& w) {
    return w[0] >= -kInsideTol && w[1] >= -kInsideTol && w[2] >= -kInsideTol;
}

// Rounding-level weights are flushed so that pixel centres coinciding with
// vertices or edges reproduce nodal values exactly.
std::array<double, 3> snapped(std::array<double, 3> w) {
    double sum = 0.0;
    for (double& v : w) {
        if (std::abs(v) < kInsideTol) v = 0.0;
        sum += v;
    }
    for (double& v : w) v /= sum;
    return w;
}

double snap_coordinate(double f) {
    const double r = std::round(f);
    return std::abs(f - r) < kSnapTol ? r : f;
}

}  // namespace

std::vector<Triangle> lattice_triangles(const PixelGrid& grid) {
    if (grid.width < 2 || grid.height < 2) {
        throw std::invalid_argument("pixel lattice needs at least 2x2 pixels");
    }
    std::vector<Triangle> tris;
    tris.reserve(2 * static_cast<std::size_t>(grid.width - 1) * (grid.height - 1));
    for (std::int32_t r = 0; r + 1 < grid.height; ++r) {
        for (std::int32_t c = 0; c + 1 < grid.width; ++c) {
            const std::int32_t n00 = r * grid.width + c;
            const std::int32_t n10 = n00 + 1;
            const std::int32_t n01 = n00 + grid.width;
            const std::int32_t n11 = n01 + 1;
            tris.push_back({n00, n10, n11});
            tris.push_back({n00, n11, n01});
        }
    }
    return tris;
}

std::vector<PixelHit> rasterize(const PixelGrid& grid, std::span<const Vec2> points, std::span<const Triangle> triangles) {
    std::vector<std::int32_t> owner(grid.size(), kUnowned);
    const auto ntri = static_cast<std::int64_t>(triangles.size());
#pragma omp parallel for schedule(dynamic, 256)
    for (std::int64_t t = 0; t < ntri; ++t) {
        const auto& tri = triangles[t];
        const Vec2 a = points[tri[0]];
        const Vec2 b = points[tri[1]];
        const Vec2 c = points[tri[2]];
        if (!usable(a, b, c)) continue;
        const auto range = candidate_pixels(grid, a, b, c);
        for (std::int32_t r = range.r0; r <= range.r1; ++r) {
            for (std::int32_t col = range.c0; col <= range.c1; ++col) {
                if (!inside(barycentric(grid.center(col, r), a, b, c))) continue;
                std::atomic_ref<std::int32_t> slot(owner[static_cast<std::size_t>(r) * grid.width + col]);
                std::int32_t current = slot.load(std::memory_order_relaxed);
                const auto mine = static_cast<std::int32_t>(t);
                while (mine < current && !slot.compare_exchange_weak(current, mine, std::memory_order_relaxed)) {
                }
            }
        }
    }

    std::vector<PixelHit> hits(grid.size());
    const auto npix = static_cast<std::int64_t>(grid.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < npix; ++i) {
        if (owner[i] == kUnowned) continue;
        const auto& tri = triangles[owner[i]];
        hits[i].triangle = owner[i];
        hits[i].weights = snapped(barycentric(grid.center(static_cast<std::size_t>(i)), points[tri[0]], points[tri[1]],
                                              points[tri[2]]));
    }
    return hits;
}

double sample_lattice(const ScalarImage& img, Vec2 p, double fill) {
    const PixelGrid& g = img.grid();
    constexpr double tol = 1e-10;
    if (!finite(p) || p.x1 < -tol || p.x1 > g.lx1 + tol || p.x2 < -tol || p.x2 > g.lx2 + tol) {
        return fill;
    }
    const double fx = std::clamp(snap_coordinate(p.x1 / g.hx() - 0.5), 0.0, static_cast<double>(g.width - 1));
    const double fy = std::clamp(snap_coordinate(p.x2 / g.hy() - 0.5), 0.0, static_cast<double>(g.height - 1));
    const auto i = std::min(static_cast<std::int32_t>(fx), g.width - 2);
    const auto j = std::min(static_cast<std::int32_t>(fy), g.height - 2);
    const double s = fx - i;
    const double t = fy - j;
    const double v00 = img.at(i, j);
    const double v11 = img.at(i + 1, j + 1);
    if (t <= s) {
        const double v10 = img.at(i + 1, j);
        return (1.0 - s) * v00 + (s - t) * v10 + t * v11;
    }
    const double v01 = img.at(i, j + 1);
    return (1.0 - t) * v00 + s * v11 + (t - s) * v01;
}

void interpolate_at_pixels(std::span<const BarycentricHit> hits, std::span<const Triangle> triangles,
                           std::span<const Vec2> nodal, std::span<Vec2> out) {
    const auto n = static_cast<std::int64_t>(hits.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto& tri = triangles[hits[i].triangle_index];
        const auto& w = hits[i].weights;
        out[i] = Vec2{w[0] * nodal[tri[0]].x1 + w[1] * nodal[tri[1]].x1 + w[2] * nodal[tri[2]].x1,
                  w[0] * nodal[tri[0]].x2 + w[1] * nodal[tri[1]].x2 + w[2] * nodal[tri[2]].x2};
    }
}

void compose(const ScalarImage& src, std::span<const Vec2> displacement, double fill, ScalarImage& out) {
    const PixelGrid& g = src.grid();
    const auto n = static_cast<std::int64_t>(g.size());
    auto dst = out.values();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        dst[i] = sample_lattice(src, g.center(static_cast<std::size_t>(i)) + displacement[i], fill);
    }
}

void gather_hits(std::span<const PixelHit> hits, std::span<const Triangle> triangles, std::span<const double> nodal,
                 double fill, std::span<double> out) {
    const auto n = static_cast<std::int64_t>(hits.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        if (hits[i].triangle < 0) {
            out[i] = fill;
            continue;
        }
        const auto& tri = triangles[hits[i].triangle];
        const auto& w = hits[i].weights;
        out[i] = w[0] * nodal[tri[0]] + w[1] * nodal[tri[1]] + w[2] * nodal[tri[2]];
    }
}

namespace {

std::vector<double> gaussian_kernel(double sigma) {
    const auto radius = static_cast<std::int32_t>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * static_cast<std::size_t>(radius) + 1);
    double sum = 0.0;
    for (std::int32_t d = -radius; d <= radius; ++d) {
        k[d + radius] = std::exp(-0.5 * d * d / (sigma * sigma));
        sum += k[d + radius];
    }
    for (double& v : k) v /= sum;
    return k;
}

}  // namespace

void gaussian_blur(ScalarImage& img, double sigma) {
    if (!(sigma > 0.0)) return;
    const auto k = gaussian_kernel(sigma);
    const auto radius = static_cast<std::int32_t>(k.size() / 2);
    const std::int32_t w = img.width();
    const std::int32_t h = img.height();
    std::vector<double> tmp(img.values().size());
    auto src = img.values();
#pragma omp parallel for schedule(static)
    for (std::int32_t r = 0; r < h; ++r) {
        for (std::int32_t c = 0; c < w; ++c) {
            double s = 0.0;
            for (std::int32_t d = -radius; d <= radius; ++d) {
                s += k[d + radius] * src[static_cast<std::size_t>(r) * w + std::clamp(c + d, 0, w - 1)];
            }
            tmp[static_cast<std::size_t>(r) * w + c] = s;
        }
    }
#pragma omp parallel for schedule(static)
    for (std::int32_t r = 0; r < h; ++r) {
        for (std::int32_t c = 0; c < w; ++c) {
            double s = 0.0;
            for (std::int32_t d = -radius; d <= radius; ++d) {
                s += k[d + radius] * tmp[static_cast<std::size_t>(std::clamp(r + d, 0, h - 1)) * w + c];
            }
            src[static_cast<std::size_t>(r) * w + c] = s;
        }
    }
}

namespace reference {

std::vector<PixelHit> rasterize(const PixelGrid& grid, std::span<const Vec2> points, std::span<const Triangle> triangles) {
    std::vector<PixelHit> hits(grid.size());
    for (std::size_t t = 0; t < triangles.size(); ++t) {
        const auto& tri = triangles[t];
        const Vec2 a = points[tri[0]];
        const Vec2 b = points[tri[1]];
        const Vec2 c = points[tri[2]];
        if (!usable(a, b, c)) continue;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (hits[i].triangle >= 0) continue;
            const auto w = barycentric(grid.center(i), a, b, c);
            if (inside(w)) {
                hits[i].triangle = static_cast<std::int32_t>(t);
                hits[i].weights = snapped(w);
            }
        }
    }
    return hits;
}

void gaussian_blur(ScalarImage& img, double sigma) {
    if (!(sigma > 0.0)) return;
    const auto k = gaussian_kernel(sigma);
    const auto radius = static_cast<std::int32_t>(k.size() / 2);
    const ScalarImage src = img;
    for (std::int32_t r = 0; r < img.height(); ++r) {
        for (std::int32_t c = 0; c < img.width(); ++c) {
            double s = 0.0;
            for (std::int32_t dr = -radius; dr <= radius; ++dr) {
                for (std::int32_t dc = -radius; dc <= radius; ++dc) {
                    s += k[dr + radius] * k[dc + radius] *
                         src.at(std::clamp(c + dc, 0, img.width() - 1), std::clamp(r + dr, 0, img.height() - 1));
                }
            }
            img.at(c, r) = s;
        }
    }
}

void compose(const ScalarImage& src, std::span<const Vec2> displacement, double fill, ScalarImage& out) {
    // Generic point-in-triangle search over the lattice instead of the
    // closed-form cell lookup.
    const PixelGrid& g = src.grid();
    const auto tris = lattice_triangles(g);
    std::vector<Vec2> nodes(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) nodes[i] = g.center(i);
    for (std::size_t i = 0; i < g.size(); ++i) {
        Vec2 p = g.center(i) + displacement[i];
        if (p.x1 < -1e-10 || p.x1 > g.lx1 + 1e-10 || p.x2 < -1e-10 || p.x2 > g.lx2 + 1e-10) {
            out.values()[i] = fill;
            continue;
        }
        p.x1 = std::clamp(p.x1, nodes.front().x1, nodes.back().x1);
        p.x2 = std::clamp(p.x2, nodes.front().x2, nodes.back().x2);
        double value = fill;
        for (const auto& tri : tris) {
            const auto w = barycentric(p, nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
            if (inside(w)) {
                value = w[0] * src.values()[tri[0]] + w[1] * src.values()[tri[1]] + w[2] * src.values()[tri[2]];
                break;
            }
        }
        out.values()[i] = value;
    }
}

}  // namespace reference
}  // namespace iim::kernels
