#include "iim/warp.hpp"

#include <algorithm>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "iim/kernels.hpp"

namespace iim {

PixelSampler::PixelSampler(const Mesh& mesh) : mesh_(&mesh), grid_(pixel_grid_of(mesh)) {
    hits_.resize(grid_.size());
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        // Pixel centres are interior, so location cannot fail.
        hits_[i] = *mesh.locate(grid_.center(i));
    }
}

std::vector<Vec2> PixelSampler::displacement_at_pixels(const DisplacementField& u) const {
    std::vector<Vec2> out(grid_.size());
    displacement_at_pixels(u, out);
    return out;
}

void PixelSampler::displacement_at_pixels(const DisplacementField& u, std::span<Vec2> out) const {
    if (u.values.size() != mesh_->node_count()) {
        throw std::invalid_argument("displacement field does not match the mesh");
    }
    kernels::interpolate_at_pixels(hits_, mesh_->triangles(), u.values, out);
}

ScalarImage warp_image(const ScalarImage& source, std::span<const Vec2> pixel_displacement, WarpMode mode, double fill) {
    const PixelGrid& g = source.grid();
    if (pixel_displacement.size() != g.size()) {
        throw std::invalid_argument("warp_image: displacement sample count does not match the image");
    }
    ScalarImage out(g);
    if (mode == WarpMode::Composition) {
        kernels::compose(source, pixel_displacement, fill, out);
        return out;
    }
    std::vector<Vec2> moved(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        moved[i] = g.center(i) + pixel_displacement[i];
    }
    const auto tris = kernels::lattice_triangles(g);
    const auto hits = kernels::rasterize(g, moved, tris);
    kernels::gather_hits(hits, tris, source.values(), fill, out.values());
    return out;
}

ScalarImage warp_image(const ScalarImage& source, const DisplacementField& u, const Mesh& mesh, WarpMode mode,
                       double fill) {
    if (!(source.grid() == pixel_grid_of(mesh))) {
        throw std::invalid_argument("warp_image: image grid does not match the mesh");
    }
    const PixelSampler sampler(mesh);
    return warp_image(source, sampler.displacement_at_pixels(u), mode, fill);
}

ScalarImage round_trip(const ScalarImage& image, const DisplacementField& u, const Mesh& mesh, double fill) {
    const PixelGrid& g = image.grid();
    if (!(g == pixel_grid_of(mesh))) {
        throw std::invalid_argument("round_trip: image grid does not match the mesh");
    }
    const PixelSampler sampler(mesh);
    const ScalarImage pushed = warp_image(image, sampler.displacement_at_pixels(u), WarpMode::PushForward, fill);

    std::vector<Vec2> deformed(mesh.node_count());
    for (std::size_t n = 0; n < deformed.size(); ++n) {
        deformed[n] = mesh.nodes()[n] + u.values[n];
    }
    const auto inverse_hits = kernels::rasterize(g, deformed, mesh.triangles());

    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<Vec2> pulled_back(g.size(), Vec2{nan, nan});
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto& hit = inverse_hits[i];
        if (hit.triangle < 0) continue;
        const auto& tri = mesh.triangles()[hit.triangle];
        Vec2 x{};
        for (int k = 0; k < 3; ++k) x = x + hit.weights[k] * mesh.nodes()[tri[k]];
        pulled_back[i] = x;
    }
    const auto tris = kernels::lattice_triangles(g);
    const auto hits = kernels::rasterize(g, pulled_back, tris);
    ScalarImage out(g);
    kernels::gather_hits(hits, tris, pushed.values(), fill, out.values());
    return out;
}

void clamp_targets_to_frame(const PixelGrid& grid, std::span<Vec2> pixel_displacement) {
    if (pixel_displacement.size() != grid.size()) {
        throw std::invalid_argument("clamp_targets_to_frame: displacement size does not match the grid");
    }
    const auto n = static_cast<std::int64_t>(grid.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const Vec2 x = grid.center(static_cast<std::size_t>(i));
        Vec2& d = pixel_displacement[i];
        const double t1 = x.x1 + d.x1;
        const double t2 = x.x2 + d.x2;
        if (t1 < 0.0 || t1 > grid.lx1) d.x1 = std::clamp(t1, 0.0, grid.lx1) - x.x1;
        if (t2 < 0.0 || t2 > grid.lx2) d.x2 = std::clamp(t2, 0.0, grid.lx2) - x.x2;
    }
}

std::vector<bool> in_frame_mask(const PixelGrid& grid, std::span<const Vec2> pixel_displacement) {
    std::vector<bool> mask(grid.size());
    constexpr double tol = 1e-10;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Vec2 p = grid.center(i) + pixel_displacement[i];
        mask[i] = p.x1 >= -tol && p.x1 <= grid.lx1 + tol && p.x2 >= -tol && p.x2 <= grid.lx2 + tol;
    }
    return mask;
}

}  // namespace iim
