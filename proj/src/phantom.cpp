#include "iim/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "iim/kernels.hpp"
#include "iim/noise.hpp"

namespace iim {

std::size_t PhantomSpec::region_count() const {
    std::int32_t top = 0;
    for (const auto& inc : inclusions) top = std::max(top, inc.region);
    return static_cast<std::size_t>(top) + 1;
}

PhantomSpec phantom_preset(std::string_view name) {
    PhantomSpec spec;
    if (name == "single") {
        spec.inclusions = {{{{3.4, 1.45}, {1.1, 0.65}}, 0.85, 1}};
    } else if (name == "four") {
        // Large inclusion upper left, large inclusion right, a small one next
        // to inclusion 1 and a small one near the clamped bottom.
        spec.inclusions = {
            {{{1.8, 1.85}, {0.9, 0.55}}, 0.90, 1},
            {{{5.0, 1.50}, {1.0, 0.70}}, 0.80, 2},
            {{{3.15, 2.10}, {0.30, 0.25}}, 0.95, 3},
            {{{2.60, 0.45}, {0.35, 0.25}}, 0.75, 4},
        };
    } else {
        throw std::invalid_argument("unknown phantom preset '" + std::string(name) + "' (expected single or four)");
    }
    return spec;
}

void validate_phantom(const PhantomSpec& spec, double lx1, double lx2) {
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in_unit(spec.background_value)) throw std::invalid_argument("phantom: background value outside [0,1]");
    if (!(spec.blur_sigma >= 0.0)) throw std::invalid_argument("phantom: blur sigma must be >= 0");
    if (!(spec.speckle_amplitude >= 0.0)) throw std::invalid_argument("phantom: speckle amplitude must be >= 0");
    if (!(spec.speckle_correlation >= 0.0)) throw std::invalid_argument("phantom: speckle correlation must be >= 0");

    std::vector<int> seen(spec.region_count(), 0);
    for (std::size_t k = 0; k < spec.inclusions.size(); ++k) {
        const auto& inc = spec.inclusions[k];
        const auto& e = inc.shape;
        const std::string id = "phantom: inclusion " + std::to_string(k);
        if (!in_unit(inc.brightness)) throw std::invalid_argument(id + " brightness outside [0,1]");
        if (inc.region < 1) throw std::invalid_argument(id + " must use a region index >= 1");
        if (!(e.semi_axes.x1 > 0.0) || !(e.semi_axes.x2 > 0.0)) throw std::invalid_argument(id + " has non-positive semi-axes");
        if (e.center.x1 - e.semi_axes.x1 < 0.0 || e.center.x1 + e.semi_axes.x1 > lx1 ||
            e.center.x2 - e.semi_axes.x2 < 0.0 || e.center.x2 + e.semi_axes.x2 > lx2) {
            throw std::invalid_argument(id + " leaves the sample rectangle");
        }
        ++seen[inc.region];
    }
    for (std::size_t r = 1; r < seen.size(); ++r) {
        if (seen[r] == 0) throw std::invalid_argument("phantom: region " + std::to_string(r) + " has no inclusion");
    }

    // Overlap test on a fine sampling grid.
    constexpr int samples = 400;
    for (std::size_t a = 0; a < spec.inclusions.size(); ++a) {
        for (std::size_t b = a + 1; b < spec.inclusions.size(); ++b) {
            const auto& ea = spec.inclusions[a].shape;
            const auto& eb = spec.inclusions[b].shape;
            const double x0 = std::max(ea.center.x1 - ea.semi_axes.x1, eb.center.x1 - eb.semi_axes.x1);
            const double x1 = std::min(ea.center.x1 + ea.semi_axes.x1, eb.center.x1 + eb.semi_axes.x1);
            const double y0 = std::max(ea.center.x2 - ea.semi_axes.x2, eb.center.x2 - eb.semi_axes.x2);
            const double y1 = std::min(ea.center.x2 + ea.semi_axes.x2, eb.center.x2 + eb.semi_axes.x2);
            if (x0 > x1 || y0 > y1) continue;
            for (int i = 0; i <= samples; ++i) {
                for (int j = 0; j <= samples; ++j) {
                    const Vec2 p{x0 + (x1 - x0) * i / samples, y0 + (y1 - y0) * j / samples};
                    if (ea.contains(p) && eb.contains(p)) {
                        throw std::invalid_argument("phantom: inclusions " + std::to_string(a) + " and " +
                                                    std::to_string(b) + " overlap");
                    }
                }
            }
        }
    }
}

Phantom generate_phantom(const PhantomSpec& spec, const Mesh& mesh) {
    validate_phantom(spec, mesh.lx1(), mesh.lx2());
    const PixelGrid grid = pixel_grid_of(mesh);

    Phantom out;
    out.region_count = spec.region_count();
    out.image = ScalarImage(grid, spec.background_value);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Vec2 p = grid.center(i);
        for (const auto& inc : spec.inclusions) {
            if (inc.shape.contains(p)) {
                out.image.values()[i] = inc.brightness;
                break;
            }
        }
    }
    kernels::gaussian_blur(out.image, spec.blur_sigma);

    if (spec.speckle_amplitude > 0.0) {
        ScalarImage xi(grid);
        const std::uint64_t seed = derive_seed(spec.seed, "speckle", 0);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            xi.values()[i] = keyed_uniform(seed, i);
        }
        kernels::gaussian_blur(xi, spec.speckle_correlation);
        // Rescale the smoothed field back to the spread of U[-1, 1].
        double mean = 0.0;
        for (double v : xi.values()) mean += v;
        mean /= static_cast<double>(grid.size());
        double var = 0.0;
        for (double v : xi.values()) var += (v - mean) * (v - mean);
        const double sd = std::sqrt(var / static_cast<double>(grid.size()));
        const double target = 1.0 / std::sqrt(3.0);
        auto img = out.image.values();
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double s = sd > 0.0 ? std::clamp((xi.values()[i] - mean) * target / sd, -1.0, 1.0) : 0.0;
            img[i] = std::clamp(img[i] * (1.0 + spec.speckle_amplitude * s), 0.0, 1.0);
        }
    }

    const double lo = out.image.min();
    const double hi = out.image.max();
    if (!(hi > lo)) {
        throw std::invalid_argument("phantom: image is constant, cannot rescale to [0,1]");
    }
    for (double& v : out.image.values()) v = (v - lo) / (hi - lo);

    out.labels.assign(mesh.triangle_count(), 0);
    std::vector<int> hits(out.region_count, 0);
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const Vec2 c = mesh.centroid(t);
        for (const auto& inc : spec.inclusions) {
            if (inc.shape.contains(c)) {
                out.labels[t] = inc.region;
                ++hits[inc.region];
                break;
            }
        }
    }
    for (std::size_t r = 1; r < hits.size(); ++r) {
        if (hits[r] == 0) {
            throw std::invalid_argument("phantom: region " + std::to_string(r) + " covers no triangle on this mesh");
        }
    }
    return out;
}

}  // namespace iim
