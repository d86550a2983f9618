#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "iim/image.hpp"
#include "iim/mesh.hpp"

namespace iim {

struct Ellipse {
    Vec2 center;
    Vec2 semi_axes;

    bool contains(Vec2 p) const {
        const double dx = (p.x1 - center.x1) / semi_axes.x1;
        const double dy = (p.x2 - center.x2) / semi_axes.x2;
        return dx * dx + dy * dy <= 1.0;
    }
};

struct Inclusion {
    Ellipse shape;
    double brightness = 0.85;
    /// Material region; 0 is the background, inclusions use 1..K-1.
    std::int32_t region = 1;
};

/// Synthetic OCT-like sample: constant background with bright elliptic
/// inclusions, Gaussian smoothing, multiplicative speckle, rescale to [0,1].
struct PhantomSpec {
    double background_value = 0.15;
    std::vector<Inclusion> inclusions;
    double blur_sigma = 1.0;           // pixels
    double speckle_amplitude = 0.4;
    double speckle_correlation = 2.0;  // pixels
    std::uint64_t seed = 42;

    std::size_t region_count() const;
};

struct Phantom {
    ScalarImage image;
    /// Region per mesh triangle, by centroid membership.
    std::vector<std::int32_t> labels;
    std::size_t region_count = 1;
};

/// "single" (one inclusion, region 1) or "four" (regions 1..4).
PhantomSpec phantom_preset(std::string_view name);

/// Throws std::invalid_argument for out-of-range values, inclusions leaving
/// the rectangle, overlapping inclusions or non-contiguous region indices.
void validate_phantom(const PhantomSpec& spec, double lx1, double lx2);

Phantom generate_phantom(const PhantomSpec& spec, const Mesh& mesh);

}  // namespace iim
