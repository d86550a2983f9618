#pragma once

#include <span>
#include <vector>

#include "iim/elasticity.hpp"
#include "iim/image.hpp"
#include "iim/mesh.hpp"

namespace iim {

enum class WarpMode {
    /// Move the pixel-centre lattice carrying the source values by u and
    /// resample it on the fixed pixel grid (data synthesis).
    PushForward,
    /// Evaluate the source at x + u(x) for every pixel centre x.
    Composition,
};

/// How a Composition warp treats targets that leave the frame.
enum class FrameExtension {
    /// The target pixel gets the fill value.
    Fill,
    /// The target is moved to the nearest point of the frame, so the source
    /// is extended by its edge values.
    ClampToEdge,
};

/// Rewrites d so that every target x + d(x) lies inside the frame.
void clamp_targets_to_frame(const PixelGrid& grid, std::span<Vec2> pixel_displacement);

/// Pixel centres of the mesh-aligned grid, located once in the mesh.
class PixelSampler {
public:
    explicit PixelSampler(const Mesh& mesh);

    const PixelGrid& grid() const { return grid_; }
    std::vector<Vec2> displacement_at_pixels(const DisplacementField& u) const;
    void displacement_at_pixels(const DisplacementField& u, std::span<Vec2> out) const;

private:
    const Mesh* mesh_;
    PixelGrid grid_;
    std::vector<BarycentricHit> hits_;
};

/// Warp with a displacement already sampled at the pixel centres.
ScalarImage warp_image(const ScalarImage& source, std::span<const Vec2> pixel_displacement, WarpMode mode,
                       double fill = 0.0);

ScalarImage warp_image(const ScalarImage& source, const DisplacementField& u, const Mesh& mesh, WarpMode mode,
                       double fill = 0.0);

/// Pushes `image` forward by u, then pushes the result back through the
/// exact inverse of x -> x + u(x) (found by point location in the deformed
/// mesh). Pixels that leave the frame on the way come back as `fill`.
ScalarImage round_trip(const ScalarImage& image, const DisplacementField& u, const Mesh& mesh, double fill = 0.0);

/// Per pixel: does x + d(x) stay inside the physical frame?
std::vector<bool> in_frame_mask(const PixelGrid& grid, std::span<const Vec2> pixel_displacement);

}  // namespace iim
