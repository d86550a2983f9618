#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "iim/mesh.hpp"

namespace iim {

/// Pixel raster over the physical rectangle (0,lx1) x (0,lx2). Row 0 is the
/// bottom row; pixel (c, r) is centred at ((c+0.5)*hx, (r+0.5)*hy).
struct PixelGrid {
    std::int32_t width = 0;
    std::int32_t height = 0;
    double lx1 = 0.0;
    double lx2 = 0.0;

    double hx() const { return lx1 / width; }
    double hy() const { return lx2 / height; }
    double pixel_area() const { return hx() * hy(); }
    std::size_t size() const { return static_cast<std::size_t>(width) * height; }
    Vec2 center(std::int32_t c, std::int32_t r) const { return {(c + 0.5) * hx(), (r + 0.5) * hy()}; }
    Vec2 center(std::size_t index) const {
        return center(static_cast<std::int32_t>(index % width), static_cast<std::int32_t>(index / width));
    }

    friend bool operator==(const PixelGrid&, const PixelGrid&) = default;
};

/// The pixel grid whose cells coincide with the cells of `mesh`.
PixelGrid pixel_grid_of(const Mesh& mesh);

class ScalarImage {
public:
    ScalarImage() = default;
    explicit ScalarImage(PixelGrid grid, double value = 0.0);
    ScalarImage(PixelGrid grid, std::vector<double> values);

    const PixelGrid& grid() const { return grid_; }
    std::int32_t width() const { return grid_.width; }
    std::int32_t height() const { return grid_.height; }

    double& at(std::int32_t c, std::int32_t r) { return values_[static_cast<std::size_t>(r) * grid_.width + c]; }
    double at(std::int32_t c, std::int32_t r) const { return values_[static_cast<std::size_t>(r) * grid_.width + c]; }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    double min() const;
    double max() const;
    /// Euclidean norm of the pixel values (no pixel-area weighting).
    double norm() const;

    friend bool operator==(const ScalarImage&, const ScalarImage&) = default;

private:
    PixelGrid grid_;
    std::vector<double> values_;
};

/// Pixel-area weighted squared L2 distance: area * sum (a - b)^2.
double squared_l2_distance(const ScalarImage& a, const ScalarImage& b);

/// 16-bit binary PGM, values clamped to [0,1] and scaled by 65535. The top
/// image row is written first; the physical extent is stored in a comment.
void write_pgm(const ScalarImage& img, const std::filesystem::path& path);
ScalarImage read_pgm(const std::filesystem::path& path);

/// Lossless text form: header line "width,height,lx1,lx2", then one line per
/// pixel row starting with row 0 (bottom).
void write_image_csv(const ScalarImage& img, const std::filesystem::path& path);
ScalarImage read_image_csv(const std::filesystem::path& path);

}  // namespace iim
