#pragma once

// Data-parallel inner loops. Every kernel here is OpenMP-parallel and
// bit-deterministic regardless of thread count; iim::kernels::reference
// holds the plain serial versions the tests compare against.

#include <Eigen/Sparse>

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "iim/elasticity.hpp"
#include "iim/image.hpp"
#include "iim/mesh.hpp"

namespace iim::kernels {

/// One term of a matrix entry: coefficient pair multiplying (lambda_r, mu_r).
struct Contribution {
    std::int32_t row;
    std::int32_t col;
    std::int32_t region;
    double a_lambda;
    double a_mu;
};

/// CSC sparsity pattern whose values are a fixed linear combination of the
/// region Lamé parameters. Terms of each entry are kept in the order they
/// were contributed, merged per region.
struct RegionCombination {
    std::int32_t rows = 0;
    std::int32_t cols = 0;
    std::vector<std::int32_t> outer;  // cols + 1
    std::vector<std::int32_t> inner;  // row index per entry
    std::vector<std::int32_t> term_begin;  // entries + 1
    std::vector<std::int32_t> term_region;
    std::vector<double> term_lambda;
    std::vector<double> term_mu;

    std::size_t nonzeros() const { return inner.size(); }
};

RegionCombination build_region_combination(std::int32_t rows, std::int32_t cols, std::vector<Contribution> contributions);

/// values[e] = sum over terms of lambda_r * a_lambda + mu_r * a_mu.
void combine_values(const RegionCombination& rc, std::span<const LameParameters> params, std::span<double> values);

/// Wraps the pattern plus values as an Eigen matrix (copy).
Eigen::SparseMatrix<double> to_sparse(const RegionCombination& rc, std::span<const double> values);

/// 6x6 element stiffness split into its lambda and mu parts (dof order
/// x1,x2 of vertex 0, 1, 2).
struct ElementStiffness {
    std::array<double, 36> k_lambda{};
    std::array<double, 36> k_mu{};
};
ElementStiffness element_stiffness(Vec2 a, Vec2 b, Vec2 c);

/// Sum of squared differences with a fixed block decomposition so the result
/// does not depend on the thread count.
double sum_squared_difference(std::span<const double> a, std::span<const double> b);

/// Pixel centre located in a triangle list; triangle == -1 means uncovered.
struct PixelHit {
    std::int32_t triangle = -1;
    std::array<double, 3> weights{};
};

/// Locates every pixel centre of `grid` in the triangles spanned by
/// `points`. Triangles touching a non-finite point are skipped; a pixel
/// covered by several triangles goes to the lowest triangle index.
std::vector<PixelHit> rasterize(const PixelGrid& grid, std::span<const Vec2> points, std::span<const Triangle> triangles);

/// Triangulation of the pixel-centre lattice (width x height nodes, node
/// index = pixel index), same diagonal convention as Mesh.
std::vector<Triangle> lattice_triangles(const PixelGrid& grid);

/// P1 interpolation of the pixel values over the pixel-centre lattice.
/// Points outside the physical frame give `fill`; points inside the frame but
/// outside the lattice hull are clamped onto it.
double sample_lattice(const ScalarImage& img, Vec2 p, double fill);

/// Per-pixel P1 interpolation of nodal displacements at pre-located pixel centres.
void interpolate_at_pixels(std::span<const BarycentricHit> hits, std::span<const Triangle> triangles,
                           std::span<const Vec2> nodal, std::span<Vec2> out);

/// out(x) = src(x + d(x)) at every pixel centre x.
void compose(const ScalarImage& src, std::span<const Vec2> displacement, double fill, ScalarImage& out);

/// out(pixel) = sum of weights times nodal values, or fill when uncovered.
void gather_hits(std::span<const PixelHit> hits, std::span<const Triangle> triangles, std::span<const double> nodal,
                 double fill, std::span<double> out);

/// Separable Gaussian blur with replicated borders, kernel radius ceil(3 sigma).
void gaussian_blur(ScalarImage& img, double sigma);

namespace reference {

std::vector<PixelHit> rasterize(const PixelGrid& grid, std::span<const Vec2> points, std::span<const Triangle> triangles);

/// Direct 2-D convolution with the outer-product kernel.
void gaussian_blur(ScalarImage& img, double sigma);

void compose(const ScalarImage& src, std::span<const Vec2> displacement, double fill, ScalarImage& out);

void combine_values(const RegionCombination& rc, std::span<const LameParameters> params, std::span<double> values);

/// Element-by-element scatter assembly through the full constitutive matrix
/// D = [[l+2m, l, 0], [l, l+2m, 0], [0, 0, m]].
Eigen::SparseMatrix<double> assemble_by_scatter(const Mesh& mesh, const MaterialField& mat);

double sum_squared_difference(std::span<const double> a, std::span<const double> b);

}  // namespace reference
}  // namespace iim::kernels
