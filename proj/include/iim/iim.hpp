#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "iim/elasticity.hpp"
#include "iim/image.hpp"
#include "iim/mesh.hpp"
#include "iim/warp.hpp"

namespace iim {

enum class InversionMode {
    /// Only mu is free; lambda stays at the supplied values.
    MuOnly,
    /// All (lambda_k, mu_k) pairs are free.
    Full,
};

/// Free parameters, flattened: (mu_1..mu_K) in MuOnly mode, otherwise
/// (lambda_1, mu_1, ..., lambda_K, mu_K). Units kPa.
using ParamVector = std::vector<double>;

struct Box {
    double lower = 10.0;
    double upper = 1000.0;
};

struct IIMSettings {
    InversionMode mode = InversionMode::Full;
    double alpha = 0.0;
    Box bounds{};
    /// Required in MuOnly mode: lambda per region.
    std::vector<double> fixed_lambda;
    /// Optional prior a0 of the penalty |a - a0|^2; empty means zero.
    std::vector<LameParameters> penalty_offset;
    double fill = 0.0;
    /// Treatment of warp targets outside the image frame.
    FrameExtension out_of_frame = FrameExtension::ClampToEdge;
    SolverOptions solver{};
};

/// Immutable data of one inversion: mesh, region map, the two images and the
/// boundary-value problem. Shareable between evaluators on different threads.
struct IIMContext {
    IIMContext(const Mesh& mesh, std::vector<std::int32_t> labels, std::size_t region_count, ScalarImage reference,
               ScalarImage deformed, ElasticityBVP bvp, IIMSettings settings);

    const Mesh* mesh;
    std::vector<std::int32_t> labels;
    std::size_t region_count;
    std::vector<double> region_areas;
    ScalarImage reference;  // I1
    ScalarImage deformed;   // I2
    ElasticityBVP bvp;
    IIMSettings settings;
    PixelSampler sampler;
    /// Returned for parameter vectors outside the box.
    double out_of_bounds_value;

    std::size_t dimension() const;
    std::vector<LameParameters> expand(std::span<const double> p) const;
    ParamVector pack(std::span<const LameParameters> pairs) const;
    bool in_bounds(std::span<const double> p) const;
    /// alpha-free penalty: sum_k (|lambda_k - a0|^2 + |mu_k - a0|^2) |D_k|.
    double penalty(std::span<const double> p) const;
};

/// Evaluation workspace (FEM factorization and warp buffers) bound to one
/// context. Not thread-safe; use one per worker.
class IIMEvaluator {
public:
    explicit IIMEvaluator(std::shared_ptr<const IIMContext> ctx);

    const IIMContext& context() const { return *ctx_; }

    /// |I2 o G(a) - I1|^2 over the sample, pixel-midpoint quadrature.
    double residual(std::span<const double> p);
    /// residual + alpha * penalty.
    double objective(std::span<const double> p);
    /// I2 o G(a) on the pixel grid.
    ScalarImage forward_image(std::span<const double> p);
    DisplacementField displacement(std::span<const double> p);

    std::size_t evaluations() const { return evaluations_; }

private:
    void warp(std::span<const double> p);

    std::shared_ptr<const IIMContext> ctx_;
    ElasticitySolver solver_;
    std::vector<Vec2> pixel_displacement_;
    ScalarImage warped_;
    std::size_t evaluations_ = 0;
};

double residual(const std::shared_ptr<const IIMContext>& ctx, std::span<const double> p);
double objective(const std::shared_ptr<const IIMContext>& ctx, std::span<const double> p);

struct RelativeErrors {
    double lambda = 0.0;
    double mu = 0.0;
    double joint = 0.0;
};

/// L2(sample) relative errors of piecewise-constant fields:
/// |lambda - lambda*| / |lambda*| with |lambda|^2 = sum_k lambda_k^2 |D_k|,
/// likewise for mu, and joint = sqrt(d_lambda^2 + d_mu^2).
RelativeErrors relative_error(std::span<const double> region_areas, std::span<const LameParameters> recovered,
                              std::span<const LameParameters> truth);

/// Interpolation floor: |round_trip(I1, u) - I1|^2 with the same quadrature
/// as the residual.
double interpolation_floor(const ScalarImage& reference, const DisplacementField& u, const Mesh& mesh, double fill = 0.0);

}  // namespace iim
