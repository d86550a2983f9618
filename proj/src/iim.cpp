#include "iim/iim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "iim/kernels.hpp"

namespace iim {

IIMContext::IIMContext(const Mesh& m, std::vector<std::int32_t> labels_in, std::size_t regions, ScalarImage i1,
                       ScalarImage i2, ElasticityBVP bvp_in, IIMSettings settings_in)
    : mesh(&m),
      labels(std::move(labels_in)),
      region_count(regions),
      region_areas(iim::region_areas(m, labels, regions)),
      reference(std::move(i1)),
      deformed(std::move(i2)),
      bvp(std::move(bvp_in)),
      settings(std::move(settings_in)),
      sampler(m),
      out_of_bounds_value(0.0) {
    const PixelGrid grid = pixel_grid_of(m);
    if (!(reference.grid() == grid) || !(deformed.grid() == grid)) {
        throw std::invalid_argument("IIM context: images must match the mesh pixel grid");
    }
    if (!(settings.alpha >= 0.0)) {
        throw std::invalid_argument("IIM context: alpha must be >= 0");
    }
    if (!(settings.bounds.lower < settings.bounds.upper)) {
        throw std::invalid_argument("IIM context: bounds need lower < upper");
    }
    if (settings.mode == InversionMode::MuOnly && settings.fixed_lambda.size() != region_count) {
        throw std::invalid_argument("IIM context: mu-only mode needs one fixed lambda per region");
    }
    if (!settings.penalty_offset.empty() && settings.penalty_offset.size() != region_count) {
        throw std::invalid_argument("IIM context: penalty offset needs one pair per region");
    }
    const double scale = squared_l2_distance(reference, ScalarImage(grid, 0.0)) + 1.0;
    out_of_bounds_value = 1e12 * scale;
}

std::size_t IIMContext::dimension() const {
    return settings.mode == InversionMode::MuOnly ? region_count : 2 * region_count;
}

std::vector<LameParameters> IIMContext::expand(std::span<const double> p) const {
    if (p.size() != dimension()) {
        throw std::invalid_argument("parameter vector has " + std::to_string(p.size()) + " entries, expected " +
                                    std::to_string(dimension()));
    }
    std::vector<LameParameters> pairs(region_count);
    for (std::size_t k = 0; k < region_count; ++k) {
        if (settings.mode == InversionMode::MuOnly) {
            pairs[k] = {settings.fixed_lambda[k], p[k]};
        } else {
            pairs[k] = {p[2 * k], p[2 * k + 1]};
        }
    }
    return pairs;
}

ParamVector IIMContext::pack(std::span<const LameParameters> pairs) const {
    if (pairs.size() != region_count) {
        throw std::invalid_argument("pack: region count mismatch");
    }
    ParamVector p;
    for (const auto& pair : pairs) {
        if (settings.mode == InversionMode::Full) p.push_back(pair.lambda);
        p.push_back(pair.mu);
    }
    return p;
}

bool IIMContext::in_bounds(std::span<const double> p) const {
    for (double v : p) {
        if (!(v >= settings.bounds.lower && v <= settings.bounds.upper)) return false;
    }
    return true;
}

double IIMContext::penalty(std::span<const double> p) const {
    const auto pairs = expand(p);
    double total = 0.0;
    for (std::size_t k = 0; k < region_count; ++k) {
        const LameParameters a0 = settings.penalty_offset.empty() ? LameParameters{} : settings.penalty_offset[k];
        const double dl = pairs[k].lambda - a0.lambda;
        const double dm = pairs[k].mu - a0.mu;
        total += (dl * dl + dm * dm) * region_areas[k];
    }
    return total;
}

IIMEvaluator::IIMEvaluator(std::shared_ptr<const IIMContext> ctx)
    : ctx_(std::move(ctx)),
      solver_(*ctx_->mesh, ctx_->labels, ctx_->region_count, ctx_->bvp, ctx_->settings.solver),
      pixel_displacement_(ctx_->sampler.grid().size()),
      warped_(ctx_->sampler.grid()) {}

DisplacementField IIMEvaluator::displacement(std::span<const double> p) {
    const auto pairs = ctx_->expand(p);
    return solver_.solve(pairs);
}

void IIMEvaluator::warp(std::span<const double> p) {
    const DisplacementField u = displacement(p);
    ctx_->sampler.displacement_at_pixels(u, pixel_displacement_);
    if (ctx_->settings.out_of_frame == FrameExtension::ClampToEdge) {
        clamp_targets_to_frame(ctx_->sampler.grid(), pixel_displacement_);
    }
    kernels::compose(ctx_->deformed, pixel_displacement_, ctx_->settings.fill, warped_);
}

ScalarImage IIMEvaluator::forward_image(std::span<const double> p) {
    warp(p);
    return warped_;
}

double IIMEvaluator::residual(std::span<const double> p) {
    ++evaluations_;
    if (!ctx_->in_bounds(p)) {
        return ctx_->out_of_bounds_value;
    }
    warp(p);
    return squared_l2_distance(warped_, ctx_->reference);
}

double IIMEvaluator::objective(std::span<const double> p) {
    if (!ctx_->in_bounds(p)) {
        ++evaluations_;
        return ctx_->out_of_bounds_value;
    }
    const double r = residual(p);
    if (ctx_->settings.alpha == 0.0) {
        return r;
    }
    return r + ctx_->settings.alpha * ctx_->penalty(p);
}

double residual(const std::shared_ptr<const IIMContext>& ctx, std::span<const double> p) {
    IIMEvaluator ev(ctx);
    return ev.residual(p);
}

double objective(const std::shared_ptr<const IIMContext>& ctx, std::span<const double> p) {
    IIMEvaluator ev(ctx);
    return ev.objective(p);
}

RelativeErrors relative_error(std::span<const double> region_areas, std::span<const LameParameters> recovered,
                              std::span<const LameParameters> truth) {
    if (recovered.size() != truth.size() || truth.size() != region_areas.size()) {
        throw std::invalid_argument("relative_error: region counts differ");
    }
    double dl = 0.0, dm = 0.0, nl = 0.0, nm = 0.0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        const double a = region_areas[k];
        dl += (recovered[k].lambda - truth[k].lambda) * (recovered[k].lambda - truth[k].lambda) * a;
        dm += (recovered[k].mu - truth[k].mu) * (recovered[k].mu - truth[k].mu) * a;
        nl += truth[k].lambda * truth[k].lambda * a;
        nm += truth[k].mu * truth[k].mu * a;
    }
    if (!(nl > 0.0) || !(nm > 0.0)) {
        throw std::invalid_argument("relative_error: ground truth has zero norm");
    }
    RelativeErrors e;
    e.lambda = std::sqrt(dl / nl);
    e.mu = std::sqrt(dm / nm);
    e.joint = std::sqrt(e.lambda * e.lambda + e.mu * e.mu);
    return e;
}

double interpolation_floor(const ScalarImage& reference, const DisplacementField& u, const Mesh& mesh, double fill) {
    return squared_l2_distance(round_trip(reference, u, mesh, fill), reference);
}

}  // namespace iim
