#include "iim/elasticity.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#ifdef IIM_HAVE_CHOLMOD
#include <Eigen/CholmodSupport>
#endif

#include <cmath>
#include <ostream>

#include "iim/kernels.hpp"

namespace iim {

LameParameters lame_from_moduli(ElasticModuli m) {
    if (!(m.E > 0.0) || !std::isfinite(m.E)) {
        throw std::invalid_argument("lame_from_moduli: E must be positive and finite");
    }
    if (!(m.nu > 0.0) || !(m.nu < 0.5)) {
        throw std::invalid_argument("lame_from_moduli: nu must lie in (0, 0.5), got " + std::to_string(m.nu));
    }
    return {m.E * m.nu / ((1.0 + m.nu) * (1.0 - 2.0 * m.nu)), m.E / (2.0 * (1.0 + m.nu))};
}

ElasticModuli moduli_from_lame(LameParameters p) {
    validate_material(std::span<const LameParameters>(&p, 1));
    const double s = p.lambda + p.mu;
    return {p.mu * (3.0 * p.lambda + 2.0 * p.mu) / s, p.lambda / (2.0 * s)};
}

void validate_material(std::span<const LameParameters> params) {
    for (std::size_t k = 0; k < params.size(); ++k) {
        const auto& p = params[k];
        if (!std::isfinite(p.lambda) || !std::isfinite(p.mu) || p.lambda < 0.0 || !(p.mu > 0.0)) {
            throw std::invalid_argument("invalid material in region " + std::to_string(k) + ": lambda=" +
                                        std::to_string(p.lambda) + " mu=" + std::to_string(p.mu));
        }
    }
}

std::vector<double> region_areas(const Mesh& mesh, std::span<const std::int32_t> labels, std::size_t region_count) {
    if (labels.size() != mesh.triangle_count()) {
        throw std::invalid_argument("label map has " + std::to_string(labels.size()) + " entries, mesh has " +
                                    std::to_string(mesh.triangle_count()) + " triangles");
    }
    std::vector<double> areas(region_count, 0.0);
    for (std::size_t t = 0; t < labels.size(); ++t) {
        if (labels[t] < 0 || static_cast<std::size_t>(labels[t]) >= region_count) {
            throw std::invalid_argument("label " + std::to_string(labels[t]) + " out of range at triangle " +
                                        std::to_string(t));
        }
        areas[labels[t]] += mesh.signed_area(t);
    }
    return areas;
}

MaterialField::MaterialField(const Mesh& mesh, std::vector<std::int32_t> labels, std::vector<LameParameters> params)
    : labels_(std::move(labels)), params_(std::move(params)) {
    validate_material(params_);
    areas_ = iim::region_areas(mesh, labels_, params_.size());
}

MaterialField::MaterialField(std::vector<std::int32_t> labels, std::vector<LameParameters> params,
                             std::vector<double> areas)
    : labels_(std::move(labels)), params_(std::move(params)), areas_(std::move(areas)) {}

MaterialField MaterialField::with_params(std::vector<LameParameters> params) const {
    if (params.size() != params_.size()) {
        throw std::invalid_argument("with_params: region count mismatch");
    }
    validate_material(params);
    return MaterialField(labels_, std::move(params), areas_);
}

std::optional<Vec2> evaluate_displacement(const DisplacementField& u, const Mesh& mesh, Vec2 p) {
    const auto hit = mesh.locate(p);
    if (!hit) {
        return std::nullopt;
    }
    const auto& tri = mesh.triangles()[hit->triangle_index];
    Vec2 v{};
    for (int k = 0; k < 3; ++k) {
        v = v + hit->weights[k] * u.values[tri[k]];
    }
    return v;
}

namespace {

std::vector<kernels::Contribution> element_contributions(const Mesh& mesh, std::span<const std::int32_t> labels,
                                                         auto&& map_entry) {
    std::vector<kernels::Contribution> out;
    const auto& nodes = mesh.nodes();
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangles()[t];
        const auto ke = kernels::element_stiffness(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
        for (int r = 0; r < 6; ++r) {
            const std::int32_t gr = 2 * tri[r / 2] + r % 2;
            for (int s = 0; s < 6; ++s) {
                const std::int32_t gc = 2 * tri[s / 2] + s % 2;
                std::int32_t row = 0;
                std::int32_t col = 0;
                if (map_entry(gr, gc, row, col)) {
                    out.push_back({row, col, labels[t], ke.k_lambda[6 * r + s], ke.k_mu[6 * r + s]});
                }
            }
        }
    }
    return out;
}

}  // namespace

Eigen::SparseMatrix<double> assemble_stiffness(const Mesh& mesh, const MaterialField& mat) {
    if (mat.labels().size() != mesh.triangle_count()) {
        throw std::invalid_argument("assemble_stiffness: label count does not match triangle count");
    }
    const auto n = static_cast<std::int32_t>(2 * mesh.node_count());
    auto contributions = element_contributions(mesh, mat.labels(), [](std::int32_t r, std::int32_t c, std::int32_t& row,
                                                                      std::int32_t& col) {
        row = r;
        col = c;
        return true;
    });
    const auto rc = kernels::build_region_combination(n, n, std::move(contributions));
    std::vector<double> values(rc.nonzeros());
    kernels::combine_values(rc, mat.params(), values);
    return kernels::to_sparse(rc, values);
}

struct ElasticitySolver::Impl {
    std::size_t regions = 0;
    SolverOptions opts;
    std::vector<std::int32_t> free_index;  // per dof: reduced index or -1
    std::vector<std::int32_t> dirichlet_index;  // per dof: index into dirichlet values or -1
    std::vector<double> dirichlet_values;
    Eigen::VectorXd load;  // reduced load from body force and traction
    kernels::RegionCombination k_ff;  // lower triangle of the free-free block
    kernels::RegionCombination k_fd;
    std::vector<double> ff_values;
    std::vector<double> fd_values;
#ifdef IIM_HAVE_CHOLMOD
    Eigen::CholmodSupernodalLLT<Eigen::SparseMatrix<double>, Eigen::Lower> cholesky;
#else
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower> cholesky;
#endif
    bool analyzed = false;
};

ElasticitySolver::ElasticitySolver(const Mesh& mesh, std::vector<std::int32_t> labels, std::size_t region_count,
                                   ElasticityBVP bvp, SolverOptions opts)
    : mesh_(&mesh), impl_(std::make_unique<Impl>()) {
    if (labels.size() != mesh.triangle_count()) {
        throw std::invalid_argument("elasticity solver: label count does not match triangle count");
    }
    if (!(bvp.compression >= 0.0) || !std::isfinite(bvp.compression)) {
        throw std::invalid_argument("elasticity solver: compression must be >= 0");
    }
    (void)region_areas(mesh, labels, region_count);  // validates labels
    auto& im = *impl_;
    im.regions = region_count;
    im.opts = opts;

    const std::size_t ndof = 2 * mesh.node_count();
    im.free_index.assign(ndof, -1);
    im.dirichlet_index.assign(ndof, -1);
    const auto& tags = mesh.boundary_tags();
    const auto& nodes = mesh.nodes();
    std::int32_t nfree = 0;
    for (std::size_t n = 0; n < mesh.node_count(); ++n) {
        bool fixed = false;
        Vec2 value{};
        if (bvp.full_dirichlet) {
            if (tags[n] != BoundaryTag::Interior) {
                fixed = true;
                value = bvp.full_dirichlet(nodes[n]);
            }
        } else if (tags[n] == BoundaryTag::Bottom) {
            fixed = true;
        } else if (tags[n] == BoundaryTag::Top) {
            fixed = true;
            value = {0.0, -bvp.compression};
        }
        for (int c = 0; c < 2; ++c) {
            const std::size_t dof = 2 * n + c;
            if (fixed) {
                im.dirichlet_index[dof] = static_cast<std::int32_t>(im.dirichlet_values.size());
                im.dirichlet_values.push_back(c == 0 ? value.x1 : value.x2);
            } else {
                im.free_index[dof] = nfree++;
            }
        }
    }

    im.load = Eigen::VectorXd::Zero(nfree);
    auto add_load = [&](std::int32_t node, Vec2 f) {
        if (im.free_index[2 * node] >= 0) im.load[im.free_index[2 * node]] += f.x1;
        if (im.free_index[2 * node + 1] >= 0) im.load[im.free_index[2 * node + 1]] += f.x2;
    };
    if (bvp.body_force != Vec2{}) {
        for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
            const double share = mesh.signed_area(t) / 3.0;
            for (auto n : mesh.triangles()[t]) add_load(n, share * bvp.body_force);
        }
    }
    if (!bvp.full_dirichlet && bvp.side_traction != Vec2{}) {
        const double half = 0.5 * mesh.hy();
        for (std::int32_t j = 0; j < mesh.ny(); ++j) {
            for (std::int32_t i : {std::int32_t{0}, mesh.nx()}) {
                add_load(mesh.node_index(i, j), half * bvp.side_traction);
                add_load(mesh.node_index(i, j + 1), half * bvp.side_traction);
            }
        }
    }

    auto ff = element_contributions(mesh, labels, [&](std::int32_t r, std::int32_t c, std::int32_t& row, std::int32_t& col) {
        row = im.free_index[r];
        col = im.free_index[c];
        return row >= 0 && col >= 0 && row >= col;
    });
    im.k_ff = kernels::build_region_combination(nfree, nfree, std::move(ff));
    auto fd = element_contributions(mesh, labels, [&](std::int32_t r, std::int32_t c, std::int32_t& row, std::int32_t& col) {
        row = im.free_index[r];
        col = im.dirichlet_index[c];
        return row >= 0 && col >= 0;
    });
    im.k_fd = kernels::build_region_combination(nfree, static_cast<std::int32_t>(im.dirichlet_values.size()), std::move(fd));
    im.ff_values.resize(im.k_ff.nonzeros());
    im.fd_values.resize(im.k_fd.nonzeros());
    stats_.unknowns = static_cast<std::size_t>(nfree);
}

ElasticitySolver::~ElasticitySolver() = default;
ElasticitySolver::ElasticitySolver(ElasticitySolver&&) noexcept = default;
ElasticitySolver& ElasticitySolver::operator=(ElasticitySolver&&) noexcept = default;

std::size_t ElasticitySolver::region_count() const { return impl_->regions; }

DisplacementField ElasticitySolver::solve(std::span<const LameParameters> params) {
    auto& im = *impl_;
    if (params.size() != im.regions) {
        throw std::invalid_argument("elasticity solver: expected " + std::to_string(im.regions) + " parameter pairs, got " +
                                    std::to_string(params.size()));
    }
    validate_material(params);

    kernels::combine_values(im.k_ff, params, im.ff_values);
    kernels::combine_values(im.k_fd, params, im.fd_values);
    const Eigen::SparseMatrix<double> kff = kernels::to_sparse(im.k_ff, im.ff_values);
    const Eigen::SparseMatrix<double> kfd = kernels::to_sparse(im.k_fd, im.fd_values);
    const Eigen::Map<const Eigen::VectorXd> ud(im.dirichlet_values.data(),
                                               static_cast<Eigen::Index>(im.dirichlet_values.size()));
    const Eigen::VectorXd rhs = im.load - kfd * ud;

    Eigen::VectorXd x = Eigen::VectorXd::Zero(rhs.size());
    stats_.iterations = 0;
    stats_.relative_residual = 0.0;
    const double rhs_norm = rhs.norm();
    if (rhs.size() > 0 && rhs_norm > 0.0) {
        if (im.opts.kind == LinearSolverKind::Cholesky) {
            if (!im.analyzed) {
                im.cholesky.analyzePattern(kff);
                im.analyzed = true;
            }
            im.cholesky.factorize(kff);
            if (im.cholesky.info() != Eigen::Success) {
                throw SolverError("elasticity solver: Cholesky factorization failed (matrix not SPD)",
                                  std::numeric_limits<double>::infinity());
            }
            x = im.cholesky.solve(rhs);
        } else {
            Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::DiagonalPreconditioner<double>> cg;
            cg.setTolerance(im.opts.relative_tolerance);
            cg.setMaxIterations(im.opts.max_iterations > 0 ? im.opts.max_iterations
                                                            : 10 * static_cast<std::int64_t>(rhs.size()));
            cg.compute(kff);
            x = cg.solve(rhs);
            stats_.iterations = cg.iterations();
        }
        const Eigen::VectorXd r = rhs - kff.selfadjointView<Eigen::Lower>() * x;
        stats_.relative_residual = r.norm() / rhs_norm;
        if (!(stats_.relative_residual <= im.opts.relative_tolerance) || !x.allFinite()) {
            throw SolverError("elasticity solver: relative residual " + std::to_string(stats_.relative_residual) +
                                  " above tolerance",
                              stats_.relative_residual);
        }
    }

    DisplacementField u;
    u.values.resize(mesh_->node_count());
    for (std::size_t n = 0; n < u.values.size(); ++n) {
        double c[2];
        for (int k = 0; k < 2; ++k) {
            const std::size_t dof = 2 * n + k;
            c[k] = im.free_index[dof] >= 0 ? x[im.free_index[dof]] : im.dirichlet_values[im.dirichlet_index[dof]];
        }
        u.values[n] = {c[0], c[1]};
    }
    return u;
}

DisplacementField solve_displacement(const Mesh& mesh, const MaterialField& mat, const ElasticityBVP& bvp,
                                     SolverOptions opts) {
    ElasticitySolver solver(mesh, mat.labels(), mat.region_count(), bvp, opts);
    return solver.solve(mat.params());
}

void write_displacement_csv(std::ostream& out, const Mesh& mesh, const DisplacementField& u) {
    out.precision(17);
    out << "x1,x2,u1,u2\n";
    for (std::size_t n = 0; n < mesh.node_count(); ++n) {
        out << mesh.nodes()[n].x1 << ',' << mesh.nodes()[n].x2 << ',' << u.values[n].x1 << ',' << u.values[n].x2 << '\n';
    }
}

}  // namespace iim
