#pragma once

#include <Eigen/Sparse>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "iim/mesh.hpp"

namespace iim {

/// Engineering constants: Young's modulus E (kPa) and Poisson ratio nu.
struct ElasticModuli {
    double E = 0.0;
    double nu = 0.0;
};

/// Lamé pair (kPa).
struct LameParameters {
    double lambda = 0.0;
    double mu = 0.0;

    friend bool operator==(const LameParameters&, const LameParameters&) = default;
};

LameParameters lame_from_moduli(ElasticModuli m);
ElasticModuli moduli_from_lame(LameParameters p);

/// Piecewise-constant Lamé field: one region label per triangle plus one
/// parameter pair per region.
class MaterialField {
public:
    MaterialField(const Mesh& mesh, std::vector<std::int32_t> labels, std::vector<LameParameters> params);

    std::size_t region_count() const { return params_.size(); }
    const std::vector<std::int32_t>& labels() const { return labels_; }
    const std::vector<LameParameters>& params() const { return params_; }
    const std::vector<double>& region_areas() const { return areas_; }

    MaterialField with_params(std::vector<LameParameters> params) const;

private:
    MaterialField(std::vector<std::int32_t> labels, std::vector<LameParameters> params, std::vector<double> areas);

    std::vector<std::int32_t> labels_;
    std::vector<LameParameters> params_;
    std::vector<double> areas_;
};

/// Per-region areas for a label map. Throws if a label is negative.
std::vector<double> region_areas(const Mesh& mesh, std::span<const std::int32_t> labels, std::size_t region_count);

/// Throws std::invalid_argument unless lambda >= 0 and mu > 0 (both finite).
void validate_material(std::span<const LameParameters> params);

/// Boundary-value problem data. The sample is clamped on the bottom, pushed
/// down by `compression` on the top, and loaded by `side_traction` on the
/// lateral sides. `full_dirichlet`, when set, replaces all of that by
/// prescribed values on every boundary node.
struct ElasticityBVP {
    double compression = 0.0;
    Vec2 body_force{};
    Vec2 side_traction{};
    std::function<Vec2(Vec2)> full_dirichlet;
};

/// Nodal displacement (mm), one 2-vector per mesh node.
struct DisplacementField {
    std::vector<Vec2> values;
};

/// P1 interpolation of u at p; nullopt when p lies outside the mesh.
std::optional<Vec2> evaluate_displacement(const DisplacementField& u, const Mesh& mesh, Vec2 p);

class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double achieved_residual)
        : std::runtime_error(what), residual_(achieved_residual) {}
    double achieved_residual() const { return residual_; }

private:
    double residual_;
};

enum class LinearSolverKind { Cholesky, ConjugateGradient };

struct SolverOptions {
    LinearSolverKind kind = LinearSolverKind::Cholesky;
    double relative_tolerance = 1e-10;
    /// 0 means 10 * (number of unknowns).
    std::int64_t max_iterations = 0;
};

struct SolveStats {
    double relative_residual = 0.0;
    std::int64_t iterations = 0;
    std::size_t unknowns = 0;
};

/// Assembled 2N x 2N stiffness matrix (dof 2n is x1, 2n+1 is x2 of node n).
Eigen::SparseMatrix<double> assemble_stiffness(const Mesh& mesh, const MaterialField& mat);

/// Repeated solves of one BVP on a fixed mesh and label map.
///
/// The stiffness matrix is linear in the region parameters, so the sparsity
/// pattern, the per-entry region coefficients and the symbolic factorization
/// are computed once; each solve only fills values and refactorizes. An
/// instance owns its factorization workspace and is not thread-safe; use one
/// per worker.
class ElasticitySolver {
public:
    ElasticitySolver(const Mesh& mesh, std::vector<std::int32_t> labels, std::size_t region_count, ElasticityBVP bvp,
                     SolverOptions opts = {});
    ~ElasticitySolver();
    ElasticitySolver(ElasticitySolver&&) noexcept;
    ElasticitySolver& operator=(ElasticitySolver&&) noexcept;

    DisplacementField solve(std::span<const LameParameters> params);

    const SolveStats& last_stats() const { return stats_; }
    const Mesh& mesh() const { return *mesh_; }
    std::size_t region_count() const;

private:
    struct Impl;
    const Mesh* mesh_;
    std::unique_ptr<Impl> impl_;
    SolveStats stats_;
};

DisplacementField solve_displacement(const Mesh& mesh, const MaterialField& mat, const ElasticityBVP& bvp,
                                     SolverOptions opts = {});

void write_displacement_csv(std::ostream& out, const Mesh& mesh, const DisplacementField& u);

}  // namespace iim
