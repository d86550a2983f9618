#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "iim/kernels.hpp"

namespace iim::kernels {

RegionCombination build_region_combination(std::int32_t rows, std::int32_t cols, std::vector<Contribution> contributions) {
    std::stable_sort(contributions.begin(), contributions.end(), [](const Contribution& a, const Contribution& b) {
        if (a.col != b.col) return a.col < b.col;
        if (a.row != b.row) return a.row < b.row;
        return a.region < b.region;
    });

    RegionCombination rc;
    rc.rows = rows;
    rc.cols = cols;
    rc.outer.assign(static_cast<std::size_t>(cols) + 1, 0);
    rc.term_begin.push_back(0);

    std::size_t k = 0;
    while (k < contributions.size()) {
        const auto& head = contributions[k];
        if (head.row < 0 || head.row >= rows || head.col < 0 || head.col >= cols) {
            throw std::out_of_range("region combination: contribution outside the matrix");
        }
        rc.inner.push_back(head.row);
        ++rc.outer[head.col + 1];
        while (k < contributions.size() && contributions[k].col == head.col && contributions[k].row == head.row) {
            const std::int32_t region = contributions[k].region;
            double al = 0.0;
            double am = 0.0;
            while (k < contributions.size() && contributions[k].col == head.col && contributions[k].row == head.row &&
                   contributions[k].region == region) {
                al += contributions[k].a_lambda;
                am += contributions[k].a_mu;
                ++k;
            }
            rc.term_region.push_back(region);
            rc.term_lambda.push_back(al);
            rc.term_mu.push_back(am);
        }
        rc.term_begin.push_back(static_cast<std::int32_t>(rc.term_region.size()));
    }
    for (std::int32_t c = 0; c < cols; ++c) {
        rc.outer[c + 1] += rc.outer[c];
    }
    return rc;
}

void combine_values(const RegionCombination& rc, std::span<const LameParameters> params, std::span<double> values) {
    const auto n = static_cast<std::int64_t>(rc.nonzeros());
    const std::int32_t* begin = rc.term_begin.data();
    const std::int32_t* region = rc.term_region.data();
    const double* al = rc.term_lambda.data();
    const double* am = rc.term_mu.data();
    const LameParameters* p = params.data();
    double* out = values.data();
#pragma omp parallel for schedule(static)
    for (std::int64_t e = 0; e < n; ++e) {
        double v = 0.0;
        for (std::int32_t t = begin[e]; t < begin[e + 1]; ++t) {
            v += p[region[t]].lambda * al[t] + p[region[t]].mu * am[t];
        }
        out[e] = v;
    }
}

Eigen::SparseMatrix<double> to_sparse(const RegionCombination& rc, std::span<const double> values) {
    Eigen::SparseMatrix<double> m(rc.rows, rc.cols);
    m.resizeNonZeros(static_cast<Eigen::Index>(rc.nonzeros()));
    std::copy(rc.outer.begin(), rc.outer.end(), m.outerIndexPtr());
    std::copy(rc.inner.begin(), rc.inner.end(), m.innerIndexPtr());
    std::copy(values.begin(), values.end(), m.valuePtr());
    return m;
}

ElementStiffness element_stiffness(Vec2 a, Vec2 b, Vec2 c) {
    const double twice_area = (b.x1 - a.x1) * (c.x2 - a.x2) - (c.x1 - a.x1) * (b.x2 - a.x2);
    if (!(twice_area > 0.0)) {
        throw std::invalid_argument("element stiffness: triangle has non-positive area");
    }
    const double area = 0.5 * twice_area;
    // Gradients of the barycentric basis functions.
    const std::array<double, 3> gx = {(b.x2 - c.x2) / twice_area, (c.x2 - a.x2) / twice_area, (a.x2 - b.x2) / twice_area};
    const std::array<double, 3> gy = {(c.x1 - b.x1) / twice_area, (a.x1 - c.x1) / twice_area, (b.x1 - a.x1) / twice_area};

    // Rows of the strain operator: exx, eyy, gamma_xy.
    std::array<std::array<double, 6>, 3> B{};
    for (int i = 0; i < 3; ++i) {
        B[0][2 * i] = gx[i];
        B[1][2 * i + 1] = gy[i];
        B[2][2 * i] = gy[i];
        B[2][2 * i + 1] = gx[i];
    }

    ElementStiffness k;
    for (int r = 0; r < 6; ++r) {
        for (int s = 0; s < 6; ++s) {
            const double div_div = (B[0][r] + B[1][r]) * (B[0][s] + B[1][s]);
            const double strain = 2.0 * B[0][r] * B[0][s] + 2.0 * B[1][r] * B[1][s] + B[2][r] * B[2][s];
            k.k_lambda[6 * r + s] = area * div_div;
            k.k_mu[6 * r + s] = area * strain;
        }
    }
    return k;
}

double sum_squared_difference(std::span<const double> a, std::span<const double> b) {
    constexpr std::int64_t block = 4096;
    const auto n = static_cast<std::int64_t>(a.size());
    const std::int64_t blocks = (n + block - 1) / block;
    std::vector<double> partial(static_cast<std::size_t>(blocks), 0.0);
    const double* pa = a.data();
    const double* pb = b.data();
#pragma omp parallel for schedule(static)
    for (std::int64_t k = 0; k < blocks; ++k) {
        double s = 0.0;
        const std::int64_t end = std::min(n, (k + 1) * block);
        for (std::int64_t i = k * block; i < end; ++i) {
            const double d = pa[i] - pb[i];
            s += d * d;
        }
        partial[k] = s;
    }
    double total = 0.0;
    for (double s : partial) total += s;
    return total;
}

namespace reference {

void combine_values(const RegionCombination& rc, std::span<const LameParameters> params, std::span<double> values) {
    for (std::size_t e = 0; e < rc.nonzeros(); ++e) {
        double v = 0.0;
        for (std::int32_t t = rc.term_begin[e]; t < rc.term_begin[e + 1]; ++t) {
            const auto& p = params[rc.term_region[t]];
            v += p.lambda * rc.term_lambda[t] + p.mu * rc.term_mu[t];
        }
        values[e] = v;
    }
}

Eigen::SparseMatrix<double> assemble_by_scatter(const Mesh& mesh, const MaterialField& mat) {
    const auto& nodes = mesh.nodes();
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(mesh.triangle_count() * 36);
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangles()[t];
        const Vec2 a = nodes[tri[0]];
        const Vec2 b = nodes[tri[1]];
        const Vec2 c = nodes[tri[2]];
        const double area = 0.5 * ((b.x1 - a.x1) * (c.x2 - a.x2) - (c.x1 - a.x1) * (b.x2 - a.x2));
        const double dx[3] = {b.x2 - c.x2, c.x2 - a.x2, a.x2 - b.x2};
        const double dy[3] = {c.x1 - b.x1, a.x1 - c.x1, b.x1 - a.x1};

        Eigen::Matrix<double, 3, 6> B = Eigen::Matrix<double, 3, 6>::Zero();
        for (int i = 0; i < 3; ++i) {
            B(0, 2 * i) = dx[i] / (2.0 * area);
            B(1, 2 * i + 1) = dy[i] / (2.0 * area);
            B(2, 2 * i) = dy[i] / (2.0 * area);
            B(2, 2 * i + 1) = dx[i] / (2.0 * area);
        }
        const auto& p = mat.params()[mat.labels()[t]];
        Eigen::Matrix3d D;
        D << p.lambda + 2.0 * p.mu, p.lambda, 0.0, p.lambda, p.lambda + 2.0 * p.mu, 0.0, 0.0, 0.0, p.mu;
        const Eigen::Matrix<double, 6, 6> ke = area * B.transpose() * D * B;
        for (int r = 0; r < 6; ++r) {
            for (int s = 0; s < 6; ++s) {
                triplets.emplace_back(2 * tri[r / 2] + r % 2, 2 * tri[s / 2] + s % 2, ke(r, s));
            }
        }
    }
    const auto n = static_cast<Eigen::Index>(2 * mesh.node_count());
    Eigen::SparseMatrix<double> k(n, n);
    k.setFromTriplets(triplets.begin(), triplets.end());
    return k;
}

double sum_squared_difference(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace reference
}  // namespace iim::kernels
