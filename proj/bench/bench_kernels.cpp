#include <benchmark/benchmark.h>

#include <cmath>
#include <memory>

#include "iim/experiment.hpp"
#include "iim/kernels.hpp"
#include "iim/noise.hpp"

using namespace iim;

namespace {

const PixelGrid kGrid{254, 108, 6.8, 2.9};

ScalarImage textured() {
    ScalarImage img(kGrid);
    for (std::size_t i = 0; i < kGrid.size(); ++i) img.values()[i] = 0.5 + 0.4 * keyed_uniform(7, i);
    return img;
}

std::vector<Vec2> wavy() {
    std::vector<Vec2> d(kGrid.size());
    for (std::size_t i = 0; i < kGrid.size(); ++i) {
        const Vec2 x = kGrid.center(i);
        d[i] = {0.05 * std::sin(2.0 * x.x1), -0.1 * x.x2 / kGrid.lx2};
    }
    return d;
}

template <bool Parallel>
void BM_Compose(benchmark::State& state) {
    const auto src = textured();
    const auto d = wavy();
    ScalarImage out(kGrid);
    for (auto _ : state) {
        if constexpr (Parallel) {
            kernels::compose(src, d, 0.0, out);
        } else {
            kernels::reference::compose(src, d, 0.0, out);
        }
        benchmark::DoNotOptimize(out.values().data());
    }
}

template <bool Parallel>
void BM_Blur(benchmark::State& state) {
    const auto src = textured();
    for (auto _ : state) {
        auto img = src;
        if constexpr (Parallel) {
            kernels::gaussian_blur(img, 2.0);
        } else {
            kernels::reference::gaussian_blur(img, 2.0);
        }
        benchmark::DoNotOptimize(img.values().data());
    }
}

template <bool Parallel>
void BM_Rasterize(benchmark::State& state) {
    const auto tris = kernels::lattice_triangles(kGrid);
    const auto d = wavy();
    std::vector<Vec2> pts(kGrid.size());
    for (std::size_t i = 0; i < kGrid.size(); ++i) pts[i] = kGrid.center(i) + d[i];
    for (auto _ : state) {
        auto hits = Parallel ? kernels::rasterize(kGrid, pts, tris) : kernels::reference::rasterize(kGrid, pts, tris);
        benchmark::DoNotOptimize(hits.data());
    }
}

template <bool Parallel>
void BM_SumSquaredDifference(benchmark::State& state) {
    const auto a = textured();
    const auto b = ScalarImage(kGrid, 0.5);
    for (auto _ : state) {
        const double s = Parallel ? kernels::sum_squared_difference(a.values(), b.values())
                                  : kernels::reference::sum_squared_difference(a.values(), b.values());
        benchmark::DoNotOptimize(s);
    }
}

template <bool Parallel>
void BM_CombineValues(benchmark::State& state) {
    const Mesh mesh(254, 108, 6.8, 2.9);
    std::vector<kernels::Contribution> contributions;
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangles()[t];
        const auto k = kernels::element_stiffness(mesh.nodes()[tri[0]], mesh.nodes()[tri[1]], mesh.nodes()[tri[2]]);
        for (int r = 0; r < 6; ++r) {
            for (int c = 0; c < 6; ++c) {
                contributions.push_back({2 * tri[r / 2] + r % 2, 2 * tri[c / 2] + c % 2, static_cast<std::int32_t>(t % 5),
                                         k.k_lambda[6 * r + c], k.k_mu[6 * r + c]});
            }
        }
    }
    const auto n = static_cast<std::int32_t>(2 * mesh.node_count());
    const auto rc = kernels::build_region_combination(n, n, std::move(contributions));
    const std::vector<LameParameters> params(5, LameParameters{900.0, 35.0});
    std::vector<double> values(rc.nonzeros());
    for (auto _ : state) {
        if constexpr (Parallel) {
            kernels::combine_values(rc, params, values);
        } else {
            kernels::reference::combine_values(rc, params, values);
        }
        benchmark::DoNotOptimize(values.data());
    }
}

void BM_ResidualEvaluation(benchmark::State& state) {
    auto cfg = default_config("single");
    const auto sc = build_scenario(cfg);
    IIMSettings s;
    s.mode = InversionMode::MuOnly;
    for (const auto& t : sc.truth) s.fixed_lambda.push_back(t.lambda);
    auto ctx = std::make_shared<const IIMContext>(sc.mesh, sc.phantom.labels, sc.phantom.region_count, sc.phantom.image,
                                                  sc.deformed, sc.bvp, s);
    IIMEvaluator ev(ctx);
    std::vector<double> p{sc.truth[0].mu, sc.truth[1].mu};
    for (auto _ : state) {
        p[1] *= 1.0001;
        benchmark::DoNotOptimize(ev.residual(p));
    }
}

}  // namespace

BENCHMARK(BM_Compose<true>)->Name("compose/parallel")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Compose<false>)->Name("compose/reference")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Blur<true>)->Name("blur/parallel")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Blur<false>)->Name("blur/reference")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Rasterize<true>)->Name("rasterize/parallel")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Rasterize<false>)->Name("rasterize/reference")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SumSquaredDifference<true>)->Name("ssd/parallel")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SumSquaredDifference<false>)->Name("ssd/reference")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_CombineValues<true>)->Name("combine/parallel")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_CombineValues<false>)->Name("combine/reference")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ResidualEvaluation)->Name("residual/254x108")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
