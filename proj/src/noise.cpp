#include "iim/noise.hpp"

#include <cmath>
#include <stdexcept>

namespace iim {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t index) {
    std::uint64_t fnv = 0xcbf29ce484222325ULL;
    for (unsigned char ch : tag) {
        fnv ^= ch;
        fnv *= 0x100000001b3ULL;
    }
    return splitmix64(splitmix64(splitmix64(master) ^ fnv) ^ index);
}

double keyed_uniform(std::uint64_t seed, std::uint64_t index) {
    const std::uint64_t h = splitmix64(seed ^ splitmix64(index));
    return 2.0 * (static_cast<double>(h >> 11) * 0x1.0p-53) - 1.0;
}

ScalarImage add_relative_noise(const ScalarImage& img, const NoiseSpec& noise) {
    if (!(noise.delta >= 0.0) || !std::isfinite(noise.delta)) {
        throw std::invalid_argument("noise level must be >= 0");
    }
    ScalarImage out = img;
    if (noise.delta == 0.0) {
        return out;
    }
    ScalarImage eta(img.grid());
    auto e = eta.values();
    const auto n = static_cast<std::int64_t>(e.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        e[i] = keyed_uniform(noise.seed, static_cast<std::uint64_t>(i));
    }
    const double img_norm = img.norm();
    const double eta_norm = eta.norm();
    if (img_norm == 0.0 || eta_norm == 0.0) {
        return out;
    }
    const double scale = noise.delta * img_norm / eta_norm;
    auto v = out.values();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        v[i] += scale * e[i];
    }
    return out;
}

}  // namespace iim
