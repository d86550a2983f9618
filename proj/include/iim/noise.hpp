#pragma once

#include <cstdint>
#include <string_view>

#include "iim/image.hpp"

namespace iim {

std::uint64_t splitmix64(std::uint64_t x);

/// Sub-seed for a named purpose: splitmix64 chain over (master, FNV-1a(tag), index).
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t index);

/// Counter-based uniform draw on [-1, 1) for (seed, index); independent of
/// evaluation order.
double keyed_uniform(std::uint64_t seed, std::uint64_t index);

struct NoiseSpec {
    double delta = 0.0;
    std::uint64_t seed = 0;
};

/// img + delta * (|img| / |eta|) * eta with eta i.i.d. uniform on [-1, 1],
/// so that |out - img| / |img| == delta.
ScalarImage add_relative_noise(const ScalarImage& img, const NoiseSpec& noise);

}  // namespace iim
