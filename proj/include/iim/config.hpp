#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "iim/elasticity.hpp"
#include "iim/iim.hpp"
#include "iim/phantom.hpp"
#include "iim/warp.hpp"

namespace iim {

enum class AlphaScaling {
    /// alpha = coefficient * delta, penalty in raw kPa^2.
    None,
    /// alpha = coefficient * delta * |I1|^2 / |a_init|^2, so the penalty at the
    /// initial guess is measured in units of the reference image energy.
    Data,
};

enum class NoiseTarget {
    /// Noise on both I1 and I2.
    Both,
    /// Noise on I1 only.
    Reference,
};

struct OptimizerConfig {
    int max_iterations = 100;
    double initial_step = 0.05;
    double f_tolerance = 1e-12;
    double x_tolerance = 1e-12;
};

struct ExperimentConfig {
    std::string preset = "single";
    PhantomSpec phantom;
    std::int32_t nx = 254;
    std::int32_t ny = 108;
    double lx1 = 6.8;
    double lx2 = 2.9;
    double compression = 0.267;
    std::vector<ElasticModuli> truth;
    ElasticModuli initial{150.0, 0.45};
    Box bounds{};
    InversionMode mode = InversionMode::MuOnly;
    double alpha_coefficient = 0.1;
    AlphaScaling alpha_scaling = AlphaScaling::Data;
    FrameExtension out_of_frame = FrameExtension::ClampToEdge;
    NoiseTarget noise_target = NoiseTarget::Both;
    std::vector<double> noise_levels;
    std::vector<std::uint64_t> seeds{1};
    OptimizerConfig optimizer;
    std::filesystem::path output = "out";
};

/// Ground-truth moduli of the shipped presets: background E = 100 kPa, then
/// 200, 50, 75, 150 kPa for inclusions 1..4, all with nu = 0.45.
std::vector<ElasticModuli> default_truth(std::size_t region_count);

/// Preset phantom plus the matching truth table.
ExperimentConfig default_config(const std::string& preset);

/// Reads a YAML document. Unknown keys are errors. Keys not present keep the
/// defaults of the selected preset.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& yaml_text);

/// Throws std::invalid_argument when an invariant is violated.
void validate(const ExperimentConfig& cfg);

nlohmann::ordered_json to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);

std::string to_string(InversionMode mode);
InversionMode parse_mode(const std::string& text);

}  // namespace iim
