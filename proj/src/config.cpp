#include "iim/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace iim {
namespace {

void check_keys(const YAML::Node& node, const std::string& where, const std::set<std::string>& allowed) {
    if (!node.IsMap()) {
        throw std::invalid_argument("config: '" + where + "' must be a mapping");
    }
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!allowed.count(key)) {
            throw std::invalid_argument("config: unknown key '" + (where.empty() ? key : where + "." + key) + "'");
        }
    }
}

Vec2 read_pair(const YAML::Node& n, const std::string& where) {
    if (!n.IsSequence() || n.size() != 2) {
        throw std::invalid_argument("config: '" + where + "' must be a two-element list");
    }
    return {n[0].as<double>(), n[1].as<double>()};
}

ElasticModuli read_moduli(const YAML::Node& n, const std::string& where) {
    check_keys(n, where, {"E", "nu"});
    if (!n["E"] || !n["nu"]) {
        throw std::invalid_argument("config: '" + where + "' needs E and nu");
    }
    return {n["E"].as<double>(), n["nu"].as<double>()};
}

template <typename T>
void read_if(const YAML::Node& n, const char* key, T& out) {
    if (n[key]) out = n[key].as<T>();
}

AlphaScaling parse_alpha_scaling(const std::string& s) {
    if (s == "none") return AlphaScaling::None;
    if (s == "data") return AlphaScaling::Data;
    throw std::invalid_argument("config: alpha_scaling must be 'none' or 'data', got '" + s + "'");
}

FrameExtension parse_frame(const std::string& s) {
    if (s == "fill") return FrameExtension::Fill;
    if (s == "clamp") return FrameExtension::ClampToEdge;
    throw std::invalid_argument("config: out_of_frame must be 'fill' or 'clamp', got '" + s + "'");
}

NoiseTarget parse_target(const std::string& s) {
    if (s == "both") return NoiseTarget::Both;
    if (s == "reference") return NoiseTarget::Reference;
    throw std::invalid_argument("config: noise_target must be 'both' or 'reference', got '" + s + "'");
}

std::string to_string(AlphaScaling s) { return s == AlphaScaling::None ? "none" : "data"; }
std::string to_string(FrameExtension f) { return f == FrameExtension::Fill ? "fill" : "clamp"; }
std::string to_string(NoiseTarget t) { return t == NoiseTarget::Both ? "both" : "reference"; }

ExperimentConfig from_yaml(const YAML::Node& root) {
    if (root.IsNull()) return default_config("single");
    check_keys(root, "", {"phantom", "geometry", "materials", "inversion", "optimizer", "experiment"});

    std::string preset = "single";
    const YAML::Node ph = root["phantom"];
    if (ph) {
        check_keys(ph, "phantom", {"preset", "background", "blur_sigma", "speckle_amplitude", "speckle_correlation",
                                   "seed", "inclusions"});
        read_if(ph, "preset", preset);
    }
    const bool has_inclusions = ph && ph["inclusions"];
    if (preset == "custom" && !has_inclusions) {
        throw std::invalid_argument("config: preset 'custom' needs phantom.inclusions");
    }
    ExperimentConfig cfg;
    if (preset == "custom") {
        cfg.preset = preset;
    } else {
        cfg = default_config(preset);
    }
    if (ph) {
        read_if(ph, "background", cfg.phantom.background_value);
        read_if(ph, "blur_sigma", cfg.phantom.blur_sigma);
        read_if(ph, "speckle_amplitude", cfg.phantom.speckle_amplitude);
        read_if(ph, "speckle_correlation", cfg.phantom.speckle_correlation);
        read_if(ph, "seed", cfg.phantom.seed);
        if (const YAML::Node inc = ph["inclusions"]) {
            if (!inc.IsSequence()) throw std::invalid_argument("config: 'phantom.inclusions' must be a list");
            cfg.phantom.inclusions.clear();
            if (!ph["preset"]) cfg.preset = "custom";
            for (std::size_t i = 0; i < inc.size(); ++i) {
                const std::string where = "phantom.inclusions[" + std::to_string(i) + "]";
                check_keys(inc[i], where, {"center", "semi_axes", "brightness", "region"});
                Inclusion in;
                in.shape.center = read_pair(inc[i]["center"], where + ".center");
                in.shape.semi_axes = read_pair(inc[i]["semi_axes"], where + ".semi_axes");
                read_if(inc[i], "brightness", in.brightness);
                in.region = static_cast<std::int32_t>(i + 1);
                read_if(inc[i], "region", in.region);
                cfg.phantom.inclusions.push_back(in);
            }
            cfg.truth = default_truth(cfg.phantom.region_count());
        }
    }
    if (const YAML::Node g = root["geometry"]) {
        check_keys(g, "geometry", {"grid", "size_mm", "compression_mm"});
        if (g["grid"]) {
            const Vec2 n = read_pair(g["grid"], "geometry.grid");
            cfg.nx = static_cast<std::int32_t>(n.x1);
            cfg.ny = static_cast<std::int32_t>(n.x2);
            if (cfg.nx != n.x1 || cfg.ny != n.x2) throw std::invalid_argument("config: grid sizes must be integers");
        }
        if (g["size_mm"]) {
            const Vec2 s = read_pair(g["size_mm"], "geometry.size_mm");
            cfg.lx1 = s.x1;
            cfg.lx2 = s.x2;
        }
        read_if(g, "compression_mm", cfg.compression);
    }
    if (const YAML::Node m = root["materials"]) {
        check_keys(m, "materials", {"truth", "initial", "bounds"});
        if (const YAML::Node t = m["truth"]) {
            if (!t.IsSequence()) throw std::invalid_argument("config: 'materials.truth' must be a list");
            cfg.truth.clear();
            for (std::size_t i = 0; i < t.size(); ++i) {
                cfg.truth.push_back(read_moduli(t[i], "materials.truth[" + std::to_string(i) + "]"));
            }
        }
        if (m["initial"]) cfg.initial = read_moduli(m["initial"], "materials.initial");
        if (m["bounds"]) {
            const Vec2 b = read_pair(m["bounds"], "materials.bounds");
            cfg.bounds = {b.x1, b.x2};
        }
    }
    if (const YAML::Node inv = root["inversion"]) {
        check_keys(inv, "inversion", {"mode", "alpha_coefficient", "alpha_scaling", "out_of_frame"});
        if (inv["mode"]) cfg.mode = parse_mode(inv["mode"].as<std::string>());
        read_if(inv, "alpha_coefficient", cfg.alpha_coefficient);
        if (inv["alpha_scaling"]) cfg.alpha_scaling = parse_alpha_scaling(inv["alpha_scaling"].as<std::string>());
        if (inv["out_of_frame"]) cfg.out_of_frame = parse_frame(inv["out_of_frame"].as<std::string>());
    }
    if (const YAML::Node o = root["optimizer"]) {
        check_keys(o, "optimizer", {"max_iterations", "initial_step", "f_tolerance", "x_tolerance"});
        read_if(o, "max_iterations", cfg.optimizer.max_iterations);
        read_if(o, "initial_step", cfg.optimizer.initial_step);
        read_if(o, "f_tolerance", cfg.optimizer.f_tolerance);
        read_if(o, "x_tolerance", cfg.optimizer.x_tolerance);
    }
    if (const YAML::Node e = root["experiment"]) {
        check_keys(e, "experiment", {"noise_levels", "seeds", "noise_target", "output"});
        if (e["noise_levels"]) cfg.noise_levels = e["noise_levels"].as<std::vector<double>>();
        if (e["seeds"]) cfg.seeds = e["seeds"].as<std::vector<std::uint64_t>>();
        if (e["noise_target"]) cfg.noise_target = parse_target(e["noise_target"].as<std::string>());
        if (e["output"]) cfg.output = e["output"].as<std::string>();
    }
    return cfg;
}

}  // namespace

std::vector<ElasticModuli> default_truth(std::size_t region_count) {
    static const double E[] = {100.0, 200.0, 50.0, 75.0, 150.0};
    std::vector<ElasticModuli> t;
    for (std::size_t k = 0; k < region_count; ++k) {
        t.push_back({k < 5 ? E[k] : 100.0, 0.45});
    }
    return t;
}

ExperimentConfig default_config(const std::string& preset) {
    ExperimentConfig cfg;
    cfg.preset = preset;
    cfg.phantom = phantom_preset(preset);
    cfg.truth = default_truth(cfg.phantom.region_count());
    return cfg;
}

std::string to_string(InversionMode mode) { return mode == InversionMode::MuOnly ? "mu-only" : "full"; }

InversionMode parse_mode(const std::string& text) {
    if (text == "mu-only") return InversionMode::MuOnly;
    if (text == "full") return InversionMode::Full;
    throw std::invalid_argument("mode must be 'mu-only' or 'full', got '" + text + "'");
}

ExperimentConfig parse_config(const std::string& yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    ExperimentConfig cfg;
    try {
        cfg = from_yaml(root);
    } catch (const YAML::Exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    validate(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
}

void validate(const ExperimentConfig& cfg) {
    if (cfg.nx < 2 || cfg.ny < 2) throw std::invalid_argument("config: grid must be at least 2x2");
    if (!(cfg.lx1 > 0.0) || !(cfg.lx2 > 0.0)) throw std::invalid_argument("config: dimensions must be positive");
    if (!(cfg.compression >= 0.0) || !std::isfinite(cfg.compression)) {
        throw std::invalid_argument("config: compression must be non-negative");
    }
    validate_phantom(cfg.phantom, cfg.lx1, cfg.lx2);
    if (cfg.truth.size() != cfg.phantom.region_count()) {
        throw std::invalid_argument("config: truth table has " + std::to_string(cfg.truth.size()) +
                                    " rows but the phantom has " + std::to_string(cfg.phantom.region_count()) +
                                    " regions");
    }
    for (const auto& m : cfg.truth) lame_from_moduli(m);
    lame_from_moduli(cfg.initial);
    if (!(cfg.bounds.lower > 0.0) || !(cfg.bounds.lower < cfg.bounds.upper)) {
        throw std::invalid_argument("config: bounds need 0 < lower < upper");
    }
    if (!(cfg.alpha_coefficient >= 0.0)) throw std::invalid_argument("config: alpha_coefficient must be >= 0");
    for (double d : cfg.noise_levels) {
        if (!(d >= 0.0) || !std::isfinite(d)) throw std::invalid_argument("config: noise levels must be >= 0");
    }
    if (cfg.seeds.empty()) throw std::invalid_argument("config: at least one seed is required");
    if (cfg.optimizer.max_iterations < 1) throw std::invalid_argument("config: max_iterations must be >= 1");
    if (!(cfg.optimizer.initial_step > 0.0)) throw std::invalid_argument("config: initial_step must be > 0");
}

nlohmann::ordered_json to_json(const ExperimentConfig& cfg) {
    using nlohmann::ordered_json;
    ordered_json inclusions = ordered_json::array();
    for (const auto& in : cfg.phantom.inclusions) {
        inclusions.push_back({{"center", {in.shape.center.x1, in.shape.center.x2}},
                              {"semi_axes", {in.shape.semi_axes.x1, in.shape.semi_axes.x2}},
                              {"brightness", in.brightness},
                              {"region", in.region}});
    }
    ordered_json truth = ordered_json::array();
    for (const auto& m : cfg.truth) truth.push_back({{"E", m.E}, {"nu", m.nu}});
    ordered_json j;
    j["phantom"] = {{"preset", cfg.preset},
                    {"background", cfg.phantom.background_value},
                    {"blur_sigma", cfg.phantom.blur_sigma},
                    {"speckle_amplitude", cfg.phantom.speckle_amplitude},
                    {"speckle_correlation", cfg.phantom.speckle_correlation},
                    {"seed", cfg.phantom.seed},
                    {"inclusions", inclusions}};
    j["geometry"] = {{"grid", {cfg.nx, cfg.ny}}, {"size_mm", {cfg.lx1, cfg.lx2}}, {"compression_mm", cfg.compression}};
    j["materials"] = {{"truth", truth},
                      {"initial", {{"E", cfg.initial.E}, {"nu", cfg.initial.nu}}},
                      {"bounds", {cfg.bounds.lower, cfg.bounds.upper}}};
    j["inversion"] = {{"mode", to_string(cfg.mode)},
                      {"alpha_coefficient", cfg.alpha_coefficient},
                      {"alpha_scaling", to_string(cfg.alpha_scaling)},
                      {"out_of_frame", to_string(cfg.out_of_frame)}};
    j["optimizer"] = {{"max_iterations", cfg.optimizer.max_iterations},
                      {"initial_step", cfg.optimizer.initial_step},
                      {"f_tolerance", cfg.optimizer.f_tolerance},
                      {"x_tolerance", cfg.optimizer.x_tolerance}};
    j["experiment"] = {{"noise_levels", cfg.noise_levels},
                       {"seeds", cfg.seeds},
                       {"noise_target", to_string(cfg.noise_target)},
                       {"output", cfg.output.string()}};
    return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    // The manifest uses the YAML layout, and JSON is valid YAML.
    return parse_config(j.dump());
}

}  // namespace iim
