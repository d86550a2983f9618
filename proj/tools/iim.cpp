#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "iim/config.hpp"
#include "iim/experiment.hpp"
#include "iim/warp.hpp"

namespace fs = std::filesystem;

namespace {

struct Overrides {
    std::string config;
    std::string preset;
    std::string mode;
    std::vector<int> grid;
    std::string noise;
    std::optional<std::uint64_t> seed;
    std::optional<int> iters;
    std::string out;
    bool paper_grid = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "YAML experiment config")->check(CLI::ExistingFile);
    cmd->add_option("--preset", o.preset, "phantom preset")->check(CLI::IsMember({"single", "four"}));
    cmd->add_option("--mode", o.mode, "inversion mode")->check(CLI::IsMember({"mu-only", "full"}));
    cmd->add_option("--grid", o.grid, "mesh cells NX NY")->expected(2);
    cmd->add_option("--noise", o.noise, "comma separated noise levels, e.g. 0.01,0.02");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--iters", o.iters, "Nelder-Mead iteration budget")->check(CLI::PositiveNumber);
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_flag("--paper-grid", o.paper_grid, "use the 508x216 grid");
}

std::vector<double> parse_levels(const std::string& text) {
    std::vector<double> levels;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        const double v = std::stod(item, &used);
        if (used != item.size()) throw std::invalid_argument("bad noise level '" + item + "'");
        levels.push_back(v);
    }
    return levels;
}

iim::ExperimentConfig resolve(const Overrides& o) {
    iim::ExperimentConfig cfg = o.config.empty() ? iim::default_config(o.preset.empty() ? "single" : o.preset)
                                                 : iim::load_config(o.config);
    if (!o.config.empty() && !o.preset.empty() && o.preset != cfg.preset) {
        const auto base = iim::default_config(o.preset);
        cfg.preset = base.preset;
        cfg.phantom = base.phantom;
        cfg.truth = base.truth;
    }
    if (!o.mode.empty()) cfg.mode = iim::parse_mode(o.mode);
    if (o.paper_grid) {
        cfg.nx = 508;
        cfg.ny = 216;
    }
    if (o.grid.size() == 2) {
        cfg.nx = o.grid[0];
        cfg.ny = o.grid[1];
    }
    if (!o.noise.empty()) cfg.noise_levels = parse_levels(o.noise);
    if (o.seed) cfg.seeds = {*o.seed};
    if (o.iters) cfg.optimizer.max_iterations = *o.iters;
    if (!o.out.empty()) cfg.output = o.out;
    iim::validate(cfg);
    return cfg;
}

void print_run(const iim::RunRecord& r) {
    std::fprintf(stderr, "%-16s alpha=%.3e iters=%d evals=%d dlambda=%.5f dmu=%.5f djoint=%.5f best=%.5f@%d %.1fs\n",
                 r.run_id.c_str(), r.alpha, r.iterations, r.evaluations, r.final_error.lambda, r.final_error.mu,
                 r.final_error.joint, r.best_error.joint, r.best_iteration, r.wall_ms / 1000.0);
}

int cmd_phantom(const iim::ExperimentConfig& cfg) {
    const iim::Mesh mesh(cfg.nx, cfg.ny, cfg.lx1, cfg.lx2);
    const iim::Phantom ph = iim::generate_phantom(cfg.phantom, mesh);
    fs::create_directories(cfg.output);
    iim::write_pgm(ph.image, cfg.output / "phantom.pgm");
    iim::write_image_csv(ph.image, cfg.output / "phantom.csv");
    std::ofstream labels(cfg.output / "labels.csv", std::ios::binary);
    labels << "triangle,region\n";
    for (std::size_t t = 0; t < ph.labels.size(); ++t) labels << t << ',' << ph.labels[t] << '\n';
    std::ofstream manifest(cfg.output / "manifest.json", std::ios::binary);
    manifest << iim::to_json(cfg).dump(2) << '\n';
    std::printf("phantom %dx%d, %zu regions -> %s\n", cfg.nx, cfg.ny, ph.region_count, cfg.output.c_str());
    return 0;
}

int cmd_forward(const iim::ExperimentConfig& cfg) {
    const iim::Scenario sc = iim::build_scenario(cfg);
    fs::create_directories(cfg.output);
    iim::write_pgm(sc.phantom.image, cfg.output / "reference.pgm");
    iim::write_pgm(sc.deformed, cfg.output / "deformed.pgm");
    iim::write_image_csv(sc.phantom.image, cfg.output / "reference.csv");
    iim::write_image_csv(sc.deformed, cfg.output / "deformed.csv");
    std::ofstream disp(cfg.output / "displacement.csv", std::ios::binary);
    iim::write_displacement_csv(disp, sc.mesh, sc.displacement);
    std::ofstream manifest(cfg.output / "manifest.json", std::ios::binary);
    manifest << iim::to_json(cfg).dump(2) << '\n';
    std::printf("forward solve %dx%d, compression %.4g mm -> %s\n", cfg.nx, cfg.ny, cfg.compression,
                cfg.output.c_str());
    return 0;
}

int cmd_invert(iim::ExperimentConfig cfg) {
    const double delta = cfg.noise_levels.empty() ? 0.0 : cfg.noise_levels.front();
    const iim::Scenario sc = iim::build_scenario(cfg);
    iim::ExperimentReport report;
    if (delta == 0.0) {
        cfg.noise_levels.clear();
        report = iim::run_noise_free_suite(cfg, print_run);
    } else {
        cfg.noise_levels = {delta};
        cfg.seeds = {cfg.seeds.front()};
        report = iim::run_noise_sweep(cfg, print_run);
    }
    iim::emit_report(report, cfg.output, &sc);
    const auto& r = report.runs.front();
    for (std::size_t k = 0; k < r.recovered.size(); ++k) {
        std::printf("region %zu: lambda %.4f (true %.4f)  mu %.4f (true %.4f)\n", k, r.recovered[k].lambda,
                    report.truth[k].lambda, r.recovered[k].mu, report.truth[k].mu);
    }
    std::printf("relative error: lambda %.6f  mu %.6f  joint %.6f%s\n", r.final_error.lambda, r.final_error.mu,
                r.final_error.joint, r.identifiable ? "" : "  (not identifiable: objective did not decrease)");
    return 0;
}

int cmd_sweep(const iim::ExperimentConfig& cfg) {
    const iim::Scenario sc = iim::build_scenario(cfg);
    const auto report = iim::run_noise_sweep(cfg, print_run);
    iim::emit_report(report, cfg.output, &sc);
    const auto s = iim::sweep_statistics(report);
    std::printf("%zu runs  spearman(best) %.4f  slope(best) %.4f  -> %s\n", s.runs, s.spearman_best, s.slope_best,
                cfg.output.c_str());
    return 0;
}

int cmd_report(const Overrides& o) {
    const fs::path dir = o.out.empty() ? fs::path("out") : fs::path(o.out);
    const auto report = iim::read_report(dir);
    iim::write_report_csv(report, dir);
    const auto s = iim::sweep_statistics(report);
    std::printf("%zu runs re-rendered in %s (spearman(best) %.4f, slope(best) %.4f)\n", report.runs.size(),
                dir.c_str(), s.spearman_best, s.slope_best);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Intensity-based inversion for quasi-static elastography"};
    app.require_subcommand(1);
    Overrides o;
    auto* phantom = app.add_subcommand("phantom", "generate the phantom image and region labels");
    auto* forward = app.add_subcommand("forward", "solve the compression problem and write the deformed image");
    auto* invert = app.add_subcommand("invert", "run one reconstruction");
    auto* sweep = app.add_subcommand("sweep", "run the noise sweep");
    auto* report = app.add_subcommand("report", "re-render CSV files from report.json");
    for (auto* c : {phantom, forward, invert, sweep}) add_common(c, o);
    report->add_option("--out", o.out, "directory holding report.json");

    CLI11_PARSE(app, argc, argv);
    try {
        if (report->parsed()) return cmd_report(o);
        const auto cfg = resolve(o);
        if (phantom->parsed()) return cmd_phantom(cfg);
        if (forward->parsed()) return cmd_forward(cfg);
        if (invert->parsed()) return cmd_invert(cfg);
        return cmd_sweep(cfg);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
