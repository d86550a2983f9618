#include "iim/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "iim/nelder_mead.hpp"
#include "iim/noise.hpp"
#include "iim/warp.hpp"

namespace iim {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string run_name(double delta, std::uint64_t seed) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "d%.4f_s%llu", delta, static_cast<unsigned long long>(seed));
    return buf;
}

std::vector<LameParameters> replicate(LameParameters p, std::size_t n) { return std::vector<LameParameters>(n, p); }

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

nlohmann::ordered_json pairs_json(const std::vector<LameParameters>& v) {
    auto a = nlohmann::ordered_json::array();
    for (const auto& p : v) a.push_back({p.lambda, p.mu});
    return a;
}

std::vector<LameParameters> pairs_from(const nlohmann::json& j) {
    std::vector<LameParameters> v;
    for (const auto& p : j) v.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    return v;
}

nlohmann::ordered_json error_json(const RelativeErrors& e) {
    return {{"lambda", e.lambda}, {"mu", e.mu}, {"joint", e.joint}};
}

RelativeErrors error_from(const nlohmann::json& j) {
    return {j.at("lambda").get<double>(), j.at("mu").get<double>(), j.at("joint").get<double>()};
}

double json_number(const nlohmann::json& j) { return j.is_null() ? kNaN : j.get<double>(); }

}  // namespace

Scenario build_scenario(const ExperimentConfig& cfg) {
    validate(cfg);
    Mesh mesh(cfg.nx, cfg.ny, cfg.lx1, cfg.lx2);
    Phantom phantom = generate_phantom(cfg.phantom, mesh);
    std::vector<LameParameters> truth;
    for (const auto& m : cfg.truth) truth.push_back(lame_from_moduli(m));
    ElasticityBVP bvp;
    bvp.compression = cfg.compression;
    DisplacementField u = solve_displacement(mesh, MaterialField(mesh, phantom.labels, truth), bvp);
    ScalarImage deformed = warp_image(phantom.image, u, mesh, WarpMode::PushForward, 0.0);
    return {std::move(mesh), std::move(phantom), std::move(truth), std::move(bvp), std::move(u), std::move(deformed)};
}

double effective_alpha(const ExperimentConfig& cfg, double delta, const ScalarImage& reference,
                       std::span<const double> region_areas) {
    const double alpha = cfg.alpha_coefficient * delta;
    if (alpha == 0.0 || cfg.alpha_scaling == AlphaScaling::None) {
        return alpha;
    }
    const LameParameters a0 = lame_from_moduli(cfg.initial);
    double init_norm = 0.0;
    for (double area : region_areas) init_norm += (a0.lambda * a0.lambda + a0.mu * a0.mu) * area;
    const double data_norm = squared_l2_distance(reference, ScalarImage(reference.grid(), 0.0));
    return alpha * data_norm / init_norm;
}

RunRecord run_inversion(const ExperimentConfig& cfg, const Scenario& sc, double delta, std::size_t level_index,
                        std::uint64_t seed) {
    const auto start = std::chrono::steady_clock::now();
    ScalarImage reference = sc.phantom.image;
    ScalarImage deformed = sc.deformed;
    if (delta > 0.0) {
        reference = add_relative_noise(reference, {delta, derive_seed(seed, "noise-reference", level_index)});
        if (cfg.noise_target == NoiseTarget::Both) {
            deformed = add_relative_noise(deformed, {delta, derive_seed(seed, "noise-deformed", level_index)});
        }
    }

    const std::size_t K = sc.phantom.region_count;
    IIMSettings settings;
    settings.mode = cfg.mode;
    settings.bounds = cfg.bounds;
    settings.out_of_frame = cfg.out_of_frame;
    if (cfg.mode == InversionMode::MuOnly) {
        for (const auto& t : sc.truth) settings.fixed_lambda.push_back(t.lambda);
    }
    const auto areas = region_areas(sc.mesh, sc.phantom.labels, K);
    settings.alpha = effective_alpha(cfg, delta, reference, areas);

    auto ctx = std::make_shared<const IIMContext>(sc.mesh, sc.phantom.labels, K, std::move(reference),
                                                  std::move(deformed), sc.bvp, settings);
    IIMEvaluator evaluator(ctx);

    NMOptions opts;
    opts.max_iterations = cfg.optimizer.max_iterations;
    opts.initial_step = cfg.optimizer.initial_step;
    opts.f_tolerance = cfg.optimizer.f_tolerance;
    opts.x_tolerance = cfg.optimizer.x_tolerance;
    opts.lower.assign(ctx->dimension(), cfg.bounds.lower);
    opts.upper.assign(ctx->dimension(), cfg.bounds.upper);

    const ParamVector p0 = ctx->pack(replicate(lame_from_moduli(cfg.initial), K));
    const NMResult nm =
        nelder_mead([&](std::span<const double> p) { return evaluator.objective(p); }, p0, opts);

    RunRecord rec;
    rec.run_id = run_name(delta, seed);
    rec.delta = delta;
    rec.seed = seed;
    rec.alpha = settings.alpha;
    rec.recovered = ctx->expand(nm.best_point);
    rec.final_error = relative_error(areas, rec.recovered, sc.truth);
    rec.iterations = nm.iterations;
    rec.evaluations = nm.evaluations;
    rec.initial_objective = nm.initial_value;
    rec.final_objective = nm.best_value;
    rec.final_residual = nm.best_value - settings.alpha * ctx->penalty(nm.best_point);
    rec.identifiable = nm.initial_value - nm.best_value > 1e-12 * std::max(1.0, std::abs(nm.initial_value));

    rec.best = rec.recovered;
    rec.best_error = rec.final_error;
    rec.best_iteration = rec.iterations;
    bool first = true;
    for (const auto& e : nm.trace) {
        TraceRow row;
        row.iteration = e.iteration;
        row.objective = e.best_value;
        row.residual = e.best_value - settings.alpha * ctx->penalty(e.best_point);
        row.params = ctx->expand(e.best_point);
        row.error = relative_error(areas, row.params, sc.truth);
        if (first || row.error.joint < rec.best_error.joint) {
            rec.best = row.params;
            rec.best_error = row.error;
            rec.best_iteration = row.iteration;
            first = false;
        }
        rec.trace.push_back(std::move(row));
    }
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

namespace {

ExperimentReport empty_report(const ExperimentConfig& cfg, const Scenario& sc) {
    ExperimentReport report;
    report.config = cfg;
    report.truth = sc.truth;
    report.region_areas = region_areas(sc.mesh, sc.phantom.labels, sc.phantom.region_count);
    report.interpolation_floor = interpolation_floor(sc.phantom.image, sc.displacement, sc.mesh, 0.0);

    IIMSettings settings;
    settings.mode = InversionMode::Full;
    settings.out_of_frame = cfg.out_of_frame;
    auto ctx = std::make_shared<const IIMContext>(sc.mesh, sc.phantom.labels, sc.phantom.region_count,
                                                  sc.phantom.image, sc.deformed, sc.bvp, settings);
    IIMEvaluator ev(ctx);
    report.truth_residual = ev.residual(ctx->pack(sc.truth));
    return report;
}

}  // namespace

ExperimentReport run_noise_free_suite(const ExperimentConfig& cfg, const ProgressFn& progress) {
    for (double d : cfg.noise_levels) {
        if (d != 0.0) {
            throw std::invalid_argument("noise-free suite: noise levels must be empty or {0}");
        }
    }
    const Scenario sc = build_scenario(cfg);
    ExperimentReport report = empty_report(cfg, sc);
    const std::uint64_t seed = cfg.seeds.front();
    try {
        report.runs.push_back(run_inversion(cfg, sc, 0.0, 0, seed));
    } catch (const std::exception& e) {
        throw std::runtime_error("run " + run_name(0.0, seed) + ": " + e.what());
    }
    if (progress) progress(report.runs.back());
    return report;
}

ExperimentReport run_noise_sweep(const ExperimentConfig& cfg, const ProgressFn& progress) {
    if (cfg.noise_levels.empty()) {
        throw std::invalid_argument("noise sweep: no noise levels configured");
    }
    struct Job {
        double delta;
        std::uint64_t seed;
        std::size_t level;
    };
    std::vector<Job> jobs;
    for (std::size_t l = 0; l < cfg.noise_levels.size(); ++l) {
        for (std::uint64_t s : cfg.seeds) jobs.push_back({cfg.noise_levels[l], s, l});
    }
    std::stable_sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) {
        return a.delta != b.delta ? a.delta < b.delta : a.seed < b.seed;
    });

    const Scenario sc = build_scenario(cfg);
    ExperimentReport report = empty_report(cfg, sc);
    for (const Job& job : jobs) {
        try {
            report.runs.push_back(run_inversion(cfg, sc, job.delta, job.level, job.seed));
        } catch (const std::exception& e) {
            throw std::runtime_error("run " + run_name(job.delta, job.seed) + ": " + e.what());
        }
        if (progress) progress(report.runs.back());
    }
    return report;
}

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("spearman: size mismatch");
    const std::size_t n = x.size();
    if (n < 2) return kNaN;
    auto ranks = [n](std::span<const double> v) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n;) {
            std::size_t j = i;
            while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
            const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    const auto rx = ranks(x);
    const auto ry = ranks(y);
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return kNaN;
    return sxy / std::sqrt(sxx * syy);
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("loglog_slope: size mismatch");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] > 0.0 && y[i] > 0.0) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    }
    const auto n = static_cast<double>(lx.size());
    if (lx.size() < 2) return kNaN;
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    return sxx == 0.0 ? kNaN : sxy / sxx;
}

SweepStatistics sweep_statistics(const ExperimentReport& report) {
    std::vector<double> d, best, fin;
    for (const auto& r : report.runs) {
        if (r.delta <= 0.0) continue;
        d.push_back(r.delta);
        best.push_back(r.best_error.joint);
        fin.push_back(r.final_error.joint);
    }
    SweepStatistics s;
    s.runs = d.size();
    s.spearman_best = spearman(d, best);
    s.slope_best = loglog_slope(d, best);
    s.spearman_final = spearman(d, fin);
    s.slope_final = loglog_slope(d, fin);
    return s;
}

void write_report_csv(const ExperimentReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir / "traces");
    const std::size_t K = report.truth.size();

    const auto summary_path = dir / "summary.csv";
    auto summary = open_out(summary_path);
    summary << "run_id,delta,alpha,seed";
    for (std::size_t k = 0; k < K; ++k) summary << ",lambda_" << k << ",mu_" << k;
    summary << ",delta_lambda,delta_mu,delta_joint,best_delta_lambda,best_delta_mu,best_delta_joint"
               ",best_iteration,iterations,evaluations,final_objective,final_residual,identifiable\n";
    for (const auto& r : report.runs) {
        summary << r.run_id << ',' << num(r.delta) << ',' << num(r.alpha) << ',' << r.seed;
        for (const auto& p : r.recovered) summary << ',' << num(p.lambda) << ',' << num(p.mu);
        for (const auto* e : {&r.final_error, &r.best_error}) {
            summary << ',' << num(e->lambda) << ',' << num(e->mu) << ',' << num(e->joint);
        }
        summary << ',' << r.best_iteration << ',' << r.iterations << ',' << r.evaluations << ','
                << num(r.final_objective) << ',' << num(r.final_residual) << ',' << (r.identifiable ? 1 : 0) << '\n';
    }
    finish(summary, summary_path);

    const auto timing_path = dir / "timing.csv";
    auto timing = open_out(timing_path);
    timing << "run_id,wall_ms\n";
    for (const auto& r : report.runs) timing << r.run_id << ',' << num(r.wall_ms) << '\n';
    finish(timing, timing_path);

    const auto stats_path = dir / "statistics.csv";
    auto stats = open_out(stats_path);
    const SweepStatistics s = sweep_statistics(report);
    stats << "runs,spearman_best,slope_best,spearman_final,slope_final,interpolation_floor,truth_residual\n"
          << s.runs << ',' << num(s.spearman_best) << ',' << num(s.slope_best) << ',' << num(s.spearman_final) << ','
          << num(s.slope_final) << ',' << num(report.interpolation_floor) << ',' << num(report.truth_residual) << '\n';
    finish(stats, stats_path);

    for (const auto& r : report.runs) {
        const auto path = dir / "traces" / (r.run_id + ".csv");
        auto out = open_out(path);
        out << "iteration,objective,residual,delta_lambda,delta_mu,delta_joint";
        for (std::size_t k = 0; k < K; ++k) out << ",lambda_" << k << ",mu_" << k;
        out << '\n';
        for (const auto& t : r.trace) {
            out << t.iteration << ',' << num(t.objective) << ',' << num(t.residual) << ',' << num(t.error.lambda) << ','
                << num(t.error.mu) << ',' << num(t.error.joint);
            for (const auto& p : t.params) out << ',' << num(p.lambda) << ',' << num(p.mu);
            out << '\n';
        }
        finish(out, path);
    }
}

nlohmann::ordered_json report_to_json(const ExperimentReport& report) {
    using nlohmann::ordered_json;
    ordered_json runs = ordered_json::array();
    for (const auto& r : report.runs) {
        ordered_json trace = ordered_json::array();
        for (const auto& t : r.trace) {
            trace.push_back({{"iteration", t.iteration},
                             {"objective", t.objective},
                             {"residual", t.residual},
                             {"error", error_json(t.error)},
                             {"params", pairs_json(t.params)}});
        }
        runs.push_back({{"run_id", r.run_id},
                        {"delta", r.delta},
                        {"seed", r.seed},
                        {"alpha", r.alpha},
                        {"recovered", pairs_json(r.recovered)},
                        {"final_error", error_json(r.final_error)},
                        {"best", pairs_json(r.best)},
                        {"best_error", error_json(r.best_error)},
                        {"best_iteration", r.best_iteration},
                        {"iterations", r.iterations},
                        {"evaluations", r.evaluations},
                        {"initial_objective", r.initial_objective},
                        {"final_objective", r.final_objective},
                        {"final_residual", r.final_residual},
                        {"identifiable", r.identifiable},
                        {"wall_ms", r.wall_ms},
                        {"trace", trace}});
    }
    return {{"config", to_json(report.config)},
            {"truth", pairs_json(report.truth)},
            {"region_areas", report.region_areas},
            {"interpolation_floor", report.interpolation_floor},
            {"truth_residual", report.truth_residual},
            {"runs", runs}};
}

ExperimentReport report_from_json(const nlohmann::json& j) {
    ExperimentReport report;
    report.config = config_from_json(j.at("config"));
    report.truth = pairs_from(j.at("truth"));
    report.region_areas = j.at("region_areas").get<std::vector<double>>();
    report.interpolation_floor = json_number(j.at("interpolation_floor"));
    report.truth_residual = json_number(j.at("truth_residual"));
    for (const auto& jr : j.at("runs")) {
        RunRecord r;
        r.run_id = jr.at("run_id").get<std::string>();
        r.delta = jr.at("delta").get<double>();
        r.seed = jr.at("seed").get<std::uint64_t>();
        r.alpha = jr.at("alpha").get<double>();
        r.recovered = pairs_from(jr.at("recovered"));
        r.final_error = error_from(jr.at("final_error"));
        r.best = pairs_from(jr.at("best"));
        r.best_error = error_from(jr.at("best_error"));
        r.best_iteration = jr.at("best_iteration").get<int>();
        r.iterations = jr.at("iterations").get<int>();
        r.evaluations = jr.at("evaluations").get<int>();
        r.initial_objective = jr.at("initial_objective").get<double>();
        r.final_objective = jr.at("final_objective").get<double>();
        r.final_residual = jr.at("final_residual").get<double>();
        r.identifiable = jr.at("identifiable").get<bool>();
        r.wall_ms = jr.at("wall_ms").get<double>();
        for (const auto& jt : jr.at("trace")) {
            TraceRow t;
            t.iteration = jt.at("iteration").get<int>();
            t.objective = jt.at("objective").get<double>();
            t.residual = jt.at("residual").get<double>();
            t.error = error_from(jt.at("error"));
            t.params = pairs_from(jt.at("params"));
            r.trace.push_back(std::move(t));
        }
        report.runs.push_back(std::move(r));
    }
    return report;
}

void emit_report(const ExperimentReport& report, const std::filesystem::path& dir, const Scenario* scenario) {
    std::filesystem::create_directories(dir);
    write_report_csv(report, dir);
    if (scenario != nullptr) {
        write_pgm(scenario->phantom.image, dir / "reference.pgm");
        write_pgm(scenario->deformed, dir / "deformed.pgm");
    }
    const auto manifest_path = dir / "manifest.json";
    auto manifest = open_out(manifest_path);
    manifest << to_json(report.config).dump(2) << '\n';
    finish(manifest, manifest_path);

    const auto report_path = dir / "report.json";
    auto out = open_out(report_path);
    out << report_to_json(report).dump(1) << '\n';
    finish(out, report_path);
}

ExperimentReport read_report(const std::filesystem::path& dir) {
    const auto path = dir / "report.json";
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    try {
        return report_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

}  // namespace iim
