#include "cbc/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <sstream>
#include <thread>

#include "cbc/io.hpp"
#include "cbc/surface.hpp"

namespace cbc {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string prepare_output(RunConfig& config, const CliOptions& options) {
    if (!options.out_dir.empty()) {
        config.output_dir = options.out_dir;
    }
    if (options.seed) {
        config.plant.rng_seed = *options.seed;
    }
    config.validate();
    fs::create_directories(config.output_dir);
    return config.output_dir;
}

json artifact_header(const RunConfig& config) {
    return {{"schema_version", config.schema_version}, {"config", config.to_json()}};
}

// One frequency's amplitude sweep on its own plant, stability classified.
Branch run_branch_at(const RunConfig& config, double freq_hz, std::uint64_t seed,
                     std::string* trace_csv) {
    PlantConfig pc = config.plant;
    pc.rng_seed = seed;
    Plant plant(pc);
    ControlLoop loop(plant, config.gains, config.filter, config.loop);
    std::ostringstream trace;
    if (trace_csv) {
        trace << "t,x_raw,x_filt,u\n";
        loop.set_trace_sink([&trace](double t, double x_raw, double x_filt, double u) {
            trace << format_number(t) << ',' << format_number(x_raw) << ','
                  << format_number(x_filt) << ',' << format_number(u) << "\n";
        });
    }
    Branch branch = track_branch(loop, kTwoPi * freq_hz, config.sweep.modes,
                                 config.sweep.seed_amplitude, config.continuation.step,
                                 config.continuation.corrector,
                                 config.continuation.corrector_kind);
    for (auto& pt : branch.points) {
        pt.stability = classify_stability(pt, pc);
    }
    if (trace_csv) {
        *trace_csv = trace.str();
    }
    return branch;
}

double hausdorff_fr(const Branch& lhs, const Branch& rhs) {
    double fmax = 0.0, rmax = 0.0;
    for (const auto* b : {&lhs, &rhs}) {
        for (const auto& pt : b->points) {
            fmax = std::max(fmax, pt.measures.forcing_amp);
            rmax = std::max(rmax, pt.measures.response_amp);
        }
    }
    fmax = std::max(fmax, 1e-12);
    rmax = std::max(rmax, 1e-12);
    const auto directed = [&](const Branch& from, const Branch& to) {
        double worst = 0.0;
        for (const auto& p : from.points) {
            double best = std::numeric_limits<double>::max();
            for (const auto& q : to.points) {
                best = std::min(best,
                                std::hypot((p.measures.forcing_amp - q.measures.forcing_amp) / fmax,
                                           (p.measures.response_amp - q.measures.response_amp) /
                                               rmax));
            }
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(directed(lhs, rhs), directed(rhs, lhs));
}

double median(std::vector<double> v) {
    if (v.empty()) {
        return 0.0;
    }
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid) - 1, v.end());
        m = 0.5 * (m + v[mid - 1]);
    }
    return m;
}

}  // namespace

int cmd_equilibrium(RunConfig config, const CliOptions& options) {
    const std::string out = prepare_output(config, options);
    const auto& eq = config.continuation.equilibrium;
    const StepControl& step = config.continuation.step;
    if (!(step.param_max > step.param_min)) {
        throw ValidationError("equilibrium sweep range is empty");
    }

    Plant plant(config.plant);
    const double k = eq.gain;

    json report = artifact_header(config);
    EquilibriumBranch branch;
    int code = 0;
    try {
        // Two experimentally settled seeds near the top of the parameter
        // range; the realized parameter of each is c - k*x.
        const double c0 = step.param_max;
        const double x0 = settle_equilibrium(plant, c0, k, eq);
        const double c1 = 0.95 * c0;
        const double x1 = settle_equilibrium(plant, c1, k, eq);
        branch = track_equilibrium_branch(plant, {{c0 - k * x0, x0}, {c1 - k * x1, x1}}, step, eq);
    } catch (const ControlAuthorityError& e) {
        branch.diagnostic = e.what();
        code = 3;
    }

    std::ostringstream csv;
    csv << "p,x\n";
    for (const auto& pt : branch.points) {
        csv << format_number(pt.p) << ',' << format_number(pt.x) << "\n";
    }
    write_text_file(out + "/equilibrium_branch.csv", csv.str());

    json folds = json::array();
    for (const auto& fold : detect_folds(branch)) {
        folds.push_back({{"p", fold.param}, {"x", fold.response}});
    }
    report["branch"] = equilibrium_to_json(branch);
    report["folds"] = std::move(folds);
    write_text_file(out + "/equilibrium.json", report.dump(2) + "\n");
    if (code != 0) {
        std::cout << "equilibrium: " << branch.diagnostic << "\n";
    }
    return code;
}

int cmd_branch(RunConfig config, const CliOptions& options) {
    const std::string out = prepare_output(config, options);
    const double freq = config.sweep.freq_min_hz;

    std::string trace_csv;
    Branch branch = run_branch_at(config, freq, config.plant.rng_seed,
                                  options.dump_traces ? &trace_csv : nullptr);

    write_text_file(out + "/branch.csv", branch_csv(branch));
    json report = artifact_header(config);
    report["branch"] = branch_to_json(branch);
    write_text_file(out + "/branch.json", report.dump(2) + "\n");
    if (options.dump_traces) {
        write_text_file(out + "/trace.csv", trace_csv);
    }
    if (!branch.diagnostic.empty()) {
        std::cout << "branch " << freq << " Hz: " << branch.diagnostic << "\n";
    }
    return branch.points.empty() ? 3 : 0;
}

int cmd_surface(RunConfig config, const CliOptions& options) {
    const std::string out = prepare_output(config, options);
    const auto freqs = config.sweep.frequencies_hz();
    if (freqs.size() < 2) {
        throw ValidationError("surface sweep needs at least 2 frequencies");
    }
    const auto start = std::chrono::steady_clock::now();

    std::vector<Branch> branches(freqs.size());
    std::vector<std::string> errors(freqs.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < freqs.size(); i = next.fetch_add(1)) {
            try {
                // Seed per frequency so results do not depend on scheduling.
                branches[i] =
                    run_branch_at(config, freqs[i], config.plant.rng_seed + i, nullptr);
            } catch (const Error& e) {
                errors[i] = e.what();
            }
        }
    };
    unsigned n_threads = config.sweep.threads > 0
                             ? static_cast<unsigned>(config.sweep.threads)
                             : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(freqs.size()));
    std::vector<std::thread> pool;
    for (unsigned t = 0; t + 1 < n_threads; ++t) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& t : pool) {
        t.join();
    }

    std::size_t succeeded = 0;
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        if (errors[i].empty() && !branches[i].points.empty()) {
            ++succeeded;
        } else if (errors[i].empty()) {
            errors[i] = "no accepted points";
        }
    }
    json report = artifact_header(config);
    json failures = json::array();
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        if (!errors[i].empty()) {
            failures.push_back({{"freq_hz", freqs[i]}, {"error", errors[i]}});
        }
    }
    report["grid"] = {{"frequencies_hz", freqs},
                      {"succeeded", succeeded},
                      {"failures", std::move(failures)}};

    if (succeeded * 5 < freqs.size() * 4) {
        write_text_file(out + "/surface.json", report.dump(2) + "\n");
        std::cout << "surface: only " << succeeded << "/" << freqs.size()
                  << " frequencies succeeded; surface not built\n";
        return 3;
    }

    std::vector<Branch> good;
    std::vector<SurfaceSample> samples;
    long total_periods = 0;
    long total_settles = 0;
    std::ostringstream all_branches;
    json points = json::array();
    std::ostringstream fig5a, fig5c;
    fig5a << "omega,R,F\n";
    fig5c << "omega,R,e_rel,stable\n";
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        if (!errors[i].empty()) {
            continue;
        }
        const Branch& branch = branches[i];
        total_periods += branch.total_periods;
        all_branches << branch_csv(branch);
        for (const auto& pt : branch.points) {
            total_settles += pt.settle_cycles;
            samples.push_back({pt.omega, pt.measures.response_amp, pt.measures.forcing_amp});
            points.push_back({{"omega", pt.omega},
                              {"F", pt.measures.forcing_amp},
                              {"R", pt.measures.response_amp},
                              {"e_rel", pt.measures.error_pct},
                              {"stable", pt.stability != Stability::Unstable}});
            fig5a << format_number(pt.omega) << ',' << format_number(pt.measures.response_amp)
                  << ',' << format_number(pt.measures.forcing_amp) << "\n";
            fig5c << format_number(pt.omega) << ',' << format_number(pt.measures.response_amp)
                  << ',' << format_number(pt.measures.error_pct) << ','
                  << (pt.stability == Stability::Unstable ? 0 : 1) << "\n";
        }
        good.push_back(branch);
    }

    const RBFModel model = build_interpolant(samples, config.surface.rho);
    const FoldCurve folds = extract_fold_curve(good, model);
    json fold_json = {{"lower", json::array()}, {"upper", json::array()}};
    std::ostringstream fig5b;
    fig5b << "branch,omega,F,R\n";
    for (const char* side : {"lower", "upper"}) {
        const auto& pts = side == std::string("lower") ? folds.lower : folds.upper;
        for (const auto& fp : pts) {
            fold_json[side].push_back(
                {{"omega", fp.omega}, {"F", fp.forcing}, {"R", fp.response}});
            fig5b << side << ',' << format_number(fp.omega) << ',' << format_number(fp.forcing)
                  << ',' << format_number(fp.response) << "\n";
        }
    }
    report["fold_curve"] = std::move(fold_json);

    try {
        const CuspPoint cusp = locate_cusp(folds);
        report["cusp"] = {{"omega", cusp.omega}, {"F", cusp.forcing}, {"R", cusp.response}};
        fig5b << "cusp," << format_number(cusp.omega) << ',' << format_number(cusp.forcing)
              << ',' << format_number(cusp.response) << "\n";
    } catch (const InsufficientData& e) {
        report["cusp"] = nullptr;
        report["cusp_error"] = e.what();
    }

    std::vector<std::string> warnings;
    json slices = json::array();
    const auto curves =
        constant_amplitude_slices(model, config.surface.levels, kTwoPi * freqs.front(),
                                  kTwoPi * freqs.back(), &warnings);
    for (const auto& curve : curves) {
        json pts = json::array();
        for (const auto& [w, r] : curve.points) {
            pts.push_back({w, r});
        }
        slices.push_back({{"level", curve.level}, {"points", std::move(pts)}});
    }
    report["slices"] = std::move(slices);
    report["warnings"] = warnings;
    report["points"] = std::move(points);
    report["totals"] = {{"periods", total_periods}, {"settle_cycles", total_settles}};

    write_text_file(out + "/surface.json", report.dump(2) + "\n");
    write_text_file(out + "/branches.csv", all_branches.str());
    write_text_file(out + "/fig5a_surface.csv", fig5a.str());
    write_text_file(out + "/fig5b_folds.csv", fig5b.str());
    write_text_file(out + "/fig5c_errors.csv", fig5c.str());

    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start);
    std::cout << "surface: " << succeeded << "/" << freqs.size() << " frequencies, "
              << samples.size() << " points, " << total_settles << " settle cycles, "
              << total_periods << " forcing periods, " << elapsed.count() << " s\n";
    return 0;
}

int cmd_compare(RunConfig config, const CliOptions& options) {
    const std::string out = prepare_output(config, options);
    const double freq = config.sweep.freq_min_hz;

    json report = artifact_header(config);
    Branch fixed_point, newton;
    std::string fp_error, newton_error;
    {
        RunConfig c = config;
        c.continuation.corrector_kind = CorrectorKind::FixedPoint;
        try {
            fixed_point = run_branch_at(c, freq, config.plant.rng_seed, nullptr);
        } catch (const Error& e) {
            fp_error = e.what();
        }
    }
    {
        RunConfig c = config;
        c.continuation.corrector_kind = CorrectorKind::PseudoArclength;
        try {
            newton = run_branch_at(c, freq, config.plant.rng_seed, nullptr);
        } catch (const Error& e) {
            newton_error = e.what();
        }
    }

    const auto summarize = [](const Branch& branch, const std::string& error) {
        long total = 0;
        std::vector<double> per_point;
        for (const auto& pt : branch.points) {
            total += pt.settle_cycles;
            per_point.push_back(static_cast<double>(pt.settle_cycles));
        }
        return json{{"points", branch.points.size()},
                    {"total_settle_cycles", total},
                    {"median_settle_cycles", median(per_point)},
                    {"total_periods", branch.total_periods},
                    {"diagnostic", branch.diagnostic},
                    {"error", error}};
    };
    report["fixed_point"] = summarize(fixed_point, fp_error);
    report["pseudo_arclength"] = summarize(newton, newton_error);
    if (!fixed_point.points.empty() && !newton.points.empty()) {
        report["hausdorff_fr_rel"] = hausdorff_fr(fixed_point, newton);
        double fp_med = report["fixed_point"]["median_settle_cycles"].get<double>();
        double nw_med = report["pseudo_arclength"]["median_settle_cycles"].get<double>();
        report["median_cycle_ratio"] = fp_med > 0.0 ? nw_med / fp_med : 0.0;
    }

    write_text_file(out + "/branch_fixed_point.csv", branch_csv(fixed_point));
    write_text_file(out + "/branch_newton.csv", branch_csv(newton));
    write_text_file(out + "/compare.json", report.dump(2) + "\n");

    std::cout << "compare " << freq << " Hz: fixed-point "
              << report["fixed_point"]["total_settle_cycles"] << " cycles, Newton "
              << report["pseudo_arclength"]["total_settle_cycles"] << " cycles\n";
    return (!fp_error.empty() && !newton_error.empty()) ? 3 : 0;
}

}  // namespace cbc
