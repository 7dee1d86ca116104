#include "zq/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "zq/config.hpp"
#include "zq/csv.hpp"
#include "zq/sim.hpp"
#include "zq/trace_io.hpp"

namespace zq::cli {

namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitParse = 2;
constexpr int kExitRuntime = 3;

struct CommonOpts {
    std::string config_path;
    std::string preset;
    std::string out_dir_override;
    int workers = 0; // 0: hardware concurrency
    std::uint64_t seed_override = 0;
    bool has_seed_override = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "experiment config file (JSON)");
    cmd->add_option("--preset", opts.preset,
                    "built-in config: reproduce-paper | smoke");
    cmd->add_option("--out-dir", opts.out_dir_override, "output directory");
    cmd->add_option("--workers", opts.workers,
                    "parallel trial workers (default: hardware threads)");
    cmd->add_option("--seed-override", opts.seed_override, "replace run.seed")
        ->each([&opts](const std::string&) { opts.has_seed_override = true; });
}

ExperimentConfig resolve_config(const CommonOpts& opts) {
    if (!opts.config_path.empty() && !opts.preset.empty())
        throw ConfigError("give either --config or --preset, not both");
    ExperimentConfig cfg =
        !opts.config_path.empty()
            ? load_config(opts.config_path)
            : parse_config_text(preset_config_text(
                  opts.preset.empty() ? "reproduce-paper" : opts.preset));
    if (opts.has_seed_override) cfg.run.seed = opts.seed_override;
    if (!opts.out_dir_override.empty()) cfg.output.out_dir = opts.out_dir_override;
    return cfg;
}

int worker_count(const CommonOpts& opts) {
    if (opts.workers > 0) return opts.workers;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

fs::path ensure_out_dir(const ExperimentConfig& cfg) {
    fs::path dir(cfg.output.out_dir);
    fs::create_directories(dir);
    return dir;
}

int cmd_validate(const CommonOpts& opts) {
    const ExperimentConfig cfg = resolve_config(opts);
    const ValidationReport rep = validate_scheme(cfg.scheme, cfg.model);
    std::cout << rep.render();
    return rep.all_pass() ? kExitOk : kExitValidation;
}

int cmd_sweep(const CommonOpts& opts) {
    const ExperimentConfig cfg = resolve_config(opts);
    std::vector<int> n_list = cfg.run.N_list;
    if (n_list.empty()) n_list.push_back(cfg.run.N);
    {
        // the smallest N is the binding case for Condition 5
        const ValidationReport rep =
            validate_scheme(cfg.scheme_with_N(*std::min_element(
                                n_list.begin(), n_list.end())),
                            cfg.model);
        if (!rep.all_pass()) {
            std::cerr << rep.render();
            return kExitValidation;
        }
    }

    const fs::path dir = ensure_out_dir(cfg);
    const SweepResult result =
        sweep(cfg.model, cfg.scheme, n_list, cfg.run.seeds_per_N,
              cfg.run.trial_settings(), cfg.run.seed, worker_count(opts),
              [](const SweepRow& row) {
                  std::cerr << "N=" << row.N << " gap=" << row.mean_gap
                            << " T=" << row.mean_t_stop << "\n";
              });

    std::ofstream csv(dir / "sweep.csv");
    csv << "N,C_bits,mean_gap,stderr_gap,mean_T_stop,stopped_by_cap_count\n";
    int ok_rows = 0;
    for (const SweepRow& row : result.rows) {
        if (std::isfinite(row.mean_gap)) ++ok_rows;
        csv << row.N << ',' << format_double(row.c_bits) << ','
            << format_double(row.mean_gap) << ','
            << format_double(row.stderr_gap) << ','
            << format_double(row.mean_t_stop) << ',' << row.stopped_by_cap
            << '\n';
    }
    csv.close();

    const double classical = cfg.model.classical_cost();
    nlohmann::json summary;
    summary["classical_optimum"] = classical;
    summary["rows"] = result.rows.size();
    summary["seeds_per_N"] = result.seeds_per_N;
    try {
        const RegressionFit fit = fit_convergence_order(result);
        summary["slope"] = fit.slope;
        summary["intercept"] = fit.intercept;
        summary["r_squared"] = fit.r_squared;
        summary["rows_used"] = fit.rows_used;
        summary["rows_excluded_nonpositive"] = fit.rows_excluded;
        std::cout << "convergence slope: " << format_double(fit.slope)
                  << "  (intercept " << format_double(fit.intercept)
                  << ", r^2 " << format_double(fit.r_squared) << ")\n";
    } catch (const std::exception& ex) {
        summary["slope_error"] = ex.what();
        std::cout << "convergence slope: unavailable (" << ex.what() << ")\n";
    }
    std::cout << "classical optimum tr(Q Sigma): " << format_double(classical)
              << "\n";
    std::ofstream js(dir / "regression.json");
    js << summary.dump(2) << "\n";

    if (cfg.output.dump_trajectory) {
        // opt-in sample path at the representative N, next to the sweep
        const SchemeParams p = cfg.scheme_with_N(cfg.run.N);
        ClosedLoop loop(cfg.model, p,
                        make_stream(cfg.run.seed, 0x73616d70ull));
        loop.enable_ring(cfg.output.ring_capacity);
        TraceWriter writer(dir / "sample_path.bin", cfg.model.n(), p);
        std::ofstream tcsv(dir / "sample_path.csv");
        tcsv << "t";
        for (int i = 0; i < cfg.model.n(); ++i) tcsv << ",x" << i;
        tcsv << ",delta\n";
        for (std::uint64_t t = 0; t < cfg.run.settle_T; ++t) {
            const StepRecord& rec = loop.step();
            writer.write(rec);
            tcsv << rec.t;
            for (double xi : rec.x) tcsv << ',' << format_double(xi);
            tcsv << ',' << format_double(rec.delta) << '\n';
        }
    }

    const double frac =
        result.rows.empty()
            ? 0.0
            : static_cast<double>(ok_rows) / static_cast<double>(result.rows.size());
    return frac >= 0.8 ? kExitOk : kExitRuntime;
}

int cmd_trace(const CommonOpts& opts, int N_flag, std::int64_t seed_flag,
              std::int64_t T_flag) {
    ExperimentConfig cfg = resolve_config(opts);
    const int N = N_flag > 0 ? N_flag : cfg.run.N;
    const SchemeParams params = cfg.scheme_with_N(N);
    {
        const ValidationReport rep = validate_scheme(params, cfg.model);
        if (!rep.all_pass()) {
            std::cerr << rep.render();
            return kExitValidation;
        }
    }
    const std::uint64_t seed =
        seed_flag >= 0 ? static_cast<std::uint64_t>(seed_flag) : cfg.run.seed;
    const std::uint64_t T = T_flag >= 0 ? static_cast<std::uint64_t>(T_flag) : 5000;

    const fs::path dir = ensure_out_dir(cfg);
    TraceWriter writer(dir / "trace.bin", cfg.model.n(), params);
    std::ofstream csv(dir / "trace.csv");
    csv << "t";
    for (int i = 0; i < cfg.model.n(); ++i) csv << ",x" << i;
    csv << ",delta\n";

    ClosedLoop loop(cfg.model, params, make_stream(seed, 0x7472616365ull));
    loop.enable_ring(cfg.output.ring_capacity);
    for (std::uint64_t t = 0; t < T; ++t) {
        const StepRecord& rec = loop.step();
        writer.write(rec);
        csv << rec.t;
        for (double xi : rec.x) csv << ',' << format_double(xi);
        csv << ',' << format_double(rec.delta) << '\n';
    }
    std::cout << "wrote " << writer.records_written() << " records to "
              << (dir / "trace.bin").string() << "\n";
    return kExitOk;
}

int cmd_distortion(const CommonOpts& opts, const std::string& source_name,
                   double m, std::uint64_t samples) {
    const ExperimentConfig cfg = resolve_config(opts);
    Source source;
    if (source_name == "gaussian") {
        source = Source::gaussian(1.0);
        if (m <= 0) m = 8.0;
    } else if (source_name == "bg") {
        source = Source::bg(2.0, 1.0);
        if (m <= 0) m = 3.0;
    } else {
        throw ConfigError("unknown distortion source '" + source_name +
                          "' (expected gaussian | bg)");
    }
    const std::vector<int> n_list{8, 16, 32, 64, 128, 256, 512};
    const DistortionCurve curve =
        quantizer_distortion(source, n_list, m, samples, cfg.run.seed);

    const fs::path dir = ensure_out_dir(cfg);
    std::ofstream csv(dir / "distortion.csv");
    csv << "N,delta_N,empirical,analytic\n";
    for (const DistortionRow& row : curve.rows)
        csv << row.N << ',' << format_double(row.delta_N) << ','
            << format_double(row.mc) << ',' << format_double(row.oracle)
            << '\n';
    std::cout << "distortion slope (monte carlo): "
              << format_double(curve.slope_mc) << "\n"
              << "distortion slope (oracle):      "
              << format_double(curve.slope_oracle) << "\n";
    return kExitOk;
}

int cmd_tailbound(const CommonOpts& opts, int k_max, std::uint64_t episodes) {
    const ExperimentConfig cfg = resolve_config(opts);
    const SchemeParams params = cfg.scheme_with_N(cfg.run.N);
    {
        const ValidationReport rep = validate_scheme(params, cfg.model);
        if (!rep.all_pass()) {
            std::cerr << rep.render();
            return kExitValidation;
        }
    }
    const std::vector<double> x0(static_cast<std::size_t>(cfg.model.n()), 0.0);
    const ReturnTailEstimate est =
        estimate_return_tail(cfg.model, params, x0, params.delta0_exp, k_max,
                             episodes, cfg.run.seed);
    const double delta0 = params.delta_from_exp(params.delta0_exp);

    const fs::path dir = ensure_out_dir(cfg);
    std::ofstream csv(dir / "tailbound.csv");
    csv << "k,empirical,analytic\n";
    for (int k = 0; k <= k_max; ++k) {
        const double bound =
            k == 0 ? 1.0 : tail_bound_value(params, cfg.model, delta0, k);
        csv << k << ',' << format_double(est.p_tail[static_cast<std::size_t>(k)])
            << ',' << format_double(bound) << '\n';
    }
    std::cout << "wrote " << (dir / "tailbound.csv").string() << "\n";
    return kExitOk;
}

int cmd_baseline(const CommonOpts& opts, std::uint64_t T) {
    const ExperimentConfig cfg = resolve_config(opts);
    const double avg = fully_observed_baseline(cfg.model, cfg.run.seed, T);
    const double classical = cfg.model.classical_cost();
    const fs::path dir = ensure_out_dir(cfg);
    std::ofstream csv(dir / "baseline.csv");
    csv << "T,empirical,analytic\n";
    csv << T << ',' << format_double(avg) << ',' << format_double(classical)
        << '\n';
    std::cout << "fully observed average cost: " << format_double(avg)
              << "  (tr(Q Sigma) = " << format_double(classical) << ")\n";
    return kExitOk;
}

} // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"two-part adaptive/fixed quantized control simulator"};
    app.require_subcommand(1);

    CommonOpts opts;
    int trace_N = 0;
    std::int64_t trace_seed = -1;
    std::int64_t trace_T = -1;
    std::string dist_source = "gaussian";
    double dist_m = 0.0;
    std::uint64_t dist_samples = 2000000;
    int tail_k_max = 10;
    std::uint64_t tail_episodes = 100000;
    std::uint64_t baseline_T = 1000000;

    CLI::App* validate = app.add_subcommand(
        "validate", "check every scheme condition against the model");
    add_common(validate, opts);

    CLI::App* sweep_cmd = app.add_subcommand(
        "sweep", "trials over N with the variable stopping rule; CSV + fit");
    add_common(sweep_cmd, opts);

    CLI::App* trace = app.add_subcommand(
        "trace", "dump one closed-loop trajectory (binary + CSV projection)");
    add_common(trace, opts);
    trace->add_option("--N", trace_N, "fixed quantizer bins for this trace");
    trace->add_option("--seed", trace_seed, "trace stream seed");
    trace->add_option("--T", trace_T, "number of steps");

    CLI::App* distortion = app.add_subcommand(
        "distortion", "fixed-quantizer distortion curve vs N");
    add_common(distortion, opts);
    distortion->add_option("--source", dist_source, "gaussian | bg");
    distortion->add_option("--m", dist_m, "moment order for the bin-size rule");
    distortion->add_option("--samples", dist_samples, "Monte Carlo samples per N");

    CLI::App* tailbound = app.add_subcommand(
        "tailbound", "empirical return-time tail vs the analytic bound");
    add_common(tailbound, opts);
    tailbound->add_option("--k-max", tail_k_max, "largest tail index");
    tailbound->add_option("--episodes", tail_episodes, "Monte Carlo episodes");

    CLI::App* baseline = app.add_subcommand(
        "baseline", "fully observed classical controller average cost");
    add_common(baseline, opts);
    baseline->add_option("--T", baseline_T, "steps");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& ex) {
        if (ex.get_exit_code() == 0) { // --help
            std::cout << app.help();
            return kExitOk;
        }
        std::cerr << "argument error: " << ex.what() << "\n";
        return kExitParse;
    }

    try {
        if (validate->parsed()) return cmd_validate(opts);
        if (sweep_cmd->parsed()) return cmd_sweep(opts);
        if (trace->parsed()) return cmd_trace(opts, trace_N, trace_seed, trace_T);
        if (distortion->parsed())
            return cmd_distortion(opts, dist_source, dist_m, dist_samples);
        if (tailbound->parsed())
            return cmd_tailbound(opts, tail_k_max, tail_episodes);
        if (baseline->parsed()) return cmd_baseline(opts, baseline_T);
        std::cerr << "no command given\n";
        return kExitParse;
    } catch (const ConfigError& ex) {
        std::cerr << "config error: " << ex.what() << "\n";
        return kExitParse;
    } catch (const std::invalid_argument& ex) {
        std::cerr << "validation error: " << ex.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitRuntime;
    }
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args);
}

} // namespace zq::cli
