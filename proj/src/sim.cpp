#include "zq/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <thread>

#include "zq/quadrature.hpp"

namespace zq {

double BatchMeans::stderr_of_mean() const {
    const std::size_t b = means_.size();
    if (b < 4) return std::numeric_limits<double>::quiet_NaN();
    double mean = 0.0;
    for (double m : means_) mean += m;
    mean /= static_cast<double>(b);
    double ss = 0.0;
    for (double m : means_) ss += (m - mean) * (m - mean);
    const double var_batch = ss / static_cast<double>(b - 1);
    return std::sqrt(var_batch / static_cast<double>(b));
}

namespace {

struct StopTracker {
    const TrialSettings& s;
    double avg = 0.0;
    std::uint64_t samples = 0;
    std::uint64_t quiet = 0;
    bool done = false;
    StopCause cause = StopCause::Cap;

    explicit StopTracker(const TrialSettings& settings) : s(settings) {}

    // One cost sample; returns true when the trial should stop.
    bool add(double cost) {
        const double prev = avg;
        ++samples;
        avg += (cost - avg) / static_cast<double>(samples);
        if (samples > 1) {
            quiet = std::fabs(avg - prev) < s.stop_eps ? quiet + 1 : 0;
            if (quiet >= s.settle_T) {
                done = true;
                cause = StopCause::Rule;
                return true;
            }
        }
        if (samples >= s.max_T) {
            done = true;
            cause = StopCause::Cap;
            return true;
        }
        return false;
    }
};

void require_valid(const SystemModel& model, const SchemeParams& params) {
    const ValidationReport rep = validate_scheme(params, model);
    if (!rep.all_pass())
        throw std::invalid_argument("scheme validation failed:\n" + rep.render());
}

/// Scalar fast path. Operation-for-operation identical to the generic
/// closed loop so results are bit-compatible; cross-checked in tests.
TrialResult run_trial_scalar(const SystemModel& model,
                             const SchemeParams& params,
                             const TrialSettings& st, std::uint64_t stream_key,
                             BatchMeans* batches) {
    Xoshiro256pp rng(stream_key);
    const NoiseSampler sampler(model.noise());

    double x;
    if (model.init().kind == InitSpec::Kind::Point) {
        x = model.init().x0[0];
    } else {
        NoiseSampler init_sampler(model.init().law);
        double buf;
        init_sampler.draw(rng, std::span<double>(&buf, 1));
        x = buf;
    }

    const int K = params.K;
    const int N = params.N;
    const double dN = params.delta_N();
    const double half_fixed = 0.5 * dN * static_cast<double>(N);
    const double a = model.A_rm()[0];
    const double b = model.B_rm()[0];
    const double gq = model.Q_rm()[0];
    const double gain = model.gain_rm()[0];

    long long m = params.delta0_exp;
    long long max_m = m;
    double max_abs_x = 0.0;
    std::uint64_t overflow_steps = 0;
    std::uint64_t total_steps = 0;

    StopTracker stop(st);
    double w;

    while (true) {
        const double ax = std::fabs(x);
        if (ax > max_abs_x) max_abs_x = ax;
        if (m > max_m) max_m = m;

        const double cost = x * (gq * x);
        ++total_steps;
        bool stop_now = false;
        if (total_steps > st.burn_in) {
            if (batches) batches->add(cost);
            stop_now = stop.add(cost);
        }

        // encoder: adaptive symbol and error
        const double dK = params.delta_from_exp(m);
        const double half_adaptive = 0.5 * dK * static_cast<double>(K);
        const bool in_view = x >= -half_adaptive && x <= half_adaptive;
        double q_mid = 0.0;
        if (in_view) {
            long long i =
                static_cast<long long>(std::floor(x / dK)) + K / 2;
            if (i < 0) i = 0;
            if (i > K - 1) i = K - 1;
            q_mid = dK * static_cast<double>(i - K / 2) + 0.5 * dK;
        } else {
            ++overflow_steps;
        }
        const double e = x - q_mid;

        // fixed stage on the adaptive error
        double u_fix = 0.0;
        if (e >= -half_fixed && e <= half_fixed) {
            long long i = static_cast<long long>(std::floor(e / dN)) + N / 2;
            if (i < 0) i = 0;
            if (i > N - 1) i = N - 1;
            u_fix = dN * static_cast<double>(i - N / 2) + 0.5 * dN;
        }

        // controller and plant
        const double xhat = q_mid + u_fix;
        const double u = -(gain * xhat);
        m = bin_update(m, in_view, params);

        if (stop_now) break;

        sampler.draw(rng, std::span<double>(&w, 1));
        x = a * x + b * u + w;
    }

    TrialResult res;
    res.avg_cost = stop.avg;
    res.t_stop = stop.samples;
    res.stopped_by = stop.cause;
    res.gap = stop.avg - model.classical_cost();
    res.diag.max_abs_x = max_abs_x;
    res.diag.max_delta = params.delta_from_exp(max_m);
    res.diag.overflow_fraction =
        static_cast<double>(overflow_steps) / static_cast<double>(total_steps);
    return res;
}

} // namespace

namespace detail {

TrialResult run_trial_generic(const SystemModel& model,
                              const SchemeParams& params,
                              const TrialSettings& st,
                              std::uint64_t stream_key, BatchMeans* batches) {
    const int n = model.n();
    ClosedLoop loop(model, params, Xoshiro256pp(stream_key),
                    /*check_dynamics=*/false);

    long long max_m = params.delta0_exp;
    double max_abs_x = 0.0;
    std::uint64_t overflow_steps = 0;
    std::uint64_t total_steps = 0;
    const double* q = model.Q_rm().data();

    StopTracker stop(st);
    while (true) {
        const std::vector<double>& x = loop.x();
        for (int i = 0; i < n; ++i)
            max_abs_x = std::max(max_abs_x, std::fabs(x[i]));
        if (loop.delta_exp() > max_m) max_m = loop.delta_exp();

        const double cost = quad_form(q, n, x.data());
        ++total_steps;
        bool stop_now = false;
        if (total_steps > st.burn_in) {
            if (batches) batches->add(cost);
            stop_now = stop.add(cost);
        }

        const StepRecord& rec = loop.step();
        if (!rec.in_view) ++overflow_steps;
        if (stop_now) break;
    }

    TrialResult res;
    res.avg_cost = stop.avg;
    res.t_stop = stop.samples;
    res.stopped_by = stop.cause;
    res.gap = stop.avg - model.classical_cost();
    res.diag.max_abs_x = max_abs_x;
    res.diag.max_delta = params.delta_from_exp(max_m);
    res.diag.overflow_fraction =
        static_cast<double>(overflow_steps) / static_cast<double>(total_steps);
    return res;
}

} // namespace detail

TrialResult run_trial(const SystemModel& model, const SchemeParams& params,
                      const TrialSettings& settings, std::uint64_t stream_key,
                      BatchMeans* batches) {
    require_valid(model, params);
    if (model.n() == 1)
        return run_trial_scalar(model, params, settings, stream_key, batches);
    return detail::run_trial_generic(model, params, settings, stream_key,
                                     batches);
}

// ---------------------------------------------------------------------------

SweepResult sweep(const SystemModel& model, const SchemeParams& base_params,
                  const std::vector<int>& N_list, int seeds_per_N,
                  const TrialSettings& settings, std::uint64_t master_seed,
                  int workers,
                  const std::function<void(const SweepRow&)>& on_row) {
    for (int N : N_list)
        if (N < 2 || N % 2 != 0)
            throw std::invalid_argument("sweep: every N must be even and >= 2");
    if (seeds_per_N < 1)
        throw std::invalid_argument("sweep: seeds_per_N must be >= 1");

    std::vector<int> sorted = N_list;
    std::sort(sorted.begin(), sorted.end());

    SweepResult result;
    result.master_seed = master_seed;
    result.seeds_per_N = seeds_per_N;
    result.rows.resize(sorted.size());

    std::atomic<std::size_t> next{0};
    std::mutex row_mutex;

    auto work = [&]() {
        while (true) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= sorted.size()) return;
            const int N = sorted[idx];
            SweepRow row;
            row.N = N;
            row.c_bits = capacity_bits(base_params.K, N, model.n());
            std::vector<double> gaps;
            double t_sum = 0.0;
            for (int rep = 0; rep < seeds_per_N; ++rep) {
                try {
                    const SchemeParams p = base_params.with_N(N);
                    const TrialResult tr =
                        run_trial(model, p, settings,
                                  derive_stream_key(master_seed,
                                                    static_cast<std::uint64_t>(N),
                                                    static_cast<std::uint64_t>(rep)));
                    gaps.push_back(tr.gap);
                    t_sum += static_cast<double>(tr.t_stop);
                    if (tr.stopped_by == StopCause::Cap) ++row.stopped_by_cap;
                } catch (const std::exception& ex) {
                    ++row.failed_trials;
                    if (row.error.empty()) row.error = ex.what();
                }
            }
            row.gaps = gaps;
            if (gaps.empty()) {
                row.mean_gap = std::numeric_limits<double>::quiet_NaN();
                row.stderr_gap = std::numeric_limits<double>::quiet_NaN();
                row.mean_t_stop = std::numeric_limits<double>::quiet_NaN();
            } else {
                double mean = 0.0;
                for (double g : gaps) mean += g;
                mean /= static_cast<double>(gaps.size());
                row.mean_gap = mean;
                if (gaps.size() > 1) {
                    double ss = 0.0;
                    for (double g : gaps) ss += (g - mean) * (g - mean);
                    row.stderr_gap = std::sqrt(
                        ss / static_cast<double>(gaps.size() - 1) /
                        static_cast<double>(gaps.size()));
                } else {
                    row.stderr_gap = 0.0;
                }
                row.mean_t_stop = t_sum / static_cast<double>(gaps.size());
            }
            {
                std::lock_guard<std::mutex> lock(row_mutex);
                result.rows[idx] = row;
                if (on_row) on_row(row);
            }
        }
    };

    const int nworkers = std::max(1, workers);
    if (nworkers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(nworkers));
        for (int i = 0; i < nworkers; ++i) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    return result;
}

RegressionFit fit_line(const std::vector<double>& x,
                       const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_line: need >= 2 points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_line: degenerate abscissa");
    RegressionFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    fit.rows_used = static_cast<int>(x.size());
    return fit;
}

RegressionFit fit_convergence_order(const SweepResult& sw) {
    std::vector<double> xs, ys;
    int excluded = 0;
    for (const SweepRow& row : sw.rows) {
        if (std::isfinite(row.mean_gap) && row.mean_gap > 0.0) {
            xs.push_back(row.c_bits);
            ys.push_back(std::log2(row.mean_gap));
        } else {
            ++excluded;
        }
    }
    if (xs.size() < 3)
        throw std::invalid_argument(
            "fit_convergence_order: need >= 3 rows with positive gap");
    RegressionFit fit = fit_line(xs, ys);
    fit.rows_excluded = excluded;
    return fit;
}

double spearman_rank_correlation(const std::vector<double>& x,
                                 const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("spearman: need matched samples");
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> order(v.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < order.size();) {
            std::size_t j = i;
            while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
            const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    const std::vector<double> rx = ranks(x), ry = ranks(y);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= static_cast<double>(rx.size());
    my /= static_cast<double>(ry.size());
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------

ReturnTailEstimate estimate_return_tail(const SystemModel& model,
                                        const SchemeParams& params,
                                        std::span<const double> x0,
                                        long long delta_exp0, int k_max,
                                        std::uint64_t episodes,
                                        std::uint64_t master_seed) {
    require_valid(model, params);
    const double delta0 = params.delta_from_exp(delta_exp0);
    const UniformGrid start_grid(params.K, delta0);
    for (double xi : x0)
        if (!start_grid.in_range(xi))
            throw std::invalid_argument(
                "estimate_return_tail: start state must be in view");

    std::vector<std::uint64_t> count(static_cast<std::size_t>(k_max) + 1, 0);
    for (std::uint64_t ep = 0; ep < episodes; ++ep) {
        ClosedLoop loop(model, params,
                        make_stream(master_seed, 0x7461696cull, ep),
                        /*check_dynamics=*/false);
        loop.set_state(x0, delta_exp0);
        const StepRecord& first = loop.step(); // processes (x_0, Delta_0)
        if (!first.in_view)
            throw std::logic_error("estimate_return_tail: start not in view");
        int tau = k_max + 1;
        for (int t = 1; t <= k_max + 1; ++t) {
            const StepRecord& rec = loop.step();
            if (rec.in_view) {
                tau = t;
                break;
            }
        }
        for (int k = 0; k <= k_max; ++k)
            if (tau >= k + 1) ++count[static_cast<std::size_t>(k)];
    }

    ReturnTailEstimate est;
    est.episodes = episodes;
    est.p_tail.resize(count.size());
    est.stderr_p.resize(count.size());
    for (std::size_t k = 0; k < count.size(); ++k) {
        const double p =
            static_cast<double>(count[k]) / static_cast<double>(episodes);
        est.p_tail[k] = p;
        est.stderr_p[k] =
            std::sqrt(std::max(0.0, p * (1.0 - p)) /
                      static_cast<double>(episodes));
    }
    return est;
}

double tail_bound_value(const SchemeParams& params, const SystemModel& model,
                        double delta, int k) {
    if (k < 1) throw std::invalid_argument("tail_bound_value: k must be >= 1");
    const double alpha = params.alpha();
    if (delta < alpha * params.L - 1e-12 * params.L)
        throw std::invalid_argument("tail_bound_value: Delta below alpha*L");
    const double a = model.a_norm();
    const double xi = params.rho() / a;
    const double h = params.K * alpha / params.rho();
    const double arg =
        0.5 * delta *
        ((h * std::pow(xi, k) - 1.0) / static_cast<double>(k) -
         params.delta_N() / (alpha * params.L));
    if (!(arg > 0.0))
        throw std::runtime_error(
            "tail_bound_value: nonpositive tail argument (Condition 5 violated)");
    return std::min(1.0, static_cast<double>(k) *
                             noise_tail(model.noise(), arg));
}

// ---------------------------------------------------------------------------

Source Source::gaussian(double sd) {
    Source s;
    s.kind = Kind::Gaussian;
    s.sd = sd;
    return s;
}

Source Source::bg(double delta, double scale) {
    Source s;
    s.kind = Kind::BG;
    s.bg_delta = delta;
    s.bg_scale = scale;
    return s;
}

Source Source::point_mass() {
    Source s;
    s.kind = Kind::PointMass;
    return s;
}

namespace {

double source_density(const Source& s, double x) {
    switch (s.kind) {
        case Source::Kind::Gaussian:
            return std::exp(-0.5 * x * x / (s.sd * s.sd)) /
                   (s.sd * std::sqrt(2.0 * M_PI));
        case Source::Kind::BG: {
            const double z = std::fabs(x) / s.bg_scale;
            return (1.0 + 0.5 * s.bg_delta) /
                   (s.bg_scale * std::pow(1.0 + z, 3.0 + s.bg_delta));
        }
        case Source::Kind::PointMass:
            return 0.0;
    }
    return 0.0;
}

/// E[X^2 1{|X| > u}], closed form per family.
double source_overflow_second_moment(const Source& s, double u) {
    switch (s.kind) {
        case Source::Kind::Gaussian: {
            const double z = u / s.sd;
            const double phi =
                std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
            const double q = 0.5 * std::erfc(z / std::sqrt(2.0));
            return 2.0 * s.sd * s.sd * (z * phi + q);
        }
        case Source::Kind::BG: {
            const double d = s.bg_delta;
            const double Y = 1.0 + u / s.bg_scale;
            const double integral = std::pow(Y, -d) / d -
                                    2.0 * std::pow(Y, -(1.0 + d)) / (1.0 + d) +
                                    std::pow(Y, -(2.0 + d)) / (2.0 + d);
            return s.bg_scale * s.bg_scale * (2.0 + d) * integral;
        }
        case Source::Kind::PointMass:
            return 0.0;
    }
    return 0.0;
}

double source_sample(const Source& s, Xoshiro256pp& rng) {
    switch (s.kind) {
        case Source::Kind::Gaussian:
            return s.sd * NoiseSampler::draw_std_normal(rng);
        case Source::Kind::BG:
            return NoiseSampler::draw_bg_axis(rng, s.bg_scale, s.bg_delta);
        case Source::Kind::PointMass:
            return 0.0;
    }
    return 0.0;
}

double distortion_oracle(const Source& s, const UniformGrid& grid) {
    if (s.kind == Source::Kind::PointMass) {
        const double r = partial_quantize(grid, 0.0);
        return r * r;
    }
    const double half = grid.half_range();
    double total = source_overflow_second_moment(s, half);
    for (int i = 0; i < grid.M; ++i) {
        const double lo = -half + grid.delta * static_cast<double>(i);
        const double hi = lo + grid.delta;
        const double mid = grid.midpoint(i);
        total += integrate(
            [&](double x) {
                const double d = x - mid;
                return d * d * source_density(s, x);
            },
            lo, hi, 1e-15);
    }
    return total;
}

} // namespace

DistortionCurve quantizer_distortion(const Source& source,
                                     const std::vector<int>& N_list, double m,
                                     std::uint64_t mc_samples,
                                     std::uint64_t master_seed) {
    if (!(m > 2.0))
        throw std::invalid_argument("quantizer_distortion: need m > 2");
    if (source.kind == Source::Kind::BG && m >= 2.0 + source.bg_delta)
        throw std::invalid_argument(
            "quantizer_distortion: source lacks the requested moment");

    DistortionCurve curve;
    curve.moment_order = m;
    for (int N : N_list) {
        if (N < 2 || N % 2 != 0)
            throw std::invalid_argument("quantizer_distortion: N must be even");
        DistortionRow row;
        row.N = N;
        row.delta_N = 2.0 * std::pow(static_cast<double>(N), -1.0 + 2.0 / m);
        const UniformGrid grid(N, row.delta_N);

        row.oracle = distortion_oracle(source, grid);

        Xoshiro256pp rng = make_stream(master_seed, 0x64697374ull,
                                       static_cast<std::uint64_t>(N));
        double acc = 0.0;
        for (std::uint64_t i = 0; i < mc_samples; ++i) {
            const double x = source_sample(source, rng);
            const double r = scalar_quantize(grid, x);
            const double d = x - r;
            acc += d * d;
        }
        row.mc = mc_samples > 0 ? acc / static_cast<double>(mc_samples) : 0.0;
        curve.rows.push_back(row);
    }

    std::vector<double> ox, oy, mx, my;
    for (const auto& row : curve.rows) {
        if (row.oracle > 0.0) {
            ox.push_back(std::log2(static_cast<double>(row.N)));
            oy.push_back(std::log2(row.oracle));
        }
        if (row.mc > 0.0) {
            mx.push_back(std::log2(static_cast<double>(row.N)));
            my.push_back(std::log2(row.mc));
        }
    }
    if (ox.size() >= 2) curve.slope_oracle = fit_line(ox, oy).slope;
    if (mx.size() >= 2) curve.slope_mc = fit_line(mx, my).slope;
    return curve;
}

// ---------------------------------------------------------------------------

GapCrossCheck gap_cross_check(const SystemModel& model,
                              const SchemeParams& params, std::uint64_t seed,
                              std::uint64_t T) {
    require_valid(model, params);
    const int n = model.n();
    ClosedLoop loop(model, params, Xoshiro256pp(seed), false);

    const Eigen::MatrixXd M =
        model.A().transpose() * model.Q() * model.A();
    std::vector<double> m_rm(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            m_rm[static_cast<std::size_t>(i) * n + j] = M(i, j);

    const UniformGrid fixed(params.N, params.delta_N());
    std::vector<double> ufix(static_cast<std::size_t>(n));
    std::vector<double> s(static_cast<std::size_t>(n));
    const double* q = model.Q_rm().data();

    double s_direct = 0.0, s_identity = 0.0;
    for (std::uint64_t t = 0; t < T; ++t) {
        const double cost = quad_form(q, n, loop.x().data());
        s_direct += (cost - s_direct) / static_cast<double>(t + 1);
        const StepRecord& rec = loop.step();
        decode_fixed(rec.fixed, fixed, ufix);
        for (int i = 0; i < n; ++i) s[i] = rec.e[i] - ufix[i];
        const double ident = quad_form(m_rm.data(), n, s.data());
        s_identity += (ident - s_identity) / static_cast<double>(t + 1);
    }

    GapCrossCheck out;
    out.gap_direct = s_direct - model.classical_cost();
    out.gap_identity = s_identity;
    const double denom = std::max(std::fabs(out.gap_direct),
                                  std::fabs(out.gap_identity));
    out.rel_diff = denom > 0.0 ? std::fabs(out.gap_direct - out.gap_identity) /
                                     denom
                               : 0.0;
    out.agree = out.rel_diff < 0.10 ||
                std::fabs(out.gap_direct - out.gap_identity) < 1e-4;
    return out;
}

ErgodicReport ergodic_consistency(const SystemModel& model,
                                  const SchemeParams& params,
                                  const std::vector<std::vector<double>>& x0s,
                                  const TrialSettings& settings,
                                  std::uint64_t master_seed) {
    if (x0s.size() < 2)
        throw std::invalid_argument(
            "ergodic_consistency: need >= 2 initial conditions");
    ErgodicReport rep;
    for (std::size_t i = 0; i < x0s.size(); ++i) {
        SystemModel variant(model.A(), model.B(), model.Q(), model.noise(),
                            InitSpec::point(x0s[i]));
        BatchMeans batches;
        const TrialResult tr =
            run_trial(variant, params, settings,
                      derive_stream_key(master_seed, 0x657267ull, i), &batches);
        ErgodicTrial et;
        et.x0 = x0s[i];
        et.avg_cost = tr.avg_cost;
        et.stderr_cost = batches.stderr_of_mean();
        et.t_stop = tr.t_stop;
        et.stopped_by = tr.stopped_by;
        rep.trials.push_back(et);
    }
    rep.agree = true;
    for (std::size_t i = 0; i < rep.trials.size(); ++i)
        for (std::size_t j = i + 1; j < rep.trials.size(); ++j) {
            const double se = std::sqrt(
                rep.trials[i].stderr_cost * rep.trials[i].stderr_cost +
                rep.trials[j].stderr_cost * rep.trials[j].stderr_cost);
            const double z =
                std::fabs(rep.trials[i].avg_cost - rep.trials[j].avg_cost) /
                (se > 0.0 ? se : 1e-300);
            rep.worst_z = std::max(rep.worst_z, z);
            if (!(z <= 4.0)) rep.agree = false;
        }
    return rep;
}

double fully_observed_baseline(const SystemModel& model, std::uint64_t seed,
                               std::uint64_t T) {
    const int n = model.n();
    Xoshiro256pp rng(seed);
    const NoiseSampler sampler(model.noise());

    std::vector<double> x(static_cast<std::size_t>(n), 0.0);
    if (model.init().kind == InitSpec::Kind::Point) {
        x = model.init().x0;
    } else {
        NoiseSampler init_sampler(model.init().law);
        init_sampler.draw(rng, x);
    }
    std::vector<double> u(static_cast<std::size_t>(n));
    std::vector<double> w(static_cast<std::size_t>(n));
    std::vector<double> xn(static_cast<std::size_t>(n));

    const double* q = model.Q_rm().data();
    const double* g = model.gain_rm().data();
    double avg = 0.0;
    for (std::uint64_t t = 0; t < T; ++t) {
        const double cost = quad_form(q, n, x.data());
        avg += (cost - avg) / static_cast<double>(t + 1);
        for (int i = 0; i < n; ++i) u[i] = -matvec_row(g, n, i, x.data());
        sampler.draw(rng, w);
        plant_step(model, x, u, w, xn);
        x.swap(xn);
    }
    return avg;
}

} // namespace zq
