#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "zq/codec.hpp"
#include "zq/model.hpp"

namespace zq {

// ---------------------------------------------------------------------------
// Trials
// ---------------------------------------------------------------------------

struct TrialSettings {
    double stop_eps = 1e-4;        // convergence threshold for |S_{T+1} - S_T|
    std::uint64_t settle_T = 10000; // consecutive quiet stages required
    std::uint64_t max_T = 50000000; // hard cap; heavy tails can defer settling
    std::uint64_t burn_in = 0;      // steps simulated but excluded from S
};

enum class StopCause { Rule, Cap };

struct TrialDiagnostics {
    double max_abs_x = 0.0;      // max ||x_t||_inf over the run
    double max_delta = 0.0;      // largest adaptive bin size reached
    double overflow_fraction = 0.0; // fraction of steps with adaptive symbol 0
};

struct TrialResult {
    double avg_cost = 0.0; // final S_T of x^T Q x
    std::uint64_t t_stop = 0;
    StopCause stopped_by = StopCause::Rule;
    double gap = 0.0; // avg_cost - tr(Q Sigma)
    TrialDiagnostics diag;
};

/// Online batch-means accumulator for a standard error of the running mean.
class BatchMeans {
  public:
    explicit BatchMeans(std::uint64_t batch_len = 1 << 14)
        : len_(batch_len) {}
    void add(double v) {
        sum_ += v;
        if (++count_ == len_) {
            means_.push_back(sum_ / static_cast<double>(len_));
            sum_ = 0.0;
            count_ = 0;
        }
    }
    std::size_t batches() const { return means_.size(); }
    /// Standard error of the grand mean; NaN with fewer than 4 batches.
    double stderr_of_mean() const;

  private:
    std::uint64_t len_;
    std::uint64_t count_ = 0;
    double sum_ = 0.0;
    std::vector<double> means_;
};

/// Runs one closed-loop trial with the variable stopping rule: stop once
/// |S_{T+1} - S_T| < stop_eps for settle_T consecutive stages, or at max_T.
/// Deterministic in (config, stream_key); aborts before stepping if the
/// scheme conditions fail against the model.
TrialResult run_trial(const SystemModel& model, const SchemeParams& params,
                      const TrialSettings& settings, std::uint64_t stream_key,
                      BatchMeans* batches = nullptr);

namespace detail {
/// Dimension-generic reference path, used to cross-check the scalar kernel.
TrialResult run_trial_generic(const SystemModel& model,
                              const SchemeParams& params,
                              const TrialSettings& settings,
                              std::uint64_t stream_key,
                              BatchMeans* batches = nullptr);
} // namespace detail

// ---------------------------------------------------------------------------
// Sweeps and the convergence-order fit
// ---------------------------------------------------------------------------

struct SweepRow {
    int N = 0;
    double c_bits = 0.0;
    double mean_gap = 0.0;   // NaN when every trial of the row failed
    double stderr_gap = 0.0; // 0 with a single seed
    double mean_t_stop = 0.0;
    int stopped_by_cap = 0;
    int failed_trials = 0;
    std::string error;         // first failure message, empty otherwise
    std::vector<double> gaps;  // per-replicate gaps, ordered by replicate
};

struct SweepResult {
    std::vector<SweepRow> rows; // sorted by N
    std::uint64_t master_seed = 0;
    int seeds_per_N = 1;
};

/// Independent trials over every (N, seed); rows keyed by N so results are
/// identical for any worker count. Per-row failures are recorded and the
/// sweep continues.
SweepResult sweep(const SystemModel& model, const SchemeParams& base_params,
                  const std::vector<int>& N_list, int seeds_per_N,
                  const TrialSettings& settings, std::uint64_t master_seed,
                  int workers = 1,
                  const std::function<void(const SweepRow&)>& on_row = {});

struct RegressionFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    int rows_used = 0;
    int rows_excluded = 0; // non-positive or failed gaps, reported not hidden
};

/// OLS of log2(gap) on C over rows with positive gap; the slope estimates
/// the convergence order. Fewer than 3 usable rows is a contract violation.
RegressionFit fit_convergence_order(const SweepResult& sweep);

/// OLS on explicit (x, y) pairs.
RegressionFit fit_line(const std::vector<double>& x,
                       const std::vector<double>& y);

double spearman_rank_correlation(const std::vector<double>& x,
                                 const std::vector<double>& y);

// ---------------------------------------------------------------------------
// Return-time tails
// ---------------------------------------------------------------------------

struct ReturnTailEstimate {
    std::vector<double> p_tail; // index k: P(tau >= k+1), k = 0..k_max
    std::uint64_t episodes = 0;
    std::vector<double> stderr_p; // binomial standard errors
};

/// Monte Carlo estimate of the in-view return-time tail from a fixed
/// in-view start (x0, Delta = L g^delta_exp0) over fresh noise.
ReturnTailEstimate estimate_return_tail(const SystemModel& model,
                                        const SchemeParams& params,
                                        std::span<const double> x0,
                                        long long delta_exp0, int k_max,
                                        std::uint64_t episodes,
                                        std::uint64_t master_seed);

/// Closed-form bound k T_w((Delta/2)((h xi^k - 1)/k - Delta_N/(alpha L))),
/// clipped to [0, 1]. A nonpositive tail argument signals a Condition 5
/// violation upstream and throws.
double tail_bound_value(const SchemeParams& params, const SystemModel& model,
                        double delta, int k);

// ---------------------------------------------------------------------------
// Quantizer distortion
// ---------------------------------------------------------------------------

struct Source {
    enum class Kind { Gaussian, BG, PointMass } kind = Kind::Gaussian;
    double sd = 1.0;       // Gaussian
    double bg_scale = 1.0; // BG
    double bg_delta = 2.0; // BG
    static Source gaussian(double sd = 1.0);
    static Source bg(double delta, double scale = 1.0);
    static Source point_mass();
};

struct DistortionRow {
    int N = 0;
    double delta_N = 0.0;
    double mc = 0.0;     // Monte Carlo estimate of E[(X - U_N(X))^2]
    double oracle = 0.0; // deterministic numeric-integration value
};

struct DistortionCurve {
    std::vector<DistortionRow> rows;
    double slope_mc = 0.0;     // log-log slope of D vs N
    double slope_oracle = 0.0;
    double moment_order = 0.0;
};

/// Distortion of the fixed quantizer with Delta_(N) = 2 N^(-1+2/m), per N,
/// via Monte Carlo and a deterministic integration oracle.
DistortionCurve quantizer_distortion(const Source& source,
                                     const std::vector<int>& N_list, double m,
                                     std::uint64_t mc_samples,
                                     std::uint64_t master_seed);

// ---------------------------------------------------------------------------
// Cross-checks against the paper's identities
// ---------------------------------------------------------------------------

struct GapCrossCheck {
    double gap_direct = 0.0;   // S_T - tr(Q Sigma)
    double gap_identity = 0.0; // time average of (e - U(e))^T A^T Q A (e - U(e))
    double rel_diff = 0.0;
    bool agree = false; // rel < 10% or abs < 1e-4
};

GapCrossCheck gap_cross_check(const SystemModel& model,
                              const SchemeParams& params, std::uint64_t seed,
                              std::uint64_t T = 1000000);

struct ErgodicTrial {
    std::vector<double> x0;
    double avg_cost = 0.0;
    double stderr_cost = 0.0;
    std::uint64_t t_stop = 0;
    StopCause stopped_by = StopCause::Rule;
};

struct ErgodicReport {
    std::vector<ErgodicTrial> trials;
    double worst_z = 0.0; // max pairwise |S_i - S_j| / sqrt(se_i^2 + se_j^2)
    bool agree = false;   // all pairwise gaps within 4 sigma
};

/// Long-run S_T from several initial conditions must agree pairwise within
/// combined Monte Carlo error. Distinct noise streams per initial state.
ErgodicReport ergodic_consistency(const SystemModel& model,
                                  const SchemeParams& params,
                                  const std::vector<std::vector<double>>& x0s,
                                  const TrialSettings& settings,
                                  std::uint64_t master_seed);

/// Classical fully observed controller u = -B^-1 A x; the average cost
/// converges to tr(Q Sigma).
double fully_observed_baseline(const SystemModel& model, std::uint64_t seed,
                               std::uint64_t T);

} // namespace zq
