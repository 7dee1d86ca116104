#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "zq/rng.hpp"

namespace zq {

/// Inverse CDF of the Bucklew-Gallagher density p(x) = (1+d/2)(1+|x|)^-(3+d).
/// Composed with a uniform variate on (0,1) it realizes the distribution.
double bg_inverse_cdf(double delta, double u);

/// i.i.d. zero-mean noise specification. Densities are positive everywhere
/// for the Gaussian / BG / custom families; Zero is a degenerate spec kept
/// for tests of the noiseless loop.
struct NoiseSpec {
    enum class Kind { Zero, Gaussian, ScaledBG, ScalarCustom };

    Kind kind = Kind::Zero;
    int n = 1;

    // Gaussian
    Eigen::MatrixXd sigma;

    // ScaledBG, per-axis i.i.d.
    double bg_scale = 0.0;
    double bg_delta = 0.0;

    // ScalarCustom, per-axis i.i.d.
    std::function<double(double)> custom_pdf;
    std::function<double(double)> custom_inv_cdf;

    static NoiseSpec zero(int n);
    static NoiseSpec gaussian(const Eigen::MatrixXd& cov);
    static NoiseSpec scaled_bg(double scale, double delta, int n);
    static NoiseSpec scalar_custom(std::function<double(double)> pdf,
                                   std::function<double(double)> inv_cdf,
                                   int n);

    Eigen::MatrixXd second_moment_matrix() const;
    bool is_axiswise_iid() const;
};

/// Draws one vector sample into `out`. The number of uniforms consumed per
/// axis is fixed per family (BG: 2, Gaussian: 2, custom: 1, zero: 0) so
/// streams replay identically across code paths.
class NoiseSampler {
  public:
    explicit NoiseSampler(const NoiseSpec& spec);

    void draw(Xoshiro256pp& rng, std::span<double> out) const;
    int dim() const { return spec_.n; }
    const NoiseSpec& spec() const { return spec_; }

    /// One BG axis draw: sign uniform, magnitude (1-V)^(-1/(2+d)) - 1.
    static double draw_bg_axis(Xoshiro256pp& rng, double scale, double delta) {
        const double su = rng.uniform01();
        const double v = rng.uniform01();
        const double mag = bg_magnitude(v, delta);
        return (su < 0.5 ? -scale : scale) * mag;
    }

    static double bg_magnitude(double v, double delta) {
        const double base = 1.0 - v; // in (0, 1]
        if (delta == 2.0) return 1.0 / std::sqrt(std::sqrt(base)) - 1.0;
        return std::pow(base, -1.0 / (2.0 + delta)) - 1.0;
    }

    /// One standard normal via Box-Muller, two uniforms.
    static double draw_std_normal(Xoshiro256pp& rng) {
        const double u1 = 1.0 - rng.uniform01(); // in (0, 1]
        const double u2 = rng.uniform01();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(6.283185307179586476925287 * u2);
    }

  private:
    NoiseSpec spec_;
    Eigen::MatrixXd chol_; // lower factor for full-covariance Gaussian
    std::vector<double> axis_sd_;
    bool diagonal_ = true;
};

/// Tail function T(u) = P(||w||_inf > u). Closed form for BG and diagonal
/// Gaussian; axiswise product for i.i.d. vectors.
double noise_tail(const NoiseSpec& spec, double u);

/// E[||w||_inf^m]; returns +infinity when the moment diverges (BG with
/// m >= 2+delta). Scalar families use closed forms, vectors fall back to a
/// tail-integral quadrature with an analytic remainder cutoff.
double noise_moment(const NoiseSpec& spec, double m);

} // namespace zq
