#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "zq/noise.hpp"
#include "zq/quadrature.hpp"
#include "zq/rng.hpp"

using namespace zq;

namespace {

double bg_pdf(double delta, double x) {
    return (1.0 + 0.5 * delta) / std::pow(1.0 + std::fabs(x), 3.0 + delta);
}

double bg_cdf(double scale, double delta, double x) {
    const double t = 1.0 - std::pow(1.0 + std::fabs(x) / scale, -(2.0 + delta));
    return x < 0.0 ? 0.5 - 0.5 * t : 0.5 + 0.5 * t;
}

} // namespace

TEST_CASE("bg inverse cdf") {
    CHECK(bg_inverse_cdf(2.0, 0.5) == 0.0);
    const double x = bg_inverse_cdf(2.0, 15.0 / 16.0);
    CHECK(x == doctest::Approx(std::pow(2.0, 0.75) - 1.0).epsilon(1e-12));
    // quadrature oracle: P(|Z| <= x) must equal 7/8 at that point
    const double inside =
        integrate([](double t) { return bg_pdf(2.0, t) + bg_pdf(2.0, -t); },
                  0.0, x, 1e-13);
    CHECK(inside == doctest::Approx(7.0 / 8.0).epsilon(1e-9));
    // heavy upper tail: monotone and unbounded as u -> 1
    CHECK(bg_inverse_cdf(2.0, 1.0 - 1e-12) > 500.0);
    CHECK(bg_inverse_cdf(2.0, 0.9) > bg_inverse_cdf(2.0, 0.8));
    CHECK_THROWS(bg_inverse_cdf(2.0, 0.0));
    CHECK_THROWS(bg_inverse_cdf(2.0, 1.0));
}

TEST_CASE("scaled BG sampler moments") {
    const NoiseSpec spec = NoiseSpec::scaled_bg(4.0, 2.0, 1);
    const NoiseSampler sampler(spec);
    Xoshiro256pp rng(101);
    const int n = 1000000;
    double sum = 0.0, sum2 = 0.0;
    double w;
    for (int i = 0; i < n; ++i) {
        sampler.draw(rng, std::span<double>(&w, 1));
        sum += w;
        sum2 += w * w;
    }
    const double mean = sum / n;
    const double m2 = sum2 / n;
    const double sd_mean = std::sqrt(m2 / n);
    CHECK(std::fabs(mean) < 4.0 * sd_mean);            // symmetry
    CHECK(m2 == doctest::Approx(16.0 / 3.0).epsilon(0.03));
}

TEST_CASE("unit BG second moment against the quadrature oracle") {
    const NoiseSpec spec = NoiseSpec::scaled_bg(1.0, 2.0, 1);
    // closed-form moment
    CHECK(noise_moment(spec, 2.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    // independent quadrature of x^2 p(x); tail remainder beyond U ~ 2 U^-2
    const double u_max = 2e5;
    const double oracle = integrate(
        [](double x) { return 2.0 * x * x * bg_pdf(2.0, x); }, 0.0, u_max,
        1e-11);
    CHECK(noise_moment(spec, 2.0) == doctest::Approx(oracle).epsilon(1e-7));
    // Monte Carlo agrees to 3%
    const NoiseSampler sampler(spec);
    Xoshiro256pp rng(9);
    double acc = 0.0, w;
    for (int i = 0; i < 1000000; ++i) {
        sampler.draw(rng, std::span<double>(&w, 1));
        acc += w * w;
    }
    CHECK(acc / 1e6 == doctest::Approx(1.0 / 3.0).epsilon(0.03));
}

TEST_CASE("moment closed forms and divergence") {
    CHECK(noise_moment(NoiseSpec::scaled_bg(4.0, 2.0, 1), 2.0) ==
          doctest::Approx(16.0 / 3.0).epsilon(1e-12));
    CHECK(std::isinf(noise_moment(NoiseSpec::scaled_bg(1.0, 2.0, 1), 4.0)));
    Eigen::MatrixXd s1(1, 1);
    s1 << 1.0;
    CHECK(noise_moment(NoiseSpec::gaussian(s1), 2.0) ==
          doctest::Approx(1.0).epsilon(1e-12));
    // E|Z|^3 for BG(delta=2): 4 * G(4)G(1)/G(5) = 1
    CHECK(noise_moment(NoiseSpec::scaled_bg(1.0, 2.0, 1), 3.0) ==
          doctest::Approx(1.0).epsilon(1e-12));
    // moment(spec, 2) equals the trace of the second-moment matrix
    for (double scale : {1.0, 4.0}) {
        const NoiseSpec spec = NoiseSpec::scaled_bg(scale, 2.0, 1);
        CHECK(noise_moment(spec, 2.0) ==
              doctest::Approx(spec.second_moment_matrix().trace()).epsilon(1e-12));
    }
}

TEST_CASE("tail function") {
    const NoiseSpec bg = NoiseSpec::scaled_bg(1.0, 2.0, 1);
    CHECK(noise_tail(bg, 0.0) == 1.0);
    CHECK(noise_tail(bg, 1.0) == doctest::Approx(0.0625).epsilon(1e-12));
    // independent quadrature of the density over [-1, 1]
    const double inside = integrate(
        [](double x) { return bg_pdf(2.0, x) + bg_pdf(2.0, -x); }, 0.0, 1.0,
        1e-13);
    CHECK(noise_tail(bg, 1.0) == doctest::Approx(1.0 - inside).epsilon(1e-9));

    Eigen::MatrixXd s1(1, 1);
    s1 << 1.0;
    const NoiseSpec gauss = NoiseSpec::gaussian(s1);
    const double u = 1.959964;
    const double inside_gauss = integrate(
        [](double x) {
            return 2.0 * std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
        },
        0.0, u, 1e-13);
    CHECK(noise_tail(gauss, u) == doctest::Approx(1.0 - inside_gauss).epsilon(1e-9));
    CHECK(noise_tail(gauss, u) == doctest::Approx(0.05).epsilon(2e-5));

    // nonincreasing in u
    double prev = 1.0;
    for (double uu : {0.0, 0.3, 1.0, 2.5, 7.0, 30.0}) {
        const double t = noise_tail(bg, uu);
        CHECK(t <= prev + 1e-15);
        prev = t;
    }

    // vector of iid axes: 1 - (1 - T1)^n
    const NoiseSpec bg2 = NoiseSpec::scaled_bg(1.0, 2.0, 2);
    const double t1 = noise_tail(bg, 1.0);
    CHECK(noise_tail(bg2, 1.0) ==
          doctest::Approx(1.0 - (1.0 - t1) * (1.0 - t1)).epsilon(1e-12));
}

TEST_CASE("Kolmogorov-Smirnov against the closed-form CDF") {
    const NoiseSpec spec = NoiseSpec::scaled_bg(4.0, 2.0, 1);
    const NoiseSampler sampler(spec);
    Xoshiro256pp rng(2024);
    const int n = 100000;
    std::vector<double> xs(n);
    double w;
    for (int i = 0; i < n; ++i) {
        sampler.draw(rng, std::span<double>(&w, 1));
        xs[i] = w;
    }
    std::sort(xs.begin(), xs.end());
    double d = 0.0;
    for (int i = 0; i < n; ++i) {
        const double f = bg_cdf(4.0, 2.0, xs[i]);
        d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
        d = std::max(d, std::fabs(f - static_cast<double>(i + 1) / n));
    }
    // critical value at significance 0.001: sqrt(ln(2/a)/2) / sqrt(n)
    const double critical = std::sqrt(std::log(2.0 / 0.001) / 2.0) / std::sqrt(n);
    CHECK(d < critical);
}

TEST_CASE("Markov consistency of the empirical tail") {
    const NoiseSpec spec = NoiseSpec::scaled_bg(1.0, 2.0, 1);
    const NoiseSampler sampler(spec);
    Xoshiro256pp rng(77);
    const int n = 100000;
    std::vector<double> xs(n);
    double w;
    for (int i = 0; i < n; ++i) {
        sampler.draw(rng, std::span<double>(&w, 1));
        xs[i] = std::fabs(w);
    }
    for (double m : {0.5, 1.0, 2.0, 3.0, 3.5}) {
        const double mom = noise_moment(spec, m);
        for (double u : {1.0, 2.0, 4.0, 8.0}) {
            double count = 0.0;
            for (double x : xs) count += x > u ? 1.0 : 0.0;
            const double p = count / n;
            const double se = std::sqrt(std::max(p * (1.0 - p), 1e-12) / n);
            CHECK(p <= mom / std::pow(u, m) + 4.0 * se);
        }
    }
}

TEST_CASE("custom scalar noise goes through the quadrature path") {
    const NoiseSpec spec = NoiseSpec::scalar_custom(
        [](double x) { return bg_pdf(2.0, x); },
        [](double u) { return bg_inverse_cdf(2.0, u); }, 1);
    CHECK(noise_moment(spec, 2.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-8));
    CHECK(noise_tail(spec, 1.0) == doctest::Approx(0.0625).epsilon(1e-8));
    CHECK(spec.second_moment_matrix()(0, 0) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-8));

    const NoiseSampler sampler(spec);
    Xoshiro256pp rng(5);
    double acc = 0.0, w;
    for (int i = 0; i < 200000; ++i) {
        sampler.draw(rng, std::span<double>(&w, 1));
        acc += w * w;
    }
    CHECK(acc / 2e5 == doctest::Approx(1.0 / 3.0).epsilon(0.06));
}

TEST_CASE("gaussian sampler second moment") {
    Eigen::MatrixXd cov(2, 2);
    cov << 1.0, 0.5, 0.5, 2.0;
    const NoiseSpec spec = NoiseSpec::gaussian(cov);
    const NoiseSampler sampler(spec);
    Xoshiro256pp rng(31);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(2, 2);
    std::vector<double> w(2);
    const int n = 400000;
    for (int i = 0; i < n; ++i) {
        sampler.draw(rng, w);
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c) acc(r, c) += w[r] * w[c];
    }
    acc /= n;
    CHECK((acc - cov).cwiseAbs().maxCoeff() < 0.03);
}

TEST_CASE("zero noise spec") {
    const NoiseSpec spec = NoiseSpec::zero(2);
    CHECK(spec.second_moment_matrix().cwiseAbs().maxCoeff() == 0.0);
    CHECK(noise_tail(spec, 0.0) == 0.0);
    const NoiseSampler sampler(spec);
    Xoshiro256pp rng(1);
    std::vector<double> w(2, 99.0);
    sampler.draw(rng, w);
    CHECK(w[0] == 0.0);
    CHECK(w[1] == 0.0);
}
