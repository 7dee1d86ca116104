#include <doctest.h>

#include <cmath>
#include <random>

#include "zq/model.hpp"
#include "zq/rng.hpp"

using namespace zq;

namespace {

SystemModel paper_model() {
    Eigen::MatrixXd A(1, 1), B(1, 1), Q(1, 1);
    A << 1.2;
    B << 1.0;
    Q << 1.0;
    return SystemModel(A, B, Q, NoiseSpec::scaled_bg(4.0, 2.0, 1),
                       InitSpec::point({0.0}));
}

SchemeParams paper_params(int N = 100) {
    return SchemeParams(2, N, Rational{4, 3}, 1, 3, 9.0, 0, 3.95, 0.95);
}

} // namespace

TEST_CASE("infinity norm") {
    Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
    CHECK(infinity_norm(id) == doctest::Approx(1.0));
    Eigen::MatrixXd a(1, 1);
    a << 1.2;
    CHECK(infinity_norm(a) == doctest::Approx(1.2));
    Eigen::MatrixXd m(2, 2);
    m << 1.0, -2.0, 3.0, 0.5;
    CHECK(infinity_norm(m) == doctest::Approx(3.5));
}

TEST_CASE("jordan mode norms cover the four cases") {
    CHECK(jordan_mode_norm(JordanMode(1.2, 1)) == doctest::Approx(1.2));
    CHECK(jordan_mode_norm(JordanMode(2.0, 3)) == doctest::Approx(3.0));
    CHECK(jordan_mode_norm(JordanMode(std::complex<double>(1.0, 1.0), 2)) ==
          doctest::Approx(2.0));
    CHECK(jordan_mode_norm(JordanMode(std::complex<double>(1.0, 1.0), 4)) ==
          doctest::Approx(3.0));
}

TEST_CASE("jordan mode norm equals the norm of the explicit block") {
    Xoshiro256pp rng(5);
    for (int size = 1; size <= 6; ++size) {
        for (int trial = 0; trial < 50; ++trial) {
            const double lam = (rng.uniform01() * 6.0) - 3.0;
            const JordanMode mode(lam, size);
            CHECK(jordan_mode_norm(mode) ==
                  doctest::Approx(infinity_norm(jordan_block_matrix(mode)))
                      .epsilon(1e-12));
        }
        if (size >= 2 && size % 2 == 0) {
            for (int trial = 0; trial < 50; ++trial) {
                const std::complex<double> lam(rng.uniform01() * 4.0 - 2.0,
                                               rng.uniform01() * 4.0 + 0.01);
                const JordanMode mode(lam, size);
                CHECK(jordan_mode_norm(mode) ==
                      doctest::Approx(infinity_norm(jordan_block_matrix(mode)))
                          .epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("similarity scaling") {
    {
        const auto m = similarity_scale(JordanMode(2.0, 2), 0.1);
        CHECK(m(0, 0) == 2.0);
        CHECK(m(0, 1) == 0.1);
        CHECK(m(1, 0) == 0.0);
        CHECK(m(1, 1) == 2.0);
        CHECK(infinity_norm(m) == doctest::Approx(2.1));
    }
    {
        const auto m = similarity_scale(JordanMode(1.5, 1), 0.3);
        CHECK(m(0, 0) == 1.5);
        CHECK(m.rows() == 1);
    }
    {
        // conjugate numerically with S = diag(1, e, e^2) and compare
        const double eps_s = 0.01;
        const JordanMode mode(2.0, 3);
        Eigen::MatrixXd s = Eigen::MatrixXd::Zero(3, 3);
        for (int i = 0; i < 3; ++i) s(i, i) = std::pow(eps_s, i);
        const Eigen::MatrixXd conj =
            s.inverse() * jordan_block_matrix(mode) * s;
        CHECK(infinity_norm(conj) == doctest::Approx(2.01).epsilon(1e-12));
        const Eigen::MatrixXd direct = similarity_scale(mode, eps_s);
        CHECK((conj - direct).cwiseAbs().maxCoeff() < 1e-12);

        // reconstruction identity S (S^-1 A S) S^-1 = A
        const Eigen::MatrixXd back = s * direct * s.inverse();
        CHECK((back - jordan_block_matrix(mode)).cwiseAbs().maxCoeff() < 1e-10);
    }
    CHECK_THROWS_AS(
        similarity_scale(JordanMode(std::complex<double>(1.0, 2.0), 2), 0.1),
        std::invalid_argument);
}

TEST_CASE("capacity bits") {
    CHECK(capacity_bits(2, 100, 1) ==
          doctest::Approx(std::log2(3.0) + std::log2(101.0)));
    CHECK(capacity_bits(2, 100, 1) == doctest::Approx(8.2432).epsilon(1e-3));
    CHECK(capacity_bits(2, 2, 1) == doctest::Approx(2.0 * std::log2(3.0)));
    CHECK(capacity_bits(2, 4, 2) ==
          doctest::Approx(std::log2(5.0) + std::log2(25.0)));

    // strictly increasing in each argument
    for (int K = 2; K <= 8; K += 2)
        for (int N = 2; N <= 8; N += 2)
            for (int n = 1; n <= 3; ++n) {
                CHECK(capacity_bits(K + 2, N, n) > capacity_bits(K, N, n));
                CHECK(capacity_bits(K, N + 2, n) > capacity_bits(K, N, n));
                CHECK(capacity_bits(K, N, n + 1) > capacity_bits(K, N, n));
            }
}

TEST_CASE("classical optimum") {
    Eigen::MatrixXd q1(1, 1), s1(1, 1);
    q1 << 1.0;
    s1 << 16.0 / 3.0;
    CHECK(classical_optimum(q1, s1) == doctest::Approx(16.0 / 3.0));
    CHECK(classical_optimum(Eigen::MatrixXd::Identity(2, 2),
                            Eigen::MatrixXd::Identity(2, 2)) ==
          doctest::Approx(2.0));
    Eigen::MatrixXd q2 = Eigen::Vector2d(2.0, 3.0).asDiagonal();
    Eigen::MatrixXd s2 = Eigen::Vector2d(0.5, 0.5).asDiagonal();
    CHECK(classical_optimum(q2, s2) == doctest::Approx(2.5));
    CHECK_THROWS(classical_optimum(q1, Eigen::MatrixXd::Identity(2, 2)));
}

TEST_CASE("scalar gap lower bound") {
    const double c = capacity_bits(2, 100, 1);
    const double v = scalar_gap_lower_bound(1.2, 16.0 / 3.0, c);
    const double expect =
        1.44 * (16.0 / 3.0) / (std::exp2(2.0 * c) - 1.44);
    CHECK(v == doctest::Approx(expect));
    CHECK(v == doctest::Approx(8.37e-5).epsilon(0.01));
    CHECK(scalar_gap_lower_bound(1.0, 1.0, 1.0) == doctest::Approx(1.0 / 3.0));
    CHECK(std::isinf(scalar_gap_lower_bound(2.0, 1.0, 0.5)));
}

TEST_CASE("rational ladder is exact") {
    const SchemeParams p = paper_params();
    CHECK(p.alpha() == 0.75);
    CHECK(p.rho() == doctest::Approx(64.0 / 27.0).epsilon(1e-15));
    CHECK(p.delta_from_exp(0) == 9.0);
    CHECK(p.delta_from_exp(-1) == 6.75);
    CHECK(p.delta_from_exp(3) == doctest::Approx(9.0 * 64.0 / 27.0));
    CHECK(p.delta_from_exp(200) ==
          doctest::Approx(9.0 * std::pow(4.0 / 3.0, 200)).epsilon(1e-12));
    CHECK(p.min_exp() == -1);
    CHECK(p.delta_N() == doctest::Approx(2.0 * std::pow(100.0, -1.0 / 3.0)));
}

TEST_CASE("scheme parameter hard contracts") {
    CHECK_THROWS(SchemeParams(3, 100, Rational{4, 3}, 1, 3, 9.0, 0, 3.95, 0.95));
    CHECK_THROWS(SchemeParams(2, 101, Rational{4, 3}, 1, 3, 9.0, 0, 3.95, 0.95));
    CHECK_THROWS(SchemeParams(2, 100, Rational{3, 4}, 1, 3, 9.0, 0, 3.95, 0.95));
    CHECK_THROWS(SchemeParams(2, 100, Rational{4, 3}, 0, 3, 9.0, 0, 3.95, 0.95));
    CHECK_THROWS(SchemeParams(2, 100, Rational{4, 3}, 1, 3, 9.0, -1, 3.95, 0.95));
    CHECK_THROWS(SchemeParams(2, 100, Rational{4, 3}, 1, 3, 9.0, 0, 2.0, 0.5));
    CHECK_THROWS(SchemeParams(2, 100, Rational{4, 3}, 1, 3, 9.0, 0, 3.95, 2.0));
}

TEST_CASE("parse_rational") {
    const Rational r = parse_rational("4/3");
    CHECK(r.num == 4);
    CHECK(r.den == 3);
    CHECK_THROWS(parse_rational("3/4")); // not > 1
    CHECK_THROWS(parse_rational("abc"));
    CHECK(parse_rational("2").num == 2);
}

TEST_CASE("model hard contracts") {
    Eigen::MatrixXd A(1, 1), Bsing(1, 1), Q(1, 1), Qneg(1, 1);
    A << 1.2;
    Bsing << 0.0;
    Q << 1.0;
    Qneg << -1.0;
    CHECK_THROWS_AS(SystemModel(A, Bsing, Q, NoiseSpec::scaled_bg(4, 2, 1),
                                InitSpec::point({0.0})),
                    std::invalid_argument);
    Eigen::MatrixXd B(1, 1);
    B << 1.0;
    CHECK_THROWS_AS(SystemModel(A, B, Qneg, NoiseSpec::scaled_bg(4, 2, 1),
                                InitSpec::point({0.0})),
                    std::invalid_argument);
    // asymmetric Q
    Eigen::MatrixXd A2 = Eigen::MatrixXd::Identity(2, 2) * 1.5;
    Eigen::MatrixXd B2 = Eigen::MatrixXd::Identity(2, 2);
    Eigen::MatrixXd Qasym(2, 2);
    Qasym << 1.0, 0.5, -0.5, 1.0;
    CHECK_THROWS_AS(
        SystemModel(A2, B2, Qasym,
                    NoiseSpec::gaussian(Eigen::MatrixXd::Identity(2, 2)),
                    InitSpec::point({0.0, 0.0})),
        std::invalid_argument);

    const SystemModel ok = paper_model();
    CHECK(ok.a_norm() == doctest::Approx(1.2));
    CHECK(ok.gain()(0, 0) == doctest::Approx(1.2));
    CHECK(ok.Sigma()(0, 0) == doctest::Approx(16.0 / 3.0));
    CHECK(ok.classical_cost() == doctest::Approx(16.0 / 3.0));
}

TEST_CASE("validate_scheme on the published parameters") {
    const SystemModel model = paper_model();
    {
        const ValidationReport rep = validate_scheme(paper_params(), model);
        CHECK(rep.all_pass());
    }
    {
        // alpha = 0.5 via g=2, p=1 fails alpha > ||A||inf / K = 0.6
        const SchemeParams bad(2, 100, Rational{2, 1}, 1, 3, 9.0, 0, 3.95, 0.95);
        const ValidationReport rep = validate_scheme(bad, model);
        CHECK_FALSE(rep.all_pass());
        CHECK_FALSE(rep.find("alpha_range")->pass);
    }
    {
        // L = 0.1 fails Condition 5 at N = 2
        const SchemeParams bad(2, 2, Rational{4, 3}, 1, 3, 0.1, 0, 3.95, 0.95);
        const ValidationReport rep = validate_scheme(bad, model);
        CHECK_FALSE(rep.all_pass());
        const ConditionCheck* c5 = rep.find("min_bin_size");
        REQUIRE(c5 != nullptr);
        CHECK_FALSE(c5->pass);
        // the violated inequality is rendered numerically
        const double expect_rhs =
            1.2 / (2.0 * 0.75 - 1.2) * 2.0 * std::pow(2.0, -1.0 / 3.0);
        CHECK(c5->rhs == doctest::Approx(expect_rhs));
        CHECK(c5->lhs == doctest::Approx(0.75 * 0.1));
    }
    {
        // Condition 5 needs only the N = 2 check: Delta_(N) is decreasing
        for (int N = 2; N <= 1000; N += 2) {
            const ValidationReport rep =
                validate_scheme(paper_params(N), model);
            CHECK(rep.all_pass());
        }
    }
}
