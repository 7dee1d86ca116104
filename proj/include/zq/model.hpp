#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "zq/noise.hpp"

namespace zq {

double infinity_norm(const Eigen::MatrixXd& m);

/// log2(K^n + 1) + log2((N+1)^n): the per-step channel capacity consumed by
/// the two-part message.
double capacity_bits(int K, int N, int n);

/// trace(Q * Sigma), the fully observed optimum.
double classical_optimum(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& Sigma);

/// a^2 s^2 / (2^(2C) - a^2); +infinity when the denominator is not positive.
double scalar_gap_lower_bound(double a, double sigma2, double c_bits);

// ---------------------------------------------------------------------------

struct JordanMode {
    std::complex<double> lambda;
    int size = 1;
    enum class Variant { Real, Complex } variant = Variant::Real;

    JordanMode(double real_lambda, int block_size)
        : lambda(real_lambda, 0.0), size(block_size), variant(Variant::Real) {
        if (size < 1) throw std::invalid_argument("JordanMode: size must be >= 1");
    }
    JordanMode(std::complex<double> lam, int block_size)
        : lambda(lam), size(block_size), variant(Variant::Complex) {
        if (size < 2 || size % 2 != 0)
            throw std::invalid_argument(
                "JordanMode: complex block requires even size >= 2");
    }
};

/// Infinity norm of the real Jordan block without forming it.
double jordan_mode_norm(const JordanMode& mode);

/// The explicit real Jordan block matrix for a mode.
Eigen::MatrixXd jordan_block_matrix(const JordanMode& mode);

/// S^-1 A S for S = diag(1, e, e^2, ...): the block with superdiagonal
/// entries replaced by eps_s. Real blocks only.
Eigen::MatrixXd similarity_scale(const JordanMode& mode, double eps_s);

// ---------------------------------------------------------------------------

/// Exact rational zoom base g = num/den > 1. Bin sizes live on the ladder
/// Delta = L * g^m with integer exponent m, never as accumulated floating
/// products, so the reachable set of bin sizes is exact and the encoder and
/// decoder agree on Delta_t bit for bit over arbitrarily long runs.
struct Rational {
    std::int64_t num = 4;
    std::int64_t den = 3;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }
};

Rational parse_rational(const std::string& text);

/// g^m computed by chunked binary exponentiation on the integer numerator
/// and denominator. Deterministic for all m; exact while the integer powers
/// stay below 2^53.
double rational_pow(const Rational& g, long long m);

struct SchemeParams {
    int K = 2;       // adaptive bins per axis, even
    int N = 2;       // fixed bins per axis, even
    Rational g{};    // common zoom base, > 1
    int p = 1;       // alpha = g^-p
    int q_exp = 1;   // rho = g^q_exp
    double L = 1.0;  // zoom-hold threshold
    int delta0_exp = 0; // m0 >= 0, Delta_0 = L * g^m0
    double beta = 3.0;
    double eps = 0.5;

    SchemeParams() = default;
    SchemeParams(int K_, int N_, Rational g_, int p_, int q_, double L_,
                 int m0, double beta_, double eps_);

    double alpha() const { return rational_pow(g, -p); }
    double rho() const { return rational_pow(g, q_exp); }
    /// Fixed-stage bin size Delta_(N) = 2 N^(-1 + 2/(beta-eps)).
    double delta_N() const;
    /// Delta for ladder exponent m: L * g^m.
    double delta_from_exp(long long m) const;
    /// Smallest reachable exponent: the hold rule keeps m >= m(L) - p = -p.
    long long min_exp() const { return -static_cast<long long>(p); }

    SchemeParams with_N(int newN) const;

  private:
    void validate() const;
    // cached ladder values for the hot exponent range
    std::vector<double> ladder_;
    long long ladder_lo_ = 0;
};

// ---------------------------------------------------------------------------

struct InitSpec {
    enum class Kind { Point, Draw } kind = Kind::Point;
    std::vector<double> x0;      // Point
    NoiseSpec law;               // Draw

    static InitSpec point(std::vector<double> x);
    static InitSpec draw(NoiseSpec spec);
};

/// Plant, cost and noise. Immutable after construction; construction
/// enforces the hard contracts (B invertible, Q symmetric positive
/// definite, dimensions consistent).
class SystemModel {
  public:
    SystemModel(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd Q,
                NoiseSpec noise, InitSpec init);

    int n() const { return n_; }
    const Eigen::MatrixXd& A() const { return A_; }
    const Eigen::MatrixXd& B() const { return B_; }
    const Eigen::MatrixXd& Q() const { return Q_; }
    const Eigen::MatrixXd& gain() const { return gain_; } // B^-1 A
    const Eigen::MatrixXd& Sigma() const { return Sigma_; }
    const NoiseSpec& noise() const { return noise_; }
    const InitSpec& init() const { return init_; }
    double a_norm() const { return a_norm_; } // ||A||_inf

    // Row-major copies for the simulation hot path.
    const std::vector<double>& A_rm() const { return A_rm_; }
    const std::vector<double>& B_rm() const { return B_rm_; }
    const std::vector<double>& Q_rm() const { return Q_rm_; }
    const std::vector<double>& gain_rm() const { return gain_rm_; }

    double classical_cost() const { return classical_optimum(Q_, Sigma_); }

  private:
    int n_;
    Eigen::MatrixXd A_, B_, Q_, gain_, Sigma_;
    NoiseSpec noise_;
    InitSpec init_;
    double a_norm_;
    std::vector<double> A_rm_, B_rm_, Q_rm_, gain_rm_;
};

// ---------------------------------------------------------------------------

struct ConditionCheck {
    std::string name;
    bool pass = false;
    double lhs = 0.0;
    double rhs = 0.0;
    std::string detail;
};

struct ValidationReport {
    std::vector<ConditionCheck> checks;
    bool all_pass() const;
    const ConditionCheck* find(const std::string& name) const;
    std::string render() const;
};

/// Report-style check of every scheme condition against ||A||_inf of the
/// model. Collects all violations instead of stopping at the first.
ValidationReport validate_scheme(const SchemeParams& params,
                                 const SystemModel& model);

} // namespace zq
