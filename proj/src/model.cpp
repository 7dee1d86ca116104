#include "zq/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "zq/quantizer.hpp"

namespace zq {

double infinity_norm(const Eigen::MatrixXd& m) {
    double best = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        double row = 0.0;
        for (Eigen::Index j = 0; j < m.cols(); ++j) row += std::fabs(m(i, j));
        if (row > best) best = row;
    }
    return best;
}

double capacity_bits(int K, int N, int n) {
    return std::log2(std::pow(static_cast<double>(K), n) + 1.0) +
           n * std::log2(static_cast<double>(N) + 1.0);
}

double classical_optimum(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& Sigma) {
    if (Q.rows() != Q.cols() || Sigma.rows() != Sigma.cols() ||
        Q.rows() != Sigma.rows())
        throw std::invalid_argument("classical_optimum: dimension mismatch");
    return (Q * Sigma).trace();
}

double scalar_gap_lower_bound(double a, double sigma2, double c_bits) {
    const double denom = std::exp2(2.0 * c_bits) - a * a;
    if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
    return a * a * sigma2 / denom;
}

// ---------------------------------------------------------------------------

double jordan_mode_norm(const JordanMode& mode) {
    if (mode.variant == JordanMode::Variant::Real) {
        const double al = std::fabs(mode.lambda.real());
        return mode.size == 1 ? al : al + 1.0;
    }
    const double ab = std::fabs(mode.lambda.real()) + std::fabs(mode.lambda.imag());
    return mode.size == 2 ? ab : ab + 1.0;
}

Eigen::MatrixXd jordan_block_matrix(const JordanMode& mode) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(mode.size, mode.size);
    if (mode.variant == JordanMode::Variant::Real) {
        for (int i = 0; i < mode.size; ++i) {
            m(i, i) = mode.lambda.real();
            if (i + 1 < mode.size) m(i, i + 1) = 1.0;
        }
        return m;
    }
    const double a = mode.lambda.real();
    const double b = mode.lambda.imag();
    for (int blk = 0; blk * 2 < mode.size; ++blk) {
        const int r = 2 * blk;
        m(r, r) = a;     m(r, r + 1) = b;
        m(r + 1, r) = -b; m(r + 1, r + 1) = a;
        if (r + 3 < mode.size) {
            m(r, r + 2) = 1.0;
            m(r + 1, r + 3) = 1.0;
        }
    }
    return m;
}

Eigen::MatrixXd similarity_scale(const JordanMode& mode, double eps_s) {
    if (mode.variant != JordanMode::Variant::Real)
        throw std::invalid_argument(
            "similarity_scale: complex blocks are not supported");
    if (!(eps_s > 0.0))
        throw std::invalid_argument("similarity_scale: eps_s must be positive");
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(mode.size, mode.size);
    for (int i = 0; i < mode.size; ++i) {
        m(i, i) = mode.lambda.real();
        if (i + 1 < mode.size) m(i, i + 1) = eps_s;
    }
    return m;
}

// ---------------------------------------------------------------------------

Rational parse_rational(const std::string& text) {
    const auto slash = text.find('/');
    Rational r;
    try {
        if (slash == std::string::npos) {
            r.num = std::stoll(text);
            r.den = 1;
        } else {
            r.num = std::stoll(text.substr(0, slash));
            r.den = std::stoll(text.substr(slash + 1));
        }
    } catch (const std::exception&) {
        throw std::invalid_argument("invalid rational: '" + text + "'");
    }
    if (r.den <= 0 || r.num <= 0 || r.num <= r.den)
        throw std::invalid_argument("zoom base must be a rational > 1, got '" +
                                    text + "'");
    return r;
}

namespace {

double pow_int(double base, unsigned e) {
    double r = 1.0, b = base;
    while (e != 0) {
        if (e & 1u) r *= b;
        b *= b;
        e >>= 1;
    }
    return r;
}

} // namespace

double rational_pow(const Rational& g, long long m) {
    const bool neg = m < 0;
    unsigned long long rem = neg ? static_cast<unsigned long long>(-m)
                                 : static_cast<unsigned long long>(m);
    double result = 1.0;
    while (rem > 0) {
        const unsigned chunk = rem > 32 ? 32u : static_cast<unsigned>(rem);
        result *= pow_int(static_cast<double>(g.num), chunk) /
                  pow_int(static_cast<double>(g.den), chunk);
        rem -= chunk;
    }
    return neg ? 1.0 / result : result;
}

SchemeParams::SchemeParams(int K_, int N_, Rational g_, int p_, int q_,
                           double L_, int m0, double beta_, double eps_)
    : K(K_), N(N_), g(g_), p(p_), q_exp(q_), L(L_), delta0_exp(m0),
      beta(beta_), eps(eps_) {
    validate();
    ladder_lo_ = -128;
    ladder_.resize(1024);
    for (std::size_t i = 0; i < ladder_.size(); ++i)
        ladder_[i] = L * rational_pow(g, ladder_lo_ + static_cast<long long>(i));
}

void SchemeParams::validate() const {
    if (K < 2 || K % 2 != 0)
        throw std::invalid_argument("K must be even and >= 2");
    if (N < 2 || N % 2 != 0)
        throw std::invalid_argument("N must be even and >= 2");
    if (g.num <= g.den || g.den <= 0)
        throw std::invalid_argument("zoom base g must be rational > 1");
    if (p < 1) throw std::invalid_argument("p must be a positive integer");
    if (q_exp < 1) throw std::invalid_argument("q_exp must be a positive integer");
    if (!(L > 0.0)) throw std::invalid_argument("L must be positive");
    if (delta0_exp < 0)
        throw std::invalid_argument("delta0_exp must be >= 0 (Delta_0 >= L)");
    if (!(beta > 2.0)) throw std::invalid_argument("beta must exceed 2");
    if (!(eps > 0.0 && eps < beta - 2.0))
        throw std::invalid_argument("eps must lie in (0, beta - 2)");
    adaptive_alphabet_size(K, 1); // range sanity for symbol widths
}

double SchemeParams::delta_N() const {
    return 2.0 * std::pow(static_cast<double>(N), -1.0 + 2.0 / (beta - eps));
}

double SchemeParams::delta_from_exp(long long m) const {
    const long long idx = m - ladder_lo_;
    if (!ladder_.empty() && idx >= 0 &&
        idx < static_cast<long long>(ladder_.size()))
        return ladder_[static_cast<std::size_t>(idx)];
    return L * rational_pow(g, m);
}

SchemeParams SchemeParams::with_N(int newN) const {
    return SchemeParams(K, newN, g, p, q_exp, L, delta0_exp, beta, eps);
}

// ---------------------------------------------------------------------------

InitSpec InitSpec::point(std::vector<double> x) {
    InitSpec s;
    s.kind = Kind::Point;
    s.x0 = std::move(x);
    return s;
}

InitSpec InitSpec::draw(NoiseSpec spec) {
    InitSpec s;
    s.kind = Kind::Draw;
    s.law = std::move(spec);
    return s;
}

SystemModel::SystemModel(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd Q,
                         NoiseSpec noise, InitSpec init)
    : n_(static_cast<int>(A.rows())), A_(std::move(A)), B_(std::move(B)),
      Q_(std::move(Q)), noise_(std::move(noise)), init_(std::move(init)) {
    if (n_ < 1) throw std::invalid_argument("SystemModel: empty state");
    if (A_.rows() != n_ || A_.cols() != n_ || B_.rows() != n_ ||
        B_.cols() != n_ || Q_.rows() != n_ || Q_.cols() != n_)
        throw std::invalid_argument("SystemModel: matrix dimension mismatch");
    if (noise_.n != n_)
        throw std::invalid_argument("SystemModel: noise dimension mismatch");
    if (init_.kind == InitSpec::Kind::Point) {
        if (static_cast<int>(init_.x0.size()) != n_)
            throw std::invalid_argument("SystemModel: init dimension mismatch");
    } else if (init_.law.n != n_) {
        throw std::invalid_argument("SystemModel: init law dimension mismatch");
    }
    if (!A_.allFinite() || !B_.allFinite() || !Q_.allFinite())
        throw std::invalid_argument("SystemModel: matrices must be finite");

    Eigen::FullPivLU<Eigen::MatrixXd> lu(B_);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible())
        throw std::invalid_argument("SystemModel: B is not invertible");
    gain_ = lu.solve(A_);

    const double sym_err = (Q_ - Q_.transpose()).cwiseAbs().maxCoeff();
    if (sym_err > 1e-10 * std::max(1.0, Q_.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("SystemModel: Q is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q_);
    const double lam_max = es.eigenvalues().maxCoeff();
    const double lam_min = es.eigenvalues().minCoeff();
    if (!(lam_max > 0.0) || lam_min <= 1e-10 * lam_max)
        throw std::invalid_argument("SystemModel: Q is not positive definite");

    Sigma_ = noise_.second_moment_matrix();
    a_norm_ = infinity_norm(A_);

    auto row_major = [this](const Eigen::MatrixXd& m) {
        std::vector<double> v(static_cast<std::size_t>(n_) * n_);
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j)
                v[static_cast<std::size_t>(i) * n_ + j] = m(i, j);
        return v;
    };
    A_rm_ = row_major(A_);
    B_rm_ = row_major(B_);
    Q_rm_ = row_major(Q_);
    gain_rm_ = row_major(gain_);
}

// ---------------------------------------------------------------------------

bool ValidationReport::all_pass() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

const ConditionCheck* ValidationReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

std::string ValidationReport::render() const {
    std::ostringstream out;
    for (const auto& c : checks)
        out << (c.pass ? "[pass] " : "[FAIL] ") << c.name << ": " << c.detail
            << "\n";
    out << (all_pass() ? "scheme: all conditions hold\n"
                       : "scheme: conditions violated\n");
    return out.str();
}

ValidationReport validate_scheme(const SchemeParams& params,
                                 const SystemModel& model) {
    ValidationReport rep;
    const double a = model.a_norm();
    const double alpha = params.alpha();
    const double rho = params.rho();
    const double K = params.K;
    const double dN = params.delta_N();

    auto add = [&rep](std::string name, bool pass, double lhs, double rhs,
                      std::string detail) {
        rep.checks.push_back(
            {std::move(name), pass, lhs, rhs, std::move(detail)});
    };

    {
        std::ostringstream d;
        const bool ok = alpha > a / K && alpha < 1.0;
        d << "||A||inf/K = " << a / K << " < alpha = " << alpha << " < 1";
        add("alpha_range", ok, alpha, a / K, d.str());
    }
    {
        const double rhs = std::pow(a, params.beta / params.eps);
        std::ostringstream d;
        d << "rho = " << rho << " > ||A||inf^(beta/eps) = " << rhs;
        add("rho_moment", rho > rhs, rho, rhs, d.str());
    }
    {
        std::ostringstream d;
        d << "rho = " << rho << " >= K*alpha = " << K * alpha;
        add("rho_geq_K_alpha", rho >= K * alpha, rho, K * alpha, d.str());
    }
    {
        // alpha^q * rho^p = g^(-p*q) * g^(q*p) = 1 by the integer-exponent
        // construction; the countable bin-size ladder is exact.
        std::ostringstream d;
        d << "alpha^q_exp * rho^p = g^(" << -params.p * params.q_exp << " + "
          << params.q_exp * params.p << ") = 1 by construction";
        add("countability", true, 1.0, 1.0, d.str());
    }
    {
        // Condition 5 (minimum adaptive bin size). The bound requires
        // K*alpha > ||A||inf, which alpha_range implies; with a violated
        // alpha_range the bound is not evaluable and the condition fails.
        const double denom = K * alpha - a;
        std::ostringstream d;
        bool ok = false;
        double rhs = std::numeric_limits<double>::infinity();
        if (denom > 0.0) {
            rhs = a / denom * dN;
            ok = alpha * params.L > rhs;
            d << "Condition 5: alpha*L = " << alpha * params.L
              << " > (||A||inf/(K*alpha - ||A||inf))*Delta_(N) = " << rhs
              << " (N = " << params.N << ")";
        } else {
            d << "Condition 5 not evaluable: K*alpha - ||A||inf = " << denom
              << " <= 0";
        }
        add("min_bin_size", ok, alpha * params.L, rhs, d.str());
    }
    {
        std::ostringstream d;
        d << "Delta_0 = L*g^" << params.delta0_exp << " >= L (m0 >= 0)";
        add("delta0_geq_L", params.delta0_exp >= 0,
            static_cast<double>(params.delta0_exp), 0.0, d.str());
    }
    return rep;
}

} // namespace zq
