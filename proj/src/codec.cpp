#include "zq/codec.hpp"

#include <cmath>

namespace zq {

ClosedLoop::ClosedLoop(const SystemModel& model, const SchemeParams& params,
                       Xoshiro256pp rng, bool check_dynamics)
    : m_(&model), p_(&params), enc_(params, model.n()), dec_(model, params),
      sampler_(model.noise()), rng_(rng), check_dynamics_(check_dynamics),
      a_inf_(model.a_norm()), b_inf_(infinity_norm(model.B())) {
    const int n = m_->n();
    x_.assign(n, 0.0);
    w_.assign(n, 0.0);
    xnext_.assign(n, 0.0);
    s_.assign(n, 0.0);
    ufix_.assign(n, 0.0);
    rec_.x.assign(n, 0.0);
    rec_.e.assign(n, 0.0);
    rec_.xhat.assign(n, 0.0);
    rec_.u.assign(n, 0.0);
    rec_.fixed.assign(n, 0);

    const InitSpec& init = m_->init();
    if (init.kind == InitSpec::Kind::Point) {
        for (int i = 0; i < n; ++i) x_[i] = init.x0[i];
    } else {
        NoiseSampler init_sampler(init.law);
        init_sampler.draw(rng_, x_);
    }
}

void ClosedLoop::set_state(std::span<const double> x, long long delta_exp) {
    for (std::size_t i = 0; i < x_.size(); ++i) x_[i] = x[i];
    enc_.reset(delta_exp);
    dec_.reset(delta_exp);
}

const StepRecord& ClosedLoop::step() {
    const int n = m_->n();
    rec_.t = t_;
    rec_.delta_exp = enc_.state().delta_exp;
    rec_.delta = p_->delta_from_exp(rec_.delta_exp);
    for (int i = 0; i < n; ++i) rec_.x[i] = x_[i];

    ChannelMessage msg;
    msg.fixed.swap(rec_.fixed); // reuse the buffer
    enc_.step(x_, msg, rec_.e);
    dec_.step(msg, rec_.xhat, rec_.u);
    rec_.adaptive = msg.adaptive;
    msg.fixed.swap(rec_.fixed);
    rec_.in_view = rec_.adaptive != 0;

    if (enc_.state().delta_exp != dec_.state().delta_exp)
        throw std::logic_error("encoder/decoder bin exponents diverged");
    if (enc_.state().delta_exp < p_->min_exp())
        throw std::logic_error("bin exponent fell below the hold floor");

    sampler_.draw(rng_, w_);
    plant_step(*m_, x_, rec_.u, w_, xnext_);

    if (check_dynamics_) {
        // x_{t+1} must equal A(e_t - U_N(e_t)) + w_t.
        const UniformGrid fixed(p_->N, p_->delta_N());
        decode_fixed(rec_.fixed, fixed, ufix_);
        for (int i = 0; i < n; ++i) s_[i] = rec_.e[i] - ufix_[i];
        const double* a = m_->A_rm().data();
        double xmax = 0.0, umax = 0.0, wmax = 0.0;
        for (int i = 0; i < n; ++i) {
            xmax = std::max(xmax, std::fabs(x_[i]));
            umax = std::max(umax, std::fabs(rec_.u[i]));
            wmax = std::max(wmax, std::fabs(w_[i]));
        }
        const double scale = 1.0 + a_inf_ * xmax + b_inf_ * umax + wmax;
        for (int i = 0; i < n; ++i) {
            const double alt = matvec_row(a, n, i, s_.data()) + w_[i];
            if (std::fabs(alt - xnext_[i]) > 1e-12 * scale)
                throw std::logic_error(
                    "closed-loop update deviates from A(e - U_N(e)) + w");
        }
    }

    x_.swap(xnext_);
    ++t_;
    if (ring_) ring_->push(rec_);
    return rec_;
}

} // namespace zq
