#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "zq/model.hpp"
#include "zq/noise.hpp"
#include "zq/quantizer.hpp"
#include "zq/rng.hpp"

namespace zq {

/// Row-major mat-vec, one row. Fixed accumulation order keeps every code
/// path (generic loop, scalar kernel, dump reconstruction) bit-identical.
inline double matvec_row(const double* m, int n, int row, const double* v) {
    const double* r = m + static_cast<std::size_t>(row) * n;
    double acc = r[0] * v[0];
    for (int j = 1; j < n; ++j) acc += r[j] * v[j];
    return acc;
}

inline double quad_form(const double* q, int n, const double* x) {
    double total = x[0] * matvec_row(q, n, 0, x);
    for (int i = 1; i < n; ++i) total += x[i] * matvec_row(q, n, i, x);
    return total;
}

/// Bin-size exponent held by each side of the channel: Delta_t = L * g^m.
struct CoderState {
    long long delta_exp = 0;
};

/// The zoom rule on the exponent ladder: multiply by rho when the state
/// escaped the adaptive grid, contract by alpha while Delta >= L, hold
/// below L. Delta >= L is exactly m >= 0, so the branch is integer-exact.
inline long long bin_update(long long m, bool in_view, const SchemeParams& p) {
    if (!in_view) return m + p.q_exp;
    if (m >= 0) return m - p.p;
    return m;
}

/// Two-part payload sent per step: adaptive coarse symbol plus per-axis
/// fixed symbols. Alphabet size (K^n + 1) * (N+1)^n.
struct ChannelMessage {
    std::uint32_t adaptive = 0;
    std::vector<std::uint16_t> fixed;
};

struct StepRecord {
    std::uint64_t t = 0;
    std::vector<double> x, e, xhat, u;
    double delta = 0.0;
    long long delta_exp = 0;
    std::uint32_t adaptive = 0;
    std::vector<std::uint16_t> fixed;
    bool in_view = false;
};

/// Fixed-capacity record retention for diagnostics; overwrites oldest.
template <typename T>
class RingBuffer {
  public:
    explicit RingBuffer(std::size_t capacity) : cap_(capacity) {}
    void push(const T& item) {
        if (cap_ == 0) return;
        if (data_.size() < cap_) {
            data_.push_back(item);
        } else {
            data_[head_] = item;
            head_ = (head_ + 1) % cap_;
        }
    }
    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return cap_; }
    /// Oldest-first access.
    const T& operator[](std::size_t i) const {
        return data_[(head_ + i) % data_.size()];
    }

  private:
    std::size_t cap_;
    std::size_t head_ = 0;
    std::vector<T> data_;
};

/// Sensor-side state machine. Emits the two-part message and the adaptive
/// error e_t = x_t - Q_K(x_t), then advances its own copy of the bin
/// exponent from the in-view flag alone.
class Encoder {
  public:
    Encoder(const SchemeParams& params, int n)
        : p_(&params), n_(n), state_{params.delta0_exp} {}

    const CoderState& state() const { return state_; }
    void reset(long long m) { state_.delta_exp = m; }

    void step(std::span<const double> x, ChannelMessage& msg,
              std::span<double> e) {
        const UniformGrid adaptive(p_->K, p_->delta_from_exp(state_.delta_exp));
        const UniformGrid fixed(p_->N, p_->delta_N());
        msg.fixed.resize(static_cast<std::size_t>(n_));
        msg.adaptive = encode_adaptive(adaptive, x);
        decode_adaptive(msg.adaptive, adaptive, n_, e);
        for (int i = 0; i < n_; ++i) e[i] = x[i] - e[i];
        encode_fixed(fixed, e, msg.fixed);
        state_.delta_exp = bin_update(state_.delta_exp, msg.adaptive != 0, *p_);
    }

  private:
    const SchemeParams* p_;
    int n_;
    CoderState state_;
};

/// Controller-side state machine. Mirrors the bin exponent from the
/// overflow flag and applies u = -B^-1 A xhat.
class Controller {
  public:
    Controller(const SystemModel& model, const SchemeParams& params)
        : m_(&model), p_(&params), state_{params.delta0_exp} {}

    const CoderState& state() const { return state_; }
    void reset(long long m) { state_.delta_exp = m; }

    void step(const ChannelMessage& msg, std::span<double> xhat,
              std::span<double> u) {
        const int n = m_->n();
        const UniformGrid adaptive(p_->K, p_->delta_from_exp(state_.delta_exp));
        const UniformGrid fixed(p_->N, p_->delta_N());
        decode_adaptive(msg.adaptive, adaptive, n, xhat);
        fixed_part_.resize(static_cast<std::size_t>(n));
        decode_fixed(msg.fixed, fixed, fixed_part_);
        for (int i = 0; i < n; ++i) xhat[i] += fixed_part_[i];
        const double* g = m_->gain_rm().data();
        for (int i = 0; i < n; ++i) u[i] = -matvec_row(g, n, i, xhat.data());
        state_.delta_exp = bin_update(state_.delta_exp, msg.adaptive != 0, *p_);
    }

  private:
    const SystemModel* m_;
    const SchemeParams* p_;
    CoderState state_;
    std::vector<double> fixed_part_;
};

/// x_{t+1} = A x + B u + w.
inline void plant_step(const SystemModel& model, std::span<const double> x,
                       std::span<const double> u, std::span<const double> w,
                       std::span<double> out) {
    const int n = model.n();
    const double* a = model.A_rm().data();
    const double* b = model.B_rm().data();
    for (int i = 0; i < n; ++i)
        out[i] = matvec_row(a, n, i, x.data()) + matvec_row(b, n, i, u.data()) +
                 w[i];
}

/// Full pipeline: encoder -> channel -> controller -> plant, one owner per
/// trial, strictly sequential in t. Optionally verifies that the realized
/// update equals A(e_t - U_N(e_t)) + w_t.
class ClosedLoop {
  public:
    ClosedLoop(const SystemModel& model, const SchemeParams& params,
               Xoshiro256pp rng, bool check_dynamics = true);

    const StepRecord& step();

    const std::vector<double>& x() const { return x_; }
    void set_state(std::span<const double> x, long long delta_exp);
    std::uint64_t t() const { return t_; }
    long long delta_exp() const { return enc_.state().delta_exp; }
    double delta() const { return p_->delta_from_exp(delta_exp()); }
    bool last_in_view() const { return rec_.in_view; }
    Xoshiro256pp& rng() { return rng_; }

    /// Retain the last `capacity` records for diagnostics.
    void enable_ring(std::size_t capacity) {
        ring_.emplace(capacity);
    }
    const RingBuffer<StepRecord>* ring() const {
        return ring_ ? &*ring_ : nullptr;
    }

  private:
    const SystemModel* m_;
    const SchemeParams* p_;
    Encoder enc_;
    Controller dec_;
    NoiseSampler sampler_;
    Xoshiro256pp rng_;
    bool check_dynamics_;
    double a_inf_ = 0.0, b_inf_ = 0.0;
    std::uint64_t t_ = 0;
    std::vector<double> x_, w_, xnext_, s_, ufix_;
    StepRecord rec_;
    std::optional<RingBuffer<StepRecord>> ring_;
};

} // namespace zq
