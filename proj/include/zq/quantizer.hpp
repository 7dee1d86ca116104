#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace zq {

/// Uniform quantizer grid: M even bins of width delta per axis, granular
/// region [-(M/2)delta, (M/2)delta]. Reconstruction points are the bin
/// midpoints; 0 is never a reconstruction point.
struct UniformGrid {
    int M;
    double delta;

    UniformGrid(int bins, double bin_width) : M(bins), delta(bin_width) {
        if (M < 2 || (M % 2) != 0)
            throw std::invalid_argument("UniformGrid: M must be even and >= 2");
        if (!(delta > 0.0))
            throw std::invalid_argument("UniformGrid: delta must be positive");
    }

    double half_range() const { return 0.5 * delta * static_cast<double>(M); }

    bool in_range(double x) const {
        return x >= -half_range() && x <= half_range();
    }

    /// Bin index in {0,...,M-1} for in-range x. The closed right endpoint
    /// x = (M/2)delta clamps into the top bin; the left endpoint lands in
    /// bin 0 via floor.
    std::int64_t axis_index(double x) const {
        std::int64_t i =
            static_cast<std::int64_t>(std::floor(x / delta)) + M / 2;
        if (i < 0) i = 0;
        if (i > M - 1) i = M - 1;
        return i;
    }

    /// Midpoint of bin i. Identical arithmetic to delta*floor(x/delta) +
    /// delta/2, so index round-trips reproduce direct quantization bit for
    /// bit.
    double midpoint(std::int64_t i) const {
        return delta * static_cast<double>(i - M / 2) + 0.5 * delta;
    }
};

/// Scalar modified uniform quantizer: midpoint inside the granular region,
/// top-bin midpoint at the closed right endpoint, 0 on overflow.
inline double scalar_quantize(const UniformGrid& g, double x) {
    if (!g.in_range(x)) return 0.0;
    return g.midpoint(g.axis_index(x));
}

/// Partial uniform quantizer: defined only on the granular region.
inline double partial_quantize(const UniformGrid& g, double x) {
    return g.midpoint(g.axis_index(x));
}

/// Type I vector quantizer: per-axis partial quantization when the whole
/// vector is in range, the zero vector when any axis overflows.
inline void type1_quantize(const UniformGrid& g, std::span<const double> x,
                           std::span<double> out) {
    bool in_view = true;
    for (double xi : x)
        if (!g.in_range(xi)) { in_view = false; break; }
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = in_view ? partial_quantize(g, x[i]) : 0.0;
}

inline std::vector<double> type1_quantize(const UniformGrid& g,
                                          std::span<const double> x) {
    std::vector<double> out(x.size());
    type1_quantize(g, x, out);
    return out;
}

/// Type II vector quantizer: component-wise, overflow zeroes only the
/// offending axis.
inline void type2_quantize(const UniformGrid& g, std::span<const double> x,
                           std::span<double> out) {
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = g.in_range(x[i]) ? partial_quantize(g, x[i]) : 0.0;
}

inline std::vector<double> type2_quantize(const UniformGrid& g,
                                          std::span<const double> x) {
    std::vector<double> out(x.size());
    type2_quantize(g, x, out);
    return out;
}

// ---------------------------------------------------------------------------
// Integer symbol codecs. These are the wire representation of the two
// quantizer outputs: decode(encode(x)) equals the direct quantization
// exactly, so encoder and decoder stay synchronized by construction.
// ---------------------------------------------------------------------------

/// Number of adaptive symbols: K^n + 1 (symbol 0 is reserved for overflow).
inline std::uint64_t adaptive_alphabet_size(int K, int n) {
    std::uint64_t count = 1;
    for (int i = 0; i < n; ++i) {
        count *= static_cast<std::uint64_t>(K);
        if (count > (1ull << 32))
            throw std::invalid_argument("adaptive alphabet exceeds 32-bit symbols");
    }
    return count + 1;
}

/// Adaptive (type I) symbol: 0 on whole-vector overflow, otherwise
/// 1 + sum_j i_j K^(j-1) over per-axis bin indices.
inline std::uint32_t encode_adaptive(const UniformGrid& g,
                                     std::span<const double> x) {
    for (double xi : x)
        if (!g.in_range(xi)) return 0;
    std::uint64_t flat = 0;
    std::uint64_t stride = 1;
    for (double xi : x) {
        flat += static_cast<std::uint64_t>(g.axis_index(xi)) * stride;
        stride *= static_cast<std::uint64_t>(g.M);
    }
    return static_cast<std::uint32_t>(1 + flat);
}

inline void decode_adaptive(std::uint32_t sym, const UniformGrid& g, int n,
                            std::span<double> out) {
    const std::uint64_t alphabet = adaptive_alphabet_size(g.M, n);
    if (sym >= alphabet)
        throw std::out_of_range("decode_adaptive: corrupted symbol index");
    if (sym == 0) {
        for (int i = 0; i < n; ++i) out[i] = 0.0;
        return;
    }
    std::uint64_t flat = sym - 1;
    for (int i = 0; i < n; ++i) {
        const std::int64_t idx =
            static_cast<std::int64_t>(flat % static_cast<std::uint64_t>(g.M));
        flat /= static_cast<std::uint64_t>(g.M);
        out[i] = g.midpoint(idx);
    }
}

/// Fixed (type II) symbol: one coordinate per axis, 0 marking per-axis
/// overflow, 1..N the bin index.
inline void encode_fixed(const UniformGrid& g, std::span<const double> e,
                         std::span<std::uint16_t> out) {
    if (g.M > 0xfffe)
        throw std::invalid_argument("fixed alphabet exceeds 16-bit coordinates");
    for (std::size_t i = 0; i < e.size(); ++i)
        out[i] = g.in_range(e[i])
                     ? static_cast<std::uint16_t>(1 + g.axis_index(e[i]))
                     : 0;
}

inline void decode_fixed(std::span<const std::uint16_t> coords,
                         const UniformGrid& g, std::span<double> out) {
    for (std::size_t i = 0; i < coords.size(); ++i) {
        if (coords[i] > g.M)
            throw std::out_of_range("decode_fixed: corrupted coordinate index");
        out[i] = coords[i] == 0 ? 0.0 : g.midpoint(coords[i] - 1);
    }
}

} // namespace zq
