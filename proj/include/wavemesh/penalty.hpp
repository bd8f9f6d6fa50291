#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "wavemesh/errors.hpp"
#include "wavemesh/interp.hpp"
#include "wavemesh/wavelet.hpp"

namespace wavemesh {

enum class PenaltyKind {
    PlainL1,        // mothers weight 1, father block free
    AdaptiveLevel,  // mother level j weighted sqrt(2 log j), needs j0 >= 2
    BesovPs,        // father weight 1, mother level j weighted 2^{j(s-1/2)}
};

/// Per-coefficient multipliers for a weighted l1 penalty on a length-K
/// coefficient vector with minimum resolution level j0.
struct PenaltySpec {
    PenaltyKind kind = PenaltyKind::PlainL1;
    double s = 0.0;  // Besov smoothness, only meaningful for BesovPs
    std::size_t K = 0;
    int j0 = 0;
    std::vector<double> weights;
};

inline PenaltySpec make_penalty(PenaltyKind kind, std::size_t K, int j0, double s = 0.0) {
    detail::check_dyadic(K);
    detail::check_level(K, j0);
    if (kind == PenaltyKind::AdaptiveLevel && j0 < 2)
        throw InvalidLevel("adaptive level weights require j0 >= 2");
    if (kind == PenaltyKind::BesovPs && !(s > 0.5))
        throw std::invalid_argument("Besov penalty requires smoothness s > 1/2");

    PenaltySpec spec;
    spec.kind = kind;
    spec.s = s;
    spec.K = K;
    spec.j0 = j0;
    spec.weights.resize(K);
    const std::size_t father = std::size_t{1} << j0;
    const int J = detail::log2_exact(K);
    for (std::size_t i = 0; i < father; ++i)
        spec.weights[i] = (kind == PenaltyKind::BesovPs) ? 1.0 : 0.0;
    for (int j = j0; j < J; ++j) {
        double w = 1.0;
        if (kind == PenaltyKind::AdaptiveLevel) w = std::sqrt(2.0 * std::log(static_cast<double>(j)));
        else if (kind == PenaltyKind::BesovPs) w = std::exp2(static_cast<double>(j) * (s - 0.5));
        const std::size_t begin = std::size_t{1} << j;
        const std::size_t end = std::size_t{1} << (j + 1);
        for (std::size_t i = begin; i < end; ++i) spec.weights[i] = w;
    }
    return spec;
}

inline double penalty_value(const PenaltySpec& spec, const CoefficientVector& d) {
    if (d.K() != spec.K || d.j0 != spec.j0)
        throw LayoutMismatch("penalty_value: spec built for a different (K, j0) layout");
    double total = 0.0;
    for (std::size_t i = 0; i < spec.K; ++i) total += spec.weights[i] * std::abs(d.values[i]);
    return total;
}

/// Exact minimizer of 0.5*||v - d||^2 + threshold * sum_i weights_i |d_i|:
/// componentwise soft thresholding at threshold*weights_i. Weight-0
/// components pass through unchanged.
inline std::vector<double> prox_weighted_l1(const std::vector<double>& v, const PenaltySpec& spec,
                                            double threshold) {
    if (v.size() != spec.K) throw LayoutMismatch("prox_weighted_l1: vector length != spec.K");
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double t = threshold * spec.weights[i];
        const double a = v[i];
        if (a > t) out[i] = a - t;
        else if (a < -t) out[i] = a + t;
        else out[i] = 0.0;
    }
    return out;
}

/// Proximal scaling for the group term gate * ||R W^T d||_2: shrink the
/// whole block toward zero by 1 - gate/||g||_2, exactly zero once the gate
/// reaches the block norm. gate = 0 is the identity, including at g = 0.
inline CoefficientVector group_soft_scale(const CoefficientVector& d, const InterpolationMatrix& R,
                                          const WaveletFilter& filter, double gate) {
    if (gate == 0.0) return d;
    std::vector<double> g = R.apply(idwt(d, filter));
    double norm = 0.0;
    for (double gi : g) norm += gi * gi;
    norm = std::sqrt(norm);
    CoefficientVector out;
    out.j0 = d.j0;
    if (norm <= gate) {
        out.values.assign(d.K(), 0.0);
        return out;
    }
    const double scale = 1.0 - gate / norm;
    out.values.resize(d.K());
    for (std::size_t i = 0; i < d.K(); ++i) out.values[i] = scale * d.values[i];
    return out;
}

} // namespace wavemesh
