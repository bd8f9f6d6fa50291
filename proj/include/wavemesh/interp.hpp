#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "wavemesh/errors.hpp"
#include "wavemesh/wavelet.hpp"

namespace wavemesh {

/// One row of the interpolation operator: at most two (column, weight)
/// entries. Columns are 0-based here; the mesh node for column c is
/// (c+1)/K.
struct InterpRow {
    int count = 0;
    std::size_t col[2] = {0, 0};
    double w[2] = {0.0, 0.0};
};

/// Sparse n x K linear-interpolation operator from mesh values
/// f(1/K),...,f(K/K) to arbitrary sample locations in [0,1].
struct InterpolationMatrix {
    std::size_t n = 0;
    std::size_t K = 0;
    std::vector<InterpRow> rows;
    std::vector<double> x;  // covariate sample that generated the rows

    /// R * f
    std::vector<double> apply(const std::vector<double>& f) const {
        if (f.size() != K) throw DimensionMismatch("apply: mesh vector length != K");
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) {
            const InterpRow& row = rows[i];
            double v = 0.0;
            for (int e = 0; e < row.count; ++e) v += row.w[e] * f[row.col[e]];
            out[i] = v;
        }
        return out;
    }

    /// R^T * r
    std::vector<double> apply_transpose(const std::vector<double>& r) const {
        if (r.size() != n) throw DimensionMismatch("apply_transpose: vector length != n");
        std::vector<double> out(K, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const InterpRow& row = rows[i];
            for (int e = 0; e < row.count; ++e) out[row.col[e]] += row.w[e] * r[i];
        }
        return out;
    }
};

/// Row weights for a single location. x <= 1/K clamps to the first mesh
/// node; an integer K*x collapses the floor/ceil branches to one entry.
inline InterpRow linear_interp_row(double x, std::size_t K) {
    if (!(x >= 0.0 && x <= 1.0)) throw OutOfDomain("covariate value outside [0,1]");
    InterpRow row;
    if (x <= 1.0 / static_cast<double>(K)) {
        row.count = 1;
        row.col[0] = 0;
        row.w[0] = 1.0;
        return row;
    }
    const double t = static_cast<double>(K) * x;
    const double lo = std::floor(t);
    const double hi = std::ceil(t);
    if (lo == hi) {
        row.count = 1;
        row.col[0] = static_cast<std::size_t>(lo) - 1;
        row.w[0] = 1.0;
        return row;
    }
    row.count = 2;
    row.col[0] = static_cast<std::size_t>(lo) - 1;
    row.col[1] = static_cast<std::size_t>(hi) - 1;
    row.w[0] = (lo + 1.0) - t;
    row.w[1] = t - lo;
    return row;
}

inline InterpolationMatrix build_linear_interp(const std::vector<double>& x, std::size_t K) {
    if (!detail::is_power_of_two(K))
        throw NonDyadicLength("mesh size " + std::to_string(K) + " is not a power of two");
    InterpolationMatrix R;
    R.n = x.size();
    R.K = K;
    R.x = x;
    R.rows.reserve(x.size());
    for (double xi : x) R.rows.push_back(linear_interp_row(xi, K));
    return R;
}

/// Largest eigenvalue of R^T R by power iteration on the two sparse
/// products. Deterministic start, relative tolerance 1e-10, at most 10000
/// iterations; runs once per fit so simplicity beats the O(K log K)
/// tridiagonal alternative.
inline double max_eigenvalue_rtr(const InterpolationMatrix& R) {
    if (R.n == 0) throw EmptyMatrix("max_eigenvalue_rtr: matrix has no rows");
    std::mt19937_64 rng(0x5eed0f00dULL);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);

    std::vector<double> v(R.K);
    auto randomize = [&] {
        double norm = 0.0;
        for (double& vi : v) {
            vi = unif(rng);
            norm += vi * vi;
        }
        norm = std::sqrt(norm);
        for (double& vi : v) vi /= norm;
    };
    randomize();

    double lambda = 0.0;
    for (int iter = 0; iter < 10000; ++iter) {
        std::vector<double> w = R.apply_transpose(R.apply(v));
        double rayleigh = 0.0, wnorm = 0.0;
        for (std::size_t k = 0; k < R.K; ++k) {
            rayleigh += v[k] * w[k];
            wnorm += w[k] * w[k];
        }
        wnorm = std::sqrt(wnorm);
        if (wnorm == 0.0) {
            // start vector in the null space; re-draw
            randomize();
            continue;
        }
        for (std::size_t k = 0; k < R.K; ++k) v[k] = w[k] / wnorm;
        if (iter > 0 && std::abs(rayleigh - lambda) <= 1e-10 * std::max(std::abs(rayleigh), 1e-300)) {
            lambda = rayleigh;
            break;
        }
        lambda = rayleigh;
    }
    return lambda;
}

/// R^T R as a dense matrix; tridiagonal by the two-adjacent-columns row
/// structure. Diagnostic/test use.
inline DenseMatrix rtr_dense(const InterpolationMatrix& R) {
    if (R.n == 0) throw EmptyMatrix("rtr_dense: matrix has no rows");
    DenseMatrix A(R.K, R.K);
    for (const InterpRow& row : R.rows) {
        for (int a = 0; a < row.count; ++a)
            for (int b = 0; b < row.count; ++b)
                A(row.col[a], row.col[b]) += row.w[a] * row.w[b];
    }
    return A;
}

} // namespace wavemesh
