#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "wavemesh/errors.hpp"
#include "wavemesh/interp.hpp"
#include "wavemesh/penalty.hpp"
#include "wavemesh/solver.hpp"
#include "wavemesh/wavelet.hpp"

namespace wavemesh {

/// Log-linear tuning grid from lambda_max down to floor_ratio * lambda_max.
struct LambdaGrid {
    std::vector<double> values;  // strictly decreasing, values[0] == lambda_max
    double lambda_max = 0.0;
    double floor_ratio = 1e-4;
};

inline LambdaGrid make_lambda_grid(double lambda_max, std::size_t count = 50,
                                   double floor_ratio = 1e-4) {
    if (!(lambda_max > 0.0)) throw std::invalid_argument("lambda_max must be positive");
    if (count < 1 || !(floor_ratio > 0.0 && floor_ratio < 1.0))
        throw std::invalid_argument("bad lambda grid shape");
    LambdaGrid grid;
    grid.lambda_max = lambda_max;
    grid.floor_ratio = floor_ratio;
    grid.values.resize(count);
    grid.values[0] = lambda_max;
    for (std::size_t i = 1; i + 1 < count; ++i)
        grid.values[i] =
            lambda_max * std::pow(floor_ratio, static_cast<double>(i) / static_cast<double>(count - 1));
    if (count > 1) grid.values[count - 1] = lambda_max * floor_ratio;
    return grid;
}

namespace detail {

// Cyclic Jacobi eigendecomposition for small symmetric matrices. A is
// reduced toward diagonal; V accumulates the rotations columnwise.
inline void jacobi_symmetric(DenseMatrix& A, DenseMatrix& V) {
    const std::size_t n = A.rows;
    V = DenseMatrix(n, n);
    for (std::size_t i = 0; i < n; ++i) V(i, i) = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += A(i, j) * A(i, j);
        if (off < 1e-30) break;
        for (std::size_t pq = 0, pp = 0; pp < n; ++pp) {
            for (std::size_t qq = pp + 1; qq < n; ++qq, ++pq) {
                const double apq = A(pp, qq);
                if (apq == 0.0) continue;
                const double theta = (A(qq, qq) - A(pp, pp)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = A(k, pp), akq = A(k, qq);
                    A(k, pp) = c * akp - s * akq;
                    A(k, qq) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = A(pp, k), aqk = A(qq, k);
                    A(pp, k) = c * apk - s * aqk;
                    A(qq, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = V(k, pp), vkq = V(k, qq);
                    V(k, pp) = c * vkp - s * vkq;
                    V(k, qq) = s * vkp + c * vkq;
                }
            }
        }
    }
}

} // namespace detail

/// Smallest lambda at which every penalized coefficient of the univariate
/// fit is zero: the unpenalized coefficients are fit by least squares and
/// the gradient at that point is scanned over the penalized entries. With
/// j0 = 0 and a mother-only penalty this reduces to
/// max |(W R^T (y - ybar))_i| / w_i.
inline double lambda_max_univariate(const std::vector<double>& y, const InterpolationMatrix& R,
                                    const WaveletFilter& filter, const PenaltySpec& spec) {
    if (y.size() != R.n) throw DimensionMismatch("lambda_max_univariate: response length != R.n");
    if (spec.K != R.K) throw LayoutMismatch("lambda_max_univariate: spec K != R.K");
    const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
    if (*mn == *mx) throw ConstantResponse("lambda_max_univariate: constant response");

    std::vector<std::size_t> unpen;
    for (std::size_t i = 0; i < spec.K; ++i)
        if (spec.weights[i] == 0.0) unpen.push_back(i);

    std::vector<double> residual = y;
    if (!unpen.empty()) {
        // design columns for the unpenalized coefficients
        const std::size_t F = unpen.size();
        std::vector<std::vector<double>> B(F);
        CoefficientVector basis{std::vector<double>(spec.K, 0.0), spec.j0};
        for (std::size_t c = 0; c < F; ++c) {
            basis.values[unpen[c]] = 1.0;
            B[c] = R.apply(idwt(basis, filter));
            basis.values[unpen[c]] = 0.0;
        }
        DenseMatrix G(F, F);
        std::vector<double> rhs(F, 0.0);
        for (std::size_t a = 0; a < F; ++a) {
            for (std::size_t b = a; b < F; ++b) {
                double dot = 0.0;
                for (std::size_t i = 0; i < R.n; ++i) dot += B[a][i] * B[b][i];
                G(a, b) = G(b, a) = dot;
            }
            for (std::size_t i = 0; i < R.n; ++i) rhs[a] += B[a][i] * y[i];
        }
        DenseMatrix V;
        detail::jacobi_symmetric(G, V);
        double eig_max = 0.0;
        for (std::size_t k = 0; k < F; ++k) eig_max = std::max(eig_max, G(k, k));
        std::vector<double> theta(F, 0.0);
        for (std::size_t k = 0; k < F; ++k) {
            if (G(k, k) <= 1e-12 * eig_max) continue;  // rank-deficient direction
            double num = 0.0;
            for (std::size_t a = 0; a < F; ++a) num += V(a, k) * rhs[a];
            num /= G(k, k);
            for (std::size_t a = 0; a < F; ++a) theta[a] += num * V(a, k);
        }
        for (std::size_t c = 0; c < F; ++c)
            for (std::size_t i = 0; i < R.n; ++i) residual[i] -= theta[c] * B[c][i];
    }

    const std::vector<double> grad = dwt(R.apply_transpose(residual), filter, spec.j0).values;
    double lam = 0.0;
    for (std::size_t i = 0; i < spec.K; ++i)
        if (spec.weights[i] > 0.0) lam = std::max(lam, std::abs(grad[i]) / spec.weights[i]);
    if (!(lam > 0.0))
        throw ConstantResponse("lambda_max_univariate: response carries no penalized signal");
    return lam;
}

/// Deterministic fold labels: a seeded shuffle dealt round-robin, so fold
/// sizes differ by at most one.
inline std::vector<int> make_folds(std::size_t n, int folds, std::uint64_t seed) {
    if (folds < 2 || n < static_cast<std::size_t>(folds))
        throw TooFewObservations("cross-validation needs n >= folds >= 2");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> fold_of(n);
    for (std::size_t i = 0; i < n; ++i) fold_of[order[i]] = static_cast<int>(i % folds);
    return fold_of;
}

struct CvResult {
    std::vector<double> lambdas;
    std::vector<double> mean_error;  // per lambda, averaged over folds
    std::vector<double> se_error;    // per lambda, sd over folds / sqrt(folds)
    double chosen_lambda = 0.0;
    std::size_t chosen_index = 0;
    std::vector<int> fold_of;
};

/// Held-out errors for one fold over the whole lambda path (warm starts are
/// the closure's responsibility).
using FoldErrorFn = std::function<std::vector<double>(const std::vector<std::size_t>& train_idx,
                                                      const std::vector<std::size_t>& test_idx,
                                                      const std::vector<double>& lambdas)>;

inline CvResult cross_validate(std::size_t n, const FoldErrorFn& fold_errors, const LambdaGrid& grid,
                               int folds = 5, std::uint64_t seed = 0) {
    CvResult result;
    result.fold_of = make_folds(n, folds, seed);
    result.lambdas = grid.values;
    const std::size_t L = grid.values.size();

    std::vector<std::vector<double>> per_fold(folds);
    for (int f = 0; f < folds; ++f) {
        std::vector<std::size_t> train, test;
        for (std::size_t i = 0; i < n; ++i)
            (result.fold_of[i] == f ? test : train).push_back(i);
        per_fold[f] = fold_errors(train, test, grid.values);
        if (per_fold[f].size() != L)
            throw DimensionMismatch("cross_validate: closure returned wrong number of errors");
    }

    result.mean_error.resize(L);
    result.se_error.resize(L);
    for (std::size_t l = 0; l < L; ++l) {
        double mean = 0.0;
        for (int f = 0; f < folds; ++f) mean += per_fold[f][l];
        mean /= folds;
        double var = 0.0;
        for (int f = 0; f < folds; ++f) {
            const double d = per_fold[f][l] - mean;
            var += d * d;
        }
        var = (folds > 1) ? var / (folds - 1) : 0.0;
        result.mean_error[l] = mean;
        result.se_error[l] = std::sqrt(var / folds);
    }

    result.chosen_index = static_cast<std::size_t>(
        std::min_element(result.mean_error.begin(), result.mean_error.end()) -
        result.mean_error.begin());
    result.chosen_lambda = result.lambdas[result.chosen_index];
    return result;
}

/// Universal threshold sigma-hat * sqrt(2 log K). The noise scale comes from
/// the MAD of the finest-level coefficients of the DWT of the response
/// projected onto the mesh: observations are averaged within their nearest
/// mesh cell and empty cells are filled by linear interpolation.
inline double universal_threshold(const std::vector<double>& y, const InterpolationMatrix& R,
                                  const WaveletFilter& filter, std::size_t K) {
    if (K < 4) throw std::invalid_argument("universal_threshold: need K >= 4");
    detail::check_dyadic(K);
    if (y.size() != R.n || R.x.size() != R.n)
        throw DimensionMismatch("universal_threshold: response length != R.n");

    std::vector<double> sum(K, 0.0);
    std::vector<std::size_t> count(K, 0);
    for (std::size_t i = 0; i < R.n; ++i) {
        long cell = std::lround(R.x[i] * static_cast<double>(K));
        cell = std::clamp(cell, long{1}, static_cast<long>(K));
        sum[cell - 1] += y[i];
        ++count[cell - 1];
    }
    std::vector<double> mesh(K, 0.0);
    std::vector<std::size_t> filled;
    for (std::size_t c = 0; c < K; ++c) {
        if (count[c] > 0) {
            mesh[c] = sum[c] / static_cast<double>(count[c]);
            filled.push_back(c);
        }
    }
    if (filled.empty()) throw DegenerateScale("universal_threshold: no observations");
    // fill empty cells: linear between neighbours, constant at the ends
    for (std::size_t c = 0; c < K; ++c) {
        if (count[c] > 0) continue;
        auto right = std::lower_bound(filled.begin(), filled.end(), c);
        if (right == filled.begin()) {
            mesh[c] = mesh[filled.front()];
        } else if (right == filled.end()) {
            mesh[c] = mesh[filled.back()];
        } else {
            const std::size_t hi = *right, lo = *(right - 1);
            const double t = static_cast<double>(c - lo) / static_cast<double>(hi - lo);
            mesh[c] = (1.0 - t) * mesh[lo] + t * mesh[hi];
        }
    }

    const CoefficientVector coeffs = dwt(mesh, filter, 0);
    std::vector<double> finest(coeffs.values.begin() + K / 2, coeffs.values.end());
    auto median_of = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t m = v.size() / 2;
        return (v.size() % 2 == 1) ? v[m] : 0.5 * (v[m - 1] + v[m]);
    };
    const double med = median_of(finest);
    for (double& v : finest) v = std::abs(v - med);
    const double mad = median_of(finest);
    // a MAD at the rounding floor of the response scale is no scale at all
    double y_scale = 1.0;
    for (double v : y) y_scale = std::max(y_scale, std::abs(v));
    if (mad <= 1e-13 * y_scale)
        throw DegenerateScale("universal_threshold: MAD of finest coefficients is zero");
    const double sigma_hat = mad / 0.6745;
    return sigma_hat * std::sqrt(2.0 * std::log(static_cast<double>(K)));
}

} // namespace wavemesh
