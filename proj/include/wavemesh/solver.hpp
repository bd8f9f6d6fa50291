#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "wavemesh/errors.hpp"
#include "wavemesh/interp.hpp"
#include "wavemesh/penalty.hpp"
#include "wavemesh/wavelet.hpp"

namespace wavemesh {

enum class Acceleration { ISTA, FISTA };
enum class StepRule { FixedInverseLmax, Backtracking };
enum class Loss { Squared, Logistic };

struct FitConfig {
    int max_iter = 10000;
    double rel_tol = 1e-8;  // on relative objective change
    Acceleration acceleration = Acceleration::FISTA;
    StepRule step_rule = StepRule::FixedInverseLmax;
    double backtrack_beta = 0.5;
    double backtrack_init = 1.0;
    bool restart_on_increase = true;  // FISTA only
};

struct FittedModel {
    CoefficientVector coeffs;
    WaveletFilter filter;
    std::size_t K = 0;
    int j0 = 0;
    double lambda = 0.0;
    PenaltySpec penalty;
    Loss loss = Loss::Squared;
    std::pair<double, double> x_scale{0.0, 1.0};  // (min, max) of the raw covariate
    std::vector<double> objective_trace;
    int iterations_used = 0;
    bool converged = false;
};

inline double objective_squared(const CoefficientVector& d, const std::vector<double>& y,
                                const InterpolationMatrix& R, const WaveletFilter& filter,
                                const PenaltySpec& spec, double lambda) {
    if (y.size() != R.n) throw DimensionMismatch("objective_squared: response length != R.n");
    std::vector<double> fitted = R.apply(idwt(d, filter));
    double rss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = y[i] - fitted[i];
        rss += r * r;
    }
    return 0.5 * rss + lambda * penalty_value(spec, d);
}

/// Gradient of 0.5*||y - R W^T d||^2 in coefficient space: W R^T (R W^T d - y).
inline std::vector<double> squared_gradient(const CoefficientVector& d, const std::vector<double>& y,
                                            const InterpolationMatrix& R, const WaveletFilter& filter) {
    std::vector<double> fitted = R.apply(idwt(d, filter));
    for (std::size_t i = 0; i < y.size(); ++i) fitted[i] -= y[i];
    return dwt(R.apply_transpose(fitted), filter, d.j0).values;
}

namespace detail {

inline double softplus(double u) {
    // log(1 + exp(u)) without overflow
    if (u > 35.0) return u;
    if (u < -35.0) return std::exp(u);
    return std::log1p(std::exp(u));
}

inline double sigmoid(double u) {
    if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
    const double e = std::exp(u);
    return e / (1.0 + e);
}

} // namespace detail

/// Logistic smooth loss (1/(2n)) sum_i log(1 + exp(-y_i m_i)) on decision
/// values m; labels in {-1,+1}.
inline double logistic_loss(const std::vector<double>& decision, const std::vector<double>& y) {
    if (decision.size() != y.size()) throw DimensionMismatch("logistic_loss: length mismatch");
    const double n = static_cast<double>(y.size());
    double total = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) total += detail::softplus(-y[i] * decision[i]);
    return total / (2.0 * n);
}

inline double objective_logistic(const CoefficientVector& d, const std::vector<double>& y,
                                 const InterpolationMatrix& R, const WaveletFilter& filter,
                                 const PenaltySpec& spec, double lambda) {
    return logistic_loss(R.apply(idwt(d, filter)), y) + lambda * penalty_value(spec, d);
}

/// Gradient of the logistic smooth part in coefficient space.
inline std::vector<double> logistic_gradient(const CoefficientVector& d, const std::vector<double>& y,
                                             const InterpolationMatrix& R, const WaveletFilter& filter) {
    std::vector<double> m = R.apply(idwt(d, filter));
    const double n = static_cast<double>(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        m[i] = -y[i] * detail::sigmoid(-y[i] * m[i]) / (2.0 * n);
    return dwt(R.apply_transpose(m), filter, d.j0).values;
}

namespace detail {

// Shared proximal gradient loop. The smooth part is defined through the
// fitted values R W^T d: `value` maps fitted -> loss, `grad_fitted` maps
// fitted -> d(loss)/d(fitted). With fixed_step > 0 the step is constant;
// otherwise backtracking from `config.backtrack_init` with factor
// `config.backtrack_beta`, carrying the accepted step across iterations.
inline FittedModel prox_gradient_loop(
    const InterpolationMatrix& R, const WaveletFilter& filter, const PenaltySpec& spec, double lambda,
    const FitConfig& config, Loss loss_kind,
    const std::function<double(const std::vector<double>&)>& value,
    const std::function<std::vector<double>(const std::vector<double>&)>& grad_fitted,
    double fixed_step, const CoefficientVector* warm_start) {
    const std::size_t K = R.K;
    const int j0 = spec.j0;

    CoefficientVector d;
    if (warm_start != nullptr && !warm_start->values.empty()) {
        if (warm_start->K() != K || warm_start->j0 != j0)
            throw LayoutMismatch("warm start has a different (K, j0) layout");
        d = *warm_start;
    } else {
        d.j0 = j0;
        d.values.assign(K, 0.0);
    }

    auto objective = [&](const CoefficientVector& c) {
        return value(R.apply(idwt(c, filter))) + lambda * penalty_value(spec, c);
    };

    // Smooth value and gradient at the extrapolation point, kept in both
    // value space (for the update) and coefficient space (for the
    // backtracking bound).
    struct StepEval {
        std::vector<double> mesh;        // W^T u
        std::vector<double> grad_value;  // R^T d(loss)/d(fitted)
        std::vector<double> grad_coef;   // W * grad_value
        double smooth_at_u = 0.0;
    };
    auto eval_at = [&](const CoefficientVector& u) {
        StepEval ev;
        ev.mesh = idwt(u, filter);
        std::vector<double> fu = R.apply(ev.mesh);
        ev.smooth_at_u = value(fu);
        ev.grad_value = R.apply_transpose(grad_fitted(fu));
        ev.grad_coef = dwt(ev.grad_value, filter, j0).values;
        return ev;
    };
    auto step_from = [&](const StepEval& ev, double t) {
        std::vector<double> w(K);
        for (std::size_t i = 0; i < K; ++i) w[i] = ev.mesh[i] - t * ev.grad_value[i];
        CoefficientVector next = dwt(w, filter, j0);
        next.values = prox_weighted_l1(next.values, spec, t * lambda);
        return next;
    };

    FittedModel model;
    model.filter = filter;
    model.K = K;
    model.j0 = j0;
    model.lambda = lambda;
    model.penalty = spec;
    model.loss = loss_kind;

    double f_last = objective(d);
    model.objective_trace.push_back(f_last);

    CoefficientVector d_prev = d;
    double tk = 1.0;
    double mom = 0.0;
    double t_carry = (fixed_step > 0.0) ? fixed_step : config.backtrack_init;
    const bool fista = config.acceleration == Acceleration::FISTA;

    for (int l = 1; l <= config.max_iter; ++l) {
        CoefficientVector u = d;
        if (fista && mom != 0.0) {
            for (std::size_t i = 0; i < K; ++i)
                u.values[i] = d.values[i] + mom * (d.values[i] - d_prev.values[i]);
        }

        auto take_step = [&](const CoefficientVector& from) {
            StepEval ev = eval_at(from);
            CoefficientVector next = step_from(ev, t_carry);
            if (fixed_step <= 0.0) {
                // backtracking: shrink until the quadratic upper bound holds
                for (int bt = 0; bt < 60; ++bt) {
                    double lin = 0.0, quad = 0.0;
                    for (std::size_t i = 0; i < K; ++i) {
                        const double diff = next.values[i] - from.values[i];
                        lin += ev.grad_coef[i] * diff;
                        quad += diff * diff;
                    }
                    const double bound = ev.smooth_at_u + lin + quad / (2.0 * t_carry);
                    const double actual = value(R.apply(idwt(next, filter)));
                    if (actual <= bound + 1e-15 * std::max(1.0, std::abs(bound))) break;
                    t_carry *= config.backtrack_beta;
                    next = step_from(ev, t_carry);
                }
            }
            return next;
        };

        CoefficientVector d_next = take_step(u);
        double f_next = objective(d_next);
        if (fista && config.restart_on_increase && f_next > f_last) {
            // momentum restart: retake the step from d without extrapolation,
            // which cannot increase the objective at a valid step size
            tk = 1.0;
            d_next = take_step(d);
            f_next = objective(d_next);
        }

        model.objective_trace.push_back(f_next);
        model.iterations_used = l;

        const double rel = std::abs(f_next - f_last) / std::max(1.0, std::abs(f_last));

        d_prev = std::move(d);
        d = std::move(d_next);
        f_last = f_next;

        const double tk_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
        mom = fista ? (tk - 1.0) / tk_next : 0.0;
        tk = tk_next;

        if (rel < config.rel_tol) {
            model.converged = true;
            break;
        }
    }

    model.coeffs = std::move(d);
    return model;
}

} // namespace detail

/// Squared-loss fit against a prebuilt design; used directly by the block
/// coordinate descent and cross-validation paths (warm starts).
inline FittedModel fit_prox_squared(const std::vector<double>& y, const InterpolationMatrix& R,
                                    const WaveletFilter& filter, const PenaltySpec& spec, double lambda,
                                    const FitConfig& config = {},
                                    const CoefficientVector* warm_start = nullptr) {
    if (y.size() != R.n) throw DimensionMismatch("fit: response length != design rows");
    if (lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
    if (spec.K != R.K) throw LayoutMismatch("penalty spec built for a different K");

    double fixed_step = 0.0;
    if (config.step_rule == StepRule::FixedInverseLmax) {
        // small safety factor so a power-iteration underestimate of L_max
        // cannot break the descent guarantee
        fixed_step = 1.0 / (max_eigenvalue_rtr(R) * (1.0 + 1e-9));
    }
    auto value = [&y](const std::vector<double>& fitted) {
        double rss = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double r = y[i] - fitted[i];
            rss += r * r;
        }
        return 0.5 * rss;
    };
    auto grad = [&y](const std::vector<double>& fitted) {
        std::vector<double> g(fitted.size());
        for (std::size_t i = 0; i < fitted.size(); ++i) g[i] = fitted[i] - y[i];
        return g;
    };
    return detail::prox_gradient_loop(R, filter, spec, lambda, config, Loss::Squared, value, grad,
                                      fixed_step, warm_start);
}

/// Univariate waveMesh fit: 0.5*||y - R W^T d||^2 + lambda * weighted l1,
/// solved by proximal gradient with optional FISTA acceleration.
inline FittedModel fit_univariate(const std::vector<double>& y, const std::vector<double>& x,
                                  std::size_t K, int j0, const WaveletFilter& filter,
                                  const PenaltySpec& spec, double lambda, const FitConfig& config = {}) {
    if (y.size() != x.size()) throw DimensionMismatch("fit_univariate: x and y lengths differ");
    if (y.size() < 2) throw TooFewObservations("fit_univariate: need n >= 2");
    if (spec.K != K || spec.j0 != j0) throw LayoutMismatch("penalty spec does not match (K, j0)");
    InterpolationMatrix R = build_linear_interp(x, K);
    return fit_prox_squared(y, R, filter, spec, lambda, config);
}

/// Logistic-loss fit with backtracking line search (no closed-form Lipschitz
/// constant for this loss). Labels must be exactly -1 or +1.
inline FittedModel fit_prox_logistic(const std::vector<double>& y, const InterpolationMatrix& R,
                                     const WaveletFilter& filter, const PenaltySpec& spec, double lambda,
                                     const FitConfig& config = {},
                                     const CoefficientVector* warm_start = nullptr) {
    if (y.size() != R.n) throw DimensionMismatch("fit: response length != design rows");
    if (lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
    if (spec.K != R.K) throw LayoutMismatch("penalty spec built for a different K");
    for (double yi : y)
        if (yi != 1.0 && yi != -1.0) throw InvalidLabels("logistic labels must be -1 or +1");

    const double n = static_cast<double>(y.size());
    auto value = [&y, n](const std::vector<double>& m) {
        double total = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) total += detail::softplus(-y[i] * m[i]);
        return total / (2.0 * n);
    };
    auto grad = [&y, n](const std::vector<double>& m) {
        std::vector<double> g(m.size());
        for (std::size_t i = 0; i < m.size(); ++i)
            g[i] = -y[i] * detail::sigmoid(-y[i] * m[i]) / (2.0 * n);
        return g;
    };
    return detail::prox_gradient_loop(R, filter, spec, lambda, config, Loss::Logistic, value, grad,
                                      /*fixed_step=*/0.0, warm_start);
}

inline FittedModel fit_univariate_logistic(const std::vector<double>& y, const std::vector<double>& x,
                                           std::size_t K, int j0, const WaveletFilter& filter,
                                           const PenaltySpec& spec, double lambda,
                                           const FitConfig& config = {}) {
    if (y.size() != x.size()) throw DimensionMismatch("fit_univariate_logistic: x and y lengths differ");
    if (y.size() < 2) throw TooFewObservations("fit_univariate_logistic: need n >= 2");
    if (spec.K != K || spec.j0 != j0) throw LayoutMismatch("penalty spec does not match (K, j0)");
    InterpolationMatrix R = build_linear_interp(x, K);
    return fit_prox_logistic(y, R, filter, spec, lambda, config);
}

/// Rescale x by the model's recorded (min, max), clamp to [0,1], and
/// interpolate the mesh values W^T d-hat. Mesh nodes reproduce the mesh
/// values exactly; training points reproduce in-sample fits.
inline std::vector<double> predict(const FittedModel& model, const std::vector<double>& x_new) {
    const std::vector<double> mesh = idwt(model.coeffs, model.filter);
    const double lo = model.x_scale.first;
    const double hi = model.x_scale.second;
    std::vector<double> out(x_new.size());
    for (std::size_t i = 0; i < x_new.size(); ++i) {
        double u = (hi > lo) ? (x_new[i] - lo) / (hi - lo) : 0.5;
        u = std::clamp(u, 0.0, 1.0);
        const InterpRow row = linear_interp_row(u, model.K);
        double v = 0.0;
        for (int e = 0; e < row.count; ++e) v += row.w[e] * mesh[row.col[e]];
        out[i] = v;
    }
    return out;
}

} // namespace wavemesh
