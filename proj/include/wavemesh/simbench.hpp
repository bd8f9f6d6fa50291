#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "wavemesh/errors.hpp"
#include "wavemesh/penalty.hpp"
#include "wavemesh/select.hpp"
#include "wavemesh/solver.hpp"

namespace wavemesh {

// ---------------------------------------------------------------------------
// Test functions on [0,1]. Formulas are documented in the README; bumps,
// doppler and heavy sine are the standard Donoho-Johnstone signals.
// ---------------------------------------------------------------------------

enum class TestFunctionName { Polynomial, Sine, PiecewisePolynomial, HeavySine, Bumps, Doppler };

inline double eval_test_function(TestFunctionName f, double x) {
    switch (f) {
        case TestFunctionName::Polynomial:
            // shifted Legendre polynomial of degree 3
            return ((20.0 * x - 30.0) * x + 12.0) * x - 1.0;
        case TestFunctionName::Sine:
            return std::sin(2.0 * M_PI * x);
        case TestFunctionName::PiecewisePolynomial:
            // two cubic pieces with a unit jump at 1/2
            return x <= 0.5 ? 16.0 * x * x * x : 16.0 * (1.0 - x) * (1.0 - x) * (1.0 - x) - 1.0;
        case TestFunctionName::HeavySine: {
            auto sgn = [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); };
            return 4.0 * std::sin(4.0 * M_PI * x) - sgn(x - 0.3) - sgn(0.72 - x);
        }
        case TestFunctionName::Bumps: {
            static const double t[] = {0.1, 0.13, 0.15, 0.23, 0.25, 0.4, 0.44, 0.65, 0.76, 0.78, 0.81};
            static const double h[] = {4.0, 5.0, 3.0, 4.0, 5.0, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2};
            static const double w[] = {0.005, 0.005, 0.006, 0.01, 0.01, 0.03,
                                       0.01,  0.01,  0.005, 0.008, 0.005};
            double v = 0.0;
            for (int k = 0; k < 11; ++k) {
                const double u = 1.0 + std::abs(x - t[k]) / w[k];
                v += h[k] / (u * u * u * u);
            }
            return v;
        }
        case TestFunctionName::Doppler:
            return std::sqrt(x * (1.0 - x)) * std::sin(2.1 * M_PI / (x + 0.05));
    }
    return 0.0;
}

inline std::string test_function_name(TestFunctionName f) {
    switch (f) {
        case TestFunctionName::Polynomial: return "polynomial";
        case TestFunctionName::Sine: return "sine";
        case TestFunctionName::PiecewisePolynomial: return "piecewise";
        case TestFunctionName::HeavySine: return "heavysine";
        case TestFunctionName::Bumps: return "bumps";
        case TestFunctionName::Doppler: return "doppler";
    }
    return "?";
}

inline TestFunctionName parse_test_function(const std::string& name) {
    if (name == "polynomial") return TestFunctionName::Polynomial;
    if (name == "sine") return TestFunctionName::Sine;
    if (name == "piecewise" || name == "piecewise-polynomial") return TestFunctionName::PiecewisePolynomial;
    if (name == "heavysine") return TestFunctionName::HeavySine;
    if (name == "bumps") return TestFunctionName::Bumps;
    if (name == "doppler") return TestFunctionName::Doppler;
    throw InvalidScenario("unknown test function '" + name + "'");
}

enum class CovariateLaw { Uniform01, StdNormalScaled };

struct SimScenario {
    TestFunctionName function = TestFunctionName::HeavySine;
    std::size_t n = 256;
    CovariateLaw law = CovariateLaw::Uniform01;
    double snr = 5.0;
    int replicates = 100;
    std::uint64_t seed = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t replicate_seed(std::uint64_t seed, int replicate) {
    return splitmix64(seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(replicate + 1));
}

inline double sample_variance(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return ss / (n - 1.0);
}

inline void validate_scenario(const SimScenario& s) {
    if (!(s.snr > 0.0)) throw InvalidScenario("snr must be positive");
    if (s.n < 8) throw InvalidScenario("scenario needs n >= 8");
}

// index-parallel loop; every index writes only its own slot, so results are
// identical for any thread count
inline void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    };
    const std::size_t nw = std::min<std::size_t>(static_cast<std::size_t>(threads), count);
    std::vector<std::thread> pool;
    pool.reserve(nw);
    for (std::size_t w = 0; w < nw; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

} // namespace detail

struct UnivariateSample {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> f0;  // noiseless truth at the sampled x
    double sigma = 0.0;
};

/// Draws x per the covariate law, computes sigma^2 = var(f0(x)) / snr, and
/// adds Gaussian noise. Deterministic for a fixed scenario seed.
inline UnivariateSample generate_univariate(const SimScenario& scenario) {
    detail::validate_scenario(scenario);
    std::mt19937_64 rng(scenario.seed);
    UnivariateSample s;
    s.x.resize(scenario.n);
    if (scenario.law == CovariateLaw::Uniform01) {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (double& xi : s.x) xi = unif(rng);
    } else {
        std::normal_distribution<double> normal(0.0, 1.0);
        for (double& xi : s.x) xi = normal(rng);
        const auto [mn, mx] = std::minmax_element(s.x.begin(), s.x.end());
        const double lo = *mn, hi = *mx;
        for (double& xi : s.x) xi = (xi - lo) / (hi - lo);
    }
    s.f0.resize(scenario.n);
    for (std::size_t i = 0; i < scenario.n; ++i) s.f0[i] = eval_test_function(scenario.function, s.x[i]);
    s.sigma = std::sqrt(detail::sample_variance(s.f0) / scenario.snr);
    s.y = s.f0;
    if (s.sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, s.sigma);
        for (double& yi : s.y) yi += noise(rng);
    }
    return s;
}

struct AdditiveSample {
    std::vector<std::vector<double>> X;  // p columns
    std::vector<double> y;
    std::vector<std::vector<double>> components;  // p columns, centered; inert covariates are zero
    double sigma = 0.0;
};

/// Additive design: the first four covariates carry the polynomial, sine,
/// piecewise polynomial and heavy sine signals (each centered over the
/// sample); any further covariates are inert. sigma^2 = var(sum f_j) / snr.
inline AdditiveSample generate_additive(std::size_t n, std::size_t p, double snr, std::uint64_t seed) {
    if (p < 4) throw InvalidScenario("additive scenario needs p >= 4");
    if (n < 8) throw InvalidScenario("additive scenario needs n >= 8");
    if (!(snr > 0.0)) throw InvalidScenario("snr must be positive");

    static const TestFunctionName signal[4] = {
        TestFunctionName::Polynomial, TestFunctionName::Sine, TestFunctionName::PiecewisePolynomial,
        TestFunctionName::HeavySine};

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    AdditiveSample s;
    s.X.assign(p, std::vector<double>(n));
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t i = 0; i < n; ++i) s.X[j][i] = unif(rng);

    s.components.assign(p, std::vector<double>(n, 0.0));
    std::vector<double> total(n, 0.0);
    for (std::size_t j = 0; j < 4; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            s.components[j][i] = eval_test_function(signal[j], s.X[j][i]);
            mean += s.components[j][i];
        }
        mean /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            s.components[j][i] -= mean;
            total[i] += s.components[j][i];
        }
    }
    s.sigma = std::sqrt(detail::sample_variance(total) / snr);
    s.y = total;
    if (s.sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, s.sigma);
        for (double& yi : s.y) yi += noise(rng);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Study runners. Tuning follows the oracle protocol: fit the whole lambda
// path and keep the value minimizing true-function MSE.
// ---------------------------------------------------------------------------

struct MethodConfig {
    std::string label;
    std::size_t k = 0;  // 0 means the full grid 2^ceil(log2 n)
    PenaltyKind penalty = PenaltyKind::PlainL1;
    double besov_s = 1.0;
    int j0 = 0;
    WaveletFamily family = WaveletFamily::Daub4;
};

inline std::size_t full_grid_k(std::size_t n) {
    std::size_t k = 1;
    while (k < n) k *= 2;
    return k;
}

/// Minimum true-function MSE over a 50-point lambda path, warm-started from
/// large to small lambda.
inline double oracle_path_mse(const UnivariateSample& sample, const MethodConfig& method,
                              const FitConfig& config = {}, std::size_t grid_size = 50) {
    const std::size_t n = sample.x.size();
    const std::size_t K = method.k == 0 ? full_grid_k(n) : method.k;
    const WaveletFilter filter = make_filter(method.family);
    const PenaltySpec spec = make_penalty(method.penalty, K, method.j0, method.besov_s);
    const InterpolationMatrix R = build_linear_interp(sample.x, K);

    const double lam_max = lambda_max_univariate(sample.y, R, filter, spec);
    const LambdaGrid grid = make_lambda_grid(lam_max, grid_size);

    double best = std::numeric_limits<double>::infinity();
    CoefficientVector warm{std::vector<double>(K, 0.0), method.j0};
    for (double lam : grid.values) {
        FittedModel fit = fit_prox_squared(sample.y, R, filter, spec, lam, config, &warm);
        warm = fit.coeffs;
        const std::vector<double> fitted = R.apply(idwt(fit.coeffs, filter));
        double mse = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = sample.f0[i] - fitted[i];
            mse += d * d;
        }
        mse /= static_cast<double>(n);
        best = std::min(best, mse);
    }
    return best;
}

struct MseStudyRow {
    std::string method;
    double mean_mse = 0.0, se_mse = 0.0;
    double mean_ratio = 0.0, se_ratio = 0.0;  // ratio against the full-grid baseline
};

struct MseStudy {
    std::string function;
    std::size_t n = 0;
    double snr = 0.0;
    int replicates = 0;
    std::vector<MseStudyRow> rows;
};

namespace detail {

inline void mean_se(const std::vector<double>& v, double& mean, double& se) {
    const double n = static_cast<double>(v.size());
    mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var = v.size() > 1 ? var / (n - 1.0) : 0.0;
    se = std::sqrt(var / n);
}

} // namespace detail

/// Per replicate, every method and the internal full-grid baseline are fit
/// on the same draw; rows report mean MSE, its standard error, and the
/// per-replicate MSE ratio against the baseline.
inline MseStudy run_mse_study(const SimScenario& scenario, const std::vector<MethodConfig>& methods,
                              int threads = 1, const FitConfig& config = {}) {
    detail::validate_scenario(scenario);
    if (scenario.replicates < 1) throw InvalidScenario("need at least one replicate");

    const std::size_t reps = static_cast<std::size_t>(scenario.replicates);
    MethodConfig baseline;
    baseline.label = "full-grid";
    baseline.k = 0;

    std::vector<std::vector<double>> mse(methods.size(), std::vector<double>(reps));
    std::vector<double> mse_base(reps);
    detail::parallel_for(reps, threads, [&](std::size_t rep) {
        SimScenario local = scenario;
        local.seed = detail::replicate_seed(scenario.seed, static_cast<int>(rep));
        const UnivariateSample sample = generate_univariate(local);
        mse_base[rep] = oracle_path_mse(sample, baseline, config);
        for (std::size_t m = 0; m < methods.size(); ++m)
            mse[m][rep] = oracle_path_mse(sample, methods[m], config);
    });

    MseStudy study;
    study.function = test_function_name(scenario.function);
    study.n = scenario.n;
    study.snr = scenario.snr;
    study.replicates = scenario.replicates;
    for (std::size_t m = 0; m < methods.size(); ++m) {
        MseStudyRow row;
        row.method = methods[m].label;
        detail::mean_se(mse[m], row.mean_mse, row.se_mse);
        std::vector<double> ratio(reps);
        for (std::size_t r = 0; r < reps; ++r) ratio[r] = mse[m][r] / mse_base[r];
        detail::mean_se(ratio, row.mean_ratio, row.se_ratio);
        study.rows.push_back(std::move(row));
    }
    return study;
}

struct KStudyRow {
    std::size_t n = 0;
    std::size_t k = 0;  // resolved mesh size
    double mean_mse = 0.0, se_mse = 0.0;
    double mean_ratio = 0.0, se_ratio = 0.0;  // against the full grid at this n
    double median_time_ms = 0.0;
};

struct KStudy {
    std::string function;
    double snr = 0.0;
    int replicates = 0;
    std::vector<KStudyRow> rows;
};

/// MSE and wall time across truncation levels. The full-grid column doubles
/// as the ratio baseline and reuses exactly the run_mse_study code path.
inline KStudy run_k_study(TestFunctionName function, const std::vector<std::size_t>& n_list,
                          const std::vector<std::size_t>& k_list, double snr, int replicates,
                          std::uint64_t seed, int threads = 1, const FitConfig& config = {}) {
    if (replicates < 1) throw InvalidScenario("need at least one replicate");
    KStudy study;
    study.function = test_function_name(function);
    study.snr = snr;
    study.replicates = replicates;

    for (std::size_t n : n_list) {
        const std::size_t full = full_grid_k(n);
        std::vector<std::size_t> ks;
        for (std::size_t k : k_list) {
            const std::size_t resolved = k == 0 ? full : k;
            if (!detail::is_power_of_two(resolved) || resolved > full)
                throw InvalidScenario("k values must be dyadic and at most the full grid");
            ks.push_back(resolved);
        }

        SimScenario scenario;
        scenario.function = function;
        scenario.n = n;
        scenario.snr = snr;
        scenario.replicates = replicates;
        scenario.seed = seed;

        const std::size_t reps = static_cast<std::size_t>(replicates);
        std::vector<std::vector<double>> mse(ks.size(), std::vector<double>(reps));
        std::vector<std::vector<double>> ms(ks.size(), std::vector<double>(reps));
        std::vector<double> mse_base(reps);
        detail::parallel_for(reps, threads, [&](std::size_t rep) {
            SimScenario local = scenario;
            local.seed = detail::replicate_seed(seed, static_cast<int>(rep));
            const UnivariateSample sample = generate_univariate(local);
            MethodConfig baseline;
            baseline.k = 0;
            mse_base[rep] = oracle_path_mse(sample, baseline, config);
            for (std::size_t ki = 0; ki < ks.size(); ++ki) {
                MethodConfig method;
                method.k = ks[ki];
                const auto start = std::chrono::steady_clock::now();
                mse[ki][rep] = ks[ki] == full
                                   ? mse_base[rep]
                                   : oracle_path_mse(sample, method, config);
                const auto stop = std::chrono::steady_clock::now();
                ms[ki][rep] = std::chrono::duration<double, std::milli>(stop - start).count();
            }
        });

        for (std::size_t ki = 0; ki < ks.size(); ++ki) {
            KStudyRow row;
            row.n = n;
            row.k = ks[ki];
            detail::mean_se(mse[ki], row.mean_mse, row.se_mse);
            std::vector<double> ratio(reps);
            for (std::size_t r = 0; r < reps; ++r) ratio[r] = mse[ki][r] / mse_base[r];
            detail::mean_se(ratio, row.mean_ratio, row.se_ratio);
            std::vector<double> times = ms[ki];
            std::sort(times.begin(), times.end());
            row.median_time_ms = times.size() % 2 == 1
                                     ? times[times.size() / 2]
                                     : 0.5 * (times[times.size() / 2 - 1] + times[times.size() / 2]);
            study.rows.push_back(std::move(row));
        }
    }
    return study;
}

// ---------------------------------------------------------------------------
// Table emission: CSV with full precision, text in the "ratio (100 x SE)"
// convention.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

} // namespace detail

inline void write_mse_csv(const MseStudy& s, std::ostream& os) {
    os << "function,n,method,mean_mse,se_mse,ratio,se_ratio_x100\n";
    for (const auto& r : s.rows) {
        os << s.function << ',' << s.n << ',' << r.method << ',' << detail::fmt("%.10g", r.mean_mse)
           << ',' << detail::fmt("%.10g", r.se_mse) << ',' << detail::fmt("%.10g", r.mean_ratio) << ','
           << detail::fmt("%.10g", 100.0 * r.se_ratio) << '\n';
    }
}

inline void write_mse_text(const MseStudy& s, std::ostream& os) {
    os << s.function << ", n = " << s.n << ", snr = " << detail::fmt("%g", s.snr) << ", "
       << s.replicates << " replicates (ratio vs full grid, 100 x SE in parentheses)\n";
    for (const auto& r : s.rows)
        os << "  " << r.method << ": " << detail::fmt("%.2f", r.mean_ratio) << " ("
           << detail::fmt("%.2f", 100.0 * r.se_ratio) << ")\n";
}

inline void write_k_mse_csv(const KStudy& s, std::ostream& os) {
    os << "function,n,k,mean_mse,se_mse,ratio,se_ratio_x100\n";
    for (const auto& r : s.rows) {
        os << s.function << ',' << r.n << ',' << r.k << ',' << detail::fmt("%.10g", r.mean_mse) << ','
           << detail::fmt("%.10g", r.se_mse) << ',' << detail::fmt("%.10g", r.mean_ratio) << ','
           << detail::fmt("%.10g", 100.0 * r.se_ratio) << '\n';
    }
}

inline void write_k_time_csv(const KStudy& s, std::ostream& os) {
    os << "function,n,k,median_time_ms\n";
    for (const auto& r : s.rows)
        os << s.function << ',' << r.n << ',' << r.k << ',' << detail::fmt("%.6g", r.median_time_ms)
           << '\n';
}

inline void write_k_text(const KStudy& s, std::ostream& os) {
    os << s.function << ", snr = " << detail::fmt("%g", s.snr) << ", " << s.replicates
       << " replicates (ratio vs full grid, 100 x SE in parentheses)\n";
    for (const auto& r : s.rows)
        os << "  n = " << r.n << ", K = " << r.k << ": " << detail::fmt("%.2f", r.mean_ratio) << " ("
           << detail::fmt("%.2f", 100.0 * r.se_ratio) << "), median "
           << detail::fmt("%.3g", r.median_time_ms) << " ms\n";
}

} // namespace wavemesh
