#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "wavemesh/select.hpp"
#include "oracles.hpp"

using namespace wavemesh;
using Catch::Approx;

namespace {
const WaveletFilter kFilter = make_filter(WaveletFamily::Daub2);
}

TEST_CASE("lambda grid shape") {
    const LambdaGrid grid = make_lambda_grid(2.0);
    REQUIRE(grid.values.size() == 50);
    CHECK(grid.values.front() == 2.0);
    CHECK(grid.values.back() == 2.0 * 1e-4);
    for (std::size_t i = 1; i < grid.values.size(); ++i) CHECK(grid.values[i] < grid.values[i - 1]);
    // log-linear spacing: constant successive ratios
    const double r0 = grid.values[1] / grid.values[0];
    for (std::size_t i = 2; i + 1 < grid.values.size(); ++i)
        CHECK(grid.values[i] / grid.values[i - 1] == Approx(r0).epsilon(1e-10));
    CHECK_THROWS_AS(make_lambda_grid(0.0), std::invalid_argument);
    CHECK_THROWS_AS(make_lambda_grid(1.0, 50, 1.5), std::invalid_argument);
}

TEST_CASE("lambda_max_univariate") {
    SECTION("regular design and a spike: largest mother coefficient of dwt(y)") {
        const std::size_t K = 16;
        std::vector<double> x(K);
        for (std::size_t i = 0; i < K; ++i) x[i] = static_cast<double>(i + 1) / K;
        std::vector<double> y(K, 0.0);
        y[5] = 3.0;
        const InterpolationMatrix R = build_linear_interp(x, K);
        const PenaltySpec spec = make_penalty(PenaltyKind::PlainL1, K, 0);
        const CoefficientVector d = dwt(y, kFilter, 0);
        double expect = 0.0;
        for (std::size_t i = 1; i < K; ++i) expect = std::max(expect, std::abs(d.values[i]));
        CHECK(lambda_max_univariate(y, R, kFilter, spec) == Approx(expect).margin(1e-12));
    }

    SECTION("constant response is rejected") {
        const InterpolationMatrix R = build_linear_interp({0.1, 0.5, 0.9}, 4);
        const PenaltySpec spec = make_penalty(PenaltyKind::PlainL1, 4, 0);
        CHECK_THROWS_AS(lambda_max_univariate({2.0, 2.0, 2.0}, R, kFilter, spec), ConstantResponse);
    }

    SECTION("fitting just above lambda_max zeroes the penalized block") {
        std::mt19937_64 rng(167);
        for (int j0 : {0, 2}) {
            const auto kind = j0 == 0 ? PenaltyKind::PlainL1 : PenaltyKind::AdaptiveLevel;
            const std::size_t K = 16;
            const auto x = oracle::random_unit_interval(rng, 50);
            const auto y = oracle::random_vector(rng, 50);
            const InterpolationMatrix R = build_linear_interp(x, K);
            const PenaltySpec spec = make_penalty(kind, K, j0);
            const double lam = 1.01 * lambda_max_univariate(y, R, kFilter, spec);
            FitConfig config;
            config.rel_tol = 1e-12;
            config.max_iter = 50000;
            const FittedModel m = fit_prox_squared(y, R, kFilter, spec, lam, config);
            for (std::size_t i = 0; i < K; ++i)
                if (spec.weights[i] > 0.0) CHECK(m.coeffs.values[i] == 0.0);
        }
    }

    SECTION("grid endpoints bracket the sparsity range") {
        std::mt19937_64 rng(173);
        const std::size_t K = 16;
        const auto x = oracle::random_unit_interval(rng, 60);
        auto y = oracle::random_vector(rng, 60);
        for (std::size_t i = 0; i < 60; ++i) y[i] += std::sin(2.0 * M_PI * x[i]);
        const InterpolationMatrix R = build_linear_interp(x, K);
        const PenaltySpec spec = make_penalty(PenaltyKind::PlainL1, K, 0);
        const LambdaGrid grid = make_lambda_grid(lambda_max_univariate(y, R, kFilter, spec));
        FitConfig config;
        config.rel_tol = 1e-11;
        config.max_iter = 50000;
        auto nonzeros = [&](double lam) {
            const FittedModel m = fit_prox_squared(y, R, kFilter, spec, lam, config);
            std::size_t count = 0;
            for (std::size_t i = 1; i < K; ++i)
                if (m.coeffs.values[i] != 0.0) ++count;
            return count;
        };
        CHECK(nonzeros(grid.values.front()) == 0);
        CHECK(nonzeros(grid.values.back()) > 0);
    }
}

TEST_CASE("fold assignment") {
    SECTION("sizes differ by at most one, all observations covered") {
        const auto folds = make_folds(23, 5, 42);
        std::vector<int> counts(5, 0);
        for (int f : folds) {
            REQUIRE(f >= 0);
            REQUIRE(f < 5);
            ++counts[f];
        }
        const auto [mn, mx] = std::minmax_element(counts.begin(), counts.end());
        CHECK(*mx - *mn <= 1);
    }

    SECTION("deterministic in the seed") {
        CHECK(make_folds(40, 5, 7) == make_folds(40, 5, 7));
        CHECK(make_folds(40, 5, 7) != make_folds(40, 5, 8));
    }

    SECTION("too few observations") {
        CHECK_THROWS_AS(make_folds(3, 5, 0), TooFewObservations);
        CHECK_THROWS_AS(make_folds(10, 1, 0), TooFewObservations);
    }
}

TEST_CASE("cross_validate") {
    SECTION("bit-identical results for identical inputs") {
        const LambdaGrid grid = make_lambda_grid(1.0, 10);
        FoldErrorFn fn = [&](const std::vector<std::size_t>& train,
                             const std::vector<std::size_t>& test,
                             const std::vector<double>& lambdas) {
            std::vector<double> err;
            for (double lam : lambdas)
                err.push_back(lam * static_cast<double>(train.size()) +
                              1.0 / (lam * static_cast<double>(test.size())));
            return err;
        };
        const CvResult a = cross_validate(30, fn, grid, 5, 99);
        const CvResult b = cross_validate(30, fn, grid, 5, 99);
        CHECK(a.mean_error == b.mean_error);
        CHECK(a.se_error == b.se_error);
        CHECK(a.chosen_lambda == b.chosen_lambda);
        CHECK(a.fold_of == b.fold_of);
    }

    SECTION("leave-one-out degenerate case runs") {
        const LambdaGrid grid = make_lambda_grid(1.0, 3);
        FoldErrorFn fn = [](const std::vector<std::size_t>&, const std::vector<std::size_t>&,
                            const std::vector<double>& lambdas) {
            return std::vector<double>(lambdas.size(), 1.0);
        };
        const CvResult r = cross_validate(5, fn, grid, 5, 1);
        CHECK(r.mean_error == std::vector<double>{1.0, 1.0, 1.0});
        CHECK(r.se_error == std::vector<double>{0.0, 0.0, 0.0});
    }

    SECTION("identical duplicated data gives identical per-fold errors") {
        // every observation is the same point, so every fold sees the same
        // training/held-out content
        const std::size_t n = 25;
        const std::vector<double> x(n, 0.4), y(n, 1.7);
        const std::size_t K = 8;
        const PenaltySpec spec = make_penalty(PenaltyKind::PlainL1, K, 0);
        std::vector<std::vector<double>> recorded;
        FoldErrorFn fn = [&](const std::vector<std::size_t>& train,
                             const std::vector<std::size_t>& test,
                             const std::vector<double>& lambdas) {
            std::vector<double> err;
            const InterpolationMatrix R =
                build_linear_interp(std::vector<double>(train.size(), 0.4), K);
            std::vector<double> y_tr(train.size(), 1.7);
            for (double lam : lambdas) {
                const FittedModel m = fit_prox_squared(y_tr, R, kFilter, spec, lam);
                FittedModel pm = m;
                double sq = 0.0;
                for (std::size_t i : test) {
                    const double pred = predict(pm, {x[i]})[0];
                    sq += (pred - y[i]) * (pred - y[i]);
                }
                err.push_back(sq / static_cast<double>(test.size()));
            }
            recorded.push_back(err);
            return err;
        };
        cross_validate(n, fn, make_lambda_grid(1.0, 4), 5, 3);
        REQUIRE(recorded.size() == 5);
        for (std::size_t f = 1; f < 5; ++f)
            for (std::size_t l = 0; l < recorded[f].size(); ++l)
                CHECK(recorded[f][l] == Approx(recorded[0][l]).margin(1e-10));
    }

    SECTION("pure noise selects heavy shrinkage") {
        // over seeded replicates the chosen lambda should sit in the top
        // quartile of the grid most of the time
        const std::size_t n = 60, K = 16;
        const PenaltySpec spec = make_penalty(PenaltyKind::PlainL1, K, 0);
        int in_top_quartile = 0;
        for (int rep = 0; rep < 20; ++rep) {
            std::mt19937_64 rng(1000 + rep);
            const auto x = oracle::random_unit_interval(rng, n);
            const auto y = oracle::random_vector(rng, n);
            const InterpolationMatrix R = build_linear_interp(x, K);
            const LambdaGrid grid = make_lambda_grid(lambda_max_univariate(y, R, kFilter, spec));
            FoldErrorFn fn = [&](const std::vector<std::size_t>& train,
                                 const std::vector<std::size_t>& test,
                                 const std::vector<double>& lambdas) {
                std::vector<double> x_tr, y_tr;
                for (std::size_t i : train) {
                    x_tr.push_back(x[i]);
                    y_tr.push_back(y[i]);
                }
                const InterpolationMatrix R_tr = build_linear_interp(x_tr, K);
                CoefficientVector warm{std::vector<double>(K, 0.0), 0};
                std::vector<double> err;
                for (double lam : lambdas) {
                    const FittedModel m = fit_prox_squared(y_tr, R_tr, kFilter, spec, lam, {}, &warm);
                    warm = m.coeffs;
                    double sq = 0.0;
                    for (std::size_t i : test) {
                        const double pred = predict(m, {x[i]})[0];
                        sq += (pred - y[i]) * (pred - y[i]);
                    }
                    err.push_back(sq / static_cast<double>(test.size()));
                }
                return err;
            };
            const CvResult r = cross_validate(n, fn, grid, 5, 7);
            if (r.chosen_index < grid.values.size() / 4) ++in_top_quartile;
        }
        CHECK(in_top_quartile >= 15);
    }
}

TEST_CASE("universal threshold") {
    SECTION("recovers a unit noise scale on a regular grid") {
        const std::size_t K = 256;
        std::vector<double> x(K);
        for (std::size_t i = 0; i < K; ++i) x[i] = static_cast<double>(i + 1) / K;
        const InterpolationMatrix R = build_linear_interp(x, K);
        double mean_sigma = 0.0;
        double lo = 1e9, hi = -1e9;
        for (int rep = 0; rep < 50; ++rep) {
            std::mt19937_64 rng(2000 + rep);
            const auto y = oracle::random_vector(rng, K);
            const double thr = universal_threshold(y, R, kFilter, K);
            const double sigma_hat = thr / std::sqrt(2.0 * std::log(double(K)));
            mean_sigma += sigma_hat;
            lo = std::min(lo, sigma_hat);
            hi = std::max(hi, sigma_hat);
        }
        mean_sigma /= 50.0;
        // the Monte-Carlo average sits in (0.8, 1.2); individual replicates
        // scatter with the MAD's sampling noise
        CHECK(mean_sigma > 0.8);
        CHECK(mean_sigma < 1.2);
        CHECK(lo > 0.6);
        CHECK(hi < 1.4);
    }

    SECTION("scales exactly with the response") {
        std::mt19937_64 rng(179);
        const std::size_t K = 16;
        const auto x = oracle::random_unit_interval(rng, 40);
        const auto y = oracle::random_vector(rng, 40);
        const InterpolationMatrix R = build_linear_interp(x, K);
        const double base = universal_threshold(y, R, kFilter, K);
        std::vector<double> scaled = y;
        for (double& v : scaled) v *= 3.5;
        CHECK(universal_threshold(scaled, R, kFilter, K) == Approx(3.5 * base).epsilon(1e-12));
    }

    SECTION("constant response is degenerate") {
        const std::size_t K = 8;
        std::mt19937_64 rng(181);
        const auto x = oracle::random_unit_interval(rng, 30);
        const InterpolationMatrix R = build_linear_interp(x, K);
        CHECK_THROWS_AS(universal_threshold(std::vector<double>(30, 5.0), R, kFilter, K),
                        DegenerateScale);
    }

    SECTION("needs K >= 4") {
        const InterpolationMatrix R = build_linear_interp({0.2, 0.8}, 2);
        CHECK_THROWS_AS(universal_threshold({1.0, 2.0}, R, kFilter, 2), std::invalid_argument);
    }
}
