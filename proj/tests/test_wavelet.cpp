#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cmath>
#include <random>

#include "wavemesh/wavelet.hpp"
#include "oracles.hpp"

using namespace wavemesh;
using Catch::Approx;

namespace {

const std::vector<WaveletFamily> kAllFamilies = {
    WaveletFamily::Haar,  WaveletFamily::Daub2, WaveletFamily::Daub3, WaveletFamily::Daub4,
    WaveletFamily::Daub5, WaveletFamily::Daub6, WaveletFamily::Daub7, WaveletFamily::Daub8,
    WaveletFamily::Daub9, WaveletFamily::Daub10};

} // namespace

TEST_CASE("filter invariants hold for every family") {
    for (auto family : kAllFamilies) {
        const WaveletFilter f = make_filter(family);
        CAPTURE(f.name);
        REQUIRE(f.lowpass.size() % 2 == 0);
        double sum = 0.0, norm_h = 0.0, norm_g = 0.0, cross = 0.0;
        for (std::size_t k = 0; k < f.lowpass.size(); ++k) {
            sum += f.lowpass[k];
            norm_h += f.lowpass[k] * f.lowpass[k];
            norm_g += f.highpass[k] * f.highpass[k];
            cross += f.lowpass[k] * f.highpass[k];
        }
        CHECK(sum == Approx(std::sqrt(2.0)).margin(1e-12));
        CHECK(norm_h == Approx(1.0).margin(1e-12));
        CHECK(norm_g == Approx(1.0).margin(1e-12));
        CHECK(std::abs(cross) < 1e-12);
    }
}

TEST_CASE("filter lookup by name") {
    CHECK(make_filter("haar").lowpass.size() == 2);
    CHECK(make_filter("db2").lowpass.size() == 4);
    CHECK(make_filter("db10").lowpass.size() == 20);
    CHECK_THROWS_AS(make_filter("db11"), std::invalid_argument);
    CHECK_THROWS_AS(make_filter("sym4"), std::invalid_argument);
}

TEST_CASE("dwt hand examples") {
    const WaveletFilter haar = make_filter(WaveletFamily::Haar);

    SECTION("constant signal maps to the father coefficient") {
        const CoefficientVector d = dwt({1, 1, 1, 1}, haar, 0);
        REQUIRE(d.values.size() == 4);
        CHECK(d.values[0] == Approx(2.0).margin(1e-14));
        CHECK(std::abs(d.values[1]) < 1e-14);
        CHECK(std::abs(d.values[2]) < 1e-14);
        CHECK(std::abs(d.values[3]) < 1e-14);
    }

    SECTION("pure detail") {
        const CoefficientVector d = dwt({1, -1}, haar, 0);
        CHECK(std::abs(d.values[0]) < 1e-14);
        CHECK(d.values[1] == Approx(std::sqrt(2.0)).margin(1e-14));
    }

    SECTION("constant scaling convention: father = c * sqrt(K)") {
        for (std::size_t K : {8u, 64u}) {
            const std::vector<double> c(K, 2.5);
            const CoefficientVector d = dwt(c, make_filter(WaveletFamily::Daub4), 0);
            CHECK(d.values[0] == Approx(2.5 * std::sqrt(double(K))).margin(1e-10));
            for (std::size_t i = 1; i < K; ++i) CHECK(std::abs(d.values[i]) < 1e-10);
        }
    }
}

TEST_CASE("dwt matches the explicit W matrix") {
    std::mt19937_64 rng(7);
    const auto y = oracle::random_vector(rng, 16);
    const WaveletFilter db4 = make_filter(WaveletFamily::Daub4);
    const DenseMatrix W = build_w_matrix(16, db4, 0);
    const auto expected = oracle::matvec(W, y);
    const CoefficientVector d = dwt(y, db4, 0);
    CHECK(oracle::max_abs_diff(d.values, expected) < 1e-10);
}

TEST_CASE("idwt hand examples and dense oracle") {
    const WaveletFilter haar = make_filter(WaveletFamily::Haar);

    SECTION("inverse of the constant example") {
        const std::vector<double> y = idwt({{2, 0, 0, 0}, 0}, haar);
        for (double v : y) CHECK(v == Approx(1.0).margin(1e-14));
    }

    SECTION("inverse of the pure-detail example") {
        const std::vector<double> y = idwt({{0, std::sqrt(2.0)}, 0}, haar);
        CHECK(y[0] == Approx(1.0).margin(1e-14));
        CHECK(y[1] == Approx(-1.0).margin(1e-14));
    }

    SECTION("random coefficients against W^T d") {
        std::mt19937_64 rng(11);
        const WaveletFilter db2 = make_filter(WaveletFamily::Daub2);
        CoefficientVector d{oracle::random_vector(rng, 32), 0};
        const DenseMatrix W = build_w_matrix(32, db2, 0);
        const auto expected = oracle::matvec_transpose(W, d.values);
        CHECK(oracle::max_abs_diff(idwt(d, db2), expected) < 1e-10);
    }
}

TEST_CASE("build_w_matrix basics") {
    const WaveletFilter haar = make_filter(WaveletFamily::Haar);

    SECTION("two-point Haar") {
        const DenseMatrix W = build_w_matrix(2, haar, 0);
        const double r = 1.0 / std::sqrt(2.0);
        CHECK(W(0, 0) == Approx(r).margin(1e-15));
        CHECK(W(0, 1) == Approx(r).margin(1e-15));
        CHECK(W(1, 0) == Approx(r).margin(1e-15));
        CHECK(W(1, 1) == Approx(-r).margin(1e-15));
    }

    SECTION("orthogonality at K=8") {
        const DenseMatrix W = build_w_matrix(8, haar, 0);
        for (std::size_t i = 0; i < 8; ++i) {
            for (std::size_t j = 0; j < 8; ++j) {
                double dot = 0.0;
                for (std::size_t k = 0; k < 8; ++k) dot += W(i, k) * W(j, k);
                CHECK(dot == Approx(i == j ? 1.0 : 0.0).margin(1e-12));
            }
        }
    }

    SECTION("unit column norms at K=16, Daub4") {
        const DenseMatrix W = build_w_matrix(16, make_filter(WaveletFamily::Daub4), 0);
        for (std::size_t j = 0; j < 16; ++j) {
            double norm = 0.0;
            for (std::size_t i = 0; i < 16; ++i) norm += W(i, j) * W(i, j);
            CHECK(norm == Approx(1.0).margin(1e-10));
        }
    }

    SECTION("rejects oversized and non-dyadic requests") {
        CHECK_THROWS_AS(build_w_matrix(2048, haar, 0), std::invalid_argument);
        CHECK_THROWS_AS(build_w_matrix(12, haar, 0), NonDyadicLength);
    }
}

TEST_CASE("round trip, Parseval and linearity across filters and sizes") {
    std::mt19937_64 rng(21);
    for (auto family : kAllFamilies) {
        const WaveletFilter f = make_filter(family);
        CAPTURE(f.name);
        for (std::size_t K = 2; K <= 256; K *= 2) {
            const int J = detail::log2_exact(K);
            for (int j0 : {0, J > 2 ? 2 : 0}) {
                const auto y = oracle::random_vector(rng, K);
                const auto z = oracle::random_vector(rng, K);

                const CoefficientVector dy = dwt(y, f, j0);
                CHECK(oracle::max_abs_diff(idwt(dy, f), y) < 1e-10);
                CHECK(std::abs(oracle::l2_norm(dy.values) - oracle::l2_norm(y)) < 1e-10);

                // linearity: dwt(2y - 3z) = 2 dwt(y) - 3 dwt(z)
                std::vector<double> combo(K);
                for (std::size_t i = 0; i < K; ++i) combo[i] = 2.0 * y[i] - 3.0 * z[i];
                const CoefficientVector dz = dwt(z, f, j0);
                const CoefficientVector dc = dwt(combo, f, j0);
                std::vector<double> expected(K);
                for (std::size_t i = 0; i < K; ++i)
                    expected[i] = 2.0 * dy.values[i] - 3.0 * dz.values[i];
                CHECK(oracle::max_abs_diff(dc.values, expected) < 1e-10);
            }
        }
    }
}

TEST_CASE("pyramid agrees with the dense matrix for every filter") {
    std::mt19937_64 rng(33);
    for (auto family : kAllFamilies) {
        const WaveletFilter f = make_filter(family);
        CAPTURE(f.name);
        for (std::size_t K : {4u, 32u, 256u}) {
            const DenseMatrix W = build_w_matrix(K, f, 0);
            const auto y = oracle::random_vector(rng, K);
            CHECK(oracle::max_abs_diff(dwt(y, f, 0).values, oracle::matvec(W, y)) < 1e-10);
        }
    }
}

TEST_CASE("coefficient layout") {
    SECTION("level_of_index is total and invertible") {
        const std::size_t K = 16;
        const int j0 = 1;
        std::size_t fathers = 0;
        for (std::size_t i = 0; i < K; ++i) {
            const LevelIndex li = level_of_index(i, K, j0);
            if (li.kind == CoefficientKind::Father) {
                ++fathers;
                CHECK(li.level == j0);
                CHECK(li.pos == i);
            } else {
                CHECK(li.level >= j0);
                CHECK(li.level < 4);
                CHECK(li.pos < (std::size_t{1} << li.level));
                CHECK((std::size_t{1} << li.level) + li.pos == i);
            }
        }
        CHECK(fathers == 2);
        CHECK_THROWS_AS(level_of_index(16, K, j0), LayoutMismatch);
    }

    SECTION("block sizes sum to K") {
        // K = 2^{j0} + sum_{j=j0}^{J-1} 2^j
        for (std::size_t K : {4u, 64u}) {
            const int J = detail::log2_exact(K);
            for (int j0 = 0; j0 < J; ++j0) {
                std::size_t total = std::size_t{1} << j0;
                for (int j = j0; j < J; ++j) total += std::size_t{1} << j;
                CHECK(total == K);
            }
        }
    }
}

TEST_CASE("error paths") {
    const WaveletFilter haar = make_filter(WaveletFamily::Haar);
    CHECK_THROWS_AS(dwt({1, 2, 3}, haar, 0), NonDyadicLength);
    CHECK_THROWS_AS(dwt({1}, haar, 0), NonDyadicLength);
    CHECK_THROWS_AS(dwt({1, 2, 3, 4}, haar, 2), InvalidLevel);
    CHECK_THROWS_AS(dwt({1, 2, 3, 4}, haar, -1), InvalidLevel);
    CHECK_THROWS_AS(idwt({{1, 2, 3}, 0}, haar), NonDyadicLength);
}

TEST_CASE("dwt cost grows roughly linearly in K", "[timing]") {
    const WaveletFilter db4 = make_filter(WaveletFamily::Daub4);
    std::mt19937_64 rng(5);

    auto time_for = [&](std::size_t K, int reps) {
        const auto y = oracle::random_vector(rng, K);
        volatile double sink = 0.0;
        const auto start = std::chrono::steady_clock::now();
        for (int r = 0; r < reps; ++r) {
            const CoefficientVector d = dwt(y, db4, 0);
            sink = sink + d.values[0];
        }
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    // amortized over repetitions; retry to ride out scheduler noise
    bool ok = false;
    for (int attempt = 0; attempt < 3 && !ok; ++attempt) {
        const double t1 = time_for(1024, 4000);
        const double t2 = time_for(2048, 4000);
        const double t4 = time_for(4096, 4000);
        ok = (t2 / t1 <= 2.5) && (t4 / t2 <= 2.5);
    }
    CHECK(ok);
}
