#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "wavemesh/csv.hpp"
#include "wavemesh/model_io.hpp"
#include "oracles.hpp"

using namespace wavemesh;
using Catch::Approx;

TEST_CASE("model file round trip") {
    std::mt19937_64 rng(191);
    ModelFile m;
    m.loss = Loss::Logistic;
    m.filter_name = "db3";
    m.K = 8;
    m.j0 = 0;
    m.penalty = PenaltyKind::BesovPs;
    m.besov_s = 1.25;
    m.lambda1 = 0.03125;
    m.lambda2 = 0.0;
    m.intercept = -0.7071067811865476;
    m.covariate_names = {"age"};
    m.x_scales = {{-3.25, 17.5}};
    m.coefficient_blocks = {oracle::random_vector(rng, 8)};
    m.iterations = 137;
    m.converged = true;
    m.objective = 0.123456789012345678;

    std::stringstream buffer;
    save_model(m, buffer);
    const ModelFile back = load_model(buffer);

    CHECK(back.loss == m.loss);
    CHECK(back.filter_name == m.filter_name);
    CHECK(back.K == m.K);
    CHECK(back.j0 == m.j0);
    CHECK(back.penalty == m.penalty);
    CHECK(back.besov_s == m.besov_s);
    CHECK(back.lambda1 == m.lambda1);
    CHECK(back.intercept == m.intercept);
    CHECK(back.covariate_names == m.covariate_names);
    CHECK(back.x_scales == m.x_scales);
    CHECK(back.coefficient_blocks == m.coefficient_blocks);  // bit-exact doubles
    CHECK(back.iterations == m.iterations);
    CHECK(back.converged == m.converged);
    CHECK(back.objective == m.objective);

    // predictions from the reloaded model are bit-identical
    const std::vector<std::vector<double>> cols = {{-3.25, 0.0, 5.5, 17.5, 99.0}};
    CHECK(predict_from_model_file(m, cols) == predict_from_model_file(back, cols));
}

TEST_CASE("unknown format version is rejected") {
    ModelFile m;
    m.K = 4;
    m.covariate_names = {"x"};
    m.x_scales = {{0.0, 1.0}};
    m.coefficient_blocks = {{0.0, 0.0, 0.0, 0.0}};
    std::stringstream buffer;
    save_model(m, buffer);
    std::string text = buffer.str();
    const auto pos = text.find("\"format_version\": 1");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, std::string("\"format_version\": 1").size(), "\"format_version\": 99");
    std::istringstream is(text);
    CHECK_THROWS_AS(load_model(is), std::invalid_argument);
}

TEST_CASE("predict_from_model_file matches the in-memory model") {
    std::mt19937_64 rng(193);
    const WaveletFilter filter = make_filter(WaveletFamily::Daub2);
    const std::size_t K = 8;
    AdditiveModel model;
    model.filter = filter;
    model.K = K;
    model.j0 = 0;
    model.intercept = 1.5;
    model.blocks = {CoefficientVector{oracle::random_vector(rng, K), 0},
                    CoefficientVector{oracle::random_vector(rng, K), 0}};
    model.x_scales = {{0.0, 1.0}, {10.0, 20.0}};

    ModelFile file;
    file.filter_name = "db2";
    file.K = K;
    file.j0 = 0;
    file.intercept = model.intercept;
    file.covariate_names = {"a", "b"};
    file.x_scales = model.x_scales;
    file.coefficient_blocks = {model.blocks[0].values, model.blocks[1].values};

    const std::vector<std::vector<double>> cols = {oracle::random_unit_interval(rng, 9),
                                                   {10, 11, 12, 13, 14, 15, 17, 19, 20}};
    CHECK(predict_from_model_file(file, cols) == predict_additive(model, cols));
}

TEST_CASE("csv reader") {
    SECTION("LF and CRLF both parse") {
        std::istringstream lf("x,y\n1,2\n3,4\n");
        const NumericCsv a = read_numeric_csv(lf);
        CHECK(a.header == std::vector<std::string>{"x", "y"});
        CHECK(a.rows() == 2);
        CHECK(a.columns[1][1] == 4.0);

        std::istringstream crlf("x,y\r\n1,2\r\n3,4\r\n");
        const NumericCsv b = read_numeric_csv(crlf);
        CHECK(b.columns == a.columns);
    }

    SECTION("quoted fields") {
        std::istringstream in("\"the, x\",y\n1.5,-2e3\n");
        const NumericCsv t = read_numeric_csv(in);
        CHECK(t.header[0] == "the, x");
        CHECK(t.columns[1][0] == -2000.0);
    }

    SECTION("header-only file is empty but valid") {
        std::istringstream in("x,y\n");
        CHECK(read_numeric_csv(in).rows() == 0);
    }

    SECTION("rejects NaN, infinity and text") {
        std::istringstream nan_in("x\nnan\n");
        CHECK_THROWS_AS(read_numeric_csv(nan_in), CsvError);
        std::istringstream inf_in("x\ninf\n");
        CHECK_THROWS_AS(read_numeric_csv(inf_in), CsvError);
        std::istringstream txt_in("x\nhello\n");
        CHECK_THROWS_AS(read_numeric_csv(txt_in), CsvError);
        std::istringstream trail_in("x\n1.5abc\n");
        CHECK_THROWS_AS(read_numeric_csv(trail_in), CsvError);
    }

    SECTION("rejects ragged rows and missing header") {
        std::istringstream ragged("x,y\n1,2\n3\n");
        CHECK_THROWS_AS(read_numeric_csv(ragged), CsvError);
        std::istringstream empty("");
        CHECK_THROWS_AS(read_numeric_csv(empty), CsvError);
    }

    SECTION("writer quotes only when needed and round-trips") {
        std::ostringstream os;
        write_csv_row(os, {"plain", "with,comma", "with\"quote"});
        CHECK(os.str() == "plain,\"with,comma\",\"with\"\"quote\"\n");
    }
}
