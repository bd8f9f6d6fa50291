// wavemesh: fit/predict/simulate for wavelet regression on irregular designs.
//
// Exit codes: 0 success, 2 malformed input or invalid flags, 3 dimension or
// label errors, 4 non-convergence under --strict.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "wavemesh/wavemesh.hpp"

namespace fs = std::filesystem;
using namespace wavemesh;

namespace {

constexpr int kExitBadInput = 2;
constexpr int kExitDimension = 3;
constexpr int kExitNoConvergence = 4;

struct ScaledColumn {
    std::vector<double> values;  // scaled into [0,1]
    double min = 0.0, max = 1.0;
};

ScaledColumn min_max_scale(const std::vector<double>& raw) {
    ScaledColumn out;
    const auto [mn, mx] = std::minmax_element(raw.begin(), raw.end());
    out.min = *mn;
    out.max = *mx;
    out.values.resize(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i)
        out.values[i] = (out.max > out.min) ? (raw[i] - out.min) / (out.max - out.min) : 0.5;
    return out;
}

PenaltyKind parse_penalty_flag(const std::string& flag, double& besov_s) {
    if (flag == "l1") return PenaltyKind::PlainL1;
    if (flag == "adaptive") return PenaltyKind::AdaptiveLevel;
    if (flag.rfind("besov:", 0) == 0) {
        besov_s = std::stod(flag.substr(6));
        return PenaltyKind::BesovPs;
    }
    throw std::invalid_argument("--penalty expects l1, adaptive or besov:<s>");
}

NumericCsv read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CsvError(0, "cannot open '" + path + "'");
    return read_numeric_csv(in);
}

double mean_squared_error(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return a.empty() ? 0.0 : s / static_cast<double>(a.size());
}

std::vector<double> gather(const std::vector<double>& v, const std::vector<std::size_t>& idx) {
    std::vector<double> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(v[i]);
    return out;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct FitArgs {
    std::string data_path, out_path, response;
    std::string k_flag = "auto";
    int j0 = 0;
    std::string wavelet = "db4";
    std::string penalty_flag = "l1";
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    std::string loss_flag = "squared";
    int cv = 0;
    std::uint64_t seed = 0;
    bool strict = false;
    int max_sweeps = 200;
};

int run_fit(const FitArgs& args) {
    const NumericCsv csv = read_csv_file(args.data_path);
    std::size_t resp_idx;
    try {
        resp_idx = csv.column_index(args.response);
    } catch (const CsvError&) {
        std::cerr << "error: response column '" << args.response << "' not found\n";
        return kExitDimension;
    }
    const std::vector<double>& y_raw = csv.columns[resp_idx];
    const std::size_t n = y_raw.size();
    if (n < 2) {
        std::cerr << "error: need at least two data rows\n";
        return kExitDimension;
    }

    std::vector<std::string> cov_names;
    std::vector<ScaledColumn> covs;
    for (std::size_t c = 0; c < csv.header.size(); ++c) {
        if (c == resp_idx) continue;
        cov_names.push_back(csv.header[c]);
        covs.push_back(min_max_scale(csv.columns[c]));
    }
    const std::size_t p = covs.size();
    if (p == 0) {
        std::cerr << "error: no covariate columns\n";
        return kExitDimension;
    }

    const std::size_t k_auto = full_grid_k(n);
    std::size_t K = k_auto;
    if (args.k_flag != "auto") {
        try {
            K = static_cast<std::size_t>(std::stoull(args.k_flag));
        } catch (const std::exception&) {
            std::cerr << "error: --k must be 'auto' or a power of two\n";
            return kExitBadInput;
        }
        if (K < 2 || !detail::is_power_of_two(K) || K > k_auto) {
            std::cerr << "error: --k must be a power of two between 2 and " << k_auto << "\n";
            return kExitBadInput;
        }
    }

    double besov_s = 0.0;
    const PenaltyKind kind = parse_penalty_flag(args.penalty_flag, besov_s);

    const bool logistic = args.loss_flag == "logistic";
    std::vector<double> y = y_raw;
    if (logistic) {
        for (double& v : y) {
            if (v == 0.0) v = -1.0;  // accept 0/1 labels too
            if (v != 1.0 && v != -1.0) {
                std::cerr << "error: logistic labels must be in {-1,+1} or {0,1}\n";
                return kExitDimension;
            }
        }
        if (p > 1) {
            std::cerr << "error: logistic loss supports a single covariate\n";
            return kExitDimension;
        }
    }

    PenaltySpec spec;
    try {
        spec = make_penalty(kind, K, args.j0, besov_s);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDimension;
    }

    const WaveletFilter filter = make_filter(args.wavelet);
    FitConfig config;
    double lambda1 = args.lambda1;

    if (args.cv > 0) {
        double lam_max = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            const InterpolationMatrix Rj = build_linear_interp(covs[j].values, K);
            lam_max = std::max(lam_max, lambda_max_univariate(y, Rj, filter, spec));
        }
        const LambdaGrid grid = make_lambda_grid(lam_max);

        FoldErrorFn fold_errors = [&](const std::vector<std::size_t>& train,
                                      const std::vector<std::size_t>& test,
                                      const std::vector<double>& lambdas) {
            std::vector<double> errors;
            errors.reserve(lambdas.size());
            const std::vector<double> y_tr = gather(y, train);
            const std::vector<double> y_te = gather(y, test);
            if (p == 1) {
                const InterpolationMatrix R_tr =
                    build_linear_interp(gather(covs[0].values, train), K);
                const std::vector<double> x_te = gather(covs[0].values, test);
                CoefficientVector warm{std::vector<double>(K, 0.0), args.j0};
                for (double lam : lambdas) {
                    FittedModel m =
                        logistic ? fit_prox_logistic(y_tr, R_tr, filter, spec, lam, config, &warm)
                                 : fit_prox_squared(y_tr, R_tr, filter, spec, lam, config, &warm);
                    warm = m.coeffs;
                    const std::vector<double> pred = predict(m, x_te);
                    // held-out squared error, or mean negative log-likelihood
                    // for labels
                    errors.push_back(logistic ? 2.0 * logistic_loss(pred, y_te)
                                              : mean_squared_error(pred, y_te));
                }
            } else {
                std::vector<std::vector<double>> X_tr(p), X_te(p);
                for (std::size_t j = 0; j < p; ++j) {
                    X_tr[j] = gather(covs[j].values, train);
                    X_te[j] = gather(covs[j].values, test);
                }
                for (double lam : lambdas) {
                    AdditiveModel m = fit_additive(y_tr, X_tr, K, args.j0, filter, spec, lam,
                                                   args.lambda2, config, args.max_sweeps);
                    errors.push_back(mean_squared_error(predict_additive(m, X_te), y_te));
                }
            }
            return errors;
        };

        const CvResult cv = cross_validate(n, fold_errors, grid, args.cv, args.seed);
        lambda1 = cv.chosen_lambda;
        std::cout << "cv: chose lambda1 = " << lambda1 << " (grid index " << cv.chosen_index
                  << ", mean held-out error " << cv.mean_error[cv.chosen_index] << ")\n";
    }

    ModelFile out;
    out.loss = logistic ? Loss::Logistic : Loss::Squared;
    out.filter_name = filter.name;
    out.K = K;
    out.j0 = args.j0;
    out.penalty = kind;
    out.besov_s = besov_s;
    out.lambda1 = lambda1;
    out.lambda2 = (p > 1) ? args.lambda2 : 0.0;
    out.covariate_names = cov_names;

    std::vector<double> fitted;
    bool converged = false;
    if (p == 1) {
        FittedModel m = logistic ? fit_univariate_logistic(y, covs[0].values, K, args.j0, filter,
                                                           spec, lambda1, config)
                                 : fit_univariate(y, covs[0].values, K, args.j0, filter, spec,
                                                  lambda1, config);
        out.intercept = 0.0;
        out.x_scales = {{covs[0].min, covs[0].max}};
        out.coefficient_blocks = {m.coeffs.values};
        out.iterations = m.iterations_used;
        out.converged = converged = m.converged;
        out.objective = m.objective_trace.back();
        fitted = predict(m, covs[0].values);  // x_scale is (0,1): already scaled
    } else {
        std::vector<std::vector<double>> X(p);
        for (std::size_t j = 0; j < p; ++j) X[j] = covs[j].values;
        AdditiveModel m = fit_additive(y, X, K, args.j0, filter, spec, lambda1, out.lambda2, config,
                                       args.max_sweeps);
        out.intercept = m.intercept;
        for (std::size_t j = 0; j < p; ++j) {
            out.x_scales.emplace_back(covs[j].min, covs[j].max);
            out.coefficient_blocks.push_back(m.blocks[j].values);
        }
        out.iterations = m.sweeps_used;
        out.converged = converged = m.converged;
        out.objective = m.objective_trace.back();
        fitted = predict_additive(m, X);
    }

    {
        std::ofstream os(args.out_path);
        if (!os) {
            std::cerr << "error: cannot write '" << args.out_path << "'\n";
            return kExitBadInput;
        }
        save_model(out, os);
    }

    std::cout << "n = " << n << ", p = " << p << ", K = " << K << ", j0 = " << args.j0 << "\n";
    std::cout << "penalty = " << args.penalty_flag << ", lambda1 = " << lambda1
              << ", lambda2 = " << out.lambda2 << ", loss = " << args.loss_flag << "\n";
    std::cout << "iterations = " << out.iterations << ", converged = " << (converged ? "yes" : "no")
              << ", objective = " << out.objective << "\n";
    std::vector<std::string> active;
    for (std::size_t j = 0; j < p; ++j) {
        const auto& block = out.coefficient_blocks[j];
        if (std::any_of(block.begin(), block.end(), [](double v) { return v != 0.0; }))
            active.push_back(cov_names[j]);
    }
    std::cout << "active set (" << active.size() << "):";
    for (const auto& name : active) std::cout << ' ' << name;
    std::cout << "\n";
    if (logistic) {
        std::size_t correct = 0;
        for (std::size_t i = 0; i < n; ++i)
            if ((fitted[i] >= 0.0 ? 1.0 : -1.0) == y[i]) ++correct;
        std::cout << "training accuracy = " << static_cast<double>(correct) / static_cast<double>(n)
                  << "\n";
    } else {
        std::cout << "training mse = " << mean_squared_error(fitted, y) << "\n";
    }
    std::cout << "model written to " << args.out_path << "\n";

    if (args.strict && !converged) {
        std::cerr << "error: solver did not converge (--strict)\n";
        return kExitNoConvergence;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

struct PredictArgs {
    std::string model_path, data_path, out_path;
};

int run_predict(const PredictArgs& args) {
    ModelFile model;
    {
        std::ifstream is(args.model_path);
        if (!is) {
            std::cerr << "error: cannot open model '" << args.model_path << "'\n";
            return kExitBadInput;
        }
        try {
            model = load_model(is);
        } catch (const std::invalid_argument& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitDimension;
        } catch (const std::exception& e) {
            std::cerr << "error: malformed model file: " << e.what() << "\n";
            return kExitBadInput;
        }
    }

    const NumericCsv csv = read_csv_file(args.data_path);
    std::vector<std::vector<double>> columns;
    for (const std::string& name : model.covariate_names) {
        bool found = false;
        for (std::size_t c = 0; c < csv.header.size(); ++c) {
            if (csv.header[c] == name) {
                columns.push_back(csv.columns[c]);
                found = true;
                break;
            }
        }
        if (!found) {
            std::cerr << "error: covariate column '" << name << "' missing from input\n";
            return kExitDimension;
        }
    }

    bool clamped = false;
    for (std::size_t j = 0; j < columns.size() && !clamped; ++j)
        for (double v : columns[j])
            if (v < model.x_scales[j].first || v > model.x_scales[j].second) {
                clamped = true;
                break;
            }
    if (clamped)
        std::cerr << "warning: covariate values outside the training range were clamped\n";

    const std::vector<double> scores = predict_from_model_file(model, columns);

    std::ofstream os(args.out_path);
    if (!os) {
        std::cerr << "error: cannot write '" << args.out_path << "'\n";
        return kExitBadInput;
    }
    const bool logistic = model.loss == Loss::Logistic;
    os << (logistic ? "prediction,probability\n" : "prediction\n");
    char buf[64];
    for (double s : scores) {
        std::snprintf(buf, sizeof buf, "%.17g", s);
        os << buf;
        if (logistic) {
            std::snprintf(buf, sizeof buf, "%.17g", 1.0 / (1.0 + std::exp(-s)));
            os << ',' << buf;
        }
        os << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string study = "univariate";
    std::string function = "all";
    std::vector<std::size_t> n_list;
    double snr = -1.0;  // study-dependent default
    int replicates = -1;
    std::uint64_t seed = 0;
    std::string out_dir;
    int threads = 0;
};

std::vector<TestFunctionName> resolve_functions(const std::string& flag) {
    if (flag == "all")
        return {TestFunctionName::Polynomial,          TestFunctionName::Sine,
                TestFunctionName::PiecewisePolynomial, TestFunctionName::HeavySine,
                TestFunctionName::Bumps,               TestFunctionName::Doppler};
    return {parse_test_function(flag)};
}

void append_csv_body(std::ostream& os, const MseStudy& study) {
    std::ostringstream body;
    write_mse_csv(study, body);
    std::istringstream lines(body.str());
    std::string line;
    std::getline(lines, line);  // drop the per-study header
    while (std::getline(lines, line)) os << line << '\n';
}

int run_simulate(const SimulateArgs& raw) {
    SimulateArgs args = raw;
    if (args.threads <= 0) args.threads = std::max(1u, std::thread::hardware_concurrency());
    fs::create_directories(args.out_dir);
    const auto out_path = [&](const std::string& name) { return fs::path(args.out_dir) / name; };

    if (args.study == "univariate") {
        if (args.snr < 0) args.snr = 5.0;
        if (args.replicates < 0) args.replicates = 100;
        if (args.n_list.empty()) args.n_list = {64, 128, 256, 512};
        std::ofstream csv(out_path("univariate_mse.csv"));
        csv << "function,n,method,mean_mse,se_mse,ratio,se_ratio_x100\n";
        for (TestFunctionName f : resolve_functions(args.function)) {
            for (std::size_t n : args.n_list) {
                SimScenario scenario;
                scenario.function = f;
                scenario.n = n;
                scenario.snr = args.snr;
                scenario.replicates = args.replicates;
                scenario.seed = args.seed;
                std::vector<MethodConfig> methods;
                methods.push_back({"fullgrid", 0, PenaltyKind::PlainL1, 1.0, 0, WaveletFamily::Daub4});
                for (std::size_t k : {std::size_t{32}, std::size_t{64}})
                    if (k <= full_grid_k(n))
                        methods.push_back({"k" + std::to_string(k), k, PenaltyKind::PlainL1, 1.0, 0,
                                           WaveletFamily::Daub4});
                const MseStudy study = run_mse_study(scenario, methods, args.threads);
                write_mse_text(study, std::cout);
                append_csv_body(csv, study);
            }
        }
        std::cout << "wrote " << out_path("univariate_mse.csv").string() << "\n";
        return 0;
    }

    if (args.study == "k-effect") {
        if (args.snr < 0) args.snr = 5.0;
        if (args.replicates < 0) args.replicates = 100;
        if (args.n_list.empty()) args.n_list = {64, 128, 256, 512};
        if (args.function == "all") args.function = "heavysine";
        const std::vector<std::size_t> k_list = {16, 32, 64, 0};  // 0 = full grid
        const KStudy study = run_k_study(parse_test_function(args.function), args.n_list, k_list,
                                         args.snr, args.replicates, args.seed, args.threads);
        {
            std::ofstream csv(out_path("k_effect_mse.csv"));
            write_k_mse_csv(study, csv);
        }
        {
            // wall-clock measurements: varies between runs by nature
            std::ofstream csv(out_path("k_effect_time.csv"));
            write_k_time_csv(study, csv);
        }
        write_k_text(study, std::cout);
        std::cout << "wrote " << out_path("k_effect_mse.csv").string() << " and "
                  << out_path("k_effect_time.csv").string() << "\n";
        return 0;
    }

    if (args.study == "adaptive") {
        if (args.snr < 0) args.snr = 5.0;
        if (args.replicates < 0) args.replicates = 100;
        if (args.n_list.empty()) args.n_list = {128, 512};
        const std::vector<TestFunctionName> functions =
            args.function == "all"
                ? std::vector<TestFunctionName>{TestFunctionName::HeavySine, TestFunctionName::Sine}
                : resolve_functions(args.function);
        std::ofstream csv(out_path("adaptive_mse.csv"));
        csv << "function,n,method,mean_mse,se_mse,ratio,se_ratio_x100\n";
        for (TestFunctionName f : functions) {
            for (std::size_t n : args.n_list) {
                SimScenario scenario;
                scenario.function = f;
                scenario.n = n;
                scenario.snr = args.snr;
                scenario.replicates = args.replicates;
                scenario.seed = args.seed;
                std::vector<MethodConfig> methods;
                methods.push_back({"plain", 0, PenaltyKind::PlainL1, 1.0, 0, WaveletFamily::Daub4});
                methods.push_back(
                    {"adaptive", 0, PenaltyKind::AdaptiveLevel, 1.0, 2, WaveletFamily::Daub4});
                const MseStudy study = run_mse_study(scenario, methods, args.threads);
                write_mse_text(study, std::cout);
                append_csv_body(csv, study);
            }
        }
        std::cout << "wrote " << out_path("adaptive_mse.csv").string() << "\n";
        return 0;
    }

    // additive study: oracle-tuned lambda1 path, lambda2 = 0, p = 4 signals
    if (args.snr < 0) args.snr = 10.0;
    if (args.replicates < 0) args.replicates = 20;
    if (args.n_list.empty()) args.n_list = {64, 100, 256, 500, 512};
    std::ofstream csv(out_path("additive_mse.csv"));
    csv << "n,mean_mse,se_mse\n";
    const WaveletFilter filter = make_filter(WaveletFamily::Daub4);
    for (std::size_t n : args.n_list) {
        const std::size_t K = full_grid_k(n);
        const PenaltySpec spec = make_penalty(PenaltyKind::PlainL1, K, 0);
        std::vector<double> mses(static_cast<std::size_t>(args.replicates));
        detail::parallel_for(mses.size(), args.threads, [&](std::size_t rep) {
            const AdditiveSample s = generate_additive(
                n, 4, args.snr, detail::replicate_seed(args.seed, static_cast<int>(rep)));
            std::vector<double> truth(n, 0.0);
            for (const auto& comp : s.components)
                for (std::size_t i = 0; i < n; ++i) truth[i] += comp[i];
            double lam_max = 0.0;
            for (const auto& col : s.X) {
                const InterpolationMatrix Rj = build_linear_interp(col, K);
                lam_max = std::max(lam_max, lambda_max_univariate(s.y, Rj, filter, spec));
            }
            const LambdaGrid grid = make_lambda_grid(lam_max, 20);
            double best = std::numeric_limits<double>::infinity();
            for (double lam : grid.values) {
                const AdditiveModel m = fit_additive(s.y, s.X, K, 0, filter, spec, lam, 0.0);
                best = std::min(best, mean_squared_error(predict_additive(m, s.X), truth));
            }
            mses[rep] = best;
        });
        double mean, se;
        detail::mean_se(mses, mean, se);
        char buf[128];
        std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g\n", n, mean, se);
        csv << buf;
        std::cout << "additive n = " << n << ": mse " << mean << " (se " << se << ")\n";
    }
    std::cout << "wrote " << out_path("additive_mse.csv").string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"waveMesh: wavelet regression on irregularly spaced data"};
    app.require_subcommand(1);

    FitArgs fit_args;
    CLI::App* fit = app.add_subcommand("fit", "fit a model to CSV data");
    fit->add_option("--data", fit_args.data_path, "input CSV with header")->required();
    fit->add_option("--response", fit_args.response, "response column name")->required();
    fit->add_option("--out", fit_args.out_path, "output model file")->required();
    fit->add_option("--k", fit_args.k_flag, "mesh size: auto or a power of two");
    fit->add_option("--j0", fit_args.j0, "minimum resolution level");
    fit->add_option("--wavelet", fit_args.wavelet, "haar or db2..db10");
    fit->add_option("--penalty", fit_args.penalty_flag, "l1, adaptive or besov:<s>");
    fit->add_option("--lambda1", fit_args.lambda1, "l1 penalty level");
    fit->add_option("--lambda2", fit_args.lambda2, "group penalty level (additive fits)");
    fit->add_option("--loss", fit_args.loss_flag, "squared or logistic")
        ->check(CLI::IsMember({"squared", "logistic"}));
    fit->add_option("--cv", fit_args.cv, "select lambda1 by K-fold cross-validation (0 = off)");
    fit->add_option("--seed", fit_args.seed, "rng seed for fold assignment");
    fit->add_option("--max-sweeps", fit_args.max_sweeps, "outer sweep cap for additive fits");
    fit->add_flag("--strict", fit_args.strict, "exit 4 if the solver did not converge");

    PredictArgs predict_args;
    CLI::App* pred = app.add_subcommand("predict", "predict from a saved model");
    pred->add_option("--model", predict_args.model_path, "model file from fit")->required();
    pred->add_option("--data", predict_args.data_path, "input CSV with covariate columns")
        ->required();
    pred->add_option("--out", predict_args.out_path, "output CSV")->required();

    SimulateArgs sim_args;
    CLI::App* sim = app.add_subcommand("simulate", "run simulation studies");
    sim->add_option("--study", sim_args.study, "univariate, additive, k-effect or adaptive")
        ->check(CLI::IsMember({"univariate", "additive", "k-effect", "adaptive"}));
    sim->add_option("--function", sim_args.function,
                    "polynomial, sine, piecewise, heavysine, bumps, doppler or all");
    sim->add_option("--n", sim_args.n_list, "sample sizes");
    sim->add_option("--snr", sim_args.snr, "signal-to-noise ratio");
    sim->add_option("--replicates", sim_args.replicates, "replicates per cell");
    sim->add_option("--seed", sim_args.seed, "base rng seed");
    sim->add_option("--out-dir", sim_args.out_dir, "output directory")->required();
    sim->add_option("--threads", sim_args.threads, "worker threads (0 = hardware)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        app.exit(e);
        return kExitBadInput;
    }

    try {
        if (fit->parsed()) return run_fit(fit_args);
        if (pred->parsed()) return run_predict(predict_args);
        if (sim->parsed()) return run_simulate(sim_args);
    } catch (const CsvError& e) {
        std::cerr << "error: malformed CSV: " << e.what() << "\n";
        return kExitBadInput;
    } catch (const DimensionMismatch& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDimension;
    } catch (const OutOfDomain& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDimension;
    } catch (const InvalidLabels& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDimension;
    } catch (const InvalidLevel& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDimension;
    } catch (const TooFewObservations& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDimension;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadInput;
    }
    return 0;
}
