#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wavemesh/additive.hpp"
#include "wavemesh/errors.hpp"
#include "wavemesh/penalty.hpp"
#include "wavemesh/solver.hpp"

namespace wavemesh {

inline constexpr int kModelFormatVersion = 1;

/// On-disk model document. JSON text was chosen for diffability; doubles are
/// emitted with shortest round-trip precision, so load(save(m)) reproduces
/// predictions bit-exactly.
struct ModelFile {
    int format_version = kModelFormatVersion;
    Loss loss = Loss::Squared;
    std::string filter_name = "db4";
    std::size_t K = 0;
    int j0 = 0;
    PenaltyKind penalty = PenaltyKind::PlainL1;
    double besov_s = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double intercept = 0.0;
    std::vector<std::string> covariate_names;
    std::vector<std::pair<double, double>> x_scales;       // per covariate (min, max)
    std::vector<std::vector<double>> coefficient_blocks;   // per covariate, length K
    int iterations = 0;
    bool converged = false;
    double objective = 0.0;
};

namespace detail {

inline std::string penalty_kind_name(PenaltyKind k) {
    switch (k) {
        case PenaltyKind::PlainL1: return "l1";
        case PenaltyKind::AdaptiveLevel: return "adaptive";
        case PenaltyKind::BesovPs: return "besov";
    }
    return "?";
}

inline PenaltyKind parse_penalty_kind(const std::string& s) {
    if (s == "l1") return PenaltyKind::PlainL1;
    if (s == "adaptive") return PenaltyKind::AdaptiveLevel;
    if (s == "besov") return PenaltyKind::BesovPs;
    throw std::invalid_argument("unknown penalty kind '" + s + "'");
}

} // namespace detail

inline void save_model(const ModelFile& m, std::ostream& os) {
    nlohmann::json j;
    j["format_version"] = m.format_version;
    j["loss"] = m.loss == Loss::Squared ? "squared" : "logistic";
    j["filter"] = m.filter_name;
    j["k"] = m.K;
    j["j0"] = m.j0;
    j["penalty"] = {{"kind", detail::penalty_kind_name(m.penalty)}, {"s", m.besov_s}};
    j["lambda1"] = m.lambda1;
    j["lambda2"] = m.lambda2;
    j["intercept"] = m.intercept;
    nlohmann::json covs = nlohmann::json::array();
    for (std::size_t c = 0; c < m.covariate_names.size(); ++c) {
        covs.push_back({{"name", m.covariate_names[c]},
                        {"min", m.x_scales[c].first},
                        {"max", m.x_scales[c].second},
                        {"coefficients", m.coefficient_blocks[c]}});
    }
    j["covariates"] = std::move(covs);
    j["fit"] = {{"iterations", m.iterations}, {"converged", m.converged}, {"objective", m.objective}};
    os << j.dump(2) << '\n';
}

inline ModelFile load_model(std::istream& is) {
    nlohmann::json j = nlohmann::json::parse(is);
    ModelFile m;
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kModelFormatVersion)
        throw std::invalid_argument("unsupported model format_version " +
                                    std::to_string(m.format_version));
    const std::string loss = j.at("loss").get<std::string>();
    if (loss == "squared") m.loss = Loss::Squared;
    else if (loss == "logistic") m.loss = Loss::Logistic;
    else throw std::invalid_argument("unknown loss '" + loss + "'");
    m.filter_name = j.at("filter").get<std::string>();
    m.K = j.at("k").get<std::size_t>();
    m.j0 = j.at("j0").get<int>();
    m.penalty = detail::parse_penalty_kind(j.at("penalty").at("kind").get<std::string>());
    m.besov_s = j.at("penalty").at("s").get<double>();
    m.lambda1 = j.at("lambda1").get<double>();
    m.lambda2 = j.at("lambda2").get<double>();
    m.intercept = j.at("intercept").get<double>();
    for (const auto& cov : j.at("covariates")) {
        m.covariate_names.push_back(cov.at("name").get<std::string>());
        m.x_scales.emplace_back(cov.at("min").get<double>(), cov.at("max").get<double>());
        m.coefficient_blocks.push_back(cov.at("coefficients").get<std::vector<double>>());
    }
    m.iterations = j.at("fit").at("iterations").get<int>();
    m.converged = j.at("fit").at("converged").get<bool>();
    m.objective = j.at("fit").at("objective").get<double>();
    for (const auto& block : m.coefficient_blocks)
        if (block.size() != m.K) throw std::invalid_argument("coefficient block length != k");
    return m;
}

/// Decision values for new covariate columns (ordered as the model's
/// covariate list). For logistic models these are the scores whose
/// probabilities are 1/(1+exp(-score)).
inline std::vector<double> predict_from_model_file(const ModelFile& m,
                                                   const std::vector<std::vector<double>>& columns) {
    if (columns.size() != m.coefficient_blocks.size())
        throw DimensionMismatch("predict: covariate count differs from the model");
    AdditiveModel model;
    model.filter = make_filter(m.filter_name);
    model.K = m.K;
    model.j0 = m.j0;
    model.intercept = m.intercept;
    model.x_scales = m.x_scales;
    for (const auto& block : m.coefficient_blocks)
        model.blocks.push_back(CoefficientVector{block, m.j0});
    return predict_additive(model, columns);
}

} // namespace wavemesh
