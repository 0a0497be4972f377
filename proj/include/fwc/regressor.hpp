#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fwc/features.hpp"
#include "fwc/gbt.hpp"
#include "fwc/raster_io.hpp"
#include "fwc/kernel_ridge.hpp"
#include "fwc/random_forest.hpp"
#include "fwc/rng.hpp"
#include "fwc/svr.hpp"

namespace fwc {

enum class Algorithm { rf, svr, kr, gbt };

inline const char* algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::rf: return "rf";
        case Algorithm::svr: return "svr";
        case Algorithm::kr: return "kr";
        default: return "gbt";
    }
}

inline Algorithm algorithm_from_name(const std::string& name) {
    if (name == "rf") return Algorithm::rf;
    if (name == "svr" || name == "svm") return Algorithm::svr;
    if (name == "kr") return Algorithm::kr;
    if (name == "gbt" || name == "xgb") return Algorithm::gbt;
    throw DataError("unknown algorithm: " + name + " (expected rf|svr|kr|gbt)");
}

struct RegressorSpec {
    Algorithm algorithm = Algorithm::kr;
    RfSpec rf;
    SvrSpec svr;
    KrSpec kr;
    GbtSpec gbt;

    void validate() const {
        switch (algorithm) {
            case Algorithm::rf: rf.validate(); break;
            case Algorithm::svr: svr.validate(); break;
            case Algorithm::kr: kr.validate(); break;
            case Algorithm::gbt: gbt.validate(); break;
        }
    }

    // Grid-search hook: set one hyperparameter of the active algorithm.
    void set_param(const std::string& name, double value) {
        switch (algorithm) {
            case Algorithm::rf:
                if (name == "n_trees") rf.n_trees = static_cast<int32_t>(value);
                else if (name == "max_depth") rf.max_depth = static_cast<int32_t>(value);
                else if (name == "min_leaf") rf.min_leaf = static_cast<int32_t>(value);
                else if (name == "mtry") rf.mtry = static_cast<int32_t>(value);
                else if (name == "bootstrap") rf.bootstrap = value != 0.0;
                else throw DataError("rf has no tunable parameter '" + name + "'");
                return;
            case Algorithm::svr:
                if (name == "C") svr.cost = value;
                else if (name == "epsilon") svr.epsilon = value;
                else if (name == "gamma") svr.gamma = value;
                else if (name == "tol") svr.tol = value;
                else if (name == "max_iter") svr.max_iter = static_cast<int64_t>(value);
                else throw DataError("svr has no tunable parameter '" + name + "'");
                return;
            case Algorithm::kr:
                if (name == "alpha") kr.alpha = value;
                else if (name == "gamma") kr.gamma = value;
                else throw DataError("kr has no tunable parameter '" + name + "'");
                return;
            case Algorithm::gbt:
                if (name == "n_rounds") gbt.n_rounds = static_cast<int32_t>(value);
                else if (name == "learning_rate") gbt.learning_rate = value;
                else if (name == "max_depth") gbt.max_depth = static_cast<int32_t>(value);
                else if (name == "lambda") gbt.lambda = value;
                else if (name == "gamma_split") gbt.gamma_split = value;
                else if (name == "min_child_weight") gbt.min_child_weight = value;
                else throw DataError("gbt has no tunable parameter '" + name + "'");
                return;
        }
    }
};

struct GridSearchConfig {
    int folds = 5;
    std::uint64_t seed = 0;
    // parameter name -> candidate values; the grid is their cartesian product
    std::vector<std::pair<std::string, std::vector<double>>> values;

    bool empty() const { return values.empty(); }
};

// A trained regressor: the fitted state of one of the four algorithms, keyed
// to the training feature names. Kernel methods carry their standardization.
struct RegressorModel {
    RegressorSpec spec;
    std::vector<std::string> feature_names;
    std::string target_class;
    std::optional<StandardizationParams> standardization;
    std::variant<KrModel, SvrModel, RfModel, GbtModel> state;
    std::map<std::string, double> grid_chosen; // present after a grid search

    // Prediction accepts any column order carrying the same feature-name
    // set; anything else is refused.
    std::vector<double> predict(const std::vector<std::vector<double>>& rows,
                                const std::vector<std::string>& names, int workers = 1) const {
        std::vector<std::vector<double>> aligned;
        const std::vector<std::vector<double>>* input = &rows;
        if (names != feature_names) {
            std::map<std::string, size_t> position;
            for (size_t j = 0; j < names.size(); ++j) position[names[j]] = j;
            if (position.size() != names.size())
                throw DataError("predict: duplicate feature names");
            std::vector<size_t> perm;
            for (const auto& want : feature_names) {
                const auto it = position.find(want);
                if (it == position.end())
                    throw DataError("predict: feature names differ from training (missing '" + want +
                                    "')");
                perm.push_back(it->second);
            }
            if (names.size() != feature_names.size())
                throw DataError("predict: feature names differ from training (extra columns)");
            aligned.reserve(rows.size());
            for (const auto& r : rows) {
                std::vector<double> row(perm.size());
                for (size_t j = 0; j < perm.size(); ++j) row[j] = r[perm[j]];
                aligned.push_back(std::move(row));
            }
            input = &aligned;
        }
        if (!rows.empty() && (*input)[0].size() != feature_names.size())
            throw DataError("predict: row width differs from training feature count");

        if (standardization) {
            const auto transformed = apply_standardization(*standardization, *input);
            return predict_raw(transformed, workers);
        }
        return predict_raw(*input, workers);
    }

    std::vector<double> predict_raw(const std::vector<std::vector<double>>& rows, int workers) const {
        if (const auto* m = std::get_if<KrModel>(&state)) return predict_kr(*m, rows, workers);
        if (const auto* m = std::get_if<SvrModel>(&state)) return predict_svr(*m, rows, workers);
        if (const auto* m = std::get_if<RfModel>(&state)) return predict_rf(*m, rows, workers);
        return predict_gbt(std::get<GbtModel>(state), rows, workers);
    }
};

// Train one regressor on the given rows. Kernel methods are standardized
// (fit on these rows only); tree ensembles consume raw features.
inline RegressorModel train_regressor(const std::vector<std::vector<double>>& rows,
                                      const std::vector<double>& targets,
                                      const std::vector<std::string>& feature_names,
                                      const RegressorSpec& spec, int workers = 1,
                                      SvrFitInfo* svr_info = nullptr) {
    spec.validate();
    if (rows.empty() || rows.size() != targets.size())
        throw DataError("train_regressor: bad training data shape");

    RegressorModel model;
    model.spec = spec;
    model.feature_names = feature_names;

    if (spec.algorithm == Algorithm::kr || spec.algorithm == Algorithm::svr) {
        std::vector<size_t> all(rows.size());
        for (size_t i = 0; i < all.size(); ++i) all[i] = i;
        model.standardization = fit_standardization(rows, feature_names, all);
        const auto transformed = apply_standardization(*model.standardization, rows);
        if (spec.algorithm == Algorithm::kr)
            model.state = train_kr(transformed, targets, spec.kr, workers);
        else
            model.state = train_svr(transformed, targets, spec.svr, workers, svr_info);
    } else if (spec.algorithm == Algorithm::rf) {
        model.state = train_rf(rows, targets, spec.rf, workers);
    } else {
        model.state = train_gbt(rows, targets, spec.gbt, workers);
    }
    return model;
}

inline RegressorModel train_regressor(const FeatureTable& table, const RegressorSpec& spec,
                                      int workers = 1) {
    auto model = train_regressor(table.rows, table.targets, table.feature_names, spec, workers);
    model.target_class = table.target_class;
    return model;
}

namespace detail {

inline double rmse_of(const std::vector<double>& y, const std::vector<double>& yhat) {
    double ss = 0.0;
    for (size_t i = 0; i < y.size(); ++i) ss += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    return std::sqrt(ss / static_cast<double>(y.size()));
}

// k contiguous folds of a seeded shuffle.
inline std::vector<std::vector<size_t>> make_folds(size_t n, int k, std::uint64_t seed) {
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);
    std::vector<std::vector<size_t>> folds(static_cast<size_t>(k));
    const size_t base = n / static_cast<size_t>(k);
    const size_t extra = n % static_cast<size_t>(k);
    size_t at = 0;
    for (size_t f = 0; f < static_cast<size_t>(k); ++f) {
        const size_t len = base + (f < extra ? 1 : 0);
        folds[f].assign(order.begin() + static_cast<long>(at), order.begin() + static_cast<long>(at + len));
        at += len;
    }
    return folds;
}

} // namespace detail

// Expand the cartesian product of the grid and pick the combination with the
// lowest k-fold CV RMSE (ties keep the earliest combination), then refit on
// all rows. Without a grid this is plain training.
inline RegressorModel train_with_grid(const FeatureTable& table, RegressorSpec spec,
                                      const GridSearchConfig& grid, int workers = 1) {
    if (grid.empty()) return train_regressor(table, spec, workers);
    if (grid.folds < 2) throw DataError("grid search: folds must be >= 2");
    if (table.rows.size() < static_cast<size_t>(grid.folds))
        throw DataError("grid search: fewer rows than folds");

    std::vector<std::map<std::string, double>> combos(1);
    for (const auto& [name, candidates] : grid.values) {
        if (candidates.empty()) throw DataError("grid search: empty candidate list for " + name);
        std::vector<std::map<std::string, double>> expanded;
        for (const auto& combo : combos)
            for (const double v : candidates) {
                auto next = combo;
                next[name] = v;
                expanded.push_back(std::move(next));
            }
        combos = std::move(expanded);
    }

    const auto folds = detail::make_folds(table.rows.size(), grid.folds, grid.seed);
    double best_rmse = 0.0;
    size_t best_combo = 0;
    for (size_t ci = 0; ci < combos.size(); ++ci) {
        RegressorSpec candidate = spec;
        for (const auto& [name, v] : combos[ci]) candidate.set_param(name, v);

        double rmse_sum = 0.0;
        for (const auto& fold : folds) {
            std::vector<std::uint8_t> in_fold(table.rows.size(), 0);
            for (const size_t i : fold) in_fold[i] = 1;
            std::vector<std::vector<double>> train_x, test_x;
            std::vector<double> train_y, test_y;
            for (size_t i = 0; i < table.rows.size(); ++i) {
                if (in_fold[i]) {
                    test_x.push_back(table.rows[i]);
                    test_y.push_back(table.targets[i]);
                } else {
                    train_x.push_back(table.rows[i]);
                    train_y.push_back(table.targets[i]);
                }
            }
            const auto model =
                train_regressor(train_x, train_y, table.feature_names, candidate, workers);
            rmse_sum += detail::rmse_of(test_y, model.predict(test_x, table.feature_names, workers));
        }
        const double cv_rmse = rmse_sum / static_cast<double>(folds.size());
        if (ci == 0 || cv_rmse < best_rmse) {
            best_rmse = cv_rmse;
            best_combo = ci;
        }
    }

    for (const auto& [name, v] : combos[best_combo]) spec.set_param(name, v);
    auto model = train_regressor(table, spec, workers);
    model.grid_chosen = combos[best_combo];
    return model;
}

// ---------------------------------------------------------------------------
// FWC map production
// ---------------------------------------------------------------------------

struct PredictMapResult {
    Raster<float> map;
    int64_t clipped = 0;      // raw predictions outside [0,1]
    int64_t predicted = 0;    // valid cells
};

// Predict the target fraction for every valid cell of the scene, clipping to
// [0,1]. The per-cell feature vector is the hyperspectral bands followed by
// the STM bands, exactly as build_features assembles tables; the model
// refuses mismatched feature names.
inline PredictMapResult predict_map(const RegressorModel& model, const Raster<float>& enmap,
                                    const Raster<float>* stm, int workers = 1) {
    enmap.validate();
    if (stm) {
        stm->validate();
        if (stm->geometry != enmap.geometry)
            throw DataError("predict_map: STM cube not on the hyperspectral geometry");
    }
    std::vector<std::string> names = enmap.band_names;
    if (stm) names.insert(names.end(), stm->band_names.begin(), stm->band_names.end());

    const int64_t cells = enmap.n_cells();
    std::vector<int64_t> cell_of;
    std::vector<std::vector<double>> rows;
    for (int64_t c = 0; c < cells; ++c) {
        if (!enmap.valid_mask[static_cast<size_t>(c)] || (stm && !stm->valid_mask[static_cast<size_t>(c)]))
            continue;
        std::vector<double> row;
        row.reserve(names.size());
        for (int64_t b = 0; b < enmap.n_bands; ++b)
            row.push_back(enmap.values[static_cast<size_t>(b * cells + c)]);
        if (stm)
            for (int64_t b = 0; b < stm->n_bands; ++b)
                row.push_back(stm->values[static_cast<size_t>(b * cells + c)]);
        rows.push_back(std::move(row));
        cell_of.push_back(c);
    }

    const auto predictions = model.predict(rows, names, workers);

    PredictMapResult result;
    const std::string band = model.target_class.empty() ? "fwc" : "fwc_" + model.target_class;
    result.map = Raster<float>(enmap.geometry, 1, {band});
    for (auto& m : result.map.valid_mask) m = 0;
    for (size_t i = 0; i < predictions.size(); ++i) {
        double v = predictions[i];
        if (v < 0.0 || v > 1.0) {
            result.clipped++;
            v = std::clamp(v, 0.0, 1.0);
        }
        result.map.valid_mask[static_cast<size_t>(cell_of[i])] = 1;
        result.map.values[static_cast<size_t>(cell_of[i])] = static_cast<float>(v);
    }
    result.predicted = static_cast<int64_t>(predictions.size());
    result.map.burn_nodata();
    return result;
}

// ---------------------------------------------------------------------------
// model (de)serialization — versioned JSON
// ---------------------------------------------------------------------------

namespace detail {

constexpr int kModelVersion = 1;
constexpr const char* kModelFormat = "fwcmap-model";

inline nlohmann::ordered_json tree_to_json(const Tree& tree) {
    nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
    for (const auto& n : tree.nodes)
        nodes.push_back({n.feature, n.threshold, n.value, n.left, n.right});
    return nodes;
}

inline Tree tree_from_json(const nlohmann::json& j) {
    Tree tree;
    for (const auto& n : j) {
        TreeNode node;
        node.feature = n.at(0).get<int32_t>();
        node.threshold = n.at(1).get<double>();
        node.value = n.at(2).get<double>();
        node.left = n.at(3).get<int32_t>();
        node.right = n.at(4).get<int32_t>();
        tree.nodes.push_back(node);
    }
    return tree;
}

inline nlohmann::ordered_json rows_to_json(const std::vector<std::vector<double>>& rows) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& r : rows) out.push_back(r);
    return out;
}

inline std::vector<std::vector<double>> rows_from_json(const nlohmann::json& j) {
    std::vector<std::vector<double>> rows;
    for (const auto& r : j) rows.push_back(r.get<std::vector<double>>());
    return rows;
}

} // namespace detail

inline void save_model(const RegressorModel& model, const std::string& path) {
    nlohmann::ordered_json j;
    j["format"] = detail::kModelFormat;
    j["version"] = detail::kModelVersion;
    j["algorithm"] = algorithm_name(model.spec.algorithm);
    j["feature_names"] = model.feature_names;
    j["target_class"] = model.target_class;

    nlohmann::ordered_json spec;
    switch (model.spec.algorithm) {
        case Algorithm::rf:
            spec = {{"n_trees", model.spec.rf.n_trees},   {"max_depth", model.spec.rf.max_depth},
                    {"min_leaf", model.spec.rf.min_leaf}, {"mtry", model.spec.rf.mtry},
                    {"bootstrap", model.spec.rf.bootstrap}, {"seed", model.spec.rf.seed}};
            break;
        case Algorithm::svr:
            spec = {{"C", model.spec.svr.cost},   {"epsilon", model.spec.svr.epsilon},
                    {"gamma", model.spec.svr.gamma}, {"tol", model.spec.svr.tol},
                    {"max_iter", model.spec.svr.max_iter},
                    {"kernel", kernel_name(model.spec.svr.kernel)}};
            break;
        case Algorithm::kr:
            spec = {{"alpha", model.spec.kr.alpha},
                    {"gamma", model.spec.kr.gamma},
                    {"kernel", kernel_name(model.spec.kr.kernel)}};
            break;
        case Algorithm::gbt:
            spec = {{"n_rounds", model.spec.gbt.n_rounds},
                    {"learning_rate", model.spec.gbt.learning_rate},
                    {"max_depth", model.spec.gbt.max_depth},
                    {"lambda", model.spec.gbt.lambda},
                    {"gamma_split", model.spec.gbt.gamma_split},
                    {"min_child_weight", model.spec.gbt.min_child_weight},
                    {"seed", model.spec.gbt.seed}};
            break;
    }
    j["spec"] = std::move(spec);

    if (model.standardization) {
        j["standardization"] = {{"mean", model.standardization->mean},
                                {"std_dev", model.standardization->std_dev},
                                {"kept_indices", model.standardization->kept_indices},
                                {"removed_features", model.standardization->removed_features}};
    } else {
        j["standardization"] = nullptr;
    }
    if (!model.grid_chosen.empty()) j["grid_chosen"] = model.grid_chosen;

    nlohmann::ordered_json state;
    if (const auto* m = std::get_if<KrModel>(&model.state)) {
        state["support"] = detail::rows_to_json(m->support);
        state["coef"] = m->coef;
        state["gamma"] = m->gamma;
        state["kernel"] = kernel_name(m->kernel);
        state["jitter_used"] = m->jitter_used;
        state["residual_norm"] = m->residual_norm;
    } else if (const auto* m = std::get_if<SvrModel>(&model.state)) {
        state["support"] = detail::rows_to_json(m->support);
        state["beta"] = m->support_beta;
        state["bias"] = m->bias;
        state["gamma"] = m->gamma;
        state["kernel"] = kernel_name(m->kernel);
        state["converged"] = m->converged;
        state["iterations"] = m->iterations;
    } else if (const auto* m = std::get_if<RfModel>(&model.state)) {
        nlohmann::ordered_json trees = nlohmann::ordered_json::array();
        for (const auto& t : m->trees) trees.push_back(detail::tree_to_json(t));
        state["trees"] = std::move(trees);
    } else {
        const auto& gm = std::get<GbtModel>(model.state);
        state["base_score"] = gm.base_score;
        state["learning_rate"] = gm.learning_rate;
        nlohmann::ordered_json trees = nlohmann::ordered_json::array();
        for (const auto& t : gm.trees) trees.push_back(detail::tree_to_json(t));
        state["trees"] = std::move(trees);
        state["training_loss"] = gm.training_loss;
    }
    j["state"] = std::move(state);

    detail::write_file_atomic(path, j.dump(2) + "\n");
}

inline RegressorModel load_model(const std::string& path) {
    nlohmann::json j;
    try {
        std::ifstream f(path);
        if (!f) throw DataError("cannot open: " + path);
        j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(strf("unparseable model %s: %s", path.c_str(), e.what()));
    }
    try {
        if (j.at("format").get<std::string>() != detail::kModelFormat)
            throw DataError("not a model file: " + path);
        if (j.at("version").get<int>() != detail::kModelVersion)
            throw DataError(strf("model %s has version %d, this build reads version %d", path.c_str(),
                                 j.at("version").get<int>(), detail::kModelVersion));

        RegressorModel model;
        model.spec.algorithm = algorithm_from_name(j.at("algorithm").get<std::string>());
        model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        model.target_class = j.value("target_class", "");

        const auto& spec = j.at("spec");
        switch (model.spec.algorithm) {
            case Algorithm::rf:
                model.spec.rf.n_trees = spec.at("n_trees").get<int32_t>();
                model.spec.rf.max_depth = spec.at("max_depth").get<int32_t>();
                model.spec.rf.min_leaf = spec.at("min_leaf").get<int32_t>();
                model.spec.rf.mtry = spec.at("mtry").get<int32_t>();
                model.spec.rf.bootstrap = spec.at("bootstrap").get<bool>();
                model.spec.rf.seed = spec.at("seed").get<std::uint64_t>();
                break;
            case Algorithm::svr:
                model.spec.svr.cost = spec.at("C").get<double>();
                model.spec.svr.epsilon = spec.at("epsilon").get<double>();
                model.spec.svr.gamma = spec.at("gamma").get<double>();
                model.spec.svr.tol = spec.at("tol").get<double>();
                model.spec.svr.max_iter = spec.at("max_iter").get<int64_t>();
                model.spec.svr.kernel = kernel_from_name(spec.at("kernel").get<std::string>());
                break;
            case Algorithm::kr:
                model.spec.kr.alpha = spec.at("alpha").get<double>();
                model.spec.kr.gamma = spec.at("gamma").get<double>();
                model.spec.kr.kernel = kernel_from_name(spec.at("kernel").get<std::string>());
                break;
            case Algorithm::gbt:
                model.spec.gbt.n_rounds = spec.at("n_rounds").get<int32_t>();
                model.spec.gbt.learning_rate = spec.at("learning_rate").get<double>();
                model.spec.gbt.max_depth = spec.at("max_depth").get<int32_t>();
                model.spec.gbt.lambda = spec.at("lambda").get<double>();
                model.spec.gbt.gamma_split = spec.at("gamma_split").get<double>();
                model.spec.gbt.min_child_weight = spec.at("min_child_weight").get<double>();
                model.spec.gbt.seed = spec.at("seed").get<std::uint64_t>();
                break;
        }

        if (!j.at("standardization").is_null()) {
            StandardizationParams params;
            const auto& s = j.at("standardization");
            params.mean = s.at("mean").get<std::vector<double>>();
            params.std_dev = s.at("std_dev").get<std::vector<double>>();
            params.kept_indices = s.at("kept_indices").get<std::vector<size_t>>();
            params.removed_features = s.at("removed_features").get<std::vector<std::string>>();
            model.standardization = std::move(params);
        }
        if (j.contains("grid_chosen"))
            model.grid_chosen = j.at("grid_chosen").get<std::map<std::string, double>>();

        const auto& state = j.at("state");
        switch (model.spec.algorithm) {
            case Algorithm::kr: {
                KrModel m;
                m.support = detail::rows_from_json(state.at("support"));
                m.coef = state.at("coef").get<std::vector<double>>();
                m.gamma = state.at("gamma").get<double>();
                m.kernel = kernel_from_name(state.at("kernel").get<std::string>());
                m.jitter_used = state.at("jitter_used").get<double>();
                m.residual_norm = state.at("residual_norm").get<double>();
                model.state = std::move(m);
                break;
            }
            case Algorithm::svr: {
                SvrModel m;
                m.support = detail::rows_from_json(state.at("support"));
                m.support_beta = state.at("beta").get<std::vector<double>>();
                m.bias = state.at("bias").get<double>();
                m.gamma = state.at("gamma").get<double>();
                m.kernel = kernel_from_name(state.at("kernel").get<std::string>());
                m.converged = state.at("converged").get<bool>();
                m.iterations = state.at("iterations").get<int64_t>();
                model.state = std::move(m);
                break;
            }
            case Algorithm::rf: {
                RfModel m;
                for (const auto& t : state.at("trees")) m.trees.push_back(detail::tree_from_json(t));
                model.state = std::move(m);
                break;
            }
            case Algorithm::gbt: {
                GbtModel m;
                m.base_score = state.at("base_score").get<double>();
                m.learning_rate = state.at("learning_rate").get<double>();
                for (const auto& t : state.at("trees")) m.trees.push_back(detail::tree_from_json(t));
                if (state.contains("training_loss"))
                    m.training_loss = state.at("training_loss").get<std::vector<double>>();
                model.state = std::move(m);
                break;
            }
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(strf("model %s missing or mistyped fields: %s", path.c_str(), e.what()));
    }
}

} // namespace fwc
