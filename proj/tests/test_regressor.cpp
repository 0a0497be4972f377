#include <gtest/gtest.h>

#include <filesystem>

#include "fwc/regressor.hpp"
#include "fwc/rng.hpp"

using namespace fwc;

namespace {

FeatureTable random_table(Rng& rng, size_t n, size_t p) {
    FeatureTable table;
    for (size_t j = 0; j < p; ++j) table.feature_names.push_back(strf("f%02zu", j));
    for (size_t i = 0; i < n; ++i) {
        std::vector<double> row(p);
        for (auto& v : row) v = rng.uniform(-1, 1);
        double target = 0.3 + 0.2 * row[0] - 0.15 * row[p - 1] + 0.02 * rng.normal();
        table.targets.push_back(std::clamp(target, 0.0, 1.0));
        table.rows.push_back(std::move(row));
        table.cells.emplace_back(0, static_cast<int64_t>(i));
        table.sample_indices.push_back(i);
    }
    table.target_class = "Senegalia mellifera";
    table.experiment_tag = "EnM";
    return table;
}

RegressorSpec spec_for(Algorithm algo) {
    RegressorSpec spec;
    spec.algorithm = algo;
    spec.rf.n_trees = 15;
    spec.rf.seed = 3;
    spec.gbt.n_rounds = 25;
    return spec;
}

const Algorithm kAll[] = {Algorithm::rf, Algorithm::svr, Algorithm::kr, Algorithm::gbt};

} // namespace

TEST(TrainDispatch, GridOfSizeOneEqualsDirectTraining) {
    Rng rng(21);
    const auto table = random_table(rng, 40, 5);
    RegressorSpec spec = spec_for(Algorithm::kr);

    GridSearchConfig grid;
    grid.values = {{"alpha", {1e-3}}};
    grid.seed = 7;
    const auto direct = train_regressor(table, spec);
    spec.kr.alpha = 1e-3;
    const auto via_grid = train_with_grid(table, spec, grid);
    EXPECT_EQ(direct.predict(table.rows, table.feature_names),
              via_grid.predict(table.rows, table.feature_names));
}

TEST(TrainDispatch, DegenerateSingleXValueGivesMeanPredictor) {
    FeatureTable table;
    table.feature_names = {"a", "b"};
    for (int i = 0; i < 10; ++i) {
        table.rows.push_back({2.0, -1.0}); // one distinct x
        table.targets.push_back(0.1 * i);  // mean 0.45
        table.cells.emplace_back(0, i);
        table.sample_indices.push_back(static_cast<size_t>(i));
    }
    const double mean = 0.45;
    for (const auto algo : kAll) {
        RegressorSpec spec = spec_for(algo);
        spec.rf.bootstrap = false; // exact mean leaf
        spec.svr.epsilon = 0.05;
        const auto model = train_regressor(table, spec);
        const auto yhat = model.predict({{2.0, -1.0}}, table.feature_names);
        const double tolerance = algo == Algorithm::svr ? 0.05 + 1e-9
                                 : algo == Algorithm::kr ? 1e-3
                                                         : 1e-12;
        EXPECT_NEAR(yhat[0], mean, tolerance) << algorithm_name(algo);
    }
}

TEST(TrainDispatch, GridSearchAgreesWithExternalCvLoop) {
    Rng rng(22);
    const auto table = random_table(rng, 50, 4);
    const std::vector<double> alphas = {1e-4, 10.0};

    RegressorSpec spec = spec_for(Algorithm::kr);
    GridSearchConfig grid;
    grid.values = {{"alpha", alphas}};
    grid.folds = 5;
    grid.seed = 11;
    const auto model = train_with_grid(table, spec, grid);
    ASSERT_EQ(model.grid_chosen.size(), 1u);
    const double chosen = model.grid_chosen.at("alpha");

    // external loop: same folds, direct training, pick lower CV RMSE
    const auto folds = detail::make_folds(table.rows.size(), grid.folds, grid.seed);
    double best = 1e300, best_alpha = 0.0;
    for (const double alpha : alphas) {
        RegressorSpec candidate = spec;
        candidate.kr.alpha = alpha;
        double total = 0.0;
        for (size_t f = 0; f < folds.size(); ++f) {
            std::vector<std::vector<double>> train_x, test_x;
            std::vector<double> train_y, test_y;
            std::vector<std::uint8_t> in_fold(table.rows.size(), 0);
            for (const size_t i : folds[f]) in_fold[i] = 1;
            for (size_t i = 0; i < table.rows.size(); ++i) {
                if (in_fold[i]) {
                    test_x.push_back(table.rows[i]);
                    test_y.push_back(table.targets[i]);
                } else {
                    train_x.push_back(table.rows[i]);
                    train_y.push_back(table.targets[i]);
                }
            }
            const auto m = train_regressor(train_x, train_y, table.feature_names, candidate);
            const auto yhat = m.predict(test_x, table.feature_names);
            double ss = 0.0;
            for (size_t i = 0; i < test_y.size(); ++i)
                ss += (test_y[i] - yhat[i]) * (test_y[i] - yhat[i]);
            total += std::sqrt(ss / static_cast<double>(test_y.size()));
        }
        const double cv_rmse = total / static_cast<double>(folds.size());
        if (cv_rmse < best) {
            best = cv_rmse;
            best_alpha = alpha;
        }
    }
    EXPECT_EQ(chosen, best_alpha);
}

TEST(RegressorModel, InvariantToConsistentFeaturePermutation) {
    Rng rng(23);
    const auto table = random_table(rng, 35, 6);
    // reversed column order with matching names
    std::vector<std::string> reversed_names(table.feature_names.rbegin(), table.feature_names.rend());
    std::vector<std::vector<double>> reversed_rows;
    for (const auto& r : table.rows) reversed_rows.emplace_back(r.rbegin(), r.rend());

    for (const auto algo : kAll) {
        const auto model = train_regressor(table, spec_for(algo));
        const auto direct = model.predict(table.rows, table.feature_names);
        const auto permuted = model.predict(reversed_rows, reversed_names);
        ASSERT_EQ(direct.size(), permuted.size());
        for (size_t i = 0; i < direct.size(); ++i)
            EXPECT_EQ(direct[i], permuted[i]) << algorithm_name(algo);
    }
}

TEST(RegressorModel, RefusesMismatchedFeatureNames) {
    Rng rng(24);
    const auto table = random_table(rng, 20, 3);
    const auto model = train_regressor(table, spec_for(Algorithm::kr));
    auto wrong_names = table.feature_names;
    wrong_names[1] = "not_a_training_feature";
    EXPECT_THROW(model.predict(table.rows, wrong_names), DataError);
}

TEST(RegressorModel, JsonRoundTripPreservesPredictions) {
    Rng rng(25);
    const auto table = random_table(rng, 30, 4);
    const auto dir = std::filesystem::temp_directory_path() / "fwc_test_regressor";
    std::filesystem::create_directories(dir);

    for (const auto algo : kAll) {
        const auto model = train_regressor(table, spec_for(algo));
        const auto path = (dir / (std::string("model_") + algorithm_name(algo) + ".json")).string();
        save_model(model, path);
        const auto loaded = load_model(path);
        EXPECT_EQ(loaded.feature_names, model.feature_names);
        EXPECT_EQ(loaded.target_class, model.target_class);
        EXPECT_EQ(loaded.state, model.state) << algorithm_name(algo);
        EXPECT_EQ(loaded.predict(table.rows, table.feature_names),
                  model.predict(table.rows, table.feature_names));
    }
}

TEST(RegressorModel, RefusesMismatchedVersion) {
    Rng rng(26);
    const auto table = random_table(rng, 10, 2);
    const auto model = train_regressor(table, spec_for(Algorithm::kr));
    const auto dir = std::filesystem::temp_directory_path() / "fwc_test_regressor";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "versioned.json").string();
    save_model(model, path);

    auto j = nlohmann::json::parse(std::ifstream(path));
    j["version"] = 999;
    std::ofstream(path) << j.dump();
    EXPECT_THROW(load_model(path), DataError);
}

TEST(PredictMap, MatchesTablePredictionsAtSampleCells) {
    Rng rng(27);
    GridGeometry coarse{0.0, 0.0, 30.0, 30.0, 6, 6};
    std::vector<std::string> names;
    for (int b = 0; b < 5; ++b) names.push_back(strf("B%03d", b + 1));
    Raster<float> enmap(coarse, 5, names);
    for (auto& v : enmap.values) v = static_cast<float>(rng.uniform(0, 0.6));
    enmap.set_invalid(2, 3);

    FractionSampleSet samples;
    samples.coarse_geometry = coarse;
    for (const auto& e : default_legend().entries) samples.class_names.push_back(e.class_name);
    for (int64_t r = 0; r < 6; ++r)
        for (int64_t c = 0; c < 6; ++c) {
            FractionSample s;
            s.coarse_row = r;
            s.coarse_col = c;
            s.fractions = {0.2, 0.1, 0.05, 0.4, 0.25, 0.0};
            s.fractions[0] = rng.uniform(0, 0.3);
            s.fractions[3] = 1.0 - s.fractions[0] - 0.1 - 0.05 - 0.25 - 0.0;
            s.valid_fine_count = s.total_fine_count = 225;
            samples.samples.push_back(s);
        }

    const auto table = build_features(samples, enmap, nullptr, "Grewia flava");
    const auto model = train_regressor(table, spec_for(Algorithm::kr));
    const auto result = predict_map(model, enmap, nullptr);

    EXPECT_FALSE(result.map.valid(2, 3)); // nodata propagates
    EXPECT_EQ(result.predicted, 35);

    const auto table_pred = model.predict(table.rows, table.feature_names);
    for (size_t i = 0; i < table.rows.size(); ++i) {
        const auto [r, c] = table.cells[i];
        const float expected = static_cast<float>(std::clamp(table_pred[i], 0.0, 1.0));
        EXPECT_NEAR(result.map.at(0, r, c), expected, 1e-9);
    }
}

TEST(PredictMap, ClipsOutOfRangePredictionsAndCounts) {
    GridGeometry geom{0.0, 0.0, 30.0, 30.0, 1, 3};
    Raster<float> enmap(geom, 1, {"B001"});
    enmap.values = {0.0f, 10.0f, 5.0f};

    // hand-built kernel model: -0.03 at cell value 0, +1.10 at cell value 10
    RegressorModel model;
    model.spec.algorithm = Algorithm::kr;
    model.feature_names = {"B001"};
    KrModel kr;
    kr.kernel = KernelType::rbf;
    kr.gamma = 1.0;
    kr.support = {{0.0}, {10.0}};
    kr.coef = {-0.03, 1.10};
    model.state = kr;

    const auto result = predict_map(model, enmap, nullptr);
    EXPECT_EQ(result.clipped, 2);
    EXPECT_FLOAT_EQ(result.map.at(0, 0, 0), 0.0f); // -0.03 clipped up
    EXPECT_FLOAT_EQ(result.map.at(0, 0, 1), 1.0f); // 1.10 clipped down
    const float middle = result.map.at(0, 0, 2);
    EXPECT_GT(middle, 0.0f);
    EXPECT_LT(middle, 1.0f);
}
