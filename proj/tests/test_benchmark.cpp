#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "fwc/benchmark.hpp"
#include "fwc/rng.hpp"

using namespace fwc;

namespace {

// A small scene whose spectra actually carry the fractions, so the
// regressions have signal: band b = sum_k f_k * e_k[b] + noise.
struct TinyScene {
    FractionSampleSet samples;
    Raster<float> enmap;
    Raster<float> stm;
};

TinyScene make_tiny_scene(std::uint64_t seed, int64_t rows = 8, int64_t cols = 8) {
    Rng rng(seed);
    GridGeometry coarse{0.0, 0.0, 30.0, 30.0, rows, cols};
    TinyScene scene;
    scene.samples.coarse_geometry = coarse;
    for (const auto& e : default_legend().entries) scene.samples.class_names.push_back(e.class_name);

    const size_t n_bands = 12, n_stm = 6, n_classes = 6;
    std::vector<std::vector<double>> endm(n_classes, std::vector<double>(n_bands));
    std::vector<std::vector<double>> endm_stm(n_classes, std::vector<double>(n_stm));
    Rng spectra_rng(7); // endmembers fixed across seeds
    for (auto& e : endm)
        for (auto& v : e) v = spectra_rng.uniform(0.05, 0.7);
    for (auto& e : endm_stm)
        for (auto& v : e) v = spectra_rng.uniform(0.05, 0.7);

    std::vector<std::string> names, stm_names;
    for (size_t b = 0; b < n_bands; ++b) names.push_back(strf("B%03zu", b + 1));
    for (size_t b = 0; b < n_stm; ++b) stm_names.push_back(strf("S%02zu", b + 1));
    scene.enmap = Raster<float>(coarse, static_cast<int64_t>(n_bands), names);
    scene.stm = Raster<float>(coarse, static_cast<int64_t>(n_stm), stm_names);

    const int64_t cells = coarse.n_cells();
    for (int64_t c = 0; c < cells; ++c) {
        FractionSample s;
        s.coarse_row = c / cols;
        s.coarse_col = c % cols;
        s.valid_fine_count = s.total_fine_count = 100;
        std::vector<double> f(n_classes);
        double total = 0.0;
        for (auto& v : f) {
            v = rng.uniform(0, 1);
            total += v;
        }
        for (auto& v : f) v /= total;
        s.fractions = f;
        scene.samples.samples.push_back(s);

        for (size_t b = 0; b < n_bands; ++b) {
            double v = 0.0;
            for (size_t k = 0; k < n_classes; ++k) v += f[k] * endm[k][b];
            scene.enmap.values[b * static_cast<size_t>(cells) + static_cast<size_t>(c)] =
                static_cast<float>(v + 0.005 * rng.normal());
        }
        for (size_t b = 0; b < n_stm; ++b) {
            double v = 0.0;
            for (size_t k = 0; k < n_classes; ++k) v += f[k] * endm_stm[k][b];
            scene.stm.values[b * static_cast<size_t>(cells) + static_cast<size_t>(c)] =
                static_cast<float>(v + 0.005 * rng.normal());
        }
    }
    return scene;
}

std::map<std::string, RegressorSpec> tiny_specs() {
    std::map<std::string, RegressorSpec> specs;
    RegressorSpec rf;
    rf.algorithm = Algorithm::rf;
    rf.rf.n_trees = 8;
    rf.rf.seed = 1;
    specs["rf"] = rf;
    RegressorSpec svr;
    svr.algorithm = Algorithm::svr;
    specs["svr"] = svr;
    RegressorSpec kr;
    kr.algorithm = Algorithm::kr;
    specs["kr"] = kr;
    RegressorSpec gbt;
    gbt.algorithm = Algorithm::gbt;
    gbt.gbt.n_rounds = 20;
    specs["gbt"] = gbt;
    return specs;
}

} // namespace

TEST(RunBenchmark, ProducesTheFullMatrixUnderOneSplit) {
    const auto scene = make_tiny_scene(1);
    EvalProtocol protocol;
    protocol.seed = 5;
    const auto report =
        run_benchmark(scene.samples, scene.enmap, scene.stm, default_legend(), tiny_specs(), protocol);

    EXPECT_EQ(report.cells.size(), 24u); // 3 species x 2 experiments x 4 algorithms
    EXPECT_EQ(report.n_samples, 64);

    // shared split: identical test targets for every algorithm of a given
    // (species, experiment), and identical test cells across all cells
    for (const auto& sp : report.species) {
        for (const auto& exp : report.experiments) {
            const EvalCell* first = nullptr;
            for (const auto& algo : report.algorithms) {
                const EvalCell* cell = report.find(sp, exp, algo);
                ASSERT_NE(cell, nullptr);
                EXPECT_EQ(cell->n_test, static_cast<int64_t>(std::llround(0.3 * 64)));
                if (!first)
                    first = cell;
                else
                    EXPECT_EQ(cell->scatter_y, first->scatter_y);
            }
        }
    }

    // per-column minimum marked exactly once
    for (const auto& sp : report.species) {
        for (const auto& exp : report.experiments) {
            int marked = 0;
            double min_rmse = 1e300;
            for (const auto& algo : report.algorithms) {
                const auto* cell = report.find(sp, exp, algo);
                min_rmse = std::min(min_rmse, cell->rmse_percent);
                marked += cell->lowest_in_column ? 1 : 0;
            }
            EXPECT_EQ(marked, 1);
            for (const auto& algo : report.algorithms) {
                const auto* cell = report.find(sp, exp, algo);
                if (cell->lowest_in_column) EXPECT_DOUBLE_EQ(cell->rmse_percent, min_rmse);
            }
        }
    }
}

TEST(RunBenchmark, CellEqualsManualPipeline) {
    const auto scene = make_tiny_scene(2);
    EvalProtocol protocol;
    protocol.seed = 9;
    const auto specs = tiny_specs();
    const auto report =
        run_benchmark(scene.samples, scene.enmap, scene.stm, default_legend(), specs, protocol);

    // manual: same table build, same split, same spec
    const auto table = build_features(scene.samples, scene.enmap, &scene.stm, "Senegalia mellifera");
    const auto split = split_samples(table.rows.size(), 0.7, 9);
    std::vector<std::vector<double>> train_x, test_x;
    std::vector<double> train_y, test_y;
    for (const size_t i : split.train) {
        train_x.push_back(table.rows[i]);
        train_y.push_back(table.targets[i]);
    }
    for (const size_t i : split.test) {
        test_x.push_back(table.rows[i]);
        test_y.push_back(table.targets[i]);
    }
    const auto model = train_regressor(train_x, train_y, table.feature_names, specs.at("kr"));
    const auto yhat = model.predict(test_x, table.feature_names);

    const auto* cell = report.find("Senegalia mellifera", "EnM+S2", "kr");
    ASSERT_NE(cell, nullptr);
    EXPECT_NEAR(cell->rmse_percent, rmse(test_y, yhat) * 100.0, 1e-12);
    EXPECT_NEAR(cell->r2_percent, r2(test_y, yhat) * 100.0, 1e-12);
}

TEST(RunBenchmark, WorkerCountDoesNotChangeTheReport) {
    const auto scene = make_tiny_scene(3, 6, 6);
    EvalProtocol serial, parallel;
    serial.workers = 1;
    parallel.workers = 8;
    const auto a = run_benchmark(scene.samples, scene.enmap, scene.stm, default_legend(), tiny_specs(),
                                 serial);
    const auto b = run_benchmark(scene.samples, scene.enmap, scene.stm, default_legend(), tiny_specs(),
                                 parallel);
    ASSERT_EQ(a.cells.size(), b.cells.size());
    for (size_t i = 0; i < a.cells.size(); ++i) {
        EXPECT_EQ(a.cells[i].rmse_percent, b.cells[i].rmse_percent);
        EXPECT_EQ(a.cells[i].scatter_yhat, b.cells[i].scatter_yhat);
    }
}

TEST(RunBenchmark, CvModeReportsFoldSpread) {
    const auto scene = make_tiny_scene(4, 6, 6);
    EvalProtocol protocol;
    protocol.mode = EvalProtocol::Mode::cv;
    protocol.folds = 4;
    std::map<std::string, RegressorSpec> specs;
    RegressorSpec kr;
    kr.algorithm = Algorithm::kr;
    specs["kr"] = kr;
    const auto report =
        run_benchmark(scene.samples, scene.enmap, scene.stm, default_legend(), specs, protocol);
    ASSERT_EQ(report.cells.size(), 6u);
    for (const auto& cell : report.cells) {
        EXPECT_EQ(cell.n_test, 36); // every row is out-of-fold exactly once
        EXPECT_GE(cell.rmse_percent_std, 0.0);
    }
}

TEST(EvalReport, JsonRoundTripIsLossless) {
    const auto scene = make_tiny_scene(5, 6, 6);
    EvalProtocol protocol;
    const auto report =
        run_benchmark(scene.samples, scene.enmap, scene.stm, default_legend(), tiny_specs(), protocol);

    const auto dir = std::filesystem::temp_directory_path() / "fwc_test_benchmark";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "report.json").string();
    save_report_json(report, path);
    const auto loaded = load_report_json(path);

    ASSERT_EQ(loaded.cells.size(), report.cells.size());
    for (size_t i = 0; i < report.cells.size(); ++i) {
        EXPECT_EQ(loaded.cells[i].species, report.cells[i].species);
        EXPECT_EQ(loaded.cells[i].rmse_percent, report.cells[i].rmse_percent);
        EXPECT_EQ(loaded.cells[i].r2_percent, report.cells[i].r2_percent);
        EXPECT_EQ(loaded.cells[i].scatter_y, report.cells[i].scatter_y);
        EXPECT_EQ(loaded.cells[i].scatter_yhat, report.cells[i].scatter_yhat);
    }

    // matrix CSV: header + one row per algorithm; stars mark column minima
    const auto csv_path = (dir / "matrix.csv").string();
    save_report_matrix_csv(report, csv_path);
    std::ifstream csv(csv_path);
    std::string line;
    int lines = 0, stars = 0;
    while (std::getline(csv, line)) {
        lines++;
        for (const char ch : line) stars += ch == '*' ? 1 : 0;
    }
    EXPECT_EQ(lines, 1 + 4);
    EXPECT_EQ(stars, 6); // one per (species, experiment) column
}
