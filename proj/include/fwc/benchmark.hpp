#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "fwc/features.hpp"
#include "fwc/metrics.hpp"
#include "fwc/regressor.hpp"

namespace fwc {

struct EvalProtocol {
    enum class Mode { holdout, cv };
    Mode mode = Mode::holdout;
    double train_ratio = 0.7;
    int folds = 5;
    std::uint64_t seed = 0;
    int workers = 1;
};

struct EvalCell {
    std::string species;
    std::string experiment; // "EnM" | "EnM+S2"
    std::string algorithm;  // "rf" | "svr" | "kr" | "gbt"
    double rmse_percent = 0.0;
    double rmse_percent_std = 0.0; // across folds (cv mode only)
    double r2_percent = 0.0;
    int64_t n_test = 0;
    bool lowest_in_column = false; // Lowest RMSE per (species, experiment)
    double fit_slope = 0.0;
    double fit_intercept = 0.0;
    std::vector<double> scatter_y;
    std::vector<double> scatter_yhat;
};

struct EvalReport {
    std::vector<std::string> species;
    std::vector<std::string> experiments;
    std::vector<std::string> algorithms;
    std::string split_mode;
    double train_ratio = 0.0;
    int folds = 0;
    std::uint64_t seed = 0;
    int64_t n_samples = 0; // rows shared by all cells
    std::vector<EvalCell> cells;

    const EvalCell* find(const std::string& species_name, const std::string& experiment,
                         const std::string& algorithm) const {
        for (const auto& c : cells)
            if (c.species == species_name && c.experiment == experiment && c.algorithm == algorithm)
                return &c;
        return nullptr;
    }
};

namespace detail {

struct BenchmarkCellTask {
    size_t species_idx;
    size_t experiment_idx;
    size_t algorithm_idx;
};

} // namespace detail

// The full species x experiment x algorithm matrix under one shared split.
// Feature tables for both experiments are restricted to the samples valid in
// both, so every cell trains and tests on identical sample cells.
inline EvalReport run_benchmark(const FractionSampleSet& samples, const Raster<float>& enmap,
                                const Raster<float>& stm_coarse, const ClassLegend& legend,
                                const std::map<std::string, RegressorSpec>& specs,
                                const EvalProtocol& protocol) {
    legend.validate();
    const std::vector<std::string> species = legend.woody_target_names();
    if (species.empty()) throw DataError("run_benchmark: legend has no woody target classes");
    const std::vector<std::string> experiments = {"EnM", "EnM+S2"};
    std::vector<std::string> algorithms;
    for (const auto& [name, spec] : specs) algorithms.push_back(name);
    if (algorithms.empty()) throw DataError("run_benchmark: no regressor specs");

    // Build per-species tables for both experiments, then intersect kept rows.
    std::map<std::string, FeatureTable> enm_tables, s2_tables;
    std::set<size_t> common;
    bool first = true;
    for (const auto& sp : species) {
        enm_tables[sp] = build_features(samples, enmap, nullptr, sp);
        s2_tables[sp] = build_features(samples, enmap, &stm_coarse, sp);
        for (const auto* table : {&enm_tables[sp], &s2_tables[sp]}) {
            std::set<size_t> kept(table->sample_indices.begin(), table->sample_indices.end());
            if (first) {
                common = std::move(kept);
                first = false;
            } else {
                std::set<size_t> merged;
                std::set_intersection(common.begin(), common.end(), kept.begin(), kept.end(),
                                      std::inserter(merged, merged.begin()));
                common = std::move(merged);
            }
        }
    }
    if (common.size() < 2) throw DataError("run_benchmark: fewer than 2 samples survive both experiments");

    const auto restrict_table = [&](const FeatureTable& table) {
        FeatureTable out;
        out.feature_names = table.feature_names;
        out.target_class = table.target_class;
        out.experiment_tag = table.experiment_tag;
        out.n_dropped = table.n_dropped;
        for (size_t r = 0; r < table.rows.size(); ++r) {
            if (!common.count(table.sample_indices[r])) continue;
            out.rows.push_back(table.rows[r]);
            out.targets.push_back(table.targets[r]);
            out.cells.push_back(table.cells[r]);
            out.sample_indices.push_back(table.sample_indices[r]);
        }
        return out;
    };
    for (auto& [sp, table] : enm_tables) table = restrict_table(table);
    for (auto& [sp, table] : s2_tables) table = restrict_table(table);

    const size_t n = common.size();
    EvalReport report;
    report.species = species;
    report.experiments = experiments;
    report.algorithms = algorithms;
    report.split_mode = protocol.mode == EvalProtocol::Mode::holdout ? "holdout" : "cv";
    report.train_ratio = protocol.train_ratio;
    report.folds = protocol.folds;
    report.seed = protocol.seed;
    report.n_samples = static_cast<int64_t>(n);

    SplitIndices holdout;
    std::vector<std::vector<size_t>> folds;
    if (protocol.mode == EvalProtocol::Mode::holdout)
        holdout = split_samples(n, protocol.train_ratio, protocol.seed);
    else
        folds = detail::make_folds(n, protocol.folds, protocol.seed);

    std::vector<detail::BenchmarkCellTask> tasks;
    for (size_t s = 0; s < species.size(); ++s)
        for (size_t e = 0; e < experiments.size(); ++e)
            for (size_t a = 0; a < algorithms.size(); ++a) tasks.push_back({s, e, a});
    report.cells.resize(tasks.size());

    parallel_for(tasks.size(), protocol.workers, [&](size_t begin, size_t end) {
        for (size_t ti = begin; ti < end; ++ti) {
            const auto& task = tasks[ti];
            const std::string& sp = species[task.species_idx];
            const FeatureTable& table =
                task.experiment_idx == 0 ? enm_tables.at(sp) : s2_tables.at(sp);
            const RegressorSpec& spec = specs.at(algorithms[task.algorithm_idx]);

            EvalCell cell;
            cell.species = sp;
            cell.experiment = experiments[task.experiment_idx];
            cell.algorithm = algorithms[task.algorithm_idx];

            const auto eval_split = [&](const std::vector<size_t>& train_idx,
                                        const std::vector<size_t>& test_idx, std::vector<double>& y,
                                        std::vector<double>& yhat) {
                std::vector<std::vector<double>> train_x, test_x;
                std::vector<double> train_y;
                for (const size_t i : train_idx) {
                    train_x.push_back(table.rows[i]);
                    train_y.push_back(table.targets[i]);
                }
                for (const size_t i : test_idx) {
                    test_x.push_back(table.rows[i]);
                    y.push_back(table.targets[i]);
                }
                const auto model = train_regressor(train_x, train_y, table.feature_names, spec, 1);
                yhat = model.predict(test_x, table.feature_names, 1);
            };

            if (protocol.mode == EvalProtocol::Mode::holdout) {
                std::vector<double> y, yhat;
                eval_split(holdout.train, holdout.test, y, yhat);
                cell.rmse_percent = rmse(y, yhat) * 100.0;
                cell.r2_percent = r2(y, yhat) * 100.0;
                cell.n_test = static_cast<int64_t>(y.size());
                cell.scatter_y = std::move(y);
                cell.scatter_yhat = std::move(yhat);
            } else {
                std::vector<double> all_y, all_yhat, fold_rmse;
                for (size_t f = 0; f < folds.size(); ++f) {
                    std::vector<size_t> train_idx;
                    for (size_t g = 0; g < folds.size(); ++g)
                        if (g != f) train_idx.insert(train_idx.end(), folds[g].begin(), folds[g].end());
                    std::vector<double> y, yhat;
                    eval_split(train_idx, folds[f], y, yhat);
                    fold_rmse.push_back(rmse(y, yhat));
                    all_y.insert(all_y.end(), y.begin(), y.end());
                    all_yhat.insert(all_yhat.end(), yhat.begin(), yhat.end());
                }
                double mean = 0.0;
                for (const double v : fold_rmse) mean += v;
                mean /= static_cast<double>(fold_rmse.size());
                double var = 0.0;
                for (const double v : fold_rmse) var += (v - mean) * (v - mean);
                cell.rmse_percent = mean * 100.0;
                cell.rmse_percent_std =
                    std::sqrt(var / static_cast<double>(fold_rmse.size())) * 100.0;
                cell.r2_percent = r2(all_y, all_yhat) * 100.0;
                cell.n_test = static_cast<int64_t>(all_y.size());
                cell.scatter_y = std::move(all_y);
                cell.scatter_yhat = std::move(all_yhat);
            }
            fit_line(cell.scatter_y, cell.scatter_yhat, cell.fit_slope, cell.fit_intercept);
            report.cells[ti] = std::move(cell);
        }
    });

    // mark the lowest RMSE per (species, experiment) column
    for (const auto& sp : species) {
        for (const auto& exp : experiments) {
            EvalCell* best = nullptr;
            for (auto& cell : report.cells)
                if (cell.species == sp && cell.experiment == exp &&
                    (!best || cell.rmse_percent < best->rmse_percent))
                    best = &cell;
            if (best) best->lowest_in_column = true;
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// report serialization
// ---------------------------------------------------------------------------

inline void save_report_json(const EvalReport& report, const std::string& path) {
    nlohmann::ordered_json j;
    j["species"] = report.species;
    j["experiments"] = report.experiments;
    j["algorithms"] = report.algorithms;
    j["split"] = {{"mode", report.split_mode},
                  {"train_ratio", report.train_ratio},
                  {"folds", report.folds},
                  {"seed", report.seed},
                  {"n_samples", report.n_samples}};
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (const auto& c : report.cells) {
        nlohmann::ordered_json cj;
        cj["species"] = c.species;
        cj["experiment"] = c.experiment;
        cj["algorithm"] = c.algorithm;
        cj["rmse_percent"] = c.rmse_percent;
        cj["rmse_percent_std"] = c.rmse_percent_std;
        cj["r2_percent"] = c.r2_percent;
        cj["n_test"] = c.n_test;
        cj["lowest_in_column"] = c.lowest_in_column;
        cj["fit_slope"] = c.fit_slope;
        cj["fit_intercept"] = c.fit_intercept;
        cj["scatter_y"] = c.scatter_y;
        cj["scatter_yhat"] = c.scatter_yhat;
        cells.push_back(std::move(cj));
    }
    j["cells"] = std::move(cells);
    detail::write_file_atomic(path, j.dump(2) + "\n");
}

inline EvalReport load_report_json(const std::string& path) {
    nlohmann::json j;
    try {
        std::ifstream f(path);
        if (!f) throw DataError("cannot open: " + path);
        j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(strf("unparseable report %s: %s", path.c_str(), e.what()));
    }
    EvalReport report;
    try {
        report.species = j.at("species").get<std::vector<std::string>>();
        report.experiments = j.at("experiments").get<std::vector<std::string>>();
        report.algorithms = j.at("algorithms").get<std::vector<std::string>>();
        report.split_mode = j.at("split").at("mode").get<std::string>();
        report.train_ratio = j.at("split").at("train_ratio").get<double>();
        report.folds = j.at("split").at("folds").get<int>();
        report.seed = j.at("split").at("seed").get<std::uint64_t>();
        report.n_samples = j.at("split").at("n_samples").get<int64_t>();
        for (const auto& cj : j.at("cells")) {
            EvalCell c;
            c.species = cj.at("species").get<std::string>();
            c.experiment = cj.at("experiment").get<std::string>();
            c.algorithm = cj.at("algorithm").get<std::string>();
            c.rmse_percent = cj.at("rmse_percent").get<double>();
            c.rmse_percent_std = cj.at("rmse_percent_std").get<double>();
            c.r2_percent = cj.at("r2_percent").get<double>();
            c.n_test = cj.at("n_test").get<int64_t>();
            c.lowest_in_column = cj.at("lowest_in_column").get<bool>();
            c.fit_slope = cj.at("fit_slope").get<double>();
            c.fit_intercept = cj.at("fit_intercept").get<double>();
            c.scatter_y = cj.at("scatter_y").get<std::vector<double>>();
            c.scatter_yhat = cj.at("scatter_yhat").get<std::vector<double>>();
            report.cells.push_back(std::move(c));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(strf("report %s missing fields: %s", path.c_str(), e.what()));
    }
    return report;
}

// Table-shaped CSV: one row per algorithm, one column per
// (species, experiment); the lowest RMSE in each column is starred.
inline void save_report_matrix_csv(const EvalReport& report, const std::string& path) {
    std::string out = "algorithm";
    for (const auto& sp : report.species)
        for (const auto& exp : report.experiments) out += "," + sp + " | " + exp;
    out += "\n";
    for (const auto& algo : report.algorithms) {
        out += algo;
        for (const auto& sp : report.species) {
            for (const auto& exp : report.experiments) {
                const EvalCell* cell = report.find(sp, exp, algo);
                if (!cell) {
                    out += ",";
                    continue;
                }
                out += strf(",%.2f%s", cell->rmse_percent, cell->lowest_in_column ? "*" : "");
            }
        }
        out += "\n";
    }
    detail::write_file_atomic(path, out);
}

// Per-cell scatter pairs.
inline void save_scatter_csv(const EvalCell& cell, const std::string& path) {
    std::string out = "y,yhat\n";
    char buf[80];
    for (size_t i = 0; i < cell.scatter_y.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", cell.scatter_y[i], cell.scatter_yhat[i]);
        out += buf;
    }
    detail::write_file_atomic(path, out);
}

} // namespace fwc
