#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fwc/aggregate.hpp"
#include "fwc/raster.hpp"

namespace fwc {

// Per-band "bad" flags aligned to a cube's bands; flagged bands are excluded
// from features. Stored as a JSON array of booleans.
using BandFlagList = std::vector<std::uint8_t>;

inline BandFlagList load_band_flags(const std::string& path) {
    BandFlagList flags;
    try {
        std::ifstream f(path);
        if (!f) throw DataError("cannot open: " + path);
        nlohmann::json j = nlohmann::json::parse(f);
        const nlohmann::json& arr = j.is_object() ? j.at("bad") : j;
        for (const auto& v : arr) flags.push_back(v.get<bool>() ? 1 : 0);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(strf("unparseable band flag list %s: %s", path.c_str(), e.what()));
    }
    return flags;
}

inline void save_band_flags(const BandFlagList& flags, const std::string& path, const std::string& note = "") {
    nlohmann::ordered_json j;
    if (!note.empty()) j["note"] = note;
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto f : flags) arr.push_back(f != 0);
    j["bad"] = std::move(arr);
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("cannot open for writing: " + path);
    f << j.dump(2) << "\n";
}

inline Raster<float> drop_bad_bands(const Raster<float>& cube, const BandFlagList& flags) {
    cube.validate();
    if (static_cast<int64_t>(flags.size()) != cube.n_bands)
        throw DataError(strf("drop_bad_bands: %zu flags for %lld bands", flags.size(),
                             static_cast<long long>(cube.n_bands)));
    int64_t kept = 0;
    for (const auto f : flags) kept += f ? 0 : 1;
    if (kept == 0) throw DataError("drop_bad_bands: all bands flagged bad");

    Raster<float> out;
    out.geometry = cube.geometry;
    out.n_bands = kept;
    out.nodata = cube.nodata;
    out.valid_mask = cube.valid_mask;
    const int64_t cells = cube.n_cells();
    out.values.reserve(static_cast<size_t>(kept * cells));
    for (int64_t b = 0; b < cube.n_bands; ++b) {
        if (flags[static_cast<size_t>(b)]) continue;
        out.band_names.push_back(cube.band_names[static_cast<size_t>(b)]);
        out.values.insert(out.values.end(), cube.values.begin() + b * cells,
                          cube.values.begin() + (b + 1) * cells);
    }
    return out;
}

// Aggregate a finer cube onto a coarse geometry: each coarse cell takes the
// per-band mean of the finer cells whose centers it contains, skipping
// invalid contributors. A coarse cell with no valid contributor is invalid.
inline Raster<float> resample_to_coarse(const Raster<float>& fine, const GridGeometry& coarse) {
    fine.validate();
    coarse.validate();
    const auto assignment = assign_fine_cells(fine.geometry, coarse);
    const int64_t fine_cells = fine.n_cells();
    const int64_t coarse_cells = coarse.n_cells();

    Raster<float> out(coarse, fine.n_bands, fine.band_names);
    std::vector<int64_t> contrib(static_cast<size_t>(coarse_cells), 0);
    std::vector<std::vector<double>> sums(static_cast<size_t>(fine.n_bands),
                                          std::vector<double>(static_cast<size_t>(coarse_cells), 0.0));
    for (int64_t c = 0; c < fine_cells; ++c) {
        const int64_t ci = assignment[static_cast<size_t>(c)];
        if (ci < 0 || !fine.valid_mask[static_cast<size_t>(c)]) continue;
        contrib[static_cast<size_t>(ci)]++;
        for (int64_t b = 0; b < fine.n_bands; ++b)
            sums[static_cast<size_t>(b)][static_cast<size_t>(ci)] +=
                fine.values[static_cast<size_t>(b * fine_cells + c)];
    }
    for (int64_t ci = 0; ci < coarse_cells; ++ci) {
        if (contrib[static_cast<size_t>(ci)] == 0) {
            out.valid_mask[static_cast<size_t>(ci)] = 0;
            continue;
        }
        for (int64_t b = 0; b < fine.n_bands; ++b)
            out.values[static_cast<size_t>(b * coarse_cells + ci)] = static_cast<float>(
                sums[static_cast<size_t>(b)][static_cast<size_t>(ci)] / contrib[static_cast<size_t>(ci)]);
    }
    out.burn_nodata();
    return out;
}

// Predictor matrix aligned row-for-row with the retained samples.
struct FeatureTable {
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> rows;
    std::vector<double> targets;                       // fractions in [0,1]
    std::string target_class;
    std::string experiment_tag;                        // "EnM" | "EnM+S2"
    std::vector<std::pair<int64_t, int64_t>> cells;    // (coarse_row, coarse_col) per row
    std::vector<size_t> sample_indices;                // row -> index into the source sample set
    int64_t n_dropped = 0;                             // samples lost to invalid predictors

    void validate() const {
        if (rows.size() != targets.size()) throw DataError("FeatureTable: rows/targets length mismatch");
        if (rows.size() != cells.size()) throw DataError("FeatureTable: rows/cells length mismatch");
        for (const auto& r : rows) {
            if (r.size() != feature_names.size())
                throw DataError("FeatureTable: row width != feature_names length");
            for (const double v : r)
                if (!std::isfinite(v)) throw DataError("FeatureTable: non-finite feature value");
        }
    }
};

// Row i = hyperspectral band values at sample i's coarse cell, concatenated
// with the STM bands at that cell when a cube is supplied (both already on
// the coarse geometry). Samples touching any invalid predictor cell drop out.
inline FeatureTable build_features(const FractionSampleSet& samples, const Raster<float>& enmap,
                                   const Raster<float>* stm, const std::string& target_class) {
    enmap.validate();
    if (enmap.geometry != samples.coarse_geometry)
        throw DataError("build_features: hyperspectral geometry differs from the samples' coarse geometry");
    if (stm) {
        stm->validate();
        if (stm->geometry != samples.coarse_geometry)
            throw DataError("build_features: STM cube not on the samples' coarse geometry");
    }
    int target_k = -1;
    for (size_t k = 0; k < samples.class_names.size(); ++k)
        if (samples.class_names[k] == target_class) target_k = static_cast<int>(k);
    if (target_k < 0) throw DataError("build_features: target class '" + target_class + "' not in legend");

    FeatureTable table;
    table.target_class = target_class;
    table.experiment_tag = stm ? "EnM+S2" : "EnM";
    table.feature_names = enmap.band_names;
    if (stm)
        table.feature_names.insert(table.feature_names.end(), stm->band_names.begin(), stm->band_names.end());

    const int64_t cells = enmap.n_cells();
    for (size_t i = 0; i < samples.samples.size(); ++i) {
        const auto& s = samples.samples[i];
        const size_t cell = static_cast<size_t>(s.coarse_row * enmap.geometry.n_cols + s.coarse_col);
        if (!enmap.valid_mask[cell] || (stm && !stm->valid_mask[cell])) {
            table.n_dropped++;
            continue;
        }
        std::vector<double> row;
        row.reserve(table.feature_names.size());
        for (int64_t b = 0; b < enmap.n_bands; ++b)
            row.push_back(enmap.values[static_cast<size_t>(b * cells) + cell]);
        if (stm)
            for (int64_t b = 0; b < stm->n_bands; ++b)
                row.push_back(stm->values[static_cast<size_t>(b * cells) + cell]);
        table.rows.push_back(std::move(row));
        table.targets.push_back(s.fractions[static_cast<size_t>(target_k)]);
        table.cells.emplace_back(s.coarse_row, s.coarse_col);
        table.sample_indices.push_back(i);
    }
    table.validate();
    return table;
}

// Training-set feature standardization. Zero-variance features are removed
// and recorded; apply/invert operate on the retained set only.
struct StandardizationParams {
    std::vector<double> mean;             // per retained feature
    std::vector<double> std_dev;
    std::vector<size_t> kept_indices;     // into the original feature order
    std::vector<std::string> removed_features;
};

inline StandardizationParams fit_standardization(const std::vector<std::vector<double>>& rows,
                                                 const std::vector<std::string>& feature_names,
                                                 const std::vector<size_t>& train_indices) {
    if (train_indices.empty()) throw DataError("fit_standardization: no training rows");
    const size_t p = feature_names.size();
    const double n = static_cast<double>(train_indices.size());
    StandardizationParams params;
    for (size_t j = 0; j < p; ++j) {
        double sum = 0.0;
        for (const size_t i : train_indices) sum += rows[i][j];
        const double mean = sum / n;
        double ss = 0.0;
        for (const size_t i : train_indices) {
            const double d = rows[i][j] - mean;
            ss += d * d;
        }
        const double sd = std::sqrt(ss / n);
        if (sd < 1e-12) {
            params.removed_features.push_back(feature_names[j]);
            continue;
        }
        params.kept_indices.push_back(j);
        params.mean.push_back(mean);
        params.std_dev.push_back(sd);
    }
    // an empty kept set is legal: a table with no varying feature degrades
    // kernel models to constant predictors
    return params;
}

inline std::vector<double> apply_standardization(const StandardizationParams& params,
                                                 const std::vector<double>& row) {
    std::vector<double> out(params.kept_indices.size());
    for (size_t j = 0; j < params.kept_indices.size(); ++j)
        out[j] = (row[params.kept_indices[j]] - params.mean[j]) / params.std_dev[j];
    return out;
}

inline std::vector<std::vector<double>> apply_standardization(const StandardizationParams& params,
                                                              const std::vector<std::vector<double>>& rows) {
    std::vector<std::vector<double>> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(apply_standardization(params, r));
    return out;
}

// Inverse of the transform over the retained features.
inline std::vector<double> invert_standardization(const StandardizationParams& params,
                                                  const std::vector<double>& transformed) {
    std::vector<double> out(params.kept_indices.size());
    for (size_t j = 0; j < params.kept_indices.size(); ++j)
        out[j] = transformed[j] * params.std_dev[j] + params.mean[j];
    return out;
}

inline void save_table_csv(const FeatureTable& table, const std::string& path) {
    table.validate();
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("cannot open for writing: " + path);
    for (size_t j = 0; j < table.feature_names.size(); ++j) f << table.feature_names[j] << ",";
    f << "target\n";
    char buf[64];
    for (size_t i = 0; i < table.rows.size(); ++i) {
        for (const double v : table.rows[i]) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            f << buf << ",";
        }
        std::snprintf(buf, sizeof(buf), "%.17g", table.targets[i]);
        f << buf << "\n";
    }

    nlohmann::ordered_json meta;
    meta["target_class"] = table.target_class;
    meta["experiment"] = table.experiment_tag;
    meta["n_rows"] = table.rows.size();
    meta["n_dropped"] = table.n_dropped;
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (const auto& [r, c] : table.cells) cells.push_back({r, c});
    meta["cells"] = std::move(cells);
    std::ofstream mf(path + ".meta.json", std::ios::trunc);
    if (!mf) throw DataError("cannot open for writing: " + path + ".meta.json");
    mf << meta.dump(2) << "\n";
}

inline FeatureTable load_table_csv(const std::string& path) {
    FeatureTable table;
    std::ifstream f(path);
    if (!f) throw DataError("cannot open: " + path);
    std::string line;
    if (!std::getline(f, line)) throw DataError("empty feature table CSV: " + path);
    {
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) table.feature_names.push_back(tok);
        if (table.feature_names.empty() || table.feature_names.back() != "target")
            throw DataError("feature table CSV must end with a 'target' column: " + path);
        table.feature_names.pop_back();
    }
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<double> row;
        while (std::getline(ss, tok, ',')) row.push_back(std::stod(tok));
        if (row.size() != table.feature_names.size() + 1)
            throw DataError(strf("feature table CSV row has %zu values, expected %zu", row.size(),
                                 table.feature_names.size() + 1));
        table.targets.push_back(row.back());
        row.pop_back();
        table.rows.push_back(std::move(row));
    }

    std::ifstream mf(path + ".meta.json");
    if (mf) {
        try {
            nlohmann::json meta = nlohmann::json::parse(mf);
            table.target_class = meta.value("target_class", "");
            table.experiment_tag = meta.value("experiment", "");
            table.n_dropped = meta.value("n_dropped", int64_t{0});
            if (meta.contains("cells"))
                for (const auto& rc : meta["cells"])
                    table.cells.emplace_back(rc.at(0).get<int64_t>(), rc.at(1).get<int64_t>());
        } catch (const nlohmann::json::exception& e) {
            throw DataError(strf("unparseable table meta %s.meta.json: %s", path.c_str(), e.what()));
        }
    }
    if (table.cells.empty()) table.cells.resize(table.rows.size(), {-1, -1});
    table.validate();
    return table;
}

} // namespace fwc
