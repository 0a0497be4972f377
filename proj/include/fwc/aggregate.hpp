#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fwc/geometry.hpp"
#include "fwc/legend.hpp"
#include "fwc/raster.hpp"

namespace fwc {

struct FractionSample {
    int64_t coarse_row = 0;
    int64_t coarse_col = 0;
    std::vector<double> fractions; // one per legend class, sums to 1
    int64_t valid_fine_count = 0;
    int64_t total_fine_count = 0;

    bool operator==(const FractionSample&) const = default;
};

// Per-coarse-cell cover fractions computed from a fine label raster: the
// regression targets.
struct FractionSampleSet {
    GridGeometry coarse_geometry;
    std::vector<std::string> class_names;
    std::vector<FractionSample> samples;

    bool operator==(const FractionSampleSet&) const = default;
};

// Map every fine cell to the coarse cell containing its center, or -1 when
// the center falls outside the coarse extent. Cells are half-open with the
// left/top edge inclusive, so boundary centers resolve deterministically.
inline std::vector<int64_t> assign_fine_cells(const GridGeometry& fine, const GridGeometry& coarse) {
    fine.validate();
    coarse.validate();
    std::vector<int64_t> assignment(static_cast<size_t>(fine.n_cells()), -1);
    for (int64_t r = 0; r < fine.n_rows; ++r) {
        const int64_t cr = coarse.row_of(fine.center_y(r));
        if (cr < 0 || cr >= coarse.n_rows) continue;
        for (int64_t c = 0; c < fine.n_cols; ++c) {
            const int64_t cc = coarse.col_of(fine.center_x(c));
            if (cc < 0 || cc >= coarse.n_cols) continue;
            assignment[static_cast<size_t>(r * fine.n_cols + c)] = cr * coarse.n_cols + cc;
        }
    }
    return assignment;
}

// Reassign one class's fine cells to another before aggregation (the
// --merge-shadow-into path). Mask and all other labels are untouched.
inline LabelRaster relabel(const LabelRaster& labels, std::uint8_t from_id, std::uint8_t to_id) {
    LabelRaster out = labels;
    const int64_t cells = out.n_cells();
    for (int64_t c = 0; c < cells; ++c)
        if (out.valid_mask[static_cast<size_t>(c)] && out.values[static_cast<size_t>(c)] == from_id)
            out.values[static_cast<size_t>(c)] = to_id;
    return out;
}

// Count fine labels per coarse cell and divide by the valid count. Coarse
// cells whose valid coverage falls below theta are dropped, not renormalized.
inline FractionSampleSet aggregate_fractions(const LabelRaster& labels, const GridGeometry& coarse,
                                             const ClassLegend& legend, double theta) {
    labels.validate();
    legend.validate();
    coarse.validate();
    if (labels.n_bands != 1) throw DataError("aggregate_fractions: label raster must be single-band");
    if (!(theta > 0.0) || theta > 1.0) throw DataError("aggregate_fractions: theta must be in (0, 1]");

    const size_t n_classes = legend.size();
    std::vector<int> class_of_id(256, -1);
    for (size_t k = 0; k < n_classes; ++k) class_of_id[legend.entries[k].class_id] = static_cast<int>(k);

    const auto assignment = assign_fine_cells(labels.geometry, coarse);
    const size_t n_coarse = static_cast<size_t>(coarse.n_cells());
    std::vector<int64_t> total(n_coarse, 0);
    std::vector<int64_t> valid(n_coarse, 0);
    std::vector<int64_t> counts(n_coarse * n_classes, 0);

    bool any_assigned = false;
    for (int64_t r = 0; r < labels.n_rows(); ++r) {
        for (int64_t c = 0; c < labels.n_cols(); ++c) {
            const int64_t ci = assignment[static_cast<size_t>(r * labels.n_cols() + c)];
            if (ci < 0) continue;
            any_assigned = true;
            total[static_cast<size_t>(ci)]++;
            if (!labels.valid(r, c)) continue;
            const std::uint8_t v = labels.at(0, r, c);
            const int k = class_of_id[v];
            if (k < 0)
                throw DataError(strf("label value %d at fine cell (r=%lld,c=%lld) not in legend", int(v),
                                     static_cast<long long>(r), static_cast<long long>(c)));
            valid[static_cast<size_t>(ci)]++;
            counts[static_cast<size_t>(ci) * n_classes + static_cast<size_t>(k)]++;
        }
    }
    if (!any_assigned)
        throw DataError("aggregate_fractions: label and coarse extents do not intersect");

    FractionSampleSet out;
    out.coarse_geometry = coarse;
    for (const auto& e : legend.entries) out.class_names.push_back(e.class_name);
    for (int64_t ci = 0; ci < coarse.n_cells(); ++ci) {
        const size_t i = static_cast<size_t>(ci);
        if (total[i] == 0) continue;
        const double coverage = static_cast<double>(valid[i]) / static_cast<double>(total[i]);
        if (coverage < theta) continue;
        FractionSample s;
        s.coarse_row = ci / coarse.n_cols;
        s.coarse_col = ci % coarse.n_cols;
        s.valid_fine_count = valid[i];
        s.total_fine_count = total[i];
        s.fractions.resize(n_classes);
        for (size_t k = 0; k < n_classes; ++k)
            s.fractions[k] = static_cast<double>(counts[i * n_classes + k]) / static_cast<double>(valid[i]);
        out.samples.push_back(std::move(s));
    }
    return out;
}

inline void save_samples_csv(const FractionSampleSet& set, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("cannot open for writing: " + path);
    f << "coarse_row,coarse_col,center_x,center_y";
    for (const auto& name : set.class_names) f << "," << name;
    f << ",valid_fine_count,total_fine_count\n";
    char buf[64];
    for (const auto& s : set.samples) {
        f << s.coarse_row << "," << s.coarse_col;
        std::snprintf(buf, sizeof(buf), "%.17g", set.coarse_geometry.center_x(s.coarse_col));
        f << "," << buf;
        std::snprintf(buf, sizeof(buf), "%.17g", set.coarse_geometry.center_y(s.coarse_row));
        f << "," << buf;
        for (const double v : s.fractions) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            f << "," << buf;
        }
        f << "," << s.valid_fine_count << "," << s.total_fine_count << "\n";
    }
    // geometry travels in a sidecar so the set can be reloaded standalone
    nlohmann::ordered_json meta;
    meta["origin_x"] = set.coarse_geometry.origin_x;
    meta["origin_y"] = set.coarse_geometry.origin_y;
    meta["pixel_size_x"] = set.coarse_geometry.pixel_size_x;
    meta["pixel_size_y"] = set.coarse_geometry.pixel_size_y;
    meta["n_rows"] = set.coarse_geometry.n_rows;
    meta["n_cols"] = set.coarse_geometry.n_cols;
    meta["class_names"] = set.class_names;
    std::ofstream mf(path + ".meta.json", std::ios::trunc);
    if (!mf) throw DataError("cannot open for writing: " + path + ".meta.json");
    mf << meta.dump(2) << "\n";
}

inline FractionSampleSet load_samples_csv(const std::string& path) {
    FractionSampleSet set;
    try {
        std::ifstream mf(path + ".meta.json");
        if (!mf) throw DataError("cannot open: " + path + ".meta.json");
        nlohmann::json meta = nlohmann::json::parse(mf);
        set.coarse_geometry.origin_x = meta.at("origin_x").get<double>();
        set.coarse_geometry.origin_y = meta.at("origin_y").get<double>();
        set.coarse_geometry.pixel_size_x = meta.at("pixel_size_x").get<double>();
        set.coarse_geometry.pixel_size_y = meta.at("pixel_size_y").get<double>();
        set.coarse_geometry.n_rows = meta.at("n_rows").get<int64_t>();
        set.coarse_geometry.n_cols = meta.at("n_cols").get<int64_t>();
        set.class_names = meta.at("class_names").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(strf("unparseable samples meta %s.meta.json: %s", path.c_str(), e.what()));
    }

    std::ifstream f(path);
    if (!f) throw DataError("cannot open: " + path);
    std::string line;
    if (!std::getline(f, line)) throw DataError("empty samples CSV: " + path);
    const size_t n_classes = set.class_names.size();
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<std::string> cols;
        while (std::getline(ss, tok, ',')) cols.push_back(tok);
        if (cols.size() != 6 + n_classes)
            throw DataError(strf("samples CSV row has %zu columns, expected %zu", cols.size(), 6 + n_classes));
        FractionSample s;
        s.coarse_row = std::stoll(cols[0]);
        s.coarse_col = std::stoll(cols[1]);
        for (size_t k = 0; k < n_classes; ++k) s.fractions.push_back(std::stod(cols[4 + k]));
        s.valid_fine_count = std::stoll(cols[4 + n_classes]);
        s.total_fine_count = std::stoll(cols[5 + n_classes]);
        set.samples.push_back(std::move(s));
    }
    return set;
}

} // namespace fwc
