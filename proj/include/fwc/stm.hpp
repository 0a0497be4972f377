#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fwc/dates.hpp"
#include "fwc/parallel.hpp"
#include "fwc/raster.hpp"
#include "fwc/raster_io.hpp"

namespace fwc {

// Multi-date image stack. All grids share geometry and band layout; each
// date carries its own validity mask (clouds, shadows).
struct DatedStack {
    std::vector<Date> dates;
    std::vector<Raster<float>> grids;

    size_t size() const { return dates.size(); }

    void validate() const {
        if (dates.size() != grids.size()) throw DataError("DatedStack: dates/grids length mismatch");
        if (dates.empty()) throw DataError("DatedStack: empty");
        for (size_t i = 0; i < grids.size(); ++i) {
            grids[i].validate();
            if (grids[i].geometry != grids[0].geometry)
                throw DataError("DatedStack: all grids must share geometry");
            if (grids[i].band_names != grids[0].band_names)
                throw DataError("DatedStack: all grids must share band names");
        }
    }

    // Manifest-loaded stacks must be strictly date-ordered; compute_stm
    // itself is order-agnostic.
    void validate_ordered() const {
        validate();
        for (size_t i = 1; i < dates.size(); ++i)
            if (!(dates[i - 1] < dates[i]))
                throw DataError("DatedStack: dates must be strictly increasing");
    }
};

enum class SpectralIndex { NDVI, EVI, SAVI };

inline const char* index_name(SpectralIndex idx) {
    switch (idx) {
        case SpectralIndex::NDVI: return "NDVI";
        case SpectralIndex::EVI: return "EVI";
        default: return "SAVI";
    }
}

// NDVI = (NIR-Red)/(NIR+Red)
// EVI  = 2.5 (NIR-Red)/(NIR + 6 Red - 7.5 Blue + 1)
// SAVI = 1.5 (NIR-Red)/(NIR + Red + 0.5)
// Cells whose denominator magnitude is below 1e-8 become invalid.
inline Raster<float> compute_index(const Raster<float>& grid, SpectralIndex idx) {
    const int64_t nir_b = grid.band_index("NIR");
    const int64_t red_b = grid.band_index("Red");
    if (nir_b < 0) throw DataError("compute_index: band 'NIR' absent");
    if (red_b < 0) throw DataError("compute_index: band 'Red' absent");
    int64_t blue_b = -1;
    if (idx == SpectralIndex::EVI) {
        blue_b = grid.band_index("Blue");
        if (blue_b < 0) throw DataError("compute_index: band 'Blue' absent (required for EVI)");
    }

    Raster<float> out(grid.geometry, 1, {index_name(idx)});
    const int64_t cells = grid.n_cells();
    for (int64_t c = 0; c < cells; ++c) {
        if (!grid.valid_mask[static_cast<size_t>(c)]) {
            out.valid_mask[static_cast<size_t>(c)] = 0;
            continue;
        }
        const double nir = grid.values[static_cast<size_t>(nir_b * cells + c)];
        const double red = grid.values[static_cast<size_t>(red_b * cells + c)];
        double num = 0.0, den = 0.0;
        switch (idx) {
            case SpectralIndex::NDVI:
                num = nir - red;
                den = nir + red;
                break;
            case SpectralIndex::EVI: {
                const double blue = grid.values[static_cast<size_t>(blue_b * cells + c)];
                num = 2.5 * (nir - red);
                den = nir + 6.0 * red - 7.5 * blue + 1.0;
                break;
            }
            case SpectralIndex::SAVI:
                num = 1.5 * (nir - red);
                den = nir + red + 0.5;
                break;
        }
        if (std::abs(den) < 1e-8) {
            out.valid_mask[static_cast<size_t>(c)] = 0;
            continue;
        }
        out.values[static_cast<size_t>(c)] = static_cast<float>(num / den);
    }
    out.burn_nodata();
    return out;
}

// Percentile with the linear-interpolation (type 7) definition:
// h = (n-1) p / 100, interpolate between the floor(h) and ceil(h) order
// statistics of the ascending sort.
inline double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw DataError("percentile: empty list");
    std::sort(values.begin(), values.end());
    const double h = static_cast<double>(values.size() - 1) * p / 100.0;
    const size_t lo = static_cast<size_t>(std::floor(h));
    const size_t hi = static_cast<size_t>(std::ceil(h));
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

struct StmOptions {
    std::vector<double> percentiles{10, 25, 50, 75, 90};
    int min_obs = 3; // fewer valid observations than this -> cell invalid
    int workers = 1;
};

// Spectro-temporal metrics: per-season percentiles of every reflectance band
// plus NDVI/EVI/SAVI, computed per date before the temporal reduction. One
// output band per (variable, percentile, season), named
// `<variable>_p<percentile>_<season>`. The cube shares one validity mask, so
// a cell is valid only where every variable/season reaches min_obs.
// The double-precision overload exposes the values before the f32 cast;
// the float overload is that result cast band-for-band.
template <typename V>
Raster<V> compute_stm_as(const DatedStack& stack, const std::vector<SeasonWindow>& seasons,
                         const StmOptions& opt = {}) {
    stack.validate();
    if (seasons.empty()) throw DataError("compute_stm: no season windows");
    if (opt.percentiles.empty()) throw DataError("compute_stm: no percentiles requested");
    if (opt.min_obs < 1) throw DataError("compute_stm: min_obs must be >= 1");

    // Date selection per season, in stable date order so permuting the
    // stack cannot change the gathered multiset.
    std::vector<size_t> order(stack.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return stack.dates[a] < stack.dates[b]; });

    std::vector<std::vector<size_t>> season_dates(seasons.size());
    for (size_t s = 0; s < seasons.size(); ++s) {
        for (const size_t i : order)
            if (seasons[s].contains(stack.dates[i])) season_dates[s].push_back(i);
        if (season_dates[s].empty())
            throw DataError("compute_stm: season window '" + seasons[s].name + "' selects no dates");
    }

    const std::vector<std::string>& refl_names = stack.grids[0].band_names;
    const std::vector<SpectralIndex> indices{SpectralIndex::NDVI, SpectralIndex::EVI, SpectralIndex::SAVI};
    const size_t n_vars = refl_names.size() + indices.size();

    // Per-date index grids.
    std::vector<std::vector<Raster<float>>> index_grids(stack.size());
    for (size_t d = 0; d < stack.size(); ++d)
        for (const auto idx : indices) index_grids[d].push_back(compute_index(stack.grids[d], idx));

    std::vector<std::string> out_names;
    for (const auto& season : seasons) {
        for (size_t v = 0; v < n_vars; ++v) {
            const std::string var =
                v < refl_names.size() ? refl_names[v] : index_name(indices[v - refl_names.size()]);
            for (const double p : opt.percentiles)
                out_names.push_back(var + strf("_p%g_", p) + season.name);
        }
    }

    const GridGeometry geom = stack.grids[0].geometry;
    Raster<V> cube(geom, static_cast<int64_t>(out_names.size()), out_names);
    const int64_t cells = geom.n_cells();

    parallel_for(static_cast<size_t>(geom.n_rows), opt.workers, [&](size_t row_begin, size_t row_end) {
        std::vector<double> obs;
        for (size_t r = row_begin; r < row_end; ++r) {
            for (int64_t col = 0; col < geom.n_cols; ++col) {
                const size_t cell = static_cast<size_t>(static_cast<int64_t>(r) * geom.n_cols + col);
                bool cell_ok = true;
                size_t band = 0;
                for (size_t s = 0; s < seasons.size() && cell_ok; ++s) {
                    for (size_t v = 0; v < n_vars; ++v) {
                        obs.clear();
                        for (const size_t d : season_dates[s]) {
                            const Raster<float>& src = v < refl_names.size()
                                                           ? stack.grids[d]
                                                           : index_grids[d][v - refl_names.size()];
                            if (!src.valid_mask[cell]) continue;
                            const int64_t b = v < refl_names.size() ? static_cast<int64_t>(v) : 0;
                            obs.push_back(src.values[static_cast<size_t>(b) * static_cast<size_t>(cells) + cell]);
                        }
                        if (static_cast<int>(obs.size()) < opt.min_obs) {
                            cell_ok = false;
                            break;
                        }
                        for (const double p : opt.percentiles) {
                            cube.values[(band++) * static_cast<size_t>(cells) + cell] =
                                static_cast<V>(percentile(obs, p));
                        }
                    }
                }
                if (!cell_ok) cube.valid_mask[cell] = 0;
            }
        }
    });
    cube.burn_nodata();
    return cube;
}

inline Raster<float> compute_stm(const DatedStack& stack, const std::vector<SeasonWindow>& seasons,
                                 const StmOptions& opt = {}) {
    return compute_stm_as<float>(stack, seasons, opt);
}

// Stack manifest: JSON list of {"date": "YYYY-MM-DD", "raster": path}.
// Relative raster paths resolve against the manifest's directory.
inline DatedStack load_stack(const std::string& manifest_path) {
    nlohmann::json j;
    try {
        std::ifstream f(manifest_path);
        if (!f) throw DataError("cannot open: " + manifest_path);
        j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(strf("unparseable stack manifest %s: %s", manifest_path.c_str(), e.what()));
    }
    const auto dir = std::filesystem::path(manifest_path).parent_path();
    DatedStack stack;
    try {
        for (const auto& item : j) {
            stack.dates.push_back(Date::parse(item.at("date").get<std::string>()));
            std::filesystem::path p = item.at("raster").get<std::string>();
            if (p.is_relative()) p = dir / p;
            stack.grids.push_back(load_raster<float>(p.string()));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(strf("stack manifest %s missing fields: %s", manifest_path.c_str(), e.what()));
    }
    stack.validate_ordered();
    return stack;
}

inline void save_stack(const DatedStack& stack, const std::string& manifest_path,
                       const std::string& raster_prefix) {
    stack.validate_ordered();
    const auto dir = std::filesystem::path(manifest_path).parent_path();
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (size_t i = 0; i < stack.size(); ++i) {
        const std::string rel = raster_prefix + "_" + stack.dates[i].to_string();
        save_raster(stack.grids[i], (dir / rel).string());
        j.push_back({{"date", stack.dates[i].to_string()}, {"raster", rel}});
    }
    detail::write_file_atomic(manifest_path, j.dump(2) + "\n");
}

} // namespace fwc
