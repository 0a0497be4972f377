#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "fwc/common.hpp"
#include "fwc/geometry.hpp"

namespace fwc {

template <typename T>
constexpr T default_nodata();

template <>
constexpr float default_nodata<float>() { return -9999.0f; }

template <>
constexpr std::uint8_t default_nodata<std::uint8_t>() { return 255; }

// in-memory only; the file format stores f32/u8
template <>
constexpr double default_nodata<double>() { return -9999.0; }

// Multi-band gridded array with one validity mask shared across bands.
// Values are band-sequential, each band row-major. Invalid cells hold the
// nodata sentinel in every band; burn_nodata() restores that invariant after
// direct writes to `values`.
template <typename T>
struct Raster {
    GridGeometry geometry;
    int64_t n_bands = 0;
    std::vector<std::string> band_names;
    std::vector<T> values;
    std::vector<std::uint8_t> valid_mask; // 1 = valid, length n_rows*n_cols
    T nodata = default_nodata<T>();

    Raster() = default;

    Raster(const GridGeometry& geom, int64_t bands, std::vector<std::string> names, T fill = T{})
        : geometry(geom), n_bands(bands), band_names(std::move(names)) {
        geometry.validate();
        values.assign(static_cast<size_t>(n_bands * geometry.n_cells()), fill);
        valid_mask.assign(static_cast<size_t>(geometry.n_cells()), 1);
    }

    int64_t n_rows() const { return geometry.n_rows; }
    int64_t n_cols() const { return geometry.n_cols; }
    int64_t n_cells() const { return geometry.n_cells(); }

    size_t cell_index(int64_t row, int64_t col) const {
        return static_cast<size_t>(row * geometry.n_cols + col);
    }
    size_t value_index(int64_t band, int64_t row, int64_t col) const {
        return static_cast<size_t>(band * geometry.n_cells() + row * geometry.n_cols + col);
    }

    T at(int64_t band, int64_t row, int64_t col) const { return values[value_index(band, row, col)]; }
    T& at(int64_t band, int64_t row, int64_t col) { return values[value_index(band, row, col)]; }

    bool valid(int64_t row, int64_t col) const { return valid_mask[cell_index(row, col)] != 0; }
    bool valid(size_t cell) const { return valid_mask[cell] != 0; }

    void set_invalid(int64_t row, int64_t col) {
        valid_mask[cell_index(row, col)] = 0;
        for (int64_t b = 0; b < n_bands; ++b) at(b, row, col) = nodata;
    }

    int64_t band_index(const std::string& name) const {
        for (size_t i = 0; i < band_names.size(); ++i)
            if (band_names[i] == name) return static_cast<int64_t>(i);
        return -1;
    }

    // Write the sentinel into every band at invalid cells.
    void burn_nodata() {
        const int64_t cells = n_cells();
        for (int64_t c = 0; c < cells; ++c) {
            if (valid_mask[static_cast<size_t>(c)]) continue;
            for (int64_t b = 0; b < n_bands; ++b)
                values[static_cast<size_t>(b * cells + c)] = nodata;
        }
    }

    void validate() const {
        geometry.validate();
        if (n_bands < 1) throw DataError("Raster: n_bands must be >= 1");
        if (static_cast<int64_t>(values.size()) != n_bands * geometry.n_cells())
            throw DataError(strf("Raster: values length %zu != n_bands*n_rows*n_cols = %lld",
                                 values.size(), static_cast<long long>(n_bands * geometry.n_cells())));
        if (static_cast<int64_t>(valid_mask.size()) != geometry.n_cells())
            throw DataError(strf("Raster: valid_mask length %zu != n_rows*n_cols = %lld",
                                 valid_mask.size(), static_cast<long long>(geometry.n_cells())));
        if (static_cast<int64_t>(band_names.size()) != n_bands)
            throw DataError("Raster: band_names length != n_bands");
        std::set<std::string> uniq(band_names.begin(), band_names.end());
        if (static_cast<int64_t>(uniq.size()) != n_bands)
            throw DataError("Raster: band_names must be unique");
        const int64_t cells = geometry.n_cells();
        for (int64_t c = 0; c < cells; ++c) {
            if (valid_mask[static_cast<size_t>(c)]) continue;
            for (int64_t b = 0; b < n_bands; ++b) {
                if (values[static_cast<size_t>(b * cells + c)] != nodata)
                    throw DataError(strf("Raster: invalid cell %lld band %lld does not hold nodata",
                                         static_cast<long long>(c), static_cast<long long>(b)));
            }
        }
    }

    bool operator==(const Raster& o) const = default;
};

using LabelRaster = Raster<std::uint8_t>;

} // namespace fwc
