#pragma once

#include <cmath>
#include <cstdint>

#include "fwc/common.hpp"

namespace fwc {

// Affine grid in a shared projected coordinate space (meter units).
// (origin_x, origin_y) is the map position of the top-left corner; rows
// increase southward, so pixel_size_y is stored positive.
struct GridGeometry {
    double origin_x = 0.0;
    double origin_y = 0.0;
    double pixel_size_x = 1.0;
    double pixel_size_y = 1.0;
    int64_t n_rows = 0;
    int64_t n_cols = 0;

    int64_t n_cells() const { return n_rows * n_cols; }

    double center_x(int64_t col) const { return origin_x + (static_cast<double>(col) + 0.5) * pixel_size_x; }
    double center_y(int64_t row) const { return origin_y - (static_cast<double>(row) + 0.5) * pixel_size_y; }

    // Containing cell of a map point. Cells are half-open: the left and top
    // edges belong to the cell, the right and bottom edges to its neighbour.
    int64_t col_of(double x) const { return static_cast<int64_t>(std::floor((x - origin_x) / pixel_size_x)); }
    int64_t row_of(double y) const { return static_cast<int64_t>(std::floor((origin_y - y) / pixel_size_y)); }

    bool contains(int64_t row, int64_t col) const {
        return row >= 0 && row < n_rows && col >= 0 && col < n_cols;
    }

    double x_min() const { return origin_x; }
    double x_max() const { return origin_x + static_cast<double>(n_cols) * pixel_size_x; }
    double y_max() const { return origin_y; }
    double y_min() const { return origin_y - static_cast<double>(n_rows) * pixel_size_y; }

    void validate() const {
        if (!(pixel_size_x > 0.0) || !(pixel_size_y > 0.0))
            throw DataError("GridGeometry: pixel sizes must be positive");
        if (n_rows < 1 || n_cols < 1)
            throw DataError("GridGeometry: n_rows and n_cols must be >= 1");
    }

    bool operator==(const GridGeometry& o) const = default;
};

} // namespace fwc
