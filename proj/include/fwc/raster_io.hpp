#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fwc/raster.hpp"

namespace fwc {

// Flat raster format: a JSON sidecar header `<base>.hdr.json` plus a raw
// little-endian payload `<base>.bin`, bands concatenated, each row-major.
// `path` may be the base or the header path.

namespace detail {

inline std::string raster_base(const std::string& path) {
    const std::string suffix = ".hdr.json";
    if (path.size() > suffix.size() && path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0)
        return path.substr(0, path.size() - suffix.size());
    return path;
}

template <typename T>
const char* dtype_tag();
template <>
inline const char* dtype_tag<float>() { return "f32"; }
template <>
inline const char* dtype_tag<std::uint8_t>() { return "u8"; }

inline void append_le(std::vector<char>& out, float v) {
    const std::uint32_t u = std::bit_cast<std::uint32_t>(v);
    out.push_back(static_cast<char>(u & 0xff));
    out.push_back(static_cast<char>((u >> 8) & 0xff));
    out.push_back(static_cast<char>((u >> 16) & 0xff));
    out.push_back(static_cast<char>((u >> 24) & 0xff));
}

inline void append_le(std::vector<char>& out, std::uint8_t v) {
    out.push_back(static_cast<char>(v));
}

inline float read_le_f32(const char* p) {
    std::uint32_t u = static_cast<std::uint8_t>(p[0]) |
                      (static_cast<std::uint32_t>(static_cast<std::uint8_t>(p[1])) << 8) |
                      (static_cast<std::uint32_t>(static_cast<std::uint8_t>(p[2])) << 16) |
                      (static_cast<std::uint32_t>(static_cast<std::uint8_t>(p[3])) << 24);
    return std::bit_cast<float>(u);
}

inline void write_file_atomic(const std::string& path, const std::string& bytes) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw DataError("cannot open for writing: " + tmp);
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!f) throw DataError("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

inline void write_file_atomic(const std::string& path, const std::vector<char>& bytes) {
    write_file_atomic(path, std::string(bytes.begin(), bytes.end()));
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open: " + path);
    std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return data;
}

} // namespace detail

template <typename T>
void save_raster(const Raster<T>& grid, const std::string& path) {
    grid.validate(); // refuse before touching the filesystem

    const std::string base = detail::raster_base(path);
    nlohmann::ordered_json hdr;
    hdr["origin_x"] = grid.geometry.origin_x;
    hdr["origin_y"] = grid.geometry.origin_y;
    hdr["pixel_size_x"] = grid.geometry.pixel_size_x;
    hdr["pixel_size_y"] = grid.geometry.pixel_size_y;
    hdr["n_rows"] = grid.geometry.n_rows;
    hdr["n_cols"] = grid.geometry.n_cols;
    hdr["n_bands"] = grid.n_bands;
    hdr["dtype"] = detail::dtype_tag<T>();
    hdr["nodata"] = grid.nodata;
    hdr["band_names"] = grid.band_names;

    std::vector<char> payload;
    payload.reserve(grid.values.size() * sizeof(T));
    for (const T v : grid.values) detail::append_le(payload, v);

    detail::write_file_atomic(base + ".hdr.json", hdr.dump(2) + "\n");
    detail::write_file_atomic(base + ".bin", payload);
}

template <typename T>
Raster<T> load_raster(const std::string& path) {
    const std::string base = detail::raster_base(path);
    nlohmann::json hdr;
    try {
        hdr = nlohmann::json::parse(detail::read_file(base + ".hdr.json"));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(strf("unparseable raster header %s: %s", (base + ".hdr.json").c_str(), e.what()));
    }

    Raster<T> grid;
    try {
        grid.geometry.origin_x = hdr.at("origin_x").get<double>();
        grid.geometry.origin_y = hdr.at("origin_y").get<double>();
        grid.geometry.pixel_size_x = hdr.at("pixel_size_x").get<double>();
        grid.geometry.pixel_size_y = hdr.at("pixel_size_y").get<double>();
        grid.geometry.n_rows = hdr.at("n_rows").get<int64_t>();
        grid.geometry.n_cols = hdr.at("n_cols").get<int64_t>();
        grid.n_bands = hdr.at("n_bands").get<int64_t>();
        const std::string dtype = hdr.at("dtype").get<std::string>();
        if (dtype != detail::dtype_tag<T>()) {
            if (dtype != "f32" && dtype != "u8")
                throw DataError(strf("unknown dtype tag '%s' in %s", dtype.c_str(), base.c_str()));
            throw DataError(strf("raster %s has dtype %s, expected %s", base.c_str(), dtype.c_str(),
                                 detail::dtype_tag<T>()));
        }
        grid.nodata = hdr.at("nodata").get<T>();
        grid.band_names = hdr.at("band_names").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(strf("raster header %s missing or mistyped fields: %s", base.c_str(), e.what()));
    }
    grid.geometry.validate();
    if (grid.n_bands < 1) throw DataError("raster header: n_bands must be >= 1");

    const std::string payload = detail::read_file(base + ".bin");
    const size_t expected = static_cast<size_t>(grid.n_bands * grid.geometry.n_cells()) * sizeof(T);
    if (payload.size() != expected)
        throw DataError(strf("raster payload %s.bin is %zu bytes, expected %zu", base.c_str(),
                             payload.size(), expected));

    const int64_t cells = grid.geometry.n_cells();
    grid.values.resize(static_cast<size_t>(grid.n_bands * cells));
    if constexpr (std::is_same_v<T, float>) {
        for (size_t i = 0; i < grid.values.size(); ++i)
            grid.values[i] = detail::read_le_f32(payload.data() + i * 4);
    } else {
        std::memcpy(grid.values.data(), payload.data(), payload.size());
    }

    // The mask is not stored separately: a cell is invalid iff every band
    // holds the sentinel. save_raster burns the sentinel in, so this
    // round-trips (valid cells never carry the sentinel in all bands).
    grid.valid_mask.assign(static_cast<size_t>(cells), 0);
    for (int64_t c = 0; c < cells; ++c) {
        bool all_nodata = true;
        for (int64_t b = 0; b < grid.n_bands && all_nodata; ++b)
            all_nodata = grid.values[static_cast<size_t>(b * cells + c)] == grid.nodata;
        grid.valid_mask[static_cast<size_t>(c)] = all_nodata ? 0 : 1;
    }
    grid.burn_nodata();
    grid.validate();
    return grid;
}

// dtype tag of a stored raster, for dispatching without loading the payload.
inline std::string raster_dtype(const std::string& path) {
    const std::string base = detail::raster_base(path);
    nlohmann::json hdr;
    try {
        hdr = nlohmann::json::parse(detail::read_file(base + ".hdr.json"));
        return hdr.at("dtype").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(strf("unparseable raster header %s: %s", base.c_str(), e.what()));
    }
}

} // namespace fwc
