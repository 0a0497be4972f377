#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "fwc/common.hpp"

namespace fwc {

struct ClassEntry {
    std::uint8_t class_id = 0;
    std::string class_name;
    bool is_woody_target = false;

    bool operator==(const ClassEntry&) const = default;
};

// Ordered class legend for a label raster. The default legend carries the
// three woody target classes plus Grass, Soil and Shadow.
struct ClassLegend {
    std::vector<ClassEntry> entries;

    size_t size() const { return entries.size(); }

    int find_id(std::uint8_t class_id) const {
        for (size_t i = 0; i < entries.size(); ++i)
            if (entries[i].class_id == class_id) return static_cast<int>(i);
        return -1;
    }

    int find_name(const std::string& name) const {
        for (size_t i = 0; i < entries.size(); ++i)
            if (entries[i].class_name == name) return static_cast<int>(i);
        return -1;
    }

    std::vector<std::string> woody_target_names() const {
        std::vector<std::string> out;
        for (const auto& e : entries)
            if (e.is_woody_target) out.push_back(e.class_name);
        return out;
    }

    void validate() const {
        if (entries.empty()) throw DataError("ClassLegend: no entries");
        std::set<std::uint8_t> ids;
        std::set<std::string> names;
        for (const auto& e : entries) {
            if (!ids.insert(e.class_id).second)
                throw DataError(strf("ClassLegend: duplicate class_id %d", int(e.class_id)));
            if (!names.insert(e.class_name).second)
                throw DataError("ClassLegend: duplicate class_name " + e.class_name);
        }
    }

    bool operator==(const ClassLegend&) const = default;
};

inline ClassLegend default_legend() {
    return ClassLegend{{
        {0, "Grewia flava", true},
        {1, "Senegalia mellifera", true},
        {2, "Vachellia genus", true},
        {3, "Grass", false},
        {4, "Soil", false},
        {5, "Shadow", false},
    }};
}

inline void save_legend(const ClassLegend& legend, const std::string& path) {
    legend.validate();
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& e : legend.entries)
        j.push_back({{"id", e.class_id}, {"name", e.class_name}, {"woody_target", e.is_woody_target}});
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("cannot open for writing: " + path);
    f << j.dump(2) << "\n";
}

inline ClassLegend load_legend(const std::string& path) {
    ClassLegend legend;
    try {
        std::ifstream f(path);
        if (!f) throw DataError("cannot open: " + path);
        nlohmann::json j = nlohmann::json::parse(f);
        for (const auto& item : j) {
            ClassEntry e;
            e.class_id = static_cast<std::uint8_t>(item.at("id").get<int>());
            e.class_name = item.at("name").get<std::string>();
            e.is_woody_target = item.at("woody_target").get<bool>();
            legend.entries.push_back(e);
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(strf("unparseable legend %s: %s", path.c_str(), e.what()));
    }
    legend.validate();
    return legend;
}

} // namespace fwc
