#pragma once

#include "mmpt/space.hpp"

#include <json.hpp>

#include <map>
#include <string>

namespace mmpt {

using Json = nlohmann::json;

/// A space together with its named point sets ("E", "F", "K", ...).
struct SpaceDocument {
    MetricMeasureSpace space;
    std::map<std::string, PointSet> sets;

    const PointSet& set(const std::string& name) const;
    bool has_set(const std::string& name) const { return sets.count(name) != 0; }
};

SetRole role_from_name(const std::string& name);

SpaceDocument parse_space(const Json& doc);
Json space_to_json(const SpaceDocument& doc);

SpaceDocument load_space(const std::string& path);
void save_space(const std::string& path, const SpaceDocument& doc);

Json read_json_file(const std::string& path);

/// Writes `content` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& content);

PointSet parse_point_set(const Json& ids, std::size_t n, const std::string& what);
std::vector<double> parse_field(const Json& values, std::size_t n, const std::string& what);

} // namespace mmpt
