#include "mmpt/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace mmpt {

const PointSet& SpaceDocument::set(const std::string& name) const {
    auto it = sets.find(name);
    if (it == sets.end()) throw Error(ErrorKind::Schema, "space document has no set \"" + name + "\"");
    return it->second;
}

SetRole role_from_name(const std::string& name) {
    if (name == "E") return SetRole::E;
    if (name == "F") return SetRole::F;
    if (name == "K") return SetRole::K;
    if (name == "C") return SetRole::C;
    if (name == "V") return SetRole::V;
    return SetRole::Generic;
}

PointSet parse_point_set(const Json& ids, std::size_t n, const std::string& what) {
    if (!ids.is_array()) throw Error(ErrorKind::Schema, what + " must be an array of point ids");
    std::vector<PointId> members;
    members.reserve(ids.size());
    for (const auto& v : ids) {
        if (!v.is_number_integer() || v.get<long long>() < 0) {
            throw Error(ErrorKind::Schema, what + " contains a non-integer or negative id");
        }
        auto id = v.get<std::size_t>();
        if (id >= n) {
            std::ostringstream os;
            os << what << " references point " << id << " but the space has " << n << " points";
            throw Error(ErrorKind::Validation, os.str());
        }
        members.push_back(id);
    }
    return PointSet(std::move(members));
}

std::vector<double> parse_field(const Json& values, std::size_t n, const std::string& what) {
    if (!values.is_array()) throw Error(ErrorKind::Schema, what + " must be an array of numbers");
    if (values.size() != n) {
        std::ostringstream os;
        os << what << " has " << values.size() << " entries, expected " << n;
        throw Error(ErrorKind::Schema, os.str());
    }
    std::vector<double> out;
    out.reserve(n);
    for (const auto& v : values) {
        if (!v.is_number()) throw Error(ErrorKind::Schema, what + " contains a non-numeric entry");
        out.push_back(v.get<double>());
    }
    return out;
}

namespace {

std::vector<std::vector<double>> parse_rows(const Json& rows, const std::string& what) {
    if (!rows.is_array()) throw Error(ErrorKind::Schema, what + " must be an array of arrays");
    std::vector<std::vector<double>> out;
    out.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!rows[i].is_array()) {
            throw Error(ErrorKind::Schema, what + " row " + std::to_string(i) + " is not an array");
        }
        out.push_back(parse_field(rows[i], rows[i].size(), what + " row " + std::to_string(i)));
    }
    return out;
}

} // namespace

SpaceDocument parse_space(const Json& doc) {
    if (!doc.is_object()) throw Error(ErrorKind::Schema, "space document must be a JSON object");
    if (!doc.contains("mass")) throw Error(ErrorKind::Schema, "space document is missing \"mass\"");
    const bool has_coords = doc.contains("coords");
    const bool has_dist = doc.contains("dist");
    if (has_coords == has_dist) {
        throw Error(ErrorKind::Schema, "exactly one of \"coords\" and \"dist\" is required");
    }
    const Json& mass_json = doc.at("mass");
    if (!mass_json.is_array()) throw Error(ErrorKind::Schema, "\"mass\" must be an array");
    std::vector<double> mass = parse_field(mass_json, mass_json.size(), "mass");

    SpaceDocument out;
    if (has_coords) {
        out.space = MetricMeasureSpace::from_coords(parse_rows(doc.at("coords"), "coords"), std::move(mass));
    } else {
        out.space = MetricMeasureSpace::from_matrix(parse_rows(doc.at("dist"), "dist"), std::move(mass));
    }
    if (doc.contains("points")) {
        const Json& pts = doc.at("points");
        if (!pts.is_number_integer() || pts.get<long long>() != static_cast<long long>(out.space.size())) {
            throw Error(ErrorKind::Schema, "\"points\" does not match the number of points supplied");
        }
    }
    if (doc.contains("sets")) {
        const Json& sets = doc.at("sets");
        if (!sets.is_object()) throw Error(ErrorKind::Schema, "\"sets\" must be an object");
        for (auto it = sets.begin(); it != sets.end(); ++it) {
            PointSet s = parse_point_set(it.value(), out.space.size(), "set \"" + it.key() + "\"");
            out.sets.emplace(it.key(), s.with_role(role_from_name(it.key())));
        }
    }
    return out;
}

Json space_to_json(const SpaceDocument& doc) {
    const MetricMeasureSpace& s = doc.space;
    Json j;
    j["points"] = s.size();
    if (s.has_coords()) {
        Json coords = Json::array();
        for (PointId x = 0; x < s.size(); ++x) {
            auto c = s.coord(x);
            coords.push_back(std::vector<double>(c.begin(), c.end()));
        }
        j["coords"] = std::move(coords);
    } else {
        Json rows = Json::array();
        for (PointId x = 0; x < s.size(); ++x) {
            std::vector<double> row(s.size());
            for (PointId y = 0; y < s.size(); ++y) row[y] = s.dist(x, y);
            rows.push_back(std::move(row));
        }
        j["dist"] = std::move(rows);
    }
    j["mass"] = s.masses();
    Json sets = Json::object();
    for (const auto& [name, set] : doc.sets) sets[name] = set.members();
    j["sets"] = std::move(sets);
    return j;
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Schema, "cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorKind::Schema, path + ": " + e.what());
    }
}

SpaceDocument load_space(const std::string& path) {
    return parse_space(read_json_file(path));
}

void save_space(const std::string& path, const SpaceDocument& doc) {
    write_file_atomic(path, space_to_json(doc).dump(1) + "\n");
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + tmp);
        out << content;
        out.flush();
        if (!out) throw Error(ErrorKind::InvalidArgument, "write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw Error(ErrorKind::InvalidArgument, "cannot rename " + tmp + " to " + path);
    }
}

} // namespace mmpt
