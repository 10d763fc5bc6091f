#pragma once

// Stop-to-stop travel distances and times, fully materialized. Replaces the
// external route planning service: either euclidean over planar coordinates
// or a matrix loaded from JSON (asymmetric allowed, one-way streets).
//
// The triangle inequality is neither assumed nor enforced; nothing in this
// repo may rely on it.

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rvrp/model.hpp"

namespace rvrp {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TravelMatrix {
    std::vector<std::string> ids;  // location ids in row order
    std::vector<std::vector<Meters>> dist;
    std::vector<std::vector<Seconds>> time;

    int size() const { return static_cast<int>(dist.size()); }
    Meters d(int i, int j) const { return dist[i][j]; }
    Seconds t(int i, int j) const { return time[i][j]; }

    void check() const {
        const std::size_t n = dist.size();
        if (time.size() != n) throw ShapeError("dist and time matrices differ in dimension");
        for (std::size_t i = 0; i < n; ++i) {
            if (dist[i].size() != n || time[i].size() != n)
                throw ShapeError("travel matrix is not square");
            if (dist[i][i] != 0 || time[i][i] != 0)
                throw DomainError("travel matrix diagonal must be zero");
            for (std::size_t j = 0; j < n; ++j)
                if (dist[i][j] < 0 || time[i][j] < 0)
                    throw DomainError("travel matrix entries must be non-negative");
        }
    }
};

inline TravelMatrix build_euclidean(const std::vector<Location>& locations, double speed_mps) {
    if (speed_mps <= 0.0) throw DomainError("speed must be positive");
    for (const auto& l : locations)
        if (!std::isfinite(l.x) || !std::isfinite(l.y))
            throw DomainError("location '" + l.id + "' has non-finite coordinates");

    const std::size_t n = locations.size();
    TravelMatrix m;
    m.ids.reserve(n);
    for (const auto& l : locations) m.ids.push_back(l.id);
    m.dist.assign(n, std::vector<Meters>(n, 0));
    m.time.assign(n, std::vector<Seconds>(n, 0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = locations[i].x - locations[j].x;
            const double dy = locations[i].y - locations[j].y;
            const Meters d = std::llround(std::hypot(dx, dy));
            const Seconds t = std::llround(static_cast<double>(d) / speed_mps);
            m.dist[i][j] = m.dist[j][i] = d;
            m.time[i][j] = m.time[j][i] = t;
        }
    return m;
}

inline TravelMatrix matrix_from_json(const nlohmann::json& j) {
    TravelMatrix m;
    try {
        if (j.contains("ids")) m.ids = j.at("ids").get<std::vector<std::string>>();
        m.dist = j.at("dist").get<std::vector<std::vector<Meters>>>();
        m.time = j.at("time").get<std::vector<std::vector<Seconds>>>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed travel matrix: ") + e.what());
    }
    m.check();
    if (!m.ids.empty() && m.ids.size() != m.dist.size())
        throw ShapeError("ids list does not match matrix dimension");
    return m;
}

inline TravelMatrix load_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open travel matrix file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed travel matrix JSON: ") + e.what());
    }
    return matrix_from_json(j);
}

// Builds the matrix named by the instance's distance descriptor.
inline TravelMatrix build_matrix(const Instance& inst) {
    if (inst.distance.type == "euclidean")
        return build_euclidean(inst.locations, inst.distance.speed_mps);
    if (inst.distance.type == "matrix") return load_matrix(inst.distance.path);
    throw DomainError("unknown distance source '" + inst.distance.type + "'");
}

}  // namespace rvrp
