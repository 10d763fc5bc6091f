#pragma once

// JSON serialization for instances, solutions, scores and schedules. Times
// are accepted as integer seconds or "HH:MM"/"HH:MM:SS" strings; output is
// canonical integer seconds. Volumes are cubic meters in JSON and liters
// internally.

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "rvrp/model.hpp"
#include "rvrp/score.hpp"
#include "rvrp/timeline.hpp"

namespace rvrp {

using nlohmann::json;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline Seconds parse_time(const json& j, const std::string& ctx) {
    if (j.is_number_integer()) return j.get<Seconds>();
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        int h = 0, min = 0, sec = 0;
        char c1 = 0, c2 = 0;
        std::istringstream in(s);
        if (in >> h >> c1 >> min && c1 == ':') {
            if (in >> c2 >> sec && c2 != ':') throw IoError(ctx + ": bad time '" + s + "'");
            return static_cast<Seconds>(h) * 3600 + static_cast<Seconds>(min) * 60 + sec;
        }
    }
    throw IoError(ctx + ": expected seconds or \"HH:MM\"");
}

namespace io_detail {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    return j.at(key).get<T>();
}

inline std::set<std::string> get_str_set(const json& j, const char* key) {
    std::set<std::string> out;
    if (j.contains(key))
        for (const auto& e : j.at(key)) out.insert(e.get<std::string>());
    return out;
}

}  // namespace io_detail

inline json to_json(const TimeWindow& tw) { return {{"start", tw.start}, {"end", tw.end}}; }

inline TimeWindow time_window_from_json(const json& j, const std::string& ctx) {
    return {parse_time(j.at("start"), ctx), parse_time(j.at("end"), ctx)};
}

inline json to_json(const Load& l) {
    return {{"pieces", l.pieces}, {"volume", static_cast<double>(l.liters) / 1000.0},
            {"weight", l.kg}};
}

inline Load load_from_json(const json& j) {
    Load l;
    l.pieces = io_detail::get_or<std::int64_t>(j, "pieces", 0);
    l.liters = std::llround(io_detail::get_or<double>(j, "volume", 0.0) * 1000.0);
    l.kg = io_detail::get_or<std::int64_t>(j, "weight", 0);
    return l;
}

inline json to_json(const Dims& d) {
    return {{"height", d.height_cm}, {"width", d.width_cm}, {"length", d.length_cm},
            {"weight", d.weight_kg}};
}

inline Dims dims_from_json(const json& j) {
    return {io_detail::get_or<std::int64_t>(j, "height", 0),
            io_detail::get_or<std::int64_t>(j, "width", 0),
            io_detail::get_or<std::int64_t>(j, "length", 0),
            io_detail::get_or<std::int64_t>(j, "weight", 0)};
}

inline json instance_to_json(const Instance& inst) {
    json j;
    j["locations"] = json::array();
    for (const auto& l : inst.locations)
        j["locations"].push_back({{"id", l.id}, {"x", l.x}, {"y", l.y}});

    j["vehicles"] = json::array();
    for (const auto& v : inst.vehicles) {
        json e{{"id", v.id},
               {"capacity", to_json(v.capacity)},
               {"dims", to_json(v.dims)},
               {"cost_rates",
                {{"per_hour", v.cost_rates.per_hour},
                 {"per_km", v.cost_rates.per_km},
                 {"per_tour", v.cost_rates.per_tour},
                 {"per_stop", v.cost_rates.per_stop}}},
               {"max_tour_duration", v.max_tour_duration},
               {"start_options", v.start_options},
               {"end_options", v.end_options},
               {"tour_start_window", to_json(v.tour_start_window)},
               {"tour_end_limit", v.tour_end_limit},
               {"trailer_allowed", v.trailer_allowed},
               {"hazmat_capable", v.hazmat_capable},
               {"fast_loading", v.fast_loading},
               {"can_wait", v.can_wait},
               {"allow_return", v.allow_return}};
        if (!v.groups.empty()) e["groups"] = v.groups;
        j["vehicles"].push_back(std::move(e));
    }

    j["trailers"] = json::array();
    for (const auto& t : inst.trailers)
        j["trailers"].push_back(
            {{"id", t.id}, {"capacity", to_json(t.capacity)}, {"dims", to_json(t.dims)}});

    j["drivers"] = json::array();
    for (const auto& d : inst.drivers) {
        json e{{"id", d.id}};
        if (!d.certificates.empty()) e["certificates"] = d.certificates;
        j["drivers"].push_back(std::move(e));
    }

    j["orders"] = json::array();
    for (const auto& o : inst.orders) {
        json e{{"id", o.id},
               {"demand", to_json(o.demand)},
               {"pickup_options", o.pickup_options},
               {"delivery_location", o.delivery_location},
               {"service_duration_pickup", o.service_duration_pickup},
               {"service_duration_delivery", o.service_duration_delivery}};
        if (o.tw_pickup) e["tw_pickup"] = to_json(*o.tw_pickup);
        if (o.tw_delivery) e["tw_delivery"] = to_json(*o.tw_delivery);
        if (o.needs_codriver) e["needs_codriver"] = true;
        if (o.required_driver) e["required_driver"] = *o.required_driver;
        if (!o.required_certificates.empty())
            e["required_certificates"] = o.required_certificates;
        if (!o.colocated_with.empty()) e["colocated_with"] = o.colocated_with;
        if (!o.not_colocated_with.empty()) e["not_colocated_with"] = o.not_colocated_with;
        if (o.max_vehicle_dims) e["max_vehicle_dims"] = to_json(*o.max_vehicle_dims);
        if (o.required_vehicle_group) e["required_vehicle_group"] = *o.required_vehicle_group;
        if (o.hazardous) e["hazardous"] = true;
        if (o.split_allowed) e["split_allowed"] = true;
        if (o.fast_loading_modifier > 0.0)
            e["fast_loading_modifier"] = o.fast_loading_modifier;
        j["orders"].push_back(std::move(e));
    }

    j["pause_rules"] = json::array();
    for (const auto& r : inst.pause_rules)
        j["pause_rules"].push_back({{"window", to_json(r.window)}, {"duration", r.duration}});

    j["max_runtime_s"] = inst.max_runtime;
    json dist{{"type", inst.distance.type}};
    if (inst.distance.type == "euclidean") dist["speed_mps"] = inst.distance.speed_mps;
    if (!inst.distance.path.empty()) dist["path"] = inst.distance.path;
    j["distance"] = std::move(dist);
    return j;
}

inline Instance instance_from_json(const json& j) {
    Instance inst;
    for (const auto& e : j.value("locations", json::array()))
        inst.locations.push_back(
            {e.at("id").get<std::string>(), e.at("x").get<double>(), e.at("y").get<double>()});

    for (const auto& e : j.value("vehicles", json::array())) {
        Vehicle v;
        v.id = e.at("id").get<std::string>();
        const std::string ctx = "vehicle '" + v.id + "'";
        if (e.contains("capacity")) v.capacity = load_from_json(e.at("capacity"));
        if (e.contains("dims")) v.dims = dims_from_json(e.at("dims"));
        if (e.contains("cost_rates")) {
            const auto& r = e.at("cost_rates");
            v.cost_rates = {io_detail::get_or<double>(r, "per_hour", 0.0),
                            io_detail::get_or<double>(r, "per_km", 0.0),
                            io_detail::get_or<double>(r, "per_tour", 0.0),
                            io_detail::get_or<double>(r, "per_stop", 0.0)};
        }
        if (e.contains("max_tour_duration"))
            v.max_tour_duration = parse_time(e.at("max_tour_duration"), ctx);
        v.start_options = e.at("start_options").get<std::vector<std::string>>();
        v.end_options = e.at("end_options").get<std::vector<std::string>>();
        if (e.contains("tour_start_window"))
            v.tour_start_window = time_window_from_json(e.at("tour_start_window"), ctx);
        if (e.contains("tour_end_limit"))
            v.tour_end_limit = parse_time(e.at("tour_end_limit"), ctx);
        v.trailer_allowed = io_detail::get_or(e, "trailer_allowed", false);
        v.hazmat_capable = io_detail::get_or(e, "hazmat_capable", false);
        v.fast_loading = io_detail::get_or(e, "fast_loading", false);
        v.can_wait = io_detail::get_or(e, "can_wait", true);
        v.allow_return = io_detail::get_or(e, "allow_return", true);
        v.groups = io_detail::get_str_set(e, "groups");
        inst.vehicles.push_back(std::move(v));
    }

    for (const auto& e : j.value("trailers", json::array())) {
        Trailer t;
        t.id = e.at("id").get<std::string>();
        if (e.contains("capacity")) t.capacity = load_from_json(e.at("capacity"));
        if (e.contains("dims")) t.dims = dims_from_json(e.at("dims"));
        inst.trailers.push_back(std::move(t));
    }

    for (const auto& e : j.value("drivers", json::array()))
        inst.drivers.push_back(
            {e.at("id").get<std::string>(), io_detail::get_str_set(e, "certificates")});

    for (const auto& e : j.value("orders", json::array())) {
        Order o;
        o.id = e.at("id").get<std::string>();
        const std::string ctx = "order '" + o.id + "'";
        o.demand = load_from_json(e.at("demand"));
        o.pickup_options = e.at("pickup_options").get<std::vector<std::string>>();
        o.delivery_location = e.at("delivery_location").get<std::string>();
        if (e.contains("service_duration_pickup"))
            o.service_duration_pickup = parse_time(e.at("service_duration_pickup"), ctx);
        if (e.contains("service_duration_delivery"))
            o.service_duration_delivery = parse_time(e.at("service_duration_delivery"), ctx);
        if (e.contains("tw_pickup") && !e.at("tw_pickup").is_null())
            o.tw_pickup = time_window_from_json(e.at("tw_pickup"), ctx);
        if (e.contains("tw_delivery") && !e.at("tw_delivery").is_null())
            o.tw_delivery = time_window_from_json(e.at("tw_delivery"), ctx);
        o.needs_codriver = io_detail::get_or(e, "needs_codriver", false);
        if (e.contains("required_driver") && !e.at("required_driver").is_null())
            o.required_driver = e.at("required_driver").get<std::string>();
        o.required_certificates = io_detail::get_str_set(e, "required_certificates");
        o.colocated_with = io_detail::get_str_set(e, "colocated_with");
        o.not_colocated_with = io_detail::get_str_set(e, "not_colocated_with");
        if (e.contains("max_vehicle_dims") && !e.at("max_vehicle_dims").is_null())
            o.max_vehicle_dims = dims_from_json(e.at("max_vehicle_dims"));
        if (e.contains("required_vehicle_group") && !e.at("required_vehicle_group").is_null())
            o.required_vehicle_group = e.at("required_vehicle_group").get<std::string>();
        o.hazardous = io_detail::get_or(e, "hazardous", false);
        o.split_allowed = io_detail::get_or(e, "split_allowed", false);
        o.fast_loading_modifier = io_detail::get_or(e, "fast_loading_modifier", 0.0);
        inst.orders.push_back(std::move(o));
    }

    for (const auto& e : j.value("pause_rules", json::array()))
        inst.pause_rules.push_back({time_window_from_json(e.at("window"), "pause rule"),
                                    parse_time(e.at("duration"), "pause rule")});

    inst.max_runtime = io_detail::get_or<Seconds>(j, "max_runtime_s", 60);
    if (j.contains("distance")) {
        const auto& d = j.at("distance");
        inst.distance.type = io_detail::get_or<std::string>(d, "type", "euclidean");
        inst.distance.speed_mps = io_detail::get_or<double>(d, "speed_mps", 10.0);
        inst.distance.path = io_detail::get_or<std::string>(d, "path", "");
    }
    return inst;
}

inline Instance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open instance file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("malformed instance JSON: " + std::string(e.what()));
    }
    try {
        return instance_from_json(j);
    } catch (const json::exception& e) {
        throw IoError("bad instance: " + std::string(e.what()));
    }
}

inline void save_instance(const Instance& inst, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write instance file '" + path + "'");
    out << instance_to_json(inst).dump(2) << '\n';
}

// [h1,...,s3] with null for levels behind the short-circuit
inline json score_to_json(const Score& s) {
    json arr = json::array();
    for (int i = 1; i <= 6; ++i) {
        const std::int64_t v = s.level(i);
        if (v == kNotEvaluated)
            arr.push_back(nullptr);
        else
            arr.push_back(v);
    }
    return arr;
}

inline Score score_from_json(const json& arr) {
    Score s;
    std::int64_t* fields[6] = {&s.h1, &s.h2, &s.h3, &s.s1, &s.s2, &s.s3};
    for (int i = 0; i < 6; ++i)
        *fields[i] = arr.at(static_cast<std::size_t>(i)).is_null()
                         ? kNotEvaluated
                         : arr.at(static_cast<std::size_t>(i)).get<std::int64_t>();
    return s;
}

inline json solution_to_json(const Problem& p, const Solution& sol) {
    json chains = json::object();
    json drivers = json::object();
    for (int v = 0; v < p.num_vehicles(); ++v) {
        json chain = json::array();
        for (const auto& sv : sol.chains[v])
            chain.push_back({{"stop", p.stops[sv.stop].id}, {"option", sv.option}});
        chains[p.inst->vehicles[v].id] = std::move(chain);
        json team = json::array();
        if (v < static_cast<int>(sol.drivers.size()))
            for (int d : sol.drivers[v]) team.push_back(p.inst->drivers[d].id);
        drivers[p.inst->vehicles[v].id] = std::move(team);
    }
    return {{"chains", std::move(chains)}, {"drivers", std::move(drivers)}};
}

inline Solution solution_from_json(const Problem& p, const json& j) {
    Solution sol;
    sol.chains.resize(p.inst->vehicles.size());
    sol.drivers.resize(p.inst->vehicles.size());
    for (const auto& [vid, chain] : j.at("chains").items()) {
        const int v = p.vehicle_index.at(vid);
        for (const auto& e : chain)
            sol.chains[v].push_back(StopVisit{p.stop_index.at(e.at("stop").get<std::string>()),
                                              e.at("option").get<int>()});
    }
    if (j.contains("drivers"))
        for (const auto& [vid, team] : j.at("drivers").items()) {
            const int v = p.vehicle_index.at(vid);
            for (const auto& d : team)
                sol.drivers[v].push_back(p.driver_index.at(d.get<std::string>()));
        }
    return sol;
}

inline json schedule_to_json(const Problem& p, const ScheduledTour& tour) {
    json visits = json::array();
    for (const auto& sv : tour.visits)
        visits.push_back({{"stop", p.stops[sv.visit.stop].id},
                          {"option", sv.visit.option},
                          {"location", p.inst->locations[p.loc_of(sv.visit)].id},
                          {"arrival", sv.arrival},
                          {"service_start", sv.service_start},
                          {"service_end", sv.service_end},
                          {"wait_before", sv.wait_before}});
    json pauses = json::array();
    for (const auto& [a, b] : tour.pauses) pauses.push_back({a, b});
    return {{"vehicle", p.inst->vehicles[tour.vehicle].id},
            {"start_time", tour.start_time},
            {"end_time", tour.end_time},
            {"duration", tour.duration},
            {"visits", std::move(visits)},
            {"pauses", std::move(pauses)},
            {"total_drive", tour.total_drive},
            {"total_wait", tour.total_wait},
            {"total_service", tour.total_service},
            {"total_dist", tour.total_dist},
            {"distinct_locations", tour.distinct_locations},
            {"chain_length", tour.chain_length},
            {"tw_penalty", tour.tw_penalty}};
}

}  // namespace rvrp
