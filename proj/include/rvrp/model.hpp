#pragma once

// Domain model of the rich VRP: locations, vehicles, trailers, drivers,
// orders, stops, chains and solutions, plus instance validation, stop
// expansion and greedy driver assignment.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace rvrp {

using Seconds = std::int64_t;
using Meters = std::int64_t;

// All times are integer seconds since midnight of the planning day; the
// horizon allows spill into the next day.
inline constexpr Seconds kHorizon = 172800;

struct Location {
    std::string id;
    double x = 0.0;  // planar meters
    double y = 0.0;
};

struct TimeWindow {
    Seconds start = 0;
    Seconds end = 0;
    Seconds length() const { return end - start; }
};

struct PauseRule {
    TimeWindow window;
    Seconds duration = 0;  // fixed pauses fill their window
};

// Load in the three capacity dimensions. Volume is carried in liters so the
// three magnitudes are comparable integers.
struct Load {
    std::int64_t pieces = 0;
    std::int64_t liters = 0;
    std::int64_t kg = 0;

    Load& operator+=(const Load& o) {
        pieces += o.pieces;
        liters += o.liters;
        kg += o.kg;
        return *this;
    }
    Load& operator-=(const Load& o) {
        pieces -= o.pieces;
        liters -= o.liters;
        kg -= o.kg;
        return *this;
    }
    void max_with(const Load& o) {
        pieces = std::max(pieces, o.pieces);
        liters = std::max(liters, o.liters);
        kg = std::max(kg, o.kg);
    }
    bool fits_in(const Load& cap) const {
        return pieces <= cap.pieces && liters <= cap.liters && kg <= cap.kg;
    }
    // sum of per-dimension overflow, each clamped at zero
    std::int64_t excess_over(const Load& cap) const {
        return std::max<std::int64_t>(pieces - cap.pieces, 0) +
               std::max<std::int64_t>(liters - cap.liters, 0) +
               std::max<std::int64_t>(kg - cap.kg, 0);
    }
};

inline Load operator+(Load a, const Load& b) { return a += b; }

struct Dims {
    std::int64_t height_cm = 0;
    std::int64_t width_cm = 0;
    std::int64_t length_cm = 0;
    std::int64_t weight_kg = 0;

    bool within(const Dims& limit) const {
        return height_cm <= limit.height_cm && width_cm <= limit.width_cm &&
               length_cm <= limit.length_cm && weight_kg <= limit.weight_kg;
    }
};

struct CostRates {
    double per_hour = 0.0;
    double per_km = 0.0;
    double per_tour = 0.0;
    double per_stop = 0.0;
};

struct Vehicle {
    std::string id;
    Load capacity;
    Dims dims;
    CostRates cost_rates;
    Seconds max_tour_duration = kHorizon;
    std::vector<std::string> start_options;
    std::vector<std::string> end_options;
    TimeWindow tour_start_window;
    Seconds tour_end_limit = kHorizon;
    bool trailer_allowed = false;
    bool hazmat_capable = false;
    bool fast_loading = false;
    bool can_wait = true;
    bool allow_return = true;
    std::set<std::string> groups;
};

struct Trailer {
    std::string id;
    Load capacity;
    Dims dims;
};

struct Driver {
    std::string id;
    std::set<std::string> certificates;
};

struct Order {
    std::string id;
    Load demand;
    std::vector<std::string> pickup_options;
    std::string delivery_location;
    Seconds service_duration_pickup = 0;
    Seconds service_duration_delivery = 0;
    std::optional<TimeWindow> tw_pickup;
    std::optional<TimeWindow> tw_delivery;
    bool needs_codriver = false;
    std::optional<std::string> required_driver;
    std::set<std::string> required_certificates;
    std::set<std::string> colocated_with;
    std::set<std::string> not_colocated_with;
    std::optional<Dims> max_vehicle_dims;
    std::optional<std::string> required_vehicle_group;
    bool hazardous = false;
    bool split_allowed = false;
    double fast_loading_modifier = 0.0;  // fraction of service time saved on fast loaders
};

enum class StopKind { Pickup, Delivery, TourBegin, TourEnd, Pause };

struct Stop {
    std::string id;
    std::string order;  // empty for tour stops
    StopKind kind = StopKind::Pickup;
    std::vector<std::string> options;  // candidate location ids
    Seconds service_duration = 0;
    std::optional<TimeWindow> tw;
    bool split_allowed = false;
    double fast_loading_modifier = 0.0;
};

// One scheduled visit: a stop plus the chosen location option.
struct StopVisit {
    int stop = 0;    // index into Problem::stops
    int option = 0;  // index into Stop::options

    friend bool operator==(const StopVisit&, const StopVisit&) = default;
};

using Chain = std::vector<StopVisit>;

// Assignment of all stops to vehicles. Chains are bracketed by the vehicle's
// TourBegin/TourEnd visits; a chain with no pickup/delivery visit is an
// unoperated tour and contributes nothing to any score level.
struct Solution {
    std::vector<Chain> chains;              // by vehicle index
    std::vector<std::vector<int>> drivers;  // driver indices per vehicle (0-2)
};

struct DistanceSpec {
    std::string type = "euclidean";  // "euclidean" | "matrix"
    double speed_mps = 10.0;
    std::string path;  // for type "matrix"
};

struct Instance {
    std::vector<Location> locations;
    std::vector<Vehicle> vehicles;
    std::vector<Trailer> trailers;
    std::vector<Driver> drivers;
    std::vector<Order> orders;
    std::vector<PauseRule> pause_rules;
    Seconds max_runtime = 60;
    DistanceSpec distance;
};

struct ValidationError {
    std::string code;  // unresolved-reference | duplicate-id | contradiction | domain
    std::string message;
};

namespace detail {

template <typename T>
void check_unique_ids(const std::vector<T>& items, const char* what,
                      std::vector<ValidationError>& out) {
    std::set<std::string> seen;
    for (const auto& it : items) {
        if (!seen.insert(it.id).second)
            out.push_back({"duplicate-id", std::string(what) + " id '" + it.id + "' is not unique"});
    }
}

}  // namespace detail

inline std::vector<ValidationError> validate_instance(const Instance& inst) {
    std::vector<ValidationError> errs;
    std::set<std::string> locs, drivers, orders, groups;
    for (const auto& l : inst.locations) locs.insert(l.id);
    for (const auto& d : inst.drivers) drivers.insert(d.id);
    for (const auto& o : inst.orders) orders.insert(o.id);
    for (const auto& v : inst.vehicles)
        for (const auto& g : v.groups) groups.insert(g);

    detail::check_unique_ids(inst.locations, "location", errs);
    detail::check_unique_ids(inst.vehicles, "vehicle", errs);
    detail::check_unique_ids(inst.trailers, "trailer", errs);
    detail::check_unique_ids(inst.drivers, "driver", errs);
    detail::check_unique_ids(inst.orders, "order", errs);

    auto check_loc = [&](const std::string& id, const std::string& ctx) {
        if (!locs.count(id))
            errs.push_back({"unresolved-reference", ctx + " references unknown location '" + id + "'"});
    };
    auto check_tw = [&](const TimeWindow& tw, const std::string& ctx) {
        if (tw.start < 0 || tw.start > tw.end || tw.end > kHorizon)
            errs.push_back({"domain", ctx + " time window out of range"});
    };
    auto check_load = [&](const Load& l, const std::string& ctx) {
        if (l.pieces < 0 || l.liters < 0 || l.kg < 0)
            errs.push_back({"domain", ctx + " has a negative capacity component"});
    };

    for (const auto& l : inst.locations) {
        if (!std::isfinite(l.x) || !std::isfinite(l.y))
            errs.push_back({"domain", "location '" + l.id + "' has non-finite coordinates"});
    }
    for (const auto& v : inst.vehicles) {
        check_load(v.capacity, "vehicle '" + v.id + "'");
        if (v.start_options.empty())
            errs.push_back({"domain", "vehicle '" + v.id + "' has no start options"});
        if (v.end_options.empty())
            errs.push_back({"domain", "vehicle '" + v.id + "' has no end options"});
        for (const auto& s : v.start_options) check_loc(s, "vehicle '" + v.id + "'");
        for (const auto& s : v.end_options) check_loc(s, "vehicle '" + v.id + "'");
        check_tw(v.tour_start_window, "vehicle '" + v.id + "'");
        if (v.max_tour_duration <= 0)
            errs.push_back({"domain", "vehicle '" + v.id + "' max tour duration must be positive"});
    }
    for (const auto& t : inst.trailers) check_load(t.capacity, "trailer '" + t.id + "'");
    for (const auto& o : inst.orders) {
        const std::string ctx = "order '" + o.id + "'";
        check_load(o.demand, ctx);
        if (o.pickup_options.empty())
            errs.push_back({"domain", ctx + " has no pickup options"});
        for (const auto& p : o.pickup_options) check_loc(p, ctx);
        check_loc(o.delivery_location, ctx);
        if (o.tw_pickup) check_tw(*o.tw_pickup, ctx);
        if (o.tw_delivery) check_tw(*o.tw_delivery, ctx);
        if (o.required_driver && !drivers.count(*o.required_driver))
            errs.push_back({"unresolved-reference", ctx + " requires unknown driver '" + *o.required_driver + "'"});
        if (o.required_vehicle_group && !groups.count(*o.required_vehicle_group))
            errs.push_back({"unresolved-reference",
                            ctx + " requires vehicle group '" + *o.required_vehicle_group +
                                "' no vehicle belongs to"});
        for (const auto& c : o.colocated_with)
            if (!orders.count(c))
                errs.push_back({"unresolved-reference", ctx + " co-located with unknown order '" + c + "'"});
        for (const auto& c : o.not_colocated_with)
            if (!orders.count(c))
                errs.push_back({"unresolved-reference", ctx + " non-co-located with unknown order '" + c + "'"});
        std::vector<std::string> both;
        std::set_intersection(o.colocated_with.begin(), o.colocated_with.end(),
                              o.not_colocated_with.begin(), o.not_colocated_with.end(),
                              std::back_inserter(both));
        if (!both.empty())
            errs.push_back({"contradiction",
                            ctx + " lists order '" + both.front() + "' as both co-located and non-co-located"});
        if (o.fast_loading_modifier < 0.0 || o.fast_loading_modifier > 1.0)
            errs.push_back({"domain", ctx + " fast loading modifier outside [0,1]"});
    }
    for (const auto& p : inst.pause_rules) {
        check_tw(p.window, "pause rule");
        if (p.duration != p.window.length())
            errs.push_back({"domain", "pause rule duration does not fill its window"});
    }
    if (inst.vehicles.empty())
        errs.push_back({"domain", "instance has no vehicles"});
    if (inst.orders.empty())
        errs.push_back({"domain", "instance has no orders"});
    return errs;
}

// Emits exactly one pickup and one delivery stop per order, then one
// TourBegin/TourEnd stop per vehicle. Deterministic: stop ids and positions
// depend only on the instance.
inline std::vector<Stop> expand_stops(const Instance& inst) {
    std::vector<Stop> stops;
    stops.reserve(2 * inst.orders.size() + 2 * inst.vehicles.size());
    for (const auto& o : inst.orders) {
        Stop p;
        p.id = o.id + "#P";
        p.order = o.id;
        p.kind = StopKind::Pickup;
        p.options = o.pickup_options;
        p.service_duration = o.service_duration_pickup;
        p.tw = o.tw_pickup;
        p.split_allowed = o.split_allowed;
        p.fast_loading_modifier = o.fast_loading_modifier;
        stops.push_back(std::move(p));

        Stop d;
        d.id = o.id + "#D";
        d.order = o.id;
        d.kind = StopKind::Delivery;
        d.options = {o.delivery_location};
        d.service_duration = o.service_duration_delivery;
        d.tw = o.tw_delivery;
        d.split_allowed = o.split_allowed;
        d.fast_loading_modifier = o.fast_loading_modifier;
        stops.push_back(std::move(d));
    }
    for (const auto& v : inst.vehicles) {
        Stop b;
        b.id = v.id + "#begin";
        b.kind = StopKind::TourBegin;
        b.options = v.start_options;
        stops.push_back(std::move(b));

        Stop e;
        e.id = v.id + "#end";
        e.kind = StopKind::TourEnd;
        e.options = v.end_options;
        stops.push_back(std::move(e));
    }
    return stops;
}

// Indexed view of a validated instance; everything solvers touch in inner
// loops resolves to contiguous indices. Immutable after build().
struct Problem {
    const Instance* inst = nullptr;
    std::vector<Stop> stops;
    std::unordered_map<std::string, int> location_index;
    std::unordered_map<std::string, int> order_index;
    std::unordered_map<std::string, int> vehicle_index;
    std::unordered_map<std::string, int> driver_index;
    std::unordered_map<std::string, int> stop_index;
    std::vector<int> order_pickup;   // order idx -> stop idx
    std::vector<int> order_delivery; // order idx -> stop idx
    std::vector<int> vehicle_begin;  // vehicle idx -> stop idx
    std::vector<int> vehicle_end;    // vehicle idx -> stop idx
    std::vector<int> stop_order;     // stop idx -> order idx, -1 for tour stops
    std::vector<int> stop_vehicle;   // stop idx -> owning vehicle for tour stops, else -1
    std::vector<std::vector<int>> stop_option_loc;  // stop idx -> option -> location idx

    static Problem build(const Instance& inst) {
        Problem p;
        p.inst = &inst;
        for (std::size_t i = 0; i < inst.locations.size(); ++i)
            p.location_index[inst.locations[i].id] = static_cast<int>(i);
        for (std::size_t i = 0; i < inst.orders.size(); ++i)
            p.order_index[inst.orders[i].id] = static_cast<int>(i);
        for (std::size_t i = 0; i < inst.vehicles.size(); ++i)
            p.vehicle_index[inst.vehicles[i].id] = static_cast<int>(i);
        for (std::size_t i = 0; i < inst.drivers.size(); ++i)
            p.driver_index[inst.drivers[i].id] = static_cast<int>(i);

        p.stops = expand_stops(inst);
        p.order_pickup.assign(inst.orders.size(), -1);
        p.order_delivery.assign(inst.orders.size(), -1);
        p.vehicle_begin.assign(inst.vehicles.size(), -1);
        p.vehicle_end.assign(inst.vehicles.size(), -1);
        p.stop_order.assign(p.stops.size(), -1);
        p.stop_vehicle.assign(p.stops.size(), -1);
        p.stop_option_loc.resize(p.stops.size());
        for (std::size_t s = 0; s < p.stops.size(); ++s) {
            const Stop& st = p.stops[s];
            p.stop_index[st.id] = static_cast<int>(s);
            for (const auto& loc : st.options)
                p.stop_option_loc[s].push_back(p.location_index.at(loc));
            if (st.kind == StopKind::Pickup)
                p.order_pickup[p.order_index.at(st.order)] = static_cast<int>(s);
            else if (st.kind == StopKind::Delivery)
                p.order_delivery[p.order_index.at(st.order)] = static_cast<int>(s);
            else if (st.kind == StopKind::TourBegin || st.kind == StopKind::TourEnd) {
                const std::string vid = st.id.substr(0, st.id.rfind('#'));
                const int v = p.vehicle_index.at(vid);
                p.stop_vehicle[s] = v;
                (st.kind == StopKind::TourBegin ? p.vehicle_begin : p.vehicle_end)[v] =
                    static_cast<int>(s);
            }
            if (!st.order.empty()) p.stop_order[s] = p.order_index.at(st.order);
        }
        return p;
    }

    int num_orders() const { return static_cast<int>(inst->orders.size()); }
    int num_vehicles() const { return static_cast<int>(inst->vehicles.size()); }
    int num_stops() const { return static_cast<int>(stops.size()); }

    int loc_of(const StopVisit& v) const { return stop_option_loc[v.stop][v.option]; }
    bool is_service_stop(int stop) const {
        const auto k = stops[stop].kind;
        return k == StopKind::Pickup || k == StopKind::Delivery;
    }
    // serviced stops on a chain (pickup/delivery visits)
    int chain_service_count(const Chain& c) const {
        int n = 0;
        for (const auto& v : c) n += is_service_stop(v.stop) ? 1 : 0;
        return n;
    }

    Chain empty_chain(int vehicle) const {
        return {StopVisit{vehicle_begin[vehicle], 0}, StopVisit{vehicle_end[vehicle], 0}};
    }

    Solution empty_solution() const {
        Solution s;
        s.chains.reserve(inst->vehicles.size());
        for (int v = 0; v < num_vehicles(); ++v) s.chains.push_back(empty_chain(v));
        s.drivers.assign(inst->vehicles.size(), {});
        return s;
    }
};

// Requirements the driver team of one chain must cover.
struct DriverRequirements {
    bool needs_codriver = false;
    std::vector<int> required_drivers;                     // deduped driver indices
    std::vector<std::pair<int, std::string>> cert_needs;   // (order idx, certificate)
    bool empty() const {
        return !needs_codriver && required_drivers.empty() && cert_needs.empty();
    }
};

inline DriverRequirements chain_driver_requirements(const Problem& p, const Chain& chain) {
    DriverRequirements req;
    std::set<int> seen_orders, req_drivers;
    for (const auto& v : chain) {
        const int oi = p.stop_order[v.stop];
        if (oi < 0 || !seen_orders.insert(oi).second) continue;
        const Order& o = p.inst->orders[oi];
        if (o.needs_codriver) req.needs_codriver = true;
        if (o.required_driver) req_drivers.insert(p.driver_index.at(*o.required_driver));
        for (const auto& c : o.required_certificates) req.cert_needs.emplace_back(oi, c);
    }
    req.required_drivers.assign(req_drivers.begin(), req_drivers.end());
    return req;
}

// Unmet requirement count for a concrete team.
inline int driver_team_faults(const Problem& p, const DriverRequirements& req,
                              const std::vector<int>& team) {
    int faults = 0;
    for (int d : req.required_drivers)
        if (std::find(team.begin(), team.end(), d) == team.end()) ++faults;
    for (const auto& [oi, cert] : req.cert_needs) {
        (void)oi;
        bool covered = false;
        for (int d : team)
            if (p.inst->drivers[d].certificates.count(cert)) covered = true;
        if (!covered) ++faults;
    }
    if (req.needs_codriver && team.size() < 2) ++faults;
    return faults;
}

// Greedily staffs one chain from the unused driver pool: one driver, two if
// any order on the chain needs a co-driver. Among all teams minimizing the
// number of unmet requirements the lexicographically first (by driver index)
// is taken, so a requirement only counts as a fault when no free selection
// can satisfy it. Selected drivers are flagged in `used` (one driver never
// serves two vehicles within a solution). A non-empty chain left without any
// driver is itself one fault: the tour cannot legally run.
inline std::pair<std::vector<int>, int> assign_drivers(const Problem& p, const Chain& chain,
                                                       int /*vehicle*/,
                                                       std::vector<char>& used) {
    if (p.chain_service_count(chain) == 0) return {{}, 0};  // unoperated tour

    const int nd = static_cast<int>(p.inst->drivers.size());
    std::vector<int> pool;
    for (int d = 0; d < nd; ++d)
        if (!used[d]) pool.push_back(d);
    std::sort(pool.begin(), pool.end(), [&](int a, int b) {
        return p.inst->drivers[a].id < p.inst->drivers[b].id;  // first-fit by driver id
    });

    const DriverRequirements req = chain_driver_requirements(p, chain);
    const int want = req.needs_codriver ? 2 : 1;

    std::vector<int> best_team;
    int best_faults = -1;
    auto consider = [&](const std::vector<int>& team) {
        const int f = driver_team_faults(p, req, team);
        if (best_faults < 0 || f < best_faults) {
            best_faults = f;
            best_team = team;
        }
    };

    if (req.empty()) {
        // unconstrained: first free driver
        if (!pool.empty()) {
            best_team = {pool.front()};
            best_faults = 0;
        }
    } else if (want == 1) {
        for (int d : pool) {
            consider({d});
            if (best_faults == 0) break;
        }
    } else {
        for (std::size_t i = 0; i < pool.size() && best_faults != 0; ++i)
            for (std::size_t j = i + 1; j < pool.size(); ++j) {
                consider({pool[i], pool[j]});
                if (best_faults == 0) break;
            }
        if (pool.size() == 1) consider({pool.front()});
    }

    if (best_faults < 0) {
        // no free driver at all
        best_team = {};
        best_faults = driver_team_faults(p, req, best_team) + 1;
    } else if (best_team.empty()) {
        best_faults += 1;
    }
    for (int d : best_team) used[d] = 1;
    return {best_team, best_faults};
}

}  // namespace rvrp
