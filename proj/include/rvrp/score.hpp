#pragma once

// Six-level lexicographic cost function: hard feasibility scores H1-H3,
// soft quality scores S1-S3. Soft levels (and H3) are only computed once
// H1 and H2 are down to zero; until then they hold a sentinel that compares
// as worse than any real value.

#include <compare>
#include <limits>
#include <map>
#include <set>
#include <vector>

#include "rvrp/model.hpp"
#include "rvrp/timeline.hpp"

namespace rvrp {

inline constexpr std::int64_t kNotEvaluated = std::numeric_limits<std::int64_t>::max();

struct Score {
    std::int64_t h1 = 0;
    std::int64_t h2 = 0;
    std::int64_t h3 = 0;
    std::int64_t s1 = 0;
    std::int64_t s2 = 0;
    std::int64_t s3 = 0;

    // member order gives the lexicographic comparison; smaller is better
    auto operator<=>(const Score&) const = default;

    bool feasible() const { return h1 == 0 && h2 == 0 && h3 == 0; }
    bool soft_evaluated() const { return h3 != kNotEvaluated; }

    std::int64_t level(int i) const {
        switch (i) {
            case 1: return h1;
            case 2: return h2;
            case 3: return h3;
            case 4: return s1;
            case 5: return s2;
            default: return s3;
        }
    }

    static Score infeasible(std::int64_t h1, std::int64_t h2) {
        return {h1, h2, kNotEvaluated, kNotEvaluated, kNotEvaluated, kNotEvaluated};
    }
    static Score worst() {
        return {kNotEvaluated, kNotEvaluated, kNotEvaluated,
                kNotEvaluated, kNotEvaluated, kNotEvaluated};
    }
};

inline std::strong_ordering compare(const Score& a, const Score& b) { return a <=> b; }

using Schedules = std::map<int, ScheduledTour>;  // by vehicle index, operated tours only

struct EvaluatedSolution {
    Solution solution;
    Schedules schedules;
    Score score;
};

// Running load along a chain; the peak in each dimension is what the vehicle
// must actually hold at some point of the tour.
inline Load chain_peak_load(const Problem& p, const Chain& chain) {
    Load cur, peak;
    for (const auto& v : chain) {
        const int oi = p.stop_order[v.stop];
        if (oi < 0) continue;
        if (p.stops[v.stop].kind == StopKind::Pickup) {
            cur += p.inst->orders[oi].demand;
            peak.max_with(cur);
        } else {
            cur -= p.inst->orders[oi].demand;
        }
    }
    return peak;
}

// order idx -> vehicle idx (-1 if unassigned)
inline std::vector<int> order_vehicle_map(const Problem& p, const Solution& sol) {
    std::vector<int> m(p.num_orders(), -1);
    for (std::size_t v = 0; v < sol.chains.size(); ++v)
        for (const auto& sv : sol.chains[v]) {
            const int oi = p.stop_order[sv.stop];
            if (oi >= 0 && p.stops[sv.stop].kind == StopKind::Pickup)
                m[oi] = static_cast<int>(v);
        }
    return m;
}

namespace detail {

// A trailer is attached iff the vehicle may pull one and its own capacity is
// exceeded; trailers are taken from the shared pool in declaration order.
inline std::vector<Load> effective_capacities(const Problem& p, const Solution& sol) {
    std::vector<Load> caps;
    caps.reserve(sol.chains.size());
    std::vector<char> trailer_used(p.inst->trailers.size(), 0);
    for (std::size_t v = 0; v < sol.chains.size(); ++v) {
        const Vehicle& veh = p.inst->vehicles[v];
        Load cap = veh.capacity;
        if (veh.trailer_allowed && !chain_peak_load(p, sol.chains[v]).fits_in(cap)) {
            for (std::size_t t = 0; t < p.inst->trailers.size(); ++t)
                if (!trailer_used[t]) {
                    trailer_used[t] = 1;
                    cap += p.inst->trailers[t].capacity;
                    break;
                }
        }
        caps.push_back(cap);
    }
    return caps;
}

}  // namespace detail

// H1: exceeded capacity plus 100 points per order-restriction fault (f_or)
// and per violated (non-)co-location dependency (f_od).
inline std::int64_t eval_h1(const Problem& p, const Solution& sol) {
    std::int64_t excess = 0;
    const auto caps = detail::effective_capacities(p, sol);
    for (std::size_t v = 0; v < sol.chains.size(); ++v)
        excess += chain_peak_load(p, sol.chains[v]).excess_over(caps[v]);

    std::int64_t f_or = 0;
    for (std::size_t v = 0; v < sol.chains.size(); ++v) {
        const Vehicle& veh = p.inst->vehicles[v];
        const auto& team = v < sol.drivers.size() ? sol.drivers[v] : std::vector<int>{};
        std::set<int> orders_here;
        for (const auto& sv : sol.chains[v]) {
            const int oi = p.stop_order[sv.stop];
            if (oi >= 0) orders_here.insert(oi);
        }
        if (!orders_here.empty() && team.empty()) ++f_or;  // tour cannot run undriven
        for (int oi : orders_here) {
            const Order& o = p.inst->orders[oi];
            if (o.needs_codriver && team.size() < 2) ++f_or;
            if (o.required_driver) {
                const int d = p.driver_index.at(*o.required_driver);
                if (std::find(team.begin(), team.end(), d) == team.end()) ++f_or;
            }
            for (const auto& cert : o.required_certificates) {
                bool covered = false;
                for (int d : team)
                    if (p.inst->drivers[d].certificates.count(cert)) covered = true;
                if (!covered) ++f_or;
            }
            if (o.required_vehicle_group && !veh.groups.count(*o.required_vehicle_group)) ++f_or;
            if (o.hazardous && !veh.hazmat_capable) ++f_or;
            if (o.max_vehicle_dims && !veh.dims.within(*o.max_vehicle_dims)) ++f_or;
        }
    }

    std::int64_t f_od = 0;
    const auto on_vehicle = order_vehicle_map(p, sol);
    for (int oi = 0; oi < p.num_orders(); ++oi) {
        const Order& o = p.inst->orders[oi];
        if (on_vehicle[oi] < 0) continue;
        for (const auto& other : o.colocated_with)
            if (on_vehicle[p.order_index.at(other)] != on_vehicle[oi]) ++f_od;
        for (const auto& other : o.not_colocated_with)
            if (on_vehicle[p.order_index.at(other)] == on_vehicle[oi]) ++f_od;
    }
    return excess + 100 * f_or + 100 * f_od;
}

// H2: pickup/delivery precedence (100 points each), tour start/end stops,
// vehicle-bound stops and forbidden returns.
inline std::int64_t eval_h2(const Problem& p, const Solution& sol) {
    std::int64_t total = 0;
    for (std::size_t v = 0; v < sol.chains.size(); ++v) {
        const Chain& chain = sol.chains[v];
        if (chain.empty()) continue;
        const Vehicle& veh = p.inst->vehicles[v];

        std::int64_t f_pd = 0, f_se = 0, f_sv = 0, f_sr = 0;

        std::vector<int> pickup_pos(p.num_orders(), -1), delivery_pos(p.num_orders(), -1);
        for (std::size_t i = 0; i < chain.size(); ++i) {
            const int oi = p.stop_order[chain[i].stop];
            if (oi < 0) continue;
            if (p.stops[chain[i].stop].kind == StopKind::Pickup)
                pickup_pos[oi] = static_cast<int>(i);
            else
                delivery_pos[oi] = static_cast<int>(i);
        }
        for (int oi = 0; oi < p.num_orders(); ++oi)
            if (pickup_pos[oi] >= 0 && delivery_pos[oi] >= 0 &&
                delivery_pos[oi] < pickup_pos[oi])
                ++f_pd;

        if (chain.front().stop != p.vehicle_begin[v]) ++f_se;
        if (chain.back().stop != p.vehicle_end[v]) ++f_se;

        for (std::size_t i = 0; i < chain.size(); ++i) {
            const int owner = p.stop_vehicle[chain[i].stop];
            const bool boundary = i == 0 || i + 1 == chain.size();
            if (owner >= 0 && (owner != static_cast<int>(v) || !boundary)) ++f_sv;
        }

        if (!veh.allow_return) {
            // repeat non-consecutive visits to a location among serviced stops
            std::map<int, int> blocks;
            int prev_loc = -1;
            for (const auto& sv : chain) {
                if (!p.is_service_stop(sv.stop)) continue;
                const int loc = p.loc_of(sv);
                if (loc != prev_loc) ++blocks[loc];
                prev_loc = loc;
            }
            for (const auto& [loc, n] : blocks) {
                (void)loc;
                if (n > 1) f_sr += n - 1;
            }
        }
        total += 100 * f_pd + f_se + f_sv + f_sr;
    }
    return total;
}

// H3: tour duration over the maximum plus tour end past the end limit.
inline std::int64_t eval_h3(const Problem& p, const Schedules& schedules) {
    std::int64_t total = 0;
    for (const auto& [v, tour] : schedules) {
        const Vehicle& veh = p.inst->vehicles[v];
        total += std::max<std::int64_t>(tour.duration - veh.max_tour_duration, 0);
        total += std::max<std::int64_t>(tour.end_time - veh.tour_end_limit, 0);
    }
    return total;
}

// S1: seconds of service starting before its window opens or after it closes.
inline std::int64_t eval_s1(const Problem& p, const Schedules& schedules) {
    std::int64_t total = 0;
    for (const auto& [v, tour] : schedules) {
        (void)v;
        for (const auto& sv : tour.visits) {
            const auto& tw = p.stops[sv.visit.stop].tw;
            if (!tw) continue;
            total += std::max<std::int64_t>(tw->start - sv.service_start, 0);
            total += std::max<std::int64_t>(sv.service_start - tw->end, 0);
        }
    }
    return total;
}

// S2: driven kilometers plus waiting, driving and service seconds. The mixed
// units are deliberate; kilometers are rounded once, at the sum.
inline std::int64_t eval_s2(const Problem&, const Schedules& schedules) {
    Meters dist = 0;
    std::int64_t secs = 0;
    for (const auto& [v, tour] : schedules) {
        (void)v;
        dist += tour.total_dist;
        secs += tour.total_wait + tour.total_drive + tour.total_service;
    }
    return std::llround(static_cast<double>(dist) / 1000.0) + secs;
}

// Alternative S2: tour cost from the vehicles' cost rates. Off by default;
// never used by evaluate() unless requested.
inline std::int64_t eval_s2_cost(const Problem& p, const Schedules& schedules) {
    double cost = 0.0;
    for (const auto& [v, tour] : schedules) {
        const CostRates& r = p.inst->vehicles[v].cost_rates;
        cost += r.per_hour * (static_cast<double>(tour.duration) / 3600.0);
        cost += r.per_km * (static_cast<double>(tour.total_dist) / 1000.0);
        cost += r.per_tour;
        cost += r.per_stop * tour.chain_length;
    }
    return std::llround(cost);
}

// S3: tour start ahead of the defined start, distinct locations, chain length.
inline std::int64_t eval_s3(const Problem& p, const Schedules& schedules) {
    std::int64_t total = 0;
    for (const auto& [v, tour] : schedules) {
        const Vehicle& veh = p.inst->vehicles[v];
        total += std::max<std::int64_t>(veh.tour_start_window.start - tour.start_time, 0);
        total += tour.distinct_locations;
        total += tour.chain_length;
    }
    return total;
}

enum class S2Mode { TimeDistance, CostRates };

inline Score evaluate(const Problem& p, const Solution& sol, const Schedules& schedules,
                      S2Mode mode = S2Mode::TimeDistance) {
    Score s;
    s.h1 = eval_h1(p, sol);
    s.h2 = eval_h2(p, sol);
    if (s.h1 > 0 || s.h2 > 0) return Score::infeasible(s.h1, s.h2);
    s.h3 = eval_h3(p, schedules);
    s.s1 = eval_s1(p, schedules);
    s.s2 = mode == S2Mode::TimeDistance ? eval_s2(p, schedules) : eval_s2_cost(p, schedules);
    s.s3 = eval_s3(p, schedules);
    return s;
}

// Full evaluation pipeline: staff the tours, schedule operated chains (only
// when the solution passed the first two hard levels), score. Chains without
// a pickup/delivery visit are unoperated tours and are skipped throughout.
inline EvaluatedSolution evaluate_solution(const Problem& p, const TravelMatrix& matrix,
                                           Solution sol,
                                           S2Mode mode = S2Mode::TimeDistance) {
    sol.drivers.assign(p.num_vehicles(), {});
    std::vector<char> used(p.inst->drivers.size(), 0);
    for (int v = 0; v < p.num_vehicles(); ++v)
        sol.drivers[v] = assign_drivers(p, sol.chains[v], v, used).first;

    EvaluatedSolution out;
    const std::int64_t h1 = eval_h1(p, sol);
    const std::int64_t h2 = eval_h2(p, sol);
    if (h1 > 0 || h2 > 0) {
        out.solution = std::move(sol);
        out.score = Score::infeasible(h1, h2);
        return out;
    }
    Schedules schedules;
    for (int v = 0; v < p.num_vehicles(); ++v)
        if (p.chain_service_count(sol.chains[v]) > 0)
            schedules.emplace(v, schedule_tour(p, matrix, v, sol.chains[v]));
    out.score = evaluate(p, sol, schedules, mode);
    out.solution = std::move(sol);
    out.schedules = std::move(schedules);
    return out;
}

}  // namespace rvrp
