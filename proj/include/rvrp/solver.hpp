#pragma once

// Plumbing shared by every solver: wall-clock budgets, the progress callback
// contract, chain edit helpers (distance-based insertion and removal of
// orders), precedence repair, and the chain-local score used as fitness by
// the TSP stages and the brute-force oracle.

#include <chrono>
#include <functional>
#include <optional>

#include "rvrp/distance.hpp"
#include "rvrp/model.hpp"
#include "rvrp/rng.hpp"
#include "rvrp/score.hpp"
#include "rvrp/timeline.hpp"

namespace rvrp {

using ProgressFn = std::function<void(double elapsed_seconds, const Score& best)>;

struct Budget {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double max_seconds = 0.0;  // <= 0 means unbounded

    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    bool expired() const { return max_seconds > 0.0 && elapsed() >= max_seconds; }
    double remaining() const {
        return max_seconds <= 0.0 ? 1e18 : std::max(0.0, max_seconds - elapsed());
    }
};

// Emits on improvement and at least every half second while polled.
struct ProgressEmitter {
    ProgressFn fn;
    double interval = 0.5;
    double last_emit = -1.0;

    void poll(const Budget& budget, const Score& best, bool improved = false) {
        if (!fn) return;
        const double t = budget.elapsed();
        if (improved || last_emit < 0.0 || t - last_emit >= interval) {
            fn(t, best);
            last_emit = t;
        }
    }
};

inline Meters chain_distance(const Problem& p, const TravelMatrix& m, const Chain& chain) {
    Meters total = 0;
    for (std::size_t i = 1; i < chain.size(); ++i)
        total += m.d(p.loc_of(chain[i - 1]), p.loc_of(chain[i]));
    return total;
}

// min over the stop's options x the chain's current visit locations
inline Meters min_distance_to_chain(const Problem& p, const TravelMatrix& m, const Chain& chain,
                                    int stop) {
    Meters best = std::numeric_limits<Meters>::max();
    for (int loc : p.stop_option_loc[stop])
        for (const auto& sv : chain) best = std::min(best, m.d(loc, p.loc_of(sv)));
    return best;
}

// Distance of an order to a vehicle's chain: nearest of its two stops.
inline Meters order_distance_to_chain(const Problem& p, const TravelMatrix& m, const Chain& chain,
                                      int order) {
    return std::min(min_distance_to_chain(p, m, chain, p.order_pickup[order]),
                    min_distance_to_chain(p, m, chain, p.order_delivery[order]));
}

namespace detail {

// Cheapest insertion of one visit between existing chain positions
// [lo, hi] (position = index the new visit would take). Options are part of
// the search. Ties break towards the earliest position and option.
inline std::pair<std::size_t, int> cheapest_insertion(const Problem& p, const TravelMatrix& m,
                                                      const Chain& chain, int stop,
                                                      std::size_t lo, std::size_t hi) {
    std::size_t best_pos = lo;
    int best_opt = 0;
    Meters best_cost = std::numeric_limits<Meters>::max();
    for (std::size_t pos = lo; pos <= hi; ++pos) {
        const int before = p.loc_of(chain[pos - 1]);
        const int after = p.loc_of(chain[pos]);
        for (int opt = 0; opt < static_cast<int>(p.stop_option_loc[stop].size()); ++opt) {
            const int loc = p.stop_option_loc[stop][opt];
            const Meters cost = m.d(before, loc) + m.d(loc, after) - m.d(before, after);
            if (cost < best_cost) {
                best_cost = cost;
                best_pos = pos;
                best_opt = opt;
            }
        }
    }
    return {best_pos, best_opt};
}

}  // namespace detail

// Inserts the order's pickup then delivery at the distance-minimizing
// positions (delivery after the pickup, both inside the begin/end bracket).
inline void insert_order_min_distance(const Problem& p, const TravelMatrix& m, Chain& chain,
                                      int order) {
    const int ps = p.order_pickup[order];
    const int ds = p.order_delivery[order];
    auto [ppos, popt] =
        detail::cheapest_insertion(p, m, chain, ps, 1, chain.size() - 1);
    chain.insert(chain.begin() + static_cast<std::ptrdiff_t>(ppos), StopVisit{ps, popt});
    auto [dpos, dopt] =
        detail::cheapest_insertion(p, m, chain, ds, ppos + 1, chain.size() - 1);
    chain.insert(chain.begin() + static_cast<std::ptrdiff_t>(dpos), StopVisit{ds, dopt});
}

inline void remove_order_from_chain(const Problem& p, Chain& chain, int order) {
    chain.erase(std::remove_if(chain.begin(), chain.end(),
                               [&](const StopVisit& sv) {
                                   return p.stop_order[sv.stop] == order;
                               }),
                chain.end());
}

inline std::vector<int> orders_on_chain(const Problem& p, const Chain& chain) {
    std::vector<int> orders;
    for (const auto& sv : chain) {
        const int oi = p.stop_order[sv.stop];
        if (oi >= 0 && p.stops[sv.stop].kind == StopKind::Pickup) orders.push_back(oi);
    }
    return orders;
}

// Vehicle whose chain is nearest to the order; `exclude` skips the source
// vehicle when moving. Empty chains measure from the begin location.
inline int pick_vehicle_by_distance(const Problem& p, const TravelMatrix& m, const Solution& sol,
                                    int order, int exclude = -1) {
    int best = -1;
    Meters best_d = std::numeric_limits<Meters>::max();
    for (int v = 0; v < p.num_vehicles(); ++v) {
        if (v == exclude) continue;
        const Meters d = order_distance_to_chain(p, m, sol.chains[v], order);
        if (d < best_d) {
            best_d = d;
            best = v;
        }
    }
    return best;
}

inline void move_order(const Problem& p, const TravelMatrix& m, Solution& sol, int order,
                       int from, int to) {
    remove_order_from_chain(p, sol.chains[from], order);
    insert_order_min_distance(p, m, sol.chains[to], order);
}

inline bool chain_precedence_valid(const Problem& p, const Chain& chain) {
    std::vector<char> picked(p.num_orders(), 0);
    for (const auto& sv : chain) {
        const int oi = p.stop_order[sv.stop];
        if (oi < 0) continue;
        if (p.stops[sv.stop].kind == StopKind::Pickup)
            picked[oi] = 1;
        else if (!picked[oi])
            return false;
    }
    return true;
}

// Canonical precedence repair: each order's pickup goes to the earlier of its
// two positions, the delivery to the later. Other visits keep their slots.
inline void repair_pair_order(const Problem& p, Chain& chain) {
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
        if (pickup_pos[oi] >= 0 && delivery_pos[oi] >= 0 && delivery_pos[oi] < pickup_pos[oi])
            std::swap(chain[pickup_pos[oi]], chain[delivery_pos[oi]]);
}

// Structural validity of a whole solution: every order's stops exactly once,
// pickup and delivery on the same chain in order, proper begin/end brackets.
inline bool solution_valid(const Problem& p, const Solution& sol) {
    if (static_cast<int>(sol.chains.size()) != p.num_vehicles()) return false;
    std::vector<int> seen(p.num_stops(), 0);
    for (int v = 0; v < p.num_vehicles(); ++v) {
        const Chain& chain = sol.chains[v];
        if (chain.size() < 2) return false;
        if (chain.front().stop != p.vehicle_begin[v] ||
            chain.back().stop != p.vehicle_end[v])
            return false;
        std::vector<int> pickup_v(p.num_orders(), -1);
        for (std::size_t i = 0; i < chain.size(); ++i) {
            const StopVisit& sv = chain[i];
            if (sv.option < 0 ||
                sv.option >= static_cast<int>(p.stop_option_loc[sv.stop].size()))
                return false;
            ++seen[sv.stop];
            const int oi = p.stop_order[sv.stop];
            if (oi < 0) {
                if (i != 0 && i + 1 != chain.size()) return false;
                continue;
            }
            if (p.stops[sv.stop].kind == StopKind::Pickup)
                pickup_v[oi] = static_cast<int>(i);
            else if (pickup_v[oi] < 0)
                return false;  // delivery without pickup before it on this chain
        }
    }
    for (int oi = 0; oi < p.num_orders(); ++oi)
        if (seen[p.order_pickup[oi]] != 1 || seen[p.order_delivery[oi]] != 1) return false;
    return true;
}

// Chain-local score: the vehicle's own contribution to each level, used as
// fitness by the TSP stages and as the per-vehicle objective of the
// brute-force oracle. Driver and co-location faults are chain-order
// independent and excluded; capacity is checked against the vehicle alone
// (trailer attachment is a solution-level decision).
inline Score chain_score(const Problem& p, const TravelMatrix& m, int vehicle,
                         const Chain& chain) {
    const Vehicle& veh = p.inst->vehicles[vehicle];
    Score s;
    s.h1 = chain_peak_load(p, chain).excess_over(veh.capacity);

    std::int64_t f_pd = 0;
    {
        std::vector<char> picked(p.num_orders(), 0), counted(p.num_orders(), 0);
        for (const auto& sv : chain) {
            const int oi = p.stop_order[sv.stop];
            if (oi < 0) continue;
            if (p.stops[sv.stop].kind == StopKind::Pickup)
                picked[oi] = 1;
            else if (!picked[oi] && !counted[oi]) {
                counted[oi] = 1;
                ++f_pd;
            }
        }
    }
    std::int64_t f_se = 0;
    if (chain.empty() || chain.front().stop != p.vehicle_begin[vehicle]) ++f_se;
    if (chain.empty() || chain.back().stop != p.vehicle_end[vehicle]) ++f_se;
    s.h2 = 100 * f_pd + f_se;

    if (s.h1 > 0 || s.h2 > 0) return Score::infeasible(s.h1, s.h2);
    if (p.chain_service_count(chain) == 0) return s;  // unoperated

    const ScheduledTour tour = schedule_tour(p, m, vehicle, chain);
    s.h3 = std::max<std::int64_t>(tour.duration - veh.max_tour_duration, 0) +
           std::max<std::int64_t>(tour.end_time - veh.tour_end_limit, 0);
    s.s1 = 0;
    for (const auto& sv : tour.visits) {
        const auto& tw = p.stops[sv.visit.stop].tw;
        if (!tw) continue;
        s.s1 += std::max<std::int64_t>(tw->start - sv.service_start, 0);
        s.s1 += std::max<std::int64_t>(sv.service_start - tw->end, 0);
    }
    s.s2 = std::llround(static_cast<double>(tour.total_dist) / 1000.0) + tour.total_wait +
           tour.total_drive + tour.total_service;
    s.s3 = std::max<std::int64_t>(veh.tour_start_window.start - tour.start_time, 0) +
           tour.distinct_locations + tour.chain_length;
    return s;
}

// Roulette pick over non-negative weights; the last index absorbs rounding.
inline std::size_t roulette(Rng& rng, const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (total <= 0.0) return uniform_index(rng, weights.size());
    double u = uniform_real(rng, 0.0, total);
    for (std::size_t i = 0; i < weights.size(); ++i) {
        u -= weights[i];
        if (u < 0.0) return i;
    }
    return weights.size() - 1;
}

}  // namespace rvrp
