#pragma once

// Two-stage genetic algorithm. The VRP stage assigns orders to vehicles
// (three selection operators, three crossovers, six mutators); every
// offspring's per-vehicle chain is then ordered by the nested TSP stage
// (three crossovers, eight mutators) before the timeline pass and scoring.
//
// Nested TSP results are memoized per (vehicle, stop set) within a run;
// nested RNG streams are derived from the master seed per (generation,
// offspring, vehicle) so the memoization cannot perturb seeded determinism.

#include <atomic>
#include <cmath>
#include <iostream>
#include <map>
#include <optional>

#include "rvrp/solver.hpp"

namespace rvrp {

struct GaParams {
    int population_size = 0;  // 0 derives the instance-statistics default
    double mutation_prob = 0.5;
    int max_unimproved = 500;
    double max_runtime = 30.0;
    std::uint64_t rng_seed = 1;
    int tsp_max_unimproved = 50;  // nested stage, scoped per chain
};

struct Individual {
    Solution solution;
    Score score;
};

// An order is a pickup/delivery order when none of its pickup options is a
// vehicle home location, i.e. the goods must be fetched somewhere en route.
inline bool is_pd_order(const Problem& p, int order) {
    std::set<int> homes;
    for (int v = 0; v < p.num_vehicles(); ++v)
        for (int loc : p.stop_option_loc[p.vehicle_begin[v]]) homes.insert(loc);
    for (int loc : p.stop_option_loc[p.order_pickup[order]])
        if (homes.count(loc)) return false;
    return true;
}

inline int count_multi_option_stops(const Problem& p) {
    int n = 0;
    for (const auto& locs : p.stop_option_loc) n += locs.size() > 1 ? 1 : 0;
    return n;
}

// 0.1*#o + #v^1.25 + #(PD orders) + 2*#(multi-option stops), at least 4
inline int default_population_size(const Problem& p) {
    int pd = 0;
    for (int oi = 0; oi < p.num_orders(); ++oi) pd += is_pd_order(p, oi) ? 1 : 0;
    const double raw = 0.1 * p.num_orders() +
                       std::pow(static_cast<double>(p.num_vehicles()), 1.25) + pd +
                       2.0 * count_multi_option_stops(p);
    return std::max(4, static_cast<int>(std::ceil(raw)));
}

// Same formula scoped to one chain, with the single-vehicle term.
inline int tsp_population_size(const Problem& p, const Chain& chain) {
    int cl = 0, pd = 0, mo = 0;
    for (const auto& sv : chain) {
        if (!p.is_service_stop(sv.stop)) continue;
        ++cl;
        if (p.stop_option_loc[sv.stop].size() > 1) ++mo;
        if (p.stops[sv.stop].kind == StopKind::Pickup && is_pd_order(p, p.stop_order[sv.stop]))
            ++pd;
    }
    return std::max(4, static_cast<int>(std::ceil(0.1 * cl + 1 + pd + 2.0 * mo)));
}

// ---------------------------------------------------------------------------
// initial individual

namespace ga_detail {

inline bool vehicle_suits_order(const Problem& p, int v, const Order& o) {
    const Vehicle& veh = p.inst->vehicles[v];
    if (o.required_vehicle_group && !veh.groups.count(*o.required_vehicle_group)) return false;
    if (o.hazardous && !veh.hazmat_capable) return false;
    if (o.max_vehicle_dims && !veh.dims.within(*o.max_vehicle_dims)) return false;
    return true;
}

inline std::vector<int> vehicles_with_orders(const Problem& p, const Solution& sol) {
    std::vector<int> out;
    for (int v = 0; v < p.num_vehicles(); ++v)
        if (p.chain_service_count(sol.chains[v]) > 0) out.push_back(v);
    return out;
}

// distance change of pulling the order's two visits out of the chain
inline Meters removal_gain(const Problem& p, const TravelMatrix& m, const Chain& chain,
                           int order) {
    Chain without = chain;
    remove_order_from_chain(p, without, order);
    return chain_distance(p, m, chain) - chain_distance(p, m, without);
}

inline Meters insertion_cost(const Problem& p, const TravelMatrix& m, const Chain& chain,
                             int order) {
    Chain with = chain;
    insert_order_min_distance(p, m, with, order);
    return chain_distance(p, m, with) - chain_distance(p, m, chain);
}

}  // namespace ga_detail

// Restriction- and co-location-aware construction: constrained orders first,
// the rest joins the nearest vehicle that still has room for the demand
// (nearest overall when nothing fits), then one improvement pass moves
// orders wherever that shortens the total distance without creating an
// overload.
inline Solution initial_assignment(const Problem& p, const TravelMatrix& m, Rng& rng) {
    Solution sol = p.empty_solution();
    std::vector<int> assigned(p.num_orders(), -1);
    std::vector<Load> loads(static_cast<std::size_t>(p.num_vehicles()));

    auto fits = [&](int v, int oi) {
        return (loads[static_cast<std::size_t>(v)] + p.inst->orders[oi].demand)
            .fits_in(p.inst->vehicles[v].capacity);
    };
    auto place = [&](int oi, int v) {
        insert_order_min_distance(p, m, sol.chains[v], oi);
        assigned[oi] = v;
        loads[static_cast<std::size_t>(v)] += p.inst->orders[oi].demand;
    };
    auto nearest = [&](int oi, auto&& eligible) {
        int best = -1;
        Meters best_d = std::numeric_limits<Meters>::max();
        for (int v = 0; v < p.num_vehicles(); ++v) {
            if (!eligible(v)) continue;
            const Meters d = order_distance_to_chain(p, m, sol.chains[v], oi);
            if (d < best_d) {
                best_d = d;
                best = v;
            }
        }
        return best;
    };
    auto colocated_vehicle = [&](const Order& o) {
        for (const auto& other : o.colocated_with) {
            const int oj = p.order_index.at(other);
            if (assigned[oj] >= 0) return assigned[oj];
        }
        return -1;
    };

    // constrained orders first
    for (int oi = 0; oi < p.num_orders(); ++oi) {
        const Order& o = p.inst->orders[oi];
        const bool constrained = o.required_vehicle_group || o.hazardous ||
                                 o.max_vehicle_dims || !o.colocated_with.empty();
        if (!constrained) continue;
        int v = colocated_vehicle(o);
        if (v < 0)
            v = nearest(oi, [&](int cand) {
                return ga_detail::vehicle_suits_order(p, cand, o) && fits(cand, oi);
            });
        if (v < 0)
            v = nearest(oi, [&](int cand) {
                return ga_detail::vehicle_suits_order(p, cand, o);
            });
        if (v < 0) v = uniform_int(rng, 0, p.num_vehicles() - 1);  // fault scored later
        place(oi, v);
    }
    // remainder by minimum stop-to-stop distance among vehicles with room
    for (int oi = 0; oi < p.num_orders(); ++oi) {
        if (assigned[oi] >= 0) continue;
        int v = nearest(oi, [&](int cand) { return fits(cand, oi); });
        if (v < 0) v = nearest(oi, [](int) { return true; });
        place(oi, v);
    }
    // improvement pass over all orders
    for (int oi = 0; oi < p.num_orders(); ++oi) {
        const int from = assigned[oi];
        const Meters gain = ga_detail::removal_gain(p, m, sol.chains[from], oi);
        int best_v = -1;
        Meters best_delta = 0;
        for (int v = 0; v < p.num_vehicles(); ++v) {
            if (v == from || !fits(v, oi)) continue;
            const Meters delta = ga_detail::insertion_cost(p, m, sol.chains[v], oi) - gain;
            if (delta < best_delta) {
                best_delta = delta;
                best_v = v;
            }
        }
        if (best_v >= 0) {
            move_order(p, m, sol, oi, from, best_v);
            loads[static_cast<std::size_t>(from)] -= p.inst->orders[oi].demand;
            loads[static_cast<std::size_t>(best_v)] += p.inst->orders[oi].demand;
            assigned[oi] = best_v;
        }
    }
    return sol;
}

inline Individual initial_individual(const Problem& p, const TravelMatrix& m, Rng& rng) {
    const auto ev = evaluate_solution(p, m, initial_assignment(p, m, rng));
    return {ev.solution, ev.score};
}

// ---------------------------------------------------------------------------
// parent selection

enum class SelectionKind { Uniform, RankWeighted, Tournament };
inline constexpr SelectionKind kSelectionKinds[] = {
    SelectionKind::Uniform, SelectionKind::RankWeighted, SelectionKind::Tournament};

namespace ga_detail {

// pair-wise knockout over a sample of ten
inline std::size_t tournament_pick(const std::vector<Individual>& pop, Rng& rng) {
    const std::size_t k = std::min<std::size_t>(10, pop.size());
    std::vector<std::size_t> bracket(pop.size());
    for (std::size_t i = 0; i < pop.size(); ++i) bracket[i] = i;
    for (std::size_t i = 0; i < k; ++i)  // partial Fisher-Yates
        std::swap(bracket[i], bracket[i + uniform_index(rng, pop.size() - i)]);
    bracket.resize(k);
    while (bracket.size() > 1) {
        std::vector<std::size_t> winners;
        for (std::size_t i = 0; i + 1 < bracket.size(); i += 2)
            winners.push_back(pop[bracket[i]].score <= pop[bracket[i + 1]].score
                                  ? bracket[i]
                                  : bracket[i + 1]);
        if (bracket.size() % 2 == 1) winners.push_back(bracket.back());
        bracket = std::move(winners);
    }
    return bracket.front();
}

}  // namespace ga_detail

// `pop` must be sorted best-first (rank 0 = best score).
inline std::pair<std::size_t, std::size_t> select_parents(const std::vector<Individual>& pop,
                                                          SelectionKind kind, Rng& rng) {
    const std::size_t n = pop.size();
    switch (kind) {
        case SelectionKind::Uniform: {
            const std::size_t a = uniform_index(rng, n);
            std::size_t b = a;
            while (n > 1 && b == a) b = uniform_index(rng, n);
            return {a, b};
        }
        case SelectionKind::RankWeighted: {
            std::vector<double> w(n);
            for (std::size_t i = 0; i < n; ++i) w[i] = static_cast<double>(n - i);
            return {roulette(rng, w), roulette(rng, w)};
        }
        case SelectionKind::Tournament:
        default:
            return {ga_detail::tournament_pick(pop, rng), ga_detail::tournament_pick(pop, rng)};
    }
}

// ---------------------------------------------------------------------------
// VRP-stage crossovers

enum class VrpCrossoverKind { Overlap, ScoreBased, Selection };
inline constexpr VrpCrossoverKind kVrpCrossoverKinds[] = {
    VrpCrossoverKind::Overlap, VrpCrossoverKind::ScoreBased, VrpCrossoverKind::Selection};

inline Solution vrp_crossover(VrpCrossoverKind kind, const Individual& a, const Individual& b,
                              const Problem& p, const TravelMatrix& m, Rng& rng) {
    switch (kind) {
        case VrpCrossoverKind::Overlap: {
            const auto va = order_vehicle_map(p, a.solution);
            const auto vb = order_vehicle_map(p, b.solution);
            Solution child = p.empty_solution();
            std::vector<int> rest;
            for (int oi = 0; oi < p.num_orders(); ++oi) {
                if (va[oi] >= 0 && va[oi] == vb[oi])
                    insert_order_min_distance(p, m, child.chains[va[oi]], oi);
                else
                    rest.push_back(oi);
            }
            for (int oi : rest)
                insert_order_min_distance(
                    p, m, child.chains[pick_vehicle_by_distance(p, m, child, oi)], oi);
            return child;
        }
        case VrpCrossoverKind::ScoreBased:
            return (a.score <= b.score ? a : b).solution;
        case VrpCrossoverKind::Selection:
        default:
            return (chance(rng, 0.5) ? a : b).solution;
    }
}

// ---------------------------------------------------------------------------
// VRP-stage mutators

enum class VrpMutatorKind {
    ClearVehicle,
    SwapVehicle,
    Outlier,
    MoveOrder,
    CloseToOtherChain,
    Savings
};
inline constexpr VrpMutatorKind kVrpMutatorKinds[] = {
    VrpMutatorKind::ClearVehicle, VrpMutatorKind::SwapVehicle,
    VrpMutatorKind::Outlier,      VrpMutatorKind::MoveOrder,
    VrpMutatorKind::CloseToOtherChain, VrpMutatorKind::Savings};

inline std::optional<Solution> vrp_mutate(VrpMutatorKind kind, const Solution& in,
                                          const Problem& p, const TravelMatrix& m, Rng& rng) {
    if (p.num_vehicles() < 2) return std::nullopt;  // every operator needs a second vehicle
    Solution sol = in;
    const auto sources = ga_detail::vehicles_with_orders(p, sol);
    if (sources.empty()) return std::nullopt;

    switch (kind) {
        case VrpMutatorKind::ClearVehicle: {
            const int v = sources[uniform_index(rng, sources.size())];
            const auto orders = orders_on_chain(p, sol.chains[v]);
            sol.chains[v] = p.empty_chain(v);
            for (int oi : orders)
                insert_order_min_distance(
                    p, m, sol.chains[pick_vehicle_by_distance(p, m, sol, oi, v)], oi);
            return sol;
        }
        case VrpMutatorKind::SwapVehicle: {
            const int v = uniform_int(rng, 0, p.num_vehicles() - 1);
            int w = v;
            while (w == v) w = uniform_int(rng, 0, p.num_vehicles() - 1);
            Chain cv(sol.chains[v].begin() + 1, sol.chains[v].end() - 1);
            Chain cw(sol.chains[w].begin() + 1, sol.chains[w].end() - 1);
            sol.chains[v] = p.empty_chain(v);
            sol.chains[v].insert(sol.chains[v].end() - 1, cw.begin(), cw.end());
            sol.chains[w] = p.empty_chain(w);
            sol.chains[w].insert(sol.chains[w].end() - 1, cv.begin(), cv.end());
            return sol;
        }
        case VrpMutatorKind::Outlier: {
            int best_order = -1, from = -1;
            Meters best_gain = -1;
            for (int v : sources)
                for (int oi : orders_on_chain(p, sol.chains[v])) {
                    const Meters gain = ga_detail::removal_gain(p, m, sol.chains[v], oi);
                    if (gain > best_gain) {
                        best_gain = gain;
                        best_order = oi;
                        from = v;
                    }
                }
            if (best_order < 0) return std::nullopt;
            move_order(p, m, sol, best_order,
                       from, pick_vehicle_by_distance(p, m, sol, best_order, from));
            return sol;
        }
        case VrpMutatorKind::MoveOrder: {
            const int times = uniform_int(rng, 1, 4);
            for (int t = 0; t < times; ++t) {
                const auto srcs = ga_detail::vehicles_with_orders(p, sol);
                if (srcs.empty()) break;
                const int v = srcs[uniform_index(rng, srcs.size())];
                auto orders = orders_on_chain(p, sol.chains[v]);
                const int k = uniform_int(rng, 1, std::min<int>(3, orders.size()));
                for (int i = 0; i < k; ++i)  // partial shuffle picks k distinct orders
                    std::swap(orders[i], orders[i + uniform_index(rng, orders.size() - i)]);
                for (int i = 0; i < k; ++i)
                    move_order(p, m, sol, orders[i], v,
                               pick_vehicle_by_distance(p, m, sol, orders[i], v));
            }
            return sol;
        }
        case VrpMutatorKind::CloseToOtherChain: {
            int best_order = -1, from = -1, to = -1;
            Meters best = std::numeric_limits<Meters>::max();
            for (int v : sources)
                for (const auto& sv : sol.chains[v]) {
                    const int oi = p.stop_order[sv.stop];
                    if (oi < 0) continue;
                    for (int w = 0; w < p.num_vehicles(); ++w) {
                        if (w == v) continue;
                        const Meters d =
                            min_distance_to_chain(p, m, sol.chains[w], sv.stop);
                        if (d < best) {
                            best = d;
                            best_order = oi;
                            from = v;
                            to = w;
                        }
                    }
                }
            if (best_order < 0) return std::nullopt;
            move_order(p, m, sol, best_order, from, to);
            return sol;
        }
        case VrpMutatorKind::Savings:
        default: {
            int best_order = -1, from = -1, to = -1;
            Meters best_delta = 0;  // only strictly improving moves
            for (int v : sources)
                for (int oi : orders_on_chain(p, sol.chains[v])) {
                    const Meters gain = ga_detail::removal_gain(p, m, sol.chains[v], oi);
                    for (int w = 0; w < p.num_vehicles(); ++w) {
                        if (w == v) continue;
                        const Meters delta =
                            ga_detail::insertion_cost(p, m, sol.chains[w], oi) - gain;
                        if (delta < best_delta) {
                            best_delta = delta;
                            best_order = oi;
                            from = v;
                            to = w;
                        }
                    }
                }
            if (best_order < 0) return std::nullopt;
            // neighbours of the moved order may follow when that helps
            std::vector<int> neighbours;
            {
                const Chain& c = sol.chains[from];
                for (std::size_t i = 0; i < c.size(); ++i) {
                    if (p.stop_order[c[i].stop] != best_order) continue;
                    for (const std::size_t j : {i - 1, i + 1}) {
                        if (j >= c.size()) continue;
                        const int oj = p.stop_order[c[j].stop];
                        if (oj >= 0 && oj != best_order) neighbours.push_back(oj);
                    }
                }
            }
            move_order(p, m, sol, best_order, from, to);
            for (int oj : neighbours) {
                const auto still_there = orders_on_chain(p, sol.chains[from]);
                if (std::find(still_there.begin(), still_there.end(), oj) == still_there.end())
                    continue;
                const Meters gain = ga_detail::removal_gain(p, m, sol.chains[from], oj);
                if (ga_detail::insertion_cost(p, m, sol.chains[to], oj) - gain < 0)
                    move_order(p, m, sol, oj, from, to);
            }
            return sol;
        }
    }
}

// Retries with freshly drawn operators when one cannot apply; after ten
// failures the individual passes through unmodified.
inline Solution vrp_mutate_any(const Solution& in, const Problem& p, const TravelMatrix& m,
                               Rng& rng) {
    for (int attempt = 0; attempt < 10; ++attempt) {
        const auto kind = kVrpMutatorKinds[uniform_index(rng, std::size(kVrpMutatorKinds))];
        auto out = vrp_mutate(kind, in, p, m, rng);
        if (out && solution_valid(p, *out)) return std::move(*out);
    }
    static std::atomic<bool> warned{false};
    if (!warned.exchange(true))
        std::cerr << "rvrp: VRP mutation not applicable, individual unchanged\n";
    return in;
}

// ---------------------------------------------------------------------------
// TSP-stage crossovers

enum class TspCrossoverKind { Random, Ordered, PartiallyMapped };
inline constexpr TspCrossoverKind kTspCrossoverKinds[] = {
    TspCrossoverKind::Random, TspCrossoverKind::Ordered, TspCrossoverKind::PartiallyMapped};

inline Chain tsp_crossover(TspCrossoverKind kind, const Chain& a, const Chain& b,
                           const Problem& p, Rng& rng) {
    const std::size_t n = a.size() - 2;  // inner visits
    if (n == 0 || b.size() != a.size()) return a;
    std::vector<StopVisit> ia(a.begin() + 1, a.end() - 1);
    std::vector<StopVisit> ib(b.begin() + 1, b.end() - 1);
    std::vector<StopVisit> child;
    child.reserve(n);

    switch (kind) {
        case TspCrossoverKind::Random: {
            std::vector<char> used(p.num_stops(), 0);
            std::size_t pa = 0, pb = 0;
            while (child.size() < n) {
                const bool from_a = chance(rng, 0.5);
                auto& src = from_a ? ia : ib;
                auto& pos = from_a ? pa : pb;
                while (pos < src.size() && used[src[pos].stop]) ++pos;
                if (pos == src.size()) {
                    auto& other = from_a ? ib : ia;
                    auto& opos = from_a ? pb : pa;
                    while (opos < other.size() && used[other[opos].stop]) ++opos;
                    child.push_back(other[opos]);
                    used[other[opos].stop] = 1;
                    continue;
                }
                child.push_back(src[pos]);
                used[src[pos].stop] = 1;
            }
            break;
        }
        case TspCrossoverKind::Ordered: {
            std::size_t c1 = uniform_index(rng, n + 1), c2 = uniform_index(rng, n + 1);
            if (c1 > c2) std::swap(c1, c2);
            std::vector<char> in_mid(p.num_stops(), 0);
            for (std::size_t i = c1; i < c2; ++i) in_mid[ia[i].stop] = 1;
            child.assign(ia.begin(), ia.end());
            // circular fill from the second cut with b's order from the second cut
            std::size_t write = c2 % n;
            for (std::size_t k = 0; k < n && c2 - c1 < n; ++k) {
                const StopVisit& sv = ib[(c2 + k) % n];
                if (in_mid[sv.stop]) continue;
                while (write >= c1 && write < c2) write = (write + 1) % n;
                child[write] = sv;
                write = (write + 1) % n;
            }
            break;
        }
        case TspCrossoverKind::PartiallyMapped:
        default: {
            std::size_t c1 = uniform_index(rng, n + 1), c2 = uniform_index(rng, n + 1);
            if (c1 > c2) std::swap(c1, c2);
            std::vector<char> in_mid(p.num_stops(), 0);
            for (std::size_t i = c1; i < c2; ++i) in_mid[ia[i].stop] = 1;
            child.assign(ia.begin(), ia.end());
            // remainder in b's order, filled from the beginning of the chain
            std::size_t write = 0;
            for (const auto& sv : ib) {
                if (in_mid[sv.stop]) continue;
                while (write >= c1 && write < c2) ++write;
                child[write++] = sv;
            }
            break;
        }
    }

    Chain out;
    out.push_back(a.front());
    out.insert(out.end(), child.begin(), child.end());
    out.push_back(a.back());
    repair_pair_order(p, out);
    return out;
}

// ---------------------------------------------------------------------------
// TSP-stage mutators

enum class TspMutatorKind {
    Reverse,
    SimpleMove,
    SimpleSwap,
    MultiOpt,
    NeighborhoodSwap,
    SavingsTsp,
    Options,
    OptionsChain
};
inline constexpr TspMutatorKind kTspMutatorKinds[] = {
    TspMutatorKind::Reverse,      TspMutatorKind::SimpleMove,
    TspMutatorKind::SimpleSwap,   TspMutatorKind::MultiOpt,
    TspMutatorKind::NeighborhoodSwap, TspMutatorKind::SavingsTsp,
    TspMutatorKind::Options,      TspMutatorKind::OptionsChain};

namespace ga_detail {

inline std::optional<Chain> simple_move(const Problem& p, const Chain& chain, Rng& rng) {
    if (chain.size() < 4) return std::nullopt;
    for (int attempt = 0; attempt < 20; ++attempt) {
        const std::size_t i = 1 + uniform_index(rng, chain.size() - 2);
        std::size_t j = 1 + uniform_index(rng, chain.size() - 2);
        if (i == j) continue;
        Chain out = chain;
        const StopVisit sv = out[i];
        out.erase(out.begin() + static_cast<std::ptrdiff_t>(i));
        out.insert(out.begin() + static_cast<std::ptrdiff_t>(j), sv);
        if (chain_precedence_valid(p, out)) return out;
    }
    return std::nullopt;
}

inline std::optional<Chain> simple_swap(const Problem& p, const Chain& chain, Rng& rng) {
    if (chain.size() < 4) return std::nullopt;
    for (int attempt = 0; attempt < 20; ++attempt) {
        const std::size_t i = 1 + uniform_index(rng, chain.size() - 2);
        const std::size_t j = 1 + uniform_index(rng, chain.size() - 2);
        if (i == j) continue;
        Chain out = chain;
        std::swap(out[i], out[j]);
        if (chain_precedence_valid(p, out)) return out;
    }
    return std::nullopt;
}

}  // namespace ga_detail

inline std::optional<Chain> tsp_mutate(TspMutatorKind kind, const Chain& chain,
                                       const Problem& p, const TravelMatrix& m, Rng& rng) {
    if (chain.size() < 3) return std::nullopt;
    switch (kind) {
        case TspMutatorKind::Reverse: {
            Chain out = chain;
            std::reverse(out.begin() + 1, out.end() - 1);
            repair_pair_order(p, out);
            return out;
        }
        case TspMutatorKind::SimpleMove:
            return ga_detail::simple_move(p, chain, rng);
        case TspMutatorKind::SimpleSwap:
            return ga_detail::simple_swap(p, chain, rng);
        case TspMutatorKind::MultiOpt: {
            Chain out = chain;
            const int times = uniform_int(rng, 1, 3);
            for (int t = 0; t < times; ++t) {
                auto next = chance(rng, 0.5) ? ga_detail::simple_move(p, out, rng)
                                             : ga_detail::simple_swap(p, out, rng);
                if (next) out = std::move(*next);
            }
            return out;
        }
        case TspMutatorKind::NeighborhoodSwap: {
            const std::size_t i = 1 + uniform_index(rng, chain.size() - 2);
            const Meters base = chain_distance(p, m, chain);
            Chain best;
            Meters best_gain = 0;
            for (std::size_t j = 1; j + 1 < chain.size(); ++j) {
                if (j == i) continue;
                Chain cand = chain;
                std::swap(cand[i], cand[j]);
                if (!chain_precedence_valid(p, cand)) continue;
                const Meters gain = base - chain_distance(p, m, cand);
                if (gain > best_gain) {
                    best_gain = gain;
                    best = std::move(cand);
                }
            }
            if (best.empty()) return std::nullopt;  // nothing improves, try another operator
            return best;
        }
        case TspMutatorKind::SavingsTsp: {
            const Meters base = chain_distance(p, m, chain);
            Chain best;
            Meters best_gain = 0;
            for (std::size_t i = 1; i + 1 < chain.size(); ++i)
                for (std::size_t j = 1; j + 1 < chain.size(); ++j) {
                    if (i == j) continue;
                    Chain cand = chain;
                    const StopVisit sv = cand[i];
                    cand.erase(cand.begin() + static_cast<std::ptrdiff_t>(i));
                    cand.insert(cand.begin() + static_cast<std::ptrdiff_t>(j), sv);
                    if (!chain_precedence_valid(p, cand)) continue;
                    const Meters gain = base - chain_distance(p, m, cand);
                    if (gain > best_gain) {
                        best_gain = gain;
                        best = std::move(cand);
                    }
                }
            if (best.empty()) return std::nullopt;
            return best;
        }
        case TspMutatorKind::Options: {
            std::vector<std::size_t> multi;
            for (std::size_t i = 0; i < chain.size(); ++i)
                if (p.stop_option_loc[chain[i].stop].size() > 1) multi.push_back(i);
            if (multi.empty()) return std::nullopt;  // caller picks another operator
            Chain out = chain;
            const std::size_t i = multi[uniform_index(rng, multi.size())];
            const int count = static_cast<int>(p.stop_option_loc[out[i].stop].size());
            int opt = out[i].option;
            while (opt == out[i].option) opt = uniform_int(rng, 0, count - 1);
            out[i].option = opt;
            return out;
        }
        case TspMutatorKind::OptionsChain:
        default: {
            Chain out = chain;
            bool rotated = false;
            for (auto& sv : out) {
                const int count = static_cast<int>(p.stop_option_loc[sv.stop].size());
                sv.option = (sv.option + 1) % count;
                rotated = rotated || count > 1;
            }
            if (!rotated) return std::nullopt;  // nothing to rotate
            return out;
        }
    }
}

inline Chain tsp_mutate_any(const Chain& chain, const Problem& p, const TravelMatrix& m,
                            Rng& rng) {
    for (int attempt = 0; attempt < 10; ++attempt) {
        const auto kind = kTspMutatorKinds[uniform_index(rng, std::size(kTspMutatorKinds))];
        auto out = tsp_mutate(kind, chain, p, m, rng);
        if (out) return std::move(*out);
    }
    return chain;
}

// ---------------------------------------------------------------------------
// TSP stage

namespace ga_detail {

// nearest-neighbour seed: random first stop, then always the nearest
// precedence-valid stop; options greedily nearest to the current location
inline Chain nearest_neighbour_chain(const Problem& p, const TravelMatrix& m, int vehicle,
                                     const std::vector<StopVisit>& visits, Rng& rng) {
    Chain chain;
    chain.push_back(StopVisit{p.vehicle_begin[vehicle], 0});
    int cur = p.loc_of(chain.front());

    std::vector<StopVisit> pool = visits;
    std::vector<char> picked_order(p.num_orders(), 0);
    auto valid = [&](const StopVisit& sv) {
        const int oi = p.stop_order[sv.stop];
        if (oi < 0 || p.stops[sv.stop].kind == StopKind::Pickup) return true;
        return picked_order[oi] == 1;
    };
    auto nearest_option = [&](int stop, int from) {
        int best = 0;
        Meters bd = std::numeric_limits<Meters>::max();
        for (int o = 0; o < static_cast<int>(p.stop_option_loc[stop].size()); ++o) {
            const Meters d = m.d(from, p.stop_option_loc[stop][o]);
            if (d < bd) {
                bd = d;
                best = o;
            }
        }
        return best;
    };

    bool first = true;
    while (!pool.empty()) {
        std::size_t pick = 0;
        if (first) {
            std::vector<std::size_t> cands;
            for (std::size_t i = 0; i < pool.size(); ++i)
                if (valid(pool[i])) cands.push_back(i);
            pick = cands[uniform_index(rng, cands.size())];
            first = false;
        } else {
            Meters bd = std::numeric_limits<Meters>::max();
            for (std::size_t i = 0; i < pool.size(); ++i) {
                if (!valid(pool[i])) continue;
                const Meters d =
                    m.d(cur, p.stop_option_loc[pool[i].stop][nearest_option(pool[i].stop, cur)]);
                if (d < bd) {
                    bd = d;
                    pick = i;
                }
            }
        }
        StopVisit sv = pool[pick];
        sv.option = nearest_option(sv.stop, cur);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
        if (p.stops[sv.stop].kind == StopKind::Pickup && p.stop_order[sv.stop] >= 0)
            picked_order[p.stop_order[sv.stop]] = 1;
        chain.push_back(sv);
        cur = p.loc_of(sv);
    }
    StopVisit end{p.vehicle_end[vehicle], 0};
    end.option = nearest_option(end.stop, cur);
    chain.push_back(end);
    return chain;
}

}  // namespace ga_detail

// Orders one vehicle's stops. Same breed/truncate loop as the VRP stage with
// uniform parent selection; fitness is the chain-local score.
inline Chain run_tsp_ga(const Problem& p, const TravelMatrix& m, int vehicle, const Chain& chain,
                        std::uint64_t seed, double max_seconds, int max_unimproved = 50) {
    if (p.chain_service_count(chain) == 0) return chain;
    Rng rng(seed);
    const Budget budget{std::chrono::steady_clock::now(), max_seconds};

    std::vector<StopVisit> visits(chain.begin() + 1, chain.end() - 1);
    const std::size_t pop_size = static_cast<std::size_t>(tsp_population_size(p, chain));

    struct Entry {
        Chain chain;
        Score score;
    };
    auto scored = [&](Chain c) {
        Score s = chain_score(p, m, vehicle, c);
        return Entry{std::move(c), s};
    };

    std::vector<Entry> pop;
    auto reseed = [&] {
        pop.clear();
        pop.push_back(scored(ga_detail::nearest_neighbour_chain(p, m, vehicle, visits, rng)));
        while (pop.size() < pop_size)
            pop.push_back(scored(tsp_mutate_any(pop.front().chain, p, m, rng)));
        std::stable_sort(pop.begin(), pop.end(),
                         [](const Entry& x, const Entry& y) { return x.score < y.score; });
    };
    reseed();
    // the incoming chain rides along as a warm start, so an already good
    // ordering is never thrown away by the fresh seed
    if (chain_precedence_valid(p, chain)) {
        pop.back() = scored(chain);
        std::stable_sort(pop.begin(), pop.end(),
                         [](const Entry& x, const Entry& y) { return x.score < y.score; });
    }

    Entry best = pop.front();
    int unimproved = 0;
    while (unimproved < max_unimproved && !budget.expired()) {
        while (pop.size() < 2 * pop_size && !budget.expired()) {
            const std::size_t pa = uniform_index(rng, pop_size);
            std::size_t pb = pa;
            while (pop_size > 1 && pb == pa) pb = uniform_index(rng, pop_size);
            const auto kind =
                kTspCrossoverKinds[uniform_index(rng, std::size(kTspCrossoverKinds))];
            Chain child = tsp_crossover(kind, pop[pa].chain, pop[pb].chain, p, rng);
            if (chance(rng, 0.5)) child = tsp_mutate_any(child, p, m, rng);
            pop.push_back(scored(std::move(child)));
        }
        std::stable_sort(pop.begin(), pop.end(),
                         [](const Entry& x, const Entry& y) { return x.score < y.score; });
        pop.resize(pop_size);
        if (pop.front().score < best.score) {
            best = pop.front();
            unimproved = 0;
        } else {
            ++unimproved;
        }
        // fully converged populations restart from a fresh random seed; the
        // unimproved budget keeps counting and the best chain is retained
        const bool converged = std::all_of(pop.begin(), pop.end(), [&](const Entry& e) {
            return e.chain == pop.front().chain;
        });
        if (converged && unimproved < max_unimproved && !budget.expired()) {
            if (pop.front().score < best.score) best = pop.front();
            reseed();
        }
    }
    return best.chain;
}

// ---------------------------------------------------------------------------
// VRP stage

// vehicle, current chain, nested seed, remaining seconds -> ordered chain
using TspSolver = std::function<Chain(int, const Chain&, std::uint64_t, double)>;

// Memoizes nested solves per (vehicle, stop set) within one run.
struct TspMemo {
    std::map<std::pair<int, std::vector<int>>, Chain> cache;

    static std::pair<int, std::vector<int>> key_of(int vehicle, const Chain& chain) {
        std::vector<int> stops;
        stops.reserve(chain.size());
        for (const auto& sv : chain) stops.push_back(sv.stop);
        std::sort(stops.begin(), stops.end());
        return {vehicle, std::move(stops)};
    }

    Chain solve(const Problem&, int vehicle, const Chain& chain, const TspSolver& solver,
                std::uint64_t seed, double remaining) {
        const auto key = key_of(vehicle, chain);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
        Chain out = solver(vehicle, chain, seed, remaining);
        cache.emplace(key, out);
        return out;
    }

    void update(int vehicle, const Chain& chain) { cache[key_of(vehicle, chain)] = chain; }
};

inline TspSolver make_ga_tsp_solver(const Problem& p, const TravelMatrix& m,
                                    int max_unimproved = 50) {
    return [&p, &m, max_unimproved](int vehicle, const Chain& chain, std::uint64_t seed,
                                    double remaining) {
        return run_tsp_ga(p, m, vehicle, chain, seed, remaining, max_unimproved);
    };
}

inline EvaluatedSolution run_vrp_ga(const Problem& p, const TravelMatrix& m, GaParams params,
                                    TspSolver tsp_solver = {}, ProgressFn progress = {}) {
    if (!tsp_solver) tsp_solver = make_ga_tsp_solver(p, m, params.tsp_max_unimproved);
    Rng rng(params.rng_seed);
    const Budget budget{std::chrono::steady_clock::now(), params.max_runtime};
    ProgressEmitter emit{std::move(progress)};
    TspMemo memo;

    const std::size_t pop_size = static_cast<std::size_t>(
        std::max(2, params.population_size > 0 ? params.population_size
                                               : default_population_size(p)));

    std::uint64_t nested = 0;
    auto evaluate_ind = [&](Solution sol) {
        for (int v = 0; v < p.num_vehicles(); ++v) {
            if (p.chain_service_count(sol.chains[v]) == 0) continue;
            sol.chains[v] =
                memo.solve(p, v, sol.chains[v], tsp_solver,
                           derive_seed(params.rng_seed, ++nested, static_cast<std::uint64_t>(v)),
                           budget.remaining());
        }
        auto ev = evaluate_solution(p, m, std::move(sol));
        return Individual{std::move(ev.solution), ev.score};
    };

    std::vector<Individual> pop;
    pop.push_back(evaluate_ind(initial_assignment(p, m, rng)));
    while (pop.size() < pop_size && !budget.expired())
        pop.push_back(evaluate_ind(vrp_mutate_any(pop.front().solution, p, m, rng)));
    std::stable_sort(pop.begin(), pop.end(),
                     [](const Individual& x, const Individual& y) { return x.score < y.score; });

    Individual best = pop.front();
    emit.poll(budget, best.score, true);

    int unimproved = 0;
    while (unimproved < params.max_unimproved && !budget.expired()) {
        const std::size_t parents = pop.size();
        while (pop.size() < 2 * parents && !budget.expired()) {
            const auto sel = kSelectionKinds[uniform_index(rng, std::size(kSelectionKinds))];
            const auto [ia, ib] = select_parents(pop, sel, rng);
            const auto cx =
                kVrpCrossoverKinds[uniform_index(rng, std::size(kVrpCrossoverKinds))];
            Solution child = vrp_crossover(cx, pop[ia], pop[ib], p, m, rng);
            if (chance(rng, params.mutation_prob)) child = vrp_mutate_any(child, p, m, rng);
            pop.push_back(evaluate_ind(std::move(child)));
            emit.poll(budget, best.score);
        }
        std::stable_sort(pop.begin(), pop.end(), [](const Individual& x, const Individual& y) {
            return x.score < y.score;
        });
        pop.resize(parents);

        // polish the incumbent once per generation: re-solve its chains under
        // a fresh nested seed and keep the result when the full score does
        // not get worse; the memo inherits the better chains
        if (!budget.expired()) {
            Solution refreshed = pop.front().solution;
            for (int v = 0; v < p.num_vehicles(); ++v) {
                if (p.chain_service_count(refreshed.chains[v]) == 0) continue;
                refreshed.chains[v] = tsp_solver(
                    v, refreshed.chains[v],
                    derive_seed(params.rng_seed, ++nested, static_cast<std::uint64_t>(v)),
                    budget.remaining());
            }
            auto ev = evaluate_solution(p, m, std::move(refreshed));
            if (ev.score <= pop.front().score) {
                for (int v = 0; v < p.num_vehicles(); ++v)
                    memo.update(v, ev.solution.chains[v]);
                pop.front() = Individual{std::move(ev.solution), ev.score};
            }
        }

        if (pop.front().score < best.score) {
            best = pop.front();
            unimproved = 0;
            emit.poll(budget, best.score, true);
        } else {
            ++unimproved;
        }
    }
    auto ev = evaluate_solution(p, m, best.solution);
    emit.poll(budget, ev.score, true);
    return ev;
}

}  // namespace rvrp
