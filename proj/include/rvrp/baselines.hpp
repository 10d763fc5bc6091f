#pragma once

// Reference solvers: exhaustive brute force (the exact oracle the test suite
// measures every metaheuristic against), a Clarke&Wright-style savings
// construction, and a tabu search over the union of this repo's VRP and TSP
// mutator neighborhoods.

#include <unordered_map>

#include "rvrp/ga.hpp"
#include "rvrp/solver.hpp"

namespace rvrp {

struct GuardError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BruteForceTspResult {
    Chain chain;
    Score score;       // chain-local score of the returned chain
    bool complete = true;  // false when the budget cut the enumeration short
};

// Enumerates every precedence-valid sequence and every location option
// (including tour begin/end options) of the given service stops; exact.
// Capacity is checked against the vehicle alone, so with contended trailers
// the per-chain ranking may differ from the full evaluation.
inline BruteForceTspResult brute_force_tsp(const Problem& p, const TravelMatrix& m, int vehicle,
                                           const std::vector<int>& stops, double budget_seconds,
                                           bool allow_large = false) {
    if (stops.size() > 10 && !allow_large)
        throw GuardError("brute_force_tsp limited to 10 stops (override to proceed)");
    const Budget budget{std::chrono::steady_clock::now(), budget_seconds};

    std::vector<int> order(stops);  // canonical enumeration order
    std::sort(order.begin(), order.end());

    BruteForceTspResult out;
    out.score = Score::worst();
    bool have_result = false;

    Chain scratch;
    std::vector<char> used(order.size(), 0);
    long leaves = 0;

    auto leaf = [&]() {
        const Stop& end_stop = p.stops[p.vehicle_end[vehicle]];
        for (int eo = 0; eo < static_cast<int>(end_stop.options.size()); ++eo) {
            scratch.push_back(StopVisit{p.vehicle_end[vehicle], eo});
            const Score s = chain_score(p, m, vehicle, scratch);
            if (!have_result || s < out.score) {
                out.score = s;
                out.chain = scratch;
                have_result = true;
            }
            scratch.pop_back();
        }
    };

    auto rec = [&](auto&& self) -> bool {  // false = budget exhausted
        if (scratch.size() - 1 == order.size()) {
            leaf();
            if (++leaves % 256 == 0 && budget.expired()) return false;
            return true;
        }
        for (std::size_t i = 0; i < order.size(); ++i) {
            if (used[i]) continue;
            const int stop = order[i];
            if (p.stops[stop].kind == StopKind::Delivery) {
                const int pickup = p.order_pickup[p.stop_order[stop]];
                bool picked = false;
                for (const auto& sv : scratch)
                    if (sv.stop == pickup) picked = true;
                // deliveries whose pickup is not on this chain at all are free
                if (!picked &&
                    std::find(order.begin(), order.end(), pickup) != order.end())
                    continue;
            }
            used[i] = 1;
            for (int opt = 0; opt < static_cast<int>(p.stop_option_loc[stop].size()); ++opt) {
                scratch.push_back(StopVisit{stop, opt});
                if (!self(self)) return false;
                scratch.pop_back();
            }
            used[i] = 0;
        }
        return true;
    };

    const Stop& begin_stop = p.stops[p.vehicle_begin[vehicle]];
    for (int bo = 0; bo < static_cast<int>(begin_stop.options.size()); ++bo) {
        scratch.clear();
        scratch.push_back(StopVisit{p.vehicle_begin[vehicle], bo});
        if (!rec(rec)) {
            out.complete = false;
            break;
        }
    }
    return out;
}

struct BruteForceVrpResult {
    EvaluatedSolution best;
    bool complete = true;
};

// Enumerates every order-to-vehicle assignment, solves each vehicle's chain
// exactly, evaluates the assembled solution in full. Ties keep the first
// assignment in lexicographic order.
inline BruteForceVrpResult brute_force_vrp(const Problem& p, const TravelMatrix& m,
                                           double budget_seconds, bool allow_large = false) {
    if ((p.num_orders() > 4 || p.num_vehicles() > 3) && !allow_large)
        throw GuardError(
            "brute_force_vrp limited to 4 orders and 3 vehicles (override to proceed)");
    const Budget budget{std::chrono::steady_clock::now(), budget_seconds};

    BruteForceVrpResult out;
    out.best.score = Score::worst();

    std::vector<int> assign(p.num_orders(), 0);
    std::unordered_map<std::string, BruteForceTspResult> chain_cache;

    while (true) {
        if (budget.expired()) {
            out.complete = false;
            break;
        }
        Solution sol = p.empty_solution();
        bool complete = true;
        for (int v = 0; v < p.num_vehicles(); ++v) {
            std::vector<int> stops;
            std::string key = std::to_string(v);
            for (int oi = 0; oi < p.num_orders(); ++oi) {
                if (assign[oi] != v) continue;
                stops.push_back(p.order_pickup[oi]);
                stops.push_back(p.order_delivery[oi]);
                key += ":" + std::to_string(oi);
            }
            if (stops.empty()) continue;
            auto it = chain_cache.find(key);
            if (it == chain_cache.end())
                it = chain_cache
                         .emplace(key, brute_force_tsp(p, m, v, stops, budget.remaining(),
                                                       allow_large))
                         .first;
            complete = complete && it->second.complete;
            sol.chains[v] = it->second.chain;
        }
        EvaluatedSolution ev = evaluate_solution(p, m, std::move(sol));
        out.complete = out.complete && complete;
        if (ev.score < out.best.score) out.best = std::move(ev);

        int i = p.num_orders() - 1;  // odometer, first assignment all-zero
        while (i >= 0 && assign[i] == p.num_vehicles() - 1) assign[i--] = 0;
        if (i < 0) break;
        ++assign[i];
    }
    return out;
}

// Clarke&Wright-style construction: one route per order, merge the pair with
// the largest positive distance saving while the joint load still fits the
// largest vehicle, then match routes to vehicles by descending demand.
inline Solution savings_construct(const Problem& p, const TravelMatrix& m) {
    const int depot = p.stop_option_loc[p.vehicle_begin[0]][0];

    struct Route {
        std::vector<int> orders;
        Load demand;
        int first_loc;
        int last_loc;
    };
    std::vector<Route> routes;
    for (int oi = 0; oi < p.num_orders(); ++oi) {
        Route r;
        r.orders = {oi};
        r.demand = p.inst->orders[oi].demand;
        r.first_loc = p.stop_option_loc[p.order_pickup[oi]][0];
        r.last_loc = p.stop_option_loc[p.order_delivery[oi]][0];
        routes.push_back(std::move(r));
    }

    Load max_cap;
    for (const auto& v : p.inst->vehicles) max_cap.max_with(v.capacity);

    while (routes.size() > 1) {
        Meters best = 0;
        int bi = -1, bj = -1;
        for (std::size_t i = 0; i < routes.size(); ++i)
            for (std::size_t j = 0; j < routes.size(); ++j) {
                if (i == j) continue;
                if (!(routes[i].demand + routes[j].demand).fits_in(max_cap)) continue;
                const Meters saving = m.d(routes[i].last_loc, depot) +
                                      m.d(depot, routes[j].first_loc) -
                                      m.d(routes[i].last_loc, routes[j].first_loc);
                if (saving > best) {
                    best = saving;
                    bi = static_cast<int>(i);
                    bj = static_cast<int>(j);
                }
            }
        if (bi < 0) break;
        Route& a = routes[static_cast<std::size_t>(bi)];
        Route& b = routes[static_cast<std::size_t>(bj)];
        a.orders.insert(a.orders.end(), b.orders.begin(), b.orders.end());
        a.demand += b.demand;
        a.last_loc = b.last_loc;
        routes.erase(routes.begin() + bj);
    }

    // largest demand to largest capacity, first fit; leftovers to the
    // least-loaded vehicle (overload is H1's business)
    std::vector<std::size_t> route_idx(routes.size());
    for (std::size_t i = 0; i < routes.size(); ++i) route_idx[i] = i;
    std::stable_sort(route_idx.begin(), route_idx.end(), [&](std::size_t a, std::size_t b) {
        return routes[a].demand.kg > routes[b].demand.kg;
    });
    std::vector<int> veh_idx(p.inst->vehicles.size());
    for (std::size_t v = 0; v < veh_idx.size(); ++v) veh_idx[v] = static_cast<int>(v);
    std::stable_sort(veh_idx.begin(), veh_idx.end(), [&](int a, int b) {
        return p.inst->vehicles[a].capacity.kg > p.inst->vehicles[b].capacity.kg;
    });

    Solution sol = p.empty_solution();
    std::vector<Load> loads(p.num_vehicles());
    for (std::size_t ri : route_idx) {
        const Route& r = routes[ri];
        int target = -1;
        for (int v : veh_idx)
            if ((loads[v] + r.demand).fits_in(p.inst->vehicles[v].capacity)) {
                target = v;
                break;
            }
        if (target < 0) {
            target = 0;
            for (int v = 1; v < p.num_vehicles(); ++v)
                if (loads[v].kg < loads[target].kg) target = v;
        }
        Chain& chain = sol.chains[target];
        for (int oi : r.orders) {
            chain.insert(chain.end() - 1, StopVisit{p.order_pickup[oi], 0});
            chain.insert(chain.end() - 1, StopVisit{p.order_delivery[oi], 0});
        }
        loads[target] += r.demand;
    }
    return sol;
}

struct TabuParams {
    int tabu_tenure = 20;
    int max_unimproved = 500;
    double max_runtime = 10.0;
    std::uint64_t rng_seed = 1;
    int samples_per_operator = 2;
};

namespace tabu_detail {

inline std::size_t solution_signature(const Solution& sol) {
    std::string repr;
    for (const auto& chain : sol.chains) {
        for (const auto& sv : chain) {
            repr += std::to_string(sv.stop);
            repr += ',';
            repr += std::to_string(sv.option);
            repr += ';';
        }
        repr += '|';
    }
    return std::hash<std::string>{}(repr);
}

}  // namespace tabu_detail

// Steepest descent over sampled VRP and TSP mutator moves; recently visited
// solutions are tabu for `tabu_tenure` iterations unless a move beats the
// best score ever seen (aspiration).
inline EvaluatedSolution tabu_search(const Problem& p, const TravelMatrix& m,
                                     const Solution& start, TabuParams params,
                                     ProgressFn progress = {}) {
    Rng rng(params.rng_seed);
    const Budget budget{std::chrono::steady_clock::now(), params.max_runtime};
    ProgressEmitter emit{std::move(progress)};

    EvaluatedSolution current = evaluate_solution(p, m, start);
    EvaluatedSolution best = current;
    emit.poll(budget, best.score, true);

    std::unordered_map<std::size_t, long> tabu;  // signature -> expiry iteration
    tabu[tabu_detail::solution_signature(current.solution)] = params.tabu_tenure;

    long it = 0;
    int unimproved = 0;
    while (unimproved < params.max_unimproved && !budget.expired()) {
        ++it;
        std::vector<Solution> candidates;
        for (const auto kind : kVrpMutatorKinds)
            for (int s = 0; s < params.samples_per_operator; ++s)
                if (auto cand = vrp_mutate(kind, current.solution, p, m, rng);
                    cand && solution_valid(p, *cand))
                    candidates.push_back(std::move(*cand));
        for (const auto kind : kTspMutatorKinds)
            for (int s = 0; s < params.samples_per_operator; ++s) {
                const auto sources = ga_detail::vehicles_with_orders(p, current.solution);
                if (sources.empty()) break;
                const int v = sources[uniform_index(rng, sources.size())];
                if (auto chain = tsp_mutate(kind, current.solution.chains[v], p, m, rng)) {
                    Solution cand = current.solution;
                    cand.chains[v] = std::move(*chain);
                    if (solution_valid(p, cand)) candidates.push_back(std::move(cand));
                }
            }
        if (candidates.empty()) break;

        bool moved = false;
        EvaluatedSolution chosen;
        std::size_t chosen_sig = 0;
        for (auto& cand : candidates) {
            if (budget.expired()) break;
            const std::size_t sig = tabu_detail::solution_signature(cand);
            EvaluatedSolution ev = evaluate_solution(p, m, std::move(cand));
            const auto t = tabu.find(sig);
            const bool is_tabu = t != tabu.end() && t->second > it;
            if (is_tabu && !(ev.score < best.score)) continue;  // aspiration only
            if (!moved || ev.score < chosen.score) {
                chosen = std::move(ev);
                chosen_sig = sig;
                moved = true;
            }
        }
        if (moved) {
            current = std::move(chosen);
            tabu[chosen_sig] = it + params.tabu_tenure;
        }
        if (current.score < best.score) {
            best = current;
            unimproved = 0;
            emit.poll(budget, best.score, true);
        } else {
            ++unimproved;
            emit.poll(budget, best.score);
        }
        if (it % 64 == 0) {  // drop expired entries
            for (auto e = tabu.begin(); e != tabu.end();)
                e = e->second <= it ? tabu.erase(e) : std::next(e);
        }
    }
    return best;
}

}  // namespace rvrp
