#pragma once

// Two-stage ant colony optimization. The VRP stage walks two pheromone
// matrices (vehicle-to-stop capacity ratios and stop-to-stop attraction,
// initialized from the travel distances) and assigns pickup/delivery stops
// in pairs; the TSP stage walks a single stop-to-stop matrix whose diagonal
// holds first-stop attraction, with deliveries masked invisible until their
// pickup has been walked. Deposits follow the cubic score-factor update with
// extra deposits for the best solutions (elitism).

#include <array>
#include <deque>

#include "rvrp/ga.hpp"  // TspSolver, TspMemo
#include "rvrp/solver.hpp"

namespace rvrp {

inline constexpr double kPheromoneFloor = 1e-6;

struct AcoParams {
    double evaporation = 0.05;          // decay applied when a step triggers
    double evaporation_trigger = 0.05;  // per-iteration trigger probability
    int best_set_size = 10;
    int max_unimproved = 500;
    double max_runtime = 30.0;
    double novelty_fraction = 0.1;  // probabilistic constructions
    std::uint64_t rng_seed = 1;
    int tsp_max_unimproved = 50;
};

// Per-level extremes over every score seen this run; sentinel levels of
// infeasible solutions do not take part.
struct ScoreExtremes {
    std::array<std::int64_t, 6> worst{};
    std::array<std::int64_t, 6> best{};
    std::array<bool, 6> seen{};

    void update(const Score& s) {
        for (int i = 1; i <= 6; ++i) {
            const std::int64_t v = s.level(i);
            if (v == kNotEvaluated) continue;
            auto& w = worst[i - 1];
            auto& b = best[i - 1];
            if (!seen[i - 1]) {
                w = b = v;
                seen[i - 1] = true;
            } else {
                w = std::max(w, v);
                b = std::min(b, v);
            }
        }
    }
};

struct PheromoneState {
    std::vector<std::vector<double>> vehicle_stop;  // V x S
    std::vector<std::vector<double>> stop_stop;     // S x S
    std::vector<EvaluatedSolution> best_set;        // sorted best-first
    int best_set_capacity = 10;
    ScoreExtremes extremes;
};

inline double distance_pheromone(Meters d) {
    return 1.0 / (1.0 + static_cast<double>(d) / 1000.0);
}

// stop_stop from distances (first location option), vehicle_stop from
// free-capacity ratios: 1.0 while empty.
inline PheromoneState init_pheromones(const Problem& p, const TravelMatrix& m) {
    PheromoneState st;
    const int s = p.num_stops();
    st.vehicle_stop.assign(p.num_vehicles(), std::vector<double>(s, 1.0));
    st.stop_stop.assign(s, std::vector<double>(s, 1.0));
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j) {
            const Meters d = m.d(p.stop_option_loc[i][0], p.stop_option_loc[j][0]);
            st.stop_stop[i][j] = std::max(distance_pheromone(d), kPheromoneFloor);
        }
    return st;
}

// |(ws - s)^3 / (ws - bs)^3|; a fully converged level counts as 1.
inline double score_factor(double ws, double bs, double s) {
    if (ws == bs) return 1.0;
    const double num = (ws - s) * (ws - s) * (ws - s);
    const double den = (ws - bs) * (ws - bs) * (ws - bs);
    return std::abs(num / den);
}

// Eq.-13 deposit amount: sum over levels of f_i * p_i / i, where p_i is 1
// when the level beats the worst value ever seen and 0.25 otherwise.
inline double deposit_amount(const ScoreExtremes& ex, const Score& s) {
    double amount = 0.0;
    for (int i = 1; i <= 6; ++i) {
        const std::int64_t v = s.level(i);
        if (v == kNotEvaluated || !ex.seen[i - 1]) continue;
        const double f = score_factor(static_cast<double>(ex.worst[i - 1]),
                                      static_cast<double>(ex.best[i - 1]),
                                      static_cast<double>(v));
        const double pi = v < ex.worst[i - 1] ? 1.0 : 0.25;
        amount += f * pi / i;
    }
    return amount;
}

// Adds the solution's deposit to every vehicle-stop pair it uses and to the
// chain transitions it drives (both directions).
inline void deposit(PheromoneState& st, const Problem& p, const EvaluatedSolution& ev) {
    const double amount = deposit_amount(st.extremes, ev.score);
    if (amount <= 0.0) return;
    for (int v = 0; v < p.num_vehicles(); ++v) {
        const Chain& chain = ev.solution.chains[v];
        if (p.chain_service_count(chain) == 0) continue;
        for (const auto& sv : chain) st.vehicle_stop[v][sv.stop] += amount;
        for (std::size_t i = 1; i < chain.size(); ++i) {
            st.stop_stop[chain[i - 1].stop][chain[i].stop] += amount;
            st.stop_stop[chain[i].stop][chain[i - 1].stop] += amount;
        }
    }
}

inline void evaporate(PheromoneState& st, Rng& rng, double trigger, double decay) {
    if (!chance(rng, trigger)) return;
    const double keep = 1.0 - decay;
    for (auto& row : st.vehicle_stop)
        for (auto& x : row) x = std::max(x * keep, kPheromoneFloor);
    for (auto& row : st.stop_stop)
        for (auto& x : row) x = std::max(x * keep, kPheromoneFloor);
}

namespace aco_detail {

inline double free_capacity_ratio(const Load& cap, const Load& load) {
    double ratio = 1.0;
    bool any = false;
    auto dim = [&](std::int64_t c, std::int64_t l) {
        if (c <= 0) return;
        any = true;
        ratio = std::min(ratio, static_cast<double>(c - l) / static_cast<double>(c));
    };
    dim(cap.pieces, load.pieces);
    dim(cap.liters, load.liters);
    dim(cap.kg, load.kg);
    if (!any) return 1.0;
    return std::max(ratio, kPheromoneFloor);
}

}  // namespace aco_detail

// One ant assigns all stops: next order by stop-to-stop pheromone from the
// current position (greedy, or roulette on probabilistic walks), vehicle by
// roulette over vehicle-stop pheromone plus attraction to the stops already
// on board. Pickup and delivery always land on the same vehicle. A full
// fleet falls back to the least-loaded vehicle and the overload surfaces in
// H1. The touched vehicle row is rewritten with its free-capacity ratio
// after every assignment.
inline Solution construct_assignment(const Problem& p, const TravelMatrix& m,
                                     PheromoneState& st, Rng& rng, bool probabilistic) {
    (void)m;
    Solution sol = p.empty_solution();
    std::vector<Load> loads(p.num_vehicles());
    std::vector<char> assigned(p.num_orders(), 0);
    int cur_stop = p.vehicle_begin[0];

    for (int n = 0; n < p.num_orders(); ++n) {
        // next pickup
        std::vector<int> cands;
        for (int oi = 0; oi < p.num_orders(); ++oi)
            if (!assigned[oi]) cands.push_back(p.order_pickup[oi]);
        int pick;
        if (probabilistic) {
            std::vector<double> w;
            w.reserve(cands.size());
            for (int s : cands) w.push_back(st.stop_stop[cur_stop][s]);
            pick = cands[roulette(rng, w)];
        } else {
            pick = cands.front();
            for (int s : cands)
                if (st.stop_stop[cur_stop][s] > st.stop_stop[cur_stop][pick]) pick = s;
        }
        const int oi = p.stop_order[pick];
        const Order& order = p.inst->orders[oi];

        // candidate vehicles with room; otherwise the least loaded by weight
        std::vector<int> vehicles;
        for (int v = 0; v < p.num_vehicles(); ++v)
            if ((loads[v] + order.demand).fits_in(p.inst->vehicles[v].capacity))
                vehicles.push_back(v);
        int chosen;
        if (vehicles.empty()) {
            chosen = 0;
            for (int v = 1; v < p.num_vehicles(); ++v)
                if (loads[v].kg < loads[chosen].kg) chosen = v;
        } else {
            std::vector<double> w;
            w.reserve(vehicles.size());
            for (int v : vehicles) {
                double weight = st.vehicle_stop[v][pick];
                for (const auto& sv : sol.chains[v])
                    if (p.is_service_stop(sv.stop)) weight += st.stop_stop[pick][sv.stop];
                w.push_back(weight);
            }
            chosen = vehicles[roulette(rng, w)];
        }

        Chain& chain = sol.chains[chosen];
        chain.insert(chain.end() - 1, StopVisit{pick, 0});
        chain.insert(chain.end() - 1, StopVisit{p.order_delivery[oi], 0});
        loads[chosen] += order.demand;
        assigned[oi] = 1;
        cur_stop = p.order_delivery[oi];

        const double ratio = aco_detail::free_capacity_ratio(
            p.inst->vehicles[chosen].capacity, loads[chosen]);
        for (auto& x : st.vehicle_stop[chosen]) x = ratio;
    }
    return sol;
}

namespace aco_detail {

inline void try_add_best(PheromoneState& st, const EvaluatedSolution& ev) {
    const bool full = static_cast<int>(st.best_set.size()) >= st.best_set_capacity;
    if (full && !(ev.score < st.best_set.back().score)) return;
    st.best_set.push_back(ev);
    std::stable_sort(st.best_set.begin(), st.best_set.end(),
                     [](const EvaluatedSolution& a, const EvaluatedSolution& b) {
                         return a.score < b.score;
                     });
    if (static_cast<int>(st.best_set.size()) > st.best_set_capacity)
        st.best_set.resize(static_cast<std::size_t>(st.best_set_capacity));
}

}  // namespace aco_detail

inline TspSolver make_aco_tsp_solver(const Problem& p, const TravelMatrix& m,
                                     int max_unimproved = 50);

inline EvaluatedSolution run_vrp_aco(const Problem& p, const TravelMatrix& m, AcoParams params,
                                     TspSolver tsp_solver = {}, ProgressFn progress = {}) {
    if (!tsp_solver) tsp_solver = make_aco_tsp_solver(p, m, params.tsp_max_unimproved);
    Rng rng(params.rng_seed);
    const Budget budget{std::chrono::steady_clock::now(), params.max_runtime};
    ProgressEmitter emit{std::move(progress)};

    PheromoneState st = init_pheromones(p, m);
    st.best_set_capacity = params.best_set_size;

    EvaluatedSolution best;
    best.score = Score::worst();

    // no memoization here: with one ant per iteration, re-solving a recurring
    // stop set under a fresh nested seed is what keeps improving the chains
    std::uint64_t nested = 0;
    int unimproved = 0;
    while (unimproved < params.max_unimproved && !budget.expired()) {
        const bool probabilistic = chance(rng, params.novelty_fraction);
        Solution sol = construct_assignment(p, m, st, rng, probabilistic);
        for (int v = 0; v < p.num_vehicles(); ++v) {
            if (p.chain_service_count(sol.chains[v]) == 0) continue;
            sol.chains[v] = tsp_solver(
                v, sol.chains[v],
                derive_seed(params.rng_seed, ++nested, static_cast<std::uint64_t>(v)),
                budget.remaining());
        }
        EvaluatedSolution ev = evaluate_solution(p, m, std::move(sol));
        st.extremes.update(ev.score);
        aco_detail::try_add_best(st, ev);
        for (const auto& member : st.best_set) deposit(st, p, member);
        evaporate(st, rng, params.evaporation_trigger, params.evaporation);

        if (ev.score < best.score) {
            best = std::move(ev);
            unimproved = 0;
            emit.poll(budget, best.score, true);
        } else {
            ++unimproved;
            emit.poll(budget, best.score);
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// TSP stage

// Orders one chain with a single stop-to-stop matrix. Ants walk by roulette;
// a delivery stays invisible until its pickup has been walked, so no walk
// can ever break precedence. Terminates on unimproved iterations, budget, or
// when the last ten walks agree on one path.
inline Chain run_tsp_aco(const Problem& p, const TravelMatrix& m, int vehicle,
                         const Chain& chain, std::uint64_t seed, double max_seconds,
                         int max_unimproved = 50) {
    if (p.chain_service_count(chain) == 0) return chain;
    Rng rng(seed);
    const Budget budget{std::chrono::steady_clock::now(), max_seconds};

    const std::vector<StopVisit> visits(chain.begin() + 1, chain.end() - 1);
    const int n = static_cast<int>(visits.size());
    const int begin_loc = p.loc_of(chain.front());

    // diagonal: attraction as the first stop, from the tour begin location
    std::vector<std::vector<double>> pher(n, std::vector<double>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const Meters d = i == j ? m.d(begin_loc, p.stop_option_loc[visits[i].stop][0])
                                    : m.d(p.stop_option_loc[visits[i].stop][0],
                                          p.stop_option_loc[visits[j].stop][0]);
            pher[i][j] = std::max(distance_pheromone(d), kPheromoneFloor);
        }

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

    auto walk = [&](std::vector<int>& order_out) {
        order_out.clear();
        std::vector<char> walked(n, 0);
        std::vector<char> picked(p.num_orders(), 0);
        Chain out;
        out.push_back(chain.front());
        int cur = -1;
        int cur_loc = begin_loc;
        for (int step = 0; step < n; ++step) {
            std::vector<int> visible;
            std::vector<double> w;
            for (int k = 0; k < n; ++k) {
                if (walked[k]) continue;
                const int oi = p.stop_order[visits[k].stop];
                if (oi >= 0 && p.stops[visits[k].stop].kind == StopKind::Delivery &&
                    !picked[oi])
                    continue;  // invisible until its pickup is on the path
                visible.push_back(k);
                w.push_back(cur < 0 ? pher[k][k] : pher[cur][k]);
            }
            const int k = visible[roulette(rng, w)];
            walked[k] = 1;
            const int oi = p.stop_order[visits[k].stop];
            if (oi >= 0 && p.stops[visits[k].stop].kind == StopKind::Pickup) picked[oi] = 1;
            StopVisit sv = visits[k];
            sv.option = nearest_option(sv.stop, cur_loc);
            out.push_back(sv);
            cur = k;
            cur_loc = p.loc_of(sv);
            order_out.push_back(k);
        }
        StopVisit end = chain.back();
        end.option = nearest_option(end.stop, cur_loc);
        out.push_back(end);
        return out;
    };

    auto deposit_path = [&](const std::vector<int>& path, const ScoreExtremes& ex,
                            const Score& s) {
        const double amount = deposit_amount(ex, s);
        if (amount <= 0.0 || path.empty()) return;
        pher[path[0]][path[0]] += amount;
        for (std::size_t i = 1; i < path.size(); ++i)
            pher[path[i - 1]][path[i]] += amount;
    };

    ScoreExtremes extremes;
    Chain best_chain = chain;
    Score best_score = chain_score(p, m, vehicle, chain);
    std::vector<int> best_path;
    extremes.update(best_score);

    std::deque<std::vector<int>> recent;
    int unimproved = 0;
    while (unimproved < max_unimproved && !budget.expired()) {
        std::vector<int> path;
        Chain cand = walk(path);
        const Score s = chain_score(p, m, vehicle, cand);
        extremes.update(s);

        deposit_path(path, extremes, s);
        if (!best_path.empty() && best_path != path)
            deposit_path(best_path, extremes, best_score);  // elitism
        if (chance(rng, 0.05)) {
            const double keep = 0.95;
            for (auto& row : pher)
                for (auto& x : row) x = std::max(x * keep, kPheromoneFloor);
        }

        if (s < best_score) {
            best_score = s;
            best_chain = std::move(cand);
            best_path = path;
            unimproved = 0;
        } else {
            ++unimproved;
        }

        recent.push_back(std::move(path));
        if (recent.size() > 10) recent.pop_front();
        if (recent.size() == 10 &&
            std::all_of(recent.begin(), recent.end(),
                        [&](const std::vector<int>& q) { return q == recent.front(); }))
            break;  // all ants walk the same path
    }
    return best_chain;
}

inline TspSolver make_aco_tsp_solver(const Problem& p, const TravelMatrix& m,
                                     int max_unimproved) {
    return [&p, &m, max_unimproved](int vehicle, const Chain& chain, std::uint64_t seed,
                                    double remaining) {
        return run_tsp_aco(p, m, vehicle, chain, seed, remaining, max_unimproved);
    };
}

}  // namespace rvrp
