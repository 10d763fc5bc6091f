#include <gtest/gtest.h>

#include <algorithm>

#include "rvrp/baselines.hpp"
#include "test_support.hpp"

using namespace rvrp;
namespace tt = rvrp::testing;

namespace {

std::vector<int> all_service_stops(const Problem& p) {
    std::vector<int> stops;
    for (int oi = 0; oi < p.num_orders(); ++oi) {
        stops.push_back(p.order_pickup[oi]);
        stops.push_back(p.order_delivery[oi]);
    }
    return stops;
}

// independent enumeration over the full permutation space of the stops
Score enumerate_best_chain_score(const Problem& p, const TravelMatrix& m, int vehicle) {
    std::vector<StopVisit> inner;
    for (int stop : all_service_stops(p)) inner.push_back({stop, 0});
    std::sort(inner.begin(), inner.end(),
              [](const StopVisit& a, const StopVisit& b) { return a.stop < b.stop; });
    Score best = Score::worst();
    do {
        Chain cand = p.empty_chain(vehicle);
        cand.insert(cand.end() - 1, inner.begin(), inner.end());
        if (!chain_precedence_valid(p, cand)) continue;
        best = std::min(best, chain_score(p, m, vehicle, cand));
    } while (std::next_permutation(
        inner.begin(), inner.end(),
        [](const StopVisit& a, const StopVisit& b) { return a.stop < b.stop; }));
    return best;
}

}  // namespace

TEST(BruteForceTsp, SinglePairHasOneValidOrder) {
    const Instance inst = tt::line_instance(1, 1);
    const Problem p = Problem::build(inst);
    const auto m = build_euclidean(inst.locations, 10.0);
    const auto res = brute_force_tsp(p, m, 0, all_service_stops(p), 10.0);
    EXPECT_TRUE(res.complete);
    ASSERT_EQ(res.chain.size(), 4u);
    EXPECT_EQ(res.chain[1].stop, p.order_pickup[0]);
    EXPECT_EQ(res.chain[2].stop, p.order_delivery[0]);
}

TEST(BruteForceTsp, TriangleTourMatchesHandEnumeration) {
    // right angle at the depot, legs 3 km and 4 km, hypotenuse 5 km
    Instance inst;
    inst.locations.push_back(tt::loc("depot", 0, 0));
    inst.locations.push_back(tt::loc("a", 3000, 0));
    inst.locations.push_back(tt::loc("b", 0, 4000));
    inst.locations.push_back(tt::loc("c", 1500, 2000));
    inst.vehicles.push_back(tt::basic_vehicle("veh0", "depot"));
    inst.drivers.push_back(tt::basic_driver("drv0"));
    inst.orders.push_back(tt::basic_order("o1", "depot", "a"));
    inst.orders.push_back(tt::basic_order("o2", "depot", "b"));
    inst.orders.push_back(tt::basic_order("o3", "depot", "c"));
    const Problem p = Problem::build(inst);
    const auto m = build_euclidean(inst.locations, 10.0);

    const auto res = brute_force_tsp(p, m, 0, all_service_stops(p), 30.0);
    EXPECT_TRUE(res.complete);
    EXPECT_EQ(res.score, enumerate_best_chain_score(p, m, 0));
}

TEST(BruteForceTsp, GuardRefusesLargeInputsUnlessOverridden) {
    const Instance inst = tt::line_instance(6, 1);  // 12 service stops
    const Problem p = Problem::build(inst);
    const auto m = build_euclidean(inst.locations, 10.0);
    EXPECT_THROW(brute_force_tsp(p, m, 0, all_service_stops(p), 1.0), GuardError);

    // overriding works; the tiny budget forces a partial result
    const auto res = brute_force_tsp(p, m, 0, all_service_stops(p), 0.05, true);
    EXPECT_FALSE(res.complete);
    EXPECT_TRUE(res.score < Score::worst());  // best-so-far carried out
}

TEST(BruteForceVrp, TieReturnsLexicographicallyFirstAssignment) {
    const Instance inst = tt::line_instance(1, 2);  // two identical vehicles
    const Problem p = Problem::build(inst);
    const auto m = build_euclidean(inst.locations, 10.0);
    const auto res = brute_force_vrp(p, m, 10.0);
    EXPECT_TRUE(res.complete);
    EXPECT_EQ(order_vehicle_map(p, res.best.solution)[0], 0);
}

TEST(BruteForceVrp, ClusteredAssignmentIsOptimal) {
    Instance inst;
    inst.locations.push_back(tt::loc("A", 0, 0));
    inst.locations.push_back(tt::loc("B", 40000, 0));
    inst.locations.push_back(tt::loc("a1", 800, 0));
    inst.locations.push_back(tt::loc("b1", 40800, 0));
    inst.vehicles.push_back(tt::basic_vehicle("vehA", "A"));
    inst.vehicles.push_back(tt::basic_vehicle("vehB", "B"));
    inst.drivers = {tt::basic_driver("drv0"), tt::basic_driver("drv1")};
    inst.orders.push_back(tt::basic_order("oa", "A", "a1"));
    inst.orders.push_back(tt::basic_order("ob", "B", "b1"));
    const Problem p = Problem::build(inst);
    const auto m = build_euclidean(inst.locations, 10.0);

    const auto res = brute_force_vrp(p, m, 10.0);
    EXPECT_TRUE(res.complete);
    const auto on = order_vehicle_map(p, res.best.solution);
    EXPECT_EQ(on[0], 0);
    EXPECT_EQ(on[1], 1);
}

TEST(BruteForceVrp, GuardRefusesFiveOrders) {
    const Instance inst = tt::line_instance(5, 2);
    const Problem p = Problem::build(inst);
    const auto m = build_euclidean(inst.locations, 10.0);
    EXPECT_THROW(brute_force_vrp(p, m, 1.0), GuardError);
}

TEST(SavingsConstruct, SingleOrderSingleTour) {
    const Instance inst = tt::line_instance(1, 1);
    const Problem p = Problem::build(inst);
    const auto m = build_euclidean(inst.locations, 10.0);
    const Solution sol = savings_construct(p, m);
    EXPECT_TRUE(solution_valid(p, sol));
    EXPECT_EQ(p.chain_service_count(sol.chains[0]), 2);
}

TEST(SavingsConstruct, PositiveSavingMergesRoutes) {
    // two deliveries close together and far from the depot: merging saves
    // nearly a whole depot round trip
    Instance inst;
    inst.locations.push_back(tt::loc("depot", 0, 0));
    inst.locations.push_back(tt::loc("d1", 20000, 0));
    inst.locations.push_back(tt::loc("d2", 21000, 0));
    inst.vehicles.push_back(tt::basic_vehicle("vehA", "depot"));
    inst.vehicles.push_back(tt::basic_vehicle("vehB", "depot"));
    inst.drivers = {tt::basic_driver("drv0"), tt::basic_driver("drv1")};
    inst.orders.push_back(tt::basic_order("o1", "depot", "d1"));
    inst.orders.push_back(tt::basic_order("o2", "depot", "d2"));
    const Problem p = Problem::build(inst);
    const auto m = build_euclidean(inst.locations, 10.0);

    // hand savings: s = d(d1, depot) + d(depot, depot-pickup of o2) - d(d1, depot-pickup)
    // = 20000 + 0 - 20000 > 0 is wrong on a line through the depot; the real
    // check is behavioral: both orders end up on one vehicle
    const Solution sol = savings_construct(p, m);
    EXPECT_TRUE(solution_valid(p, sol));
    const auto on = order_vehicle_map(p, sol);
    EXPECT_EQ(on[0], on[1]);
}

TEST(SavingsConstruct, JointCapacityExcessPreventsMerge) {
    Instance inst;
    inst.locations.push_back(tt::loc("depot", 0, 0));
    inst.locations.push_back(tt::loc("d1", 20000, 0));
    inst.locations.push_back(tt::loc("d2", 21000, 0));
    inst.vehicles.push_back(tt::basic_vehicle("vehA", "depot", tt::load(100, 10000, 100)));
    inst.vehicles.push_back(tt::basic_vehicle("vehB", "depot", tt::load(100, 10000, 100)));
    inst.drivers = {tt::basic_driver("drv0"), tt::basic_driver("drv1")};
    inst.orders.push_back(tt::basic_order("o1", "depot", "d1", tt::load(1, 100, 80)));
    inst.orders.push_back(tt::basic_order("o2", "depot", "d2", tt::load(1, 100, 80)));
    const Problem p = Problem::build(inst);
    const auto m = build_euclidean(inst.locations, 10.0);

    const Solution sol = savings_construct(p, m);
    EXPECT_TRUE(solution_valid(p, sol));
    const auto on = order_vehicle_map(p, sol);
    EXPECT_NE(on[0], on[1]);  // 160 kg joint load exceeds every vehicle
}

TEST(SavingsConstruct, NeverSplitsPickupFromDelivery) {
    Rng rng(21);
    for (int rep = 0; rep < 30; ++rep) {
        tt::RandomInstanceOpts opts;
        opts.orders = uniform_int(rng, 1, 8);
        opts.vehicles = uniform_int(rng, 1, 3);
        const Instance inst = tt::random_instance(rng, opts);
        const Problem p = Problem::build(inst);
        const auto m = build_euclidean(inst.locations, 10.0);
        EXPECT_TRUE(solution_valid(p, savings_construct(p, m)));
    }
}

TEST(TabuSearch, KeepsBruteForceOptimumScore) {
    Rng rng(22);
    tt::RandomInstanceOpts opts;
    opts.orders = 3;
    opts.vehicles = 2;
    const Instance inst = tt::random_instance(rng, opts);
    const Problem p = Problem::build(inst);
    const auto m = build_euclidean(inst.locations, 10.0);
    const auto oracle = brute_force_vrp(p, m, 30.0);
    ASSERT_TRUE(oracle.complete);

    TabuParams params;
    params.max_unimproved = 30;
    params.max_runtime = 10.0;
    const auto res = tabu_search(p, m, oracle.best.solution, params);
    EXPECT_EQ(res.score, oracle.best.score);  // aspiration preserves the optimum
}

TEST(TabuSearch, SeededDeterminism) {
    Rng rng(23);
    tt::RandomInstanceOpts opts;
    opts.orders = 4;
    opts.vehicles = 2;
    opts.time_windows = true;
    const Instance inst = tt::random_instance(rng, opts);
    const Problem p = Problem::build(inst);
    const auto m = build_euclidean(inst.locations, 10.0);
    const Solution start = savings_construct(p, m);
    TabuParams params;
    params.max_unimproved = 40;
    params.max_runtime = 30.0;
    params.rng_seed = 99;
    const auto a = tabu_search(p, m, start, params);
    const auto b = tabu_search(p, m, start, params);
    EXPECT_EQ(a.score, b.score);
    EXPECT_EQ(a.solution.chains, b.solution.chains);
}

TEST(TabuSearch, ImprovesFromAPoorStart) {
    Rng rng(24);
    tt::RandomInstanceOpts opts;
    opts.orders = 4;
    opts.vehicles = 2;
    const Instance inst = tt::random_instance(rng, opts);
    const Problem p = Problem::build(inst);
    const auto m = build_euclidean(inst.locations, 10.0);

    // deliberately poor start: everything on vehicle 0 in id order
    Solution start = p.empty_solution();
    for (int oi = 0; oi < p.num_orders(); ++oi) {
        start.chains[0].insert(start.chains[0].end() - 1, StopVisit{p.order_pickup[oi], 0});
        start.chains[0].insert(start.chains[0].end() - 1, StopVisit{p.order_delivery[oi], 0});
    }
    const auto started = evaluate_solution(p, m, start);

    TabuParams params;
    params.max_unimproved = 100;
    params.max_runtime = 10.0;
    params.rng_seed = 7;
    std::vector<Score> trajectory;
    const auto res = tabu_search(p, m, start, params,
                                 [&](double, const Score& s) { trajectory.push_back(s); });
    EXPECT_LE(res.score, started.score);
    for (std::size_t i = 1; i < trajectory.size(); ++i)
        EXPECT_LE(trajectory[i], trajectory[i - 1]);

    const auto oracle = brute_force_vrp(p, m, 30.0);
    ASSERT_TRUE(oracle.complete);
    EXPECT_LE(oracle.best.score, res.score);  // the oracle is never beaten
}

TEST(GlobalOracleInvariant, NoSolverBeatsBruteForce) {
    Rng rng(25);
    for (int rep = 0; rep < 3; ++rep) {
        tt::RandomInstanceOpts opts;
        opts.orders = 3;
        opts.vehicles = 2;
        opts.time_windows = true;
        const Instance inst = tt::random_instance(rng, opts);
        const Problem p = Problem::build(inst);
        const auto m = build_euclidean(inst.locations, 10.0);
        const auto oracle = brute_force_vrp(p, m, 60.0);
        ASSERT_TRUE(oracle.complete);

        GaParams ga;
        ga.max_unimproved = 30;
        ga.max_runtime = 10.0;
        ga.rng_seed = rep + 1;
        EXPECT_LE(oracle.best.score, run_vrp_ga(p, m, ga).score);

        const auto savings = evaluate_solution(p, m, savings_construct(p, m));
        EXPECT_LE(oracle.best.score, savings.score);
    }
}
