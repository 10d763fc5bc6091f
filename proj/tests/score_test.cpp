#include <gtest/gtest.h>

#include "rvrp/score.hpp"
#include "rvrp/solver.hpp"
#include "test_support.hpp"

using namespace rvrp;
namespace tt = rvrp::testing;

namespace {

Solution everything_on_vehicle(const Problem& p, int vehicle) {
    Solution sol = p.empty_solution();
    for (int oi = 0; oi < p.num_orders(); ++oi) {
        Chain& c = sol.chains[vehicle];
        c.insert(c.end() - 1, StopVisit{p.order_pickup[oi], 0});
        c.insert(c.end() - 1, StopVisit{p.order_delivery[oi], 0});
    }
    return sol;
}

void staff(const Problem& p, Solution& sol) {
    sol.drivers.assign(p.num_vehicles(), {});
    std::vector<char> used(p.inst->drivers.size(), 0);
    for (int v = 0; v < p.num_vehicles(); ++v)
        sol.drivers[v] = assign_drivers(p, sol.chains[v], v, used).first;
}

}  // namespace

TEST(EvalH1, SingleOrderRestrictionFaultIs100) {
    Instance inst = tt::line_instance(1, 1);
    inst.orders[0].hazardous = true;  // vehicle is not hazmat capable
    const Problem p = Problem::build(inst);
    Solution sol = everything_on_vehicle(p, 0);
    staff(p, sol);
    EXPECT_EQ(eval_h1(p, sol), 100);
}

TEST(EvalH1, EmptySolutionScoresZero) {
    Instance inst = tt::line_instance(1, 2);
    inst.orders.clear();
    const Problem p = Problem::build(inst);
    Solution sol = p.empty_solution();
    EXPECT_EQ(eval_h1(p, sol), 0);
    EXPECT_EQ(eval_h2(p, sol), 0);
}

TEST(EvalH1, CapacityExcessIsClampedDifference) {
    Instance inst = tt::line_instance(1, 1);
    inst.vehicles[0].capacity = {100, 100000, 100};
    inst.orders[0].demand = {1, 100, 120};  // 120 kg against a 100 kg cap
    const Problem p = Problem::build(inst);
    Solution sol = everything_on_vehicle(p, 0);
    staff(p, sol);
    EXPECT_EQ(eval_h1(p, sol), 20);
}

TEST(EvalH1, PeakLoadDependsOnSequence) {
    Instance inst = tt::line_instance(2, 1);
    inst.vehicles[0].capacity = {100, 100000, 60};
    inst.orders[0].demand = {1, 10, 50};
    inst.orders[1].demand = {1, 10, 50};
    const Problem p = Problem::build(inst);

    // interleaved: deliver the first order before picking up the second
    Solution seq = p.empty_solution();
    Chain& c = seq.chains[0];
    c.insert(c.end() - 1, StopVisit{p.order_pickup[0], 0});
    c.insert(c.end() - 1, StopVisit{p.order_delivery[0], 0});
    c.insert(c.end() - 1, StopVisit{p.order_pickup[1], 0});
    c.insert(c.end() - 1, StopVisit{p.order_delivery[1], 0});
    staff(p, seq);
    EXPECT_EQ(eval_h1(p, seq), 0);

    // both picked up before any delivery: peak is the joint 100 kg
    Solution both = p.empty_solution();
    Chain& cb = both.chains[0];
    cb.insert(cb.end() - 1, StopVisit{p.order_pickup[0], 0});
    cb.insert(cb.end() - 1, StopVisit{p.order_pickup[1], 0});
    cb.insert(cb.end() - 1, StopVisit{p.order_delivery[0], 0});
    cb.insert(cb.end() - 1, StopVisit{p.order_delivery[1], 0});
    staff(p, both);
    EXPECT_EQ(eval_h1(p, both), 40);
}

TEST(EvalH1, ColocationDependencies) {
    Instance inst = tt::line_instance(2, 2);
    inst.orders[0].colocated_with = {"ord1"};
    const Problem p = Problem::build(inst);

    Solution together = everything_on_vehicle(p, 0);
    staff(p, together);
    EXPECT_EQ(eval_h1(p, together), 0);

    Solution apart = p.empty_solution();
    for (int oi = 0; oi < 2; ++oi) {
        Chain& c = apart.chains[oi];
        c.insert(c.end() - 1, StopVisit{p.order_pickup[oi], 0});
        c.insert(c.end() - 1, StopVisit{p.order_delivery[oi], 0});
    }
    staff(p, apart);
    EXPECT_EQ(eval_h1(p, apart), 100);

    inst.orders[0].colocated_with.clear();
    inst.orders[0].not_colocated_with = {"ord1"};
    const Problem p2 = Problem::build(inst);
    staff(p2, together);
    EXPECT_EQ(eval_h1(p2, together), 100);
    staff(p2, apart);
    EXPECT_EQ(eval_h1(p2, apart), 0);
}

TEST(EvalH1, TrailerAttachesWhenAllowedAndNeeded) {
    Instance inst = tt::line_instance(1, 1);
    inst.vehicles[0].capacity = {100, 100000, 100};
    inst.orders[0].demand = {1, 100, 130};
    inst.trailers.push_back({"trl0", tt::load(10, 1000, 50), {}});
    {
        const Problem p = Problem::build(inst);
        Solution sol = everything_on_vehicle(p, 0);
        staff(p, sol);
        EXPECT_EQ(eval_h1(p, sol), 30);  // not allowed to pull it
    }
    inst.vehicles[0].trailer_allowed = true;
    {
        const Problem p = Problem::build(inst);
        Solution sol = everything_on_vehicle(p, 0);
        staff(p, sol);
        EXPECT_EQ(eval_h1(p, sol), 0);  // 100 + 50 covers the 130 kg peak
    }
}

TEST(EvalH2, WellFormedSolutionScoresZero) {
    const Instance inst = tt::line_instance(3, 2);
    const Problem p = Problem::build(inst);
    Solution sol = everything_on_vehicle(p, 0);
    EXPECT_EQ(eval_h2(p, sol), 0);
}

TEST(EvalH2, DeliveryBeforePickupIs100) {
    const Instance inst = tt::line_instance(1, 1);
    const Problem p = Problem::build(inst);
    Solution sol = p.empty_solution();
    Chain& c = sol.chains[0];
    c.insert(c.end() - 1, StopVisit{p.order_delivery[0], 0});
    c.insert(c.end() - 1, StopVisit{p.order_pickup[0], 0});
    EXPECT_EQ(eval_h2(p, sol), 100);
}

TEST(EvalH2, MissingTourEndIsOneFault) {
    const Instance inst = tt::line_instance(1, 1);
    const Problem p = Problem::build(inst);
    Solution sol = everything_on_vehicle(p, 0);
    sol.chains[0].pop_back();  // chain no longer ends at an end option
    EXPECT_EQ(eval_h2(p, sol), 1);
}

TEST(EvalH2, ForeignTourStopIsAFault) {
    const Instance inst = tt::line_instance(1, 2);
    const Problem p = Problem::build(inst);
    Solution sol = everything_on_vehicle(p, 0);
    Chain& c = sol.chains[0];
    c.insert(c.end() - 1, StopVisit{p.vehicle_begin[1], 0});  // other vehicle's begin
    EXPECT_EQ(eval_h2(p, sol), 1);
}

TEST(EvalH2, ForbiddenReturnCounted) {
    Instance inst = tt::line_instance(2, 1);
    inst.orders[1].delivery_location = "c0";  // both deliveries at the same place
    inst.vehicles[0].allow_return = false;
    const Problem p = Problem::build(inst);

    // P(depot) D(c0) P(depot) D(c0): one return to the depot, one to c0
    Solution sol = p.empty_solution();
    Chain& c = sol.chains[0];
    c.insert(c.end() - 1, StopVisit{p.order_pickup[0], 0});
    c.insert(c.end() - 1, StopVisit{p.order_delivery[0], 0});
    c.insert(c.end() - 1, StopVisit{p.order_pickup[1], 0});
    c.insert(c.end() - 1, StopVisit{p.order_delivery[1], 0});
    EXPECT_EQ(eval_h2(p, sol), 2);

    // consecutive visits to the same location are one block, no return
    Solution ok = p.empty_solution();
    Chain& c2 = ok.chains[0];
    c2.insert(c2.end() - 1, StopVisit{p.order_pickup[0], 0});
    c2.insert(c2.end() - 1, StopVisit{p.order_pickup[1], 0});
    c2.insert(c2.end() - 1, StopVisit{p.order_delivery[0], 0});
    c2.insert(c2.end() - 1, StopVisit{p.order_delivery[1], 0});
    EXPECT_EQ(eval_h2(p, ok), 0);
}

namespace {

ScheduledTour tour_with(Seconds start, Seconds end, int locs, int cl) {
    ScheduledTour t;
    t.vehicle = 0;
    t.start_time = start;
    t.end_time = end;
    t.duration = end - start;
    t.distinct_locations = locs;
    t.chain_length = cl;
    return t;
}

}  // namespace

TEST(EvalH3, WithinLimitsIsZero) {
    Instance inst = tt::line_instance(1, 1);
    inst.vehicles[0].max_tour_duration = 8 * 3600;
    inst.vehicles[0].tour_end_limit = 18 * 3600;
    const Problem p = Problem::build(inst);
    Schedules s;
    s.emplace(0, tour_with(8 * 3600, 15 * 3600, 2, 2));
    EXPECT_EQ(eval_h3(p, s), 0);
}

TEST(EvalH3, DurationOverrunInSeconds) {
    Instance inst = tt::line_instance(1, 1);
    inst.vehicles[0].max_tour_duration = 8 * 3600;
    inst.vehicles[0].tour_end_limit = kHorizon;
    const Problem p = Problem::build(inst);
    Schedules s;
    s.emplace(0, tour_with(8 * 3600, 17 * 3600, 2, 2));  // 9 h tour
    EXPECT_EQ(eval_h3(p, s), 3600);
}

TEST(EvalH3, LateEndInSeconds) {
    Instance inst = tt::line_instance(1, 1);
    inst.vehicles[0].max_tour_duration = 12 * 3600;
    inst.vehicles[0].tour_end_limit = 18 * 3600;
    const Problem p = Problem::build(inst);
    Schedules s;
    s.emplace(0, tour_with(8 * 3600, 18 * 3600 + 600, 2, 2));  // ends 18:10
    EXPECT_EQ(eval_h3(p, s), 600);
}

TEST(EvalS1, LateAndEarlyComponents) {
    Instance inst = tt::line_instance(2, 1);
    inst.orders[0].tw_delivery = TimeWindow{1000, 2000};
    inst.orders[1].tw_delivery = TimeWindow{5000, 6000};
    const Problem p = Problem::build(inst);

    ScheduledTour t = tour_with(0, 7000, 3, 2);
    ScheduledVisit a;
    a.visit = {p.order_delivery[0], 0};
    a.service_start = 2120;  // 120 s past the window end
    ScheduledVisit b;
    b.visit = {p.order_delivery[1], 0};
    b.service_start = 4970;  // 30 s before the window opens
    t.visits = {a, b};
    Schedules s;
    s.emplace(0, t);
    EXPECT_EQ(eval_s1(p, s), 150);

    t.visits[0].service_start = 1500;
    t.visits[1].service_start = 5000;
    s.clear();
    s.emplace(0, t);
    EXPECT_EQ(eval_s1(p, s), 0);
}

TEST(EvalS2, MixesKilometersAndSeconds) {
    const Instance inst = tt::line_instance(1, 1);
    const Problem p = Problem::build(inst);
    EXPECT_EQ(eval_s2(p, {}), 0);

    ScheduledTour t = tour_with(0, 1000, 2, 1);
    t.total_dist = 10000;
    t.total_drive = 600;
    t.total_service = 300;
    t.total_wait = 0;
    Schedules s;
    s.emplace(0, t);
    EXPECT_EQ(eval_s2(p, s), 910);
}

TEST(EvalS2, KilometersRoundedOnceAtTheSum) {
    const Instance inst = tt::line_instance(1, 2);
    const Problem p = Problem::build(inst);
    ScheduledTour a = tour_with(0, 10, 1, 1);
    a.total_dist = 400;  // 0.4 km each: rounds to 1 km summed, 0 if rounded per tour
    ScheduledTour b = a;
    b.vehicle = 1;
    Schedules s;
    s.emplace(0, a);
    s.emplace(1, b);
    EXPECT_EQ(eval_s2(p, s), 1);
}

TEST(EvalS3, DelayPlusLocationsPlusChainLength) {
    Instance inst = tt::line_instance(1, 1);
    inst.vehicles[0].tour_start_window = {8 * 3600, 9 * 3600};
    const Problem p = Problem::build(inst);
    Schedules s;
    s.emplace(0, tour_with(8 * 3600, 15 * 3600, 5, 8));
    EXPECT_EQ(eval_s3(p, s), 13);
    EXPECT_EQ(eval_s3(p, {}), 0);
}

TEST(Evaluate, InfeasibleShortCircuitsToSentinel) {
    Instance inst = tt::line_instance(1, 1);
    inst.orders[0].hazardous = true;
    const Problem p = Problem::build(inst);
    const auto m = build_euclidean(inst.locations, 10.0);
    const auto ev = evaluate_solution(p, m, everything_on_vehicle(p, 0));
    EXPECT_EQ(ev.score.h1, 100);
    EXPECT_EQ(ev.score.h2, 0);
    EXPECT_FALSE(ev.score.soft_evaluated());
    EXPECT_TRUE(ev.schedules.empty());

    const Score feasible{0, 0, 0, 0, 999999, 999};
    EXPECT_LT(feasible, ev.score);  // any feasible beats any H1 > 0
}

TEST(Evaluate, FeasibleSolutionHasAllSixLevels) {
    const Instance inst = tt::line_instance(2, 1);
    const Problem p = Problem::build(inst);
    const auto m = build_euclidean(inst.locations, 10.0);
    const auto ev = evaluate_solution(p, m, everything_on_vehicle(p, 0));
    EXPECT_TRUE(ev.score.feasible());
    EXPECT_TRUE(ev.score.soft_evaluated());
    EXPECT_GT(ev.score.s2, 0);
    EXPECT_GT(ev.score.s3, 0);
    ASSERT_EQ(ev.schedules.size(), 1u);
}

TEST(Evaluate, UnusedVehiclesContributeNothing) {
    const Instance inst = tt::line_instance(1, 3);
    const Problem p = Problem::build(inst);
    const auto m = build_euclidean(inst.locations, 10.0);
    const auto ev = evaluate_solution(p, m, everything_on_vehicle(p, 0));
    EXPECT_TRUE(ev.score.feasible());
    EXPECT_EQ(ev.schedules.size(), 1u);  // two idle vehicles not scheduled
}

TEST(Compare, SpecExamples) {
    const Score a{0, 0, 0, 0, 100, 5};
    EXPECT_TRUE(compare(a, a) == std::strong_ordering::equal);

    const Score b{0, 0, 0, 0, 99, 999};
    const Score c{0, 0, 0, 0, 100, 0};
    EXPECT_TRUE(compare(b, c) == std::strong_ordering::less);

    const Score d = Score::infeasible(1, 0);
    const Score e{0, 999, 999, 0, 0, 0};
    EXPECT_TRUE(compare(e, d) == std::strong_ordering::less);
}

TEST(Compare, TotalOrderOnRandomVectors) {
    Rng rng(17);
    auto random_score = [&] {
        auto comp = [&]() -> std::int64_t {
            if (chance(rng, 0.1)) return kNotEvaluated;
            return uniform_int(rng, 0, 5);
        };
        return Score{comp(), comp(), comp(), comp(), comp(), comp()};
    };
    for (int i = 0; i < 2000; ++i) {
        const Score a = random_score(), b = random_score(), c = random_score();
        // antisymmetry
        if (compare(a, b) == std::strong_ordering::less)
            EXPECT_TRUE(compare(b, a) == std::strong_ordering::greater);
        if (compare(a, b) == std::strong_ordering::equal)
            EXPECT_TRUE(compare(b, a) == std::strong_ordering::equal);
        // transitivity
        if (compare(a, b) != std::strong_ordering::greater &&
            compare(b, c) != std::strong_ordering::greater)
            EXPECT_TRUE(compare(a, c) != std::strong_ordering::greater);
    }
}

TEST(Evaluate, HardLevelsInvariantUnderIdenticalVehiclePermutation) {
    Rng rng(31);
    tt::RandomInstanceOpts opts;
    opts.orders = 5;
    opts.vehicles = 3;
    Instance inst = tt::random_instance(rng, opts);
    const Problem p = Problem::build(inst);

    Solution sol = p.empty_solution();
    for (int oi = 0; oi < p.num_orders(); ++oi) {
        Chain& c = sol.chains[oi % 3];
        c.insert(c.end() - 1, StopVisit{p.order_pickup[oi], 0});
        c.insert(c.end() - 1, StopVisit{p.order_delivery[oi], 0});
    }
    staff(p, sol);

    Solution swapped = sol;
    std::swap(swapped.chains[0], swapped.chains[1]);
    // rebracket the swapped chains with their own begin/end stops
    for (int v : {0, 1}) {
        swapped.chains[v].front() = StopVisit{p.vehicle_begin[v], 0};
        swapped.chains[v].back() = StopVisit{p.vehicle_end[v], 0};
    }
    staff(p, swapped);
    EXPECT_EQ(eval_h1(p, sol), eval_h1(p, swapped));
    EXPECT_EQ(eval_h2(p, sol), eval_h2(p, swapped));
}

TEST(Evaluate, DistanceScalingAffectsOnlyDistanceTerm) {
    const Instance inst = tt::line_instance(3, 1);
    const Problem p = Problem::build(inst);
    const auto m = build_euclidean(inst.locations, 10.0);
    TravelMatrix scaled = m;
    for (auto& row : scaled.dist)
        for (auto& d : row) d *= 3;

    const auto base = evaluate_solution(p, m, everything_on_vehicle(p, 0));
    const auto big = evaluate_solution(p, scaled, everything_on_vehicle(p, 0));
    ASSERT_TRUE(base.score.feasible());
    ASSERT_TRUE(big.score.feasible());
    EXPECT_EQ(base.score.h1, big.score.h1);
    EXPECT_EQ(base.score.h2, big.score.h2);

    Meters dist = 0;
    Seconds secs = 0;
    for (const auto& [v, t] : base.schedules) {
        (void)v;
        dist += t.total_dist;
        secs += t.total_wait + t.total_drive + t.total_service;
    }
    EXPECT_EQ(base.score.s2, std::llround(dist / 1000.0) + secs);
    EXPECT_EQ(big.score.s2, std::llround(3 * dist / 1000.0) + secs);
}

TEST(Evaluate, DeterministicAndIdempotent) {
    Rng rng(77);
    tt::RandomInstanceOpts opts;
    opts.orders = 6;
    opts.vehicles = 2;
    opts.time_windows = true;
    opts.pauses = true;
    const Instance inst = tt::random_instance(rng, opts);
    const Problem p = Problem::build(inst);
    const auto m = build_euclidean(inst.locations, 10.0);
    Solution sol = p.empty_solution();
    for (int oi = 0; oi < p.num_orders(); ++oi) {
        Chain& c = sol.chains[oi % 2];
        c.insert(c.end() - 1, StopVisit{p.order_pickup[oi], 0});
        c.insert(c.end() - 1, StopVisit{p.order_delivery[oi], 0});
    }
    const auto a = evaluate_solution(p, m, sol);
    const auto b = evaluate_solution(p, m, sol);
    EXPECT_EQ(a.score, b.score);
}

TEST(EvalS2Cost, UsesCostRates) {
    Instance inst = tt::line_instance(1, 1);
    inst.vehicles[0].cost_rates = {60.0, 2.0, 100.0, 5.0};
    const Problem p = Problem::build(inst);
    ScheduledTour t = tour_with(0, 3600, 2, 2);  // one hour
    t.total_dist = 10000;                        // 10 km
    Schedules s;
    s.emplace(0, t);
    // 60/h + 2/km*10 + 100/tour + 5*2 stops
    EXPECT_EQ(eval_s2_cost(p, s), 60 + 20 + 100 + 10);
}
