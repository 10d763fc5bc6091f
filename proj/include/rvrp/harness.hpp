#pragma once

// Benchmark harness: synthetic instance generator shaped like the evaluated
// problem instances, a seeded multi-run experiment runner with a worker
// pool, Wilcoxon signed-rank statistics, and CSV/JSON exports. Every shipped
// instance is synthetic and the outputs say so.

#include <atomic>
#include <cmath>
#include <filesystem>
#include <mutex>
#include <numeric>
#include <thread>

#include "rvrp/aco.hpp"
#include "rvrp/baselines.hpp"
#include "rvrp/ga.hpp"
#include "rvrp/instance_io.hpp"

namespace rvrp {

// ---------------------------------------------------------------------------
// instance generation

struct InstanceShape {
    const char* name;
    int orders;
    int vehicles;
    bool pickup_delivery;  // distinct pickup locations per order
    bool pauses;
};

inline constexpr InstanceShape kInstanceShapes[] = {
    {"TSP-I", 10, 1, false, false},   {"TSP-II", 30, 1, false, false},
    {"TSP-II-P", 30, 1, false, true}, {"VRP-I", 53, 5, false, false},
    {"VRP-I-P", 53, 5, false, true},  {"VRP-II", 100, 13, false, false},
    {"TSP-PD", 10, 1, true, false},   {"VRP-PD-P", 62, 7, true, true}};

inline const InstanceShape* find_shape(std::string name) {
    for (auto& c : name) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    for (const auto& s : kInstanceShapes)
        if (name == s.name) return &s;
    return nullptr;
}

// Orders in a 50 km square with delivery time windows; demands are
// calibrated so that greedy first-fit by weight provably fits the shape's
// vehicle count, guaranteeing hard-feasible solutions exist.
inline Instance generate_instance(const InstanceShape& shape, std::uint64_t seed) {
    Rng rng(derive_seed(seed, std::hash<std::string>{}(shape.name)));
    Instance inst;

    auto coord = [&] { return static_cast<double>(uniform_int(rng, 0, 50000)); };
    auto id3 = [](const char* prefix, int i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%s-%03d", prefix, i);
        return std::string(buf);
    };

    inst.locations.push_back({"depot", coord(), coord()});
    for (int i = 0; i < shape.orders; ++i) {
        inst.locations.push_back({id3("dloc", i), coord(), coord()});
        if (shape.pickup_delivery)
            inst.locations.push_back({id3("ploc", i), coord(), coord()});
    }

    for (int i = 0; i < shape.orders; ++i) {
        Order o;
        o.id = id3("ord", i);
        o.demand = {uniform_int(rng, 1, 5), uniform_int(rng, 50, 200),
                    uniform_int(rng, 40, 160)};
        o.pickup_options = {shape.pickup_delivery ? id3("ploc", i) : std::string("depot")};
        o.delivery_location = id3("dloc", i);
        o.service_duration_pickup = shape.pickup_delivery ? 240 : 120;
        o.service_duration_delivery = 300;
        const Seconds tw_start = 8 * 3600 + uniform_int(rng, 0, 8 * 3600);
        o.tw_delivery = TimeWindow{tw_start, tw_start + uniform_int(rng, 2 * 3600, 3 * 3600)};
        inst.orders.push_back(std::move(o));
    }

    // capacity calibration: grow until first-fit by weight needs <= |vehicles| bins
    Load total;
    for (const auto& o : inst.orders) total += o.demand;
    Load cap{(total.pieces * 2 + shape.vehicles - 1) / shape.vehicles,
             (total.liters * 2 + shape.vehicles - 1) / shape.vehicles,
             (total.kg * 2 + shape.vehicles - 1) / shape.vehicles};
    for (;;) {
        std::vector<Load> bins(static_cast<std::size_t>(shape.vehicles));
        bool fits = true;
        for (const auto& o : inst.orders) {
            bool placed = false;
            for (auto& bin : bins)
                if ((bin + o.demand).fits_in(cap)) {
                    bin += o.demand;
                    placed = true;
                    break;
                }
            if (!placed) {
                fits = false;
                break;
            }
        }
        if (fits) break;
        cap.pieces += std::max<std::int64_t>(cap.pieces / 10, 1);
        cap.liters += std::max<std::int64_t>(cap.liters / 10, 1);
        cap.kg += std::max<std::int64_t>(cap.kg / 10, 1);
    }

    for (int v = 0; v < shape.vehicles; ++v) {
        Vehicle veh;
        veh.id = id3("veh", v);
        veh.capacity = cap;
        veh.dims = {300, 250, 800, 20000};
        veh.cost_rates = {30.0, 0.5, 100.0, 2.0};
        veh.max_tour_duration = 16 * 3600;
        veh.start_options = {"depot"};
        veh.end_options = {"depot"};
        veh.tour_start_window = {6 * 3600, 8 * 3600};
        veh.tour_end_limit = 86400;
        inst.vehicles.push_back(std::move(veh));
    }
    for (int d = 0; d < shape.vehicles + 2; ++d)
        inst.drivers.push_back({id3("drv", d), {}});

    if (shape.pauses)
        inst.pause_rules = {{{34200, 36000}, 1800},
                            {{41400, 43200}, 1800},
                            {{52200, 54000}, 1800}};

    inst.max_runtime = 60;
    inst.distance = {"euclidean", 10.0, ""};
    return inst;
}

inline Instance generate_instance(const std::string& shape_name, std::uint64_t seed) {
    const InstanceShape* shape = find_shape(shape_name);
    if (!shape) throw IoError("unknown instance shape '" + shape_name + "'");
    return generate_instance(*shape, seed);
}

// ---------------------------------------------------------------------------
// experiment runner

enum class AlgorithmKind { GA, ACO, Tabu, Savings, BruteForce };

inline const char* algorithm_name(AlgorithmKind a) {
    switch (a) {
        case AlgorithmKind::GA: return "ga";
        case AlgorithmKind::ACO: return "aco";
        case AlgorithmKind::Tabu: return "tabu";
        case AlgorithmKind::Savings: return "savings";
        default: return "brute";
    }
}

inline AlgorithmKind algorithm_from_name(const std::string& name) {
    for (const auto a : {AlgorithmKind::GA, AlgorithmKind::ACO, AlgorithmKind::Tabu,
                         AlgorithmKind::Savings, AlgorithmKind::BruteForce})
        if (name == algorithm_name(a)) return a;
    throw IoError("unknown algorithm '" + name + "'");
}

struct ExperimentPlan {
    std::vector<std::string> instances;  // file paths or shape:<NAME> refs
    std::vector<AlgorithmKind> algorithms;
    std::vector<std::uint64_t> seeds;
    double time_budget = 60.0;

    void validate() const {
        if (instances.empty() || algorithms.empty() || seeds.empty())
            throw IoError("experiment plan needs instances, algorithms and seeds");
        if (time_budget < 1.0 || time_budget > 3600.0)
            throw IoError("experiment budget must lie in [1, 3600] seconds");
    }
};

inline ExperimentPlan plan_from_json(const json& j) {
    ExperimentPlan plan;
    plan.instances = j.at("instances").get<std::vector<std::string>>();
    for (const auto& a : j.at("algorithms"))
        plan.algorithms.push_back(algorithm_from_name(a.get<std::string>()));
    if (j.contains("seeds")) {
        plan.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    } else {
        const int n = io_detail::get_or<int>(j, "num_seeds", 30);
        for (int i = 0; i < n; ++i) plan.seeds.push_back(static_cast<std::uint64_t>(i + 1));
    }
    plan.time_budget = io_detail::get_or<double>(j, "time_budget_s", 60.0);
    plan.validate();
    return plan;
}

struct RunRecord {
    std::string instance;
    std::string algorithm;
    std::uint64_t seed = 0;
    Score final_score = Score::worst();
    std::vector<std::pair<double, Score>> trajectory;
    bool tw_met = false;  // s1 == 0
    double wall_time = 0.0;
    bool failed = false;
    std::string error;
};

// Append-only trajectory; regressions are a solver bug and abort the run.
struct TrajectoryRecorder {
    std::vector<std::pair<double, Score>>* out;
    void operator()(double elapsed, const Score& s) const {
        if (!out->empty() && s > out->back().second)
            throw std::logic_error("trajectory regression: best score got worse");
        out->emplace_back(elapsed, s);
    }
};

inline RunRecord run_single(const Problem& p, const TravelMatrix& m,
                            const std::string& instance_label, AlgorithmKind algo,
                            std::uint64_t seed, double budget) {
    RunRecord rec;
    rec.instance = instance_label;
    rec.algorithm = algorithm_name(algo);
    rec.seed = seed;
    const Budget clock{std::chrono::steady_clock::now(), 0.0};
    try {
        EvaluatedSolution ev;
        TrajectoryRecorder record{&rec.trajectory};
        switch (algo) {
            case AlgorithmKind::GA: {
                GaParams params;
                params.max_runtime = budget;
                params.rng_seed = seed;
                ev = run_vrp_ga(p, m, params, {}, record);
                break;
            }
            case AlgorithmKind::ACO: {
                AcoParams params;
                params.max_runtime = budget;
                params.rng_seed = seed;
                ev = run_vrp_aco(p, m, params, {}, record);
                break;
            }
            case AlgorithmKind::Tabu: {
                TabuParams params;
                params.max_runtime = budget;
                params.rng_seed = seed;
                ev = tabu_search(p, m, savings_construct(p, m), params, record);
                break;
            }
            case AlgorithmKind::Savings: {
                ev = evaluate_solution(p, m, savings_construct(p, m));
                record(clock.elapsed(), ev.score);
                break;
            }
            case AlgorithmKind::BruteForce: {
                auto res = brute_force_vrp(p, m, budget);
                ev = std::move(res.best);
                record(clock.elapsed(), ev.score);
                break;
            }
        }
        rec.final_score = ev.score;
        rec.tw_met = ev.score.soft_evaluated() && ev.score.s1 == 0;
    } catch (const std::exception& e) {
        rec.failed = true;
        rec.error = e.what();
    }
    rec.wall_time = clock.elapsed();
    return rec;
}

inline json record_to_json(const RunRecord& r) {
    json traj = json::array();
    for (const auto& [t, s] : r.trajectory) traj.push_back({{"t", t}, {"score", score_to_json(s)}});
    return {{"instance", r.instance},    {"algorithm", r.algorithm},
            {"seed", r.seed},            {"final_score", score_to_json(r.final_score)},
            {"trajectory", std::move(traj)}, {"tw_met", r.tw_met},
            {"wall_time", r.wall_time},  {"failed", r.failed},
            {"error", r.error}};
}

// Runs the full cartesian product on a worker pool. Records are appended to
// <out_dir>/runs.jsonl as they finish, so a crash loses at most the runs
// still in flight.
inline std::vector<RunRecord> run_experiment(const ExperimentPlan& plan,
                                             const std::string& out_dir = {},
                                             int jobs = 0) {
    plan.validate();

    struct LoadedInstance {
        std::string label;
        Instance inst;
        Problem problem;
        TravelMatrix matrix;
    };
    std::vector<std::unique_ptr<LoadedInstance>> loaded;
    for (const auto& ref : plan.instances) {
        auto li = std::make_unique<LoadedInstance>();
        if (ref.rfind("shape:", 0) == 0) {
            li->label = ref.substr(6);
            li->inst = generate_instance(li->label, 1);
        } else {
            li->label = std::filesystem::path(ref).stem().string();
            li->inst = load_instance(ref);
        }
        const auto errs = validate_instance(li->inst);
        if (!errs.empty())
            throw IoError("instance '" + li->label + "' invalid: " + errs.front().message);
        li->problem = Problem::build(li->inst);
        li->matrix = build_matrix(li->inst);
        loaded.push_back(std::move(li));
    }

    struct Task {
        const LoadedInstance* li;
        AlgorithmKind algo;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (const auto& li : loaded)
        for (const auto algo : plan.algorithms)
            for (const auto seed : plan.seeds) tasks.push_back({li.get(), algo, seed});

    std::vector<RunRecord> records(tasks.size());
    std::atomic<std::size_t> next{0};
    std::mutex io_mutex;
    std::ofstream journal;
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        journal.open(std::filesystem::path(out_dir) / "runs.jsonl", std::ios::app);
    }

    const unsigned pool = jobs > 0 ? static_cast<unsigned>(jobs)
                                   : std::max(1u, std::thread::hardware_concurrency());
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            const Task& t = tasks[i];
            RunRecord rec = run_single(t.li->problem, t.li->matrix, t.li->label, t.algo,
                                       t.seed, plan.time_budget);
            std::lock_guard<std::mutex> lock(io_mutex);
            if (journal.is_open()) {
                journal << record_to_json(rec).dump() << '\n';
                journal.flush();
            }
            records[i] = std::move(rec);
        }
    };
    std::vector<std::thread> threads;
    for (unsigned i = 1; i < pool && i < tasks.size(); ++i) threads.emplace_back(worker);
    worker();
    for (auto& th : threads) th.join();
    return records;
}

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank test

struct WilcoxonResult {
    double statistic = 0.0;  // min(W+, W-)
    double p_value = 1.0;
    bool reject = false;
};

// Two-sided paired test; zero differences are dropped, tied magnitudes take
// average ranks. Exact null distribution (a subset-sum count over the rank
// multiset) for n <= 25, tie-corrected normal approximation beyond.
inline WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a,
                                           const std::vector<double>& b, double alpha = 0.05) {
    if (a.size() != b.size() || a.size() < 5)
        throw std::invalid_argument("wilcoxon needs paired samples of size >= 5");

    std::vector<double> d;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) d.push_back(a[i] - b[i]);
    WilcoxonResult res;
    if (d.empty()) return res;  // all differences zero

    const std::size_t n = d.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t x, std::size_t y) { return std::abs(d[x]) < std::abs(d[y]); });

    // doubled ranks stay integral under average-rank ties
    std::vector<std::int64_t> rank2(n);
    std::vector<std::size_t> tie_sizes;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && std::abs(d[idx[j]]) == std::abs(d[idx[i]])) ++j;
        const std::int64_t avg2 = static_cast<std::int64_t>(i + 1 + j);  // 2 * mean rank
        for (std::size_t k = i; k < j; ++k) rank2[idx[k]] = avg2;
        if (j - i > 1) tie_sizes.push_back(j - i);
        i = j;
    }

    std::int64_t wplus2 = 0, total2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        total2 += rank2[i];
        if (d[i] > 0) wplus2 += rank2[i];
    }
    const double wplus = static_cast<double>(wplus2) / 2.0;
    const double wminus = static_cast<double>(total2 - wplus2) / 2.0;
    res.statistic = std::min(wplus, wminus);

    if (n <= 25) {
        // count sign assignments by achievable W+ (doubled units)
        std::vector<double> ways(static_cast<std::size_t>(total2) + 1, 0.0);
        ways[0] = 1.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::int64_t s = total2; s >= rank2[i]; --s)
                ways[static_cast<std::size_t>(s)] +=
                    ways[static_cast<std::size_t>(s - rank2[i])];
        const double denom = std::pow(2.0, static_cast<double>(n));
        double le = 0.0, ge = 0.0;
        for (std::int64_t s = 0; s <= total2; ++s) {
            if (s <= wplus2) le += ways[static_cast<std::size_t>(s)];
            if (s >= wplus2) ge += ways[static_cast<std::size_t>(s)];
        }
        res.p_value = std::min(1.0, 2.0 * std::min(le, ge) / denom);
    } else {
        const double nn = static_cast<double>(n);
        const double mean = nn * (nn + 1.0) / 4.0;
        double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
        for (const std::size_t t : tie_sizes) {
            const double td = static_cast<double>(t);
            var -= (td * td * td - td) / 48.0;
        }
        if (var <= 0.0) return res;
        const double z = (wplus - mean) / std::sqrt(var);
        res.p_value = std::erfc(std::abs(z) / std::sqrt(2.0));
    }
    res.reject = res.p_value < alpha;
    return res;
}

// ---------------------------------------------------------------------------
// result export

namespace harness_detail {

inline std::string score_cell(std::int64_t v) {
    return v == kNotEvaluated ? std::string() : std::to_string(v);
}

inline void commit(const std::filesystem::path& tmp, const std::filesystem::path& final_path) {
    std::filesystem::rename(tmp, final_path);
}

}  // namespace harness_detail

// Writes runs.csv, trajectories.csv, summary.csv and summary.json; files are
// written to temporaries and renamed so a failure leaves nothing partial.
inline std::vector<std::string> export_results(const std::vector<RunRecord>& records,
                                               const std::string& out_dir) {
    if (records.empty()) throw IoError("no run records to export");
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    const fs::path dir(out_dir);

    auto open_tmp = [&](const char* name) {
        std::ofstream out(dir / (std::string(name) + ".tmp"));
        if (!out) throw IoError("cannot write into '" + out_dir + "'");
        return out;
    };
    const char* synthetic_note = "# data_source: synthetic instances (generated)\n";

    {
        auto out = open_tmp("runs.csv");
        out << synthetic_note
            << "instance,algorithm,seed,h1,h2,h3,s1,s2,s3,s2_display,tw_met,wall_time,failed\n";
        for (const auto& r : records) {
            out << r.instance << ',' << r.algorithm << ',' << r.seed;
            for (int i = 1; i <= 6; ++i)
                out << ',' << harness_detail::score_cell(r.final_score.level(i));
            out << ',';
            if (r.final_score.s2 != kNotEvaluated)
                out << static_cast<double>(r.final_score.s2) / 10000.0;
            out << ',' << (r.tw_met ? 1 : 0) << ',' << r.wall_time << ','
                << (r.failed ? 1 : 0) << '\n';
        }
    }
    {
        auto out = open_tmp("trajectories.csv");
        out << synthetic_note << "instance,algorithm,seed,elapsed_s,h1,h2,h3,s1,s2,s3\n";
        for (const auto& r : records)
            for (const auto& [t, s] : r.trajectory) {
                out << r.instance << ',' << r.algorithm << ',' << r.seed << ',' << t;
                for (int i = 1; i <= 6; ++i)
                    out << ',' << harness_detail::score_cell(s.level(i));
                out << '\n';
            }
    }

    struct Agg {
        int runs = 0;
        int tw_met = 0;
        std::vector<double> s2;
    };
    std::map<std::pair<std::string, std::string>, Agg> groups;
    for (const auto& r : records) {
        Agg& g = groups[{r.instance, r.algorithm}];
        ++g.runs;
        if (r.tw_met) ++g.tw_met;
        if (!r.failed && r.final_score.s2 != kNotEvaluated)
            g.s2.push_back(static_cast<double>(r.final_score.s2));
    }
    auto mean_std = [](const std::vector<double>& xs) {
        if (xs.empty()) return std::make_pair(0.0, 0.0);
        const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) /
                            static_cast<double>(xs.size());
        double var = 0.0;
        for (double x : xs) var += (x - mean) * (x - mean);
        const double std_dev =
            xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
        return std::make_pair(mean, std_dev);
    };

    json summary = json::array();
    {
        auto out = open_tmp("summary.csv");
        out << synthetic_note
            << "instance,algorithm,runs,tw_met,s2_mean,s2_std,s2_mean_display\n";
        for (const auto& [key, g] : groups) {
            const auto [mean, std_dev] = mean_std(g.s2);
            out << key.first << ',' << key.second << ',' << g.runs << ',' << g.tw_met << '/'
                << g.runs << ',';
            if (!g.s2.empty())
                out << mean << ',' << std_dev << ',' << mean / 10000.0;
            else
                out << ",,";
            out << '\n';
            summary.push_back({{"instance", key.first},
                               {"algorithm", key.second},
                               {"runs", g.runs},
                               {"tw_met", std::to_string(g.tw_met) + "/" + std::to_string(g.runs)},
                               {"s2_mean", g.s2.empty() ? json(nullptr) : json(mean)},
                               {"s2_std", g.s2.empty() ? json(nullptr) : json(std_dev)}});
        }
    }
    {
        auto out = open_tmp("summary.json");
        out << json{{"data_source", "synthetic instances (generated)"},
                    {"groups", std::move(summary)}}
                   .dump(2)
            << '\n';
    }

    std::vector<std::string> written;
    for (const char* name : {"runs.csv", "trajectories.csv", "summary.csv", "summary.json"}) {
        harness_detail::commit(dir / (std::string(name) + ".tmp"), dir / name);
        written.push_back((dir / name).string());
    }
    return written;
}

}  // namespace rvrp
