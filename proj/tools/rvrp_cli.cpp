// Command line front end: solve a single instance, generate synthetic
// instances, run benchmark plans, and compare result sets with a Wilcoxon
// signed-rank test.
//
// Exit codes: 0 success, 2 validation error, 3 budget-exceeded partial
// result, 4 I/O error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "rvrp/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitPartial = 3;
constexpr int kExitIo = 4;

void write_output(const nlohmann::json& j, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << j.dump(2) << '\n';
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw rvrp::IoError("cannot write '" + out_path + "'");
    out << j.dump(2) << '\n';
}

int cmd_solve(const std::string& instance_path, const std::string& algo_name,
              std::uint64_t seed, double budget, bool emit_schedule,
              const std::string& out_path, bool allow_huge) {
    rvrp::Instance inst = rvrp::load_instance(instance_path);
    const auto errors = rvrp::validate_instance(inst);
    if (!errors.empty()) {
        for (const auto& e : errors) std::cerr << "invalid instance: " << e.message << '\n';
        return kExitValidation;
    }
    const rvrp::Problem problem = rvrp::Problem::build(inst);
    const rvrp::TravelMatrix matrix = rvrp::build_matrix(inst);
    if (budget <= 0.0) budget = static_cast<double>(inst.max_runtime);

    rvrp::EvaluatedSolution ev;
    bool partial = false;
    const auto algo = rvrp::algorithm_from_name(algo_name);
    switch (algo) {
        case rvrp::AlgorithmKind::GA: {
            rvrp::GaParams params;
            params.max_runtime = budget;
            params.rng_seed = seed;
            ev = rvrp::run_vrp_ga(problem, matrix, params);
            break;
        }
        case rvrp::AlgorithmKind::ACO: {
            rvrp::AcoParams params;
            params.max_runtime = budget;
            params.rng_seed = seed;
            ev = rvrp::run_vrp_aco(problem, matrix, params);
            break;
        }
        case rvrp::AlgorithmKind::Tabu: {
            rvrp::TabuParams params;
            params.max_runtime = budget;
            params.rng_seed = seed;
            ev = rvrp::tabu_search(problem, matrix, rvrp::savings_construct(problem, matrix),
                                   params);
            break;
        }
        case rvrp::AlgorithmKind::Savings:
            ev = rvrp::evaluate_solution(problem, matrix,
                                         rvrp::savings_construct(problem, matrix));
            break;
        case rvrp::AlgorithmKind::BruteForce: {
            auto res = rvrp::brute_force_vrp(problem, matrix, budget, allow_huge);
            partial = !res.complete;
            ev = std::move(res.best);
            break;
        }
    }

    nlohmann::json out{{"instance", std::filesystem::path(instance_path).stem().string()},
                       {"algorithm", algo_name},
                       {"seed", seed},
                       {"score", rvrp::score_to_json(ev.score)},
                       {"solution", rvrp::solution_to_json(problem, ev.solution)},
                       {"partial", partial}};
    if (emit_schedule) {
        nlohmann::json schedules = nlohmann::json::array();
        for (const auto& [v, tour] : ev.schedules) {
            (void)v;
            schedules.push_back(rvrp::schedule_to_json(problem, tour));
        }
        out["schedules"] = std::move(schedules);
    }
    write_output(out, out_path);
    return partial ? kExitPartial : kExitOk;
}

struct CsvFilter {
    std::string path;
    std::map<std::string, std::string> where;
};

CsvFilter parse_filter(const std::string& arg) {
    CsvFilter f;
    const auto colon = arg.find(':');
    f.path = arg.substr(0, colon);
    if (colon == std::string::npos) return f;
    std::stringstream rest(arg.substr(colon + 1));
    std::string clause;
    while (std::getline(rest, clause, ',')) {
        const auto eq = clause.find('=');
        if (eq == std::string::npos)
            throw rvrp::IoError("bad filter clause '" + clause + "' (want key=value)");
        f.where[clause.substr(0, eq)] = clause.substr(eq + 1);
    }
    return f;
}

// seed -> raw S2 of rows matching the filter
std::map<std::uint64_t, double> load_s2_by_seed(const CsvFilter& f) {
    std::ifstream in(f.path);
    if (!in) throw rvrp::IoError("cannot open '" + f.path + "'");
    std::string line;
    std::vector<std::string> header;
    std::map<std::uint64_t, double> out;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        cells.resize(std::max(cells.size(), header.size()));
        if (header.empty()) {
            header = cells;
            continue;
        }
        auto col = [&](const std::string& name) -> const std::string& {
            for (std::size_t i = 0; i < header.size(); ++i)
                if (header[i] == name) return cells[i];
            throw rvrp::IoError("column '" + name + "' missing in " + f.path);
        };
        bool match = true;
        for (const auto& [k, v] : f.where) match = match && col(k) == v;
        if (!match) continue;
        const std::string& s2 = col("s2");
        if (s2.empty()) continue;  // infeasible run, no S2
        out[std::stoull(col("seed"))] = std::stod(s2);
    }
    return out;
}

int cmd_stats(const std::string& spec_a, const std::string& spec_b, double alpha) {
    const auto a = load_s2_by_seed(parse_filter(spec_a));
    const auto b = load_s2_by_seed(parse_filter(spec_b));
    std::vector<double> xs, ys;
    for (const auto& [seed, x] : a) {
        const auto it = b.find(seed);
        if (it == b.end()) continue;
        xs.push_back(x);
        ys.push_back(it->second);
    }
    if (xs.size() < 5) {
        std::cerr << "need at least 5 paired runs, got " << xs.size() << '\n';
        return kExitValidation;
    }
    const auto res = rvrp::wilcoxon_signed_rank(xs, ys, alpha);
    const nlohmann::json out{{"pairs", xs.size()},
                             {"metric", "s2"},
                             {"statistic", res.statistic},
                             {"p_value", res.p_value},
                             {"alpha", alpha},
                             {"reject_null", res.reject}};
    std::cout << out.dump(2) << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rich VRP metaheuristic solver and benchmark harness"};
    app.require_subcommand(1);

    auto* solve = app.add_subcommand("solve", "solve one instance with one algorithm");
    std::string instance_path, algo = "ga", out_path;
    std::uint64_t seed = 1;
    double budget = 0.0;
    bool emit_schedule = false, allow_huge = false;
    solve->add_option("--instance", instance_path, "instance JSON file")->required();
    solve->add_option("--algo", algo, "ga|aco|tabu|savings|brute")
        ->check(CLI::IsMember({"ga", "aco", "tabu", "savings", "brute"}));
    solve->add_option("--seed", seed, "RNG seed");
    solve->add_option("--budget", budget, "wall clock budget in seconds");
    solve->add_flag("--emit-schedule", emit_schedule, "include per-tour schedules");
    solve->add_option("-o,--output", out_path, "write the result here instead of stdout");
    solve->add_flag("--i-know-this-is-huge", allow_huge,
                    "override the brute-force size guards");

    auto* generate = app.add_subcommand("generate", "generate a synthetic instance");
    std::string shape = "TSP-I", gen_out;
    std::uint64_t gen_seed = 1;
    generate->add_option("--shape", shape,
                         "TSP-I|TSP-II|TSP-II-P|VRP-I|VRP-I-P|VRP-II|TSP-PD|VRP-PD-P")
        ->required();
    generate->add_option("--seed", gen_seed, "generator seed");
    generate->add_option("-o,--output", gen_out, "output instance file")->required();

    auto* bench = app.add_subcommand("bench", "run an experiment plan");
    std::string plan_path, bench_out;
    int jobs = 0;
    bench->add_option("--plan", plan_path, "experiment plan JSON")->required();
    bench->add_option("-o,--output", bench_out, "output directory")->required();
    bench->add_option("--jobs", jobs, "worker threads (default: hardware)");

    auto* stats = app.add_subcommand("stats", "Wilcoxon signed-rank test over runs.csv");
    std::string spec_a, spec_b;
    double alpha = 0.05;
    stats->add_option("--a", spec_a, "runs.csv:key=value,... (rows of sample A)")->required();
    stats->add_option("--b", spec_b, "runs.csv:key=value,... (rows of sample B)")->required();
    stats->add_option("--alpha", alpha, "significance level");

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed())
            return cmd_solve(instance_path, algo, seed, budget, emit_schedule, out_path,
                             allow_huge);
        if (generate->parsed()) {
            const rvrp::Instance inst = rvrp::generate_instance(shape, gen_seed);
            rvrp::save_instance(inst, gen_out);
            return kExitOk;
        }
        if (bench->parsed()) {
            std::ifstream in(plan_path);
            if (!in) throw rvrp::IoError("cannot open plan '" + plan_path + "'");
            nlohmann::json j;
            in >> j;
            const auto plan = rvrp::plan_from_json(j);
            const auto records = rvrp::run_experiment(plan, bench_out, jobs);
            const auto files = rvrp::export_results(records, bench_out);
            for (const auto& f : files) std::cout << f << '\n';
            int failed = 0;
            for (const auto& r : records) failed += r.failed ? 1 : 0;
            if (failed > 0)
                std::cerr << failed << " of " << records.size() << " runs failed\n";
            return kExitOk;
        }
        if (stats->parsed()) return cmd_stats(spec_a, spec_b, alpha);
    } catch (const rvrp::GuardError& e) {
        std::cerr << e.what() << '\n';
        return kExitValidation;
    } catch (const rvrp::IoError& e) {
        std::cerr << e.what() << '\n';
        return kExitIo;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "bad JSON: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return kExitValidation;
    }
    return kExitOk;
}
