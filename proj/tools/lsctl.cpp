// Command-line front end: solve, bench, train, gen.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lsctl/bench.hpp"
#include "lsctl/error.hpp"
#include "lsctl/graph.hpp"
#include "lsctl/taillard.hpp"
#include "lsctl/trainer.hpp"

using namespace lsctl;

namespace {

struct CommonFlags {
    std::optional<int> iters;
    std::optional<std::uint64_t> seed;
    std::string method;
    std::string checkpoint;
    std::string out;
    std::string format;
    std::optional<int> jobs;
};

void write_solution(std::ostream& out, const Instance& inst, const Solution& sol) {
    out << "# " << inst.name() << " makespan " << build_graph(inst, sol).makespan() << '\n';
    for (std::size_t k = 0; k < sol.machine_seq.size(); ++k) {
        for (std::size_t i = 0; i < sol.machine_seq[k].size(); ++i)
            out << (i ? " " : "") << sol.machine_seq[k][i].job;
        out << '\n';
    }
}

void write_controller_trace(std::ostream& out, const std::vector<TraceRecord>& trace) {
    for (const auto& r : trace) {
        nlohmann::json j = {{"step", r.step},         {"operator", std::string(to_string(r.op))},
                            {"proposal", r.had_proposal}, {"accepted", r.accepted},
                            {"perturbed", r.perturbed},   {"restarted", r.restarted},
                            {"cost", r.cost},             {"best", r.best}};
        out << j.dump() << '\n';
    }
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error(ErrorCode::IoError, "cannot write " + path);
    return f;
}

int cmd_solve(const std::string& instance_spec, const std::string& config_path, const std::string& trace_path,
              const CommonFlags& flags) {
    KeyValues kv;
    if (!config_path.empty()) kv = load_key_values(config_path);
    std::string method_name = flags.method.empty() ? (kv.count("method") ? kv["method"] : "VNS") : flags.method;
    std::string checkpoint = flags.checkpoint.empty() && kv.count("checkpoint") ? kv["checkpoint"] : flags.checkpoint;
    const Method method = parse_method(method_name, kv, checkpoint);
    const int iters = flags.iters.value_or(kv.count("iterations") ? kv_int("iterations", kv["iterations"]) : 100);
    const std::uint64_t seed =
        flags.seed.value_or(kv.count("seed") ? static_cast<std::uint64_t>(kv_int("seed", kv["seed"])) : 0);
    if (iters < 1) throw Error(ErrorCode::InvalidConfig, "--iters must be >= 1");

    auto entries = resolve_instances(instance_spec);
    if (entries.size() != 1) throw Error(ErrorCode::InvalidConfig, "solve takes exactly one instance");
    if (!entries[0].instance) throw Error(ErrorCode::MalformedInstance, entries[0].load_error);
    const Instance& inst = *entries[0].instance;

    std::unique_ptr<QNetwork> net;
    if (method.type == MethodType::Neural) net = std::make_unique<QNetwork>(QNetwork::load(method.checkpoint));

    SolveResult sr;
    if (!trace_path.empty() && method.type == MethodType::Controller) {
        ClassicController ctl(method.controller, seed);
        RunResult rr = run(ctl, inst, DispatchRule::FDD_over_MWKR, iters, seed);
        auto f = open_out(trace_path);
        write_controller_trace(f, rr.trace);
        sr = {rr.best_solution, rr.best_cost, rr.initial_cost};
    } else if (!trace_path.empty() && method.type == MethodType::Neural) {
        JsspEnv env;
        env.reset(inst, method.space, seed, iters);
        while (!env.done()) env.step(net->greedy_action(env.observation()));
        auto f = open_out(trace_path);
        env.write_trace(f);
        sr = {env.best_solution(), env.best_cost(), env.initial_cost()};
    } else {
        sr = solve_instance(method, net.get(), inst, iters, seed);
    }
    if (auto issues = validate(inst, sr.solution); !issues.empty())
        throw Error(issues.front().code, "solver produced an invalid solution: " + issues.front().detail);

    BenchmarkResult res;
    res.method = method.label;
    res.iterations = method.type == MethodType::Pdr ? 0 : iters;
    ResultRow row;
    row.instance = entries[0].name;
    row.group = std::to_string(inst.num_jobs()) + "x" + std::to_string(inst.num_machines());
    row.seed = seed;
    row.cost = sr.cost;
    if (auto it = bundled_bks().find(row.instance); it != bundled_bks().end()) {
        row.bks = it->second;
        row.gap = static_cast<double>(sr.cost - it->second) / static_cast<double>(it->second);
    }
    res.rows.push_back(row);
    res.groups = group_means(res.rows);
    if (flags.format == "csv") write_csv(std::cout, res);
    else write_table(std::cout, res);
    if (!flags.out.empty()) {
        auto f = open_out(flags.out);
        write_solution(f, inst, sr.solution);
    }
    return 0;
}

int cmd_bench(const std::string& config_path, const std::string& instances, const CommonFlags& flags) {
    KeyValues kv = config_path.empty() ? KeyValues{} : load_key_values(config_path);
    if (flags.iters) kv["iterations"] = std::to_string(*flags.iters);
    if (flags.seed) kv["seed"] = std::to_string(*flags.seed);
    if (!flags.method.empty()) kv["method"] = flags.method;
    if (!flags.checkpoint.empty()) kv["checkpoint"] = flags.checkpoint;
    if (!flags.out.empty()) kv["out"] = flags.out;
    if (!flags.format.empty()) kv["format"] = flags.format;
    if (flags.jobs) kv["jobs"] = std::to_string(*flags.jobs);
    if (!instances.empty()) kv["instances"] = instances;
    BenchmarkConfig cfg = parse_benchmark_config(kv);
    if (cfg.instances.empty()) std::cerr << "warning: empty instance list, nothing to run\n";
    BenchmarkResult res = run_benchmark(cfg);
    auto emit = [&](std::ostream& os) {
        if (cfg.format == OutputFormat::Csv) write_csv(os, res);
        else write_table(os, res);
    };
    if (cfg.out.empty()) {
        emit(std::cout);
    } else {
        auto f = open_out(cfg.out.string());
        emit(f);
    }
    for (const auto& row : res.rows)
        if (!row.error.empty()) std::cerr << "error: " << row.instance << " (seed " << row.seed << "): " << row.error << '\n';
    return res.ok() ? 0 : 2;
}

int cmd_train(const std::string& config_path, const std::string& log_path, const CommonFlags& flags) {
    KeyValues kv = config_path.empty() ? KeyValues{} : load_key_values(config_path);
    if (flags.iters) kv["episode_length"] = std::to_string(*flags.iters);
    TrainConfig cfg = parse_train_config(kv);
    const std::uint64_t seed =
        flags.seed.value_or(kv.count("seed") ? static_cast<std::uint64_t>(kv_int("seed", kv["seed"])) : 0);
    const std::string out = flags.out.empty() ? "checkpoint.txt" : flags.out;
    TrainResult res;
    if (log_path.empty()) {
        res = train(cfg, seed, &std::cout);
    } else {
        auto f = open_out(log_path);
        res = train(cfg, seed, &f);
    }
    res.best.save(std::filesystem::path(out));
    std::cerr << "best validation " << res.best_validation << " at epoch " << res.best_epoch << ", "
              << res.optimizer_steps << " optimizer steps, checkpoint " << out << '\n';
    return 0;
}

int cmd_gen(int J, int M, int count, const CommonFlags& flags) {
    if (J < 1 || M < 1 || count < 1) throw Error(ErrorCode::InvalidConfig, "J, M and --count must be >= 1");
    const std::uint64_t seed = flags.seed.value_or(0);
    if (count == 1 && (flags.out.empty() || !std::filesystem::is_directory(flags.out))) {
        const std::string text = emit_taillard(generate_instance(J, M, seed));
        if (flags.out.empty()) std::cout << text;
        else open_out(flags.out) << text;
        return 0;
    }
    const std::filesystem::path dir = flags.out.empty() ? "." : flags.out;
    std::filesystem::create_directories(dir);
    for (int i = 0; i < count; ++i) {
        Instance inst = generate_instance(J, M, seed + static_cast<std::uint64_t>(i));
        open_out((dir / (inst.name() + ".txt")).string()) << emit_taillard(inst);
    }
    return 0;
}

void add_common(CLI::App* app, CommonFlags& f, bool method = true) {
    app->add_option("--iters", f.iters, "LS iterations per run");
    app->add_option("--seed", f.seed, "random seed");
    if (method) {
        app->add_option("--method", f.method, "PDR name, controller kind or NLS_A/NLS_AN/NLS_ANP");
        app->add_option("--checkpoint", f.checkpoint, "network checkpoint for NLS methods");
        app->add_option("--format", f.format, "output format")->check(CLI::IsMember({"csv", "table"}));
        app->add_option("--jobs", f.jobs, "parallel workers")->check(CLI::PositiveNumber);
    }
    app->add_option("--out", f.out, "output path");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Job-shop local search with pluggable controllers"};
    app.require_subcommand(1);
    CommonFlags flags;

    std::string instance, config, trace, log;
    auto* solve = app.add_subcommand("solve", "solve one instance");
    solve->add_option("instance", instance, "Taillard file, bundled name (ta01) or gen:JxMx1xSEED")->required();
    solve->add_option("--config", config, "key-value method config");
    solve->add_option("--trace", trace, "write a newline-delimited JSON trace");
    add_common(solve, flags);

    std::string instances;
    auto* bench = app.add_subcommand("bench", "run a benchmark config");
    bench->add_option("config", config, "key-value benchmark config");
    bench->add_option("--instances", instances, "override the instance list");
    add_common(bench, flags);

    auto* tr = app.add_subcommand("train", "train an NLS policy");
    tr->add_option("config", config, "key-value training config");
    tr->add_option("--log", log, "per-epoch CSV log (default: stdout)");
    add_common(tr, flags, false);

    int J = 0, M = 0, count = 1;
    auto* gen = app.add_subcommand("gen", "generate random instances");
    gen->add_option("jobs", J, "number of jobs")->required();
    gen->add_option("machines", M, "number of machines")->required();
    gen->add_option("--count", count, "number of instances");
    add_common(gen, flags, false);

    CLI11_PARSE(app, argc, argv);
    try {
        if (*solve) return cmd_solve(instance, config, trace, flags);
        if (*bench) return cmd_bench(config, instances, flags);
        if (*tr) return cmd_train(config, log, flags);
        if (*gen) return cmd_gen(J, M, count, flags);
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
