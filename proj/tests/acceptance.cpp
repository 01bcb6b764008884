// Acceptance checks. Prints one PASS/FAIL line per criterion and exits non-zero
// if any failed. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "lsctl/bench.hpp"
#include "lsctl/config.hpp"
#include "lsctl/env.hpp"
#include "lsctl/local_search.hpp"
#include "lsctl/qnetwork.hpp"
#include "lsctl/taillard.hpp"
#include "lsctl/trainer.hpp"
#include "oracles.hpp"

using namespace lsctl;

namespace {

const std::filesystem::path kSource = LSCTL_SOURCE_DIR;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string taillard_name(int n) { return fmt("ta%02d", n); }

Instance bundled(int n) { return load_taillard(bundled_data_dir() / "taillard" / (taillard_name(n) + ".txt")); }

Outcome c1_makespan_oracle() {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> dim(1, 5);
    int mismatches = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto inst = generate_instance(dim(rng), dim(rng), rng());
        const Solution sol = oracle::random_feasible_solution(inst, rng);
        const auto sim = oracle::simulate_makespan(inst, sol);
        if (!sim || *sim != build_graph(inst, sol).makespan()) ++mismatches;
    }
    return {mismatches == 0, fmt("%d/1000 mismatches", mismatches)};
}

Outcome c2_brute_force() {
    std::mt19937_64 rng(2);
    const Method vns = parse_method("VNS");
    int within = 0, runs_within = 0;
    for (int i = 0; i < 50; ++i) {
        const auto inst = generate_instance(3, 3, rng());
        const Time opt = oracle::brute_force_optimum(inst);
        Time best = std::numeric_limits<Time>::max();
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const Time c = solve_instance(vns, nullptr, inst, 200, seed).cost;
            best = std::min(best, c);
            if (c <= 1.02 * opt) ++runs_within;
        }
        if (best <= 1.02 * opt) ++within;
    }
    return {within >= 45, fmt("%d/50 instances within 1.02x optimum (best of 5 seeds); %d/250 single runs", within,
                              runs_within)};
}

Outcome c3_move_estimate() {
    std::mt19937_64 rng(3);
    int checked = 0, violations = 0, cyclic = 0;
    while (checked < 10000) {
        const auto inst = generate_instance(6, 6, rng());
        SearchState s(inst, oracle::random_feasible_solution(inst, rng));
        for (int k = 0; k < 50 && checked < 10000; ++k) {
            const Operator op = kAllOperators[std::uniform_int_distribution<int>(0, 3)(rng)];
            const auto moves = enumerate_moves(s, op);
            if (moves.empty()) continue;
            const Move m = moves[std::uniform_int_distribution<std::size_t>(0, moves.size() - 1)(rng)];
            const Time est = estimate_move(s.graph(), m).estimate;
            SearchState after = s;
            if (apply_move(after, m) != ApplyStatus::Applied) {
                ++cyclic;
                continue;
            }
            if (est > after.cost()) ++violations;
            ++checked;
        }
    }
    return {violations == 0, fmt("%d violations over %d moves (%d cyclic candidates skipped)", violations, checked, cyclic)};
}

Outcome c4_pdr_reproduction() {
    std::ifstream in(bundled_data_dir() / "taillard" / "reference.csv");
    std::string line;
    std::getline(in, line);
    const std::vector<std::pair<int, DispatchRule>> columns = {{3, DispatchRule::FIFO}, {4, DispatchRule::SPT},
                                                               {5, DispatchRule::MWKR}, {6, DispatchRule::MOPNR},
                                                               {7, DispatchRule::FDD},  {8, DispatchRule::FDD_over_MWKR}};
    int cells = 0, ok = 0;
    double worst = 0.0, gap_sum = 0.0;
    std::string worst_cell;
    for (int n = 1; n <= 10 && std::getline(in, line); ++n) {
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
        const auto inst = bundled(n);
        const double bks = std::stod(f[1]);
        for (const auto& [col, rule] : columns) {
            const double ref = std::stod(f[static_cast<std::size_t>(col)]);
            const double cost = static_cast<double>(build_graph(inst, dispatch(inst, rule)).makespan());
            const double dev = (cost - ref) / ref;
            ++cells;
            if (std::abs(dev) <= 0.02) ++ok;
            if (std::abs(dev) > std::abs(worst)) {
                worst = dev;
                worst_cell = f[0] + " " + std::string(to_string(rule));
            }
            if (rule == DispatchRule::FDD_over_MWKR) gap_sum += (cost - bks) / bks;
        }
    }
    const double group_gap = 100.0 * gap_sum / 10.0;
    const bool pass = ok == cells && std::abs(group_gap - 17.50) <= 2.0;
    return {pass, fmt("%d/%d cells within 2%% (worst %s %+.1f%%); FDD/MWKR 15x15 gap %.2f%% (target 17.50 +- 2)", ok,
                      cells, worst_cell.c_str(), 100.0 * worst, group_gap)};
}

Outcome c5_gap_bands() {
    const std::vector<std::pair<std::string, double>> bands = {{"sa.cfg", 16.0}, {"ils.cfg", 15.5}, {"vns.cfg", 12.5}};
    bool pass = true;
    std::string detail;
    for (const auto& [file, band] : bands) {
        KeyValues kv = load_key_values(kSource / "configs" / file);
        kv["instances"] = "ta01-ta10";
        kv["iterations"] = "100";
        kv["seeds"] = "3";
        const auto result = run_benchmark(parse_benchmark_config(kv));
        double gap = 0.0, slowest = 0.0;
        for (const auto& r : result.rows) {
            gap += r.gap.value_or(NAN);
            slowest = std::max(slowest, r.wall_seconds);
        }
        gap = 100.0 * gap / static_cast<double>(result.rows.size());
        const bool ok = result.ok() && result.rows.size() == 30 && gap <= band && slowest < 120.0;
        pass = pass && ok;
        detail += fmt("%s %.2f%% (<= %.1f, slowest run %.3fs); ", result.method.c_str(), gap, band, slowest);
    }
    detail.resize(detail.size() - 2);
    return {pass, detail};
}

double max_relative_error(QNetwork& net, const std::function<ad::Var(ad::Tape&)>& build) {
    net.zero_grad();
    {
        ad::Tape t;
        t.backward(build(t));
    }
    auto eval = [&] {
        ad::Tape t;
        return t.value(build(t))(0, 0);
    };
    const double eps = 1e-5;
    double worst = 0.0;
    for (auto& p : net.parameters())
        for (Eigen::Index i = 0; i < p.value.size(); ++i) {
            const double orig = p.value.data()[i];
            p.value.data()[i] = orig + eps;
            const double up = eval();
            p.value.data()[i] = orig - eps;
            const double down = eval();
            p.value.data()[i] = orig;
            const double fd = (up - down) / (2 * eps);
            const double an = p.grad.data()[i];
            worst = std::max(worst, std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-7}));
        }
    return worst;
}

GNNConfig tiny(int actions) {
    GNNConfig c;
    c.d_emb = 8;
    c.mlp_hidden = 8;
    c.iqn_hidden = 8;
    c.num_cosines = 8;
    c.num_actions = actions;
    return c;
}

Outcome c6_gradients() {
    const auto inst = generate_instance(2, 3, 6);
    JsspEnv env;
    env.reset(inst, ActionSpace::ANP, 6, 20);
    env.step(1);
    const Observation obs = env.observation();
    QNetwork net(tiny(10), 6);
    std::mt19937_64 rng(6);
    std::normal_distribution<double> n(0.0, 1.0);
    ad::Matrix C(4, 10);
    for (Eigen::Index i = 0; i < C.size(); ++i) C.data()[i] = n(rng);
    const std::vector<double> taus = {0.1, 0.4, 0.6, 0.9};
    const double err = max_relative_error(net, [&](ad::Tape& t) {
        return t.dot(net.quantiles(t, net.encode(t, obs).pooled, taus), C);
    });
    return {obs.num_nodes() == 6 && err < 1e-3,
            fmt("max relative error %.2e over %zu parameters (N=%d, |A|=10)", err, net.num_parameters(), obs.num_nodes())};
}

Outcome c7_overfit() {
    Collector collector([](std::mt19937_64& r) { return generate_instance(6, 6, r()); }, ActionSpace::AN, 4, 20, 3,
                        0.99, 7);
    auto transitions = collector.collect(nullptr, 1.0, 60);
    transitions.resize(32);
    std::vector<const Transition*> batch;
    for (const auto& t : transitions) batch.push_back(&t);
    const std::vector<double> w(32, 1.0);
    GNNConfig cfg = tiny(action_count(ActionSpace::AN));
    cfg.d_emb = cfg.mlp_hidden = 16;
    cfg.iqn_hidden = 32;
    QNetwork net(cfg, 7);
    const QNetwork target = net;
    Adam adam(1e-3);
    auto measure = [&] {
        std::mt19937_64 r(99);
        return td_loss(batch, w, net, target, 8, 8, 0.99, 1.0, r, false).loss;
    };
    const double before = measure();
    std::mt19937_64 rng(7);
    for (int s = 0; s < 500; ++s) {
        net.zero_grad();
        td_loss(batch, w, net, target, 8, 8, 0.99, 1.0, rng);
        adam.step(net.parameters());
    }
    const double after = measure();
    return {after * 10.0 <= before, fmt("loss %.4g -> %.4g (%.1fx)", before, after, before / after)};
}

double accept_all_mean(const std::vector<Instance>& instances, std::uint64_t seed) {
    const int accept = encode_action(ActionSpace::A, {true, Operator::CET, false});
    double total = 0.0;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        JsspEnv env;
        env.reset(instances[i], ActionSpace::A, seed + i, 100);
        while (!env.done()) env.step(accept);
        total += static_cast<double>(env.best_cost());
    }
    return total / static_cast<double>(instances.size());
}

Outcome c8_learned_vs_random() {
    const TrainConfig cfg = parse_train_config(load_key_values(kSource / "configs" / "nls_a_desk.cfg"));
    const auto t0 = std::chrono::steady_clock::now();
    const TrainResult trained = train(cfg, 0);
    const double train_seconds = seconds_since(t0);
    const std::uint64_t seed = 700000;
    const auto held_out = make_instances(6, 6, 64, seed);
    const double learned = evaluate_policy(&trained.best, held_out, ActionSpace::A, cfg.episode_length, seed);
    const double random = evaluate_policy(nullptr, held_out, ActionSpace::A, cfg.episode_length, seed);
    const double bound = accept_all_mean(held_out, seed);
    const double improvement = (random - learned) / random;
    return {learned < random && improvement >= 0.01 && train_seconds <= 900.0,
            fmt("learned %.2f vs random %.2f (%+.2f%%); accept-all bound %.2f; best epoch %d, %lld updates, %.0fs",
                learned, random, 100.0 * improvement, bound, trained.best_epoch, trained.optimizer_steps,
                train_seconds)};
}

Outcome c9_mdp_invariants() {
    std::mt19937_64 rng(9);
    int negative = 0, sum_mismatch = 0, replay_mismatch = 0;
    const ActionSpace spaces[] = {ActionSpace::A, ActionSpace::AN, ActionSpace::ANP};
    for (int e = 0; e < 100; ++e) {
        const auto inst = generate_instance(std::uniform_int_distribution<int>(2, 8)(rng),
                                            std::uniform_int_distribution<int>(2, 6)(rng), rng());
        const ActionSpace space = spaces[e % 3];
        const std::uint64_t seed = rng();
        JsspEnv env;
        env.reset(inst, space, seed, 100);
        std::uniform_int_distribution<int> pick(0, env.num_actions() - 1);
        std::vector<int> actions;
        double sum = 0.0;
        while (!env.done()) {
            actions.push_back(pick(rng));
            const auto r = env.step(actions.back());
            if (r.reward < 0.0) ++negative;
            sum += r.reward;
        }
        if (sum != static_cast<double>(env.initial_cost() - env.best_cost())) ++sum_mismatch;
        JsspEnv again;
        again.reset(inst, space, seed, 100);
        for (int a : actions) again.step(a);
        std::ostringstream ta, tb;
        env.write_trace(ta);
        again.write_trace(tb);
        if (env.trace() != again.trace() || ta.str() != tb.str()) ++replay_mismatch;
    }
    return {negative == 0 && sum_mismatch == 0 && replay_mismatch == 0,
            fmt("100 episodes: %d negative rewards, %d sum mismatches, %d replay mismatches", negative, sum_mismatch,
                replay_mismatch)};
}

Outcome c10_round_trips() {
    int parse_bad = 0;
    for (int n = 1; n <= 80; ++n) {
        const auto inst = bundled(n);
        std::istringstream again(emit_taillard(inst));
        if (!(parse_taillard(again) == inst)) ++parse_bad;
    }

    GNNConfig gc;
    gc.num_actions = 10;
    const QNetwork net(gc, 10);
    const auto path = std::filesystem::temp_directory_path() / "lsctl_acceptance.ckpt";
    net.save(path);
    const QNetwork back = QNetwork::load(path);
    std::ostringstream a, b;
    net.save(a);
    back.save(b);
    std::filesystem::remove(path);
    const bool ckpt_ok = back == net && a.str() == b.str();

    auto strip = [](const std::string& csv) {
        std::istringstream in(csv);
        std::string out;
        for (std::string line; std::getline(in, line);) out += line.substr(0, line.rfind(',')) + '\n';
        return out;
    };
    KeyValues kv = load_key_values(kSource / "configs" / "ils_sa.cfg");
    kv["instances"] = "ta01-ta05,gen:10x5x3x1";
    std::ostringstream first, second;
    write_csv(first, run_benchmark(parse_benchmark_config(kv)));
    kv["jobs"] = "2";
    write_csv(second, run_benchmark(parse_benchmark_config(kv)));
    const bool csv_ok = strip(first.str()) == strip(second.str());

    return {parse_bad == 0 && ckpt_ok && csv_ok,
            fmt("taillard %d/80 equal; checkpoint %s (%zu parameters); bench CSV %s", 80 - parse_bad,
                ckpt_ok ? "bit-exact" : "differs", net.num_parameters(), csv_ok ? "identical" : "differs")};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"makespan oracle equivalence", c1_makespan_oracle},
        {"brute-force optimality", c2_brute_force},
        {"move estimate bound", c3_move_estimate},
        {"PDR reproduction", c4_pdr_reproduction},
        {"meta-heuristic gap bands", c5_gap_bands},
        {"gradient check", c6_gradients},
        {"overfit", c7_overfit},
        {"learned vs random", c8_learned_vs_random},
        {"reward/MDP invariants", c9_mdp_invariants},
        {"determinism and round trips", c10_round_trips},
    };
    const double limits[] = {5, 60, 30, 60, 6 * 120, 60, 60, 1200, 60, 120};
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && !only.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = seconds_since(t0);
        if (secs > limits[i]) {
            o.pass = false;
            o.detail += fmt("; over time limit of %.0fs", limits[i]);
        }
        std::printf("%s %2d %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed ? 1 : 0;
}
