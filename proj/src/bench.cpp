#include "lsctl/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "lsctl/error.hpp"
#include "lsctl/graph.hpp"
#include "lsctl/taillard.hpp"
#include "lsctl/trainer.hpp"

namespace lsctl {

Method parse_method(const std::string& name, const KeyValues& kv, const std::filesystem::path& checkpoint) {
    Method m;
    m.label = name;
    if (auto rule = parse_dispatch_rule(name)) {
        m.type = MethodType::Pdr;
        m.rule = *rule;
        m.label = std::string(to_string(*rule));
        return m;
    }
    if (auto kind = parse_controller_kind(name)) {
        m.type = MethodType::Controller;
        KeyValues ckv;
        const auto known = to_key_values(ControllerConfig{});
        for (const auto& [k, v] : kv)
            if (known.count(k)) ckv[k] = v;
        ckv["kind"] = std::string(to_string(*kind));
        m.controller = parse_controller_config(ckv);
        m.label = std::string(to_string(*kind));
        return m;
    }
    if (auto space = parse_action_space(name); space && name.size() > 3) {
        m.type = MethodType::Neural;
        m.space = *space;
        m.label = "NLS_" + std::string(to_string(*space));
        if (checkpoint.empty()) throw Error(ErrorCode::InvalidConfig, m.label + " needs --checkpoint");
        m.checkpoint = checkpoint;
        return m;
    }
    throw Error(ErrorCode::InvalidConfig, "unknown method '" + name + "'");
}

namespace {

std::string trim(std::string s) {
    s.erase(0, s.find_first_not_of(" \t"));
    s.erase(s.find_last_not_of(" \t") + 1);
    return s;
}

std::optional<int> taillard_number(const std::string& s) {
    if (s.size() < 3 || s.compare(0, 2, "ta") != 0) return std::nullopt;
    for (std::size_t i = 2; i < s.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return std::nullopt;
    return std::stoi(s.substr(2));
}

std::string taillard_name(int n) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "ta%02d", n);
    return buf;
}

InstanceEntry from_path(const std::filesystem::path& p, std::string name) {
    InstanceEntry e;
    e.name = std::move(name);
    e.path = p;
    try {
        e.instance = std::make_shared<const Instance>(load_taillard(p));
    } catch (const Error& err) {
        e.load_error = err.what();
    }
    return e;
}

}  // namespace

std::vector<InstanceEntry> resolve_instances(const std::string& spec) {
    std::vector<InstanceEntry> out;
    std::stringstream ss(spec);
    std::string item;
    const auto dir = bundled_data_dir() / "taillard";
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        if (item.rfind("gen:", 0) == 0) {
            int J = 0, M = 0, count = 0;
            unsigned long long seed = 0;
            if (std::sscanf(item.c_str() + 4, "%dx%dx%dx%llu", &J, &M, &count, &seed) != 4 || J < 1 || M < 1 ||
                count < 0)
                throw Error(ErrorCode::InvalidConfig, "generator spec must be gen:JxMxCOUNTxSEED, got '" + item + "'");
            for (int i = 0; i < count; ++i) {
                auto inst = generate_instance(J, M, seed + static_cast<unsigned long long>(i));
                InstanceEntry e;
                e.name = inst.name();
                e.instance = std::make_shared<const Instance>(std::move(inst));
                out.push_back(std::move(e));
            }
            continue;
        }
        if (auto dash = item.find('-'); dash != std::string::npos) {
            auto a = taillard_number(item.substr(0, dash));
            auto b = taillard_number(item.substr(dash + 1));
            if (a && b) {
                for (int n = *a; n <= *b; ++n) out.push_back(from_path(dir / (taillard_name(n) + ".txt"), taillard_name(n)));
                continue;
            }
        }
        if (auto n = taillard_number(item); n && !std::filesystem::exists(item)) {
            out.push_back(from_path(dir / (taillard_name(*n) + ".txt"), taillard_name(*n)));
            continue;
        }
        std::filesystem::path p(item);
        out.push_back(from_path(p, p.stem().string()));
    }
    return out;
}

std::optional<OutputFormat> parse_format(const std::string& name) {
    if (name == "csv") return OutputFormat::Csv;
    if (name == "table") return OutputFormat::Table;
    return std::nullopt;
}

void BenchmarkConfig::check() const {
    if (iterations < 1) throw Error(ErrorCode::InvalidConfig, "iterations must be >= 1");
    if (num_seeds < 1) throw Error(ErrorCode::InvalidConfig, "seeds must be >= 1");
    if (jobs < 1) throw Error(ErrorCode::InvalidConfig, "jobs must be >= 1");
}

BenchmarkConfig parse_benchmark_config(const KeyValues& kv) {
    BenchmarkConfig c;
    auto get = [&](const char* key) -> const std::string* {
        auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };
    const std::string* method = get("method");
    if (!method) throw Error(ErrorCode::InvalidConfig, "benchmark config needs a 'method' key");
    std::filesystem::path checkpoint;
    if (auto* cp = get("checkpoint")) checkpoint = *cp;
    c.method = parse_method(*method, kv, checkpoint);
    if (auto* v = get("instances")) c.instances = resolve_instances(*v);
    if (auto* v = get("iterations")) c.iterations = kv_int("iterations", *v);
    if (auto* v = get("seed")) c.seed = static_cast<std::uint64_t>(kv_int("seed", *v));
    if (auto* v = get("seeds")) c.num_seeds = kv_int("seeds", *v);
    if (auto* v = get("jobs")) c.jobs = kv_int("jobs", *v);
    if (auto* v = get("out")) c.out = *v;
    if (auto* v = get("format")) {
        auto f = parse_format(*v);
        if (!f) throw Error(ErrorCode::InvalidConfig, "format must be csv or table");
        c.format = *f;
    }
    const auto controller_keys = to_key_values(ControllerConfig{});
    for (const auto& [k, v] : kv) {
        static const char* bench_keys[] = {"method", "instances", "iterations", "seed",      "seeds",
                                           "jobs",   "out",       "format",     "checkpoint"};
        const bool known = std::find_if(std::begin(bench_keys), std::end(bench_keys),
                                        [&](const char* b) { return k == b; }) != std::end(bench_keys);
        if (!known && !controller_keys.count(k)) throw Error(ErrorCode::InvalidConfig, "unknown key '" + k + "'");
    }
    c.check();
    return c;
}

const std::map<std::string, Time>& bundled_bks() {
    static const std::map<std::string, Time> table = [] {
        try {
            return load_bks_table(bundled_data_dir() / "taillard" / "reference.csv");
        } catch (const Error&) {
            return std::map<std::string, Time>{};
        }
    }();
    return table;
}

SolveResult solve_instance(const Method& method, const QNetwork* net, const Instance& instance, int iterations,
                           std::uint64_t seed) {
    SolveResult r;
    switch (method.type) {
        case MethodType::Pdr: {
            r.solution = dispatch(instance, method.rule, seed);
            r.cost = r.initial_cost = build_graph(instance, r.solution).makespan();
            break;
        }
        case MethodType::Controller: {
            ClassicController ctl(method.controller, seed);
            RunResult run_result = run(ctl, instance, DispatchRule::FDD_over_MWKR, iterations, seed);
            r.solution = std::move(run_result.best_solution);
            r.cost = run_result.best_cost;
            r.initial_cost = run_result.initial_cost;
            break;
        }
        case MethodType::Neural: {
            if (!net) throw Error(ErrorCode::InvalidConfig, "neural method without a loaded network");
            PolicyRun p = run_policy(net, instance, method.space, iterations, seed);
            r.solution = std::move(p.best_solution);
            r.cost = p.best_cost;
            r.initial_cost = p.initial_cost;
            break;
        }
    }
    return r;
}

bool BenchmarkResult::ok() const {
    return std::all_of(rows.begin(), rows.end(), [](const ResultRow& r) { return r.error.empty(); });
}

std::vector<GroupRow> group_means(const std::vector<ResultRow>& rows) {
    std::vector<GroupRow> out;
    std::map<std::string, std::size_t> index;
    std::vector<int> gap_counts;
    for (const auto& r : rows) {
        if (!r.error.empty()) continue;
        auto [it, inserted] = index.emplace(r.group, out.size());
        if (inserted) {
            out.push_back({r.group, 0, 0.0, std::nullopt, 0.0});
            gap_counts.push_back(0);
        }
        GroupRow& g = out[it->second];
        ++g.count;
        g.mean_cost += static_cast<double>(r.cost);
        g.wall_seconds += r.wall_seconds;
        if (r.gap) {
            g.mean_gap = g.mean_gap.value_or(0.0) + *r.gap;
            ++gap_counts[it->second];
        }
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].mean_cost /= out[i].count;
        if (out[i].mean_gap) *out[i].mean_gap /= gap_counts[i];
    }
    return out;
}

BenchmarkResult run_benchmark(const BenchmarkConfig& config) {
    config.check();
    BenchmarkResult res;
    res.method = config.method.label;
    res.iterations = config.method.type == MethodType::Pdr ? 0 : config.iterations;

    std::unique_ptr<QNetwork> net;
    std::string net_error;
    if (config.method.type == MethodType::Neural) {
        try {
            net = std::make_unique<QNetwork>(QNetwork::load(config.method.checkpoint));
            if (net->num_actions() != action_count(config.method.space))
                throw Error(ErrorCode::InvalidConfig, "checkpoint has " + std::to_string(net->num_actions()) +
                                                          " actions, " + config.method.label + " needs " +
                                                          std::to_string(action_count(config.method.space)));
        } catch (const Error& e) {
            net_error = e.what();
            net.reset();
        }
    }

    struct Task {
        const InstanceEntry* entry;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (const auto& e : config.instances)
        for (int s = 0; s < config.num_seeds; ++s) tasks.push_back({&e, config.seed + static_cast<std::uint64_t>(s)});
    res.rows.resize(tasks.size());
    const auto& bks = bundled_bks();

    auto work = [&](std::size_t i) {
        const Task& t = tasks[i];
        ResultRow& row = res.rows[i];
        row.instance = t.entry->name;
        row.seed = t.seed;
        if (!t.entry->instance) {
            row.error = t.entry->load_error;
            return;
        }
        const Instance& inst = *t.entry->instance;
        row.group = std::to_string(inst.num_jobs()) + "x" + std::to_string(inst.num_machines());
        if (!net_error.empty()) {
            row.error = net_error;
            return;
        }
        try {
            const auto start = std::chrono::steady_clock::now();
            SolveResult sr = solve_instance(config.method, net.get(), inst, config.iterations, t.seed);
            row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            const auto issues = validate(inst, sr.solution);
            if (!issues.empty()) {
                row.error = "invalid solution: " + issues.front().detail;
                return;
            }
            const Time checked = build_graph(inst, sr.solution).makespan();
            if (checked != sr.cost) {
                row.error = "reported cost " + std::to_string(sr.cost) + " differs from recomputed " +
                            std::to_string(checked);
                return;
            }
            row.cost = checked;
            if (auto it = bks.find(row.instance); it != bks.end()) {
                row.bks = it->second;
                row.gap = static_cast<double>(row.cost - it->second) / static_cast<double>(it->second);
            }
        } catch (const std::exception& e) {
            row.error = e.what();
        }
    };

    const int workers = std::min<int>(config.jobs, static_cast<int>(std::max<std::size_t>(tasks.size(), 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) work(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < tasks.size(); i = next++) work(i);
            });
        for (auto& th : pool) th.join();
    }
    res.groups = group_means(res.rows);
    return res;
}

namespace {
std::string fmt_gap(const std::optional<double>& g, bool percent) {
    if (!g) return "";
    std::ostringstream os;
    os << std::fixed << std::setprecision(percent ? 2 : 6) << (percent ? *g * 100.0 : *g);
    return os.str();
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}
}  // namespace

void write_csv(std::ostream& out, const BenchmarkResult& r) {
    out << "kind,instance,group,method,iterations,seed,cost,bks,gap,error,wall_seconds\n";
    auto secs = [](double s) {
        std::ostringstream os;
        os << std::fixed << std::setprecision(4) << s;
        return os.str();
    };
    for (const auto& row : r.rows) {
        out << "instance," << csv_field(row.instance) << ',' << row.group << ',' << csv_field(r.method) << ','
            << r.iterations << ',' << row.seed << ',' << (row.error.empty() ? std::to_string(row.cost) : "") << ','
            << (row.bks ? std::to_string(*row.bks) : "") << ',' << fmt_gap(row.gap, false) << ','
            << csv_field(row.error) << ',' << secs(row.wall_seconds) << '\n';
    }
    for (const auto& g : r.groups) {
        std::ostringstream cost;
        cost << std::fixed << std::setprecision(2) << g.mean_cost;
        out << "group_mean,," << g.group << ',' << csv_field(r.method) << ',' << r.iterations << ",," << cost.str()
            << ",," << fmt_gap(g.mean_gap, false) << ",," << secs(g.wall_seconds) << '\n';
    }
}

void write_table(std::ostream& out, const BenchmarkResult& r) {
    std::vector<std::vector<std::string>> cells;
    cells.push_back({"instance", "size", "seed", "cost", "BKS", "gap %", "time s"});
    for (const auto& row : r.rows) {
        std::ostringstream t;
        t << std::fixed << std::setprecision(3) << row.wall_seconds;
        if (!row.error.empty()) {
            cells.push_back({row.instance, row.group, std::to_string(row.seed), "ERROR", "", "", row.error});
            continue;
        }
        cells.push_back({row.instance, row.group, std::to_string(row.seed), std::to_string(row.cost),
                         row.bks ? std::to_string(*row.bks) : "-", row.gap ? fmt_gap(row.gap, true) : "-", t.str()});
    }
    std::vector<std::size_t> width(cells.front().size(), 0);
    for (const auto& line : cells)
        for (std::size_t c = 0; c + 1 < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
    out << "method " << r.method;
    if (r.iterations) out << ", " << r.iterations << " iterations";
    out << '\n';
    for (const auto& line : cells) {
        for (std::size_t c = 0; c < line.size(); ++c) {
            if (c) out << "  ";
            if (c + 1 == line.size()) out << line[c];
            else if (c == 0) out << std::left << std::setw(static_cast<int>(width[c])) << line[c];
            else out << std::right << std::setw(static_cast<int>(width[c])) << line[c];
        }
        out << '\n';
    }
    if (!r.groups.empty()) {
        out << '\n' << std::left << std::setw(8) << "group" << std::right << std::setw(6) << "n" << std::setw(12)
            << "mean cost" << std::setw(10) << "mean gap" << '\n';
        for (const auto& g : r.groups) {
            std::ostringstream c;
            c << std::fixed << std::setprecision(2) << g.mean_cost;
            out << std::left << std::setw(8) << g.group << std::right << std::setw(6) << g.count << std::setw(12)
                << c.str() << std::setw(10) << (g.mean_gap ? fmt_gap(g.mean_gap, true) + "%" : "-") << '\n';
        }
    }
    out << std::left;
}

}  // namespace lsctl
