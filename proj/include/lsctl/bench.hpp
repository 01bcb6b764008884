#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lsctl/config.hpp"
#include "lsctl/construction.hpp"
#include "lsctl/metaheuristics.hpp"
#include "lsctl/qnetwork.hpp"

namespace lsctl {

enum class MethodType { Pdr, Controller, Neural };

/// One solving method: a dispatching rule, a classical controller, or a
/// learned NLS policy loaded from a checkpoint.
struct Method {
    MethodType type = MethodType::Pdr;
    std::string label;
    DispatchRule rule = DispatchRule::FDD_over_MWKR;
    ControllerConfig controller{};
    ActionSpace space = ActionSpace::A;
    std::filesystem::path checkpoint;
};

/// Method names: any PDR ("FDD/MWKR", "SPT", ...), a controller kind ("VNS",
/// "ILS+SA", ...), or NLS_A / NLS_AN / NLS_ANP (requires a checkpoint).
/// Controller keys in kv override the defaults.
Method parse_method(const std::string& name, const KeyValues& kv = {}, const std::filesystem::path& checkpoint = {});

struct InstanceEntry {
    std::string name;
    std::filesystem::path path;          ///< empty for generated instances
    std::shared_ptr<const Instance> instance;  ///< set once loaded
    std::string load_error;
};

/// Comma-separated specs: a file path, a bundled Taillard name or range
/// ("ta01", "ta01-ta10"), or a generator "gen:JxMxCOUNTxSEED".
std::vector<InstanceEntry> resolve_instances(const std::string& spec);

enum class OutputFormat { Csv, Table };
std::optional<OutputFormat> parse_format(const std::string& name);

struct BenchmarkConfig {
    Method method;
    std::vector<InstanceEntry> instances;
    int iterations = 100;
    std::uint64_t seed = 0;
    int num_seeds = 1;  ///< seeds seed .. seed + num_seeds - 1
    std::filesystem::path out;
    OutputFormat format = OutputFormat::Table;
    int jobs = 1;

    void check() const;
};

/// Keys: method, instances, iterations, seed, seeds, out, format, jobs,
/// checkpoint, plus controller keys.
BenchmarkConfig parse_benchmark_config(const KeyValues& kv);

struct ResultRow {
    std::string instance;
    std::string group;  ///< "JxM"
    std::uint64_t seed = 0;
    Time cost = 0;
    std::optional<Time> bks;
    std::optional<double> gap;  ///< (cost - bks) / bks
    double wall_seconds = 0.0;
    std::string error;  ///< non-empty when the run failed
};

struct GroupRow {
    std::string group;
    int count = 0;
    double mean_cost = 0.0;
    std::optional<double> mean_gap;  ///< over member rows with a known BKS
    double wall_seconds = 0.0;
};

struct BenchmarkResult {
    std::string method;
    int iterations = 0;
    std::vector<ResultRow> rows;
    std::vector<GroupRow> groups;
    bool ok() const;
};

/// Solves one instance; the returned solution is the one whose cost is reported.
struct SolveResult {
    Solution solution;
    Time cost = 0;
    Time initial_cost = 0;
};
SolveResult solve_instance(const Method& method, const QNetwork* net, const Instance& instance, int iterations,
                           std::uint64_t seed);

/// Runs every (instance, seed) pair on a pool of config.jobs workers. Rows keep
/// input order; each cost is re-validated before it is reported.
BenchmarkResult run_benchmark(const BenchmarkConfig& config);

std::vector<GroupRow> group_means(const std::vector<ResultRow>& rows);

void write_csv(std::ostream& out, const BenchmarkResult& result);
void write_table(std::ostream& out, const BenchmarkResult& result);

/// BKS for bundled Taillard instances.
const std::map<std::string, Time>& bundled_bks();

}  // namespace lsctl
