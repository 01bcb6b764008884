#include "lsctl/instance.hpp"

#include <algorithm>

#include "lsctl/error.hpp"

namespace lsctl {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::MalformedInstance: return "MalformedInstance";
        case ErrorCode::MalformedSolution: return "MalformedSolution";
        case ErrorCode::CyclicSolution: return "CyclicSolution";
        case ErrorCode::InvalidMove: return "InvalidMove";
        case ErrorCode::InvalidAction: return "InvalidAction";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::NotRecorded: return "NotRecorded";
        case ErrorCode::Divergence: return "Divergence";
    }
    return "Unknown";
}

Instance::Instance(int num_jobs, int num_machines, std::vector<Time> proc, std::vector<int> machine,
                   std::string name)
    : jobs_(num_jobs), machines_(num_machines), proc_(std::move(proc)), machine_(std::move(machine)),
      name_(std::move(name)) {
    if (jobs_ < 1 || machines_ < 1)
        throw Error(ErrorCode::MalformedInstance, "job and machine counts must be positive");
    const auto n = static_cast<std::size_t>(jobs_) * static_cast<std::size_t>(machines_);
    if (proc_.size() != n || machine_.size() != n)
        throw Error(ErrorCode::MalformedInstance, "expected " + std::to_string(n) + " entries per matrix");
    std::vector<char> seen(machines_);
    prefix_.assign(static_cast<std::size_t>(jobs_) * (machines_ + 1), 0);
    for (int j = 0; j < jobs_; ++j) {
        std::fill(seen.begin(), seen.end(), 0);
        for (int k = 0; k < machines_; ++k) {
            const int m = machine_[index(j, k)];
            if (m < 0 || m >= machines_ || seen[m])
                throw Error(ErrorCode::MalformedInstance,
                            "machine row of job " + std::to_string(j) + " is not a permutation");
            seen[m] = 1;
            const Time p = proc_[index(j, k)];
            if (p < 0)
                throw Error(ErrorCode::MalformedInstance, "negative processing time in job " + std::to_string(j));
            max_proc_ = std::max(max_proc_, p);
            prefix_[j * (machines_ + 1) + k + 1] = prefix_[j * (machines_ + 1) + k] + p;
        }
    }
}

Time Instance::remaining_work(int job, int pos) const {
    const auto base = static_cast<std::size_t>(job) * (machines_ + 1);
    return prefix_[base + machines_] - prefix_[base + pos];
}

Time Instance::cumulative_work(int job, int pos) const {
    return prefix_[static_cast<std::size_t>(job) * (machines_ + 1) + pos + 1];
}

Time Instance::trivial_lower_bound() const {
    std::vector<Time> load(machines_, 0);
    Time best = 0;
    for (int j = 0; j < jobs_; ++j) {
        best = std::max(best, remaining_work(j, 0));
        for (int k = 0; k < machines_; ++k) load[machine(j, k)] += proc(j, k);
    }
    for (Time l : load) best = std::max(best, l);
    return best;
}

std::uint64_t solution_hash(const Solution& solution) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t v) {
        h ^= v;
        h *= 1099511628211ULL;
    };
    for (const auto& seq : solution.machine_seq) {
        mix(0xFFFFFFFFULL);
        for (const auto& op : seq) {
            mix(static_cast<std::uint64_t>(op.job));
            mix(static_cast<std::uint64_t>(op.pos));
        }
    }
    return h;
}

}  // namespace lsctl
