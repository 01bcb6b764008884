#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace lsctl {

/// Processing times and makespans are integral time units.
using Time = std::int64_t;

/// The `pos`-th operation of job `job`.
struct OpId {
    int job = 0;
    int pos = 0;

    auto operator<=>(const OpId&) const = default;
};

/// A J x M job shop: every job visits every machine exactly once, in its own order.
///
/// Operations are also addressed by a dense index `job * M + pos`, which is the
/// node numbering used by the search graph and the observation tensors.
class Instance {
public:
    /// `proc` and `machine` are row-major J x M. Throws Error(MalformedInstance)
    /// when a machine row is not a permutation of [0, M) or a time is negative.
    Instance(int num_jobs, int num_machines, std::vector<Time> proc,
             std::vector<int> machine, std::string name = {});

    int num_jobs() const noexcept { return jobs_; }
    int num_machines() const noexcept { return machines_; }
    int num_ops() const noexcept { return jobs_ * machines_; }
    const std::string& name() const noexcept { return name_; }

    Time proc(int job, int pos) const { return proc_[index(job, pos)]; }
    Time proc(OpId op) const { return proc(op.job, op.pos); }
    Time proc(int idx) const { return proc_[idx]; }
    int machine(int job, int pos) const { return machine_[index(job, pos)]; }
    int machine(OpId op) const { return machine(op.job, op.pos); }
    int machine(int idx) const { return machine_[idx]; }

    int index(int job, int pos) const noexcept { return job * machines_ + pos; }
    int index(OpId op) const noexcept { return index(op.job, op.pos); }
    OpId op(int idx) const noexcept { return {idx / machines_, idx % machines_}; }

    /// Sum of processing times of job `job` from position `pos` to the end.
    Time remaining_work(int job, int pos) const;
    /// Sum of processing times of job `job` up to and including position `pos`.
    Time cumulative_work(int job, int pos) const;

    Time max_proc() const noexcept { return max_proc_; }
    /// max(max machine load, max job length); no schedule can be shorter.
    Time trivial_lower_bound() const;

    const std::vector<Time>& proc_times() const noexcept { return proc_; }
    const std::vector<int>& machines() const noexcept { return machine_; }

    bool operator==(const Instance& other) const {
        return jobs_ == other.jobs_ && machines_ == other.machines_ && proc_ == other.proc_ &&
               machine_ == other.machine_;
    }

private:
    int jobs_;
    int machines_;
    std::vector<Time> proc_;
    std::vector<int> machine_;
    std::vector<Time> prefix_;  // prefix_[j*(M+1)+k] = sum of the first k times of job j
    Time max_proc_ = 0;
    std::string name_;
};

/// Per-machine operation order. machine_seq[k] lists the J operations processed on k.
struct Solution {
    std::vector<std::vector<OpId>> machine_seq;

    bool operator==(const Solution&) const = default;
};

/// FNV-1a over the machine sequences; used for reproducibility checks.
std::uint64_t solution_hash(const Solution& solution);

}  // namespace lsctl
