#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lsctl/error.hpp"
#include "lsctl/instance.hpp"

namespace lsctl {

/// Maximal run of consecutive critical operations of one machine, as positions
/// [first, last] in that machine's sequence.
struct CriticalBlock {
    int machine = 0;
    int first = 0;
    int last = 0;
    std::vector<OpId> ops;

    int size() const noexcept { return last - first + 1; }
};

/// Disjunctive graph of a feasible solution with heads, tails and makespan.
///
/// Nodes are the dense operation indices of the instance. The virtual source and
/// sink have zero duration and are implicit: an op without predecessors starts
/// from the source (head 0) and one without successors ends at the sink. The
/// instance must outlive the graph.
class SearchGraph {
public:
    const Instance& instance() const noexcept { return *instance_; }
    int num_ops() const noexcept { return static_cast<int>(head_.size()); }

    Time head(int op) const { return head_[op]; }
    Time tail(int op) const { return tail_[op]; }
    Time proc(int op) const { return instance_->proc(op); }
    Time makespan() const noexcept { return makespan_; }
    bool is_critical(int op) const { return head_[op] + proc(op) + tail_[op] == makespan_; }

    /// -1 where absent.
    int job_pred(int op) const { return op % instance_->num_machines() == 0 ? -1 : op - 1; }
    int job_succ(int op) const {
        return op % instance_->num_machines() == instance_->num_machines() - 1 ? -1 : op + 1;
    }
    int machine_pred(int op) const { return mach_pred_[op]; }
    int machine_succ(int op) const { return mach_succ_[op]; }
    int machine_position(int op) const { return mach_pos_[op]; }

    /// Op indices of machine k in processing order.
    const std::vector<int>& machine_order(int machine) const { return order_[machine]; }
    const std::vector<std::vector<int>>& machine_orders() const noexcept { return order_; }

    const std::vector<Time>& heads() const noexcept { return head_; }
    const std::vector<Time>& tails() const noexcept { return tail_; }

    /// The deterministic critical path (source to sink) chosen by the tie-break rule.
    const std::vector<int>& critical_path() const noexcept { return path_; }

    Solution to_solution() const;

private:
    friend std::optional<SearchGraph> try_build_graph(const Instance&, const std::vector<std::vector<int>>&);

    const Instance* instance_ = nullptr;
    std::vector<std::vector<int>> order_;
    std::vector<int> mach_pred_, mach_succ_, mach_pos_;
    std::vector<Time> head_, tail_;
    std::vector<int> path_;
    Time makespan_ = 0;
};

/// Graph from per-machine op-index orders (assumed well formed). nullopt when cyclic.
std::optional<SearchGraph> try_build_graph(const Instance& instance,
                                           const std::vector<std::vector<int>>& order);

/// Throws Error(MalformedSolution) for a missing/duplicate/misrouted op and
/// Error(CyclicSolution) when the machine orders induce a cycle.
SearchGraph build_graph(const Instance& instance, const Solution& solution);

/// Critical blocks along graph.critical_path(), ordered source to sink.
std::vector<CriticalBlock> critical_blocks(const SearchGraph& graph);

struct ValidationIssue {
    ErrorCode code;
    std::string detail;
};

/// Every problem found; empty means the solution is feasible.
std::vector<ValidationIssue> validate(const Instance& instance, const Solution& solution);

}  // namespace lsctl
