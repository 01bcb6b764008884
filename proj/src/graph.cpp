#include "lsctl/graph.hpp"

#include <algorithm>

namespace lsctl {

namespace {

// Structural check of the machine sequences; cyclicity is not examined here.
std::vector<ValidationIssue> structural_issues(const Instance& inst, const Solution& sol) {
    std::vector<ValidationIssue> issues;
    const int J = inst.num_jobs();
    const int M = inst.num_machines();
    if (static_cast<int>(sol.machine_seq.size()) != M) {
        issues.push_back({ErrorCode::MalformedSolution,
                          "expected " + std::to_string(M) + " machine sequences, got " +
                              std::to_string(sol.machine_seq.size())});
        return issues;
    }
    std::vector<int> count(inst.num_ops(), 0);
    for (int k = 0; k < M; ++k) {
        for (const OpId& op : sol.machine_seq[k]) {
            if (op.job < 0 || op.job >= J || op.pos < 0 || op.pos >= M) {
                issues.push_back({ErrorCode::MalformedSolution,
                                  "op (" + std::to_string(op.job) + "," + std::to_string(op.pos) +
                                      ") out of range on machine " + std::to_string(k)});
                continue;
            }
            if (inst.machine(op) != k)
                issues.push_back({ErrorCode::MalformedSolution,
                                  "op (" + std::to_string(op.job) + "," + std::to_string(op.pos) +
                                      ") is routed to machine " + std::to_string(inst.machine(op)) +
                                      ", listed on " + std::to_string(k)});
            ++count[inst.index(op)];
        }
    }
    for (int i = 0; i < inst.num_ops(); ++i) {
        const OpId op = inst.op(i);
        if (count[i] > 1)
            issues.push_back({ErrorCode::MalformedSolution,
                              "op (" + std::to_string(op.job) + "," + std::to_string(op.pos) + ") listed " +
                                  std::to_string(count[i]) + " times"});
        else if (count[i] == 0)
            issues.push_back({ErrorCode::MalformedSolution,
                              "op (" + std::to_string(op.job) + "," + std::to_string(op.pos) + ") missing"});
    }
    return issues;
}

std::vector<std::vector<int>> to_order(const Instance& inst, const Solution& sol) {
    std::vector<std::vector<int>> order(sol.machine_seq.size());
    for (std::size_t k = 0; k < sol.machine_seq.size(); ++k) {
        order[k].reserve(sol.machine_seq[k].size());
        for (const OpId& op : sol.machine_seq[k]) order[k].push_back(inst.index(op));
    }
    return order;
}

}  // namespace

std::optional<SearchGraph> try_build_graph(const Instance& inst, const std::vector<std::vector<int>>& order) {
    const int n = inst.num_ops();
    const int M = inst.num_machines();
    SearchGraph g;
    g.instance_ = &inst;
    g.order_ = order;
    g.mach_pred_.assign(n, -1);
    g.mach_succ_.assign(n, -1);
    g.mach_pos_.assign(n, -1);
    for (const auto& seq : order) {
        for (std::size_t i = 0; i < seq.size(); ++i) {
            g.mach_pos_[seq[i]] = static_cast<int>(i);
            if (i > 0) g.mach_pred_[seq[i]] = seq[i - 1];
            if (i + 1 < seq.size()) g.mach_succ_[seq[i]] = seq[i + 1];
        }
    }

    // Kahn's algorithm; every node has at most one job and one machine predecessor.
    std::vector<int> indeg(n, 0);
    for (int v = 0; v < n; ++v) indeg[v] = (v % M != 0) + (g.mach_pred_[v] >= 0);
    std::vector<int> topo;
    topo.reserve(n);
    for (int v = 0; v < n; ++v)
        if (indeg[v] == 0) topo.push_back(v);
    for (std::size_t i = 0; i < topo.size(); ++i) {
        const int v = topo[i];
        const int js = g.job_succ(v);
        const int ms = g.mach_succ_[v];
        if (js >= 0 && --indeg[js] == 0) topo.push_back(js);
        if (ms >= 0 && --indeg[ms] == 0) topo.push_back(ms);
    }
    if (static_cast<int>(topo.size()) != n) return std::nullopt;

    g.head_.assign(n, 0);
    g.tail_.assign(n, 0);
    for (int v : topo) {
        Time h = 0;
        const int jp = g.job_pred(v);
        const int mp = g.mach_pred_[v];
        if (jp >= 0) h = std::max(h, g.head_[jp] + inst.proc(jp));
        if (mp >= 0) h = std::max(h, g.head_[mp] + inst.proc(mp));
        g.head_[v] = h;
    }
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        const int v = *it;
        Time q = 0;
        const int js = g.job_succ(v);
        const int ms = g.mach_succ_[v];
        if (js >= 0) q = std::max(q, g.tail_[js] + inst.proc(js));
        if (ms >= 0) q = std::max(q, g.tail_[ms] + inst.proc(ms));
        g.tail_[v] = q;
    }
    g.makespan_ = 0;
    for (int v = 0; v < n; ++v) g.makespan_ = std::max(g.makespan_, g.head_[v] + inst.proc(v));

    // Walk back from the sink: prefer the larger head, then the machine
    // predecessor, then the lower op index.
    int cur = -1;
    for (int v = 0; v < n; ++v) {
        if (g.head_[v] + inst.proc(v) != g.makespan_) continue;
        if (cur < 0 || g.head_[v] > g.head_[cur]) cur = v;
    }
    g.path_.clear();
    while (cur >= 0) {
        g.path_.push_back(cur);
        const int mp = g.mach_pred_[cur];
        const int jp = g.job_pred(cur);
        const bool mp_ok = mp >= 0 && g.head_[mp] + inst.proc(mp) == g.head_[cur];
        const bool jp_ok = jp >= 0 && g.head_[jp] + inst.proc(jp) == g.head_[cur];
        int next = -1;
        if (mp_ok && jp_ok) {
            if (g.head_[mp] != g.head_[jp]) next = g.head_[mp] > g.head_[jp] ? mp : jp;
            else next = mp;
        } else if (mp_ok) {
            next = mp;
        } else if (jp_ok) {
            next = jp;
        }
        cur = next;
    }
    std::reverse(g.path_.begin(), g.path_.end());
    return g;
}

SearchGraph build_graph(const Instance& instance, const Solution& solution) {
    auto issues = structural_issues(instance, solution);
    if (!issues.empty()) throw Error(ErrorCode::MalformedSolution, issues.front().detail);
    auto g = try_build_graph(instance, to_order(instance, solution));
    if (!g) throw Error(ErrorCode::CyclicSolution, "machine sequences induce a cycle");
    return std::move(*g);
}

Solution SearchGraph::to_solution() const {
    Solution s;
    s.machine_seq.resize(order_.size());
    for (std::size_t k = 0; k < order_.size(); ++k) {
        s.machine_seq[k].reserve(order_[k].size());
        for (int v : order_[k]) s.machine_seq[k].push_back(instance_->op(v));
    }
    return s;
}

std::vector<CriticalBlock> critical_blocks(const SearchGraph& graph) {
    std::vector<CriticalBlock> blocks;
    const auto& path = graph.critical_path();
    const Instance& inst = graph.instance();
    for (std::size_t i = 0; i < path.size();) {
        std::size_t j = i;
        while (j + 1 < path.size() && graph.machine_succ(path[j]) == path[j + 1]) ++j;
        CriticalBlock b;
        b.machine = inst.machine(path[i]);
        b.first = graph.machine_position(path[i]);
        b.last = graph.machine_position(path[j]);
        for (std::size_t t = i; t <= j; ++t) b.ops.push_back(inst.op(path[t]));
        blocks.push_back(std::move(b));
        i = j + 1;
    }
    return blocks;
}

std::vector<ValidationIssue> validate(const Instance& instance, const Solution& solution) {
    auto issues = structural_issues(instance, solution);
    if (issues.empty() && !try_build_graph(instance, to_order(instance, solution)))
        issues.push_back({ErrorCode::CyclicSolution, "machine sequences induce a cycle"});
    return issues;
}

}  // namespace lsctl
