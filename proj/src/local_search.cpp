#include "lsctl/local_search.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <string>

#include "lsctl/error.hpp"

namespace lsctl {

std::string_view to_string(Operator op) {
    switch (op) {
        case Operator::CT: return "CT";
        case Operator::CET: return "CET";
        case Operator::ECET: return "ECET";
        case Operator::CEI: return "CEI";
    }
    return "?";
}

std::optional<Operator> parse_operator(std::string_view name) {
    std::string s(name);
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    for (Operator op : kAllOperators)
        if (s == to_string(op)) return op;
    return std::nullopt;
}

SearchState::SearchState(const Instance& instance, const Solution& solution)
    : graph_(build_graph(instance, solution)), blocks_(critical_blocks(graph_)) {}

bool SearchState::reset_orders(std::vector<std::vector<int>> order) {
    auto g = try_build_graph(graph_.instance(), order);
    if (!g) return false;
    graph_ = std::move(*g);
    blocks_ = critical_blocks(graph_);
    return true;
}

std::vector<Move> enumerate_moves(const SearchGraph&, const std::vector<CriticalBlock>& blocks, Operator op) {
    std::vector<Move> moves;
    for (const CriticalBlock& b : blocks) {
        const int len = b.size();
        switch (op) {
            case Operator::CT:
                for (int i = b.first; i < b.last; ++i) moves.push_back({op, b.machine, i, i + 1});
                break;
            case Operator::CET:
                if (len >= 2) {
                    moves.push_back({op, b.machine, b.first, b.first + 1});
                    if (len > 2) moves.push_back({op, b.machine, b.last - 1, b.last});
                }
                break;
            case Operator::ECET:
                if (len >= 4) moves.push_back({op, b.machine, b.first, b.last});
                break;
            case Operator::CEI:
                if (len >= 3)
                    for (int from = b.first; from <= b.last; ++from)
                        for (int to = b.first; to <= b.last; ++to)
                            if (std::abs(from - to) >= 2) moves.push_back({op, b.machine, from, to});
                break;
        }
    }
    return moves;
}

std::vector<Move> enumerate_moves(const SearchState& state, Operator op) {
    return enumerate_moves(state.graph(), state.blocks(), op);
}

Segment move_segment(const SearchGraph& graph, const Move& mv) {
    const int M = graph.instance().num_machines();
    if (mv.machine < 0 || mv.machine >= M) throw Error(ErrorCode::InvalidMove, "machine out of range");
    const auto& seq = graph.machine_order(mv.machine);
    const int len = static_cast<int>(seq.size());
    auto in_range = [len](int p) { return p >= 0 && p < len; };
    if (!in_range(mv.first) || !in_range(mv.second)) throw Error(ErrorCode::InvalidMove, "position out of range");
    Segment s;
    switch (mv.kind) {
        case Operator::CT:
        case Operator::CET:
            if (mv.second != mv.first + 1) throw Error(ErrorCode::InvalidMove, "swap positions not adjacent");
            s.lo = mv.first;
            s.hi = mv.second;
            s.order = {seq[s.hi], seq[s.lo]};
            return s;
        case Operator::ECET:
            if (mv.second - mv.first < 3) throw Error(ErrorCode::InvalidMove, "ECET needs a block of length >= 4");
            s.lo = mv.first;
            s.hi = mv.second;
            s.order.assign(seq.begin() + s.lo, seq.begin() + s.hi + 1);
            std::swap(s.order[0], s.order[1]);
            std::swap(s.order[s.order.size() - 1], s.order[s.order.size() - 2]);
            return s;
        case Operator::CEI: {
            if (std::abs(mv.first - mv.second) < 2) throw Error(ErrorCode::InvalidMove, "CEI shift shorter than 2");
            s.lo = std::min(mv.first, mv.second);
            s.hi = std::max(mv.first, mv.second);
            s.order.assign(seq.begin() + s.lo, seq.begin() + s.hi + 1);
            if (mv.first < mv.second) std::rotate(s.order.begin(), s.order.begin() + 1, s.order.end());
            else std::rotate(s.order.rbegin(), s.order.rbegin() + 1, s.order.rend());
            return s;
        }
    }
    throw Error(ErrorCode::InvalidMove, "unknown operator");
}

// Reordering the segment [lo, hi] of one machine only removes or adds arcs
// incident to segment ops (plus the boundary arcs into seq[lo] and out of
// seq[hi]). A node y outside the segment that is not reachable from it keeps its
// old longest source path, so its new head is at least head(y). Every node
// reachable from the segment has head >= head(seq[lo]) + p(seq[lo]); nodes below
// that threshold are therefore safe. For the others the job prefix work is used,
// which is a head lower bound in any feasible graph. Tails are symmetric, using
// seq[hi]. Propagating these bounds along the new segment order yields lower
// bounds of the new heads and tails of segment ops, and the longest path through
// any of them bounds the new makespan from below.
MoveEval estimate_move(const SearchGraph& g, const Move& mv) {
    const Segment s = move_segment(g, mv);
    const Instance& inst = g.instance();
    const auto& seq = g.machine_order(mv.machine);
    const int a = seq[s.lo];
    const int b = seq[s.hi];
    const Time head_threshold = g.head(a) + g.proc(a);
    const Time tail_threshold = g.tail(b) + g.proc(b);

    auto head_in = [&](int op) -> Time {  // lower bound of the new "ready" time from the job predecessor
        const int jp = g.job_pred(op);
        if (jp < 0) return 0;
        const OpId id = inst.op(jp);
        const Time lb = g.head(jp) < head_threshold ? g.head(jp)
                                                    : (id.pos > 0 ? inst.cumulative_work(id.job, id.pos - 1) : 0);
        return lb + g.proc(jp);
    };
    auto tail_in = [&](int op) -> Time {
        const int js = g.job_succ(op);
        if (js < 0) return 0;
        const OpId id = inst.op(js);
        const Time lb = g.tail(js) < tail_threshold
                            ? g.tail(js)
                            : (id.pos + 1 < inst.num_machines() ? inst.remaining_work(id.job, id.pos + 1) : 0);
        return lb + g.proc(js);
    };

    const int k = static_cast<int>(s.order.size());
    std::vector<Time> h(k), q(k);
    const int mp = g.machine_pred(a);
    Time prev = mp >= 0 ? g.head(mp) + g.proc(mp) : 0;
    for (int i = 0; i < k; ++i) {
        const int v = s.order[i];
        h[i] = std::max(prev, head_in(v));
        prev = h[i] + g.proc(v);
    }
    const int ms = g.machine_succ(b);
    Time next = ms >= 0 ? g.tail(ms) + g.proc(ms) : 0;
    for (int i = k - 1; i >= 0; --i) {
        const int v = s.order[i];
        q[i] = std::max(next, tail_in(v));
        next = q[i] + g.proc(v);
    }
    Time est = 0;
    for (int i = 0; i < k; ++i) est = std::max(est, h[i] + g.proc(s.order[i]) + q[i]);
    return {mv, est};
}

ApplyStatus apply_move(SearchState& state, const Move& mv) {
    const Segment s = move_segment(state.graph(), mv);
    auto order = state.graph().machine_orders();
    std::copy(s.order.begin(), s.order.end(), order[mv.machine].begin() + s.lo);
    return state.reset_orders(std::move(order)) ? ApplyStatus::Applied : ApplyStatus::WouldCreateCycle;
}

std::optional<Proposal> ls_step(SearchState& state, Operator op) {
    const auto moves = enumerate_moves(state, op);
    if (moves.empty()) return std::nullopt;
    std::vector<MoveEval> evals;
    evals.reserve(moves.size());
    for (const Move& m : moves) evals.push_back(estimate_move(state.graph(), m));
    std::stable_sort(evals.begin(), evals.end(),
                     [](const MoveEval& x, const MoveEval& y) { return x.estimate < y.estimate; });
    const Time before = state.cost();
    for (const MoveEval& e : evals) {
        if (apply_move(state, e.move) == ApplyStatus::Applied) return Proposal{e.move, e.estimate, before, state.cost()};
    }
    return std::nullopt;
}

int perturb(SearchState& state, const Perturbation& pert, std::mt19937_64& rng) {
    int applied = 0;
    for (int i = 0; i < pert.strength; ++i) {
        const auto moves = enumerate_moves(state, Operator::CT);
        if (moves.empty()) break;
        const auto pick = std::uniform_int_distribution<std::size_t>(0, moves.size() - 1)(rng);
        if (apply_move(state, moves[pick]) != ApplyStatus::Applied)
            throw Error(ErrorCode::CyclicSolution, "critical adjacent swap produced a cycle");
        ++applied;
    }
    return applied;
}

}  // namespace lsctl
