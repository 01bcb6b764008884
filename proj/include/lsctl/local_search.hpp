#pragma once

#include <array>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "lsctl/graph.hpp"
#include "lsctl/instance.hpp"

namespace lsctl {

/// Critical-block neighborhoods.
enum class Operator { CT, CET, ECET, CEI };

inline constexpr std::array<Operator, 4> kAllOperators = {Operator::CT, Operator::CET, Operator::ECET,
                                                          Operator::CEI};
inline constexpr int kNumOperators = 4;

std::string_view to_string(Operator op);
std::optional<Operator> parse_operator(std::string_view name);
inline int operator_index(Operator op) { return static_cast<int>(op); }

/// Positions refer to graph.machine_order(machine) at evaluation time.
///  - CT, CET: swap `first` and `first + 1` (`second == first + 1`).
///  - ECET:    swap (first, first+1) and (second-1, second); `first`/`second` are
///             the block boundaries.
///  - CEI:     move the op at `first` to position `second`.
struct Move {
    Operator kind = Operator::CT;
    int machine = 0;
    int first = 0;
    int second = 0;

    bool operator==(const Move&) const = default;
};

struct MoveEval {
    Move move;
    /// Lower bound on the makespan after the move.
    Time estimate = 0;
};

enum class PerturbationKind { RandomCtSequence };

struct Perturbation {
    PerturbationKind kind = PerturbationKind::RandomCtSequence;
    int strength = 3;
};

/// Solution together with its graph. Copying it is the snapshot used for rollback.
class SearchState {
public:
    SearchState(const Instance& instance, const Solution& solution);

    const Instance& instance() const noexcept { return graph_.instance(); }
    const SearchGraph& graph() const noexcept { return graph_; }
    Solution solution() const { return graph_.to_solution(); }
    Time cost() const noexcept { return graph_.makespan(); }
    const std::vector<CriticalBlock>& blocks() const noexcept { return blocks_; }

    /// Replaces the machine orders; false (and unchanged) if they are cyclic.
    bool reset_orders(std::vector<std::vector<int>> order);

private:
    SearchGraph graph_;
    std::vector<CriticalBlock> blocks_;
};

std::vector<Move> enumerate_moves(const SearchGraph& graph, const std::vector<CriticalBlock>& blocks, Operator op);
std::vector<Move> enumerate_moves(const SearchState& state, Operator op);

/// New order of the affected segment [lo, hi] of the move's machine.
struct Segment {
    int lo = 0;
    int hi = 0;
    std::vector<int> order;
};
/// Throws Error(InvalidMove) when positions are out of range or inconsistent.
Segment move_segment(const SearchGraph& graph, const Move& move);

/// O(segment) lower bound on the post-move makespan; see the .cpp for the bound
/// argument. Throws Error(InvalidMove) for a malformed move.
MoveEval estimate_move(const SearchGraph& graph, const Move& move);

enum class ApplyStatus { Applied, WouldCreateCycle };

/// Mutates the machine order and recomputes the graph. Cyclic results are not applied.
ApplyStatus apply_move(SearchState& state, const Move& move);

struct Proposal {
    Move move;
    Time estimate = 0;
    Time previous_cost = 0;
    Time new_cost = 0;
};

/// Applies the minimum-estimate move of the neighborhood (ties: enumeration
/// order; cyclic CEI candidates are skipped). nullopt means a local optimum:
/// the state is untouched.
std::optional<Proposal> ls_step(SearchState& state, Operator op);

/// `strength` uniformly random CT moves, re-deriving blocks after each; stops
/// early when no CT move exists. Returns the number of moves applied.
int perturb(SearchState& state, const Perturbation& pert, std::mt19937_64& rng);

}  // namespace lsctl
