#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "lsctl/local_search.hpp"

namespace lsctl {

/// A: acceptance only (operator fixed to CET); AN: acceptance x operator;
/// ANP: acceptance x (operator or perturbation).
enum class ActionSpace { A, AN, ANP };

std::string_view to_string(ActionSpace space);
std::optional<ActionSpace> parse_action_space(std::string_view name);

int action_count(ActionSpace space);

struct DecodedAction {
    bool accept = false;
    Operator op = Operator::CET;  ///< meaningful when !perturb
    bool perturb = false;
};

/// index = 2 * choice + accept_bit; choices are [CET] for A, Phi for AN and
/// Phi followed by the random-CT perturbation for ANP. Throws
/// Error(InvalidAction) when out of range.
DecodedAction decode_action(ActionSpace space, int index);
int encode_action(ActionSpace space, const DecodedAction& action);

struct Edge {
    int src = 0;
    int dst = 0;
    double weight = 1.0;
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr int kNumScalarFeatures = 7;
inline constexpr int kNumNodeFeatures = 5;

/// Network input. Node i is operation index i of the instance.
struct Observation {
    std::array<double, kNumScalarFeatures> scalars{};
    RowMatrix node_features;  ///< N x 5
    std::shared_ptr<const std::vector<Edge>> static_edges;  ///< job precedence, both directions
    std::vector<Edge> dynamic_edges;  ///< machine-sequence adjacency, both directions
    std::shared_ptr<const std::vector<int>> groups;  ///< op -> machine
    int num_groups = 0;

    int num_nodes() const { return static_cast<int>(node_features.rows()); }
};

struct StepResult {
    double reward = 0.0;
    bool done = false;
};

struct EnvTraceRecord {
    int step = 0;
    int action = 0;
    bool accepted = false;
    Time cost = 0;
    Time best = 0;
    double reward = 0.0;

    bool operator==(const EnvTraceRecord&) const = default;
};

/// Local search wrapped as an episodic MDP.
///
/// After reset and after every step there is a *pending* proposal: an LS step
/// that has been applied tentatively. The next action's accept bit commits or
/// reverts it, then the chosen operator (or perturbation) produces the next
/// proposal. The observation shows the pending solution; its cost feature is the
/// proposal's cost. The instance must outlive the environment.
class JsspEnv {
public:
    JsspEnv() = default;

    /// FDD/MWKR construction followed by a CT step as the first proposal.
    const Observation& reset(const Instance& instance, ActionSpace space, std::uint64_t seed, int max_steps = 100);
    /// Reset from a given start solution.
    const Observation& reset_from(const Instance& instance, const Solution& start, ActionSpace space,
                                  std::uint64_t seed, int max_steps = 100);

    /// Throws Error(InvalidAction) for an out-of-range index or a finished episode.
    StepResult step(int action);

    const Observation& observation() const noexcept { return obs_; }
    Observation observe() const;

    ActionSpace action_space() const noexcept { return space_; }
    int num_actions() const noexcept { return action_count(space_); }
    int t() const noexcept { return t_; }
    int max_steps() const noexcept { return max_steps_; }
    bool done() const noexcept { return t_ >= max_steps_; }
    Time initial_cost() const noexcept { return initial_cost_; }
    Time best_cost() const noexcept { return best_cost_; }
    Time committed_cost() const { return committed_->cost(); }
    std::optional<Time> pending_cost() const;
    const SearchState& committed_state() const { return *committed_; }
    const Solution& best_solution() const noexcept { return best_solution_; }
    int steps_without_improvement() const noexcept { return stall_; }
    int num_perturbations() const noexcept { return perturbations_; }
    bool last_accept() const noexcept { return last_accept_; }
    Operator last_operator() const noexcept { return last_op_; }
    const std::vector<EnvTraceRecord>& trace() const noexcept { return trace_; }

    /// One JSON object per line: step, action, accepted, cost, best, reward.
    void write_trace(std::ostream& out) const;

private:
    void propose(Operator op);
    void rebuild_observation();

    const Instance* instance_ = nullptr;
    ActionSpace space_ = ActionSpace::A;
    int max_steps_ = 100;
    std::mt19937_64 rng_;
    std::optional<SearchState> committed_;
    std::optional<SearchState> pending_;
    Time initial_cost_ = 0;
    Time best_cost_ = 0;
    Solution best_solution_;
    bool last_accept_ = false;
    Operator last_op_ = Operator::CT;
    int last_choice_ = 0;  ///< operator index, or |Phi| after a perturbation
    int t_ = 0;
    int stall_ = 0;
    int perturbations_ = 0;
    Perturbation perturbation_{};
    std::shared_ptr<const std::vector<Edge>> static_edges_;
    std::shared_ptr<const std::vector<int>> groups_;
    std::vector<EnvTraceRecord> trace_;
    Observation obs_;
};

/// Job-precedence arcs (both directions, weight 1) of an instance.
std::vector<Edge> static_edges(const Instance& instance);
/// Machine-sequence adjacency arcs (both directions, weight 1) of a graph.
std::vector<Edge> dynamic_edges(const SearchGraph& graph);

}  // namespace lsctl
