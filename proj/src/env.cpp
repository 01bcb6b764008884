#include "lsctl/env.hpp"

#include <algorithm>
#include <cctype>
#include <string>

#include <json.hpp>

#include "lsctl/construction.hpp"
#include "lsctl/error.hpp"

namespace lsctl {

std::string_view to_string(ActionSpace space) {
    switch (space) {
        case ActionSpace::A: return "A";
        case ActionSpace::AN: return "AN";
        case ActionSpace::ANP: return "ANP";
    }
    return "?";
}

std::optional<ActionSpace> parse_action_space(std::string_view name) {
    std::string s(name);
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (s == "A" || s == "NLS_A") return ActionSpace::A;
    if (s == "AN" || s == "NLS_AN") return ActionSpace::AN;
    if (s == "ANP" || s == "NLS_ANP") return ActionSpace::ANP;
    return std::nullopt;
}

namespace {
int num_choices(ActionSpace space) {
    switch (space) {
        case ActionSpace::A: return 1;
        case ActionSpace::AN: return kNumOperators;
        case ActionSpace::ANP: return kNumOperators + 1;
    }
    return 1;
}
}  // namespace

int action_count(ActionSpace space) { return 2 * num_choices(space); }

DecodedAction decode_action(ActionSpace space, int index) {
    if (index < 0 || index >= action_count(space))
        throw Error(ErrorCode::InvalidAction, "action " + std::to_string(index) + " outside [0, " +
                                                  std::to_string(action_count(space)) + ")");
    DecodedAction a;
    a.accept = (index % 2) == 1;
    const int choice = index / 2;
    if (space == ActionSpace::A) a.op = Operator::CET;
    else if (choice < kNumOperators) a.op = kAllOperators[choice];
    else a.perturb = true;
    return a;
}

int encode_action(ActionSpace space, const DecodedAction& a) {
    int choice = 0;
    if (space != ActionSpace::A) choice = a.perturb ? kNumOperators : operator_index(a.op);
    if (a.perturb && space != ActionSpace::ANP) throw Error(ErrorCode::InvalidAction, "perturbation needs ANP");
    return 2 * choice + (a.accept ? 1 : 0);
}

std::vector<Edge> static_edges(const Instance& inst) {
    std::vector<Edge> e;
    const int M = inst.num_machines();
    e.reserve(2 * inst.num_jobs() * (M - 1));
    for (int j = 0; j < inst.num_jobs(); ++j)
        for (int k = 0; k + 1 < M; ++k) {
            const int a = inst.index(j, k);
            e.push_back({a, a + 1, 1.0});
            e.push_back({a + 1, a, 1.0});
        }
    return e;
}

std::vector<Edge> dynamic_edges(const SearchGraph& g) {
    std::vector<Edge> e;
    for (const auto& seq : g.machine_orders())
        for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
            e.push_back({seq[i], seq[i + 1], 1.0});
            e.push_back({seq[i + 1], seq[i], 1.0});
        }
    return e;
}

const Observation& JsspEnv::reset(const Instance& instance, ActionSpace space, std::uint64_t seed, int max_steps) {
    return reset_from(instance, dispatch(instance, DispatchRule::FDD_over_MWKR), space, seed, max_steps);
}

const Observation& JsspEnv::reset_from(const Instance& instance, const Solution& start, ActionSpace space,
                                       std::uint64_t seed, int max_steps) {
    if (max_steps < 1) throw Error(ErrorCode::InvalidConfig, "episode length must be >= 1");
    instance_ = &instance;
    space_ = space;
    max_steps_ = max_steps;
    rng_.seed(seed);
    committed_.emplace(instance, start);
    pending_.reset();
    initial_cost_ = best_cost_ = committed_->cost();
    best_solution_ = start;
    last_accept_ = false;
    t_ = 0;
    stall_ = 0;
    perturbations_ = 0;
    trace_.clear();
    static_edges_ = std::make_shared<const std::vector<Edge>>(static_edges(instance));
    std::vector<int> groups(instance.num_ops());
    for (int i = 0; i < instance.num_ops(); ++i) groups[i] = instance.machine(i);
    groups_ = std::make_shared<const std::vector<int>>(std::move(groups));
    propose(Operator::CT);
    rebuild_observation();
    return obs_;
}

std::optional<Time> JsspEnv::pending_cost() const {
    if (!pending_) return std::nullopt;
    return pending_->cost();
}

void JsspEnv::propose(Operator op) {
    last_op_ = op;
    last_choice_ = operator_index(op);
    SearchState next = *committed_;
    if (ls_step(next, op)) pending_.emplace(std::move(next));
    else pending_.reset();
}

StepResult JsspEnv::step(int action) {
    if (!committed_) throw Error(ErrorCode::InvalidAction, "step before reset");
    if (done()) throw Error(ErrorCode::InvalidAction, "episode finished");
    const DecodedAction a = decode_action(space_, action);

    if (pending_ && a.accept) committed_ = std::move(*pending_);
    pending_.reset();
    last_accept_ = a.accept;

    if (a.perturb) {
        last_choice_ = kNumOperators;
        perturb(*committed_, perturbation_, rng_);
        ++perturbations_;
    }

    const Time cost = committed_->cost();
    StepResult r;
    r.reward = static_cast<double>(std::max<Time>(best_cost_ - cost, 0));
    if (cost < best_cost_) {
        best_cost_ = cost;
        best_solution_ = committed_->solution();
        stall_ = 0;
    } else {
        ++stall_;
    }
    ++t_;
    r.done = done();
    trace_.push_back({t_ - 1, action, a.accept, cost, best_cost_, r.reward});
    if (!r.done && !a.perturb) propose(a.op);
    rebuild_observation();
    return r;
}

Observation JsspEnv::observe() const { return obs_; }

void JsspEnv::rebuild_observation() {
    const SearchState& shown = pending_ ? *pending_ : *committed_;
    const SearchGraph& g = shown.graph();
    const Instance& inst = *instance_;
    const double f0 = static_cast<double>(initial_cost_);
    const double T = static_cast<double>(max_steps_);
    obs_.scalars = {static_cast<double>(shown.cost()) / f0,
                    static_cast<double>(best_cost_) / f0,
                    last_accept_ ? 1.0 : 0.0,
                    static_cast<double>(last_choice_) / kNumOperators,
                    static_cast<double>(t_) / T,
                    static_cast<double>(stall_) / T,
                    static_cast<double>(perturbations_) / T};
    const int n = inst.num_ops();
    const double cmax = static_cast<double>(std::max<Time>(g.makespan(), 1));
    const double pmax = static_cast<double>(std::max<Time>(inst.max_proc(), 1));
    const double J = static_cast<double>(inst.num_jobs());
    obs_.node_features.resize(n, kNumNodeFeatures);
    for (int v = 0; v < n; ++v) {
        obs_.node_features(v, 0) = static_cast<double>(inst.proc(v)) / pmax;
        obs_.node_features(v, 1) = static_cast<double>(g.head(v)) / cmax;
        obs_.node_features(v, 2) = static_cast<double>(g.tail(v)) / cmax;
        obs_.node_features(v, 3) = g.is_critical(v) ? 1.0 : 0.0;
        obs_.node_features(v, 4) = static_cast<double>(g.machine_position(v)) / J;
    }
    obs_.static_edges = static_edges_;
    obs_.dynamic_edges = dynamic_edges(g);
    obs_.groups = groups_;
    obs_.num_groups = inst.num_machines();
}

void JsspEnv::write_trace(std::ostream& out) const {
    for (const auto& r : trace_) {
        nlohmann::json j = {{"step", r.step}, {"action", r.action}, {"accepted", r.accepted},
                            {"cost", r.cost}, {"best", r.best},     {"reward", r.reward}};
        out << j.dump() << '\n';
    }
}

}  // namespace lsctl
