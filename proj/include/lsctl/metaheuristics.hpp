#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "lsctl/construction.hpp"
#include "lsctl/local_search.hpp"

namespace lsctl {

/// Everything a controller sees after an LS step has produced a proposal.
struct ControllerObservation {
    int step = 0;        ///< 0-based iteration index
    int iterations = 0;  ///< total budget
    Time initial_cost = 0;
    Time current_cost = 0;  ///< committed cost before the proposal
    Time best_cost = 0;
    std::optional<Time> proposal_cost;  ///< empty: the last LS step hit a local optimum
    Operator last_operator = Operator::CET;
    int stall = 0;  ///< iterations since the best cost last improved
    int num_perturbations = 0;

    std::optional<Time> delta() const {
        if (!proposal_cost) return std::nullopt;
        return *proposal_cost - current_cost;
    }
};

struct RestartRequest {
    DispatchRule rule = DispatchRule::FDD_over_MWKR;
    double noise = 0.3;
};

struct ControllerDecision {
    bool accept_last = false;
    Operator next_operator = Operator::CET;
    std::optional<Perturbation> perturb;  ///< mutually exclusive with restart
    std::optional<RestartRequest> restart;
    bool perturb_from_best = false;  ///< restore the incumbent before perturbing
};

/// The single interface through which a search is steered: acceptance of the
/// last LS step, the next neighborhood, and perturbation/restart.
class SearchController {
public:
    virtual ~SearchController() = default;
    virtual void begin(Time initial_cost, int iterations) = 0;
    virtual Operator initial_operator() const { return Operator::CET; }
    virtual ControllerDecision decide(const ControllerObservation& obs) = 0;
};

enum class ControllerKind { Sa, SaRestart, Ils, IlsSa, Vns };

std::string_view to_string(ControllerKind kind);
std::optional<ControllerKind> parse_controller_kind(std::string_view name);

struct ControllerConfig {
    ControllerKind kind = ControllerKind::Vns;
    Operator fixed_operator = Operator::CET;
    // SA: T0 = t0 * f(s_init); alpha_T <= 0 means "decay to final_temp_fraction over the budget".
    double t0 = 0.05;
    double alpha_T = 0.0;
    double final_temp_fraction = 0.01;
    // SA_RESTART
    int restart_stall = 25;
    double restart_noise = 0.3;
    // ILS, ILS_SA
    int n_stall = 5;
    int perturb_strength = 3;
    // VNS
    std::vector<Operator> vns_order = {Operator::CET, Operator::ECET, Operator::CT, Operator::CEI};
    bool vns_perturb_on_cycle = true;

    /// Throws Error(InvalidConfig) on violated invariants.
    void check() const;
};

/// Key-value text ("key = value", '#' comments). Unknown keys are an error.
ControllerConfig parse_controller_config(const std::map<std::string, std::string>& kv);
std::map<std::string, std::string> to_key_values(const ControllerConfig& cfg);

/// SA / SA-restart / ILS / ILS+SA / VNS as hand-written policies.
class ClassicController final : public SearchController {
public:
    ClassicController(ControllerConfig cfg, std::uint64_t seed);

    void begin(Time initial_cost, int iterations) override;
    Operator initial_operator() const override;
    ControllerDecision decide(const ControllerObservation& obs) override;

    const ControllerConfig& config() const noexcept { return cfg_; }
    double temperature() const noexcept { return temperature_; }
    double cooling_factor() const noexcept { return alpha_; }
    std::size_t cursor() const noexcept { return cursor_; }

    /// exp(-delta / T) capped at 1.
    static double acceptance_probability(double delta, double temperature);

private:
    bool sa_accept(Time delta);

    ControllerConfig cfg_;
    std::mt19937_64 rng_;
    double temperature_ = 0.0;
    double alpha_ = 1.0;
    int since_event_ = 0;  // iterations without a new best since the last perturb/restart
    Time last_best_ = 0;
    std::size_t cursor_ = 0;
    bool improved_in_cycle_ = false;
};

struct TraceRecord {
    int step = 0;
    Operator op = Operator::CET;
    bool had_proposal = false;
    bool accepted = false;
    bool perturbed = false;
    bool restarted = false;
    Time cost = 0;  ///< committed cost at the end of the iteration
    Time best = 0;

    bool operator==(const TraceRecord&) const = default;
};

struct RunResult {
    Solution best_solution;
    Time best_cost = 0;
    Time initial_cost = 0;
    std::vector<TraceRecord> trace;
};

/// One iteration = one LS step + one controller decision. Throws
/// Error(InvalidConfig) when iterations < 1.
RunResult run(SearchController& controller, const Instance& instance, DispatchRule init_rule, int iterations,
              std::uint64_t seed);

/// Same loop, starting from a given solution.
RunResult run_from(SearchController& controller, const Instance& instance, const Solution& start, int iterations,
                   std::uint64_t seed);

}  // namespace lsctl
