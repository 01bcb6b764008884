#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "lsctl/instance.hpp"

namespace lsctl {

enum class DispatchRule { RND, FIFO, SPT, MWKR, MOPNR, FDD, FDD_over_MWKR };

inline constexpr DispatchRule kAllDispatchRules[] = {
    DispatchRule::RND,   DispatchRule::FIFO, DispatchRule::SPT,          DispatchRule::MWKR,
    DispatchRule::MOPNR, DispatchRule::FDD,  DispatchRule::FDD_over_MWKR};

std::string_view to_string(DispatchRule rule);
/// Accepts the names printed by to_string, case-insensitive ("fdd/mwkr" too).
std::optional<DispatchRule> parse_dispatch_rule(std::string_view name);

struct DispatchState {
    std::vector<Time> job_ready;
    std::vector<Time> machine_ready;
    std::vector<int> next_pos;
    Solution partial;

    explicit DispatchState(const Instance& instance);

    Time earliest_start(const Instance& instance, int job) const;
};

/// Priority score of the next unscheduled op of `candidate.job`; lower is
/// dispatched first. RND draws from `rng`, which must then be non-null.
double priority(DispatchRule rule, OpId candidate, const DispatchState& state, const Instance& instance,
                std::mt19937_64* rng = nullptr);

/// Non-delay dispatching: among the ops that can start at the earliest possible
/// time, the best-priority one is scheduled (ties to the lower job index).
Solution dispatch(const Instance& instance, DispatchRule rule, std::optional<std::uint64_t> seed = {});

/// As dispatch, but with probability `noise` each step picks uniformly among the
/// three best candidates.
Solution stochastic_dispatch(const Instance& instance, DispatchRule rule, double noise, std::uint64_t seed);

}  // namespace lsctl
