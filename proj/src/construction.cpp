#include "lsctl/construction.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <string>

namespace lsctl {

std::string_view to_string(DispatchRule rule) {
    switch (rule) {
        case DispatchRule::RND: return "RND";
        case DispatchRule::FIFO: return "FIFO";
        case DispatchRule::SPT: return "SPT";
        case DispatchRule::MWKR: return "MWKR";
        case DispatchRule::MOPNR: return "MOPNR";
        case DispatchRule::FDD: return "FDD";
        case DispatchRule::FDD_over_MWKR: return "FDD/MWKR";
    }
    return "?";
}

std::optional<DispatchRule> parse_dispatch_rule(std::string_view name) {
    std::string s(name);
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (s == "FDD_OVER_MWKR" || s == "FDD_MWKR" || s == "FDDMWKR") return DispatchRule::FDD_over_MWKR;
    for (DispatchRule r : kAllDispatchRules)
        if (s == to_string(r)) return r;
    return std::nullopt;
}

DispatchState::DispatchState(const Instance& instance)
    : job_ready(instance.num_jobs(), 0), machine_ready(instance.num_machines(), 0),
      next_pos(instance.num_jobs(), 0) {
    partial.machine_seq.resize(instance.num_machines());
}

Time DispatchState::earliest_start(const Instance& instance, int job) const {
    return std::max(job_ready[job], machine_ready[instance.machine(job, next_pos[job])]);
}

double priority(DispatchRule rule, OpId c, const DispatchState& state, const Instance& inst,
                std::mt19937_64* rng) {
    switch (rule) {
        case DispatchRule::RND: return std::uniform_real_distribution<double>(0.0, 1.0)(*rng);
        // Arrival time of the job in the machine queue.
        case DispatchRule::FIFO: return static_cast<double>(state.job_ready[c.job]);
        case DispatchRule::SPT: return static_cast<double>(inst.proc(c));
        case DispatchRule::MWKR: return -static_cast<double>(inst.remaining_work(c.job, c.pos));
        case DispatchRule::MOPNR: return -static_cast<double>(inst.num_machines() - c.pos);
        case DispatchRule::FDD: return static_cast<double>(inst.cumulative_work(c.job, c.pos));
        case DispatchRule::FDD_over_MWKR: {
            const Time rem = inst.remaining_work(c.job, c.pos);
            const Time fdd = inst.cumulative_work(c.job, c.pos);
            if (rem == 0) return fdd == 0 ? 0.0 : std::numeric_limits<double>::infinity();
            return static_cast<double>(fdd) / static_cast<double>(rem);
        }
    }
    return 0.0;
}

namespace {

Solution run_dispatch(const Instance& inst, DispatchRule rule, double noise, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    DispatchState st(inst);
    const int J = inst.num_jobs();
    const int M = inst.num_machines();
    struct Cand {
        double score;
        int job;
    };
    std::vector<Cand> pool;
    pool.reserve(J);
    for (int step = 0; step < inst.num_ops(); ++step) {
        Time earliest = std::numeric_limits<Time>::max();
        for (int j = 0; j < J; ++j)
            if (st.next_pos[j] < M) earliest = std::min(earliest, st.earliest_start(inst, j));
        pool.clear();
        for (int j = 0; j < J; ++j) {
            if (st.next_pos[j] >= M || st.earliest_start(inst, j) != earliest) continue;
            pool.push_back({priority(rule, {j, st.next_pos[j]}, st, inst, &rng), j});
        }
        std::sort(pool.begin(), pool.end(), [](const Cand& a, const Cand& b) {
            return a.score != b.score ? a.score < b.score : a.job < b.job;
        });
        std::size_t pick = 0;
        if (noise > 0.0 && pool.size() > 1 && unit(rng) < noise) {
            const std::size_t top = std::min<std::size_t>(3, pool.size());
            pick = std::uniform_int_distribution<std::size_t>(0, top - 1)(rng);
        }
        const int j = pool[pick].job;
        const OpId op{j, st.next_pos[j]};
        const int m = inst.machine(op);
        const Time end = earliest + inst.proc(op);
        st.job_ready[j] = end;
        st.machine_ready[m] = end;
        st.partial.machine_seq[m].push_back(op);
        ++st.next_pos[j];
    }
    return std::move(st.partial);
}

}  // namespace

Solution dispatch(const Instance& instance, DispatchRule rule, std::optional<std::uint64_t> seed) {
    return run_dispatch(instance, rule, 0.0, seed.value_or(0));
}

Solution stochastic_dispatch(const Instance& instance, DispatchRule rule, double noise, std::uint64_t seed) {
    return run_dispatch(instance, rule, std::clamp(noise, 0.0, 1.0), seed);
}

}  // namespace lsctl
