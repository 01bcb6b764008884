#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "lsctl/env.hpp"
#include "lsctl/qnetwork.hpp"

namespace lsctl {

struct Transition {
    std::shared_ptr<const Observation> obs;
    int action = 0;
    double G = 0.0;  ///< sum_{i<horizon} gamma^i r_{t+i}
    std::shared_ptr<const Observation> bootstrap;  ///< state at t + horizon
    bool done = false;
    int horizon = 0;
    int step = 0;  ///< t within the episode
    double priority = 1.0;
};

/// Turns a stream of (obs, action, reward) into n-step transitions. Episodes
/// that end early flush shorter-horizon transitions marked done.
class NStepAssembler {
public:
    NStepAssembler(int n, double gamma);

    /// next_obs is the observation after the step.
    std::vector<Transition> push(std::shared_ptr<const Observation> obs, int action, double reward,
                                 std::shared_ptr<const Observation> next_obs, bool done);
    void clear();

    int n() const noexcept { return n_; }
    double gamma() const noexcept { return gamma_; }

private:
    struct Pending {
        std::shared_ptr<const Observation> obs;
        int action;
        double reward;
        int step;
    };
    Transition make(std::size_t count, const std::shared_ptr<const Observation>& boot, bool done) const;

    int n_;
    double gamma_;
    int t_ = 0;
    std::deque<Pending> window_;
};

/// Proportional prioritized replay over a sum tree.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity, double alpha = 0.6);

    /// New entries get the current max priority.
    void add(Transition t);
    std::size_t size() const noexcept { return size_; }
    std::size_t capacity() const noexcept { return capacity_; }
    double alpha() const noexcept { return alpha_; }

    struct Sample {
        std::vector<std::size_t> indices;
        std::vector<double> weights;  ///< (N P(i))^-beta / max over the batch
    };
    /// Stratified draw of batch indices; requires size() > 0.
    Sample sample(std::size_t batch, double beta, std::mt19937_64& rng) const;
    /// Raw (non-exponentiated) priority; stored as priority^alpha.
    void update_priority(std::size_t index, double priority);
    double probability(std::size_t index) const;
    const Transition& at(std::size_t index) const { return data_.at(index); }

private:
    void set_leaf(std::size_t index, double value);
    std::size_t find(double mass) const;

    std::size_t capacity_;
    double alpha_;
    std::size_t size_ = 0;
    std::size_t next_ = 0;
    std::size_t leaves_ = 1;
    double max_priority_ = 1.0;
    std::vector<double> tree_;
    std::vector<Transition> data_;
};

class Adam {
public:
    explicit Adam(double lr = 5e-4, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
    void step(std::vector<ad::Parameter>& params);
    long long steps() const noexcept { return t_; }

private:
    double lr_, b1_, b2_, eps_;
    long long t_ = 0;
    std::vector<RowMatrix> m_, v_;
};

struct TrainConfig {
    ActionSpace space = ActionSpace::A;
    GNNConfig net{};
    double lr = 5e-4;
    double gamma = 0.99;
    int n_step = 3;
    int target_update = 500;
    double eps_start = 0.95;
    double eps_end = 0.05;
    int epochs = 80;
    int transitions_per_epoch = 19200;
    int batch_size = 32;
    int transitions_per_update = 4;
    int buffer_capacity = 32000;
    double per_alpha = 0.6;
    double per_beta = 0.4;
    int k_taus = 8;
    int k_prime_taus = 8;
    double kappa = 1.0;
    int num_envs = 8;
    int episode_length = 100;
    int train_jobs = 15;
    int train_machines = 15;
    int validation_size = 16;
    std::uint64_t validation_seed = 900000;
    double max_wall_seconds = 0.0;  ///< 0 = unlimited

    void check() const;
};

TrainConfig parse_train_config(const std::map<std::string, std::string>& kv);
std::map<std::string, std::string> to_key_values(const TrainConfig& config);

ActionSpace action_space_for(int num_actions);

/// Linear schedule from eps_start to eps_end over total steps.
double epsilon_at(const TrainConfig& config, long long step, long long total_steps);

using InstanceSampler = std::function<Instance(std::mt19937_64&)>;

/// Independent environments stepped round-robin, each drawing a fresh instance
/// per episode. Deterministic given the seed.
class Collector {
public:
    Collector(InstanceSampler sampler, ActionSpace space, int num_envs, int episode_length, int n_step,
              double gamma, std::uint64_t seed);

    /// With probability epsilon a uniform action, else greedy mean-Q.
    /// net may be null only if epsilon == 1.
    std::vector<Transition> collect(const QNetwork* net, double epsilon, int steps);
    std::vector<int> action_counts() const { return action_counts_; }
    double mean_episode_best() const;

private:
    struct Slot {
        std::unique_ptr<Instance> instance;
        JsspEnv env;
        std::shared_ptr<const Observation> obs;
        NStepAssembler assembler;
    };
    void start_episode(Slot& slot);

    InstanceSampler sampler_;
    ActionSpace space_;
    int episode_length_;
    std::mt19937_64 rng_;
    std::vector<Slot> slots_;
    std::size_t cursor_ = 0;
    std::vector<int> action_counts_;
    double finished_best_sum_ = 0.0;
    long long finished_ = 0;
};

struct LossResult {
    double loss = 0.0;
    std::vector<double> priorities;  ///< mean |TDE| per transition
};

/// Importance-weighted IQN loss; accumulates gradients into net when backprop is set.
LossResult td_loss(const std::vector<const Transition*>& batch, const std::vector<double>& weights, QNetwork& net,
                   const QNetwork& target, int k_taus, int k_prime_taus, double gamma, double kappa,
                   std::mt19937_64& rng, bool backprop = true);

/// Mean best makespan of greedy NLS runs (or uniformly random actions when net is null).
struct PolicyRun {
    Time best_cost = 0;
    Solution best_solution;
    Time initial_cost = 0;
};
PolicyRun run_policy(const QNetwork* net, const Instance& instance, ActionSpace space, int steps,
                     std::uint64_t seed);
double evaluate_policy(const QNetwork* net, const std::vector<Instance>& instances, ActionSpace space, int steps,
                       std::uint64_t seed);

struct EpochLog {
    int epoch = 0;
    double mean_loss = 0.0;
    double epsilon = 0.0;
    double validation = 0.0;
    double wall_seconds = 0.0;
};

struct TrainResult {
    QNetwork best;
    double best_validation = 0.0;
    int best_epoch = 0;
    std::vector<EpochLog> log;
    long long optimizer_steps = 0;
    std::vector<long long> target_syncs;  ///< optimizer steps after which target = online
};

std::vector<Instance> make_instances(int jobs, int machines, int count, std::uint64_t seed);

/// Throws Error(Divergence) on a non-finite loss. log_csv receives the header
/// and one row per epoch as they complete.
TrainResult train(const TrainConfig& config, std::uint64_t seed, std::ostream* log_csv = nullptr);

void write_log_header(std::ostream& out);
void write_log_row(std::ostream& out, const EpochLog& row);

}  // namespace lsctl
