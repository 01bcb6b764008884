#include "lsctl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "lsctl/config.hpp"
#include "lsctl/error.hpp"
#include "lsctl/taillard.hpp"

namespace lsctl {

// ---- n-step ----------------------------------------------------------------

NStepAssembler::NStepAssembler(int n, double gamma) : n_(n), gamma_(gamma) {
    if (n < 1) throw Error(ErrorCode::InvalidConfig, "n-step horizon must be >= 1");
}

void NStepAssembler::clear() {
    window_.clear();
    t_ = 0;
}

Transition NStepAssembler::make(std::size_t count, const std::shared_ptr<const Observation>& boot, bool done) const {
    Transition tr;
    tr.obs = window_.front().obs;
    tr.action = window_.front().action;
    tr.step = window_.front().step;
    double g = 0.0;
    double disc = 1.0;
    for (std::size_t i = 0; i < count; ++i) {
        g += disc * window_[i].reward;
        disc *= gamma_;
    }
    tr.G = g;
    tr.horizon = static_cast<int>(count);
    tr.bootstrap = boot;
    tr.done = done;
    return tr;
}

std::vector<Transition> NStepAssembler::push(std::shared_ptr<const Observation> obs, int action, double reward,
                                             std::shared_ptr<const Observation> next_obs, bool done) {
    window_.push_back({std::move(obs), action, reward, t_++});
    std::vector<Transition> out;
    if (done) {
        while (!window_.empty()) {
            out.push_back(make(window_.size(), next_obs, true));
            window_.pop_front();
        }
        t_ = 0;
    } else if (static_cast<int>(window_.size()) == n_) {
        out.push_back(make(window_.size(), next_obs, false));
        window_.pop_front();
    }
    return out;
}

// ---- replay ----------------------------------------------------------------

ReplayBuffer::ReplayBuffer(std::size_t capacity, double alpha) : capacity_(capacity), alpha_(alpha) {
    if (capacity == 0) throw Error(ErrorCode::InvalidConfig, "replay capacity must be >= 1");
    while (leaves_ < capacity) leaves_ *= 2;
    tree_.assign(2 * leaves_, 0.0);
    data_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::set_leaf(std::size_t index, double value) {
    std::size_t i = index + leaves_;
    tree_[i] = value;
    for (i /= 2; i >= 1; i /= 2) tree_[i] = tree_[2 * i] + tree_[2 * i + 1];
}

void ReplayBuffer::add(Transition t) {
    t.priority = max_priority_;
    const std::size_t slot = next_;
    if (size_ < capacity_) {
        data_.push_back(std::move(t));
        ++size_;
    } else {
        data_[slot] = std::move(t);
    }
    set_leaf(slot, std::pow(max_priority_, alpha_));
    next_ = (next_ + 1) % capacity_;
}

std::size_t ReplayBuffer::find(double mass) const {
    std::size_t i = 1;
    while (i < leaves_) {
        if (mass < tree_[2 * i] || tree_[2 * i + 1] <= 0.0) {
            i = 2 * i;
        } else {
            mass -= tree_[2 * i];
            i = 2 * i + 1;
        }
    }
    return std::min(i - leaves_, size_ - 1);
}

double ReplayBuffer::probability(std::size_t index) const { return tree_[index + leaves_] / tree_[1]; }

ReplayBuffer::Sample ReplayBuffer::sample(std::size_t batch, double beta, std::mt19937_64& rng) const {
    if (size_ == 0) throw Error(ErrorCode::InvalidConfig, "sampling from an empty replay buffer");
    Sample s;
    const double total = tree_[1];
    const double segment = total / static_cast<double>(batch);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double wmax = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
        const double mass = std::min((static_cast<double>(b) + u(rng)) * segment, std::nextafter(total, 0.0));
        const std::size_t idx = find(mass);
        const double w = std::pow(static_cast<double>(size_) * probability(idx), -beta);
        wmax = std::max(wmax, w);
        s.indices.push_back(idx);
        s.weights.push_back(w);
    }
    for (double& w : s.weights) w /= wmax;
    return s;
}

void ReplayBuffer::update_priority(std::size_t index, double priority) {
    priority = std::max(priority, 1e-6);
    data_.at(index).priority = priority;
    max_priority_ = std::max(max_priority_, priority);
    set_leaf(index, std::pow(priority, alpha_));
}

// ---- Adam ------------------------------------------------------------------

Adam::Adam(double lr, double beta1, double beta2, double eps) : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

void Adam::step(std::vector<ad::Parameter>& params) {
    if (m_.empty()) {
        for (const auto& p : params) {
            m_.push_back(RowMatrix::Zero(p.value.rows(), p.value.cols()));
            v_.push_back(RowMatrix::Zero(p.value.rows(), p.value.cols()));
        }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i];
        m_[i] = b1_ * m_[i] + (1.0 - b1_) * p.grad;
        v_[i] = b2_ * v_[i] + (1.0 - b2_) * p.grad.cwiseProduct(p.grad);
        p.value.array() -= lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
    }
}

// ---- config ----------------------------------------------------------------

void TrainConfig::check() const {
    net.check();
    if (net.num_actions != action_count(space))
        throw Error(ErrorCode::InvalidConfig, "network output width does not match the action space");
    if (lr <= 0.0) throw Error(ErrorCode::InvalidConfig, "lr must be positive");
    if (gamma < 0.0 || gamma > 1.0) throw Error(ErrorCode::InvalidConfig, "gamma outside [0, 1]");
    if (n_step < 1 || target_update < 1 || batch_size < 1 || transitions_per_update < 1 || buffer_capacity < 1 ||
        k_taus < 1 || k_prime_taus < 1 || num_envs < 1 || episode_length < 1 || train_jobs < 1 ||
        train_machines < 1 || validation_size < 1 || epochs < 0 || transitions_per_epoch < 1)
        throw Error(ErrorCode::InvalidConfig, "integer training parameters out of range");
    if (eps_end < 0.05 - 1e-12 || eps_start > 0.95 + 1e-12 || eps_end > eps_start)
        throw Error(ErrorCode::InvalidConfig, "epsilon schedule must stay within [0.05, 0.95] and decay");
    if (per_alpha < 0.0 || per_beta < 0.0) throw Error(ErrorCode::InvalidConfig, "PER exponents must be >= 0");
    if (kappa <= 0.0) throw Error(ErrorCode::InvalidConfig, "kappa must be positive");
}

ActionSpace action_space_for(int num_actions) {
    for (auto s : {ActionSpace::A, ActionSpace::AN, ActionSpace::ANP})
        if (action_count(s) == num_actions) return s;
    throw Error(ErrorCode::InvalidConfig, "no action space has " + std::to_string(num_actions) + " actions");
}

TrainConfig parse_train_config(const std::map<std::string, std::string>& kv) {
    TrainConfig c;
    std::map<std::string, std::string> net_kv;
    const std::map<std::string, int*> ints = {
        {"n_step", &c.n_step},
        {"target_update", &c.target_update},
        {"epochs", &c.epochs},
        {"transitions_per_epoch", &c.transitions_per_epoch},
        {"batch_size", &c.batch_size},
        {"transitions_per_update", &c.transitions_per_update},
        {"buffer_capacity", &c.buffer_capacity},
        {"k_taus", &c.k_taus},
        {"k_prime_taus", &c.k_prime_taus},
        {"num_envs", &c.num_envs},
        {"episode_length", &c.episode_length},
        {"train_jobs", &c.train_jobs},
        {"train_machines", &c.train_machines},
        {"validation_size", &c.validation_size}};
    const std::map<std::string, double*> doubles = {
        {"lr", &c.lr},           {"gamma", &c.gamma},         {"eps_start", &c.eps_start},
        {"eps_end", &c.eps_end}, {"per_alpha", &c.per_alpha}, {"per_beta", &c.per_beta},
        {"kappa", &c.kappa},     {"max_wall_seconds", &c.max_wall_seconds}};
    const auto net_keys = to_key_values(GNNConfig{});
    for (const auto& [key, value] : kv) {
        if (key == "action_space") {
            auto s = parse_action_space(value);
            if (!s) throw Error(ErrorCode::InvalidConfig, "unknown action space '" + value + "'");
            c.space = *s;
        } else if (key == "validation_seed") {
            c.validation_seed = static_cast<std::uint64_t>(std::stoull(value));
        } else if (auto i = ints.find(key); i != ints.end()) {
            *i->second = kv_int(key, value);
        } else if (auto d = doubles.find(key); d != doubles.end()) {
            *d->second = kv_double(key, value);
        } else if (net_keys.count(key)) {
            net_kv[key] = value;
        } else if (key == "method" || key == "seed" || key == "iterations") {
        } else {
            throw Error(ErrorCode::InvalidConfig, "unknown key '" + key + "'");
        }
    }
    net_kv["num_actions"] = std::to_string(action_count(c.space));
    c.net = parse_gnn_config(net_kv);
    c.check();
    return c;
}

std::map<std::string, std::string> to_key_values(const TrainConfig& c) {
    auto num = [](double d) {
        std::ostringstream os;
        os << std::setprecision(17) << d;
        return os.str();
    };
    auto kv = to_key_values(c.net);
    kv.erase("num_actions");
    kv["action_space"] = std::string(to_string(c.space));
    kv["lr"] = num(c.lr);
    kv["gamma"] = num(c.gamma);
    kv["n_step"] = std::to_string(c.n_step);
    kv["target_update"] = std::to_string(c.target_update);
    kv["eps_start"] = num(c.eps_start);
    kv["eps_end"] = num(c.eps_end);
    kv["epochs"] = std::to_string(c.epochs);
    kv["transitions_per_epoch"] = std::to_string(c.transitions_per_epoch);
    kv["batch_size"] = std::to_string(c.batch_size);
    kv["transitions_per_update"] = std::to_string(c.transitions_per_update);
    kv["buffer_capacity"] = std::to_string(c.buffer_capacity);
    kv["per_alpha"] = num(c.per_alpha);
    kv["per_beta"] = num(c.per_beta);
    kv["k_taus"] = std::to_string(c.k_taus);
    kv["k_prime_taus"] = std::to_string(c.k_prime_taus);
    kv["kappa"] = num(c.kappa);
    kv["num_envs"] = std::to_string(c.num_envs);
    kv["episode_length"] = std::to_string(c.episode_length);
    kv["train_jobs"] = std::to_string(c.train_jobs);
    kv["train_machines"] = std::to_string(c.train_machines);
    kv["validation_size"] = std::to_string(c.validation_size);
    kv["validation_seed"] = std::to_string(c.validation_seed);
    kv["max_wall_seconds"] = num(c.max_wall_seconds);
    return kv;
}

double epsilon_at(const TrainConfig& c, long long step, long long total) {
    if (total <= 1) return c.eps_end;
    const double frac = std::clamp(static_cast<double>(step) / static_cast<double>(total - 1), 0.0, 1.0);
    return c.eps_start + (c.eps_end - c.eps_start) * frac;
}

// ---- collection ------------------------------------------------------------

Collector::Collector(InstanceSampler sampler, ActionSpace space, int num_envs, int episode_length, int n_step,
                     double gamma, std::uint64_t seed)
    : sampler_(std::move(sampler)), space_(space), episode_length_(episode_length), rng_(seed),
      action_counts_(static_cast<std::size_t>(action_count(space)), 0) {
    slots_.reserve(static_cast<std::size_t>(num_envs));
    for (int i = 0; i < num_envs; ++i) {
        slots_.push_back(Slot{nullptr, JsspEnv{}, nullptr, NStepAssembler(n_step, gamma)});
        start_episode(slots_.back());
    }
}

void Collector::start_episode(Slot& slot) {
    slot.instance = std::make_unique<Instance>(sampler_(rng_));
    slot.env.reset(*slot.instance, space_, rng_(), episode_length_);
    slot.obs = std::make_shared<const Observation>(slot.env.observation());
    slot.assembler.clear();
}

std::vector<Transition> Collector::collect(const QNetwork* net, double epsilon, int steps) {
    if (!net && epsilon < 1.0) throw Error(ErrorCode::InvalidConfig, "greedy collection needs a network");
    std::vector<Transition> out;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> pick(0, action_count(space_) - 1);
    for (int s = 0; s < steps; ++s) {
        Slot& slot = slots_[cursor_];
        cursor_ = (cursor_ + 1) % slots_.size();
        int action = 0;
        if (u(rng_) < epsilon) action = pick(rng_);
        else action = net->greedy_action(*slot.obs);
        ++action_counts_[static_cast<std::size_t>(action)];
        const StepResult r = slot.env.step(action);
        auto next = std::make_shared<const Observation>(slot.env.observation());
        for (auto& t : slot.assembler.push(slot.obs, action, r.reward, next, r.done)) out.push_back(std::move(t));
        slot.obs = std::move(next);
        if (r.done) {
            finished_best_sum_ += static_cast<double>(slot.env.best_cost());
            ++finished_;
            start_episode(slot);
        }
    }
    return out;
}

double Collector::mean_episode_best() const {
    return finished_ ? finished_best_sum_ / static_cast<double>(finished_) : 0.0;
}

// ---- loss ------------------------------------------------------------------

LossResult td_loss(const std::vector<const Transition*>& batch, const std::vector<double>& weights, QNetwork& net,
                   const QNetwork& target, int k_taus, int k_prime_taus, double gamma, double kappa,
                   std::mt19937_64& rng, bool backprop) {
    if (batch.empty()) throw Error(ErrorCode::InvalidConfig, "td_loss on an empty batch");
    if (weights.size() != batch.size()) throw Error(ErrorCode::ShapeMismatch, "one weight per transition required");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ad::Tape tape;
    LossResult res;
    std::vector<ad::Var> terms;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const Transition& tr = *batch[b];
        std::vector<double> taus(static_cast<std::size_t>(k_taus));
        for (double& t : taus) t = u(rng);
        std::vector<double> taus_prime(static_cast<std::size_t>(k_prime_taus));
        for (double& t : taus_prime) t = u(rng);

        std::vector<double> targets(taus_prime.size(), tr.G);
        if (!tr.done) {
            const QValues online_next = net.q_values(*tr.bootstrap, taus_prime);
            Eigen::Index a_star = 0;
            online_next.mean.maxCoeff(&a_star);
            const QValues target_next = target.q_values(*tr.bootstrap, taus_prime);
            const double disc = std::pow(gamma, tr.horizon);
            for (std::size_t j = 0; j < targets.size(); ++j)
                targets[j] += disc * target_next.quantiles(static_cast<Eigen::Index>(j), a_star);
        }

        Encoding e = net.encode(tape, *tr.obs);
        ad::Var z = tape.select_col(net.quantiles(tape, e.pooled, taus), tr.action);
        const RowMatrix& zv = tape.value(z);
        double tde = 0.0;
        for (Eigen::Index i = 0; i < zv.rows(); ++i)
            for (double t : targets) tde += std::abs(t - zv(i, 0));
        res.priorities.push_back(tde / static_cast<double>(zv.rows() * static_cast<Eigen::Index>(targets.size())));
        terms.push_back(tape.scale(tape.quantile_huber(z, taus, targets, kappa),
                                   weights[b] / static_cast<double>(batch.size())));
    }
    ad::Var loss = terms.front();
    for (std::size_t i = 1; i < terms.size(); ++i) loss = tape.add(loss, terms[i]);
    res.loss = tape.value(loss)(0, 0);
    if (backprop && std::isfinite(res.loss)) tape.backward(loss);
    return res;
}

// ---- evaluation ------------------------------------------------------------

PolicyRun run_policy(const QNetwork* net, const Instance& instance, ActionSpace space, int steps, std::uint64_t seed) {
    if (net && net->num_actions() != action_count(space))
        throw Error(ErrorCode::InvalidConfig, "network output width does not match the action space");
    JsspEnv env;
    env.reset(instance, space, seed, steps);
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_int_distribution<int> pick(0, env.num_actions() - 1);
    while (!env.done()) env.step(net ? net->greedy_action(env.observation()) : pick(rng));
    return {env.best_cost(), env.best_solution(), env.initial_cost()};
}

double evaluate_policy(const QNetwork* net, const std::vector<Instance>& instances, ActionSpace space, int steps,
                       std::uint64_t seed) {
    if (instances.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < instances.size(); ++i)
        total += static_cast<double>(run_policy(net, instances[i], space, steps, seed + i).best_cost);
    return total / static_cast<double>(instances.size());
}

std::vector<Instance> make_instances(int jobs, int machines, int count, std::uint64_t seed) {
    std::vector<Instance> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out.push_back(generate_instance(jobs, machines, seed + static_cast<std::uint64_t>(i)));
    return out;
}

// ---- training --------------------------------------------------------------

void write_log_header(std::ostream& out) { out << "epoch,mean_loss,epsilon,validation_mean_makespan,wall_seconds\n"; }

void write_log_row(std::ostream& out, const EpochLog& r) {
    out << r.epoch << ',' << std::setprecision(10) << r.mean_loss << ',' << r.epsilon << ',' << r.validation << ','
        << std::fixed << std::setprecision(3) << r.wall_seconds << std::defaultfloat << '\n';
    out.flush();
}

TrainResult train(const TrainConfig& config, std::uint64_t seed, std::ostream* log_csv) {
    config.check();
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

    std::mt19937_64 rng(seed);
    QNetwork online(config.net, rng());
    QNetwork target = online;
    Adam adam(config.lr);
    ReplayBuffer buffer(static_cast<std::size_t>(config.buffer_capacity), config.per_alpha);
    const int J = config.train_jobs;
    const int M = config.train_machines;
    Collector collector([J, M](std::mt19937_64& r) { return generate_instance(J, M, r()); }, config.space,
                        config.num_envs, config.episode_length, config.n_step, config.gamma, rng());
    const auto validation = make_instances(J, M, config.validation_size, config.validation_seed);
    auto validate = [&](const QNetwork& net) {
        return evaluate_policy(&net, validation, config.space, config.episode_length, config.validation_seed);
    };

    TrainResult res;
    res.best = online;
    res.best_validation = validate(online);
    res.best_epoch = 0;
    if (log_csv) write_log_header(*log_csv);
    EpochLog zero{0, 0.0, config.eps_start, res.best_validation, elapsed()};
    res.log.push_back(zero);
    if (log_csv) write_log_row(*log_csv, zero);

    const long long total_steps = static_cast<long long>(config.epochs) * config.transitions_per_epoch;
    long long step = 0;
    bool out_of_time = false;
    for (int epoch = 1; epoch <= config.epochs && !out_of_time; ++epoch) {
        double loss_sum = 0.0;
        int loss_count = 0;
        double eps = config.eps_start;
        for (int s = 0; s < config.transitions_per_epoch; s += config.transitions_per_update) {
            eps = epsilon_at(config, step, total_steps);
            const int chunk = std::min(config.transitions_per_update, config.transitions_per_epoch - s);
            for (auto& t : collector.collect(&online, eps, chunk)) buffer.add(std::move(t));
            step += chunk;
            if (buffer.size() < static_cast<std::size_t>(config.batch_size)) continue;

            auto sample = buffer.sample(static_cast<std::size_t>(config.batch_size), config.per_beta, rng);
            std::vector<const Transition*> batch;
            for (auto i : sample.indices) batch.push_back(&buffer.at(i));
            online.zero_grad();
            LossResult lr = td_loss(batch, sample.weights, online, target, config.k_taus, config.k_prime_taus,
                                    config.gamma, config.kappa, rng);
            if (!std::isfinite(lr.loss))
                throw Error(ErrorCode::Divergence, "non-finite loss at epoch " + std::to_string(epoch) +
                                                       ", optimizer step " + std::to_string(adam.steps() + 1));
            adam.step(online.parameters());
            for (std::size_t i = 0; i < sample.indices.size(); ++i)
                buffer.update_priority(sample.indices[i], lr.priorities[i]);
            if (adam.steps() % config.target_update == 0) {
                target = online;
                res.target_syncs.push_back(adam.steps());
            }
            loss_sum += lr.loss;
            ++loss_count;
            if (config.max_wall_seconds > 0.0 && elapsed() > config.max_wall_seconds) {
                out_of_time = true;
                break;
            }
        }
        EpochLog row{epoch, loss_count ? loss_sum / loss_count : 0.0, eps, validate(online), elapsed()};
        res.log.push_back(row);
        if (log_csv) write_log_row(*log_csv, row);
        if (row.validation < res.best_validation) {
            res.best_validation = row.validation;
            res.best = online;
            res.best_epoch = epoch;
        }
    }
    res.optimizer_steps = adam.steps();
    return res;
}

}  // namespace lsctl
