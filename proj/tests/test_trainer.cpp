#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "lsctl/config.hpp"
#include "lsctl/error.hpp"
#include "lsctl/taillard.hpp"
#include "lsctl/trainer.hpp"

using namespace lsctl;

namespace {

std::shared_ptr<const Observation> fake_obs(double tag) {
    auto o = std::make_shared<Observation>();
    o->scalars[0] = tag;
    return o;
}

GNNConfig tiny_net(ActionSpace space) {
    GNNConfig c;
    c.d_emb = 8;
    c.mlp_hidden = 8;
    c.iqn_hidden = 8;
    c.num_cosines = 8;
    c.num_actions = action_count(space);
    return c;
}

TrainConfig tiny_train() {
    TrainConfig c;
    c.net = tiny_net(ActionSpace::A);
    c.train_jobs = 3;
    c.train_machines = 3;
    c.episode_length = 10;
    c.num_envs = 2;
    c.validation_size = 4;
    c.batch_size = 8;
    c.epochs = 2;
    c.transitions_per_epoch = 160;
    c.target_update = 7;
    return c;
}

InstanceSampler sampler(int J, int M) {
    return [J, M](std::mt19937_64& r) { return generate_instance(J, M, r()); };
}

/// Transitions from a real episode of a small instance.
std::vector<Transition> sample_transitions(ActionSpace space, int count, std::uint64_t seed) {
    Collector c(sampler(3, 3), space, 2, 6, 3, 0.99, seed);
    auto out = c.collect(nullptr, 1.0, count + 8);
    out.resize(static_cast<std::size_t>(count));
    return out;
}

}  // namespace

TEST(NStep, ThreeStepReturnExample) {
    NStepAssembler a(3, 0.99);
    EXPECT_TRUE(a.push(fake_obs(0), 1, 5.0, fake_obs(1), false).empty());
    EXPECT_TRUE(a.push(fake_obs(1), 0, 3.0, fake_obs(2), false).empty());
    auto out = a.push(fake_obs(2), 1, 0.0, fake_obs(3), false);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_NEAR(out[0].G, 7.97, 1e-12);
    EXPECT_EQ(out[0].horizon, 3);
    EXPECT_EQ(out[0].action, 1);
    EXPECT_FALSE(out[0].done);
    EXPECT_EQ(out[0].bootstrap->scalars[0], 3.0);
}

TEST(NStep, EpisodeEndFlushesShorterHorizons) {
    NStepAssembler a(3, 0.5);
    a.push(fake_obs(0), 0, 1.0, fake_obs(1), false);
    auto out = a.push(fake_obs(1), 0, 2.0, fake_obs(2), true);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].horizon, 2);
    EXPECT_DOUBLE_EQ(out[0].G, 1.0 + 0.5 * 2.0);
    EXPECT_EQ(out[1].horizon, 1);
    EXPECT_DOUBLE_EQ(out[1].G, 2.0);
    EXPECT_TRUE(out[0].done && out[1].done);
}

TEST(NStep, RewardStreamIsRecoverable) {
    const auto inst = generate_instance(4, 3, 11);
    for (int n : {1, 3, 5}) {
        JsspEnv env;
        env.reset(inst, ActionSpace::AN, 3, 30);
        NStepAssembler a(n, 0.99);
        std::mt19937_64 rng(n);
        std::uniform_int_distribution<int> pick(0, env.num_actions() - 1);
        std::vector<double> rewards;
        std::vector<std::shared_ptr<const Observation>> states{std::make_shared<const Observation>(env.observation())};
        std::vector<Transition> all;
        while (!env.done()) {
            auto r = env.step(pick(rng));
            rewards.push_back(r.reward);
            states.push_back(std::make_shared<const Observation>(env.observation()));
            for (auto& t : a.push(states[states.size() - 2], 0, r.reward, states.back(), r.done)) all.push_back(t);
        }
        ASSERT_EQ(all.size(), rewards.size());
        std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) { return x.step < y.step; });
        std::vector<double> rebuilt(rewards.size());
        for (int t = static_cast<int>(all.size()) - 1; t >= 0; --t) {
            const auto& tr = all[static_cast<std::size_t>(t)];
            double rest = 0.0;
            for (int i = 1; i < tr.horizon; ++i) rest += std::pow(0.99, i) * rebuilt[static_cast<std::size_t>(t + i)];
            rebuilt[static_cast<std::size_t>(t)] = tr.G - rest;
            EXPECT_EQ(tr.bootstrap.get(), states[static_cast<std::size_t>(t + tr.horizon)].get());
            EXPECT_GE(tr.G, 0.0);
        }
        for (std::size_t t = 0; t < rewards.size(); ++t) EXPECT_NEAR(rebuilt[t], rewards[t], 1e-9) << "n=" << n;
    }
}

TEST(Replay, EqualPrioritiesAreUniform) {
    ReplayBuffer buf(16, 0.6);
    for (int i = 0; i < 10; ++i) buf.add(Transition{});
    for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(buf.probability(i), 0.1, 1e-12);
    std::mt19937_64 rng(1);
    auto s = buf.sample(8, 0.4, rng);
    for (double w : s.weights) EXPECT_NEAR(w, 1.0, 1e-12);
}

TEST(Replay, AlphaZeroIgnoresPriorities) {
    ReplayBuffer buf(8, 0.0);
    for (int i = 0; i < 5; ++i) buf.add(Transition{});
    for (std::size_t i = 0; i < 5; ++i) buf.update_priority(i, 0.5 + static_cast<double>(i) * 3.0);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(buf.probability(i), 0.2, 1e-12);
}

TEST(Replay, ProportionalSamplingAndWeights) {
    ReplayBuffer buf(4, 0.6);
    for (int i = 0; i < 4; ++i) buf.add(Transition{});
    const std::vector<double> pr = {1.0, 2.0, 4.0, 8.0};
    double z = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        buf.update_priority(i, pr[i]);
        z += std::pow(pr[i], 0.6);
    }
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(buf.probability(i), std::pow(pr[i], 0.6) / z, 1e-12);

    std::mt19937_64 rng(2);
    std::vector<int> hits(4, 0);
    const int draws = 4000;
    for (int d = 0; d < draws / 8; ++d) {
        auto s = buf.sample(8, 0.4, rng);
        double wmax = *std::max_element(s.weights.begin(), s.weights.end());
        EXPECT_DOUBLE_EQ(wmax, 1.0);
        for (std::size_t k = 0; k < s.indices.size(); ++k) {
            ++hits[s.indices[k]];
            const double raw = std::pow(4.0 * buf.probability(s.indices[k]), -0.4);
            EXPECT_LE(s.weights[k], 1.0 + 1e-12);
            EXPECT_GT(raw, 0.0);
        }
    }
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(hits[i] / static_cast<double>(draws), buf.probability(i), 0.03);
}

TEST(Replay, NewEntriesGetMaxPriorityAndOverwriteOldest) {
    ReplayBuffer buf(2, 1.0);
    Transition a;
    a.step = 1;
    buf.add(a);
    buf.update_priority(0, 5.0);
    Transition b;
    b.step = 2;
    buf.add(b);
    EXPECT_NEAR(buf.probability(1), 0.5, 1e-12);
    Transition c;
    c.step = 3;
    buf.add(c);
    EXPECT_EQ(buf.size(), 2u);
    EXPECT_EQ(buf.at(0).step, 3);
}

TEST(Schedule, LinearEpsilon) {
    TrainConfig c;
    EXPECT_DOUBLE_EQ(epsilon_at(c, 0, 1000), 0.95);
    EXPECT_NEAR(epsilon_at(c, 500, 1001), 0.5, 1e-12);
    EXPECT_NEAR(epsilon_at(c, 999, 1000), 0.05, 1e-12);
    EXPECT_NEAR(epsilon_at(c, 5000, 1000), 0.05, 1e-12);
    for (long long s = 0; s <= 1000; s += 37) {
        const double e = epsilon_at(c, s, 1000);
        EXPECT_GE(e, 0.05);
        EXPECT_LE(e, 0.95);
    }
}

TEST(Collector, RandomActionsAreUniform) {
    Collector c(sampler(3, 3), ActionSpace::ANP, 4, 20, 3, 0.99, 5);
    c.collect(nullptr, 1.0, 10000);
    const auto counts = c.action_counts();
    ASSERT_EQ(counts.size(), 10u);
    double chi2 = 0.0;
    for (int k : counts) chi2 += (k - 1000.0) * (k - 1000.0) / 1000.0;
    EXPECT_LT(chi2, 27.88);  // df = 9, p = 0.001
}

TEST(Collector, GreedyCollectionIsDeterministic) {
    QNetwork net(tiny_net(ActionSpace::AN), 3);
    Collector a(sampler(3, 3), ActionSpace::AN, 2, 8, 3, 0.99, 5);
    Collector b(sampler(3, 3), ActionSpace::AN, 2, 8, 3, 0.99, 5);
    auto ta = a.collect(&net, 0.0, 40);
    auto tb = b.collect(&net, 0.0, 40);
    ASSERT_EQ(ta.size(), tb.size());
    for (std::size_t i = 0; i < ta.size(); ++i) {
        EXPECT_EQ(ta[i].action, tb[i].action);
        EXPECT_EQ(ta[i].G, tb[i].G);
    }
    EXPECT_THROW(a.collect(nullptr, 0.5, 1), Error);
}

TEST(Loss, DoneTransitionIgnoresTargetNetwork) {
    auto batch = sample_transitions(ActionSpace::A, 4, 1);
    for (auto& t : batch) t.done = true;
    std::vector<const Transition*> ptrs;
    for (auto& t : batch) ptrs.push_back(&t);
    const std::vector<double> w(ptrs.size(), 1.0);
    QNetwork net(tiny_net(ActionSpace::A), 1);
    QNetwork t1(tiny_net(ActionSpace::A), 2), t2(tiny_net(ActionSpace::A), 3);
    std::mt19937_64 r1(9), r2(9);
    auto a = td_loss(ptrs, w, net, t1, 8, 8, 0.99, 1.0, r1, false);
    auto b = td_loss(ptrs, w, net, t2, 8, 8, 0.99, 1.0, r2, false);
    EXPECT_EQ(a.loss, b.loss);
    EXPECT_EQ(a.priorities, b.priorities);

    for (auto& t : batch) t.done = false;
    std::mt19937_64 r3(9), r4(9);
    auto c = td_loss(ptrs, w, net, t1, 8, 8, 0.99, 1.0, r3, false);
    auto d = td_loss(ptrs, w, net, t2, 8, 8, 0.99, 1.0, r4, false);
    EXPECT_NE(c.loss, d.loss);
}

TEST(Loss, ZeroWeightsGiveZeroLoss) {
    auto batch = sample_transitions(ActionSpace::A, 3, 2);
    std::vector<const Transition*> ptrs;
    for (auto& t : batch) ptrs.push_back(&t);
    QNetwork net(tiny_net(ActionSpace::A), 1);
    std::mt19937_64 rng(1);
    auto r = td_loss(ptrs, std::vector<double>(3, 0.0), net, net, 8, 8, 0.99, 1.0, rng, false);
    EXPECT_EQ(r.loss, 0.0);
    EXPECT_EQ(r.priorities.size(), 3u);
    EXPECT_THROW(td_loss({}, {}, net, net, 8, 8, 0.99, 1.0, rng), Error);
}

TEST(Loss, OverfitsFixedBatch) {
    auto batch = sample_transitions(ActionSpace::AN, 8, 3);
    std::vector<const Transition*> ptrs;
    for (auto& t : batch) ptrs.push_back(&t);
    const std::vector<double> w(ptrs.size(), 1.0);
    QNetwork net(tiny_net(ActionSpace::AN), 4);
    const QNetwork target = net;
    Adam adam(5e-3);
    auto measure = [&] {
        std::mt19937_64 rng(123);
        return td_loss(ptrs, w, net, target, 8, 8, 0.99, 1.0, rng, false).loss;
    };
    const double before = measure();
    std::mt19937_64 rng(7);
    for (int s = 0; s < 500; ++s) {
        net.zero_grad();
        td_loss(ptrs, w, net, target, 8, 8, 0.99, 1.0, rng);
        adam.step(net.parameters());
    }
    EXPECT_LT(measure(), before / 10.0);
}

TEST(Train, ZeroEpochsReturnsInitialNetwork) {
    TrainConfig c = tiny_train();
    c.epochs = 0;
    std::ostringstream log;
    auto res = train(c, 17, &log);
    EXPECT_EQ(res.best_epoch, 0);
    EXPECT_EQ(res.optimizer_steps, 0);
    ASSERT_EQ(res.log.size(), 1u);
    std::mt19937_64 rng(17);
    EXPECT_TRUE(res.best == QNetwork(c.net, rng()));
    const auto val = make_instances(3, 3, c.validation_size, c.validation_seed);
    EXPECT_EQ(evaluate_policy(&res.best, val, c.space, c.episode_length, c.validation_seed), res.best_validation);
    EXPECT_EQ(log.str().substr(0, log.str().find('\n')), "epoch,mean_loss,epsilon,validation_mean_makespan,wall_seconds");
}

TEST(Train, SmallRunBookkeeping) {
    const TrainConfig c = tiny_train();
    std::ostringstream log;
    auto res = train(c, 5, &log);
    ASSERT_EQ(res.log.size(), 3u);
    double best = res.log[0].validation;
    int best_epoch = 0;
    for (const auto& row : res.log)
        if (row.validation < best) {
            best = row.validation;
            best_epoch = row.epoch;
        }
    EXPECT_EQ(res.best_validation, best);
    EXPECT_EQ(res.best_epoch, best_epoch);
    const auto val = make_instances(3, 3, c.validation_size, c.validation_seed);
    EXPECT_EQ(evaluate_policy(&res.best, val, c.space, c.episode_length, c.validation_seed), res.best_validation);

    EXPECT_GT(res.optimizer_steps, 0);
    EXPECT_EQ(res.target_syncs.size(), static_cast<std::size_t>(res.optimizer_steps / c.target_update));
    for (long long s : res.target_syncs) EXPECT_EQ(s % c.target_update, 0);
    for (std::size_t i = 1; i < res.log.size(); ++i) EXPECT_LE(res.log[i].epsilon, res.log[i - 1].epsilon);

    std::istringstream lines(log.str());
    std::string line;
    int n = 0;
    while (std::getline(lines, line)) ++n;
    EXPECT_EQ(n, 4);
}

TEST(Train, SameSeedSameResult) {
    TrainConfig c = tiny_train();
    c.epochs = 1;
    c.transitions_per_epoch = 64;
    auto a = train(c, 8);
    auto b = train(c, 8);
    EXPECT_TRUE(a.best == b.best);
    EXPECT_EQ(a.log[1].mean_loss, b.log[1].mean_loss);
}

TEST(TrainConfigFile, RoundTripAndErrors) {
    TrainConfig c = tiny_train();
    c.space = ActionSpace::ANP;
    c.net.num_actions = 10;
    c.lr = 1e-3;
    const TrainConfig back = parse_train_config(to_key_values(c));
    EXPECT_EQ(back.space, ActionSpace::ANP);
    EXPECT_EQ(back.net.d_emb, 8);
    EXPECT_EQ(back.lr, 1e-3);
    EXPECT_EQ(back.target_update, 7);
    EXPECT_EQ(back.validation_seed, c.validation_seed);
    EXPECT_THROW(parse_train_config({{"n_step", "0"}}), Error);
    EXPECT_THROW(parse_train_config({{"gamma", "1.5"}}), Error);
    EXPECT_THROW(parse_train_config({{"no_such_key", "1"}}), Error);
    EXPECT_THROW(parse_train_config({{"lr", "abc"}}), Error);
}

TEST(TrainConfigFile, ShippedConfigsParse) {
    const std::filesystem::path dir = std::filesystem::path(LSCTL_SOURCE_DIR) / "configs";
    const std::map<std::string, ActionSpace> files = {{"nls_a.cfg", ActionSpace::A},
                                                      {"nls_an.cfg", ActionSpace::AN},
                                                      {"nls_anp.cfg", ActionSpace::ANP},
                                                      {"nls_a_desk.cfg", ActionSpace::A}};
    for (const auto& [file, space] : files) {
        const TrainConfig c = parse_train_config(load_key_values(dir / file));
        EXPECT_EQ(c.space, space) << file;
        EXPECT_EQ(c.net.num_actions, action_count(space)) << file;
    }
    const TrainConfig full = parse_train_config(load_key_values(dir / "nls_a.cfg"));
    EXPECT_EQ(full.epochs, 80);
    EXPECT_EQ(full.transitions_per_epoch, 19200);
    EXPECT_EQ(full.lr, 5e-4);
}
