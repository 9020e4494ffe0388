#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "shed/errors.hpp"
#include "shed/teacher.hpp"
#include "test_util.hpp"

using namespace shed;

TEST_CASE("progress reward sums the per-environment deltas") {
    CHECK(progress_reward({0, 0}, {1, 1}) == doctest::Approx(2.0));
    CHECK(progress_reward({0.3, -0.2}, {0.3, -0.2}) == doctest::Approx(0.0));
    CHECK(progress_reward({0.2, 0.4, 0.1}, {0.5, 0.4, 0.0}) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK_THROWS_AS(progress_reward({0, 0}, {0, 0, 0}), ShapeError);
}

TEST_CASE("cv of a uniform improvement is zero") {
    CHECK(cv({0, 0, 0}, {0.7, 0.7, 0.7}, 1e-8) == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("cv hand example: omega (0,2) gives sqrt(2)") {
    const double v = cv({0, 0}, {0, 2}, 0.0);
    CHECK(v == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("cv stays finite when the mean improvement vanishes") {
    const double v = cv({0, 0}, {-1, 1}, 1e-8);
    CHECK(std::isfinite(v));
    CHECK(v > 0.0);
    // omega = (-1, 1): mean 0, variance term 2/(1)/(0 + eps) -> sqrt(2/eps)
    CHECK(v == doctest::Approx(std::sqrt(2.0 / 1e-8)).epsilon(1e-9));
}

TEST_CASE("cv needs at least two environments") {
    CHECK_THROWS_AS(cv({1.0}, {2.0}, 1e-8), InsufficientDimensionsError);
}

TEST_CASE("teacher reward composes progress and fairness") {
    RewardConfig cfg;
    cfg.eta = 1.0;
    cfg.eps_cv = 0.0;
    const double r = teacher_reward({0, 0}, {2, 0}, cfg);
    CHECK(r == doctest::Approx(2.0 - std::sqrt(2.0)).epsilon(1e-12));

    cfg.eta = 0.0;
    CHECK(teacher_reward({0, 0}, {2, 0}, cfg) == doctest::Approx(2.0));

    cfg.eta = 10.0; // heavy-fairness configuration
    CHECK(teacher_reward({0, 0}, {2, 0}, cfg) ==
          doctest::Approx(2.0 - 10.0 * std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("teacher reward is invariant under joint permutations") {
    RewardConfig cfg;
    cfg.eta = 0.7;
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        Vec s(6), s2(6);
        for (int i = 0; i < 6; ++i) {
            s[i] = rng.uniform(-1, 1);
            s2[i] = rng.uniform(-1, 1);
        }
        const double base = teacher_reward(s, s2, cfg);
        std::vector<int> perm{0, 1, 2, 3, 4, 5};
        rng.shuffle(perm);
        Vec ps(6), ps2(6);
        for (int i = 0; i < 6; ++i) {
            ps[i] = s[perm[i]];
            ps2[i] = s2[perm[i]];
        }
        CHECK(teacher_reward(ps, ps2, cfg) == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("progress reward with eta=0 is additive over disjoint blocks") {
    RewardConfig cfg;
    cfg.eta = 0.0;
    const Vec s{0.1, 0.2, 0.3, 0.4};
    const Vec s2{0.5, 0.1, 0.6, 0.2};
    const double whole = teacher_reward(s, s2, cfg);
    const double left = teacher_reward({s[0], s[1]}, {s2[0], s2[1]}, cfg);
    const double right = teacher_reward({s[2], s[3]}, {s2[2], s2[3]}, cfg);
    CHECK(whole == doctest::Approx(left + right).epsilon(1e-12));
}

TEST_CASE("cv is nonnegative and zero only for equal improvements") {
    Rng rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        Vec s(4, 0.0), s2(4);
        for (auto& v : s2) v = rng.uniform(-2, 2);
        const double v = cv(s, s2, 1e-8);
        CHECK(v >= 0.0);
        const double spread = *std::max_element(s2.begin(), s2.end()) -
                              *std::min_element(s2.begin(), s2.end());
        if (v < 1e-9) CHECK(spread < 1e-6);
    }
}

TEST_CASE("replay buffer is FIFO at capacity") {
    ReplayBuffer buf(3);
    for (int i = 0; i < 4; ++i) {
        TeacherTransition t;
        t.reward = i;
        buf.push(std::move(t));
    }
    CHECK(buf.size() == 3);
    CHECK(buf[0].reward == doctest::Approx(1.0)); // 0 evicted
    CHECK(buf[1].reward == doctest::Approx(2.0));
    CHECK(buf[2].reward == doctest::Approx(3.0));
    CHECK(buf.inserted() == 4);
}

TEST_CASE("buffer FIFO property under random push sequences") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const size_t cap = 1 + rng.next_u64() % 8;
        ReplayBuffer buf(cap);
        const int pushes = 1 + static_cast<int>(rng.next_u64() % 40);
        for (int i = 0; i < pushes; ++i) {
            TeacherTransition t;
            t.reward = i;
            buf.push(std::move(t));
        }
        const size_t expect = std::min<size_t>(cap, static_cast<size_t>(pushes));
        REQUIRE(buf.size() == expect);
        for (size_t i = 0; i < buf.size(); ++i)
            CHECK(buf[i].reward == doctest::Approx(pushes - static_cast<int>(expect) + static_cast<int>(i)));
    }
}

TEST_CASE("mix_batch composes real and synthetic draws by psi") {
    ReplayBuffer real(100), syn(100);
    for (int i = 0; i < 10; ++i) {
        TeacherTransition t;
        t.origin = Origin::real;
        real.push(t);
        t.origin = Origin::synthetic;
        syn.push(t);
    }
    Rng rng(3);

    auto batch = mix_batch(real, syn, 0.25, 64, rng);
    int n_real = 0;
    for (const auto& t : batch) n_real += t.origin == Origin::real ? 1 : 0;
    CHECK(batch.size() == 64);
    CHECK(n_real == 16);

    batch = mix_batch(real, syn, 1.0, 64, rng);
    n_real = 0;
    for (const auto& t : batch) n_real += t.origin == Origin::real ? 1 : 0;
    CHECK(n_real == 64);
}

TEST_CASE("mix_batch falls back to real-only when the synthetic buffer is empty") {
    ReplayBuffer real(100), syn(100);
    TeacherTransition t;
    real.push(t);
    Rng rng(4);
    bool fell_back = false;
    auto batch = mix_batch(real, syn, 0.25, 64, rng, &fell_back);
    CHECK(fell_back);
    CHECK(batch.size() == 64);
    for (const auto& x : batch) CHECK(x.origin == Origin::real);

    ReplayBuffer empty_real(10);
    CHECK_THROWS_AS(mix_batch(empty_real, syn, 0.25, 64, rng), CannotTrainError);
}

namespace {

TeacherAgent make_agent(uint64_t seed, int hidden = 8, const ParamSpace& space = lander_param_space()) {
    TeacherConfig cfg;
    cfg.hidden = hidden;
    return TeacherAgent(space, 3, cfg, seed);
}

std::vector<TeacherTransition> random_batch(int n, uint64_t seed,
                                            const ParamSpace& space = lander_param_space()) {
    Rng rng(seed);
    std::vector<TeacherTransition> batch;
    for (int i = 0; i < n; ++i) {
        TeacherTransition t;
        t.state = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        t.next_state = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        t.action = sample_params(space, rng);
        t.reward = rng.uniform(-1, 1);
        batch.push_back(std::move(t));
    }
    return batch;
}

} // namespace

TEST_CASE("deterministic action selection repeats; exploration stays in bounds") {
    TeacherAgent agent = make_agent(7);
    const Vec s{0.1, -0.5, 0.3};
    Rng rng(1);
    const ParamVector a1 = agent.select_action(s, false, rng);
    const ParamVector a2 = agent.select_action(s, false, rng);
    CHECK(a1.values == a2.values);

    const ParamSpace space = lander_param_space();
    agent.set_noise_scale(0.5);
    for (int i = 0; i < 10000; ++i) {
        Vec state{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const ParamVector a = agent.select_action(state, true, rng);
        CHECK_NOTHROW(validate_params(space, a));
    }
}

TEST_CASE("discrete actor actions always land on maze levels") {
    const ParamSpace space = maze_param_space();
    TeacherConfig cfg;
    cfg.hidden = 8;
    TeacherAgent agent(space, 3, cfg, 11);
    agent.set_noise_scale(0.4);
    Rng rng(2);
    for (int i = 0; i < 2000; ++i) {
        Vec state{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const ParamVector a = agent.select_action(state, true, rng);
        CHECK_NOTHROW(validate_params(space, a));
    }
}

TEST_CASE("zero-weight actor emits the center of the space") {
    TeacherAgent agent = make_agent(3);
    for (auto& layer : agent.actor.layers()) {
        std::fill(layer.w.a.begin(), layer.w.a.end(), 0.0);
        std::fill(layer.b.begin(), layer.b.end(), 0.0);
    }
    Rng rng(1);
    const ParamVector a = agent.select_action({0.2, 0.4, -0.1}, false, rng);
    CHECK(a.values[0] == doctest::Approx(-10.0)); // gravity range [-15,-5]
    CHECK(a.values[1] == doctest::Approx(4.0));   // wind range [0,8]
    CHECK(a.values[2] == doctest::Approx(1.0));   // turbulence range [0,2]
}

TEST_CASE("critic gradient matches finite differences") {
    for (uint64_t seed = 1; seed <= 5; ++seed) {
        TeacherAgent agent = make_agent(seed, 6);
        const auto batch = random_batch(8, seed * 13);

        auto loss_at = [&](const Vec& flat) { return agent.critic_loss_at(flat, batch); };

        // Independent analytic pass: recompute the frozen targets from the
        // target nets, then backprop (q - y)^2 / n through a probe critic.
        Mlp critic = agent.critic;
        const Vec flat0 = critic.flatten();
        Mlp::Grad grad = critic.zero_grad();
        const auto& cfg = agent.config();
        auto normalize = [&](const Vec& s) {
            Vec out(s.size());
            for (size_t d = 0; d < s.size(); ++d)
                out[d] = 2.0 * (s[d] - cfg.state_lo) / (cfg.state_hi - cfg.state_lo) - 1.0;
            return out;
        };
        for (const auto& item : batch) {
            const Vec snn = normalize(item.next_state);
            Vec u = agent.actor_target.forward(snn);
            for (auto& v : u) v = std::tanh(v);
            const ParamVector snapped = params_from_unit(agent.space(), u);
            Vec in_next = snn;
            const Vec ua = unit_from_params(agent.space(), snapped);
            in_next.insert(in_next.end(), ua.begin(), ua.end());
            const double target =
                item.reward + cfg.gamma_u * agent.critic_target.forward(in_next)[0];

            Vec in = normalize(item.state);
            const Vec au = unit_from_params(agent.space(), item.action);
            in.insert(in.end(), au.begin(), au.end());
            Mlp::Cache cache;
            const double q = critic.forward(in, cache)[0];
            critic.backward(cache, {2.0 * (q - target) / batch.size()}, grad);
        }
        const Vec analytic = Mlp::flatten_grad(grad);
        const Vec fd = shed_test::fd_gradient(loss_at, flat0);
        CHECK(shed_test::max_rel_err(analytic, fd) < 1e-4);
    }
}

TEST_CASE("tau=1 copies online nets into the targets after one update") {
    TeacherConfig cfg;
    cfg.hidden = 6;
    cfg.tau = 1.0;
    TeacherAgent agent(lander_param_space(), 3, cfg, 21);
    Rng rng(2);
    agent.update(random_batch(8, 5), rng);
    CHECK(agent.actor_target.flatten() == agent.actor.flatten());
    CHECK(agent.critic_target.flatten() == agent.critic.flatten());
}

TEST_CASE("non-finite rewards in a ddpg batch raise training-diverged") {
    TeacherAgent agent = make_agent(5);
    auto batch = random_batch(4, 6);
    batch[2].reward = std::numeric_limits<double>::quiet_NaN();
    Rng rng(7);
    CHECK_THROWS_AS(agent.update(batch, rng), TrainingDivergedError);
}

TEST_CASE("constant-reward bandit drives Q to the reward value") {
    TeacherConfig cfg;
    cfg.hidden = 8;
    cfg.gamma_u = 0.0;
    cfg.critic_lr = 3e-3;
    TeacherAgent agent(lander_param_space(), 3, cfg, 4);
    Rng rng(6);
    const double c = 0.7;
    auto batch = random_batch(16, 9);
    for (auto& t : batch) {
        t.next_state = t.state;
        t.reward = c;
    }
    for (int i = 0; i < 3000; ++i) agent.update(batch, rng);
    double worst = 0.0;
    for (const auto& t : batch)
        worst = std::max(worst, std::abs(agent.q_value(t.state, t.action) - c));
    CHECK(worst < 1e-2);
}
