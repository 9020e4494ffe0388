#include "doctest.h"

#include <cmath>

#include "shed/errors.hpp"
#include "shed/lander.hpp"
#include "test_util.hpp"

using namespace shed;

namespace {

ParamVector calm(double gravity = -10.0) {
    return ParamVector{{gravity, 0.0, 0.0}};
}

} // namespace

TEST_CASE("zero thrust in calm air: vertical velocity changes by gravity*dt per step") {
    LanderEnv env(calm(), 42);
    const Vec zero{0.0, 0.0};
    for (int t = 1; t <= 10; ++t) {
        env.step(zero);
        CHECK(env.vy() == doctest::Approx(-10.0 * LanderEnv::kDt * t).epsilon(1e-12));
        CHECK(env.vx() == doctest::Approx(0.0));
    }
}

TEST_CASE("calm air with zero turbulence is fully deterministic") {
    LanderEnv a(calm(), 1), b(calm(), 1);
    const Vec thrust{0.3, 0.8};
    for (int t = 0; t < 50 && !a.done(); ++t) {
        auto ra = a.step(thrust);
        auto rb = b.step(thrust);
        CHECK(ra.observation == rb.observation);
        CHECK(ra.reward == rb.reward);
    }
}

TEST_CASE("turbulent wind differs across reset seeds") {
    ParamVector windy{{-10.0, 2.0, 1.5}};
    LanderEnv env(windy, 7);
    const Vec hover{0.0, 10.0 / LanderEnv::kThrustY};

    env.reset(100);
    Vec traj_a;
    for (int t = 0; t < 20; ++t) traj_a.push_back(env.step(hover).observation[0]);
    env.reset(200);
    Vec traj_b;
    for (int t = 0; t < 20; ++t) traj_b.push_back(env.step(hover).observation[0]);
    CHECK(traj_a != traj_b);

    env.reset(100);
    Vec traj_a2;
    for (int t = 0; t < 20; ++t) traj_a2.push_back(env.step(hover).observation[0]);
    CHECK(traj_a == traj_a2);
}

TEST_CASE("work-energy identity holds exactly for the integrator") {
    // Kinetic-energy change per step equals total force dotted with the
    // velocity midpoint times dt, by the semi-implicit update's algebra.
    LanderEnv env(ParamVector{{-12.0, 3.0, 0.0}}, 5);
    Rng action_rng(8);
    for (int t = 0; t < 100 && !env.done(); ++t) {
        const Vec v0{env.vx(), env.vy()};
        const Vec action{action_rng.uniform(-1.0, 1.0), action_rng.uniform(-1.0, 1.0)};
        env.step(action);
        const Vec v1{env.vx(), env.vy()};
        const Vec f = env.last_force();
        const double dke = 0.5 * (v1[0] * v1[0] + v1[1] * v1[1]) - 0.5 * (v0[0] * v0[0] + v0[1] * v0[1]);
        const double work = (f[0] * (v0[0] + v1[0]) + f[1] * (v0[1] + v1[1])) * 0.5 * LanderEnv::kDt;
        CHECK(dke == doctest::Approx(work).epsilon(1e-12));
    }
}

TEST_CASE("positive gravity is rejected naming the dim") {
    CHECK_THROWS_AS(LanderEnv(ParamVector{{+5.0, 0.0, 0.0}}, 1), InvalidParameterError);
}

TEST_CASE("stepping a finished episode is an illegal transition") {
    LanderEnv env(calm(), 3);
    const Vec fall{0.0, -1.0};
    while (!env.done()) env.step(fall);
    CHECK_THROWS_AS(env.step(fall), IllegalTransitionError);
}

TEST_CASE("reset clears a terminal episode and reproduces the seed's start") {
    LanderEnv env(calm(), 3);
    const Vec fall{0.0, -1.0};
    while (!env.done()) env.step(fall);

    Vec obs1 = env.reset(77);
    CHECK_FALSE(env.done());
    CHECK(env.step_count() == 0);
    Vec obs2 = env.reset(77);
    CHECK(obs1 == obs2);
}

TEST_CASE("hover reaches the horizon and truncates") {
    LanderEnv env(calm(-9.0), 11);
    const Vec hover{0.0, 9.0 / LanderEnv::kThrustY};
    StepResult last;
    int steps = 0;
    while (!env.done()) {
        last = env.step(hover);
        ++steps;
        REQUIRE(steps <= LanderEnv::kHorizon);
    }
    CHECK(steps == LanderEnv::kHorizon);
    CHECK(last.truncated);
    CHECK_FALSE(last.terminal);
}

TEST_CASE("soft pad contact pays the landing bonus") {
    LanderEnv env(calm(), 9);
    // Descend gently: hold a small downward velocity by cancelling gravity.
    while (!env.done()) {
        double target_vy = -0.3;
        double thrust_y = (10.0 + (target_vy - env.vy()) / LanderEnv::kDt) / LanderEnv::kThrustY;
        double thrust_x = std::clamp((-env.x() - env.vx()) * 2.0, -1.0, 1.0);
        auto r = env.step({thrust_x, std::clamp(thrust_y, -1.0, 1.0)});
        if (r.terminal) CHECK(r.reward == doctest::Approx(LanderEnv::kLandBonus));
    }
}
