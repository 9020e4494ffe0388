#include "doctest.h"

#include <cmath>

#include "shed/errors.hpp"
#include "shed/eval_rep.hpp"
#include "shed/maze.hpp"
#include "test_util.hpp"

using namespace shed;

namespace {

ParamSpace unit_1d() {
    ParamSpace s;
    s.dims = {{"x", DimKind::continuous, 0.0, 1.0, {}}};
    return s;
}

ParamSpace unit_2d() {
    ParamSpace s;
    s.dims = {{"x", DimKind::continuous, 0.0, 1.0, {}},
              {"y", DimKind::continuous, 0.0, 1.0, {}}};
    return s;
}

} // namespace

TEST_CASE("interval grid midpoints follow the (2j-1)/2 spacing") {
    const auto grid = build_interval_grid(unit_1d(), {0.25});
    REQUIRE(grid.dims[0].midpoints.size() == 4);
    CHECK(grid.dims[0].midpoints[0] == doctest::Approx(0.125));
    CHECK(grid.dims[0].midpoints[1] == doctest::Approx(0.375));
    CHECK(grid.dims[0].midpoints[2] == doctest::Approx(0.625));
    CHECK(grid.dims[0].midpoints[3] == doctest::Approx(0.875));
}

TEST_CASE("delta equal to the range gives a single midpoint at the center") {
    const auto grid = build_interval_grid(unit_1d(), {1.0});
    REQUIRE(grid.dims[0].midpoints.size() == 1);
    CHECK(grid.dims[0].midpoints[0] == doctest::Approx(0.5));
}

TEST_CASE("interval union covers the box (fine scan)") {
    for (double delta : {0.25, 0.3, 0.17, 1.0}) {
        const auto grid = build_interval_grid(unit_1d(), {delta});
        for (int i = 0; i <= 10000; ++i) {
            const double x = i / 10000.0;
            bool covered = false;
            for (double m : grid.dims[0].midpoints)
                if (std::abs(x - m) <= grid.dims[0].delta) covered = true;
            REQUIRE(covered);
        }
    }
}

TEST_CASE("invalid deltas are rejected") {
    CHECK_THROWS_AS(build_interval_grid(unit_1d(), {0.0}), InvalidDeltaError);
    CHECK_THROWS_AS(build_interval_grid(unit_1d(), {-0.1}), InvalidDeltaError);
    CHECK_THROWS_AS(build_interval_grid(unit_1d(), {1.5}), InvalidDeltaError);
}

TEST_CASE("constant performance has zero representation error") {
    const auto grid = build_interval_grid(unit_2d(), {0.2, 0.2});
    Rng rng(1);
    const double err =
        verify_representation_bound([](const ParamVector&) { return 3.7; }, grid, 1000, rng);
    CHECK(err == 0.0);
}

TEST_CASE("identity performance respects the half-delta nearest-midpoint bound") {
    const auto grid = build_interval_grid(unit_1d(), {0.2});
    Rng rng(2);
    const double err = verify_representation_bound(
        [](const ParamVector& p) { return p.values[0]; }, grid, 20000, rng);
    CHECK(err <= 0.1 + 1e-9);
    CHECK(err > 0.08); // the bound is near-tight for the identity
}

TEST_CASE("two-parameter sum obeys the triangle-inequality bound") {
    const auto grid = build_interval_grid(unit_2d(), {0.2, 0.2});
    Rng rng(3);
    const double err = verify_representation_bound(
        [](const ParamVector& p) { return p.values[0] + p.values[1]; }, grid, 100000, rng);
    CHECK(err <= 0.2 + 1e-9);
}

TEST_CASE("random Lipschitz functions never exceed sum L_i * delta_i") {
    Rng meta(17);
    for (int trial = 0; trial < 5; ++trial) {
        const double d1 = meta.uniform(0.05, 0.5);
        const double d2 = meta.uniform(0.05, 0.5);
        const double l1 = meta.uniform(0.1, 3.0);
        const double l2 = meta.uniform(0.1, 3.0);
        const double f1 = meta.uniform(0.5, 6.0);
        const double f2 = meta.uniform(0.5, 6.0);
        const auto grid = build_interval_grid(unit_2d(), {d1, d2});
        // d/dx of (L/f)*sin(f x) is L*cos(f x): per-dim Lipschitz constant L.
        auto perf = [&](const ParamVector& p) {
            return l1 / f1 * std::sin(f1 * p.values[0]) + l2 / f2 * std::cos(f2 * p.values[1]);
        };
        Rng rng(100 + trial);
        const double err = verify_representation_bound(perf, grid, 100000, rng);
        CHECK(err <= l1 * d1 + l2 * d2 + 1e-9);
    }
}

TEST_CASE("grid-mode eval sets draw distinct midpoint combinations") {
    const ParamSpace space = lander_param_space();
    const Vec deltas{2.0, 1.6, 0.4};
    const EvalSet a = build_eval_set(space, Family::lander, 10, EvalSetMode::grid, 7, deltas);
    CHECK(a.size() == 10);

    const auto grid = build_interval_grid(space, deltas);
    for (const auto& p : a.params) {
        for (int d = 0; d < 3; ++d) {
            bool is_mid = false;
            for (double m : grid.dims[d].midpoints)
                if (std::abs(p.values[d] - m) < 1e-12) is_mid = true;
            CHECK(is_mid);
        }
        CHECK_NOTHROW(validate_params(space, p));
    }
    for (int i = 0; i < a.size(); ++i)
        for (int j = i + 1; j < a.size(); ++j)
            CHECK_FALSE(params_collide(space, a.params[i], a.params[j]));

    const EvalSet b = build_eval_set(space, Family::lander, 10, EvalSetMode::grid, 7, deltas);
    for (int i = 0; i < 10; ++i) CHECK(a.params[i].values == b.params[i].values);
}

TEST_CASE("random mode may leave the midpoint lattice; grid mode never does") {
    const ParamSpace space = lander_param_space();
    const Vec deltas{2.0, 1.6, 0.4};
    const auto grid = build_interval_grid(space, deltas);
    const EvalSet r = build_eval_set(space, Family::lander, 10, EvalSetMode::random, 5, deltas);
    int off_lattice = 0;
    for (const auto& p : r.params)
        for (int d = 0; d < 3; ++d) {
            bool is_mid = false;
            for (double m : grid.dims[d].midpoints)
                if (std::abs(p.values[d] - m) < 1e-12) is_mid = true;
            if (!is_mid) ++off_lattice;
        }
    CHECK(off_lattice > 0);
}

TEST_CASE("asking for more environments than combinations fails") {
    ParamSpace s;
    s.dims = {{"level", DimKind::discrete, 0, 0, {0, 1, 2}}};
    CHECK_THROWS_AS(build_eval_set(s, Family::lander, 4, EvalSetMode::grid, 1, {}),
                    TooManyEnvironmentsError);
}

TEST_CASE("maze eval sets skip unsatisfiable level combinations") {
    const ParamSpace space = maze_param_space();
    const EvalSet set = build_eval_set(space, Family::maze, 20, EvalSetMode::grid, 3, {});
    for (const auto& p : set.params)
        CHECK(maze_params_satisfiable(MazeParams::from_vector(p)));
}

TEST_CASE("test sets are disjoint from the sets they avoid") {
    const ParamSpace space = maze_param_space();
    const EvalSet eval = build_eval_set(space, Family::maze, 10, EvalSetMode::grid, 3, {});
    const EvalSet test = build_test_set(space, Family::maze, 10, 11, {&eval});
    for (const auto& p : test.params) {
        for (const auto& q : eval.params) CHECK_FALSE(params_collide(space, p, q));
        CHECK(maze_params_satisfiable(MazeParams::from_vector(p)));
    }
}

TEST_CASE("perf_vector is ordered, deterministic, and permutation-covariant") {
    const ParamSpace space = maze_param_space();
    const EvalSet set = build_eval_set(space, Family::maze, 5, EvalSetMode::grid, 3, {});
    StudentConfig scfg;
    scfg.hidden = 8;
    const StudentPolicy policy = StudentPolicy::make(11, ActionSpec{true, 4}, scfg, 4);

    const Vec p1 = perf_vector(policy, set, 2);
    const Vec p2 = perf_vector(policy, set, 2);
    CHECK(p1 == p2);
    REQUIRE(p1.size() == 5);

    // Permuting the set (an environment travels with its seed) permutes the
    // performance vector identically.
    EvalSet permuted = set;
    std::swap(permuted.params[0], permuted.params[3]);
    std::swap(permuted.seeds[0], permuted.seeds[3]);
    const Vec p3 = perf_vector(policy, permuted, 2);
    CHECK(p3[0] == p1[3]);
    CHECK(p3[3] == p1[0]);
    CHECK(p3[1] == p1[1]);
    CHECK(p3[2] == p1[2]);
    CHECK(p3[4] == p1[4]);
}

TEST_CASE("probes outside the covered box raise coverage violations") {
    const auto grid = build_interval_grid(unit_1d(), {0.25});
    CHECK_THROWS_AS(grid.covering_midpoint(ParamVector{{2.0}}), CoverageViolationError);
}

TEST_CASE("a policy that solves exactly one eval environment shows it in the vector") {
    // Hand-build an eval set: one trivially solvable maze, two hard ones.
    MazeParams easy{MazeLevel::easy, MazeLevel::easy, MazeLevel::easy, 1};
    uint64_t one_step_seed = 0;
    bool found = false;
    for (uint64_t s = 0; s < 200 && !found; ++s) {
        Rng r(s);
        if (shortest_path_metrics(generate_maze(easy, r))->steps == 1) {
            one_step_seed = s;
            found = true;
        }
    }
    REQUIRE(found);

    EvalSet set;
    set.family = Family::maze;
    set.mode = EvalSetMode::random;
    set.seed = 1;
    set.params = {easy.to_vector(),
                  MazeParams{MazeLevel::hard, MazeLevel::hard, MazeLevel::hard, 4}.to_vector(),
                  MazeParams{MazeLevel::medium, MazeLevel::hard, MazeLevel::hard, 2}.to_vector()};
    set.seeds = {one_step_seed, 123, 456};

    // Train a student on eval env 0 only.
    MazeEnv env(set.params[0], one_step_seed);
    StudentConfig scfg;
    scfg.hidden = 16;
    scfg.gamma = 0.99;
    StudentPolicy policy = StudentPolicy::make(env.observation_dim(), env.action_spec(), scfg, 5);
    PPOConfig pcfg;
    pcfg.policy_lr = 1e-3;
    pcfg.value_lr = 1e-3;
    Rng rng(6);
    for (int round = 0; round < 30; ++round) train_in_env(policy, env, 200, pcfg, rng);

    const Vec p = perf_vector(policy, set, 1);
    CHECK(p[0] > 0.0);  // solves its training environment
    CHECK(p[1] <= 0.0); // hard mazes stay unsolved: step costs only
    CHECK(p[2] <= 0.0);
}
