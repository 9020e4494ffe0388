#pragma once

#include <optional>
#include <vector>

#include "shed/env.hpp"

namespace shed {

// Cell encoding: -1 = block, 0 = path, 1 = start, 2 = end.
struct MazeGrid {
    int width = 0;
    int height = 0;
    std::vector<int> cells; // row-major

    int at(int r, int c) const { return cells[static_cast<size_t>(r) * width + c]; }
    int& at(int r, int c) { return cells[static_cast<size_t>(r) * width + c]; }
    bool in_bounds(int r, int c) const { return r >= 0 && r < height && c >= 0 && c < width; }
    bool open(int r, int c) const { return in_bounds(r, c) && at(r, c) != -1; }

    std::vector<std::vector<int>> to_rows() const;
    static MazeGrid from_rows(const std::vector<std::vector<int>>& rows);
};

enum class MazeLevel { easy = 0, medium = 1, hard = 2 };

struct MazeParams {
    MazeLevel size_level = MazeLevel::easy;
    MazeLevel structure_level = MazeLevel::easy; // turn count of the feasible path
    MazeLevel goal_level = MazeLevel::easy;      // length of the feasible path
    int start_level = 1;                         // 1..5 start zone

    static MazeParams from_vector(const ParamVector& p);
    ParamVector to_vector() const;
};

// True iff the single start and single end are joined by a 4-connected path
// of non-block cells. Throws MalformedGridError when the grid does not have
// exactly one start and one end.
bool maze_feasible(const MazeGrid& grid);

struct PathMetrics {
    int steps = 0; // moves along the shortest feasible path
    int turns = 0; // direction changes along that path (BFS tie-break order)
};

// BFS shortest path from start to end; nullopt when unreachable.
std::optional<PathMetrics> shortest_path_metrics(const MazeGrid& grid);

// Difficulty brackets. Side 10 and sides outside (4, 15) belong to no
// bracket, so generation never emits them.
bool size_in_bracket(int side, MazeLevel level);
bool steps_in_bracket(int steps, MazeLevel level);
bool turns_in_bracket(int turns, MazeLevel level);
bool start_zone_ok(const MazeGrid& grid, int start_level);

// All four difficulty constraints at once.
bool check_maze_brackets(const MazeGrid& grid, const MazeParams& params);

// Carves a feasible path matching all four constraints, then decorates it
// with dead-end corridors. Retries internally; throws InfeasibleSpecError
// once the retry budget is exhausted (some level combinations admit no
// grid, e.g. a >=4-turn path of fewer than 5 steps).
MazeGrid generate_maze(const MazeParams& params, Rng& rng, int max_retries = 500);

// Whether the level combination admits any grid at all (closed-form check
// used to fast-path infeasible specs and by the harness fallback).
bool maze_params_satisfiable(const MazeParams& params);

// Gridworld over a generated maze: 4 move actions, 3x3 egocentric window
// plus normalized coordinates, -0.01 step cost, +1 terminal goal reward.
class MazeEnv : public EnvInstance {
public:
    MazeEnv(const ParamVector& params, uint64_t seed);

    Vec reset(uint64_t seed) override;
    StepResult step(const Vec& action) override;
    Vec observe() const override { return observation(); }

    int observation_dim() const override { return 11; }
    ActionSpec action_spec() const override { return {true, 4}; }
    int horizon() const override { return horizon_; }

    const MazeGrid& grid() const { return grid_; }
    int agent_row() const { return agent_r_; }
    int agent_col() const { return agent_c_; }

    static constexpr double kStepCost = -0.01;
    static constexpr double kGoalReward = 1.0;

private:
    Vec observation() const;

    MazeGrid grid_;
    int start_r_ = 0, start_c_ = 0;
    int agent_r_ = 0, agent_c_ = 0;
    int horizon_ = 0;
};

} // namespace shed
