#include "shed/maze.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "shed/errors.hpp"

namespace shed {

namespace {

// Fixed neighbor order; BFS tie-breaking (and therefore the reported turn
// count) depends on it.
constexpr int kDr[4] = {-1, 1, 0, 0};
constexpr int kDc[4] = {0, 0, -1, 1};

struct Cell {
    int r, c;
    bool operator==(const Cell& o) const { return r == o.r && c == o.c; }
};

std::pair<Cell, Cell> find_endpoints(const MazeGrid& g) {
    int starts = 0, ends = 0;
    Cell s{0, 0}, e{0, 0};
    for (int r = 0; r < g.height; ++r)
        for (int c = 0; c < g.width; ++c) {
            if (g.at(r, c) == 1) {
                ++starts;
                s = {r, c};
            } else if (g.at(r, c) == 2) {
                ++ends;
                e = {r, c};
            }
        }
    if (starts != 1 || ends != 1)
        throw MalformedGridError("grid must contain exactly one start and one end (found " +
                                 std::to_string(starts) + " starts, " + std::to_string(ends) +
                                 " ends)");
    return {s, e};
}

// BFS from start; returns parent indices (-1 unvisited, -2 root) flattened.
std::vector<int> bfs_parents(const MazeGrid& g, Cell start) {
    std::vector<int> parent(static_cast<size_t>(g.width) * g.height, -1);
    std::deque<Cell> q;
    parent[static_cast<size_t>(start.r) * g.width + start.c] = -2;
    q.push_back(start);
    while (!q.empty()) {
        Cell cur = q.front();
        q.pop_front();
        for (int d = 0; d < 4; ++d) {
            const int nr = cur.r + kDr[d];
            const int nc = cur.c + kDc[d];
            if (!g.open(nr, nc)) continue;
            auto& p = parent[static_cast<size_t>(nr) * g.width + nc];
            if (p != -1) continue;
            p = cur.r * g.width + cur.c;
            q.push_back({nr, nc});
        }
    }
    return parent;
}

int cheb(Cell a, Cell b) {
    return std::max(std::abs(a.r - b.r), std::abs(a.c - b.c));
}

Cell zone_anchor(int start_level, int height, int width) {
    switch (start_level) {
        case 1: return {0, 0};
        case 2: return {0, width - 1};
        case 3: return {height - 1, 0};
        case 4: return {height - 1, width - 1};
        case 5: return {(height - 1) / 2, (width - 1) / 2};
        default: throw InvalidParameterError("start_level", "must be in 1..5");
    }
}

int zone_radius(int side) {
    return (side + 3) / 4; // ceil(side/4)
}

struct StepsRange {
    int lo, hi;
};

StepsRange steps_range(MazeLevel level) {
    switch (level) {
        case MazeLevel::easy: return {1, 4};
        case MazeLevel::medium: return {5, 10};
        default: return {11, 1 << 20};
    }
}

StepsRange turns_range(MazeLevel level) {
    switch (level) {
        case MazeLevel::easy: return {0, 1};
        case MazeLevel::medium: return {2, 3};
        default: return {4, 1 << 20};
    }
}

std::vector<int> sides_for(MazeLevel level) {
    switch (level) {
        case MazeLevel::easy: return {5, 6, 7};
        case MazeLevel::medium: return {8, 9};
        default: return {11, 12, 13, 14};
    }
}

// A strongly self-avoiding lattice path: no cell repeats, and no two
// non-consecutive cells are 4-adjacent. Such a corridor is the unique
// (hence shortest) route between its endpoints in the carved grid, so the
// target step and turn counts hold exactly by construction.
std::optional<std::vector<Cell>> sample_induced_path(int side, Cell start, int target_steps,
                                                     int target_turns, Rng& rng, int tries) {
    if (target_turns > target_steps - 1 && target_steps >= 1 && target_turns > 0)
        return std::nullopt;
    for (int attempt = 0; attempt < tries; ++attempt) {
        // Segment lengths: a random composition of target_steps into
        // (target_turns + 1) positive parts.
        const int segs = target_turns + 1;
        std::vector<int> cuts;
        if (segs > 1) {
            std::vector<int> all(target_steps - 1);
            for (int i = 0; i < target_steps - 1; ++i) all[i] = i + 1;
            rng.shuffle(all);
            cuts.assign(all.begin(), all.begin() + (segs - 1));
            std::sort(cuts.begin(), cuts.end());
        }
        std::vector<int> seg_len;
        int prev = 0;
        for (int cut : cuts) {
            seg_len.push_back(cut - prev);
            prev = cut;
        }
        seg_len.push_back(target_steps - prev);

        std::vector<Cell> path{start};
        std::vector<uint8_t> used(static_cast<size_t>(side) * side, 0);
        used[static_cast<size_t>(start.r) * side + start.c] = 1;

        auto cell_ok = [&](const Cell& next, const Cell& prev_cell) {
            if (next.r < 0 || next.r >= side || next.c < 0 || next.c >= side) return false;
            if (used[static_cast<size_t>(next.r) * side + next.c]) return false;
            // Adjacency only to the immediate predecessor.
            for (int d = 0; d < 4; ++d) {
                const Cell nb{next.r + kDr[d], next.c + kDc[d]};
                if (nb.r < 0 || nb.r >= side || nb.c < 0 || nb.c >= side) continue;
                if (nb == prev_cell) continue;
                if (used[static_cast<size_t>(nb.r) * side + nb.c]) return false;
            }
            return true;
        };

        int dir = rng.uniform_int(0, 3);
        bool ok = true;
        for (size_t si = 0; si < seg_len.size() && ok; ++si) {
            if (si > 0) {
                // Turn: switch axis; flip the orientation when the first
                // step of the new segment would die immediately.
                const bool vertical = kDr[dir] != 0;
                const int options[2] = {vertical ? 2 : 0, vertical ? 3 : 1};
                dir = options[rng.uniform_int(0, 1)];
                const Cell probe{path.back().r + kDr[dir], path.back().c + kDc[dir]};
                if (!cell_ok(probe, path.back())) dir = options[0] == dir ? options[1] : options[0];
            }
            for (int s = 0; s < seg_len[si] && ok; ++s) {
                const Cell prev_cell = path.back();
                const Cell next{prev_cell.r + kDr[dir], prev_cell.c + kDc[dir]};
                if (!cell_ok(next, prev_cell)) {
                    ok = false;
                    break;
                }
                used[static_cast<size_t>(next.r) * side + next.c] = 1;
                path.push_back(next);
            }
        }
        if (ok) return path;
    }
    return std::nullopt;
}

// Dead-end corridors off the main path. Each added cell touches exactly one
// already-open cell, so the open region stays a tree and the carved path
// remains the unique start-end route.
void decorate_with_branches(MazeGrid& g, std::vector<Cell>& open_cells, Rng& rng) {
    const int side = std::max(g.width, g.height);
    const int branches = rng.uniform_int(0, 2 * side);
    for (int b = 0; b < branches; ++b) {
        Cell cur = open_cells[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(open_cells.size()) - 1))];
        const int len = rng.uniform_int(1, std::max(1, side / 2));
        for (int s = 0; s < len; ++s) {
            const int dir = rng.uniform_int(0, 3);
            const Cell next{cur.r + kDr[dir], cur.c + kDc[dir]};
            if (!g.in_bounds(next.r, next.c) || g.at(next.r, next.c) != -1) break;
            int open_neighbors = 0;
            for (int d = 0; d < 4; ++d)
                if (g.open(next.r + kDr[d], next.c + kDc[d])) ++open_neighbors;
            if (open_neighbors != 1) break;
            g.at(next.r, next.c) = 0;
            open_cells.push_back(next);
            cur = next;
        }
    }
}

} // namespace

std::vector<std::vector<int>> MazeGrid::to_rows() const {
    std::vector<std::vector<int>> rows(height, std::vector<int>(width));
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c) rows[r][c] = at(r, c);
    return rows;
}

MazeGrid MazeGrid::from_rows(const std::vector<std::vector<int>>& rows) {
    if (rows.empty() || rows.front().empty()) throw MalformedGridError("empty grid");
    MazeGrid g;
    g.height = static_cast<int>(rows.size());
    g.width = static_cast<int>(rows.front().size());
    g.cells.reserve(static_cast<size_t>(g.width) * g.height);
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != g.width)
            throw MalformedGridError("ragged grid rows");
        for (int v : row) g.cells.push_back(v);
    }
    return g;
}

MazeParams MazeParams::from_vector(const ParamVector& p) {
    MazeParams m;
    m.size_level = static_cast<MazeLevel>(static_cast<int>(std::lround(p.values.at(0))));
    m.structure_level = static_cast<MazeLevel>(static_cast<int>(std::lround(p.values.at(1))));
    m.goal_level = static_cast<MazeLevel>(static_cast<int>(std::lround(p.values.at(2))));
    m.start_level = static_cast<int>(std::lround(p.values.at(3)));
    return m;
}

ParamVector MazeParams::to_vector() const {
    return ParamVector{{static_cast<double>(static_cast<int>(size_level)),
                        static_cast<double>(static_cast<int>(structure_level)),
                        static_cast<double>(static_cast<int>(goal_level)),
                        static_cast<double>(start_level)}};
}

bool maze_feasible(const MazeGrid& grid) {
    auto [start, end] = find_endpoints(grid);
    const auto parent = bfs_parents(grid, start);
    return parent[static_cast<size_t>(end.r) * grid.width + end.c] != -1;
}

std::optional<PathMetrics> shortest_path_metrics(const MazeGrid& grid) {
    auto [start, end] = find_endpoints(grid);
    const auto parent = bfs_parents(grid, start);
    if (parent[static_cast<size_t>(end.r) * grid.width + end.c] == -1) return std::nullopt;

    std::vector<Cell> path;
    Cell cur = end;
    while (!(cur == start)) {
        path.push_back(cur);
        const int p = parent[static_cast<size_t>(cur.r) * grid.width + cur.c];
        cur = {p / grid.width, p % grid.width};
    }
    path.push_back(start);
    std::reverse(path.begin(), path.end());

    PathMetrics m;
    m.steps = static_cast<int>(path.size()) - 1;
    for (size_t i = 2; i < path.size(); ++i) {
        const int dr0 = path[i - 1].r - path[i - 2].r;
        const int dc0 = path[i - 1].c - path[i - 2].c;
        const int dr1 = path[i].r - path[i - 1].r;
        const int dc1 = path[i].c - path[i - 1].c;
        if (dr0 != dr1 || dc0 != dc1) ++m.turns;
    }
    return m;
}

bool size_in_bracket(int side, MazeLevel level) {
    switch (level) {
        case MazeLevel::easy: return side > 4 && side <= 7;
        case MazeLevel::medium: return side > 7 && side < 10;
        default: return side > 10 && side < 15;
    }
}

bool steps_in_bracket(int steps, MazeLevel level) {
    const auto r = steps_range(level);
    return steps >= r.lo && steps <= r.hi;
}

bool turns_in_bracket(int turns, MazeLevel level) {
    const auto r = turns_range(level);
    return turns >= r.lo && turns <= r.hi;
}

bool start_zone_ok(const MazeGrid& grid, int start_level) {
    auto [start, end] = find_endpoints(grid);
    (void)end;
    const int side = std::max(grid.width, grid.height);
    return cheb(start, zone_anchor(start_level, grid.height, grid.width)) <= zone_radius(side);
}

bool check_maze_brackets(const MazeGrid& grid, const MazeParams& params) {
    if (grid.width != grid.height) return false;
    if (!size_in_bracket(grid.width, params.size_level)) return false;
    const auto metrics = shortest_path_metrics(grid);
    if (!metrics) return false;
    return steps_in_bracket(metrics->steps, params.goal_level) &&
           turns_in_bracket(metrics->turns, params.structure_level) &&
           start_zone_ok(grid, params.start_level);
}

bool maze_params_satisfiable(const MazeParams& params) {
    // A path of s steps has at most s-1 turns.
    const auto st = steps_range(params.goal_level);
    const auto tu = turns_range(params.structure_level);
    if (tu.lo > st.hi - 1) return false;
    // Long straight-ish paths need room: with at most one turn the longest
    // path from (r, c) in an n-grid is max(r, n-1-r) + max(c, n-1-c).
    if (params.goal_level == MazeLevel::hard && params.structure_level == MazeLevel::easy) {
        int best = 0;
        for (int side : sides_for(params.size_level)) {
            const Cell anchor = zone_anchor(params.start_level, side, side);
            const int rad = zone_radius(side);
            for (int r = std::max(0, anchor.r - rad); r <= std::min(side - 1, anchor.r + rad); ++r)
                for (int c = std::max(0, anchor.c - rad); c <= std::min(side - 1, anchor.c + rad); ++c)
                    best = std::max(best, std::max(r, side - 1 - r) + std::max(c, side - 1 - c));
        }
        if (best < st.lo) return false;
    }
    return true;
}

MazeGrid generate_maze(const MazeParams& params, Rng& rng, int max_retries) {
    if (!maze_params_satisfiable(params))
        throw InfeasibleSpecError("maze difficulty combination is unsatisfiable");

    const auto sides = sides_for(params.size_level);
    for (int attempt = 0; attempt < max_retries; ++attempt) {
        const int side = sides[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(sides.size()) - 1))];

        const Cell anchor = zone_anchor(params.start_level, side, side);
        const int rad = zone_radius(side);
        const Cell start{
            rng.uniform_int(std::max(0, anchor.r - rad), std::min(side - 1, anchor.r + rad)),
            rng.uniform_int(std::max(0, anchor.c - rad), std::min(side - 1, anchor.c + rad))};

        auto tu = turns_range(params.structure_level);
        auto st = steps_range(params.goal_level);
        tu.hi = std::min({tu.hi, st.hi - 1, 12});
        if (tu.lo > tu.hi) continue;
        const int turns = rng.uniform_int(tu.lo, tu.hi);

        // Cap the step target by what a strongly self-avoiding path with
        // this many turns can reach from this start.
        const int run_r = std::max(start.r, side - 1 - start.r);
        const int run_c = std::max(start.c, side - 1 - start.c);
        int max_steps;
        if (turns == 0)
            max_steps = std::max(run_r, run_c);
        else if (turns == 1)
            max_steps = run_r + run_c;
        else
            max_steps = side * ((side + 1) / 2) + (side - 1) / 2 - 1;
        st.lo = std::max(st.lo, turns + 1);
        st.hi = std::min(st.hi, max_steps);
        if (st.lo > st.hi) continue;
        // Low-biased draw: short targets realize far more often, and any
        // value in the bracket satisfies the constraint.
        const int steps = std::min(rng.uniform_int(st.lo, st.hi), rng.uniform_int(st.lo, st.hi));

        auto path = sample_induced_path(side, start, steps, turns, rng, 100);
        if (!path) continue;

        MazeGrid g;
        g.width = g.height = side;
        g.cells.assign(static_cast<size_t>(side) * side, -1);
        for (const auto& cell : *path) g.at(cell.r, cell.c) = 0;
        decorate_with_branches(g, *path, rng);
        g.at(start.r, start.c) = 1;
        g.at(path->back().r, path->back().c) = 2;

        // Belt and braces: the construction guarantees these.
        if (check_maze_brackets(g, params) && maze_feasible(g)) return g;
    }
    throw InfeasibleSpecError("maze generation exhausted its retry budget");
}

MazeEnv::MazeEnv(const ParamVector& params, uint64_t seed) {
    validate_params(maze_param_space(), params);
    params_ = params;
    Rng rng(seed);
    grid_ = generate_maze(MazeParams::from_vector(params), rng);
    auto [start, end] = find_endpoints(grid_);
    (void)end;
    start_r_ = start.r;
    start_c_ = start.c;
    horizon_ = 4 * (grid_.width + grid_.height);
    reset(seed);
}

Vec MazeEnv::reset(uint64_t /*seed*/) {
    agent_r_ = start_r_;
    agent_c_ = start_c_;
    step_count_ = 0;
    done_ = false;
    return observation();
}

StepResult MazeEnv::step(const Vec& action) {
    if (done_) throw IllegalTransitionError("step called on a finished maze episode");
    const int a = static_cast<int>(std::lround(action.at(0)));
    if (a < 0 || a > 3) throw Error("maze action must be in 0..3");

    const int nr = agent_r_ + kDr[a];
    const int nc = agent_c_ + kDc[a];

    StepResult r;
    if (grid_.open(nr, nc)) {
        agent_r_ = nr;
        agent_c_ = nc;
    }
    ++step_count_;
    if (grid_.at(agent_r_, agent_c_) == 2) {
        r.reward = kGoalReward;
        r.terminal = true;
        done_ = true;
    } else {
        r.reward = kStepCost;
        if (step_count_ >= horizon_) {
            r.truncated = true;
            done_ = true;
        }
    }
    r.observation = observation();
    return r;
}

Vec MazeEnv::observation() const {
    Vec obs;
    obs.reserve(11);
    for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
            const int r = agent_r_ + dr;
            const int c = agent_c_ + dc;
            obs.push_back(grid_.in_bounds(r, c) ? static_cast<double>(grid_.at(r, c)) : -1.0);
        }
    obs.push_back(grid_.height > 1 ? static_cast<double>(agent_r_) / (grid_.height - 1) : 0.0);
    obs.push_back(grid_.width > 1 ? static_cast<double>(agent_c_) / (grid_.width - 1) : 0.0);
    return obs;
}

} // namespace shed
