#pragma once

#include <functional>

#include "shed/param_space.hpp"
#include "shed/student.hpp"

namespace shed {

// Midpoint discretization of a parameter box: per continuous dim, midpoints
// at lo + (2j-1)/2 * delta with radius-delta covering intervals. Discrete
// dims contribute their level sets directly.
struct IntervalGrid {
    struct DimGrid {
        double delta = 0.0; // 0 for discrete dims
        Vec midpoints;
    };
    ParamSpace space;
    std::vector<DimGrid> dims;

    // Total number of midpoint combinations.
    double combination_count() const;

    // Per-dim nearest midpoint; throws CoverageViolationError when the
    // point is farther than delta from every midpoint.
    ParamVector covering_midpoint(const ParamVector& point) const;
};

// deltas are consumed for continuous dims only; 0 < delta_i <= range_i.
IntervalGrid build_interval_grid(const ParamSpace& space, const Vec& deltas);

enum class EvalSetMode { grid, random };

// Fixed, ordered evaluation environments. Immutable after construction;
// the i-th entry of every performance vector refers to params[i] evaluated
// under env_seed(i).
struct EvalSet {
    Family family = Family::maze;
    EvalSetMode mode = EvalSetMode::grid;
    uint64_t seed = 0;
    std::vector<ParamVector> params;
    std::vector<uint64_t> seeds; // per-entry evaluation seed, travels with its environment

    int size() const { return static_cast<int>(params.size()); }
    uint64_t env_seed(int i) const { return seeds[static_cast<size_t>(i)]; }
};

// Grid mode draws m distinct midpoint combinations; random mode draws m
// uniform vectors. Maze combinations that admit no grid are skipped. Throws
// TooManyEnvironmentsError when m exceeds the distinct combinations.
EvalSet build_eval_set(const ParamSpace& space, Family family, int m, EvalSetMode mode,
                       uint64_t seed, const Vec& deltas);

// Uniformly sampled set that avoids colliding with `avoid` (and itself).
EvalSet build_test_set(const ParamSpace& space, Family family, int m, uint64_t seed,
                       const std::vector<const EvalSet*>& avoid);

// i-th entry = mean greedy return of the policy on eval environment i.
Vec perf_vector(const StudentPolicy& policy, const EvalSet& eval_set, int episodes_per_env);

using PerfFn = std::function<double(const ParamVector&)>;

// Samples probe_count uniform points, maps each to its covering midpoint,
// and returns the max |perf(point) - perf(midpoint)|. For a perf function
// with per-dim Lipschitz constants L_i this never exceeds sum_i L_i*delta_i.
double verify_representation_bound(const PerfFn& perf, const IntervalGrid& grid, int probe_count,
                                   Rng& rng);

} // namespace shed
