#include "shed/eval_rep.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "shed/errors.hpp"
#include "shed/maze.hpp"

namespace shed {

double IntervalGrid::combination_count() const {
    double n = 1.0;
    for (const auto& d : dims) n *= static_cast<double>(d.midpoints.size());
    return n;
}

ParamVector IntervalGrid::covering_midpoint(const ParamVector& point) const {
    ParamVector out;
    out.values.resize(point.values.size());
    for (size_t i = 0; i < point.values.size(); ++i) {
        const auto& d = dims[i];
        double best = d.midpoints[0];
        double best_dist = std::abs(point.values[i] - best);
        for (double m : d.midpoints) {
            const double dist = std::abs(point.values[i] - m);
            if (dist < best_dist) {
                best_dist = dist;
                best = m;
            }
        }
        if (space.dims[i].kind == DimKind::continuous && best_dist > d.delta)
            throw CoverageViolationError("probe escapes every interval of dim '" +
                                         space.dims[i].name + "'");
        out.values[i] = best;
    }
    return out;
}

IntervalGrid build_interval_grid(const ParamSpace& space, const Vec& deltas) {
    space.validate();
    IntervalGrid grid;
    grid.space = space;
    for (int i = 0; i < space.size(); ++i) {
        const auto& dim = space.dims[i];
        IntervalGrid::DimGrid dg;
        if (dim.kind == DimKind::discrete) {
            dg.midpoints = dim.levels;
        } else {
            const double delta = deltas.at(i);
            const double range = dim.hi - dim.lo;
            if (delta <= 0.0)
                throw InvalidDeltaError("delta for dim '" + dim.name + "' must be positive");
            if (delta > range + 1e-12)
                throw InvalidDeltaError("delta for dim '" + dim.name + "' exceeds its range");
            dg.delta = delta;
            // L midpoints at lo + (2j-1)/2*delta; radius-delta intervals
            // cover the box when L >= range/delta - 1/2.
            const int count = std::max(1, static_cast<int>(std::ceil(range / delta - 0.5 - 1e-12)));
            for (int j = 1; j <= count; ++j) dg.midpoints.push_back(dim.lo + (2.0 * j - 1.0) * 0.5 * delta);
        }
        grid.dims.push_back(std::move(dg));
    }
    return grid;
}

namespace {

ParamVector combo_to_params(const IntervalGrid& grid, uint64_t flat_index) {
    ParamVector p;
    p.values.resize(grid.dims.size());
    for (size_t i = 0; i < grid.dims.size(); ++i) {
        const auto& mids = grid.dims[i].midpoints;
        p.values[i] = mids[flat_index % mids.size()];
        flat_index /= mids.size();
    }
    return p;
}

bool instantiable(Family family, const ParamVector& p) {
    if (family != Family::maze) return true;
    return maze_params_satisfiable(MazeParams::from_vector(p));
}

} // namespace

EvalSet build_eval_set(const ParamSpace& space, Family family, int m, EvalSetMode mode,
                       uint64_t seed, const Vec& deltas) {
    if (m < 1) throw Error("evaluation set size must be >= 1");
    EvalSet set;
    set.family = family;
    set.mode = mode;
    set.seed = seed;
    Rng rng(derive_seed(seed, "eval-set"));

    if (mode == EvalSetMode::grid) {
        const IntervalGrid grid = build_interval_grid(space, deltas);
        const double combos = grid.combination_count();
        if (combos > 1e7) {
            // Rejection sampling over flat indices; collisions are rare.
            std::set<uint64_t> used;
            while (static_cast<int>(set.params.size()) < m) {
                const uint64_t idx = rng.next_u64() % static_cast<uint64_t>(combos);
                if (!used.insert(idx).second) continue;
                auto p = combo_to_params(grid, idx);
                if (instantiable(family, p)) set.params.push_back(std::move(p));
            }
        } else {
            std::vector<uint64_t> indices;
            for (uint64_t i = 0; i < static_cast<uint64_t>(combos); ++i)
                if (instantiable(family, combo_to_params(grid, i))) indices.push_back(i);
            if (m > static_cast<int>(indices.size()))
                throw TooManyEnvironmentsError(
                    "requested " + std::to_string(m) + " grid environments but only " +
                    std::to_string(indices.size()) + " distinct combinations exist");
            rng.shuffle(indices);
            for (int i = 0; i < m; ++i) set.params.push_back(combo_to_params(grid, indices[i]));
        }
    } else {
        int guard = 0;
        while (static_cast<int>(set.params.size()) < m) {
            if (++guard > 100000)
                throw TooManyEnvironmentsError("cannot draw enough distinct random environments");
            auto p = sample_params(space, rng);
            if (!instantiable(family, p)) continue;
            bool dup = false;
            for (const auto& q : set.params)
                if (params_collide(space, p, q)) dup = true;
            if (!dup) set.params.push_back(std::move(p));
        }
    }
    for (int i = 0; i < m; ++i)
        set.seeds.push_back(derive_seed(seed, "eval-env", static_cast<uint64_t>(i)));
    return set;
}

EvalSet build_test_set(const ParamSpace& space, Family family, int m, uint64_t seed,
                       const std::vector<const EvalSet*>& avoid) {
    EvalSet set;
    set.family = family;
    set.mode = EvalSetMode::random;
    set.seed = seed;
    Rng rng(derive_seed(seed, "test-set"));
    int guard = 0;
    while (static_cast<int>(set.params.size()) < m) {
        if (++guard > 100000)
            throw TooManyEnvironmentsError("cannot draw a test set disjoint from the given sets");
        auto p = sample_params(space, rng);
        if (!instantiable(family, p)) continue;
        bool dup = false;
        for (const auto& q : set.params)
            if (params_collide(space, p, q)) dup = true;
        for (const auto* other : avoid)
            for (const auto& q : other->params)
                if (params_collide(space, p, q)) dup = true;
        if (!dup) set.params.push_back(std::move(p));
    }
    for (int i = 0; i < m; ++i)
        set.seeds.push_back(derive_seed(seed, "test-env", static_cast<uint64_t>(i)));
    return set;
}

Vec perf_vector(const StudentPolicy& policy, const EvalSet& eval_set, int episodes_per_env) {
    Vec p(eval_set.params.size());
    for (int i = 0; i < eval_set.size(); ++i)
        p[i] = evaluate_policy(policy, eval_set.params[i], eval_set.family, episodes_per_env,
                               eval_set.env_seed(i));
    return p;
}

double verify_representation_bound(const PerfFn& perf, const IntervalGrid& grid, int probe_count,
                                   Rng& rng) {
    double worst = 0.0;
    for (int i = 0; i < probe_count; ++i) {
        ParamVector probe;
        probe.values.resize(grid.dims.size());
        for (size_t d = 0; d < grid.dims.size(); ++d) {
            const auto& dim = grid.space.dims[d];
            if (dim.kind == DimKind::continuous)
                probe.values[d] = rng.uniform(dim.lo, dim.hi);
            else
                probe.values[d] =
                    dim.levels[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(dim.levels.size()) - 1))];
        }
        const ParamVector mid = grid.covering_midpoint(probe);
        worst = std::max(worst, std::abs(perf(probe) - perf(mid)));
    }
    return worst;
}

} // namespace shed
