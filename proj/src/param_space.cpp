#include "shed/param_space.hpp"

#include <algorithm>
#include <cmath>

#include "shed/errors.hpp"

namespace shed {

std::string family_name(Family f) {
    return f == Family::lander ? "lander" : "maze";
}

Family family_from_name(const std::string& name) {
    if (name == "lander") return Family::lander;
    if (name == "maze") return Family::maze;
    throw Error("unknown environment family '" + name + "'");
}

double ParamDim::range() const {
    if (kind == DimKind::continuous) return hi - lo;
    return levels.back() - levels.front();
}

void ParamSpace::validate() const {
    if (dims.empty()) throw InvalidParameterError("<space>", "space must have at least one dim");
    for (const auto& d : dims) {
        if (d.kind == DimKind::continuous) {
            if (!(d.lo < d.hi))
                throw InvalidParameterError(d.name, "requires lower < upper bound");
        } else {
            if (d.levels.empty())
                throw InvalidParameterError(d.name, "discrete dim requires a non-empty level set");
            if (!std::is_sorted(d.levels.begin(), d.levels.end()))
                throw InvalidParameterError(d.name, "level set must be increasing");
        }
    }
}

ParamSpace lander_param_space() {
    ParamSpace s;
    s.dims = {
        {"gravity", DimKind::continuous, -15.0, -5.0, {}},
        {"wind_power", DimKind::continuous, 0.0, 8.0, {}},
        {"turbulence", DimKind::continuous, 0.0, 2.0, {}},
    };
    return s;
}

ParamSpace maze_param_space() {
    ParamSpace s;
    s.dims = {
        {"size_level", DimKind::discrete, 0, 0, {0, 1, 2}},
        {"structure_level", DimKind::discrete, 0, 0, {0, 1, 2}},
        {"goal_level", DimKind::discrete, 0, 0, {0, 1, 2}},
        {"start_level", DimKind::discrete, 0, 0, {1, 2, 3, 4, 5}},
    };
    return s;
}

ParamSpace param_space_for(Family family) {
    return family == Family::lander ? lander_param_space() : maze_param_space();
}

void validate_params(const ParamSpace& space, const ParamVector& params) {
    if (static_cast<int>(params.values.size()) != space.size())
        throw InvalidParameterError("<vector>", "expected " + std::to_string(space.size()) +
                                                    " values, got " +
                                                    std::to_string(params.values.size()));
    for (int i = 0; i < space.size(); ++i) {
        const auto& d = space.dims[i];
        const double v = params.values[i];
        if (!std::isfinite(v)) throw InvalidParameterError(d.name, "value is not finite");
        if (d.kind == DimKind::continuous) {
            if (v < d.lo || v > d.hi)
                throw InvalidParameterError(d.name, std::to_string(v) + " outside [" +
                                                        std::to_string(d.lo) + ", " +
                                                        std::to_string(d.hi) + "]");
        } else {
            const int idx = nearest_level(d, v);
            if (std::abs(v - d.levels[idx]) > 1e-9)
                throw InvalidParameterError(d.name,
                                            std::to_string(v) + " is not a member of the level set");
        }
    }
}

ParamVector sample_params(const ParamSpace& space, Rng& rng) {
    ParamVector p;
    p.values.reserve(space.dims.size());
    for (const auto& d : space.dims) {
        if (d.kind == DimKind::continuous)
            p.values.push_back(rng.uniform(d.lo, d.hi));
        else
            p.values.push_back(d.levels[rng.uniform_int(0, static_cast<int>(d.levels.size()) - 1)]);
    }
    return p;
}

ParamVector mutate_params(const ParamSpace& space, const ParamVector& params, Rng& rng,
                          double edit_strength) {
    validate_params(space, params);
    ParamVector out = params;
    std::vector<int> chosen;
    for (int i = 0; i < space.size(); ++i)
        if (rng.uniform() < 0.5) chosen.push_back(i);
    if (chosen.empty()) chosen.push_back(rng.uniform_int(0, space.size() - 1));

    for (int i : chosen) {
        const auto& d = space.dims[i];
        if (d.kind == DimKind::continuous) {
            const double offset = rng.uniform(-1.0, 1.0) * edit_strength * (d.hi - d.lo);
            out.values[i] = std::clamp(out.values[i] + offset, d.lo, d.hi);
        } else {
            const int idx = nearest_level(d, out.values[i]);
            const int step = rng.uniform() < 0.5 ? -1 : 1;
            const int next = std::clamp(idx + step, 0, static_cast<int>(d.levels.size()) - 1);
            out.values[i] = d.levels[next];
        }
    }
    return out;
}

Vec unit_from_params(const ParamSpace& space, const ParamVector& params) {
    Vec u(space.dims.size());
    for (int i = 0; i < space.size(); ++i) {
        const auto& d = space.dims[i];
        if (d.kind == DimKind::continuous) {
            u[i] = 2.0 * (params.values[i] - d.lo) / (d.hi - d.lo) - 1.0;
        } else {
            const int idx = nearest_level(d, params.values[i]);
            const int n = static_cast<int>(d.levels.size());
            u[i] = n > 1 ? 2.0 * idx / (n - 1.0) - 1.0 : 0.0;
        }
    }
    return u;
}

ParamVector params_from_unit(const ParamSpace& space, const Vec& unit) {
    ParamVector p;
    p.values.resize(space.dims.size());
    for (int i = 0; i < space.size(); ++i) {
        const auto& d = space.dims[i];
        const double u = std::clamp(unit[i], -1.0, 1.0);
        if (d.kind == DimKind::continuous) {
            p.values[i] = d.lo + (u + 1.0) * 0.5 * (d.hi - d.lo);
        } else {
            const int n = static_cast<int>(d.levels.size());
            const int idx =
                n > 1 ? std::clamp(static_cast<int>(std::lround((u + 1.0) * 0.5 * (n - 1))), 0, n - 1)
                      : 0;
            p.values[i] = d.levels[idx];
        }
    }
    return p;
}

int nearest_level(const ParamDim& dim, double value) {
    int best = 0;
    double best_d = std::abs(value - dim.levels[0]);
    for (int i = 1; i < static_cast<int>(dim.levels.size()); ++i) {
        const double d = std::abs(value - dim.levels[i]);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

bool params_collide(const ParamSpace& space, const ParamVector& a, const ParamVector& b,
                    double min_sep_frac) {
    for (int i = 0; i < space.size(); ++i) {
        const auto& d = space.dims[i];
        if (d.kind == DimKind::discrete) {
            if (std::abs(a.values[i] - b.values[i]) > 1e-9) return false;
        } else {
            if (std::abs(a.values[i] - b.values[i]) >= min_sep_frac * (d.hi - d.lo)) return false;
        }
    }
    return true;
}

} // namespace shed
