#pragma once

#include <string>
#include <vector>

#include "shed/nn.hpp"
#include "shed/rng.hpp"

namespace shed {

enum class Family { lander, maze };

std::string family_name(Family f);
Family family_from_name(const std::string& name);

enum class DimKind { continuous, discrete };

// One free parameter of an environment family: either a bounded real or a
// finite ordered level set.
struct ParamDim {
    std::string name;
    DimKind kind = DimKind::continuous;
    double lo = 0.0;
    double hi = 1.0;
    std::vector<double> levels; // discrete only, strictly increasing

    double range() const;
};

struct ParamSpace {
    std::vector<ParamDim> dims;

    int size() const { return static_cast<int>(dims.size()); }
    void validate() const; // throws InvalidParameterError on a bad dim spec
};

struct ParamVector {
    Vec values;

    bool operator==(const ParamVector& other) const { return values == other.values; }
};

ParamSpace lander_param_space();
ParamSpace maze_param_space();
ParamSpace param_space_for(Family family);

// Throws InvalidParameterError naming the offending dim.
void validate_params(const ParamSpace& space, const ParamVector& params);

// Uniform over bounds / level sets.
ParamVector sample_params(const ParamSpace& space, Rng& rng);

// Perturbs a random non-empty subset of dims: continuous dims by a uniform
// offset within +-edit_strength*range (clamped), discrete dims by one
// saturating level step.
ParamVector mutate_params(const ParamSpace& space, const ParamVector& params, Rng& rng,
                          double edit_strength);

// Affine map to/from the unit cube [-1,1]^d used by the teacher's networks.
// Discrete dims map through their level index; from_unit snaps to the
// nearest level.
Vec unit_from_params(const ParamSpace& space, const ParamVector& params);
ParamVector params_from_unit(const ParamSpace& space, const Vec& unit);

// Index of the nearest level; value must be within tolerance of a level for
// validate_params, but this helper just snaps.
int nearest_level(const ParamDim& dim, double value);

// Disjointness test used to keep eval / test / training environments apart:
// two vectors collide when every dim matches (exactly for discrete dims,
// within min_sep_frac*range in L-infinity for continuous dims).
bool params_collide(const ParamSpace& space, const ParamVector& a, const ParamVector& b,
                    double min_sep_frac = 1e-3);

} // namespace shed
