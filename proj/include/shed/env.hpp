#pragma once

#include <cstdint>
#include <memory>

#include "shed/param_space.hpp"

namespace shed {

struct StepResult {
    Vec observation;
    double reward = 0.0;
    bool terminal = false;
    bool truncated = false;
};

struct ActionSpec {
    bool discrete = false;
    int dim = 0; // action count (discrete) or vector length (continuous)
};

// One underspecified-environment instance M_theta. Single-owner: never
// shared across threads; all randomness comes from the seed handed to
// reset(), so (params, seed, actions) fully determines the trajectory.
class EnvInstance {
public:
    virtual ~EnvInstance() = default;

    virtual Vec reset(uint64_t seed) = 0;
    virtual StepResult step(const Vec& action) = 0;
    virtual Vec observe() const = 0;

    virtual int observation_dim() const = 0;
    virtual ActionSpec action_spec() const = 0;
    virtual int horizon() const = 0;

    const ParamVector& params() const { return params_; }
    int step_count() const { return step_count_; }
    bool done() const { return done_; }

protected:
    ParamVector params_;
    int step_count_ = 0;
    bool done_ = false;
};

// Validates params against the family's space (InvalidParameterError names
// the bad dim) and returns a freshly reset instance.
std::unique_ptr<EnvInstance> make_env(Family family, const ParamVector& params, uint64_t seed);

} // namespace shed
