#include "shed/env.hpp"

#include "shed/lander.hpp"
#include "shed/maze.hpp"

namespace shed {

std::unique_ptr<EnvInstance> make_env(Family family, const ParamVector& params, uint64_t seed) {
    if (family == Family::lander) return std::make_unique<LanderEnv>(params, seed);
    return std::make_unique<MazeEnv>(params, seed);
}

} // namespace shed
