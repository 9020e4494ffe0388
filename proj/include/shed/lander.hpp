#pragma once

#include <optional>

#include "shed/env.hpp"

namespace shed {

// Free parameters of the point-mass lander analogue.
struct LanderParams {
    double gravity = -10.0;   // downward acceleration, < 0
    double wind_power = 0.0;  // horizontal sinusoidal force scale, >= 0
    double turbulence = 0.0;  // gaussian noise scale on the wind force, >= 0

    static LanderParams from_vector(const ParamVector& p);
    ParamVector to_vector() const;
};

// 2-D point mass descending onto a pad at the origin. Semi-implicit Euler
// at a fixed dt; thrust is a force in [-1,1]^2 scaled per axis. Wind acts
// horizontally as wind_power*sin(phase_t) + turbulence*N(0,1).
class LanderEnv : public EnvInstance {
public:
    static constexpr double kDt = 0.05;
    static constexpr double kThrustX = 5.0;
    static constexpr double kThrustY = 15.0;
    static constexpr double kStartHeight = 1.5;
    static constexpr double kStartJitter = 0.5;
    static constexpr double kPadHalfWidth = 0.25;
    static constexpr double kSafeSpeed = 0.6;
    static constexpr double kWindFreq = 0.15; // phase advance per step
    static constexpr double kLandBonus = 100.0;
    static constexpr double kCrashPenalty = -100.0;
    static constexpr int kHorizon = 200;

    LanderEnv(const ParamVector& params, uint64_t seed);

    Vec reset(uint64_t seed) override;
    StepResult step(const Vec& action) override;
    Vec observe() const override { return observation(); }

    int observation_dim() const override { return 4; }
    ActionSpec action_spec() const override { return {false, 2}; }
    int horizon() const override { return kHorizon; }

    // State accessors used by the integrator tests.
    double x() const { return x_; }
    double y() const { return y_; }
    double vx() const { return vx_; }
    double vy() const { return vy_; }

    // Total force applied on the most recent step (thrust + gravity + wind).
    Vec last_force() const { return {last_fx_, last_fy_}; }

private:
    Vec observation() const { return {x_, y_, vx_, vy_}; }

    LanderParams lp_;
    Rng rng_;
    double x_ = 0.0, y_ = 0.0, vx_ = 0.0, vy_ = 0.0;
    double phase_ = 0.0;
    double last_fx_ = 0.0, last_fy_ = 0.0;
};

} // namespace shed
