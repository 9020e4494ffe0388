#include "shed/lander.hpp"

#include <algorithm>
#include <cmath>

#include "shed/errors.hpp"

namespace shed {

LanderParams LanderParams::from_vector(const ParamVector& p) {
    return {p.values.at(0), p.values.at(1), p.values.at(2)};
}

ParamVector LanderParams::to_vector() const {
    return ParamVector{{gravity, wind_power, turbulence}};
}

LanderEnv::LanderEnv(const ParamVector& params, uint64_t seed) : rng_(seed) {
    validate_params(lander_param_space(), params);
    params_ = params;
    lp_ = LanderParams::from_vector(params);
    reset(seed);
}

Vec LanderEnv::reset(uint64_t seed) {
    rng_ = Rng(seed);
    x_ = rng_.uniform(-kStartJitter, kStartJitter);
    y_ = kStartHeight;
    vx_ = 0.0;
    vy_ = 0.0;
    phase_ = rng_.uniform(0.0, 2.0 * 3.14159265358979323846);
    step_count_ = 0;
    done_ = false;
    last_fx_ = last_fy_ = 0.0;
    return observation();
}

StepResult LanderEnv::step(const Vec& action) {
    if (done_) throw IllegalTransitionError("step called on a finished lander episode");

    const double ax = std::clamp(action.at(0), -1.0, 1.0);
    const double ay = std::clamp(action.at(1), -1.0, 1.0);

    double wind = lp_.wind_power * std::sin(phase_);
    if (lp_.turbulence > 0.0) wind += lp_.turbulence * rng_.normal();
    phase_ += kWindFreq;

    const double fx = ax * kThrustX + wind;
    const double fy = ay * kThrustY + lp_.gravity;
    last_fx_ = fx;
    last_fy_ = fy;

    // Semi-implicit Euler, unit mass.
    vx_ += fx * kDt;
    vy_ += fy * kDt;
    x_ += vx_ * kDt;
    y_ += vy_ * kDt;

    ++step_count_;

    StepResult r;
    if (y_ <= 0.0) {
        const double speed = std::sqrt(vx_ * vx_ + vy_ * vy_);
        const bool safe = std::abs(x_) <= kPadHalfWidth && speed <= kSafeSpeed;
        r.reward = safe ? kLandBonus : kCrashPenalty;
        r.terminal = true;
        done_ = true;
    } else {
        r.reward = -std::sqrt(x_ * x_ + y_ * y_);
        if (step_count_ >= kHorizon) {
            r.truncated = true;
            done_ = true;
        }
    }
    r.observation = observation();
    return r;
}

} // namespace shed
