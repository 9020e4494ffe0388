#pragma once

#include <string>

#include "json.hpp"
#include "shed/baselines.hpp"
#include "shed/eval_rep.hpp"
#include "shed/teacher.hpp"
#include "shed/worldmodel.hpp"

namespace shed {

struct EvalSetSpec {
    int m = 10;
    EvalSetMode mode = EvalSetMode::grid;
    uint64_t seed = 7;
    int episodes_per_env = 2;
    Vec deltas; // continuous dims only
};

struct TestSetSpec {
    int m = 10;
    uint64_t seed = 11;
    int episodes_per_env = 2;
};

struct DiffusionSection {
    WorldModelConfig model;
    int updates_per_step = 20;
    int gate_threshold = 64; // min real transitions before synthesis starts
    int synthetic_per_step = 10;
    ActionSource action_source = ActionSource::random;
};

struct TeacherSection {
    TeacherConfig agent;
    RewardConfig reward;
    double psi = 0.25;
    int batch_size = 64;
    int real_capacity = 10000;
    int syn_capacity = 1000;
    int warmup = 5;           // min real transitions before DDPG updates
    int updates_per_step = 1; // DDPG updates per teacher step
};

struct ReportSection {
    int test_eval_interval = 0;      // within-episode cadence; 0 = episode end only
    int final_episode_interval = 5;  // denser cadence during the final episode
    double norm_lo = -1.2;           // per-family [worst, best] normalization bounds
    double norm_hi = 1.0;
};

struct RunConfig {
    Family family = Family::maze;
    TeacherKind teacher = TeacherKind::shed;
    int episodes = 10;   // E
    int env_budget = 50; // T environments per episode
    int steps_per_env = 400; // C
    uint64_t master_seed = 1;

    StudentConfig student;
    PPOConfig ppo;
    EvalSetSpec eval_set;
    TestSetSpec test_set;
    TeacherSection teacher_cfg;
    DiffusionSection diffusion;
    LevelBufferConfig accel;
    ReportSection report;

    static RunConfig defaults(Family family);

    // Strict parser: unknown keys raise ConfigParseError listing them.
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load_file(const std::string& path);
    nlohmann::json to_json() const;

    uint64_t config_hash() const;
    void validate() const;
};

} // namespace shed
