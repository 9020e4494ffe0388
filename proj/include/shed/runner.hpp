#pragma once

#include <optional>

#include "shed/config.hpp"
#include "shed/runlog.hpp"

namespace shed {

struct RunArtifacts {
    RunLog log;
    std::optional<StudentPolicy> student; // final-episode student
    std::optional<TeacherAgent> teacher;
    std::optional<StateDiffusion> worldmodel;
    double final_test_mean = 0.0;
};

// Full episodic protocol for any teacher kind: E episodes of T generated
// environments, student reset per episode, budgets and logging identical
// across teachers.
RunArtifacts run_experiment(const RunConfig& cfg);

// Named entry points matching the two protocol flavours.
RunArtifacts run_shed(const RunConfig& cfg);     // shed / h-mdp
RunArtifacts run_baseline(const RunConfig& cfg); // dr / accel / accel-edit

// ------------------------------------------------- world-model fidelity ---

struct WorldModelCheckConfig {
    uint64_t seed = 1;
    int train_samples = 8192;
    int train_updates = 30000;
    int eval_samples = 200;        // oracle vs synthetic draws per sigma
    Vec sigmas = {1.0, 3.0, 10.0}; // distribution-recovery regimes
    double w1_factor = 0.35;       // pass when per-dim W1 <= factor * sigma
    double small_sigma = 0.05;     // near-deterministic regime
    double small_sigma_tol = 0.1;  // mean |prediction - f| in normalized units
    int grid_side = 5;             // condition grid for the small-sigma check
    WorldModelConfig model{5, 0.1, 10.0, 128, 1e-3, 64};
};

struct SigmaFidelity {
    double sigma = 0.0;
    Vec w1_per_dim;
    double threshold = 0.0;
    bool pass = false;
};

struct FidelityReport {
    std::vector<SigmaFidelity> regimes;
    double small_sigma = 0.0;
    double small_sigma_mean_err = 0.0; // normalized units
    double small_sigma_tol = 0.0;
    bool small_sigma_pass = false;
    bool all_pass = false;

    nlohmann::json to_json() const;
};

// Trains the diffusion model against a scripted transition oracle
// f(s, a) + sigma * N(0, I) with m = 5 state dims and 3 action dims, then
// compares oracle and synthetic next-state samples per noise regime.
FidelityReport run_worldmodel_check(const WorldModelCheckConfig& cfg);

// Mean greedy return over the test set (helper shared with the CLI).
double evaluate_on_set(const StudentPolicy& policy, const EvalSet& set, int episodes_per_env,
                       Vec* per_env = nullptr);

} // namespace shed
