#pragma once

#include "shed/env.hpp"
#include "shed/nn.hpp"

namespace shed {

struct StudentConfig {
    int hidden = 64;
    double log_std_init = -0.5;
    double log_std_min = -5.0;
    double log_std_max = 2.0;
    double gamma = 0.999;
    double gae_lambda = 0.95;
};

struct PPOConfig {
    int epochs = 4;
    int minibatches = 5;
    double clip_ratio = 0.2;
    double entropy_coef = 0.01;
    double policy_lr = 3e-4;
    double value_lr = 3e-4;
    double value_coef = 0.5;
    int updates_per_env = 20; // cap; epochs * minibatches under the default protocol
    int rollout_len = 0;      // 0 = one rollout spanning the whole per-env budget
};

// Parallel per-step arrays collected from one rollout. `actions` holds the
// policy-side representation (category index, or pre-squash gaussian draw);
// the environment consumed its squashed form.
struct RolloutBatch {
    std::vector<Vec> observations;
    std::vector<Vec> actions;
    Vec rewards;
    std::vector<uint8_t> terminals;
    std::vector<uint8_t> truncateds;
    Vec values;
    Vec logps;
    double bootstrap_value = 0.0;

    size_t size() const { return rewards.size(); }
};

struct GaeResult {
    Vec advantages;
    Vec returns;
};

GaeResult compute_gae(const RolloutBatch& batch, double gamma, double lambda);

// Mean positive (return - value) residual: the regret proxy used for level
// scoring.
double positive_value_residual(const RolloutBatch& batch, const GaeResult& gae);

// On-policy learner: small dense policy/value nets, categorical head for
// discrete action sets and a tanh-squashed gaussian otherwise.
class StudentPolicy {
public:
    static StudentPolicy make(int obs_dim, const ActionSpec& actions, const StudentConfig& cfg,
                              uint64_t seed);

    struct Sampled {
        Vec storage;    // goes into RolloutBatch.actions
        Vec env_action; // goes into EnvInstance::step
        double logp;
        double value;
    };

    Sampled sample_action(const Vec& obs, Rng& rng) const;
    Vec greedy_action(const Vec& obs) const;
    Vec env_action_from_storage(const Vec& storage) const;
    double value(const Vec& obs) const;

    // logp and entropy of a stored action (used by tests and PPO).
    double log_prob(const Vec& obs, const Vec& storage, double* entropy = nullptr) const;

    // Action probabilities (categorical head only).
    Vec action_probabilities(const Vec& obs) const;

    bool discrete() const { return discrete_; }
    int obs_dim() const { return obs_dim_; }
    int act_dim() const { return act_dim_; }
    int hidden() const { return hidden_; }
    double gamma() const { return gamma_; }
    double gae_lambda() const { return gae_lambda_; }

    // Flat parameter access: policy params are the policy net followed by
    // log_std (gaussian head only); value params are the value net.
    Vec policy_params() const;
    void set_policy_params(const Vec& flat);
    Vec value_params() const;
    void set_value_params(const Vec& flat);

    Mlp policy_net;
    Mlp value_net;
    Vec log_std;
    Adam policy_opt;
    Adam value_opt;

    double effective_log_std(int d) const;

private:
    bool discrete_ = true;
    int obs_dim_ = 0;
    int act_dim_ = 0;
    int hidden_ = 0;
    double gamma_ = 0.999;
    double gae_lambda_ = 0.95;
    double log_std_min_ = -5.0, log_std_max_ = 2.0;
};

// One PPO minibatch with advantages already normalized.
struct Minibatch {
    std::vector<Vec> obs;
    std::vector<Vec> actions;
    Vec old_logp;
    Vec advantages;
    Vec returns;
};

struct PpoLoss {
    double policy = 0.0;  // clipped surrogate (negated objective)
    double value = 0.0;   // mean squared error
    double entropy = 0.0; // mean entropy
    double total = 0.0;   // policy - ent_coef*entropy + value_coef*value
};

// Loss only (finite-difference oracle target).
PpoLoss ppo_loss(const StudentPolicy& policy, const Minibatch& mb, const PPOConfig& cfg);

// Loss plus analytic gradients w.r.t. the flattened policy and value params.
PpoLoss ppo_loss_grad(const StudentPolicy& policy, const Minibatch& mb, const PPOConfig& cfg,
                      Vec& dpolicy, Vec& dvalue);

struct LossMetrics {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    int updates = 0;
};

// epochs x minibatches clipped-surrogate steps with per-minibatch advantage
// normalization. Throws TrainingDivergedError on a non-finite loss.
LossMetrics ppo_update(StudentPolicy& policy, const RolloutBatch& batch, const PPOConfig& cfg,
                       Rng& rng, int max_updates = 1 << 30);

RolloutBatch collect_rollout(const StudentPolicy& policy, EnvInstance& env, int steps, Rng& rng);

struct TrainSummary {
    int env_steps = 0;
    int updates = 0;
    int rollouts = 0;
    double mean_policy_loss = 0.0;
    double mean_value_loss = 0.0;
    double mean_entropy = 0.0;
    double regret_proxy = 0.0; // mean positive_value_residual across rollouts
};

TrainSummary train_in_env(StudentPolicy& policy, EnvInstance& env, int budget_steps,
                          const PPOConfig& cfg, Rng& rng);

// Greedy-mode mean undiscounted return over seeded episodes; pure in
// (weights, params, family, episodes, seed).
double evaluate_policy(const StudentPolicy& policy, const ParamVector& params, Family family,
                       int episodes, uint64_t seed);

} // namespace shed
