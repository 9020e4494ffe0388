#pragma once

#include <functional>

#include "shed/teacher.hpp"

namespace shed {

// Precomputed variance-preserving noise schedule:
// beta_k = 1 - exp(beta_min/K - 0.5*(beta_max-beta_min)*(2k-1)/K^2).
struct DiffusionSchedule {
    int k_steps = 0;
    double beta_min = 0.0, beta_max = 0.0;
    Vec beta;      // beta[k-1] holds beta_k
    Vec alpha;     // 1 - beta
    Vec alpha_bar; // running product
};

DiffusionSchedule make_schedule(int k_steps, double beta_min, double beta_max);

// Closed form q(x_k | x_0): sqrt(abar_k)*x0 + sqrt(1-abar_k)*eps.
Vec forward_sample(const Vec& x0, int k, const Vec& eps, const DiffusionSchedule& sched);

// Per-dim affine map onto [-1,1] fitted from observed data; frozen between
// refits so normalization never drifts mid-batch.
struct Normalizer {
    Vec lo, hi;

    static Normalizer fit(const std::vector<const Vec*>& rows);
    Vec norm(const Vec& x) const;
    Vec denorm(const Vec& y) const;
    int dim() const { return static_cast<int>(lo.size()); }
};

struct WorldModelConfig {
    int k_steps = 5;
    double beta_min = 0.1;
    double beta_max = 10.0;
    int hidden = 64;
    double lr = 3e-4;
    int batch_size = 64;
};

// Conditional epsilon-prediction net over teacher-state transitions:
// inputs (noisy next state, condition state, condition action, timestep
// embedding), output = predicted noise of dimension m.
class StateDiffusion {
public:
    StateDiffusion(const ParamSpace& space, int state_dim, const WorldModelConfig& cfg,
                   uint64_t seed);

    // One gradient step on |eps - eps_hat|^2 over a batch of transitions;
    // returns the loss. Throws TrainingDivergedError on a non-finite loss.
    double train_batch(const std::vector<TeacherTransition>& batch, Rng& rng);

    // Deterministic loss with frozen timesteps/noise draws (finite
    // difference oracle hook), as a function of flat net params.
    double loss_at(const Vec& net_flat, const std::vector<TeacherTransition>& batch,
                   const std::vector<int>& ks, const std::vector<Vec>& eps) const;
    // Analytic gradient of the same frozen loss.
    double loss_grad(const std::vector<TeacherTransition>& batch, const std::vector<int>& ks,
                     const std::vector<Vec>& eps, Vec& dnet) const;

    // One reverse-chain step in normalized space; z = 0 at k = 1.
    Vec reverse_step(const Vec& x_k, const Vec& cond_state_norm, const Vec& cond_action_unit, int k,
                     Rng& rng) const;

    // Full reverse chain from gaussian noise; returns a raw-space state.
    Vec sample_next_state(const Vec& cond_state, const ParamVector& cond_action, Rng& rng) const;

    // Recomputes the state normalizer from the buffer contents.
    void refit_normalizer(const ReplayBuffer& b_real);

    void set_lr(double lr) { opt_.set_lr(lr); }

    const DiffusionSchedule& schedule() const { return sched_; }
    const Normalizer& normalizer() const { return norm_; }
    void set_normalizer(Normalizer n) { norm_ = std::move(n); }
    const ParamSpace& space() const { return space_; }
    int state_dim() const { return m_; }
    long trained_batches() const { return trained_batches_; }

    Mlp net;

private:
    Vec net_input(const Vec& x_k, const Vec& cond_state_norm, const Vec& cond_action_unit,
                  int k) const;

    ParamSpace space_;
    int m_;
    WorldModelConfig cfg_;
    DiffusionSchedule sched_;
    Normalizer norm_;
    Adam opt_;
    long trained_batches_ = 0;
};

enum class ActionSource { random, action_diffusion };

// Behavior-cloning diffusion over actions conditioned on the state.
class ActionDiffusion {
public:
    ActionDiffusion(const ParamSpace& space, int state_dim, const WorldModelConfig& cfg,
                    uint64_t seed);

    double train_batch(const std::vector<TeacherTransition>& batch, Rng& rng);
    ParamVector sample_action(const Vec& cond_state, Rng& rng) const;

    void set_state_normalizer(Normalizer n) { norm_ = std::move(n); }
    const DiffusionSchedule& schedule() const { return sched_; }

    Mlp net;

private:
    Vec net_input(const Vec& a_k, const Vec& cond_state_norm, int k) const;

    ParamSpace space_;
    int m_;
    WorldModelConfig cfg_;
    DiffusionSchedule sched_;
    Normalizer norm_;
    Adam opt_;
};

// Synthesizes `count` transitions: state drawn from the real buffer, action
// uniform over the space (or from the action model), next state sampled
// from the world model, reward recomputed with the teacher reward. The
// optional adjuster maps drawn actions onto the manifold real training
// actions live on (e.g. satisfiable maze level combinations), keeping the
// model on-distribution.
using ActionAdjuster = std::function<ParamVector(const ParamVector&)>;

std::vector<TeacherTransition> gen_synthetic(StateDiffusion& model, const ReplayBuffer& b_real,
                                             const RewardConfig& reward_cfg, int count, Rng& rng,
                                             ActionSource source = ActionSource::random,
                                             const ActionDiffusion* action_model = nullptr,
                                             const ActionAdjuster& adjust = nullptr);

// Empirical 1-Wasserstein distance between equally sized samples.
double wasserstein1(Vec a, Vec b);

} // namespace shed
