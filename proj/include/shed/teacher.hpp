#pragma once

#include <deque>

#include "shed/nn.hpp"
#include "shed/param_space.hpp"

namespace shed {

// ------------------------------------------------------------- rewards ---

// Sum of per-environment performance deltas.
double progress_reward(const Vec& s, const Vec& s_next);

// Coefficient of variation of the per-environment improvements; eps_cv
// guards the zero-mean singularity.
double cv(const Vec& s, const Vec& s_next, double eps_cv);

struct RewardConfig {
    double eta = 0.1;     // fairness weight
    double eps_cv = 1e-8; // denominator guard
};

double teacher_reward(const Vec& s, const Vec& s_next, const RewardConfig& cfg);

// ------------------------------------------------------------- buffers ---

enum class Origin { real, synthetic };

struct TeacherTransition {
    Vec state;
    ParamVector action;
    double reward = 0.0;
    Vec next_state;
    Origin origin = Origin::real;
    bool terminal = false; // last step of a teacher episode (student reset follows)
};

// Bounded FIFO ring.
class ReplayBuffer {
public:
    explicit ReplayBuffer(size_t capacity) : capacity_(capacity) {}

    void push(TeacherTransition t);
    size_t size() const { return items_.size(); }
    size_t capacity() const { return capacity_; }
    uint64_t inserted() const { return inserted_; }
    bool empty() const { return items_.empty(); }

    const TeacherTransition& operator[](size_t i) const { return items_[i]; }
    const TeacherTransition& sample(Rng& rng) const;

private:
    size_t capacity_;
    uint64_t inserted_ = 0;
    std::deque<TeacherTransition> items_;
};

// ceil(psi*batch_size) uniform draws from b_real, remainder from b_syn;
// falls back to real-only (setting *fell_back) when b_syn is empty ahead of
// schedule. Throws CannotTrainError when b_real is empty.
std::vector<TeacherTransition> mix_batch(const ReplayBuffer& b_real, const ReplayBuffer& b_syn,
                                         double psi, int batch_size, Rng& rng,
                                         bool* fell_back = nullptr);

// ---------------------------------------------------------------- DDPG ---

struct TeacherConfig {
    int hidden = 64;
    double actor_lr = 1e-3;
    double critic_lr = 3e-3;
    double tau = 0.005;
    double gamma_u = 0.99;
    double noise_init = 0.3;  // gaussian exploration in unit-action space
    double noise_final = 0.05;
    int explore_warmup = 50; // teacher steps of uniform actions before the actor takes over
    double eps_uniform_init = 0.2;  // chance of a fully uniform proposal after warmup
    double eps_uniform_final = 0.1; // keeps contrastive data flowing all run
    double actor_weight_decay = 1e-4; // L2 pull against tanh saturation
    // affine squash applied to perf-vector inputs before the nets
    double state_lo = -1.0;
    double state_hi = 1.0;
};

struct DdpgMetrics {
    double critic_loss = 0.0;
    double actor_objective = 0.0; // mean Q(s, actor(s))
};

// Deterministic-policy-gradient actor-critic over (perf vector -> params).
// The actor emits tanh-bounded unit actions rescaled into the ParamSpace;
// discrete dims snap to the nearest level with a straight-through critic.
class TeacherAgent {
public:
    TeacherAgent(const ParamSpace& space, int state_dim, const TeacherConfig& cfg, uint64_t seed);

    ParamVector select_action(const Vec& state, bool explore, Rng& rng) const;

    // One critic step toward r + gamma*Q_t(s', actor_t(s')), one actor step
    // ascending Q(s, actor(s)), then soft target updates. The actor step
    // can be withheld (critic-only pretraining during exploration warmup).
    DdpgMetrics update(const std::vector<TeacherTransition>& batch, Rng& rng,
                       bool update_actor = true);

    // Critic loss for a batch against frozen targets (finite-diff oracle
    // hook): returns the loss as a function of the critic's flat params.
    double critic_loss_at(const Vec& critic_flat, const std::vector<TeacherTransition>& batch) const;

    double q_value(const Vec& state, const ParamVector& action) const;
    Vec actor_unit(const Vec& state) const; // tanh-squashed raw actor output

    void set_noise_scale(double s) { noise_scale_ = s; }
    double noise_scale() const { return noise_scale_; }

    const TeacherConfig& config() const { return cfg_; }
    const ParamSpace& space() const { return space_; }
    int state_dim() const { return state_dim_; }

    Mlp actor, critic, actor_target, critic_target;

private:
    Vec norm_state(const Vec& s) const;
    Vec critic_input(const Vec& state_norm, const Vec& unit_action) const;
    Vec targets_for(const std::vector<TeacherTransition>& batch) const;

    ParamSpace space_;
    int state_dim_;
    TeacherConfig cfg_;
    double noise_scale_;
    Adam actor_opt_, critic_opt_;
};

} // namespace shed
