#include "shed/teacher.hpp"

#include <algorithm>
#include <cmath>

#include "shed/errors.hpp"

namespace shed {

double progress_reward(const Vec& s, const Vec& s_next) {
    if (s.size() != s_next.size())
        throw ShapeError("perf vectors differ in length: " + std::to_string(s.size()) + " vs " +
                         std::to_string(s_next.size()));
    double total = 0.0;
    for (size_t i = 0; i < s.size(); ++i) total += s_next[i] - s[i];
    return total;
}

double cv(const Vec& s, const Vec& s_next, double eps_cv) {
    if (s.size() != s_next.size())
        throw ShapeError("perf vectors differ in length");
    const size_t m = s.size();
    if (m < 2)
        throw InsufficientDimensionsError("cv needs at least 2 evaluation environments");
    Vec omega(m);
    double mean = 0.0;
    for (size_t i = 0; i < m; ++i) {
        omega[i] = s_next[i] - s[i];
        mean += omega[i];
    }
    mean /= static_cast<double>(m);
    double acc = 0.0;
    for (size_t i = 0; i < m; ++i)
        acc += (omega[i] - mean) * (omega[i] - mean) / (mean * mean + eps_cv);
    return std::sqrt(acc / static_cast<double>(m - 1));
}

double teacher_reward(const Vec& s, const Vec& s_next, const RewardConfig& cfg) {
    return progress_reward(s, s_next) - cfg.eta * cv(s, s_next, cfg.eps_cv);
}

void ReplayBuffer::push(TeacherTransition t) {
    if (items_.size() == capacity_) items_.pop_front();
    items_.push_back(std::move(t));
    ++inserted_;
}

const TeacherTransition& ReplayBuffer::sample(Rng& rng) const {
    return items_[static_cast<size_t>(rng.next_u64() % items_.size())];
}

std::vector<TeacherTransition> mix_batch(const ReplayBuffer& b_real, const ReplayBuffer& b_syn,
                                         double psi, int batch_size, Rng& rng, bool* fell_back) {
    if (b_real.empty()) throw CannotTrainError("real replay buffer is empty");
    if (fell_back) *fell_back = false;
    int n_real = static_cast<int>(std::ceil(psi * batch_size));
    n_real = std::min(n_real, batch_size);
    if (n_real < batch_size && b_syn.empty()) {
        n_real = batch_size;
        if (fell_back) *fell_back = true;
    }
    std::vector<TeacherTransition> batch;
    batch.reserve(static_cast<size_t>(batch_size));
    for (int i = 0; i < n_real; ++i) batch.push_back(b_real.sample(rng));
    for (int i = n_real; i < batch_size; ++i) batch.push_back(b_syn.sample(rng));
    return batch;
}

TeacherAgent::TeacherAgent(const ParamSpace& space, int state_dim, const TeacherConfig& cfg,
                           uint64_t seed)
    : space_(space), state_dim_(state_dim), cfg_(cfg), noise_scale_(cfg.noise_init) {
    space_.validate();
    Rng rng(seed);
    const int a_dim = space_.size();
    actor = Mlp::make({state_dim, cfg.hidden, cfg.hidden, a_dim}, rng);
    for (auto& w : actor.layers().back().w.a) w *= 0.01;
    critic = Mlp::make({state_dim + a_dim, cfg.hidden, cfg.hidden, 1}, rng);
    actor_target = actor;
    critic_target = critic;
    actor_opt_ = Adam(actor.param_count(), cfg.actor_lr);
    critic_opt_ = Adam(critic.param_count(), cfg.critic_lr);
}

Vec TeacherAgent::norm_state(const Vec& s) const {
    Vec out(s.size());
    const double span = cfg_.state_hi - cfg_.state_lo;
    for (size_t i = 0; i < s.size(); ++i)
        out[i] = 2.0 * (s[i] - cfg_.state_lo) / span - 1.0;
    return out;
}

Vec TeacherAgent::critic_input(const Vec& state_norm, const Vec& unit_action) const {
    Vec in;
    in.reserve(state_norm.size() + unit_action.size());
    in.insert(in.end(), state_norm.begin(), state_norm.end());
    in.insert(in.end(), unit_action.begin(), unit_action.end());
    return in;
}

Vec TeacherAgent::actor_unit(const Vec& state) const {
    Vec u = actor.forward(norm_state(state));
    for (auto& v : u) v = std::tanh(v);
    return u;
}

ParamVector TeacherAgent::select_action(const Vec& state, bool explore, Rng& rng) const {
    Vec u = actor_unit(state);
    if (explore)
        for (auto& v : u) v = std::clamp(v + noise_scale_ * rng.normal(), -1.0, 1.0);
    return params_from_unit(space_, u);
}

double TeacherAgent::q_value(const Vec& state, const ParamVector& action) const {
    return critic.forward(critic_input(norm_state(state), unit_from_params(space_, action)))[0];
}

Vec TeacherAgent::targets_for(const std::vector<TeacherTransition>& batch) const {
    Vec y(batch.size());
    for (size_t i = 0; i < batch.size(); ++i) {
        if (batch[i].terminal) {
            y[i] = batch[i].reward;
            continue;
        }
        const Vec sn = norm_state(batch[i].next_state);
        Vec u = actor_target.forward(sn);
        for (auto& v : u) v = std::tanh(v);
        // Straight-through: the critic always sees snapped discrete dims.
        const ParamVector snapped = params_from_unit(space_, u);
        const double q_next =
            critic_target.forward(critic_input(sn, unit_from_params(space_, snapped)))[0];
        y[i] = batch[i].reward + cfg_.gamma_u * q_next;
    }
    return y;
}

double TeacherAgent::critic_loss_at(const Vec& critic_flat,
                                    const std::vector<TeacherTransition>& batch) const {
    Mlp probe = critic;
    probe.unflatten(critic_flat);
    const Vec y = targets_for(batch);
    double loss = 0.0;
    for (size_t i = 0; i < batch.size(); ++i) {
        const double q = probe.forward(critic_input(
            norm_state(batch[i].state), unit_from_params(space_, batch[i].action)))[0];
        loss += (q - y[i]) * (q - y[i]);
    }
    return loss / static_cast<double>(batch.size());
}

DdpgMetrics TeacherAgent::update(const std::vector<TeacherTransition>& batch, Rng& /*rng*/,
                                 bool update_actor) {
    if (batch.empty()) throw CannotTrainError("ddpg update on an empty batch");
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    DdpgMetrics metrics;

    // Critic regression toward the frozen targets.
    const Vec y = targets_for(batch);
    Mlp::Grad cgrad = critic.zero_grad();
    for (size_t i = 0; i < batch.size(); ++i) {
        Mlp::Cache cache;
        const double q = critic.forward(critic_input(norm_state(batch[i].state),
                                                     unit_from_params(space_, batch[i].action)),
                                        cache)[0];
        const double err = q - y[i];
        metrics.critic_loss += err * err * inv_n;
        critic.backward(cache, {2.0 * err * inv_n}, cgrad);
    }
    if (!std::isfinite(metrics.critic_loss))
        throw TrainingDivergedError("non-finite critic loss", 0);
    critic_opt_.step(critic, cgrad);

    // Actor ascends Q(s, actor(s)); gradients pass straight through the
    // discrete snap.
    Mlp::Grad agrad = actor.zero_grad();
    for (size_t i = 0; i < batch.size(); ++i) {
        const Vec sn = norm_state(batch[i].state);
        Mlp::Cache acache;
        Vec raw = actor.forward(sn, acache);
        Vec u(raw.size());
        for (size_t d = 0; d < raw.size(); ++d) u[d] = std::tanh(raw[d]);
        const ParamVector snapped = params_from_unit(space_, u);
        const Vec u_snapped = unit_from_params(space_, snapped);

        Mlp::Cache ccache;
        const double q = critic.forward(critic_input(sn, u_snapped), ccache)[0];
        metrics.actor_objective += q * inv_n;

        Vec dq_din;
        Mlp::Grad scratch = critic.zero_grad();
        critic.backward(ccache, {1.0}, scratch, &dq_din);

        Vec draw(raw.size());
        for (size_t d = 0; d < raw.size(); ++d) {
            const double dq_du = dq_din[sn.size() + d];
            // ascend: minimize -Q; tanh derivative on the actor output
            draw[d] = -dq_du * (1.0 - u[d] * u[d]) * inv_n;
        }
        actor.backward(acache, draw, agrad);
    }
    if (!std::isfinite(metrics.actor_objective))
        throw TrainingDivergedError("non-finite actor objective", 0);
    if (update_actor) {
        if (cfg_.actor_weight_decay > 0.0) {
            Vec flat = actor.flatten();
            Vec g = Mlp::flatten_grad(agrad);
            for (size_t i = 0; i < flat.size(); ++i) g[i] += cfg_.actor_weight_decay * flat[i];
            actor_opt_.step(flat, g);
            actor.unflatten(flat);
        } else {
            actor_opt_.step(actor, agrad);
        }
    }

    soft_update(actor_target, actor, cfg_.tau);
    soft_update(critic_target, critic, cfg_.tau);
    return metrics;
}

} // namespace shed
