#include "shed/student.hpp"

#include <algorithm>
#include <cmath>

#include "shed/errors.hpp"

namespace shed {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178; // 0.5*ln(2*pi)
constexpr double kSquashEps = 1e-8;
constexpr double kAdvEps = 1e-8;

double log_sum_exp(const Vec& z) {
    double m = z[0];
    for (double v : z) m = std::max(m, v);
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    return m + std::log(s);
}

} // namespace

GaeResult compute_gae(const RolloutBatch& batch, double gamma, double lambda) {
    const size_t n = batch.size();
    if (n == 0) throw ShapeError("compute_gae on an empty batch");
    GaeResult out;
    out.advantages.assign(n, 0.0);
    out.returns.assign(n, 0.0);
    double running = 0.0;
    for (size_t t = n; t-- > 0;) {
        const bool done = batch.terminals[t] || batch.truncateds[t];
        const double next_v =
            done ? 0.0 : (t + 1 < n ? batch.values[t + 1] : batch.bootstrap_value);
        const double delta = batch.rewards[t] + gamma * next_v - batch.values[t];
        running = delta + gamma * lambda * (done ? 0.0 : running);
        out.advantages[t] = running;
        out.returns[t] = running + batch.values[t];
    }
    return out;
}

double positive_value_residual(const RolloutBatch& batch, const GaeResult& gae) {
    double s = 0.0;
    for (size_t t = 0; t < batch.size(); ++t)
        s += std::max(0.0, gae.returns[t] - batch.values[t]);
    return batch.size() ? s / static_cast<double>(batch.size()) : 0.0;
}

StudentPolicy StudentPolicy::make(int obs_dim, const ActionSpec& actions, const StudentConfig& cfg,
                                  uint64_t seed) {
    StudentPolicy p;
    p.discrete_ = actions.discrete;
    p.obs_dim_ = obs_dim;
    p.act_dim_ = actions.dim;
    p.hidden_ = cfg.hidden;
    p.gamma_ = cfg.gamma;
    p.gae_lambda_ = cfg.gae_lambda;
    p.log_std_min_ = cfg.log_std_min;
    p.log_std_max_ = cfg.log_std_max;

    Rng rng(seed);
    p.policy_net = Mlp::make({obs_dim, cfg.hidden, cfg.hidden, actions.dim}, rng);
    // Near-uniform initial policy: shrink the output layer.
    for (auto& w : p.policy_net.layers().back().w.a) w *= 0.01;
    p.value_net = Mlp::make({obs_dim, cfg.hidden, cfg.hidden, 1}, rng);
    if (!actions.discrete) p.log_std.assign(actions.dim, cfg.log_std_init);

    p.policy_opt = Adam(p.policy_params().size(), 3e-4);
    p.value_opt = Adam(p.value_params().size(), 3e-4);
    return p;
}

double StudentPolicy::effective_log_std(int d) const {
    return std::clamp(log_std[d], log_std_min_, log_std_max_);
}

StudentPolicy::Sampled StudentPolicy::sample_action(const Vec& obs, Rng& rng) const {
    Sampled s;
    if (discrete_) {
        const Vec logits = policy_net.forward(obs);
        const double lse = log_sum_exp(logits);
        // Inverse-CDF draw over the softmax.
        const double u = rng.uniform();
        double acc = 0.0;
        int a = act_dim_ - 1;
        for (int i = 0; i < act_dim_; ++i) {
            acc += std::exp(logits[i] - lse);
            if (u < acc) {
                a = i;
                break;
            }
        }
        s.storage = {static_cast<double>(a)};
        s.env_action = s.storage;
        s.logp = logits[a] - lse;
    } else {
        const Vec mean = policy_net.forward(obs);
        s.storage.resize(act_dim_);
        s.env_action.resize(act_dim_);
        s.logp = 0.0;
        for (int d = 0; d < act_dim_; ++d) {
            const double sigma = std::exp(effective_log_std(d));
            const double u = mean[d] + sigma * rng.normal();
            const double a = std::tanh(u);
            s.storage[d] = u;
            s.env_action[d] = a;
            s.logp += -(u - mean[d]) * (u - mean[d]) / (2.0 * sigma * sigma) -
                      effective_log_std(d) - kHalfLog2Pi - std::log(1.0 - a * a + kSquashEps);
        }
    }
    s.value = value(obs);
    return s;
}

Vec StudentPolicy::greedy_action(const Vec& obs) const {
    const Vec out = policy_net.forward(obs);
    if (discrete_) {
        int best = 0;
        for (int i = 1; i < act_dim_; ++i)
            if (out[i] > out[best]) best = i;
        return {static_cast<double>(best)};
    }
    Vec a(act_dim_);
    for (int d = 0; d < act_dim_; ++d) a[d] = std::tanh(out[d]);
    return a;
}

Vec StudentPolicy::env_action_from_storage(const Vec& storage) const {
    if (discrete_) return storage;
    Vec a(storage.size());
    for (size_t d = 0; d < storage.size(); ++d) a[d] = std::tanh(storage[d]);
    return a;
}

double StudentPolicy::value(const Vec& obs) const {
    return value_net.forward(obs)[0];
}

double StudentPolicy::log_prob(const Vec& obs, const Vec& storage, double* entropy) const {
    const Vec out = policy_net.forward(obs);
    if (discrete_) {
        const double lse = log_sum_exp(out);
        double h = 0.0;
        for (int i = 0; i < act_dim_; ++i) {
            const double lp = out[i] - lse;
            h -= std::exp(lp) * lp;
        }
        if (entropy) *entropy = h;
        return out[static_cast<int>(std::lround(storage[0]))] - lse;
    }
    double lp = 0.0, h = 0.0;
    for (int d = 0; d < act_dim_; ++d) {
        const double ls = effective_log_std(d);
        const double sigma = std::exp(ls);
        const double u = storage[d];
        const double a = std::tanh(u);
        lp += -(u - out[d]) * (u - out[d]) / (2.0 * sigma * sigma) - ls - kHalfLog2Pi -
              std::log(1.0 - a * a + kSquashEps);
        h += ls + 0.5 + kHalfLog2Pi;
    }
    if (entropy) *entropy = h;
    return lp;
}

Vec StudentPolicy::action_probabilities(const Vec& obs) const {
    const Vec logits = policy_net.forward(obs);
    const double lse = log_sum_exp(logits);
    Vec p(act_dim_);
    for (int i = 0; i < act_dim_; ++i) p[i] = std::exp(logits[i] - lse);
    return p;
}

Vec StudentPolicy::policy_params() const {
    Vec flat = policy_net.flatten();
    flat.insert(flat.end(), log_std.begin(), log_std.end());
    return flat;
}

void StudentPolicy::set_policy_params(const Vec& flat) {
    const size_t net_n = policy_net.param_count();
    Vec net_part(flat.begin(), flat.begin() + static_cast<long>(net_n));
    policy_net.unflatten(net_part);
    for (size_t d = 0; d < log_std.size(); ++d) log_std[d] = flat[net_n + d];
}

Vec StudentPolicy::value_params() const {
    return value_net.flatten();
}

void StudentPolicy::set_value_params(const Vec& flat) {
    value_net.unflatten(flat);
}

namespace {

// Shared loss/gradient core. When grads are requested, dpolicy/dvalue are
// resized and filled with d(total)/d(flat params).
PpoLoss ppo_loss_impl(const StudentPolicy& policy, const Minibatch& mb, const PPOConfig& cfg,
                      Vec* dpolicy, Vec* dvalue) {
    const size_t n = mb.obs.size();
    PpoLoss loss;
    const double inv_n = 1.0 / static_cast<double>(n);

    Mlp::Grad pgrad = policy.policy_net.zero_grad();
    Mlp::Grad vgrad = policy.value_net.zero_grad();
    Vec dlog_std(policy.log_std.size(), 0.0);

    for (size_t i = 0; i < n; ++i) {
        Mlp::Cache pcache;
        const Vec out = policy.policy_net.forward(mb.obs[i], pcache);
        const double adv = mb.advantages[i];

        double logp = 0.0, ent = 0.0;
        Vec dout(out.size(), 0.0); // d(total)/d(net output), filled below
        Vec dls(policy.log_std.size(), 0.0);

        if (policy.discrete()) {
            const double lse = log_sum_exp(out);
            Vec p(out.size());
            for (size_t j = 0; j < out.size(); ++j) p[j] = std::exp(out[j] - lse);
            const int a = static_cast<int>(std::lround(mb.actions[i][0]));
            logp = out[a] - lse;
            for (size_t j = 0; j < out.size(); ++j) {
                const double lp = out[j] - lse;
                ent -= p[j] * lp;
            }
            const double ratio = std::exp(logp - mb.old_logp[i]);
            const double lo = 1.0 - cfg.clip_ratio, hi = 1.0 + cfg.clip_ratio;
            const double clipped = std::clamp(ratio, lo, hi);
            const double s1 = ratio * adv, s2 = clipped * adv;
            loss.policy += -std::min(s1, s2) * inv_n;
            loss.entropy += ent * inv_n;
            if (dpolicy) {
                // d(surrogate)/d(logp); zero when the clipped branch is
                // active outside the trust band.
                double coef = 0.0;
                if (s1 <= s2 || (ratio > lo && ratio < hi)) coef = ratio * adv;
                for (size_t j = 0; j < out.size(); ++j) {
                    const double ind = (static_cast<int>(j) == a) ? 1.0 : 0.0;
                    const double dlogp_dz = ind - p[j];
                    const double dent_dz = -p[j] * ((out[j] - lse) + ent);
                    dout[j] = (-coef * dlogp_dz - cfg.entropy_coef * dent_dz) * inv_n;
                }
            }
        } else {
            for (size_t d = 0; d < out.size(); ++d) {
                const double ls = policy.effective_log_std(static_cast<int>(d));
                const double sigma = std::exp(ls);
                const double u = mb.actions[i][d];
                const double a = std::tanh(u);
                logp += -(u - out[d]) * (u - out[d]) / (2.0 * sigma * sigma) - ls - kHalfLog2Pi -
                        std::log(1.0 - a * a + kSquashEps);
                ent += ls + 0.5 + kHalfLog2Pi;
            }
            const double ratio = std::exp(logp - mb.old_logp[i]);
            const double lo = 1.0 - cfg.clip_ratio, hi = 1.0 + cfg.clip_ratio;
            const double clipped = std::clamp(ratio, lo, hi);
            const double s1 = ratio * adv, s2 = clipped * adv;
            loss.policy += -std::min(s1, s2) * inv_n;
            loss.entropy += ent * inv_n;
            if (dpolicy) {
                double coef = 0.0;
                if (s1 <= s2 || (ratio > lo && ratio < hi)) coef = ratio * adv;
                for (size_t d = 0; d < out.size(); ++d) {
                    const double ls = policy.effective_log_std(static_cast<int>(d));
                    // Clamp gradient: zero once the raw value leaves the band.
                    const bool inside = policy.log_std[d] == ls;
                    const double sigma = std::exp(ls);
                    const double u = mb.actions[i][d];
                    const double dlogp_dmu = (u - out[d]) / (sigma * sigma);
                    dout[d] = -coef * dlogp_dmu * inv_n;
                    if (inside) {
                        const double z = (u - out[d]) / sigma;
                        const double dlogp_dls = z * z - 1.0;
                        dls[d] = (-coef * dlogp_dls - cfg.entropy_coef * 1.0) * inv_n;
                    }
                }
            }
        }

        if (dpolicy) {
            policy.policy_net.backward(pcache, dout, pgrad);
            for (size_t d = 0; d < dls.size(); ++d) dlog_std[d] += dls[d];
        }

        Mlp::Cache vcache;
        const double v = policy.value_net.forward(mb.obs[i], vcache)[0];
        const double verr = v - mb.returns[i];
        loss.value += verr * verr * inv_n;
        if (dvalue) {
            const Vec dv{cfg.value_coef * 2.0 * verr * inv_n};
            policy.value_net.backward(vcache, dv, vgrad);
        }
    }

    loss.total = loss.policy - cfg.entropy_coef * loss.entropy + cfg.value_coef * loss.value;
    if (dpolicy) {
        *dpolicy = Mlp::flatten_grad(pgrad);
        dpolicy->insert(dpolicy->end(), dlog_std.begin(), dlog_std.end());
    }
    if (dvalue) *dvalue = Mlp::flatten_grad(vgrad);
    return loss;
}

} // namespace

PpoLoss ppo_loss(const StudentPolicy& policy, const Minibatch& mb, const PPOConfig& cfg) {
    return ppo_loss_impl(policy, mb, cfg, nullptr, nullptr);
}

PpoLoss ppo_loss_grad(const StudentPolicy& policy, const Minibatch& mb, const PPOConfig& cfg,
                      Vec& dpolicy, Vec& dvalue) {
    return ppo_loss_impl(policy, mb, cfg, &dpolicy, &dvalue);
}

LossMetrics ppo_update(StudentPolicy& policy, const RolloutBatch& batch, const PPOConfig& cfg,
                       Rng& rng, int max_updates) {
    const size_t n = batch.size();
    if (static_cast<int>(n) < cfg.minibatches)
        throw ShapeError("batch of " + std::to_string(n) + " steps cannot fill " +
                         std::to_string(cfg.minibatches) + " minibatches");

    const GaeResult gae = compute_gae(batch, policy.gamma(), policy.gae_lambda());

    LossMetrics metrics;
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;

    policy.policy_opt.set_lr(cfg.policy_lr);
    policy.value_opt.set_lr(cfg.value_lr);

    int mb_index = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(idx);
        for (int m = 0; m < cfg.minibatches; ++m) {
            if (metrics.updates >= max_updates) return metrics;
            const size_t begin = n * m / cfg.minibatches;
            const size_t end = n * (m + 1) / cfg.minibatches;

            Minibatch mb;
            for (size_t k = begin; k < end; ++k) {
                const size_t i = idx[k];
                mb.obs.push_back(batch.observations[i]);
                mb.actions.push_back(batch.actions[i]);
                mb.old_logp.push_back(batch.logps[i]);
                mb.advantages.push_back(gae.advantages[i]);
                mb.returns.push_back(gae.returns[i]);
            }
            // Per-minibatch advantage normalization.
            double am = 0.0;
            for (double a : mb.advantages) am += a;
            am /= static_cast<double>(mb.advantages.size());
            double av = 0.0;
            for (double a : mb.advantages) av += (a - am) * (a - am);
            const double astd = std::sqrt(av / static_cast<double>(mb.advantages.size()));
            for (double& a : mb.advantages) a = (a - am) / (astd + kAdvEps);

            Vec dpolicy, dvalue;
            const PpoLoss loss = ppo_loss_grad(policy, mb, cfg, dpolicy, dvalue);
            if (!std::isfinite(loss.total))
                throw TrainingDivergedError("non-finite PPO loss", mb_index);

            Vec pparams = policy.policy_params();
            policy.policy_opt.step(pparams, dpolicy);
            policy.set_policy_params(pparams);
            Vec vparams = policy.value_params();
            policy.value_opt.step(vparams, dvalue);
            policy.set_value_params(vparams);

            metrics.policy_loss += loss.policy;
            metrics.value_loss += loss.value;
            metrics.entropy += loss.entropy;
            ++metrics.updates;
            ++mb_index;
        }
    }
    if (metrics.updates > 0) {
        metrics.policy_loss /= metrics.updates;
        metrics.value_loss /= metrics.updates;
        metrics.entropy /= metrics.updates;
    }
    return metrics;
}

RolloutBatch collect_rollout(const StudentPolicy& policy, EnvInstance& env, int steps, Rng& rng) {
    RolloutBatch batch;
    Vec obs = env.done() ? env.reset(rng.next_u64()) : env.observe();
    for (int t = 0; t < steps; ++t) {
        const auto action = policy.sample_action(obs, rng);
        StepResult r = env.step(action.env_action);
        batch.observations.push_back(obs);
        batch.actions.push_back(action.storage);
        batch.rewards.push_back(r.reward);
        batch.terminals.push_back(r.terminal ? 1 : 0);
        batch.truncateds.push_back(r.truncated ? 1 : 0);
        batch.values.push_back(action.value);
        batch.logps.push_back(action.logp);
        obs = (r.terminal || r.truncated) ? env.reset(rng.next_u64()) : r.observation;
    }
    const bool ended = !batch.terminals.empty() && (batch.terminals.back() || batch.truncateds.back());
    batch.bootstrap_value = ended ? 0.0 : policy.value(obs);
    return batch;
}

TrainSummary train_in_env(StudentPolicy& policy, EnvInstance& env, int budget_steps,
                          const PPOConfig& cfg, Rng& rng) {
    TrainSummary summary;
    double score_sum = 0.0;
    while (summary.env_steps < budget_steps && summary.updates < cfg.updates_per_env) {
        const int remaining = budget_steps - summary.env_steps;
        const int n = cfg.rollout_len > 0 ? std::min(cfg.rollout_len, remaining) : remaining;
        if (n <= 0) break;
        RolloutBatch batch = collect_rollout(policy, env, n, rng);
        summary.env_steps += n;
        ++summary.rollouts;
        const GaeResult gae = compute_gae(batch, policy.gamma(), policy.gae_lambda());
        score_sum += positive_value_residual(batch, gae);
        if (static_cast<int>(batch.size()) < cfg.minibatches) break;
        const LossMetrics m =
            ppo_update(policy, batch, cfg, rng, cfg.updates_per_env - summary.updates);
        summary.mean_policy_loss += m.policy_loss * m.updates;
        summary.mean_value_loss += m.value_loss * m.updates;
        summary.mean_entropy += m.entropy * m.updates;
        summary.updates += m.updates;
    }
    if (summary.updates > 0) {
        summary.mean_policy_loss /= summary.updates;
        summary.mean_value_loss /= summary.updates;
        summary.mean_entropy /= summary.updates;
    }
    if (summary.rollouts > 0) summary.regret_proxy = score_sum / summary.rollouts;
    return summary;
}

double evaluate_policy(const StudentPolicy& policy, const ParamVector& params, Family family,
                       int episodes, uint64_t seed) {
    auto env = make_env(family, params, seed);
    double total = 0.0;
    for (int e = 0; e < episodes; ++e) {
        Vec obs = env->reset(derive_seed(seed, "episode", static_cast<uint64_t>(e)));
        double ep_return = 0.0;
        while (!env->done()) {
            const StepResult r = env->step(policy.greedy_action(obs));
            ep_return += r.reward;
            obs = r.observation;
        }
        total += ep_return;
    }
    return total / episodes;
}

} // namespace shed
