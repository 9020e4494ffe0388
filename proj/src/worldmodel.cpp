#include "shed/worldmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "shed/errors.hpp"

namespace shed {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

void append_time_embedding(Vec& in, int k, int k_steps) {
    const double frac = static_cast<double>(k) / k_steps;
    in.push_back(frac);
    in.push_back(std::sin(kTwoPi * frac));
    in.push_back(std::cos(kTwoPi * frac));
}

} // namespace

DiffusionSchedule make_schedule(int k_steps, double beta_min, double beta_max) {
    if (k_steps < 1) throw InvalidScheduleError("k_steps must be >= 1");
    if (!(0.0 < beta_min && beta_min < beta_max))
        throw InvalidScheduleError("need 0 < beta_min < beta_max");
    DiffusionSchedule s;
    s.k_steps = k_steps;
    s.beta_min = beta_min;
    s.beta_max = beta_max;
    const double k2 = static_cast<double>(k_steps) * k_steps;
    double abar = 1.0;
    for (int k = 1; k <= k_steps; ++k) {
        const double exponent = beta_min / k_steps - 0.5 * (beta_max - beta_min) * (2.0 * k - 1.0) / k2;
        const double beta = 1.0 - std::exp(exponent);
        if (!(beta > 0.0 && beta < 1.0))
            throw InvalidScheduleError("schedule parameters give beta_" + std::to_string(k) +
                                       " outside (0,1)");
        s.beta.push_back(beta);
        s.alpha.push_back(1.0 - beta);
        abar *= 1.0 - beta;
        s.alpha_bar.push_back(abar);
    }
    return s;
}

Vec forward_sample(const Vec& x0, int k, const Vec& eps, const DiffusionSchedule& sched) {
    const double abar = sched.alpha_bar.at(static_cast<size_t>(k - 1));
    const double a = std::sqrt(abar);
    const double b = std::sqrt(1.0 - abar);
    Vec x(x0.size());
    for (size_t i = 0; i < x0.size(); ++i) x[i] = a * x0[i] + b * eps[i];
    return x;
}

Normalizer Normalizer::fit(const std::vector<const Vec*>& rows) {
    Normalizer n;
    if (rows.empty()) return n;
    const size_t dim = rows.front()->size();
    n.lo.assign(dim, std::numeric_limits<double>::infinity());
    n.hi.assign(dim, -std::numeric_limits<double>::infinity());
    for (const Vec* row : rows)
        for (size_t i = 0; i < dim; ++i) {
            n.lo[i] = std::min(n.lo[i], (*row)[i]);
            n.hi[i] = std::max(n.hi[i], (*row)[i]);
        }
    return n;
}

Vec Normalizer::norm(const Vec& x) const {
    Vec y(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        const double span = hi[i] - lo[i];
        y[i] = span > 1e-12 ? 2.0 * (x[i] - lo[i]) / span - 1.0 : 0.0;
    }
    return y;
}

Vec Normalizer::denorm(const Vec& y) const {
    Vec x(y.size());
    for (size_t i = 0; i < y.size(); ++i) {
        const double span = hi[i] - lo[i];
        x[i] = span > 1e-12 ? lo[i] + (y[i] + 1.0) * 0.5 * span : lo[i];
    }
    return x;
}

StateDiffusion::StateDiffusion(const ParamSpace& space, int state_dim, const WorldModelConfig& cfg,
                               uint64_t seed)
    : space_(space), m_(state_dim), cfg_(cfg),
      sched_(make_schedule(cfg.k_steps, cfg.beta_min, cfg.beta_max)) {
    Rng rng(seed);
    const int in_dim = m_ + m_ + space_.size() + 3;
    net = Mlp::make({in_dim, cfg.hidden, cfg.hidden, m_}, rng);
    opt_ = Adam(net.param_count(), cfg.lr);
    norm_.lo.assign(static_cast<size_t>(m_), -1.0);
    norm_.hi.assign(static_cast<size_t>(m_), 1.0);
}

Vec StateDiffusion::net_input(const Vec& x_k, const Vec& cond_state_norm,
                              const Vec& cond_action_unit, int k) const {
    Vec in;
    in.reserve(x_k.size() + cond_state_norm.size() + cond_action_unit.size() + 3);
    in.insert(in.end(), x_k.begin(), x_k.end());
    in.insert(in.end(), cond_state_norm.begin(), cond_state_norm.end());
    in.insert(in.end(), cond_action_unit.begin(), cond_action_unit.end());
    append_time_embedding(in, k, sched_.k_steps);
    return in;
}

double StateDiffusion::train_batch(const std::vector<TeacherTransition>& batch, Rng& rng) {
    std::vector<int> ks(batch.size());
    std::vector<Vec> eps(batch.size());
    for (size_t i = 0; i < batch.size(); ++i) {
        ks[i] = rng.uniform_int(1, sched_.k_steps);
        eps[i].resize(static_cast<size_t>(m_));
        for (auto& e : eps[i]) e = rng.normal();
    }
    Vec dnet;
    const double loss = loss_grad(batch, ks, eps, dnet);
    if (!std::isfinite(loss)) throw TrainingDivergedError("non-finite diffusion loss", 0);
    Vec params = net.flatten();
    opt_.step(params, dnet);
    net.unflatten(params);
    ++trained_batches_;
    return loss;
}

double StateDiffusion::loss_at(const Vec& net_flat, const std::vector<TeacherTransition>& batch,
                               const std::vector<int>& ks, const std::vector<Vec>& eps) const {
    Mlp probe = net;
    probe.unflatten(net_flat);
    double loss = 0.0;
    for (size_t i = 0; i < batch.size(); ++i) {
        const Vec x0 = norm_.norm(batch[i].next_state);
        const Vec x_k = forward_sample(x0, ks[i], eps[i], sched_);
        const Vec eps_hat = probe.forward(net_input(x_k, norm_.norm(batch[i].state),
                                                    unit_from_params(space_, batch[i].action),
                                                    ks[i]));
        for (int d = 0; d < m_; ++d) {
            const double diff = eps[i][d] - eps_hat[d];
            loss += diff * diff;
        }
    }
    return loss / static_cast<double>(batch.size());
}

double StateDiffusion::loss_grad(const std::vector<TeacherTransition>& batch,
                                 const std::vector<int>& ks, const std::vector<Vec>& eps,
                                 Vec& dnet) const {
    Mlp::Grad grad = net.zero_grad();
    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    for (size_t i = 0; i < batch.size(); ++i) {
        const Vec x0 = norm_.norm(batch[i].next_state);
        const Vec x_k = forward_sample(x0, ks[i], eps[i], sched_);
        Mlp::Cache cache;
        const Vec eps_hat = net.forward(net_input(x_k, norm_.norm(batch[i].state),
                                                  unit_from_params(space_, batch[i].action), ks[i]),
                                        cache);
        Vec dout(static_cast<size_t>(m_));
        for (int d = 0; d < m_; ++d) {
            const double diff = eps[i][d] - eps_hat[d];
            loss += diff * diff * inv_n;
            dout[d] = -2.0 * diff * inv_n;
        }
        net.backward(cache, dout, grad);
    }
    dnet = Mlp::flatten_grad(grad);
    return loss;
}

Vec StateDiffusion::reverse_step(const Vec& x_k, const Vec& cond_state_norm,
                                 const Vec& cond_action_unit, int k, Rng& rng) const {
    const size_t idx = static_cast<size_t>(k - 1);
    const double beta = sched_.beta[idx];
    const double alpha = sched_.alpha[idx];
    const double abar = sched_.alpha_bar[idx];
    const Vec eps_hat = net.forward(net_input(x_k, cond_state_norm, cond_action_unit, k));
    Vec x(x_k.size());
    const double inv_sqrt_alpha = 1.0 / std::sqrt(alpha);
    const double coef = beta / std::sqrt(1.0 - abar);
    const double sigma = std::sqrt(beta);
    for (size_t d = 0; d < x.size(); ++d) {
        const double z = k > 1 ? rng.normal() : 0.0;
        x[d] = inv_sqrt_alpha * (x_k[d] - coef * eps_hat[d]) + sigma * z;
    }
    return x;
}

Vec StateDiffusion::sample_next_state(const Vec& cond_state, const ParamVector& cond_action,
                                      Rng& rng) const {
    const Vec s_norm = norm_.norm(cond_state);
    const Vec a_unit = unit_from_params(space_, cond_action);
    Vec x(static_cast<size_t>(m_));
    for (auto& v : x) v = rng.normal();
    for (int k = sched_.k_steps; k >= 1; --k) x = reverse_step(x, s_norm, a_unit, k, rng);
    return norm_.denorm(x);
}

void StateDiffusion::refit_normalizer(const ReplayBuffer& b_real) {
    std::vector<const Vec*> rows;
    rows.reserve(b_real.size() * 2);
    for (size_t i = 0; i < b_real.size(); ++i) {
        rows.push_back(&b_real[i].state);
        rows.push_back(&b_real[i].next_state);
    }
    if (rows.empty()) return;
    Normalizer n = Normalizer::fit(rows);
    // Constant dims would collapse the affine map; widen them slightly.
    for (int d = 0; d < n.dim(); ++d)
        if (n.hi[d] - n.lo[d] < 1e-9) {
            n.lo[d] -= 0.5;
            n.hi[d] += 0.5;
        }
    norm_ = std::move(n);
}

ActionDiffusion::ActionDiffusion(const ParamSpace& space, int state_dim,
                                 const WorldModelConfig& cfg, uint64_t seed)
    : space_(space), m_(state_dim), cfg_(cfg),
      sched_(make_schedule(cfg.k_steps, cfg.beta_min, cfg.beta_max)) {
    Rng rng(seed);
    const int a_dim = space_.size();
    net = Mlp::make({a_dim + m_ + 3, cfg.hidden, cfg.hidden, a_dim}, rng);
    opt_ = Adam(net.param_count(), cfg.lr);
    norm_.lo.assign(static_cast<size_t>(m_), -1.0);
    norm_.hi.assign(static_cast<size_t>(m_), 1.0);
}

Vec ActionDiffusion::net_input(const Vec& a_k, const Vec& cond_state_norm, int k) const {
    Vec in;
    in.reserve(a_k.size() + cond_state_norm.size() + 3);
    in.insert(in.end(), a_k.begin(), a_k.end());
    in.insert(in.end(), cond_state_norm.begin(), cond_state_norm.end());
    append_time_embedding(in, k, sched_.k_steps);
    return in;
}

double ActionDiffusion::train_batch(const std::vector<TeacherTransition>& batch, Rng& rng) {
    Mlp::Grad grad = net.zero_grad();
    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    const int a_dim = space_.size();
    for (const auto& t : batch) {
        const int k = rng.uniform_int(1, sched_.k_steps);
        Vec eps(static_cast<size_t>(a_dim));
        for (auto& e : eps) e = rng.normal();
        const Vec a0 = unit_from_params(space_, t.action);
        const Vec a_k = forward_sample(a0, k, eps, sched_);
        Mlp::Cache cache;
        const Vec eps_hat = net.forward(net_input(a_k, norm_.norm(t.state), k), cache);
        Vec dout(static_cast<size_t>(a_dim));
        for (int d = 0; d < a_dim; ++d) {
            const double diff = eps[d] - eps_hat[d];
            loss += diff * diff * inv_n;
            dout[d] = -2.0 * diff * inv_n;
        }
        net.backward(cache, dout, grad);
    }
    if (!std::isfinite(loss)) throw TrainingDivergedError("non-finite action-diffusion loss", 0);
    Vec params = net.flatten();
    opt_.step(params, Mlp::flatten_grad(grad));
    net.unflatten(params);
    return loss;
}

ParamVector ActionDiffusion::sample_action(const Vec& cond_state, Rng& rng) const {
    const Vec s_norm = norm_.norm(cond_state);
    const int a_dim = space_.size();
    Vec x(static_cast<size_t>(a_dim));
    for (auto& v : x) v = rng.normal();
    for (int k = sched_.k_steps; k >= 1; --k) {
        const size_t idx = static_cast<size_t>(k - 1);
        const double beta = sched_.beta[idx];
        const double alpha = sched_.alpha[idx];
        const double abar = sched_.alpha_bar[idx];
        const Vec eps_hat = net.forward(net_input(x, s_norm, k));
        const double inv_sqrt_alpha = 1.0 / std::sqrt(alpha);
        const double coef = beta / std::sqrt(1.0 - abar);
        const double sigma = std::sqrt(beta);
        for (int d = 0; d < a_dim; ++d) {
            const double z = k > 1 ? rng.normal() : 0.0;
            x[d] = inv_sqrt_alpha * (x[d] - coef * eps_hat[d]) + sigma * z;
        }
    }
    return params_from_unit(space_, x); // clamps into bounds, snaps levels
}

std::vector<TeacherTransition> gen_synthetic(StateDiffusion& model, const ReplayBuffer& b_real,
                                             const RewardConfig& reward_cfg, int count, Rng& rng,
                                             ActionSource source,
                                             const ActionDiffusion* action_model,
                                             const ActionAdjuster& adjust) {
    if (b_real.empty()) throw NoRealDataError("no real transitions to condition on");
    std::vector<TeacherTransition> out;
    out.reserve(static_cast<size_t>(count));
    Rng space_rng(rng.next_u64());
    for (int i = 0; i < count; ++i) {
        TeacherTransition t;
        t.state = b_real.sample(rng).state;
        t.action = source == ActionSource::action_diffusion && action_model
                       ? action_model->sample_action(t.state, rng)
                       : sample_params(model.space(), space_rng);
        if (adjust) t.action = adjust(t.action);
        t.next_state = model.sample_next_state(t.state, t.action, rng);
        t.reward = teacher_reward(t.state, t.next_state, reward_cfg);
        t.origin = Origin::synthetic;
        out.push_back(std::move(t));
    }
    return out;
}

double wasserstein1(Vec a, Vec b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
    return a.empty() ? 0.0 : acc / static_cast<double>(a.size());
}

} // namespace shed
