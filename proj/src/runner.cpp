#include "shed/runner.hpp"

#include <algorithm>
#include <cmath>

#include "shed/errors.hpp"
#include "shed/maze.hpp"

namespace shed {

namespace {

using nlohmann::json;

int family_obs_dim(Family f) {
    return f == Family::lander ? 4 : 11;
}

ActionSpec family_action_spec(Family f) {
    return f == Family::lander ? ActionSpec{false, 2} : ActionSpec{true, 4};
}

json params_json(const ParamVector& p) {
    return json(p.values);
}

json set_json(const EvalSet& set) {
    json rows = json::array();
    for (const auto& p : set.params) rows.push_back(params_json(p));
    return rows;
}

// Flat index over the product of discrete level sets.
uint64_t combo_index(const ParamSpace& space, const ParamVector& p) {
    uint64_t idx = 0, stride = 1;
    for (int i = 0; i < space.size(); ++i) {
        idx += stride * static_cast<uint64_t>(nearest_level(space.dims[i], p.values[i]));
        stride *= space.dims[i].levels.size();
    }
    return idx;
}

ParamVector combo_from_index(const ParamSpace& space, uint64_t idx) {
    ParamVector p;
    p.values.resize(space.dims.size());
    for (int i = 0; i < space.size(); ++i) {
        const auto& levels = space.dims[i].levels;
        p.values[i] = levels[idx % levels.size()];
        idx /= levels.size();
    }
    return p;
}

bool collides_with_sets(const ParamSpace& space, const ParamVector& p, const EvalSet& eval_set,
                        const EvalSet& test_set) {
    for (const auto& q : eval_set.params)
        if (params_collide(space, p, q)) return true;
    for (const auto& q : test_set.params)
        if (params_collide(space, p, q)) return true;
    return false;
}

// Training environments must be instantiable and disjoint from the eval and
// test sets. Deterministic adjustment: maze combos walk the level-product
// ring to the next satisfiable, non-colliding combination; continuous
// vectors get a minimal interior nudge on each colliding dim.
ParamVector adjust_for_training(const ParamSpace& space, Family family, const ParamVector& raw,
                                const EvalSet& eval_set, const EvalSet& test_set, bool* adjusted) {
    ParamVector p = raw;
    *adjusted = false;

    if (family == Family::maze) {
        MazeParams mp = MazeParams::from_vector(p);
        if (!maze_params_satisfiable(mp)) {
            // Relax toward the middle of the difficulty ladder.
            mp.goal_level = MazeLevel::medium;
            if (!maze_params_satisfiable(mp)) mp.structure_level = MazeLevel::medium;
            p = mp.to_vector();
            *adjusted = true;
        }
        if (collides_with_sets(space, p, eval_set, test_set)) {
            uint64_t total = 1;
            for (const auto& d : space.dims) total *= d.levels.size();
            const uint64_t start = combo_index(space, p);
            for (uint64_t off = 1; off < total; ++off) {
                ParamVector cand = combo_from_index(space, (start + off) % total);
                if (!maze_params_satisfiable(MazeParams::from_vector(cand))) continue;
                if (collides_with_sets(space, cand, eval_set, test_set)) continue;
                p = cand;
                *adjusted = true;
                break;
            }
        }
        return p;
    }

    int guard = 0;
    while (collides_with_sets(space, p, eval_set, test_set) && guard++ < 64) {
        for (int i = 0; i < space.size(); ++i) {
            const auto& d = space.dims[i];
            const double nudge = 2.5e-3 * (d.hi - d.lo);
            const double mid = 0.5 * (d.lo + d.hi);
            p.values[i] += p.values[i] <= mid ? nudge : -nudge;
        }
        *adjusted = true;
    }
    return p;
}

struct TestEvaluator {
    const EvalSet& test_set;
    int episodes;

    Vec returns;
    double run(const StudentPolicy& policy) {
        double mean = evaluate_on_set(policy, test_set, episodes, &returns);
        return mean;
    }
};

} // namespace

double evaluate_on_set(const StudentPolicy& policy, const EvalSet& set, int episodes_per_env,
                       Vec* per_env) {
    Vec returns(set.params.size());
    for (int i = 0; i < set.size(); ++i)
        returns[i] =
            evaluate_policy(policy, set.params[i], set.family, episodes_per_env, set.env_seed(i));
    double mean = 0.0;
    for (double r : returns) mean += r;
    mean /= static_cast<double>(returns.size());
    if (per_env) *per_env = std::move(returns);
    return mean;
}

RunArtifacts run_experiment(const RunConfig& cfg) {
    cfg.validate();
    const Family family = cfg.family;
    const TeacherKind kind = cfg.teacher;
    const ParamSpace space = param_space_for(family);
    const uint64_t master = cfg.master_seed;
    const bool hierarchical = kind == TeacherKind::shed || kind == TeacherKind::h_mdp;
    const bool diffusion_on = kind == TeacherKind::shed;
    const bool accel_like = kind == TeacherKind::accel || kind == TeacherKind::accel_edit;
    // h-MDP is SHED with the world model off and an all-real batch.
    const double psi = kind == TeacherKind::h_mdp ? 1.0 : cfg.teacher_cfg.psi;

    const EvalSet eval_set = build_eval_set(space, family, cfg.eval_set.m, cfg.eval_set.mode,
                                            cfg.eval_set.seed, cfg.eval_set.deltas);
    const EvalSet test_set =
        build_test_set(space, family, cfg.test_set.m, cfg.test_set.seed, {&eval_set});

    RunArtifacts art;
    RunLog& log = art.log;
    log.emit({{"type", "run_start"},
              {"schema_version", kRunLogSchemaVersion},
              {"config", cfg.to_json()},
              {"config_hash", cfg.config_hash()}});
    log.emit({{"type", "eval_set"}, {"params", set_json(eval_set)}});
    log.emit({{"type", "test_set"}, {"params", set_json(test_set)}});

    const int obs_dim = family_obs_dim(family);
    const ActionSpec aspec = family_action_spec(family);

    std::optional<TeacherAgent> teacher;
    std::optional<StateDiffusion> worldmodel;
    std::optional<ActionDiffusion> action_model;
    if (hierarchical) {
        teacher.emplace(space, eval_set.size(), cfg.teacher_cfg.agent,
                        derive_seed(master, "teacher-init"));
        if (diffusion_on) {
            worldmodel.emplace(space, eval_set.size(), cfg.diffusion.model,
                               derive_seed(master, "worldmodel-init"));
            if (cfg.diffusion.action_source == ActionSource::action_diffusion)
                action_model.emplace(space, eval_set.size(), cfg.diffusion.model,
                                     derive_seed(master, "actionmodel-init"));
        }
    }
    ReplayBuffer b_real(static_cast<size_t>(cfg.teacher_cfg.real_capacity));
    ReplayBuffer b_syn(static_cast<size_t>(cfg.teacher_cfg.syn_capacity));
    LevelBuffer levels(cfg.accel);

    TestEvaluator tester{test_set, cfg.test_set.episodes_per_env, {}};

    const int E = cfg.episodes;
    const int T = cfg.env_budget;
    const long total_steps = static_cast<long>(E) * T;
    long global_step = 0;
    long student_updates = 0;

    for (int ep = 1; ep <= E; ++ep) {
        if (accel_like) reset_on_episode(levels, kind);
        log.emit({{"type", "episode_start"}, {"ep", ep}, {"level_buffer", levels.size()}});

        StudentPolicy student = StudentPolicy::make(
            obs_dim, aspec, cfg.student, derive_seed(master, "student-init", static_cast<uint64_t>(ep)));

        Vec s;
        if (hierarchical) {
            s = perf_vector(student, eval_set, cfg.eval_set.episodes_per_env);
            log.emit({{"type", "perf"}, {"ep", ep}, {"t", 0}, {"values", s}});
        }

        for (int t = 1; t <= T; ++t) {
            const uint64_t step_index = static_cast<uint64_t>(global_step);

            ParamVector proposed;
            std::string provenance = "teacher";
            if (hierarchical) {
                Rng explore_rng(derive_seed(master, "teacher-explore", step_index));
                const double progress =
                    total_steps > 1 ? static_cast<double>(global_step) / (total_steps - 1) : 0.0;
                const auto& tc = cfg.teacher_cfg.agent;
                const double eps =
                    tc.eps_uniform_init + (tc.eps_uniform_final - tc.eps_uniform_init) * progress;
                if (global_step < tc.explore_warmup) {
                    proposed = sample_params(space, explore_rng);
                    provenance = "warmup-random";
                } else if (explore_rng.uniform() < eps) {
                    proposed = sample_params(space, explore_rng);
                    provenance = "eps-random";
                } else {
                    teacher->set_noise_scale(tc.noise_init +
                                             (tc.noise_final - tc.noise_init) * progress);
                    proposed = teacher->select_action(s, true, explore_rng);
                }
            } else if (kind == TeacherKind::dr) {
                Rng dr_rng(derive_seed(master, "dr", step_index));
                proposed = dr_next(space, dr_rng);
                provenance = "fresh";
            } else {
                Rng accel_rng(derive_seed(master, "accel", step_index));
                auto [p, prov] = accel_next(levels, space, accel_rng);
                proposed = p;
                provenance = prov == LevelProvenance::fresh ? "fresh" : "replayed-mutated";
            }

            bool adjusted = false;
            const ParamVector theta =
                adjust_for_training(space, family, proposed, eval_set, test_set, &adjusted);
            if (collides_with_sets(space, theta, eval_set, test_set))
                throw Error("training environment collides with the eval/test sets");

            auto env = make_env(family, theta, derive_seed(master, "env", step_index));
            json env_event{{"type", "env_generated"}, {"ep", ep},
                           {"t", t},                  {"params", params_json(theta)},
                           {"teacher", teacher_kind_name(kind)}, {"provenance", provenance},
                           {"adjusted", adjusted}};
            if (adjusted) env_event["proposed"] = params_json(proposed);
            if (family == Family::maze)
                env_event["grid"] = static_cast<const MazeEnv&>(*env).grid().to_rows();
            log.emit(std::move(env_event));

            Rng student_rng(derive_seed(master, "student", step_index));
            const TrainSummary summary =
                train_in_env(student, *env, cfg.steps_per_env, cfg.ppo, student_rng);
            student_updates += summary.updates;
            log.emit({{"type", "student_train"},
                      {"ep", ep},
                      {"t", t},
                      {"env_steps", summary.env_steps},
                      {"updates", summary.updates},
                      {"policy_loss", summary.mean_policy_loss},
                      {"value_loss", summary.mean_value_loss},
                      {"entropy", summary.mean_entropy},
                      {"regret_proxy", summary.regret_proxy}});

            if (accel_like)
                levels.insert({theta, summary.regret_proxy, 0, ep});

            if (hierarchical) {
                const Vec s_next = perf_vector(student, eval_set, cfg.eval_set.episodes_per_env);
                const double r = teacher_reward(s, s_next, cfg.teacher_cfg.reward);
                log.emit({{"type", "perf"}, {"ep", ep}, {"t", t}, {"values", s_next}});
                log.emit({{"type", "teacher_reward"},
                          {"ep", ep},
                          {"t", t},
                          {"reward", r},
                          {"progress", progress_reward(s, s_next)},
                          {"cv", cv(s, s_next, cfg.teacher_cfg.reward.eps_cv)}});
                b_real.push({s, theta, r, s_next, Origin::real, t == T});

                if (diffusion_on) {
                    worldmodel->refit_normalizer(b_real);
                    Rng wm_rng(derive_seed(master, "worldmodel", step_index));
                    double wm_loss = 0.0;
                    for (int u = 0; u < cfg.diffusion.updates_per_step; ++u) {
                        std::vector<TeacherTransition> batch;
                        const int bs = std::min<int>(cfg.diffusion.model.batch_size,
                                                     static_cast<int>(b_real.size()));
                        batch.reserve(static_cast<size_t>(bs));
                        for (int b = 0; b < bs; ++b) batch.push_back(b_real.sample(wm_rng));
                        wm_loss = worldmodel->train_batch(batch, wm_rng);
                        if (action_model) action_model->train_batch(batch, wm_rng);
                    }
                    log.emit({{"type", "worldmodel_update"},
                              {"ep", ep},
                              {"t", t},
                              {"updates", cfg.diffusion.updates_per_step},
                              {"loss", wm_loss}});

                    if (static_cast<int>(b_real.size()) >= cfg.diffusion.gate_threshold &&
                        cfg.diffusion.synthetic_per_step > 0) {
                        if (action_model)
                            action_model->set_state_normalizer(worldmodel->normalizer());
                        Rng syn_rng(derive_seed(master, "synthetic", step_index));
                        // Dream actions live on the same manifold as real
                        // training actions (maze satisfiability snap).
                        const ActionAdjuster snap = [&](const ParamVector& a) {
                            if (family != Family::maze) return a;
                            MazeParams mp = MazeParams::from_vector(a);
                            if (!maze_params_satisfiable(mp)) {
                                mp.goal_level = MazeLevel::medium;
                                if (!maze_params_satisfiable(mp))
                                    mp.structure_level = MazeLevel::medium;
                            }
                            return mp.to_vector();
                        };
                        auto synthetic = gen_synthetic(
                            *worldmodel, b_real, cfg.teacher_cfg.reward,
                            cfg.diffusion.synthetic_per_step, syn_rng,
                            cfg.diffusion.action_source,
                            action_model ? &*action_model : nullptr, snap);
                        for (auto& tr : synthetic) b_syn.push(std::move(tr));
                        log.emit({{"type", "synthetic"},
                                  {"ep", ep},
                                  {"t", t},
                                  {"count", cfg.diffusion.synthetic_per_step},
                                  {"buffer", b_syn.size()}});
                    }
                }

                if (static_cast<int>(b_real.size()) >= cfg.teacher_cfg.warmup) {
                    Rng update_rng(derive_seed(master, "teacher-update", step_index));
                    // Critic-only pretraining while actions are still uniform.
                    const bool actor_on = global_step >= cfg.teacher_cfg.agent.explore_warmup;
                    DdpgMetrics metrics;
                    bool fell_back = false;
                    for (int u = 0; u < cfg.teacher_cfg.updates_per_step; ++u) {
                        bool fb = false;
                        const auto batch = mix_batch(b_real, b_syn, psi,
                                                     cfg.teacher_cfg.batch_size, update_rng, &fb);
                        fell_back |= fb;
                        metrics = teacher->update(batch, update_rng, actor_on);
                    }
                    json update_event{{"type", "teacher_update"},
                                      {"ep", ep},
                                      {"t", t},
                                      {"updates", cfg.teacher_cfg.updates_per_step},
                                      {"critic_loss", metrics.critic_loss},
                                      {"actor_q", metrics.actor_objective}};
                    if (fell_back) update_event["warning"] = "synthetic buffer empty; real-only batch";
                    log.emit(std::move(update_event));
                }
                s = s_next;
            }

            ++global_step;

            const bool final_ep = ep == E;
            const int interval =
                final_ep ? cfg.report.final_episode_interval : cfg.report.test_eval_interval;
            if (t == T || (interval > 0 && t % interval == 0)) {
                const double mean = tester.run(student);
                log.emit({{"type", "test_eval"},
                          {"ep", ep},
                          {"t", t},
                          {"returns", tester.returns},
                          {"mean", mean}});
                if (t == T && ep == E) art.final_test_mean = mean;
            }
        }
        log.emit({{"type", "episode_end"}, {"ep", ep}});
        if (ep == E) art.student = std::move(student);
    }

    log.emit({{"type", "run_end"},
              {"env_count", total_steps},
              {"student_updates", student_updates},
              {"real_buffer", b_real.size()},
              {"synthetic_buffer", b_syn.size()}});
    if (teacher) art.teacher = std::move(*teacher);
    if (worldmodel) art.worldmodel = std::move(*worldmodel);
    return art;
}

RunArtifacts run_shed(const RunConfig& cfg) {
    if (cfg.teacher != TeacherKind::shed && cfg.teacher != TeacherKind::h_mdp)
        throw Error("run_shed requires teacher 'shed' or 'h-mdp'");
    return run_experiment(cfg);
}

RunArtifacts run_baseline(const RunConfig& cfg) {
    if (cfg.teacher == TeacherKind::shed || cfg.teacher == TeacherKind::h_mdp)
        throw Error("run_baseline requires a non-hierarchical teacher");
    return run_experiment(cfg);
}

// ------------------------------------------------- world-model fidelity ---

namespace {

// Scripted transition oracle: a fixed random net squashed into (-1, 1).
struct ScriptedTransition {
    Mlp net;

    static ScriptedTransition make(uint64_t seed) {
        Rng rng(seed);
        ScriptedTransition f;
        f.net = Mlp::make({8, 32, 5}, rng, 0.8);
        return f;
    }

    Vec operator()(const Vec& s, const Vec& a) const {
        Vec in;
        in.reserve(8);
        in.insert(in.end(), s.begin(), s.end());
        in.insert(in.end(), a.begin(), a.end());
        Vec out = net.forward(in);
        for (auto& v : out) v = std::tanh(v);
        return out;
    }
};

ParamSpace synthetic_action_space() {
    ParamSpace s;
    s.dims = {{"a1", DimKind::continuous, -1.0, 1.0, {}},
              {"a2", DimKind::continuous, -1.0, 1.0, {}},
              {"a3", DimKind::continuous, -1.0, 1.0, {}}};
    return s;
}

} // namespace

FidelityReport run_worldmodel_check(const WorldModelCheckConfig& cfg) {
    FidelityReport report;
    report.small_sigma = cfg.small_sigma;
    report.small_sigma_tol = cfg.small_sigma_tol;
    report.all_pass = true;

    const ParamSpace aspace = synthetic_action_space();
    const ScriptedTransition f = ScriptedTransition::make(derive_seed(cfg.seed, "oracle"));

    Vec sigmas = cfg.sigmas;
    sigmas.push_back(cfg.small_sigma);

    for (double sigma : sigmas) {
        const bool small_regime = sigma == cfg.small_sigma;
        Rng rng(derive_seed(cfg.seed, "regime", static_cast<uint64_t>(sigma * 1000)));

        // Oracle dataset.
        ReplayBuffer data(static_cast<size_t>(cfg.train_samples));
        for (int i = 0; i < cfg.train_samples; ++i) {
            TeacherTransition t;
            t.state.resize(5);
            for (auto& v : t.state) v = rng.uniform(-1.0, 1.0);
            t.action = sample_params(aspace, rng);
            t.next_state = f(t.state, t.action.values);
            for (auto& v : t.next_state) v += sigma * rng.normal();
            data.push(std::move(t));
        }

        StateDiffusion model(aspace, 5, cfg.model, derive_seed(cfg.seed, "model"));
        model.refit_normalizer(data);
        for (int u = 0; u < cfg.train_updates; ++u) {
            // Step decay squeezes the late-phase fit.
            if (u == cfg.train_updates / 2) model.set_lr(cfg.model.lr / 3.0);
            if (u == cfg.train_updates * 4 / 5) model.set_lr(cfg.model.lr / 10.0);
            std::vector<TeacherTransition> batch;
            batch.reserve(static_cast<size_t>(cfg.model.batch_size));
            for (int b = 0; b < cfg.model.batch_size; ++b) batch.push_back(data.sample(rng));
            model.train_batch(batch, rng);
        }

        if (!small_regime) {
            // Fixed condition; 200 oracle vs 200 synthetic next states.
            Vec s_star(5);
            for (auto& v : s_star) v = rng.uniform(-0.8, 0.8);
            ParamVector a_star = sample_params(aspace, rng);
            const Vec mean_next = f(s_star, a_star.values);

            std::vector<Vec> oracle(5, Vec(static_cast<size_t>(cfg.eval_samples)));
            std::vector<Vec> synth(5, Vec(static_cast<size_t>(cfg.eval_samples)));
            for (int i = 0; i < cfg.eval_samples; ++i) {
                for (int d = 0; d < 5; ++d) oracle[d][static_cast<size_t>(i)] = mean_next[d] + sigma * rng.normal();
                const Vec sample = model.sample_next_state(s_star, a_star, rng);
                for (int d = 0; d < 5; ++d) synth[d][static_cast<size_t>(i)] = sample[d];
            }
            SigmaFidelity sf;
            sf.sigma = sigma;
            sf.threshold = cfg.w1_factor * sigma;
            sf.pass = true;
            for (int d = 0; d < 5; ++d) {
                const double w1 = wasserstein1(oracle[d], synth[d]);
                sf.w1_per_dim.push_back(w1);
                if (w1 > sf.threshold) sf.pass = false;
            }
            report.all_pass = report.all_pass && sf.pass;
            report.regimes.push_back(std::move(sf));
        } else {
            // Grid of conditions; the model should pinpoint f(s, a).
            Vec s_star(5);
            for (auto& v : s_star) v = rng.uniform(-0.8, 0.8);
            const auto& norm = model.normalizer();
            double err_acc = 0.0;
            int err_n = 0;
            for (int gi = 0; gi < cfg.grid_side; ++gi)
                for (int gj = 0; gj < cfg.grid_side; ++gj) {
                    ParamVector a{{-1.0 + 2.0 * gi / (cfg.grid_side - 1),
                                   -1.0 + 2.0 * gj / (cfg.grid_side - 1), 0.0}};
                    const Vec target = f(s_star, a.values);
                    Vec pred(5, 0.0);
                    const int reps = 8;
                    for (int rep = 0; rep < reps; ++rep) {
                        const Vec sample = model.sample_next_state(s_star, a, rng);
                        for (int d = 0; d < 5; ++d) pred[d] += sample[d] / reps;
                    }
                    for (int d = 0; d < 5; ++d) {
                        const double span = norm.hi[d] - norm.lo[d];
                        err_acc += std::abs(pred[d] - target[d]) * 2.0 / span;
                        ++err_n;
                    }
                }
            report.small_sigma_mean_err = err_acc / err_n;
            report.small_sigma_pass = report.small_sigma_mean_err <= cfg.small_sigma_tol;
            report.all_pass = report.all_pass && report.small_sigma_pass;
        }
    }
    return report;
}

nlohmann::json FidelityReport::to_json() const {
    nlohmann::json j;
    j["regimes"] = nlohmann::json::array();
    for (const auto& r : regimes)
        j["regimes"].push_back({{"sigma", r.sigma},
                                {"w1_per_dim", r.w1_per_dim},
                                {"threshold", r.threshold},
                                {"pass", r.pass}});
    j["small_sigma"] = {{"sigma", small_sigma},
                        {"mean_abs_err", small_sigma_mean_err},
                        {"tolerance", small_sigma_tol},
                        {"pass", small_sigma_pass}};
    j["all_pass"] = all_pass;
    return j;
}

} // namespace shed
