#include "shed/config.hpp"

#include <fstream>
#include <set>

#include "shed/errors.hpp"

namespace shed {

namespace {

using nlohmann::json;

// Tracks consumed keys so anything left over can be reported as unknown.
class StrictObject {
public:
    StrictObject(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigParseError(path_ + " must be an object");
    }

    template <typename T>
    void get(const char* key, T& target) {
        if (auto it = j_.find(key); it != j_.end()) {
            target = it->get<T>();
            used_.insert(key);
        }
    }

    void get_string(const char* key, std::string& target) { get<std::string>(key, target); }

    bool has(const char* key) {
        return j_.contains(key);
    }

    const json* section(const char* key) {
        if (auto it = j_.find(key); it != j_.end()) {
            used_.insert(key);
            return &*it;
        }
        return nullptr;
    }

    void finish(std::vector<std::string>& unknown) const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key()))
                unknown.push_back(path_.empty() ? it.key() : path_ + "." + it.key());
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

} // namespace

RunConfig RunConfig::defaults(Family family) {
    RunConfig cfg;
    cfg.family = family;
    if (family == Family::lander) {
        // delta = range/5 per dim: 125 grid combinations
        cfg.eval_set.deltas = {2.0, 1.6, 0.4};
        cfg.report.norm_lo = -400.0;
        cfg.report.norm_hi = 100.0;
        cfg.teacher_cfg.agent.state_lo = -400.0;
        cfg.teacher_cfg.agent.state_hi = 100.0;
    } else {
        cfg.report.norm_lo = -1.2;
        cfg.report.norm_hi = 1.0;
        cfg.teacher_cfg.agent.state_lo = -1.2;
        cfg.teacher_cfg.agent.state_hi = 1.0;
    }
    return cfg;
}

RunConfig RunConfig::from_json(const json& j) {
    std::vector<std::string> unknown;
    StrictObject root(j, "");

    std::string family_s = "maze";
    root.get_string("family", family_s);
    RunConfig cfg = defaults(family_from_name(family_s));

    std::string teacher_s = teacher_kind_name(cfg.teacher);
    root.get_string("teacher", teacher_s);
    cfg.teacher = teacher_kind_from_name(teacher_s);

    root.get("episodes", cfg.episodes);
    root.get("env_budget", cfg.env_budget);
    root.get("steps_per_env", cfg.steps_per_env);
    root.get("master_seed", cfg.master_seed);

    if (const json* s = root.section("student")) {
        StrictObject o(*s, "student");
        o.get("hidden", cfg.student.hidden);
        o.get("log_std_init", cfg.student.log_std_init);
        o.get("gamma", cfg.student.gamma);
        o.get("gae_lambda", cfg.student.gae_lambda);
        o.get("epochs", cfg.ppo.epochs);
        o.get("minibatches", cfg.ppo.minibatches);
        o.get("clip_ratio", cfg.ppo.clip_ratio);
        o.get("entropy_coef", cfg.ppo.entropy_coef);
        o.get("policy_lr", cfg.ppo.policy_lr);
        o.get("value_lr", cfg.ppo.value_lr);
        o.get("value_coef", cfg.ppo.value_coef);
        o.get("updates_per_env", cfg.ppo.updates_per_env);
        o.get("rollout_len", cfg.ppo.rollout_len);
        o.finish(unknown);
    }

    if (const json* s = root.section("eval_set")) {
        StrictObject o(*s, "eval_set");
        o.get("m", cfg.eval_set.m);
        std::string mode = cfg.eval_set.mode == EvalSetMode::grid ? "grid" : "random";
        o.get_string("mode", mode);
        if (mode == "grid")
            cfg.eval_set.mode = EvalSetMode::grid;
        else if (mode == "random")
            cfg.eval_set.mode = EvalSetMode::random;
        else
            throw ConfigParseError("eval_set.mode must be 'grid' or 'random'");
        o.get("seed", cfg.eval_set.seed);
        o.get("episodes_per_env", cfg.eval_set.episodes_per_env);
        o.get("deltas", cfg.eval_set.deltas);
        o.finish(unknown);
    }

    if (const json* s = root.section("test_set")) {
        StrictObject o(*s, "test_set");
        o.get("m", cfg.test_set.m);
        o.get("seed", cfg.test_set.seed);
        o.get("episodes_per_env", cfg.test_set.episodes_per_env);
        o.finish(unknown);
    }

    if (const json* s = root.section("teacher_cfg")) {
        StrictObject o(*s, "teacher_cfg");
        o.get("hidden", cfg.teacher_cfg.agent.hidden);
        o.get("actor_lr", cfg.teacher_cfg.agent.actor_lr);
        o.get("critic_lr", cfg.teacher_cfg.agent.critic_lr);
        o.get("tau", cfg.teacher_cfg.agent.tau);
        o.get("gamma_u", cfg.teacher_cfg.agent.gamma_u);
        o.get("noise_init", cfg.teacher_cfg.agent.noise_init);
        o.get("noise_final", cfg.teacher_cfg.agent.noise_final);
        o.get("explore_warmup", cfg.teacher_cfg.agent.explore_warmup);
        o.get("actor_weight_decay", cfg.teacher_cfg.agent.actor_weight_decay);
        o.get("eps_uniform_init", cfg.teacher_cfg.agent.eps_uniform_init);
        o.get("eps_uniform_final", cfg.teacher_cfg.agent.eps_uniform_final);
        o.get("state_lo", cfg.teacher_cfg.agent.state_lo);
        o.get("state_hi", cfg.teacher_cfg.agent.state_hi);
        o.get("eta", cfg.teacher_cfg.reward.eta);
        o.get("eps_cv", cfg.teacher_cfg.reward.eps_cv);
        o.get("psi", cfg.teacher_cfg.psi);
        o.get("batch_size", cfg.teacher_cfg.batch_size);
        o.get("real_capacity", cfg.teacher_cfg.real_capacity);
        o.get("syn_capacity", cfg.teacher_cfg.syn_capacity);
        o.get("warmup", cfg.teacher_cfg.warmup);
        o.get("updates_per_step", cfg.teacher_cfg.updates_per_step);
        o.finish(unknown);
    }

    if (const json* s = root.section("diffusion")) {
        StrictObject o(*s, "diffusion");
        o.get("k_steps", cfg.diffusion.model.k_steps);
        o.get("beta_min", cfg.diffusion.model.beta_min);
        o.get("beta_max", cfg.diffusion.model.beta_max);
        o.get("hidden", cfg.diffusion.model.hidden);
        o.get("lr", cfg.diffusion.model.lr);
        o.get("batch_size", cfg.diffusion.model.batch_size);
        o.get("updates_per_step", cfg.diffusion.updates_per_step);
        o.get("gate_threshold", cfg.diffusion.gate_threshold);
        o.get("synthetic_per_step", cfg.diffusion.synthetic_per_step);
        std::string src = "random";
        o.get_string("action_source", src);
        if (src == "random")
            cfg.diffusion.action_source = ActionSource::random;
        else if (src == "action_diffusion")
            cfg.diffusion.action_source = ActionSource::action_diffusion;
        else
            throw ConfigParseError("diffusion.action_source must be 'random' or 'action_diffusion'");
        o.finish(unknown);
    }

    if (const json* s = root.section("accel")) {
        StrictObject o(*s, "accel");
        size_t cap = cfg.accel.capacity;
        o.get("capacity", cap);
        cfg.accel.capacity = cap;
        o.get("replay_prob", cfg.accel.replay_prob);
        o.get("rank_temperature", cfg.accel.rank_temperature);
        o.get("edit_strength", cfg.accel.edit_strength);
        o.finish(unknown);
    }

    if (const json* s = root.section("report")) {
        StrictObject o(*s, "report");
        o.get("test_eval_interval", cfg.report.test_eval_interval);
        o.get("final_episode_interval", cfg.report.final_episode_interval);
        Vec bounds{cfg.report.norm_lo, cfg.report.norm_hi};
        o.get("norm_bounds", bounds);
        if (bounds.size() != 2 || !(bounds[0] < bounds[1]))
            throw ConfigParseError("report.norm_bounds must be [worst, best] with worst < best");
        cfg.report.norm_lo = bounds[0];
        cfg.report.norm_hi = bounds[1];
        o.finish(unknown);
    }

    root.finish(unknown);
    if (!unknown.empty()) {
        std::string msg = "unknown config keys:";
        for (const auto& k : unknown) msg += " " + k;
        throw ConfigParseError(msg);
    }
    cfg.validate();
    return cfg;
}

RunConfig RunConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigParseError("malformed JSON in '" + path + "': " + e.what());
    }
    return from_json(j);
}

nlohmann::json RunConfig::to_json() const {
    json j;
    j["family"] = family_name(family);
    j["teacher"] = teacher_kind_name(teacher);
    j["episodes"] = episodes;
    j["env_budget"] = env_budget;
    j["steps_per_env"] = steps_per_env;
    j["master_seed"] = master_seed;
    j["student"] = {
        {"hidden", student.hidden},
        {"log_std_init", student.log_std_init},
        {"gamma", student.gamma},
        {"gae_lambda", student.gae_lambda},
        {"epochs", ppo.epochs},
        {"minibatches", ppo.minibatches},
        {"clip_ratio", ppo.clip_ratio},
        {"entropy_coef", ppo.entropy_coef},
        {"policy_lr", ppo.policy_lr},
        {"value_lr", ppo.value_lr},
        {"value_coef", ppo.value_coef},
        {"updates_per_env", ppo.updates_per_env},
        {"rollout_len", ppo.rollout_len},
    };
    j["eval_set"] = {
        {"m", eval_set.m},
        {"mode", eval_set.mode == EvalSetMode::grid ? "grid" : "random"},
        {"seed", eval_set.seed},
        {"episodes_per_env", eval_set.episodes_per_env},
        {"deltas", eval_set.deltas},
    };
    j["test_set"] = {
        {"m", test_set.m},
        {"seed", test_set.seed},
        {"episodes_per_env", test_set.episodes_per_env},
    };
    j["teacher_cfg"] = {
        {"hidden", teacher_cfg.agent.hidden},
        {"actor_lr", teacher_cfg.agent.actor_lr},
        {"critic_lr", teacher_cfg.agent.critic_lr},
        {"tau", teacher_cfg.agent.tau},
        {"gamma_u", teacher_cfg.agent.gamma_u},
        {"noise_init", teacher_cfg.agent.noise_init},
        {"noise_final", teacher_cfg.agent.noise_final},
        {"explore_warmup", teacher_cfg.agent.explore_warmup},
        {"actor_weight_decay", teacher_cfg.agent.actor_weight_decay},
        {"eps_uniform_init", teacher_cfg.agent.eps_uniform_init},
        {"eps_uniform_final", teacher_cfg.agent.eps_uniform_final},
        {"state_lo", teacher_cfg.agent.state_lo},
        {"state_hi", teacher_cfg.agent.state_hi},
        {"eta", teacher_cfg.reward.eta},
        {"eps_cv", teacher_cfg.reward.eps_cv},
        {"psi", teacher_cfg.psi},
        {"batch_size", teacher_cfg.batch_size},
        {"real_capacity", teacher_cfg.real_capacity},
        {"syn_capacity", teacher_cfg.syn_capacity},
        {"warmup", teacher_cfg.warmup},
        {"updates_per_step", teacher_cfg.updates_per_step},
    };
    j["diffusion"] = {
        {"k_steps", diffusion.model.k_steps},
        {"beta_min", diffusion.model.beta_min},
        {"beta_max", diffusion.model.beta_max},
        {"hidden", diffusion.model.hidden},
        {"lr", diffusion.model.lr},
        {"batch_size", diffusion.model.batch_size},
        {"updates_per_step", diffusion.updates_per_step},
        {"gate_threshold", diffusion.gate_threshold},
        {"synthetic_per_step", diffusion.synthetic_per_step},
        {"action_source",
         diffusion.action_source == ActionSource::random ? "random" : "action_diffusion"},
    };
    j["accel"] = {
        {"capacity", accel.capacity},
        {"replay_prob", accel.replay_prob},
        {"rank_temperature", accel.rank_temperature},
        {"edit_strength", accel.edit_strength},
    };
    j["report"] = {
        {"test_eval_interval", report.test_eval_interval},
        {"final_episode_interval", report.final_episode_interval},
        {"norm_bounds", Vec{report.norm_lo, report.norm_hi}},
    };
    return j;
}

uint64_t RunConfig::config_hash() const {
    return detail::fnv1a(to_json().dump());
}

void RunConfig::validate() const {
    if (episodes < 1) throw ConfigParseError("episodes must be >= 1");
    if (env_budget < 1) throw ConfigParseError("env_budget must be >= 1");
    if (steps_per_env < 1) throw ConfigParseError("steps_per_env must be >= 1");
    if (eval_set.m < 1 || test_set.m < 1) throw ConfigParseError("set sizes must be >= 1");
    if (eval_set.seed == test_set.seed)
        throw ConfigParseError("eval_set.seed and test_set.seed must differ");
    if (!(teacher_cfg.psi >= 0.0 && teacher_cfg.psi <= 1.0))
        throw ConfigParseError("psi must lie in [0,1]");
    if (!(ppo.clip_ratio > 0.0 && ppo.clip_ratio < 1.0))
        throw ConfigParseError("clip_ratio must lie in (0,1)");
    if (ppo.epochs < 1 || ppo.minibatches < 1)
        throw ConfigParseError("epochs and minibatches must be >= 1");
    if (teacher_cfg.reward.eta < 0.0) throw ConfigParseError("eta must be >= 0");
    if (teacher_cfg.reward.eps_cv <= 0.0) throw ConfigParseError("eps_cv must be > 0");
}

} // namespace shed
