#include "shed/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "shed/errors.hpp"

namespace shed {

namespace {

constexpr char kMagic[8] = {'S', 'H', 'E', 'D', 'C', 'K', 'P', '1'};
constexpr uint32_t kVersion = 1;

} // namespace

void save_checkpoint(const std::string& path, const nlohmann::json& meta, const Vec& flat) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint '" + path + "'");
    out.write(kMagic, sizeof(kMagic));
    const std::string meta_s = meta.dump();
    const uint32_t version = kVersion;
    const uint32_t meta_len = static_cast<uint32_t>(meta_s.size());
    const uint64_t count = flat.size();
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&meta_len), sizeof(meta_len));
    out.write(meta_s.data(), meta_len);
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    out.write(reinterpret_cast<const char*>(flat.data()),
              static_cast<std::streamsize>(count * sizeof(double)));
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read checkpoint '" + path + "'");
    char magic[8];
    in.read(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw Error("'" + path + "' is not a checkpoint file");
    uint32_t version = 0, meta_len = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (version != kVersion)
        throw Error("unsupported checkpoint version " + std::to_string(version));
    in.read(reinterpret_cast<char*>(&meta_len), sizeof(meta_len));
    std::string meta_s(meta_len, '\0');
    in.read(meta_s.data(), meta_len);
    uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    Checkpoint ckpt;
    ckpt.meta = nlohmann::json::parse(meta_s);
    ckpt.flat.resize(count);
    in.read(reinterpret_cast<char*>(ckpt.flat.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw Error("truncated checkpoint '" + path + "'");
    return ckpt;
}

void save_student(const std::string& path, const StudentPolicy& policy, Family family) {
    nlohmann::json meta{
        {"kind", "student"},
        {"family", family_name(family)},
        {"obs_dim", policy.obs_dim()},
        {"act_dim", policy.act_dim()},
        {"discrete", policy.discrete()},
        {"hidden", policy.hidden()},
        {"gamma", policy.gamma()},
        {"gae_lambda", policy.gae_lambda()},
    };
    Vec flat = policy.policy_params();
    const Vec v = policy.value_params();
    flat.insert(flat.end(), v.begin(), v.end());
    save_checkpoint(path, meta, flat);
}

StudentPolicy load_student(const std::string& path, Family* family) {
    const Checkpoint ckpt = load_checkpoint(path);
    if (ckpt.meta.value("kind", "") != "student")
        throw Error("'" + path + "' is not a student checkpoint");
    StudentConfig cfg;
    cfg.hidden = ckpt.meta.at("hidden").get<int>();
    cfg.gamma = ckpt.meta.at("gamma").get<double>();
    cfg.gae_lambda = ckpt.meta.at("gae_lambda").get<double>();
    ActionSpec spec{ckpt.meta.at("discrete").get<bool>(), ckpt.meta.at("act_dim").get<int>()};
    StudentPolicy policy = StudentPolicy::make(ckpt.meta.at("obs_dim").get<int>(), spec, cfg, 0);
    const size_t np = policy.policy_params().size();
    const size_t nv = policy.value_params().size();
    if (ckpt.flat.size() != np + nv) throw Error("checkpoint payload size mismatch");
    policy.set_policy_params(Vec(ckpt.flat.begin(), ckpt.flat.begin() + static_cast<long>(np)));
    policy.set_value_params(Vec(ckpt.flat.begin() + static_cast<long>(np), ckpt.flat.end()));
    if (family) *family = family_from_name(ckpt.meta.at("family").get<std::string>());
    return policy;
}

void save_teacher(const std::string& path, const TeacherAgent& agent, Family family) {
    nlohmann::json meta{
        {"kind", "teacher"},
        {"family", family_name(family)},
        {"state_dim", agent.state_dim()},
        {"hidden", agent.config().hidden},
    };
    Vec flat = agent.actor.flatten();
    for (const Mlp* net : {&agent.critic, &agent.actor_target, &agent.critic_target}) {
        const Vec part = net->flatten();
        flat.insert(flat.end(), part.begin(), part.end());
    }
    save_checkpoint(path, meta, flat);
}

void save_worldmodel(const std::string& path, const StateDiffusion& model, Family family) {
    nlohmann::json meta{
        {"kind", "worldmodel"},
        {"family", family_name(family)},
        {"state_dim", model.state_dim()},
        {"k_steps", model.schedule().k_steps},
        {"norm_lo", model.normalizer().lo},
        {"norm_hi", model.normalizer().hi},
    };
    save_checkpoint(path, meta, model.net.flatten());
}

} // namespace shed
