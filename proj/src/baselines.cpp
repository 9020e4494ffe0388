#include "shed/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "shed/errors.hpp"

namespace shed {

void LevelBuffer::insert(LevelEntry entry) {
    entries_.push_back(std::move(entry));
    if (entries_.size() > cfg_.capacity) {
        // Drop the lowest-score entry to keep the replay pool challenging.
        auto worst = std::min_element(
            entries_.begin(), entries_.end(),
            [](const LevelEntry& a, const LevelEntry& b) { return a.score < b.score; });
        entries_.erase(worst);
    }
}

size_t LevelBuffer::sample_index(Rng& rng) const {
    // Ranks by descending score; weight (1/rank)^(1/temperature).
    std::vector<size_t> order(entries_.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return entries_[a].score > entries_[b].score; });
    const double inv_temp = 1.0 / cfg_.rank_temperature;
    double total = 0.0;
    std::vector<double> w(order.size());
    for (size_t r = 0; r < order.size(); ++r) {
        w[r] = std::pow(1.0 / static_cast<double>(r + 1), inv_temp);
        total += w[r];
    }
    double u = rng.uniform() * total;
    for (size_t r = 0; r < order.size(); ++r) {
        u -= w[r];
        if (u <= 0.0) return order[r];
    }
    return order.back();
}

ParamVector dr_next(const ParamSpace& space, Rng& rng) {
    return sample_params(space, rng);
}

std::pair<ParamVector, LevelProvenance> accel_next(LevelBuffer& buffer, const ParamSpace& space,
                                                   Rng& rng) {
    if (!buffer.empty() && rng.uniform() < buffer.config().replay_prob) {
        const size_t idx = buffer.sample_index(rng);
        return {mutate_params(space, buffer[idx].params, rng, buffer.config().edit_strength),
                LevelProvenance::replayed_mutated};
    }
    return {sample_params(space, rng), LevelProvenance::fresh};
}

double accel_score(const RolloutBatch& batch, const GaeResult& gae) {
    if (batch.size() == 0) throw ShapeError("accel_score on an empty batch");
    return positive_value_residual(batch, gae);
}

std::string teacher_kind_name(TeacherKind k) {
    switch (k) {
        case TeacherKind::shed: return "shed";
        case TeacherKind::h_mdp: return "h-mdp";
        case TeacherKind::dr: return "dr";
        case TeacherKind::accel: return "accel";
        default: return "accel-edit";
    }
}

TeacherKind teacher_kind_from_name(const std::string& name) {
    if (name == "shed") return TeacherKind::shed;
    if (name == "h-mdp") return TeacherKind::h_mdp;
    if (name == "dr") return TeacherKind::dr;
    if (name == "accel") return TeacherKind::accel;
    if (name == "accel-edit") return TeacherKind::accel_edit;
    throw Error("unknown teacher kind '" + name + "'");
}

void reset_on_episode(LevelBuffer& buffer, TeacherKind kind) {
    if (kind == TeacherKind::accel_edit) buffer.clear();
}

} // namespace shed
