#pragma once

#include "shed/param_space.hpp"
#include "shed/student.hpp"

namespace shed {

struct LevelEntry {
    ParamVector params;
    double score = 0.0; // regret proxy
    int visits = 0;
    int episode = 0; // insertion episode
};

struct LevelBufferConfig {
    size_t capacity = 256;
    double replay_prob = 0.5;      // rho
    double rank_temperature = 0.3; // rank-based pick: weight (1/rank)^(1/temp)
    double edit_strength = 0.1;    // mutation scale for replayed levels
};

// Score-prioritized level store for the ACCEL-style teachers. Keeps the
// highest-score entries when full.
class LevelBuffer {
public:
    explicit LevelBuffer(const LevelBufferConfig& cfg) : cfg_(cfg) {}

    void insert(LevelEntry entry);
    void clear() { entries_.clear(); }
    size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const LevelEntry& operator[](size_t i) const { return entries_[i]; }

    // Rank-based draw over scores (highest rank most likely).
    size_t sample_index(Rng& rng) const;

    const LevelBufferConfig& config() const { return cfg_; }

private:
    LevelBufferConfig cfg_;
    std::vector<LevelEntry> entries_;
};

// Domain randomization: uniform draw.
ParamVector dr_next(const ParamSpace& space, Rng& rng);

enum class LevelProvenance { fresh, replayed_mutated };

// With probability rho (and a non-empty buffer) replay-and-mutate a
// high-score level; otherwise sample fresh.
std::pair<ParamVector, LevelProvenance> accel_next(LevelBuffer& buffer, const ParamSpace& space,
                                                   Rng& rng);

// Mean positive (GAE return - value estimate) residual; the regret proxy
// used to score levels.
double accel_score(const RolloutBatch& batch, const GaeResult& gae);

enum class TeacherKind { shed, h_mdp, dr, accel, accel_edit };

std::string teacher_kind_name(TeacherKind k);
TeacherKind teacher_kind_from_name(const std::string& name);

// ACCEL-Edit clears its buffer at each episode boundary; plain ACCEL keeps
// it; everything else has no level buffer.
void reset_on_episode(LevelBuffer& buffer, TeacherKind kind);

} // namespace shed
