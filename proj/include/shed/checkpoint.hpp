#pragma once

#include <string>

#include "json.hpp"
#include "shed/student.hpp"
#include "shed/teacher.hpp"
#include "shed/worldmodel.hpp"

namespace shed {

// Versioned binary record: magic, format version, JSON metadata (kind +
// architecture descriptor), then the flat little-endian double payload.
void save_checkpoint(const std::string& path, const nlohmann::json& meta, const Vec& flat);

struct Checkpoint {
    nlohmann::json meta;
    Vec flat;
};

Checkpoint load_checkpoint(const std::string& path);

void save_student(const std::string& path, const StudentPolicy& policy, Family family);
StudentPolicy load_student(const std::string& path, Family* family = nullptr);

void save_teacher(const std::string& path, const TeacherAgent& agent, Family family);
void save_worldmodel(const std::string& path, const StateDiffusion& model, Family family);

} // namespace shed
