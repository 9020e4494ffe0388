#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace shed {

inline constexpr int kRunLogSchemaVersion = 1;

// Append-only sequence of typed events, persisted as line-delimited JSON.
// Everything written here is deterministic given (config, master seed).
struct RunLog {
    std::vector<nlohmann::json> events;

    void emit(nlohmann::json event) { events.push_back(std::move(event)); }

    void save(const std::string& path) const;
    static RunLog load(const std::string& path);

    // First event of the given type, or nullptr.
    const nlohmann::json* first(const std::string& type) const;
    std::vector<const nlohmann::json*> all(const std::string& type) const;
};

} // namespace shed
