#include "shed/runlog.hpp"

#include <fstream>

#include "shed/errors.hpp"

namespace shed {

void RunLog::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write run log '" + path + "'");
    for (const auto& e : events) out << e.dump() << "\n";
}

RunLog RunLog::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read run log '" + path + "'");
    RunLog log;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            log.events.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw Error("malformed run log line " + std::to_string(lineno) + " in '" + path +
                        "': " + e.what());
        }
    }
    return log;
}

const nlohmann::json* RunLog::first(const std::string& type) const {
    for (const auto& e : events)
        if (e.value("type", "") == type) return &e;
    return nullptr;
}

std::vector<const nlohmann::json*> RunLog::all(const std::string& type) const {
    std::vector<const nlohmann::json*> out;
    for (const auto& e : events)
        if (e.value("type", "") == type) out.push_back(&e);
    return out;
}

} // namespace shed
