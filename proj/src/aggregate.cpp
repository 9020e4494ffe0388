#include "shed/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "shed/errors.hpp"

namespace shed {

double iqm(Vec scores) {
    if (scores.empty()) throw ShapeError("iqm of an empty score list");
    std::sort(scores.begin(), scores.end());
    const size_t trim = scores.size() / 4;
    double acc = 0.0;
    size_t n = 0;
    for (size_t i = trim; i < scores.size() - trim; ++i) {
        acc += scores[i];
        ++n;
    }
    return acc / static_cast<double>(n);
}

double optimality_gap(const Vec& normalized_scores) {
    if (normalized_scores.empty()) throw ShapeError("optimality gap of an empty score list");
    double acc = 0.0;
    for (double s : normalized_scores) acc += std::max(0.0, 1.0 - s);
    return acc / static_cast<double>(normalized_scores.size());
}

double final_test_score(const RunLog& log) {
    const auto evals = log.all("test_eval");
    if (evals.empty()) throw Error("run log contains no test_eval events");
    return evals.back()->at("mean").get<double>();
}

namespace {

double mean_of(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double stderr_of(const Vec& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size() - 1)) /
           std::sqrt(static_cast<double>(v.size()));
}

} // namespace

AggregateReport aggregate(const std::vector<RunLog>& logs, double norm_lo, double norm_hi) {
    if (logs.empty()) throw Error("aggregate needs at least one run log");

    // All logs must have been generated against the same test set.
    const nlohmann::json* reference = logs.front().first("test_set");
    if (!reference) throw IncompatibleLogsError("run log lacks a test_set event");
    for (const auto& log : logs) {
        const nlohmann::json* ts = log.first("test_set");
        if (!ts || ts->at("params") != reference->at("params"))
            throw IncompatibleLogsError("run logs were produced against different test sets");
    }

    std::map<std::string, std::vector<const RunLog*>> by_method;
    for (const auto& log : logs) {
        const nlohmann::json* start = log.first("run_start");
        if (!start) throw IncompatibleLogsError("run log lacks a run_start event");
        by_method[start->at("config").at("teacher").get<std::string>()].push_back(&log);
    }

    AggregateReport report;
    report.norm_lo = norm_lo;
    report.norm_hi = norm_hi;
    const double span = norm_hi - norm_lo;

    for (auto& [method, method_logs] : by_method) {
        MethodReport mr;
        mr.method = method;
        Vec normalized;
        for (const RunLog* log : method_logs) {
            const double raw = final_test_score(*log);
            mr.final_scores.push_back(raw);
            normalized.push_back((raw - norm_lo) / span);
        }
        mr.mean = mean_of(mr.final_scores);
        mr.stderr_ = stderr_of(mr.final_scores);
        mr.iqm = iqm(normalized);
        mr.opt_gap = optimality_gap(normalized);

        // Curves: (episode, step) points present in every run of the method.
        const size_t n_envs = reference->at("params").size();
        std::map<std::pair<int, int>, Vec> points;
        std::map<std::pair<int, int>, std::vector<Vec>> env_points;
        for (const RunLog* log : method_logs)
            for (const auto* e : log->all("test_eval")) {
                const auto key = std::make_pair(e->at("ep").get<int>(), e->at("t").get<int>());
                points[key].push_back(e->at("mean").get<double>());
                auto& per_env = env_points[key];
                per_env.resize(n_envs);
                const auto returns = e->at("returns").get<Vec>();
                for (size_t i = 0; i < n_envs; ++i) per_env[i].push_back(returns[i]);
            }
        mr.env_curves.resize(n_envs);
        for (auto& [key, vals] : points) {
            if (vals.size() != method_logs.size()) continue;
            CurvePoint p;
            p.episode = key.first;
            p.step = key.second;
            p.mean = mean_of(vals);
            p.stderr_ = stderr_of(vals);
            mr.curve.push_back(p);
            for (size_t i = 0; i < n_envs; ++i) {
                CurvePoint ep = p;
                ep.mean = mean_of(env_points[key][i]);
                ep.stderr_ = stderr_of(env_points[key][i]);
                mr.env_curves[i].push_back(ep);
            }
        }
        report.methods.push_back(std::move(mr));
    }
    return report;
}

nlohmann::json AggregateReport::to_json() const {
    nlohmann::json j;
    j["norm_bounds"] = {norm_lo, norm_hi};
    j["methods"] = nlohmann::json::array();
    for (const auto& m : methods) {
        nlohmann::json jm{
            {"method", m.method},   {"final_scores", m.final_scores}, {"mean", m.mean},
            {"stderr", m.stderr_},  {"iqm", m.iqm},                   {"optimality_gap", m.opt_gap},
        };
        jm["curve"] = nlohmann::json::array();
        for (const auto& p : m.curve)
            jm["curve"].push_back(
                {{"ep", p.episode}, {"t", p.step}, {"mean", p.mean}, {"stderr", p.stderr_}});
        j["methods"].push_back(std::move(jm));
    }
    return j;
}

} // namespace shed
