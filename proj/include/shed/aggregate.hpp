#pragma once

#include "shed/runlog.hpp"

namespace shed {

using Vec = std::vector<double>;

// Mean of the middle 50%: floor(n/4) observations trimmed from each end
// after sorting.
double iqm(Vec scores);

// Mean of max(0, 1 - normalized score).
double optimality_gap(const Vec& normalized_scores);

struct CurvePoint {
    int episode = 0;
    int step = 0; // budget step within the episode
    double mean = 0.0;
    double stderr_ = 0.0;
};

struct MethodReport {
    std::string method;
    Vec final_scores; // per run, raw
    double mean = 0.0;
    double stderr_ = 0.0;
    double iqm = 0.0;     // over normalized finals
    double opt_gap = 0.0; // over normalized finals
    std::vector<CurvePoint> curve;
    std::vector<std::vector<CurvePoint>> env_curves; // per test environment
};

struct AggregateReport {
    double norm_lo = 0.0, norm_hi = 1.0;
    std::vector<MethodReport> methods;

    nlohmann::json to_json() const;
};

// Groups logs by teacher kind; all logs must share the test set
// (IncompatibleLogsError otherwise). Bounds come from the caller, not the
// data, so reports replay exactly.
AggregateReport aggregate(const std::vector<RunLog>& logs, double norm_lo, double norm_hi);

// Raw final score (mean test return at the end of the last episode).
double final_test_score(const RunLog& log);

} // namespace shed
