#pragma once

#include "bench/utility.hpp"
#include "common/money.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace ouro::bench {

struct ProblemMetrics {
    double score = 0;          // [0, 1]
    Money cost;                // dollars
    double time = 0;           // seconds
    std::int64_t tokens = 0;
    double cached_fraction = 0; // cached prompt tokens / prompt tokens
    bool timed_out = false;
};

struct ProblemResult {
    std::string benchmark_id;
    std::string problem_id;
    ProblemMetrics metrics;
    double utility = 0; // final utility of this problem
    std::string answer;
    std::string status; // returned | cancelled | timed_out | budget_exhausted | error
    std::string error;
};

// Per-benchmark averages over its problems.
struct BenchmarkRow {
    std::string benchmark_id;
    std::size_t problems = 0;
    double accuracy = 0; // mean score
    double cost = 0;
    double time = 0;
    double tokens = 0;
    double cached_pct = 0; // mean cached_fraction, as a percentage
    double utility = 0;    // mean final utility
    std::size_t timeouts = 0;
};

struct Report {
    std::vector<ProblemResult> problems;
    std::vector<BenchmarkRow> rows; // benchmark order of first appearance
    double p_score = 0;             // mean of benchmark accuracies
    double utility = 0;             // mean of benchmark mean utilities

    // Rebuilds rows and aggregates from `problems`.
    static Report summarize(std::vector<ProblemResult> problems);

    nlohmann::ordered_json to_json() const;
    static Report from_json(const nlohmann::ordered_json& j);
    // Fixed-width summary table, one line per benchmark.
    std::string table() const;
};

} // namespace ouro::bench
