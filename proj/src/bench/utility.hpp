#pragma once

#include <span>

namespace ouro::bench {

struct UtilityWeights {
    double w_score = 0.5;
    double w_cost = 0.25;
    double w_time = 0.25;
    double cost_cap = 10.0;  // dollars per problem
    double time_cap = 300.0; // seconds per problem
    double tau = 0.5;        // timeout penalty

    // Throws Error(invalid_argument) unless weights sum to 1 and caps are positive.
    void validate() const;
};

// U = w_s * score + w_c * (1 - min(1, cost/cap_c)) + w_t * (1 - min(1, time/cap_t))
double base_utility(double p_score, double p_cost, double p_time, const UtilityWeights& w = {});
// U * (1 - tau) on timeout, else U.
double final_utility(double u, bool timed_out, double tau = UtilityWeights{}.tau);
// Unweighted mean of per-benchmark means. Throws on empty input or values outside [0, 1].
double aggregate_score(std::span<const double> per_benchmark_means);

} // namespace ouro::bench
