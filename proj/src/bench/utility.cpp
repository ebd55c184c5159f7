#include "bench/utility.hpp"

#include "common/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ouro::bench {

void UtilityWeights::validate() const {
    if (w_score < 0 || w_cost < 0 || w_time < 0 || std::abs(w_score + w_cost + w_time - 1.0) > 1e-12)
        fail(ErrorCode::invalid_argument, "utility weights must be non-negative and sum to 1");
    if (!(cost_cap > 0) || !(time_cap > 0)) fail(ErrorCode::invalid_argument, "utility caps must be positive");
    if (tau < 0 || tau > 1) fail(ErrorCode::invalid_argument, "timeout penalty must lie in [0, 1]");
}

double base_utility(double p_score, double p_cost, double p_time, const UtilityWeights& w) {
    w.validate();
    if (!(p_score >= 0 && p_score <= 1)) fail(ErrorCode::invalid_argument, "score out of range: " + std::to_string(p_score));
    if (!(p_cost >= 0) || !(p_time >= 0)) fail(ErrorCode::invalid_argument, "cost and time must be non-negative");
    return w.w_score * p_score + w.w_cost * (1.0 - std::min(1.0, p_cost / w.cost_cap)) +
           w.w_time * (1.0 - std::min(1.0, p_time / w.time_cap));
}

double final_utility(double u, bool timed_out, double tau) { return timed_out ? u * (1.0 - tau) : u; }

double aggregate_score(std::span<const double> means) {
    if (means.empty()) fail(ErrorCode::invalid_argument, "no benchmark scores to aggregate");
    double sum = 0;
    for (double m : means) {
        if (!(m >= 0 && m <= 1)) fail(ErrorCode::invalid_argument, "benchmark mean out of range");
        sum += m;
    }
    return sum / static_cast<double>(means.size());
}

} // namespace ouro::bench
