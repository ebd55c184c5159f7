#pragma once

#include "bench/report.hpp"

#include <string>
#include <vector>

namespace ouro::tools {

// What the archive-analysis tools can see of one archived iteration.
struct IterationView {
    int index = 0;
    std::string description;
    bool evaluated = false;
    double utility = 0;
    bench::Report report;
};

class ArchiveSource {
public:
    virtual ~ArchiveSource() = default;
    virtual std::vector<IterationView> iterations() const = 0;
};

// Per-iteration table: utility, p_score, accuracy per benchmark, mean cost/time/tokens.
// Throws Error(not_found) on an empty archive.
std::string compare_iterations(const std::vector<IterationView>& archive);

// The k best (highest score first) or worst (lowest first) problems of one iteration.
// Ties go to higher (best) or lower (worst) utility, then to benchmark and problem id.
std::vector<bench::ProblemResult> rank_problems(const bench::Report& report, std::size_t k, bool best);
// Throws Error(not_found) for an unknown or unevaluated iteration.
std::string problems_table(const std::vector<IterationView>& archive, int iteration, std::size_t k, bool best);

} // namespace ouro::tools
