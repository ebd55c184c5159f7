#include "tools/archive_query.hpp"

#include "common/error.hpp"
#include "events/render.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

namespace ouro::tools {

namespace {

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.insert(0, width - s.size(), ' ');
    return s;
}

const IterationView& find_iteration(const std::vector<IterationView>& archive, int iteration) {
    for (auto& it : archive)
        if (it.index == iteration) {
            if (!it.evaluated) fail(ErrorCode::not_found, "iteration " + std::to_string(iteration) + " has not been evaluated");
            return it;
        }
    fail(ErrorCode::not_found, "unknown iteration " + std::to_string(iteration));
}

} // namespace

std::string compare_iterations(const std::vector<IterationView>& archive) {
    if (archive.empty()) fail(ErrorCode::not_found, "the archive is empty");
    std::vector<std::string> benchmarks;
    std::set<std::string> seen;
    for (auto& it : archive)
        for (auto& row : it.report.rows)
            if (seen.insert(row.benchmark_id).second) benchmarks.push_back(row.benchmark_id);

    std::string out = "Iter  Utility  p_score";
    for (auto& b : benchmarks) out += "  " + pad(b.substr(0, 16), 16);
    out += "  Cost ($)  Time (s)    Tokens  Description\n";
    for (auto& it : archive) {
        std::string line = pad(std::to_string(it.index), 4);
        if (!it.evaluated) {
            line += "  (not evaluated)";
        } else {
            line += "  " + pad(fmt("%.4f", it.utility), 7) + "  " + pad(fmt("%.4f", it.report.p_score), 7);
            std::map<std::string, double> acc;
            for (auto& row : it.report.rows) acc[row.benchmark_id] = row.accuracy;
            for (auto& b : benchmarks) line += "  " + pad(acc.count(b) ? fmt("%.3f", acc[b]) : "-", 16);
            double cost = 0, time = 0, tokens = 0;
            for (auto& p : it.report.problems) {
                cost += p.metrics.cost.to_double();
                time += p.metrics.time;
                tokens += static_cast<double>(p.metrics.tokens);
            }
            double n = std::max<std::size_t>(1, it.report.problems.size());
            line += "  " + pad(fmt("%.4f", cost / n), 8) + "  " + pad(fmt("%.1f", time / n), 8) + "  " +
                    pad(fmt("%.0f", tokens / n), 8);
        }
        line += "  " + events::elide(it.description, 60);
        out += line + "\n";
    }
    return out;
}

std::vector<bench::ProblemResult> rank_problems(const bench::Report& report, std::size_t k, bool best) {
    auto problems = report.problems;
    std::stable_sort(problems.begin(), problems.end(), [best](const auto& a, const auto& b) {
        if (a.metrics.score != b.metrics.score) return best ? a.metrics.score > b.metrics.score : a.metrics.score < b.metrics.score;
        if (a.utility != b.utility) return best ? a.utility > b.utility : a.utility < b.utility;
        if (a.benchmark_id != b.benchmark_id) return a.benchmark_id < b.benchmark_id;
        return a.problem_id < b.problem_id;
    });
    if (problems.size() > k) problems.resize(k);
    return problems;
}

std::string problems_table(const std::vector<IterationView>& archive, int iteration, std::size_t k, bool best) {
    if (archive.empty()) fail(ErrorCode::not_found, "the archive is empty");
    const auto& it = find_iteration(archive, iteration);
    auto ranked = rank_problems(it.report, k, best);
    std::string out = std::string(best ? "Best" : "Worst") + " problems of iteration " + std::to_string(iteration) + "\n";
    out += "Benchmark         Problem               Score  Utility  Cost ($)  Time (s)  Tokens  Status\n";
    char line[512];
    for (auto& p : ranked) {
        std::snprintf(line, sizeof line, "%-16s  %-20s  %5.3f  %7.4f  %8.4f  %8.1f  %6lld  %s\n",
                      p.benchmark_id.substr(0, 16).c_str(), p.problem_id.substr(0, 20).c_str(), p.metrics.score,
                      p.utility, p.metrics.cost.to_double(), p.metrics.time, static_cast<long long>(p.metrics.tokens),
                      p.status.c_str());
        out += line;
        if (!p.error.empty()) out += "    error: " + events::elide(p.error, 120) + "\n";
    }
    return out;
}

} // namespace ouro::tools
