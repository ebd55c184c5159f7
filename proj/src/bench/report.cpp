#include "bench/report.hpp"

#include "common/error.hpp"

#include <cstdio>
#include <map>

namespace ouro::bench {

using json = nlohmann::ordered_json;

namespace {

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

} // namespace

Report Report::summarize(std::vector<ProblemResult> problems) {
    Report r;
    r.problems = std::move(problems);
    std::vector<std::string> order;
    std::map<std::string, std::vector<const ProblemResult*>> by_bench;
    for (auto& p : r.problems) {
        if (!by_bench.count(p.benchmark_id)) order.push_back(p.benchmark_id);
        by_bench[p.benchmark_id].push_back(&p);
    }
    std::vector<double> accuracies, utilities;
    for (auto& id : order) {
        auto& ps = by_bench[id];
        BenchmarkRow row;
        row.benchmark_id = id;
        row.problems = ps.size();
        Money cost;
        double weighted_cached = 0, tokens = 0;
        for (auto* p : ps) {
            row.accuracy += p->metrics.score;
            cost += p->metrics.cost;
            row.time += p->metrics.time;
            tokens += static_cast<double>(p->metrics.tokens);
            weighted_cached += p->metrics.cached_fraction;
            row.utility += p->utility;
            row.timeouts += p->metrics.timed_out ? 1 : 0;
        }
        double n = static_cast<double>(ps.size());
        row.accuracy /= n;
        row.cost = cost.to_double() / n;
        row.time /= n;
        row.tokens = tokens / n;
        row.cached_pct = 100.0 * weighted_cached / n;
        row.utility /= n;
        accuracies.push_back(row.accuracy);
        utilities.push_back(row.utility);
        r.rows.push_back(row);
    }
    if (!r.rows.empty()) {
        r.p_score = aggregate_score(accuracies);
        double sum = 0;
        for (double u : utilities) sum += u;
        r.utility = sum / static_cast<double>(utilities.size());
    }
    return r;
}

json Report::to_json() const {
    json j;
    j["p_score"] = p_score;
    j["utility"] = utility;
    j["rows"] = json::array();
    for (auto& row : rows)
        j["rows"].push_back({{"benchmark_id", row.benchmark_id},
                             {"problems", row.problems},
                             {"accuracy", row.accuracy},
                             {"cost", row.cost},
                             {"time", row.time},
                             {"tokens", row.tokens},
                             {"cached_pct", row.cached_pct},
                             {"utility", row.utility},
                             {"timeouts", row.timeouts}});
    j["problems"] = json::array();
    for (auto& p : problems)
        j["problems"].push_back({{"benchmark_id", p.benchmark_id},
                                 {"problem_id", p.problem_id},
                                 {"score", p.metrics.score},
                                 {"cost", p.metrics.cost.to_string()},
                                 {"time", p.metrics.time},
                                 {"tokens", p.metrics.tokens},
                                 {"cached_fraction", p.metrics.cached_fraction},
                                 {"timed_out", p.metrics.timed_out},
                                 {"utility", p.utility},
                                 {"status", p.status},
                                 {"answer", p.answer},
                                 {"error", p.error}});
    return j;
}

Report Report::from_json(const json& j) {
    std::vector<ProblemResult> problems;
    try {
        for (auto& p : j.at("problems")) {
            ProblemResult r;
            r.benchmark_id = p.at("benchmark_id").get<std::string>();
            r.problem_id = p.at("problem_id").get<std::string>();
            r.metrics.score = p.at("score").get<double>();
            r.metrics.cost = Money::parse(p.at("cost").get<std::string>());
            r.metrics.time = p.at("time").get<double>();
            r.metrics.tokens = p.at("tokens").get<std::int64_t>();
            r.metrics.cached_fraction = p.at("cached_fraction").get<double>();
            r.metrics.timed_out = p.at("timed_out").get<bool>();
            r.utility = p.at("utility").get<double>();
            r.status = p.value("status", "");
            r.answer = p.value("answer", "");
            r.error = p.value("error", "");
            problems.push_back(std::move(r));
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::parse, std::string("malformed report: ") + e.what());
    }
    return summarize(std::move(problems));
}

std::string Report::table() const {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "%-22s %8s %9s %9s %8s %11s %9s %8s\n", "Benchmark", "Problems", "Accuracy",
                  "Cost ($)", "Time (s)", "Tokens", "% Cached", "Utility");
    out += line;
    out += std::string(91, '-') + "\n";
    for (auto& r : rows) {
        std::snprintf(line, sizeof line, "%-22s %8zu %9s %9s %8s %11s %9s %8s\n", r.benchmark_id.substr(0, 22).c_str(),
                      r.problems, fmt("%.3f", r.accuracy).c_str(), fmt("%.3f", r.cost).c_str(),
                      fmt("%.1f", r.time).c_str(), fmt("%.0f", r.tokens).c_str(), fmt("%.1f", r.cached_pct).c_str(),
                      fmt("%.4f", r.utility).c_str());
        out += line;
    }
    out += std::string(91, '-') + "\n";
    std::snprintf(line, sizeof line, "p_score %.4f   utility %.4f\n", p_score, utility);
    out += line;
    return out;
}

} // namespace ouro::bench
