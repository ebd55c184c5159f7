#include "bench/task.hpp"

#include "common/error.hpp"
#include "common/fs_util.hpp"
#include "common/text.hpp"
#include "context/unified_diff.hpp"

#include <fstream>
#include <regex>
#include <set>
#include <sstream>

namespace ouro::bench {

using json = nlohmann::ordered_json;

namespace {

const char* kind_name(AnswerKind k) {
    switch (k) {
    case AnswerKind::exact: return "exact";
    case AnswerKind::file_content: return "file_content";
    case AnswerKind::symbol_location: return "symbol_location";
    }
    return "?";
}

AnswerKind kind_from(const std::string& s) {
    if (s == "exact") return AnswerKind::exact;
    if (s == "file_content") return AnswerKind::file_content;
    if (s == "symbol_location") return AnswerKind::symbol_location;
    fail(ErrorCode::parse, "unknown answer kind: " + s);
}

} // namespace

json to_json(const BenchmarkTask& t) {
    json a{{"kind", kind_name(t.answer.kind)}};
    switch (t.answer.kind) {
    case AnswerKind::exact: a["expected"] = t.answer.expected; break;
    case AnswerKind::file_content:
        a["path"] = t.answer.path;
        a["content"] = t.answer.content;
        break;
    case AnswerKind::symbol_location:
        a["path"] = t.answer.location.path;
        a["line"] = t.answer.location.line;
        a["column"] = t.answer.location.column;
        break;
    }
    json seed = json::object();
    if (t.seed_dir) seed["dir"] = t.seed_dir->generic_string();
    if (!t.seed_files.empty()) {
        json files = json::object();
        for (auto& [p, c] : t.seed_files) files[p] = c;
        seed["files"] = files;
    }
    return json{{"benchmark_id", t.benchmark_id},
                {"problem_id", t.problem_id},
                {"statement", t.statement},
                {"workspace_seed", seed},
                {"answer_spec", a}};
}

BenchmarkTask task_from_json(const json& j, const fs::path& base_dir) {
    try {
        BenchmarkTask t;
        t.benchmark_id = j.at("benchmark_id").get<std::string>();
        t.problem_id = j.at("problem_id").get<std::string>();
        t.statement = j.at("statement").get<std::string>();
        if (t.benchmark_id.empty() || t.problem_id.empty()) fail(ErrorCode::parse, "empty benchmark or problem id");
        if (j.contains("workspace_seed")) {
            auto& seed = j["workspace_seed"];
            if (seed.contains("dir")) {
                fs::path d = seed["dir"].get<std::string>();
                t.seed_dir = d.is_relative() && !base_dir.empty() ? base_dir / d : d;
            }
            if (seed.contains("files"))
                for (auto& [p, c] : seed["files"].items()) t.seed_files[p] = c.get<std::string>();
        }
        auto& a = j.at("answer_spec");
        t.answer.kind = kind_from(a.at("kind").get<std::string>());
        switch (t.answer.kind) {
        case AnswerKind::exact: t.answer.expected = a.at("expected").get<std::string>(); break;
        case AnswerKind::file_content:
            t.answer.path = a.at("path").get<std::string>();
            t.answer.content = a.at("content").get<std::string>();
            break;
        case AnswerKind::symbol_location:
            t.answer.location = {a.at("path").get<std::string>(), a.at("line").get<int>(), a.at("column").get<int>()};
            break;
        }
        return t;
    } catch (const json::exception& e) {
        fail(ErrorCode::parse, std::string("invalid task: ") + e.what());
    }
}

std::string tasks_to_jsonl(const std::vector<BenchmarkTask>& tasks) {
    std::string out;
    for (auto& t : tasks) out += to_json(t).dump() + "\n";
    return out;
}

void save_tasks(const fs::path& path, const std::vector<BenchmarkTask>& tasks) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fsx::write_file_atomic(path, tasks_to_jsonl(tasks));
}

std::vector<BenchmarkTask> load_tasks(const fs::path& path) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) fail(ErrorCode::not_found, "tasks file not found: " + path.string());
    std::istringstream in(fsx::read_file(path));
    std::vector<BenchmarkTask> tasks;
    std::set<std::pair<std::string, std::string>> seen;
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (text::trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            fail(ErrorCode::parse, path.string() + ":" + std::to_string(n) + ": " + e.what());
        }
        auto t = task_from_json(j, path.parent_path());
        if (!seen.insert({t.benchmark_id, t.problem_id}).second)
            fail(ErrorCode::parse, "duplicate problem id " + t.problem_id + " in " + t.benchmark_id);
        tasks.push_back(std::move(t));
    }
    return tasks;
}

void seed_workspace(const BenchmarkTask& task, const fs::path& dir) {
    if (task.seed_dir) {
        std::error_code ec;
        if (!fs::is_directory(*task.seed_dir, ec))
            fail(ErrorCode::not_found, "workspace seed missing for " + task.problem_id + ": " + task.seed_dir->string());
        for (auto& entry : fs::directory_iterator(*task.seed_dir)) {
            auto dest = dir / entry.path().filename();
            if (entry.is_directory()) fsx::copy_tree(entry.path(), dest);
            else fs::copy(entry.path(), dest, fs::copy_options::copy_symlinks);
        }
    }
    for (auto& [rel, content] : task.seed_files) {
        auto norm = fs::path(rel).lexically_normal();
        if (!norm.is_relative() || text::starts_with(norm.generic_string(), ".."))
            fail(ErrorCode::invalid_argument, "seed path escapes the workspace: " + rel);
        auto p = dir / norm;
        fs::create_directories(p.parent_path());
        fsx::write_file(p, content);
    }
}

double score_file_edit(std::string_view final_content, std::string_view target_content) {
    auto a = text::split_lines(final_content);
    auto b = text::split_lines(target_content);
    if (a.empty() && b.empty()) return 1.0;
    auto m = context::lcs_lines(a, b);
    return 2.0 * static_cast<double>(m) / static_cast<double>(a.size() + b.size());
}

std::string normalize_task_path(std::string_view path) {
    auto s = fs::path(std::string(path)).lexically_normal().generic_string();
    while (text::starts_with(s, "./")) s = s.substr(2);
    return s;
}

std::optional<SymbolLocation> parse_location(std::string_view answer) {
    static const std::regex re(R"(([A-Za-z0-9_./\-]+):(\d+):(\d+))");
    std::string s(answer);
    std::optional<SymbolLocation> last;
    for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
        try {
            last = SymbolLocation{(*it)[1].str(), std::stoi((*it)[2].str()), std::stoi((*it)[3].str())};
        } catch (const std::exception&) {
            continue; // out-of-range numbers
        }
    }
    return last;
}

double score_symbol(std::string_view answer, const SymbolLocation& truth) {
    auto loc = parse_location(answer);
    if (!loc) return 0.0;
    return normalize_task_path(loc->path) == normalize_task_path(truth.path) && loc->line == truth.line &&
                   loc->column == truth.column
               ? 1.0
               : 0.0;
}

double score_task(const BenchmarkTask& task, const std::optional<std::string>& answer, const fs::path& workspace) {
    switch (task.answer.kind) {
    case AnswerKind::exact: return answer && text::trim(*answer) == text::trim(task.answer.expected) ? 1.0 : 0.0;
    case AnswerKind::symbol_location: return answer ? score_symbol(*answer, task.answer.location) : 0.0;
    case AnswerKind::file_content: {
        auto p = workspace / task.answer.path;
        std::error_code ec;
        std::string final_content = fs::is_regular_file(p, ec) ? fsx::read_file(p) : std::string();
        return score_file_edit(final_content, task.answer.content);
    }
    }
    return 0.0;
}

} // namespace ouro::bench
