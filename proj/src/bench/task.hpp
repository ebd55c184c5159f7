#pragma once

#include "json.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ouro::bench {

namespace fs = std::filesystem;

struct SymbolLocation {
    std::string path;
    int line = 0;
    int column = 0;
    bool operator==(const SymbolLocation&) const = default;
};

enum class AnswerKind { exact, file_content, symbol_location };

struct AnswerSpec {
    AnswerKind kind = AnswerKind::exact;
    std::string expected;    // exact: the answer text
    std::string path;        // file_content: file to compare
    std::string content;     // file_content: target content
    SymbolLocation location; // symbol_location
};

struct BenchmarkTask {
    std::string benchmark_id;
    std::string problem_id;
    std::string statement;
    // Initial workspace: inline files, a directory, or neither for an empty workspace.
    std::map<std::string, std::string> seed_files;
    std::optional<fs::path> seed_dir;
    AnswerSpec answer;
};

nlohmann::ordered_json to_json(const BenchmarkTask& task);
// Relative seed_dir values are resolved against `base_dir`. Throws Error(parse).
BenchmarkTask task_from_json(const nlohmann::ordered_json& j, const fs::path& base_dir = {});

// One JSON object per line. Loading checks problem ids are unique per benchmark.
void save_tasks(const fs::path& path, const std::vector<BenchmarkTask>& tasks);
std::string tasks_to_jsonl(const std::vector<BenchmarkTask>& tasks);
std::vector<BenchmarkTask> load_tasks(const fs::path& path);

// Writes the seed into an empty directory. Throws Error(not_found) if seed_dir is gone.
void seed_workspace(const BenchmarkTask& task, const fs::path& dir);

// 2*M / (A + B) over lines, M = line LCS; two empty files score 1.
double score_file_edit(std::string_view final_content, std::string_view target_content);
// "path:line:col", optionally surrounded by other text; the last such triple counts.
std::optional<SymbolLocation> parse_location(std::string_view answer);
// 1 iff the normalised path, line and column all match. Unparseable answers score 0.
double score_symbol(std::string_view answer, const SymbolLocation& truth);
std::string normalize_task_path(std::string_view path);

// Scores a finished task from the submitted answer and the final workspace.
double score_task(const BenchmarkTask& task, const std::optional<std::string>& answer, const fs::path& workspace);

} // namespace ouro::bench
