#pragma once

#include "bench/task.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <vector>

namespace ouro::bench {

inline constexpr const char* kFileEditBenchmark = "file_edit";
inline constexpr const char* kSymbolBenchmark = "symbol_location";

// A commit in a repository script; a null file content deletes the file.
struct RepoCommit {
    std::string message;
    std::map<std::string, std::optional<std::string>> files;
};

// {"commits": [{"message": "...", "files": {"path": "content" | null}}]}
std::vector<RepoCommit> load_repo_script(const fs::path& path);
// Creates a git repository at `dest` (must not exist) with a fixed identity and fixed
// commit dates, so the same script always yields the same commit ids.
void build_repo(const fs::path& dest, const std::vector<RepoCommit>& commits);

struct EditFilter {
    double min_fraction = 0.05;
    double max_fraction = 0.80;
    std::size_t min_lines = 3;
};

// changed = max(A, B) - LCS(A, B), fraction = changed / max(A, B), over lines.
struct EditStats {
    std::size_t changed = 0;
    std::size_t total = 0;
    double fraction = 0;
};
EditStats edit_stats(std::string_view before, std::string_view after);
bool interesting_edit(std::string_view before, std::string_view after, const EditFilter& filter = {});

// Every consecutive commit pair on the first-parent history contributes its modified
// files that pass the filter. The agent gets the older commit's tree and must make the
// file match the newer one. Throws Error(not_found) when fewer than `count` qualify;
// count 0 takes every candidate.
std::vector<BenchmarkTask> gen_file_edit_tasks(const fs::path& repo, std::size_t count, std::uint64_t seed,
                                               const EditFilter& filter = {});

// Definitions are found with per-language patterns whose first capture group is the
// name; the location reported is where the matched definition starts.
struct SymbolGrammar {
    std::vector<std::string> extensions;
    std::vector<std::regex> definitions;
    std::string line_comment;
};
// The bundled fixture language (.mini): `def`, `class`, `let` and `const` introduce
// names, `use` imports an external one, `#` starts a comment.
SymbolGrammar fixture_grammar();

struct SymbolIndex {
    std::map<std::string, std::vector<SymbolLocation>> definitions;
    std::map<std::string, std::vector<SymbolLocation>> references;
};
SymbolIndex index_symbols(const std::map<std::string, std::string>& files, const SymbolGrammar& grammar);

// Symbols defined exactly once in the repository at HEAD and referenced at least once
// outside their definition. One reference site is picked per symbol.
std::vector<BenchmarkTask> gen_symbol_tasks(const fs::path& repo, std::size_t count, std::uint64_t seed,
                                            const SymbolGrammar& grammar = fixture_grammar());

// Files of `commit` as path -> content.
std::map<std::string, std::string> repo_files(const fs::path& repo, const std::string& commit);

} // namespace ouro::bench
