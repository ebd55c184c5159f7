#include "bench/generators.hpp"

#include "common/error.hpp"
#include "common/fs_util.hpp"
#include "common/text.hpp"
#include "context/unified_diff.hpp"
#include "tools/shell.hpp"
#include "tools/toolkit.hpp"

#include <algorithm>
#include <random>
#include <set>

namespace ouro::bench {

using json = nlohmann::json;

namespace {

constexpr std::int64_t kRepoEpoch = 1'704'067'200; // 2024-01-01T00:00:00Z

// Reads use `2>/dev/null` so stdout arrives untouched.
std::string git(const fs::path& repo, const std::string& args, bool quiet_stderr = true, const std::string& env = {}) {
    tools::CommandOptions o;
    o.cwd = repo;
    o.timeout = std::chrono::seconds(60);
    o.output_cap = std::size_t{256} << 20;
    auto cmd = env + "git -c core.autocrlf=false -c core.quotepath=off " + args + (quiet_stderr ? " 2>/dev/null" : " 2>&1");
    auto r = tools::run_command(cmd, o);
    if (r.exit_code != 0)
        fail(ErrorCode::io, "git " + args + " failed (exit " + std::to_string(r.exit_code) + ")" +
                                (r.output.empty() ? "" : ": " + text::trim(r.output)));
    return r.output;
}

std::vector<std::string> split_char(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

template <class T>
void seeded_shuffle(std::vector<T>& v, std::uint64_t seed) {
    // Fisher-Yates over mt19937_64 so the order does not depend on the standard library.
    std::mt19937_64 rng(seed);
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

std::string sanitize(const std::string& path) {
    std::string out;
    for (char c : path) out += std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' ? c : '_';
    return out;
}

bool has_extension(const std::string& path, const SymbolGrammar& g) {
    if (g.extensions.empty()) return true;
    for (auto& e : g.extensions)
        if (text::ends_with(path, e)) return true;
    return false;
}

// Blanks string literals and the trailing comment so columns stay put.
std::string code_only(const std::string& line, const std::string& comment) {
    std::string out = line;
    char quote = 0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        char c = out[i];
        if (quote) {
            if (c == '\\' && i + 1 < out.size()) {
                out[i] = out[i + 1] = ' ';
                ++i;
                continue;
            }
            if (c == quote) quote = 0;
            out[i] = ' ';
            continue;
        }
        if (c == '"' || c == '\'') {
            quote = c;
            out[i] = ' ';
            continue;
        }
        if (!comment.empty() && out.compare(i, comment.size(), comment) == 0) {
            out.resize(i);
            break;
        }
    }
    return out;
}

} // namespace

std::vector<RepoCommit> load_repo_script(const fs::path& path) {
    try {
        auto j = json::parse(fsx::read_file(path));
        std::vector<RepoCommit> out;
        for (auto& c : j.at("commits")) {
            RepoCommit rc;
            rc.message = c.at("message").get<std::string>();
            for (auto& [p, v] : c.at("files").items())
                rc.files[p] = v.is_null() ? std::nullopt : std::optional<std::string>(v.get<std::string>());
            out.push_back(std::move(rc));
        }
        return out;
    } catch (const json::exception& e) {
        fail(ErrorCode::parse, "invalid repository script " + path.string() + ": " + e.what());
    }
}

void build_repo(const fs::path& dest, const std::vector<RepoCommit>& commits) {
    if (fs::exists(dest)) fail(ErrorCode::conflict, "destination exists: " + dest.string());
    if (commits.empty()) fail(ErrorCode::invalid_argument, "repository script has no commits");
    fs::create_directories(dest);
    git(dest, "-c init.defaultBranch=main init -q", false);
    const std::string ident = "-c user.name=Fixture -c user.email=fixture@example.invalid -c commit.gpgsign=false ";
    for (std::size_t i = 0; i < commits.size(); ++i) {
        for (auto& [rel, content] : commits[i].files) {
            auto p = dest / rel;
            if (content) {
                fs::create_directories(p.parent_path());
                fsx::write_file(p, *content);
            } else {
                fs::remove(p);
            }
        }
        git(dest, "add -A", false);
        auto date = tools::shell_quote(std::to_string(kRepoEpoch + static_cast<std::int64_t>(i) * 3600) + " +0000");
        git(dest, ident + "commit -q --allow-empty --no-verify -m " + tools::shell_quote(commits[i].message), false,
            "GIT_AUTHOR_DATE=" + date + " GIT_COMMITTER_DATE=" + date + " ");
    }
}

std::map<std::string, std::string> repo_files(const fs::path& repo, const std::string& commit) {
    std::map<std::string, std::string> out;
    for (auto& p : split_char(git(repo, "ls-tree -r --name-only -z " + tools::shell_quote(commit)), '\0'))
        out[p] = git(repo, "show " + tools::shell_quote(commit + ":" + p));
    return out;
}

EditStats edit_stats(std::string_view before, std::string_view after) {
    auto a = text::split_lines(before);
    auto b = text::split_lines(after);
    EditStats s;
    s.total = std::max(a.size(), b.size());
    s.changed = s.total - context::lcs_lines(a, b);
    s.fraction = s.total ? static_cast<double>(s.changed) / static_cast<double>(s.total) : 0.0;
    return s;
}

bool interesting_edit(std::string_view before, std::string_view after, const EditFilter& f) {
    auto s = edit_stats(before, after);
    return s.changed >= f.min_lines && s.fraction >= f.min_fraction && s.fraction <= f.max_fraction;
}

std::vector<BenchmarkTask> gen_file_edit_tasks(const fs::path& repo, std::size_t count, std::uint64_t seed,
                                               const EditFilter& filter) {
    auto commits = split_char(git(repo, "rev-list --first-parent --reverse HEAD"), '\n');
    if (commits.size() < 2) fail(ErrorCode::invalid_argument, "repository needs at least two commits: " + repo.string());

    std::vector<BenchmarkTask> candidates;
    for (std::size_t i = 0; i + 1 < commits.size(); ++i) {
        const auto& a = commits[i];
        const auto& b = commits[i + 1];
        std::optional<std::map<std::string, std::string>> seed_files;
        auto message = text::trim(git(repo, "log -1 --format=%B " + b));
        for (auto& line : split_char(git(repo, "diff --name-status --no-renames " + a + " " + b), '\n')) {
            auto tab = line.find('\t');
            if (tab == std::string::npos || line.substr(0, tab) != "M") continue;
            auto path = line.substr(tab + 1);
            auto before = git(repo, "show " + tools::shell_quote(a + ":" + path));
            auto after = git(repo, "show " + tools::shell_quote(b + ":" + path));
            if (!interesting_edit(before, after, filter)) continue;
            if (!seed_files) seed_files = repo_files(repo, a);

            BenchmarkTask t;
            t.benchmark_id = kFileEditBenchmark;
            t.problem_id = "edit-" + b.substr(0, 10) + "-" + sanitize(path);
            t.statement = "The repository in your working directory is checked out at commit " + a.substr(0, 10) +
                          ". The next commit changed " + path + ", with this message:\n\n" + message +
                          "\n\nEdit " + path + " so that its content matches that commit. The change to make, as a "
                          "unified diff:\n\n" + context::unified_diff(before, after, path);
            t.seed_files = *seed_files;
            t.answer.kind = AnswerKind::file_content;
            t.answer.path = path;
            t.answer.content = after;
            candidates.push_back(std::move(t));
        }
    }
    if (count == 0) count = candidates.size();
    if (candidates.size() < count)
        fail(ErrorCode::not_found, "only " + std::to_string(candidates.size()) + " qualifying file edits in " +
                                       repo.string() + ", " + std::to_string(count) + " requested");
    seeded_shuffle(candidates, seed);
    candidates.resize(count);
    std::sort(candidates.begin(), candidates.end(),
              [](const BenchmarkTask& x, const BenchmarkTask& y) { return x.problem_id < y.problem_id; });
    return candidates;
}

SymbolGrammar fixture_grammar() {
    SymbolGrammar g;
    g.extensions = {".mini"};
    g.definitions = {std::regex(R"(^\s*(?:def|class|let|const)\s+([A-Za-z_][A-Za-z0-9_]*))")};
    g.line_comment = "#";
    return g;
}

SymbolIndex index_symbols(const std::map<std::string, std::string>& files, const SymbolGrammar& grammar) {
    static const std::regex ident(R"([A-Za-z_][A-Za-z0-9_]*)");
    SymbolIndex idx;
    std::map<std::string, std::vector<SymbolLocation>> tokens;
    for (auto& [path, content] : files) {
        if (!has_extension(path, grammar)) continue;
        auto lines = text::split_lines(content);
        for (std::size_t i = 0; i < lines.size(); ++i) {
            auto code = code_only(lines[i], grammar.line_comment);
            int line = static_cast<int>(i) + 1;
            std::optional<std::size_t> def_name_at;
            for (auto& re : grammar.definitions) {
                std::smatch m;
                if (!std::regex_search(code, m, re)) continue;
                auto start = code.find_first_not_of(" \t", static_cast<std::size_t>(m.position(0)));
                idx.definitions[m[1].str()].push_back({path, line, static_cast<int>(start) + 1});
                def_name_at = static_cast<std::size_t>(m.position(1));
                break;
            }
            for (auto it = std::sregex_iterator(code.begin(), code.end(), ident); it != std::sregex_iterator(); ++it) {
                auto at = static_cast<std::size_t>(it->position(0));
                if (def_name_at && at == *def_name_at) continue;
                if (at > 0 && code[at - 1] == '.') continue; // attribute access
                tokens[it->str()].push_back({path, line, static_cast<int>(at) + 1});
            }
        }
    }
    for (auto& [name, locs] : tokens)
        if (idx.definitions.count(name)) idx.references[name] = locs;
    return idx;
}

std::vector<BenchmarkTask> gen_symbol_tasks(const fs::path& repo, std::size_t count, std::uint64_t seed,
                                            const SymbolGrammar& grammar) {
    auto head = text::trim(git(repo, "rev-parse HEAD"));
    auto files = repo_files(repo, head);
    auto idx = index_symbols(files, grammar);

    std::mt19937_64 pick(seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<BenchmarkTask> candidates;
    for (auto& [name, defs] : idx.definitions) {
        if (defs.size() != 1) continue;
        auto refs = idx.references.find(name);
        if (refs == idx.references.end() || refs->second.empty()) continue;
        const auto& ref = refs->second[pick() % refs->second.size()];
        BenchmarkTask t;
        t.benchmark_id = kSymbolBenchmark;
        t.problem_id = "symbol-" + name;
        t.statement = "In the repository in your working directory, the symbol `" + name + "` is used at " + ref.path +
                      ":" + std::to_string(ref.line) + ":" + std::to_string(ref.column) +
                      ". Find where it is defined and submit the location of the definition in the format "
                      "path/to/file:line_num:column_num.";
        t.seed_files = files;
        t.answer.kind = AnswerKind::symbol_location;
        t.answer.location = defs.front();
        candidates.push_back(std::move(t));
    }
    if (count == 0) count = candidates.size();
    if (candidates.size() < count)
        fail(ErrorCode::not_found, "only " + std::to_string(candidates.size()) + " qualifying symbols in " +
                                       repo.string() + ", " + std::to_string(count) + " requested");
    seeded_shuffle(candidates, seed);
    candidates.resize(count);
    std::sort(candidates.begin(), candidates.end(),
              [](const BenchmarkTask& x, const BenchmarkTask& y) { return x.problem_id < y.problem_id; });
    return candidates;
}

} // namespace ouro::bench
