#pragma once

#include "common/cancel.hpp"
#include "context/context.hpp"
#include "protocol/protocol.hpp"
#include "tools/archive_query.hpp"
#include "tools/workspace.hpp"

#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ouro::tools {

enum class TerminalKind { submit_answer, return_result, early_exit };
const char* to_string(TerminalKind kind);

struct Terminal {
    TerminalKind kind;
    std::string value;
};

struct ToolResult {
    bool success = true;
    std::string content;       // shown to the model
    std::string state_effects; // e.g. "opened src/a.py"; empty when nothing changed
    std::optional<Terminal> terminal;

    static ToolResult ok(std::string content, std::string effects = {}) {
        return {true, std::move(content), std::move(effects), {}};
    }
    static ToolResult error(std::string content) { return {false, std::move(content), {}, {}}; }
};

struct ToolContext {
    Workspace& workspace;
    context::ContextState& context;
    bool is_root = true;
    const ArchiveSource* archive = nullptr;
    std::optional<CancelToken> cancel;
    Deadline deadline;
    std::filesystem::path agent_dir; // codebase of the running agent, for plugin tools
    std::chrono::milliseconds command_timeout{120'000};
};

struct Tool {
    protocol::ToolSignature signature;
    bool needs_archive = false;
    std::function<ToolResult(const protocol::Args&, ToolContext&)> run;
};

class Toolkit {
public:
    // open_file, close_file, overwrite_file, execute_command, calculate, submit_answer,
    // return_result, early_exit, compare_agent_iterations, best_problems, worst_problems.
    static Toolkit builtin();

    // Throws Error(config) on a duplicate name.
    void add(Tool tool);
    // Adds every tools/*.json descriptor found in an agent codebase:
    //   {"name": "...", "doc": "...", "args": [{"name", "doc", "required"}],
    //    "command": "python3 {agent_dir}/tools/x.py"}
    // The command runs in the workspace with the arguments as a JSON object on stdin;
    // exit status 0 means success and the output is the result text.
    void load_plugins(const std::filesystem::path& agent_dir);

    const Tool* find(const std::string& name) const;
    std::vector<std::string> names() const;
    // Tools usable in this context, in the order given. Unknown names throw Error(config);
    // archive tools are dropped when no archive is attached.
    protocol::Registry registry(const std::vector<std::string>& names, bool have_archive) const;

    // Never throws for tool-level failures: they come back as ToolResult::error.
    ToolResult invoke(const std::string& name, const protocol::Args& args, ToolContext& ctx) const;

private:
    std::map<std::string, Tool> tools_;
    std::vector<std::string> order_;
};

// Brings the context in line with the disk after a tool ran: changed open files get a
// diff appended to the stream, deleted files are closed, and the directory tree is
// re-rendered. Returns the paths that changed.
std::vector<std::string> refresh_views(ToolContext& ctx);

// Single-quotes `s` for /bin/sh.
std::string shell_quote(const std::string& s);

} // namespace ouro::tools
