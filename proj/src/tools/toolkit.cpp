#include "tools/toolkit.hpp"

#include "common/error.hpp"
#include "common/fs_util.hpp"
#include "common/text.hpp"
#include "tools/calculator.hpp"
#include "tools/shell.hpp"

#include "json.hpp"

#include <cmath>

namespace ouro::tools {

namespace fs = std::filesystem;
using protocol::Args;
using protocol::ArgSpec;

namespace {

std::string required(const Args& args, const char* name) {
    auto v = protocol::arg(args, name);
    if (!v) fail(ErrorCode::invalid_argument, std::string("missing argument <") + name + ">");
    return *v;
}

// Workspace-relative key used for open files.
std::string view_key(const ToolContext& ctx, const fs::path& resolved) { return ctx.workspace.relative(resolved); }

ToolResult open_file(const Args& args, ToolContext& ctx) {
    auto path = required(args, "path");
    auto resolved = ctx.workspace.resolve(text::trim(path));
    std::error_code ec;
    if (!fs::exists(resolved, ec)) return ToolResult::error("No such file: " + path);
    if (fs::is_directory(resolved, ec)) return ToolResult::error(path + " is a directory; see the directory tree instead");
    auto key = view_key(ctx, resolved);
    if (!ctx.context.open_file(key, fsx::read_file(resolved)))
        return ToolResult::ok(key + " is already open.");
    return ToolResult::ok("Opened " + key + ". Its content is shown in the open files section.", "opened " + key);
}

ToolResult close_file(const Args& args, ToolContext& ctx) {
    auto path = required(args, "path");
    auto key = view_key(ctx, ctx.workspace.resolve(text::trim(path)));
    if (!ctx.context.close_file(key)) return ToolResult::error(key + " is not open.");
    return ToolResult::ok("Closed " + key + ".", "closed " + key);
}

ToolResult overwrite_file(const Args& args, ToolContext& ctx) {
    auto path = required(args, "path");
    auto content = required(args, "content");
    auto resolved = ctx.workspace.resolve(text::trim(path));
    std::error_code ec;
    if (fs::is_directory(resolved, ec)) return ToolResult::error(path + " is a directory");
    fsx::write_file(resolved, content);
    auto key = view_key(ctx, resolved);
    return ToolResult::ok("Wrote " + std::to_string(content.size()) + " bytes to " + key + ".", "wrote " + key);
}

ToolResult execute_command(const Args& args, ToolContext& ctx) {
    auto command = required(args, "command");
    if (text::trim(command).empty()) return ToolResult::error("empty command");
    CommandOptions opts;
    opts.cwd = ctx.workspace.root();
    opts.timeout = ctx.command_timeout;
    if (auto t = protocol::arg(args, "timeout")) {
        double secs = 0;
        try {
            secs = std::stod(text::trim(*t));
        } catch (const std::exception&) {
            return ToolResult::error("timeout must be a number of seconds");
        }
        if (!(secs > 0)) return ToolResult::error("timeout must be positive");
        opts.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(std::ceil(secs * 1000)));
    }
    opts.deadline = ctx.deadline;
    opts.cancel = ctx.cancel;
    auto r = run_command(command, opts);
    std::string out = r.output;
    if (!out.empty() && out.back() != '\n') out += '\n';
    char secs[32];
    std::snprintf(secs, sizeof secs, "%.1f", static_cast<double>(r.elapsed.count()) / 1000.0);
    if (r.timed_out) return ToolResult::error(out + "Command timed out after " + secs + "s; its process group was killed.");
    if (r.cancelled) return ToolResult::error(out + "Command interrupted by cancellation.");
    out += "Exit code: " + std::to_string(r.exit_code);
    return r.exit_code == 0 ? ToolResult::ok(out) : ToolResult::error(out);
}

ToolResult calculate_tool(const Args& args, ToolContext&) { return ToolResult::ok(calculate(required(args, "expression"))); }

ToolResult submit_answer(const Args& args, ToolContext& ctx) {
    if (!ctx.is_root) return ToolResult::error("submit_answer is only available to the main agent; use return_result.");
    auto r = ToolResult::ok("Answer submitted.", "submitted answer");
    r.terminal = Terminal{TerminalKind::submit_answer, required(args, "answer")};
    return r;
}

ToolResult return_result(const Args& args, ToolContext& ctx) {
    if (ctx.is_root) return ToolResult::error("return_result is only available to sub-agents; use submit_answer.");
    auto r = ToolResult::ok("Result returned to the calling agent.", "returned result");
    r.terminal = Terminal{TerminalKind::return_result, required(args, "result")};
    return r;
}

ToolResult early_exit(const Args& args, ToolContext&) {
    auto r = ToolResult::ok("Exiting early.", "early exit");
    r.terminal = Terminal{TerminalKind::early_exit, required(args, "reason")};
    return r;
}

const ArchiveSource& archive_of(const ToolContext& ctx) {
    if (!ctx.archive) fail(ErrorCode::not_found, "no agent archive is attached to this run");
    return *ctx.archive;
}

int int_arg(const Args& args, const char* name, std::optional<int> fallback) {
    auto v = protocol::arg(args, name);
    if (!v) {
        if (fallback) return *fallback;
        fail(ErrorCode::invalid_argument, std::string("missing argument <") + name + ">");
    }
    try {
        std::size_t used = 0;
        auto t = text::trim(*v);
        int n = std::stoi(t, &used);
        if (used != t.size()) throw std::invalid_argument(t);
        return n;
    } catch (const std::exception&) {
        fail(ErrorCode::invalid_argument, std::string("<") + name + "> must be an integer");
    }
}

ToolResult compare_tool(const Args&, ToolContext& ctx) {
    return ToolResult::ok(compare_iterations(archive_of(ctx).iterations()));
}

ToolResult ranked_tool(const Args& args, ToolContext& ctx, bool best) {
    int iteration = int_arg(args, "iteration", std::nullopt);
    int k = int_arg(args, "k", 5);
    if (k <= 0) return ToolResult::error("<k> must be positive");
    return ToolResult::ok(problems_table(archive_of(ctx).iterations(), iteration, static_cast<std::size_t>(k), best));
}

Tool make(std::string name, std::string doc, std::vector<ArgSpec> args,
          std::function<ToolResult(const Args&, ToolContext&)> run, bool needs_archive = false) {
    return Tool{{std::move(name), std::move(doc), std::move(args)}, needs_archive, std::move(run)};
}

} // namespace

const char* to_string(TerminalKind kind) {
    switch (kind) {
    case TerminalKind::submit_answer: return "submit_answer";
    case TerminalKind::return_result: return "return_result";
    case TerminalKind::early_exit: return "early_exit";
    }
    return "?";
}

std::string shell_quote(const std::string& s) { return "'" + text::replace_all(s, "'", "'\\''") + "'"; }

Toolkit Toolkit::builtin() {
    Toolkit kit;
    kit.add(make("open_file", "Add a file to the open files section of your context so you can read it.",
                 {{"path", "workspace-relative file path", true}}, open_file));
    kit.add(make("close_file", "Remove a file from the open files section of your context.",
                 {{"path", "workspace-relative file path", true}}, close_file));
    kit.add(make("overwrite_file",
                 "Replace a file's entire content, creating it and its parent directories if needed. "
                 "Edits to open files show up as diffs.",
                 {{"path", "workspace-relative file path", true}, {"content", "the complete new file content", true}},
                 overwrite_file));
    kit.add(make("execute_command",
                 "Run a shell command in the workspace directory. Returns combined stdout and stderr (capped at 64 KB) "
                 "and the exit code.",
                 {{"command", "the command line, run with sh -c", true},
                  {"timeout", "seconds before the command is killed (default 120)", false}},
                 execute_command));
    kit.add(make("calculate",
                 "Evaluate an arithmetic expression exactly: + - * / ^, parentheses, floor ceil round abs sqrt.",
                 {{"expression", "e.g. floor(2024/5)", true}}, calculate_tool));
    kit.add(make("submit_answer", "Submit the final answer to the problem. This ends your run.",
                 {{"answer", "the final answer", true}}, submit_answer));
    kit.add(make("return_result", "Return a result string to the agent that called you. This ends your run.",
                 {{"result", "a self-contained summary of what you did and found", true}}, return_result));
    kit.add(make("early_exit", "Stop working on the task because it cannot be completed. This ends your run.",
                 {{"reason", "why you are stopping", true}}, early_exit));
    kit.add(make("compare_agent_iterations",
                 "Summary table of every archived agent iteration: utility, benchmark accuracies, mean cost, time and "
                 "tokens.",
                 {}, compare_tool, true));
    kit.add(make("best_problems", "The highest-scoring benchmark problems of one archived iteration.",
                 {{"iteration", "iteration index", true}, {"k", "how many problems (default 5)", false}},
                 [](const Args& a, ToolContext& c) { return ranked_tool(a, c, true); }, true));
    kit.add(make("worst_problems", "The lowest-scoring benchmark problems of one archived iteration.",
                 {{"iteration", "iteration index", true}, {"k", "how many problems (default 5)", false}},
                 [](const Args& a, ToolContext& c) { return ranked_tool(a, c, false); }, true));
    return kit;
}

void Toolkit::add(Tool tool) {
    auto name = tool.signature.name;
    protocol::Registry check;
    check.add(tool.signature); // validates the name and argument names
    if (tools_.count(name)) fail(ErrorCode::config, "duplicate tool: " + name);
    tools_.emplace(name, std::move(tool));
    order_.push_back(name);
}

void Toolkit::load_plugins(const fs::path& agent_dir) {
    auto dir = agent_dir / "tools";
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) return;
    std::vector<fs::path> files;
    for (auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (auto& file : files) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(fsx::read_file(file));
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::config, "invalid tool descriptor " + file.string() + ": " + e.what());
        }
        Tool tool;
        std::string command;
        try {
            tool.signature.name = j.at("name").get<std::string>();
            tool.signature.doc = j.value("doc", "");
            for (auto& a : j.value("args", nlohmann::json::array()))
                tool.signature.args.push_back(
                    {a.at("name").get<std::string>(), a.value("doc", ""), a.value("required", true)});
            command = j.at("command").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::config, "invalid tool descriptor " + file.string() + ": " + e.what());
        }
        tool.run = [command](const Args& args, ToolContext& ctx) {
            nlohmann::json input = nlohmann::json::object();
            for (auto& [k, v] : args) input[k] = v;
            CommandOptions opts;
            opts.cwd = ctx.workspace.root();
            opts.timeout = ctx.command_timeout;
            opts.deadline = ctx.deadline;
            opts.cancel = ctx.cancel;
            opts.stdin_data = input.dump();
            auto cmd = text::replace_all(command, "{agent_dir}", shell_quote(ctx.agent_dir.string()));
            auto r = run_command(cmd, opts);
            if (r.timed_out) return ToolResult::error(r.output + "\nTool timed out.");
            if (r.cancelled) return ToolResult::error(r.output + "\nTool interrupted by cancellation.");
            return r.exit_code == 0 ? ToolResult::ok(r.output) : ToolResult::error(r.output);
        };
        add(std::move(tool));
    }
}

const Tool* Toolkit::find(const std::string& name) const {
    auto it = tools_.find(name);
    return it == tools_.end() ? nullptr : &it->second;
}

std::vector<std::string> Toolkit::names() const { return order_; }

protocol::Registry Toolkit::registry(const std::vector<std::string>& names, bool have_archive) const {
    protocol::Registry reg;
    for (auto& n : names) {
        auto* t = find(n);
        if (!t) fail(ErrorCode::config, "unknown tool: " + n);
        if (t->needs_archive && !have_archive) continue;
        reg.add(t->signature);
    }
    return reg;
}

ToolResult Toolkit::invoke(const std::string& name, const Args& args, ToolContext& ctx) const {
    auto* t = find(name);
    if (!t) return ToolResult::error("Unknown tool: " + name);
    try {
        return t->run(args, ctx);
    } catch (const Error& e) {
        return ToolResult::error(e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return ToolResult::error(e.what());
    }
}

std::vector<std::string> refresh_views(ToolContext& ctx) {
    std::vector<std::string> changed;
    for (auto& path : ctx.context.open_paths()) {
        auto abs = ctx.workspace.root() / path;
        std::error_code ec;
        if (!fs::is_regular_file(abs, ec)) {
            ctx.context.close_file(path);
            changed.push_back(path);
            continue;
        }
        if (!ctx.context.apply_file_edit(path, fsx::read_file(abs)).empty()) changed.push_back(path);
    }
    ctx.context.set_dir_tree(context::render_dir_tree(ctx.workspace.root()));
    return changed;
}

} // namespace ouro::tools
