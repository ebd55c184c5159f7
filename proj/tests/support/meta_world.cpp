#include "support/meta_world.hpp"

#include "bench/generators.hpp"
#include "common/error.hpp"
#include "protocol/protocol.hpp"
#include "tools/toolkit.hpp"

#include <atomic>
#include <regex>

namespace ouro::testing {

using llm::ScriptReply;
using protocol::format_agent_call;
using protocol::format_tool_call;

namespace {

bool mentions(const llm::CompletionRequest& r, const std::string& s) {
    return llm::request_text(r).find(s) != std::string::npos;
}

const char* kListForMain =
    "python3 -c \"import json; p='agent.json'; d=json.load(open(p)); t=d['agents']['main']['tools']; "
    "t.count('smart_edit') or t.insert(0, 'smart_edit'); json.dump(d, open(p, 'w'), indent=2)\"";

std::string install_command(const std::string& plan) {
    if (plan == "break") return "echo '{' > agent.json";
    auto version = plan == "v1" ? "v1" : "v2";
    auto src = smart_edit_fixture(version);
    std::string cmd = "mkdir -p tools && cp " + tools::shell_quote((src / "smart_edit.json").string()) + " " +
                      tools::shell_quote((src / "smart_edit.py").string()) + " tools/ && " + kListForMain +
                      " && echo 'initial agent + smart_edit " + version + "' > description.txt";
    if (plan != "no_changelog")
        cmd += std::string(" && printf '\\n## smart_edit ") + version +
               "\\n\\nAdded a diff-applying edit tool so file edits no longer need a full rewrite.\\n' >> "
               "agent_change_log.md";
    return cmd;
}

std::string between(const std::string& s, const std::string& open, const std::string& close) {
    auto a = s.find(open);
    if (a == std::string::npos) return {};
    a += open.size();
    auto b = close.empty() ? std::string::npos : s.find(close, a);
    return s.substr(a, b == std::string::npos ? std::string::npos : b - a);
}

} // namespace

std::filesystem::path smart_edit_fixture(const std::string& version) {
    return std::filesystem::path(OURO_FIXTURES_DIR) / "smart_edit" / version;
}

std::shared_ptr<llm::ScriptedGateway> meta_world_gateway(std::vector<std::string> plan) {
    if (plan.empty()) plan = {"none"};
    auto runs = std::make_shared<std::atomic<std::size_t>>(0);
    return llm::ScriptedGateway::from_policy([plan, runs](const llm::CompletionRequest& r) -> ScriptReply {
        bool meta = mentions(r, "Earlier versions of this agent");
        if (meta && r.caller == "software_developer") {
            if (mentions(r, "<TOOL_RESULT")) return {format_tool_call("return_result", {{"result", "done"}})};
            static const std::regex step(R"(PLAN=([a-z0-9_]+))");
            std::smatch m;
            auto text = llm::request_text(r);
            std::regex_search(text, m, step);
            return {format_tool_call("execute_command", {{"command", install_command(m[1].str())}})};
        }
        if (meta) {
            if (mentions(r, "<AGENT_RESULT")) return {format_tool_call("submit_answer", {{"answer", "change made"}})};
            auto k = runs->fetch_add(1);
            const auto& p = plan[std::min(k, plan.size() - 1)];
            if (p == "stall") {
                ScriptReply s;
                s.stall = true;
                return s;
            }
            if (p == "none") return {format_tool_call("submit_answer", {{"answer", "nothing to change"}})};
            return {format_agent_call("software_developer", {{"problem_to_solve", "PLAN=" + p + " install the edit tool"}})};
        }
        // Benchmark side.
        if (mentions(r, "<TOOL_RESULT")) return {format_tool_call("submit_answer", {{"answer", "done"}})};
        auto text = llm::request_text(r);
        if (text.find("smart_edit") == std::string::npos)
            return {format_tool_call("submit_answer", {{"answer", "no edit tool"}})};
        auto path = between(text, "\n\nEdit ", " so that");
        auto diff = between(text, "unified diff:\n\n", "");
        // The statement is followed by the rest of the core prompt; keep only diff lines.
        std::string kept;
        for (std::size_t at = 0; at < diff.size();) {
            auto nl = diff.find('\n', at);
            auto line = diff.substr(at, nl == std::string::npos ? std::string::npos : nl - at);
            if (line.empty() || std::string("@ +-\\").find(line[0]) == std::string::npos) break;
            kept += line + "\n";
            if (nl == std::string::npos) break;
            at = nl + 1;
        }
        return {format_tool_call("smart_edit", {{"path", path}, {"diff", kept}})};
    });
}

std::vector<bench::BenchmarkTask> multi_hunk_edit_tasks(const std::filesystem::path& scratch, std::size_t count) {
    auto repo = scratch / "minirepo";
    bench::build_repo(repo, bench::load_repo_script(std::filesystem::path(OURO_FIXTURES_DIR) / "minirepo.json"));
    std::vector<bench::BenchmarkTask> out;
    for (auto& t : bench::gen_file_edit_tasks(repo, 0, 7)) {
        auto diff = t.statement.substr(t.statement.find("unified diff:"));
        std::size_t hunks = 0;
        for (auto at = diff.find("\n@@ "); at != std::string::npos; at = diff.find("\n@@ ", at + 1)) ++hunks;
        if (hunks >= 2) out.push_back(t);
        if (out.size() == count) break;
    }
    if (out.size() < count) fail(ErrorCode::not_found, "fixture repository has too few multi-hunk edits");
    return out;
}

} // namespace ouro::testing
