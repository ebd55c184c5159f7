#include "runtime/codebase.hpp"

#include "common/error.hpp"
#include "common/fs_util.hpp"
#include "common/text.hpp"

#include "json.hpp"

namespace ouro::runtime {

using json = nlohmann::json;

namespace {

std::string read_asset(const fs::path& dir, const std::string& rel) {
    auto p = dir / rel;
    std::error_code ec;
    if (!fs::is_regular_file(p, ec)) fail(ErrorCode::config, "missing agent asset: " + p.string());
    return fsx::read_file(p);
}

void check_slots(const std::string& what, const std::string& tmpl, const std::set<std::string>& allowed) {
    std::set<std::string> slots;
    try {
        slots = text::template_slots(tmpl);
    } catch (const Error& e) {
        fail(ErrorCode::config, what + ": " + e.what());
    }
    for (auto& s : slots)
        if (!allowed.count(s)) fail(ErrorCode::config, what + ": unknown template slot {" + s + "}");
}

} // namespace

Codebase Codebase::load(const fs::path& dir) {
    Codebase cb;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) fail(ErrorCode::config, "agent codebase not found: " + dir.string());
    cb.dir_ = fs::canonical(dir);
    json j;
    try {
        j = json::parse(read_asset(cb.dir_, "agent.json"));
    } catch (const json::exception& e) {
        fail(ErrorCode::config, "invalid agent.json: " + std::string(e.what()));
    }
    cb.toolkit_ = tools::Toolkit::builtin();
    cb.toolkit_.load_plugins(cb.dir_);

    try {
        cb.entry_ = j.at("entry").get<std::string>();
        for (auto& [name, a] : j.at("agents").items()) {
            AgentDefinition def;
            def.name = name;
            def.model = a.at("model").get<std::string>();
            def.description = a.value("description", "");
            def.system_prompt = read_asset(cb.dir_, a.at("system").get<std::string>());
            def.core_template = read_asset(cb.dir_, a.at("core").get<std::string>());
            for (auto& arg : a.value("args", json::array()))
                def.args.push_back({arg.at("name").get<std::string>(), arg.value("doc", ""), arg.value("required", true)});
            def.tools = a.value("tools", std::vector<std::string>{});
            def.sub_agents = a.value("sub_agents", std::vector<std::string>{});
            cb.order_.push_back(name);
            cb.agents_.emplace(name, std::move(def));
        }
        auto& ov = j.at("overseer");
        cb.overseer_prompt_ = read_asset(cb.dir_, ov.at("prompt").get<std::string>());
        cb.overseer_examples_ = read_asset(cb.dir_, ov.at("examples").get<std::string>());
        cb.meta_prompt_ = read_asset(cb.dir_, j.at("meta_prompt").get<std::string>());
    } catch (const json::exception& e) {
        fail(ErrorCode::config, "invalid agent.json: " + std::string(e.what()));
    }
    cb.description_ = text::trim(read_asset(cb.dir_, "description.txt"));
    cb.change_log_ = read_asset(cb.dir_, "agent_change_log.md");

    if (!cb.agents_.count(cb.entry_)) fail(ErrorCode::config, "entry agent not defined: " + cb.entry_);
    for (auto& [name, def] : cb.agents_) {
        for (auto& t : def.tools)
            if (!cb.toolkit_.find(t)) fail(ErrorCode::config, "agent " + name + " lists unknown tool " + t);
        for (auto& s : def.sub_agents) {
            if (s == name) fail(ErrorCode::config, "agent " + name + " lists itself as a sub-agent");
            if (!cb.agents_.count(s)) fail(ErrorCode::config, "agent " + name + " lists unknown sub-agent " + s);
        }
        auto allowed = kCoreSlots;
        for (auto& a : def.args) allowed.insert(a.name);
        check_slots(name + " core prompt", def.core_template, allowed);
        check_slots(name + " system prompt", def.system_prompt, {});
        cb.tool_registry(def, true); // validates argument names
        cb.agent_registry(def);
    }
    check_slots("overseer prompt", cb.overseer_prompt_, kOverseerSlots);
    check_slots("meta-improvement prompt", cb.meta_prompt_, {});
    return cb;
}

const AgentDefinition& Codebase::agent(const std::string& name) const {
    auto it = agents_.find(name);
    if (it == agents_.end()) fail(ErrorCode::not_found, "unknown agent: " + name);
    return it->second;
}

protocol::Registry Codebase::tool_registry(const AgentDefinition& def, bool have_archive) const {
    return toolkit_.registry(def.tools, have_archive);
}

protocol::Registry Codebase::agent_registry(const AgentDefinition& def) const {
    protocol::Registry reg;
    for (auto& s : def.sub_agents) {
        const auto& sub = agent(s);
        std::string doc = sub.description;
        doc += "\nTools: " + (sub.tools.empty() ? std::string("none") : text::join(sub.tools, ", "));
        reg.add({sub.name, doc, sub.args});
    }
    return reg;
}

std::string Codebase::system_section(const AgentDefinition& def, bool have_archive) const {
    auto tools = tool_registry(def, have_archive);
    auto agents = agent_registry(def);
    std::string out = text::fill_template(def.system_prompt, {});
    if (!out.empty() && out.back() != '\n') out += '\n';
    if (!tools.empty()) out += "\n== Tools ==\n\n" + protocol::describe_tools(tools);
    if (!agents.empty()) out += "\n== Sub-agents ==\n\n" + protocol::describe_agents(agents);
    if (!tools.empty() || !agents.empty()) out += "\n" + protocol::calling_convention(!agents.empty());
    else out += "\nReply with your answer. When you are done, write <COMPLETE></COMPLETE>.\n";
    return out;
}

std::string Codebase::core_prompt(const AgentDefinition& def, const std::map<std::string, std::string>& slots) const {
    return text::fill_template(def.core_template, slots);
}

} // namespace ouro::runtime
