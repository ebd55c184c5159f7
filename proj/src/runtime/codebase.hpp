#pragma once

#include "protocol/protocol.hpp"
#include "tools/toolkit.hpp"

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace ouro::runtime {

namespace fs = std::filesystem;

// Slots a core prompt template may use, besides the agent's own call arguments.
inline const std::set<std::string> kCoreSlots = {"problem_statement", "initial_request", "problem_to_solve"};
inline const std::set<std::string> kOverseerSlots = {"overseer_examples", "graph_repr",      "previous_notes",
                                                     "complete_stop_token", "last_check_time", "current_time"};

struct AgentDefinition {
    std::string name;
    std::string model;
    std::string description;   // shown to callers
    std::string system_prompt; // agent definition text
    std::string core_template;
    std::vector<protocol::ArgSpec> args; // call arguments when used as a sub-agent
    std::vector<std::string> tools;
    std::vector<std::string> sub_agents;
};

// An agent codebase on disk: agent.json, prompts/, tools/, description.txt and
// agent_change_log.md. This is the unit the meta-loop archives and edits.
class Codebase {
public:
    // Throws Error(config) on a missing asset, an unknown tool or sub-agent, a
    // self-referencing agent, or a template slot that cannot be filled.
    static Codebase load(const fs::path& dir);

    const fs::path& dir() const { return dir_; }
    const std::string& entry() const { return entry_; }
    const AgentDefinition& agent(const std::string& name) const;
    bool has_agent(const std::string& name) const { return agents_.count(name) > 0; }
    std::vector<std::string> agent_names() const { return order_; }
    const tools::Toolkit& toolkit() const { return toolkit_; }

    const std::string& overseer_prompt() const { return overseer_prompt_; }
    const std::string& overseer_examples() const { return overseer_examples_; }
    const std::string& meta_prompt() const { return meta_prompt_; }
    const std::string& description() const { return description_; }
    const std::string& change_log() const { return change_log_; }

    protocol::Registry tool_registry(const AgentDefinition& def, bool have_archive) const;
    protocol::Registry agent_registry(const AgentDefinition& def) const;
    // Agent definition, tool docs, sub-agent docs and the calling convention.
    std::string system_section(const AgentDefinition& def, bool have_archive) const;
    std::string core_prompt(const AgentDefinition& def, const std::map<std::string, std::string>& slots) const;

private:
    fs::path dir_;
    std::string entry_;
    std::map<std::string, AgentDefinition> agents_;
    std::vector<std::string> order_;
    tools::Toolkit toolkit_;
    std::string overseer_prompt_;
    std::string overseer_examples_;
    std::string meta_prompt_;
    std::string description_;
    std::string change_log_;
};

} // namespace ouro::runtime
