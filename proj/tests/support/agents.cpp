#include "support/agents.hpp"

#include "common/fs_util.hpp"

namespace ouro::testing {

std::filesystem::path initial_agents_dir() { return std::filesystem::path(OURO_AGENTS_DIR) / "initial"; }

void copy_initial_agents(const std::filesystem::path& dest, const std::function<void(nlohmann::json&)>& patch) {
    fsx::copy_tree(initial_agents_dir(), dest);
    if (!patch) return;
    auto j = nlohmann::json::parse(fsx::read_file(dest / "agent.json"));
    patch(j);
    fsx::write_file(dest / "agent.json", j.dump(2));
}

} // namespace ouro::testing
