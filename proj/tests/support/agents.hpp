#pragma once

#include "json.hpp"

#include <filesystem>
#include <functional>
#include <string>

namespace ouro::testing {

std::filesystem::path initial_agents_dir();

// Copies the shipped initial codebase to `dest` (which must not exist) and lets the
// caller rewrite agent.json before it is saved back.
void copy_initial_agents(const std::filesystem::path& dest,
                         const std::function<void(nlohmann::json&)>& patch = {});

} // namespace ouro::testing
