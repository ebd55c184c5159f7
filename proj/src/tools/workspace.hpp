#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace ouro::tools {

namespace fs = std::filesystem;

// The directory an agent works in. Every path a tool touches goes through resolve().
class Workspace {
public:
    explicit Workspace(const fs::path& root);

    const fs::path& root() const { return root_; }
    // Accepts workspace-relative paths or absolute paths inside the root. Symlinks are
    // followed before the containment check. Throws Error(invalid_argument) on escape.
    fs::path resolve(std::string_view path) const;
    // Workspace-relative generic form of an absolute path inside the root.
    std::string relative(const fs::path& absolute) const;
    bool contains(const fs::path& absolute) const;

private:
    fs::path root_;
};

} // namespace ouro::tools
