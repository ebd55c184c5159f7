#include "tools/workspace.hpp"

#include "common/error.hpp"

namespace ouro::tools {

Workspace::Workspace(const fs::path& root) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) fail(ErrorCode::not_found, "workspace root is not a directory: " + root.string());
    root_ = fs::canonical(root);
}

bool Workspace::contains(const fs::path& absolute) const {
    auto rel = absolute.lexically_relative(root_);
    if (rel.empty()) return false;
    auto first = *rel.begin();
    return first != "..";
}

fs::path Workspace::resolve(std::string_view path) const {
    if (path.empty()) fail(ErrorCode::invalid_argument, "empty path");
    fs::path p(path);
    fs::path joined = p.is_absolute() ? p : root_ / p;
    // weakly_canonical resolves symlinks in the existing prefix, so a link pointing
    // outside the root is caught here too.
    fs::path resolved = fs::weakly_canonical(joined.lexically_normal());
    if (resolved != root_ && !contains(resolved))
        fail(ErrorCode::invalid_argument, "path is outside the workspace: " + std::string(path));
    return resolved;
}

std::string Workspace::relative(const fs::path& absolute) const {
    if (absolute == root_) return ".";
    return absolute.lexically_relative(root_).generic_string();
}

} // namespace ouro::tools
