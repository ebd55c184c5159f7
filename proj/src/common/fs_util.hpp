#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace ouro::fsx {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path);
// Writes via a sibling temp file and rename, so readers never see a partial file.
void write_file_atomic(const fs::path& path, std::string_view content);
void write_file(const fs::path& path, std::string_view content);

// Recursive copy preserving the tree; destination must not exist.
void copy_tree(const fs::path& from, const fs::path& to);
void set_tree_writable(const fs::path& root, bool writable);

// Stable content hash of a directory tree (relative paths + bytes). FNV-1a 64.
std::string hash_tree(const fs::path& root);

// A fresh, empty, uniquely named directory under the system temp dir.
fs::path make_temp_dir(const std::string& prefix);

// RAII temp directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& prefix = "ouro") : path_(make_temp_dir(prefix)) {}
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

} // namespace ouro::fsx
