#include "common/fs_util.hpp"

#include "common/error.hpp"

#include <algorithm>
#include <cstdio>
#include <atomic>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <system_error>
#include <vector>

#include <unistd.h>

namespace ouro::fsx {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io, "cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) fail(ErrorCode::io, "short write to " + path.string());
}

void write_file_atomic(const fs::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp" + std::to_string(::getpid());
    write_file(tmp, content);
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) fail(ErrorCode::io, "cannot rename into " + path.string() + ": " + ec.message());
}

void copy_tree(const fs::path& from, const fs::path& to) {
    if (!fs::is_directory(from)) fail(ErrorCode::not_found, "no such directory: " + from.string());
    std::error_code ec;
    fs::create_directories(to.parent_path(), ec);
    fs::copy(from, to, fs::copy_options::recursive | fs::copy_options::copy_symlinks, ec);
    if (ec) fail(ErrorCode::io, "copy " + from.string() + " -> " + to.string() + ": " + ec.message());
}

void set_tree_writable(const fs::path& root, bool writable) {
    if (!fs::exists(root)) return;
    // Removing write bits keeps r+x, so the tree stays listable in any order.
    auto apply = [&](const fs::path& p) {
        std::error_code ec;
        if (fs::is_symlink(p)) return;
        if (writable)
            fs::permissions(p, fs::perms::owner_write, fs::perm_options::add, ec);
        else
            fs::permissions(p, fs::perms::owner_write | fs::perms::group_write | fs::perms::others_write,
                            fs::perm_options::remove, ec);
    };
    apply(root);
    if (fs::is_directory(root))
        for (auto& entry : fs::recursive_directory_iterator(root)) apply(entry.path());
}

std::string hash_tree(const fs::path& root) {
    std::vector<fs::path> files;
    for (auto& entry : fs::recursive_directory_iterator(root)) {
        if (entry.is_regular_file()) files.push_back(fs::relative(entry.path(), root));
    }
    std::sort(files.begin(), files.end());
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](std::string_view bytes) {
        for (unsigned char c : bytes) {
            h ^= c;
            h *= 1099511628211ULL;
        }
    };
    for (auto& rel : files) {
        mix(rel.generic_string());
        mix(std::string_view("\0", 1));
        mix(read_file(root / rel));
        mix(std::string_view("\0", 1));
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

fs::path make_temp_dir(const std::string& prefix) {
    static std::atomic<unsigned> counter{0};
    std::random_device rd;
    auto base = fs::temp_directory_path();
    for (int attempt = 0; attempt < 100; ++attempt) {
        auto name = prefix + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + "-" +
                    std::to_string(rd() % 100000);
        auto p = base / name;
        std::error_code ec;
        if (fs::create_directory(p, ec)) return p;
    }
    fail(ErrorCode::io, "cannot create temp directory");
}

TempDir::~TempDir() {
    std::error_code ec;
    set_tree_writable(path_, true);
    fs::remove_all(path_, ec);
}

} // namespace ouro::fsx
