#include "context/context.hpp"

#include "common/error.hpp"
#include "context/unified_diff.hpp"

#include <algorithm>

namespace ouro::context {

namespace fs = std::filesystem;

namespace {

std::string terminated(std::string s) {
    if (s.empty() || s.back() != '\n') s += '\n';
    return s;
}

} // namespace

FileView::FileView(std::string path, std::string content)
    : path_(std::move(path)), base_(content), effective_(std::move(content)) {}

std::string FileView::apply_edit(const std::string& content) {
    if (!open_) fail(ErrorCode::conflict, "file is not open: " + path_);
    auto diff = unified_diff(effective_, content, path_);
    if (diff.empty()) return diff;
    pending_.push_back(diff);
    effective_ = content;
    return diff;
}

bool FileView::consolidate() {
    if (pending_.empty()) return false;
    base_ = effective_;
    pending_.clear();
    return true;
}

StreamBlock assistant_block(const std::string& generation) {
    return {BlockKind::assistant, terminated(generation), {}};
}

StreamBlock tool_result_block(const std::string& tool, bool success, const std::string& content) {
    return {BlockKind::tool_result,
            "<TOOL_RESULT name=\"" + tool + "\" success=\"" + (success ? "true" : "false") + "\">\n" +
                terminated(content) + "</TOOL_RESULT>\n",
            {}};
}

StreamBlock agent_result_block(const std::string& agent, const std::string& result) {
    return {BlockKind::agent_result,
            "<AGENT_RESULT name=\"" + agent + "\">\n" + terminated(result) + "</AGENT_RESULT>\n", {}};
}

StreamBlock notification_block(const std::string& message) {
    return {BlockKind::notification, "<OVERSEER_NOTIFICATION>\n" + terminated(message) + "</OVERSEER_NOTIFICATION>\n",
            {}};
}

StreamBlock file_edit_block(const std::string& path, const std::string& diff) {
    return {BlockKind::file_edit, "<FILE_EDIT path=\"" + path + "\">\n" + terminated(diff) + "</FILE_EDIT>\n", path};
}

std::string AssembledContext::assistant_text() const {
    std::string out;
    for (auto& b : assistant_stream) out += b.text;
    return out;
}

std::string AssembledContext::serialize() const {
    return "<<system>>\n" + terminated(system_section) + "<<user>>\n" + terminated(core_section) + "<<assistant>>\n" +
           assistant_text();
}

std::vector<ChatMessage> AssembledContext::messages() const {
    std::vector<ChatMessage> out{{"system", system_section}, {"user", core_section}};
    if (!assistant_stream.empty()) out.push_back({"assistant", assistant_text()});
    return out;
}

AssembledContext build_context(const std::string& system_section, const std::string& core_prompt,
                               const std::vector<FileView>& open_files, const std::string& dir_tree,
                               const std::vector<StreamBlock>& stream) {
    AssembledContext ctx;
    ctx.system_section = system_section;
    std::string core = terminated(core_prompt);
    core += "\n== Open files ==\n";
    bool any = false;
    for (auto& f : open_files) {
        if (!f.is_open()) continue;
        any = true;
        core += "<FILE path=\"" + f.path() + "\">\n" + terminated(f.base_content()) + "</FILE>\n";
    }
    if (!any) core += "(none)\n";
    core += "\n== Directory tree ==\n" + terminated(dir_tree.empty() ? "(empty)" : dir_tree);
    ctx.core_section = std::move(core);
    ctx.assistant_stream = stream;
    return ctx;
}

bool prefix_preserved(const AssembledContext& prev, const AssembledContext& next) {
    auto a = prev.serialize();
    auto b = next.serialize();
    return b.size() >= a.size() && b.compare(0, a.size(), a) == 0;
}

std::string render_dir_tree(const fs::path& root, int max_depth, std::size_t max_entries) {
    std::string out = "./\n";
    std::size_t count = 0;
    bool cut = false;
    auto walk = [&](auto&& self, const fs::path& dir, int depth) -> void {
        std::vector<fs::directory_entry> dirs, files;
        std::error_code ec;
        for (auto& e : fs::directory_iterator(dir, ec)) {
            if (e.path().filename() == ".git") continue;
            (e.is_directory() ? dirs : files).push_back(e);
        }
        auto by_name = [](const fs::directory_entry& a, const fs::directory_entry& b) {
            return a.path().filename() < b.path().filename();
        };
        std::sort(dirs.begin(), dirs.end(), by_name);
        std::sort(files.begin(), files.end(), by_name);
        std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
        for (auto& d : dirs) {
            if (count++ >= max_entries) return void(cut = true);
            out += pad + d.path().filename().string() + "/\n";
            if (depth < max_depth) self(self, d.path(), depth + 1);
        }
        for (auto& f : files) {
            if (count++ >= max_entries) return void(cut = true);
            out += pad + f.path().filename().string() + "\n";
        }
    };
    walk(walk, root, 1);
    if (cut) out += "  ...\n";
    return out;
}

ContextState::ContextState(std::string system_section, std::string core_prompt, std::size_t consolidation_threshold)
    : system_(std::move(system_section)), core_prompt_(std::move(core_prompt)),
      threshold_(std::max<std::size_t>(1, consolidation_threshold)) {}

bool ContextState::open_file(const std::string& path, const std::string& content) {
    if (is_open(path)) return false;
    files_.emplace_back(path, content);
    ++core_epoch_;
    return true;
}

bool ContextState::close_file(const std::string& path) {
    auto it = std::find_if(files_.begin(), files_.end(), [&](const FileView& f) { return f.path() == path; });
    if (it == files_.end()) return false;
    files_.erase(it);
    std::erase_if(stream_, [&](const StreamBlock& b) { return b.kind == BlockKind::file_edit && b.file == path; });
    ++core_epoch_;
    return true;
}

bool ContextState::is_open(const std::string& path) const { return view(path) != nullptr; }

std::vector<std::string> ContextState::open_paths() const {
    std::vector<std::string> out;
    for (auto& f : files_) out.push_back(f.path());
    return out;
}

const FileView* ContextState::view(const std::string& path) const {
    for (auto& f : files_)
        if (f.path() == path) return &f;
    return nullptr;
}

std::string ContextState::apply_file_edit(const std::string& path, const std::string& content) {
    auto it = std::find_if(files_.begin(), files_.end(), [&](const FileView& f) { return f.path() == path; });
    if (it == files_.end()) fail(ErrorCode::conflict, "file is not open: " + path);
    auto diff = it->apply_edit(content);
    if (diff.empty()) return diff;
    stream_.push_back(file_edit_block(path, diff));
    if (it->pending_diffs().size() >= threshold_) consolidate(path);
    return diff;
}

bool ContextState::consolidate(const std::string& path) {
    auto it = std::find_if(files_.begin(), files_.end(), [&](const FileView& f) { return f.path() == path; });
    if (it == files_.end() || !it->consolidate()) return false;
    std::erase_if(stream_, [&](const StreamBlock& b) { return b.kind == BlockKind::file_edit && b.file == path; });
    ++core_epoch_;
    ++consolidations_;
    return true;
}

void ContextState::set_dir_tree(std::string tree) {
    if (tree == dir_tree_) return;
    dir_tree_ = std::move(tree);
    ++core_epoch_;
}

void ContextState::append(StreamBlock block) { stream_.push_back(std::move(block)); }

AssembledContext ContextState::assemble() const {
    return build_context(system_, core_prompt_, files_, dir_tree_, stream_);
}

} // namespace ouro::context
