#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ouro::context {

inline constexpr std::size_t kConsolidationThreshold = 5;
inline constexpr int kDirTreeDepth = 3;

// An open file as the model sees it: a stale base plus the diffs applied since.
class FileView {
public:
    FileView(std::string path, std::string content);

    const std::string& path() const { return path_; }
    const std::string& base_content() const { return base_; }
    const std::vector<std::string>& pending_diffs() const { return pending_; }
    const std::string& effective_content() const { return effective_; }
    bool is_open() const { return open_; }
    void close() { open_ = false; }

    // Appends the diff from the effective content to `content`. Returns the diff text
    // ("" for a no-op edit). Throws Error(conflict) if the view is closed.
    std::string apply_edit(const std::string& content);
    // base := effective, diffs cleared. Returns false when there was nothing to fold.
    bool consolidate();

private:
    std::string path_;
    std::string base_;
    std::string effective_;
    std::vector<std::string> pending_;
    bool open_ = true;
};

enum class BlockKind { assistant, tool_result, agent_result, notification, file_edit };

struct StreamBlock {
    BlockKind kind;
    std::string text;     // already formatted for the context window
    std::string file;     // file_edit only
    bool operator==(const StreamBlock&) const = default;
};

StreamBlock assistant_block(const std::string& generation);
StreamBlock tool_result_block(const std::string& tool, bool success, const std::string& content);
StreamBlock agent_result_block(const std::string& agent, const std::string& result);
StreamBlock notification_block(const std::string& message);
StreamBlock file_edit_block(const std::string& path, const std::string& diff);

struct ChatMessage {
    std::string role; // system | user | assistant
    std::string content;
    bool operator==(const ChatMessage&) const = default;
};

struct AssembledContext {
    std::string system_section;
    std::string core_section;
    std::vector<StreamBlock> assistant_stream;

    // The exact byte stream whose prefix stability matters for cache reuse.
    std::string serialize() const;
    // system, user (core prompt), then the assistant stream if non-empty.
    std::vector<ChatMessage> messages() const;
    std::string assistant_text() const;
};

// Pure assembly; no I/O.
AssembledContext build_context(const std::string& system_section, const std::string& core_prompt,
                               const std::vector<FileView>& open_files, const std::string& dir_tree,
                               const std::vector<StreamBlock>& stream);

// True iff prev.serialize() is a byte prefix of next.serialize().
bool prefix_preserved(const AssembledContext& prev, const AssembledContext& next);

// Sorted listing, directories first, `.git` skipped, `max_depth` levels below root.
std::string render_dir_tree(const std::filesystem::path& root, int max_depth = kDirTreeDepth,
                            std::size_t max_entries = 400);

// Per-agent-call context state. Every change to the core section (file opened or
// closed, directory tree changed, consolidation) bumps core_epoch(); between bumps
// the serialized context only ever grows.
class ContextState {
public:
    ContextState(std::string system_section, std::string core_prompt,
                 std::size_t consolidation_threshold = kConsolidationThreshold);

    // Returns false if the file was already open (no change).
    bool open_file(const std::string& path, const std::string& content);
    bool close_file(const std::string& path);
    bool is_open(const std::string& path) const;
    std::vector<std::string> open_paths() const;
    const FileView* view(const std::string& path) const;

    // Records an edit of an open file; auto-consolidates at the threshold.
    // Returns the diff ("" for a no-op).
    std::string apply_file_edit(const std::string& path, const std::string& content);
    bool consolidate(const std::string& path);

    void set_dir_tree(std::string tree);
    void append(StreamBlock block);

    AssembledContext assemble() const;
    std::uint64_t core_epoch() const { return core_epoch_; }
    std::size_t consolidations() const { return consolidations_; }
    const std::vector<StreamBlock>& stream() const { return stream_; }

private:
    std::vector<FileView> files_; // open order
    std::string system_;
    std::string core_prompt_;
    std::string dir_tree_;
    std::vector<StreamBlock> stream_;
    std::size_t threshold_;
    std::uint64_t core_epoch_ = 0;
    std::size_t consolidations_ = 0;
};

} // namespace ouro::context
