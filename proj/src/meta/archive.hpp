#pragma once

#include "bench/report.hpp"
#include "tools/archive_query.hpp"

#include "json.hpp"

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace ouro::meta {

namespace fs = std::filesystem;

struct IterationRecord {
    int index = 0;
    fs::path code_ref;
    std::string description;
    std::string change_log;
    std::optional<int> generated_by; // meta-agent iteration; empty for iteration 0
    std::optional<bench::Report> report;
    std::optional<double> utility;

    bool evaluated() const { return utility.has_value(); }
};

// On-disk layout, one directory per iteration:
//   <root>/<i>/code/                 agent codebase snapshot (read-only)
//   <root>/<i>/description.txt
//   <root>/<i>/agent_change_log.md
//   <root>/<i>/generated_by          index of the meta-agent, absent for 0
//   <root>/<i>/report.json           written once when evaluated
//   <root>/<i>/utility.json          written last; its presence marks the record evaluated
// New iterations are assembled in a hidden staging directory and renamed into place,
// so an interrupted write leaves no partial record.
class Archive : public tools::ArchiveSource {
public:
    // Creates the directory if needed and loads existing records. Throws Error(config) on
    // non-contiguous indices or a record without code/.
    explicit Archive(fs::path root);

    const fs::path& root() const { return root_; }
    std::size_t size() const;
    bool empty() const { return size() == 0; }
    std::vector<IterationRecord> records() const;
    IterationRecord record(int index) const; // Error(not_found)

    // Snapshots `code_dir` as the next iteration and returns its index.
    int append(const fs::path& code_dir, std::optional<int> generated_by = std::nullopt);
    // Error(conflict) if the record is already evaluated.
    void set_evaluation(int index, const bench::Report& report);
    // Extra files stored beside a record, e.g. the meta-agent's trace.
    void attach(int index, const std::string& name, std::string_view content);

    std::vector<tools::IterationView> iterations() const override;
    // [{index, description, change_log, generated_by, utility, p_score, evaluated, code_ref}]
    nlohmann::ordered_json summaries() const;

private:
    IterationRecord load_record(int index) const;

    fs::path root_;
    mutable std::mutex mu_;
    std::vector<IterationRecord> records_;
};

// Index of the highest utility among evaluated records; ties go to the lowest index.
// Throws Error(not_found) when nothing is evaluated.
int select_meta_agent(const std::vector<IterationRecord>& records);

// Writable copy of an iteration's code at `workdir`, which must not exist.
fs::path materialize_iteration(const Archive& archive, int index, const fs::path& workdir);

} // namespace ouro::meta
