#include "meta/archive.hpp"

#include "common/error.hpp"
#include "common/fs_util.hpp"
#include "common/text.hpp"

#include <algorithm>
#include <charconv>

namespace ouro::meta {

using ojson = nlohmann::ordered_json;

namespace {

std::optional<int> parse_index(const std::string& name) {
    if (name.empty() || name.size() > 9 || (name.size() > 1 && name[0] == '0')) return std::nullopt;
    int v = 0;
    auto [p, ec] = std::from_chars(name.data(), name.data() + name.size(), v);
    if (ec != std::errc() || p != name.data() + name.size()) return std::nullopt;
    return v;
}

std::string read_optional(const fs::path& p) {
    std::error_code ec;
    return fs::is_regular_file(p, ec) ? fsx::read_file(p) : std::string();
}

} // namespace

Archive::Archive(fs::path root) : root_(std::move(root)) {
    fs::create_directories(root_);
    std::vector<int> found;
    for (auto& entry : fs::directory_iterator(root_)) {
        auto name = entry.path().filename().string();
        if (text::starts_with(name, ".staging-")) {
            // Left behind by an interrupted append.
            fsx::set_tree_writable(entry.path(), true);
            fs::remove_all(entry.path());
            continue;
        }
        if (!entry.is_directory()) continue;
        if (auto i = parse_index(name)) found.push_back(*i);
    }
    std::sort(found.begin(), found.end());
    for (std::size_t k = 0; k < found.size(); ++k) {
        if (found[k] != static_cast<int>(k))
            fail(ErrorCode::config, "archive " + root_.string() + " is missing iteration " + std::to_string(k));
        records_.push_back(load_record(found[k]));
    }
}

IterationRecord Archive::load_record(int index) const {
    auto dir = root_ / std::to_string(index);
    IterationRecord r;
    r.index = index;
    r.code_ref = dir / "code";
    if (!fs::is_directory(r.code_ref))
        fail(ErrorCode::config, "archive iteration " + std::to_string(index) + " has no code/ snapshot");
    r.description = text::trim(read_optional(dir / "description.txt"));
    r.change_log = read_optional(dir / "agent_change_log.md");
    auto gen = text::trim(read_optional(dir / "generated_by"));
    if (!gen.empty()) r.generated_by = parse_index(gen);
    if (fs::exists(dir / "utility.json")) {
        try {
            r.report = bench::Report::from_json(ojson::parse(fsx::read_file(dir / "report.json")));
            r.utility = ojson::parse(fsx::read_file(dir / "utility.json")).at("utility").get<double>();
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::parse, "archive iteration " + std::to_string(index) + ": " + e.what());
        }
    }
    return r;
}

std::size_t Archive::size() const {
    std::lock_guard lock(mu_);
    return records_.size();
}

std::vector<IterationRecord> Archive::records() const {
    std::lock_guard lock(mu_);
    return records_;
}

IterationRecord Archive::record(int index) const {
    std::lock_guard lock(mu_);
    if (index < 0 || static_cast<std::size_t>(index) >= records_.size())
        fail(ErrorCode::not_found, "no archive iteration " + std::to_string(index));
    return records_[static_cast<std::size_t>(index)];
}

int Archive::append(const fs::path& code_dir, std::optional<int> generated_by) {
    std::lock_guard lock(mu_);
    int index = static_cast<int>(records_.size());
    if (generated_by && (*generated_by < 0 || *generated_by >= index))
        fail(ErrorCode::invalid_argument, "generated_by must name an existing iteration");
    auto staging = root_ / (".staging-" + std::to_string(index));
    std::error_code ec;
    fs::remove_all(staging, ec);
    fsx::copy_tree(code_dir, staging / "code");
    fs::remove_all(staging / "code" / ".git", ec);
    fsx::write_file(staging / "description.txt", read_optional(code_dir / "description.txt"));
    fsx::write_file(staging / "agent_change_log.md", read_optional(code_dir / "agent_change_log.md"));
    if (generated_by) fsx::write_file(staging / "generated_by", std::to_string(*generated_by) + "\n");
    fsx::set_tree_writable(staging / "code", false);
    fs::rename(staging, root_ / std::to_string(index));
    records_.push_back(load_record(index));
    return index;
}

void Archive::set_evaluation(int index, const bench::Report& report) {
    std::lock_guard lock(mu_);
    if (index < 0 || static_cast<std::size_t>(index) >= records_.size())
        fail(ErrorCode::not_found, "no archive iteration " + std::to_string(index));
    auto& r = records_[static_cast<std::size_t>(index)];
    if (r.evaluated()) fail(ErrorCode::conflict, "iteration " + std::to_string(index) + " is already evaluated");
    auto dir = root_ / std::to_string(index);
    fsx::write_file_atomic(dir / "report.json", report.to_json().dump(2) + "\n");
    ojson u = {{"utility", report.utility}, {"p_score", report.p_score}};
    fsx::write_file_atomic(dir / "utility.json", u.dump(2) + "\n");
    r.report = report;
    r.utility = report.utility;
}

void Archive::attach(int index, const std::string& name, std::string_view content) {
    static const std::vector<std::string> reserved = {"code", "description.txt", "agent_change_log.md",
                                                      "generated_by", "report.json", "utility.json"};
    if (name.empty() || name.find('/') != std::string::npos || name[0] == '.' ||
        std::find(reserved.begin(), reserved.end(), name) != reserved.end())
        fail(ErrorCode::invalid_argument, "cannot attach " + name);
    std::lock_guard lock(mu_);
    if (index < 0 || static_cast<std::size_t>(index) >= records_.size())
        fail(ErrorCode::not_found, "no archive iteration " + std::to_string(index));
    fsx::write_file_atomic(root_ / std::to_string(index) / name, content);
}

std::vector<tools::IterationView> Archive::iterations() const {
    std::vector<tools::IterationView> out;
    for (auto& r : records()) {
        tools::IterationView v;
        v.index = r.index;
        v.description = r.description;
        v.evaluated = r.evaluated();
        if (r.evaluated()) {
            v.utility = *r.utility;
            v.report = *r.report;
        }
        out.push_back(std::move(v));
    }
    return out;
}

ojson Archive::summaries() const {
    ojson out = ojson::array();
    for (auto& r : records()) {
        ojson j;
        j["index"] = r.index;
        j["code_ref"] = r.code_ref.string();
        j["description"] = r.description;
        j["change_log"] = r.change_log;
        j["generated_by"] = r.generated_by ? ojson(*r.generated_by) : ojson(nullptr);
        j["evaluated"] = r.evaluated();
        j["utility"] = r.utility ? ojson(*r.utility) : ojson(nullptr);
        j["p_score"] = r.report ? ojson(r.report->p_score) : ojson(nullptr);
        out.push_back(std::move(j));
    }
    return out;
}

int select_meta_agent(const std::vector<IterationRecord>& records) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!records[i].evaluated()) continue;
        if (!best || *records[i].utility > *records[*best].utility) best = i;
    }
    if (!best) fail(ErrorCode::not_found, "no evaluated iteration in the archive");
    return records[*best].index;
}

fs::path materialize_iteration(const Archive& archive, int index, const fs::path& workdir) {
    auto r = archive.record(index);
    if (!fs::is_directory(r.code_ref)) fail(ErrorCode::not_found, "missing snapshot: " + r.code_ref.string());
    if (fs::exists(workdir)) fail(ErrorCode::conflict, "workdir exists: " + workdir.string());
    fsx::copy_tree(r.code_ref, workdir);
    fsx::set_tree_writable(workdir, true);
    return workdir;
}

} // namespace ouro::meta
