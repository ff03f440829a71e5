#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace longcot {

// ---------------------------------------------------------------------------
// Core record types. All of them are plain immutable-after-construction
// values; every pipeline stage reads and writes them through the
// line-delimited JSON format below.
// ---------------------------------------------------------------------------

struct Taxonomy {
    std::string main_category;
    std::vector<std::string> sub_categories;
};

struct Outline {
    std::string title;
    std::string body;
};

struct ReasoningFlow {
    int expected_count = 0;
    std::vector<Outline> outlines;
};

/// One teacher demonstration: question, domain labels, reference reasoning
/// flow, and the reference thought budget in tokens.
struct SeedRecord {
    std::string id;
    std::string question;
    Taxonomy taxonomy;
    ReasoningFlow flow_ref;
    long long budget_ref = 0;
};

struct QuestionRecord {
    std::string id;
    std::string question;
    Taxonomy taxonomy;
    std::optional<std::string> reference_answer;
    std::optional<long long> target_budget;
};

struct RationaleSegment {
    int outline_index = 0;
    std::string text;
};

struct RationaleTrace {
    std::vector<RationaleSegment> segments;
    std::string final_solution;
};

enum class FilterVerdictValue { correct, incorrect, unjudged, unparseable };

std::string to_string(FilterVerdictValue v);
FilterVerdictValue filter_verdict_from_string(const std::string& s);

struct Provenance {
    std::string backend;
    std::vector<std::string> demo_ids;
    std::string created_at;
};

/// One synthesized long-CoT training instance. aggregated_text holds the
/// thought-delimited rationale followed by the final solution.
struct DatasetRecord {
    std::string id;
    std::string question;
    ReasoningFlow flow;
    RationaleTrace trace;
    std::string aggregated_text;
    double budget_scale = 1.0;
    long long generated_thought_tokens = 0;
    FilterVerdictValue filter_verdict = FilterVerdictValue::unjudged;
    Provenance provenance;
};

/// Input triplet for the rewards subcommand.
struct RewardInput {
    std::string id;
    std::string response;
    std::string gold;
    long long target_thought_tokens = 0;
};

/// Input pair for the pairwise judge subcommand. Position assignment happens
/// at judge time, so sources are labelled left/right here, never A/B.
struct JudgeInput {
    std::string id;
    std::string question;
    std::string left_source;
    std::string left_response;
    std::string right_source;
    std::string right_response;
};

/// Per-question correctness samples for pass@n evaluation.
struct BonInput {
    std::string id;
    std::vector<bool> correct;
};

// JSON adapters (nlohmann ADL). One object per record, stable key order.
void to_json(nlohmann::json& j, const Taxonomy& v);
void from_json(const nlohmann::json& j, Taxonomy& v);
void to_json(nlohmann::json& j, const Outline& v);
void from_json(const nlohmann::json& j, Outline& v);
void to_json(nlohmann::json& j, const ReasoningFlow& v);
void from_json(const nlohmann::json& j, ReasoningFlow& v);
void to_json(nlohmann::json& j, const SeedRecord& v);
void from_json(const nlohmann::json& j, SeedRecord& v);
void to_json(nlohmann::json& j, const QuestionRecord& v);
void from_json(const nlohmann::json& j, QuestionRecord& v);
void to_json(nlohmann::json& j, const RationaleSegment& v);
void from_json(const nlohmann::json& j, RationaleSegment& v);
void to_json(nlohmann::json& j, const RationaleTrace& v);
void from_json(const nlohmann::json& j, RationaleTrace& v);
void to_json(nlohmann::json& j, const Provenance& v);
void from_json(const nlohmann::json& j, Provenance& v);
void to_json(nlohmann::json& j, const DatasetRecord& v);
void from_json(const nlohmann::json& j, DatasetRecord& v);
void to_json(nlohmann::json& j, const RewardInput& v);
void from_json(const nlohmann::json& j, RewardInput& v);
void to_json(nlohmann::json& j, const JudgeInput& v);
void from_json(const nlohmann::json& j, JudgeInput& v);
void to_json(nlohmann::json& j, const BonInput& v);
void from_json(const nlohmann::json& j, BonInput& v);

// ---------------------------------------------------------------------------
// Validation. Reports violated invariants by name; never throws.
// ---------------------------------------------------------------------------

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

ValidationReport validate(const Taxonomy& v);
ValidationReport validate(const Outline& v);
ValidationReport validate(const ReasoningFlow& v);
ValidationReport validate(const SeedRecord& v);
ValidationReport validate(const QuestionRecord& v);
ValidationReport validate(const RationaleTrace& v);
ValidationReport validate(const DatasetRecord& v);

/// Trims labels and drops duplicate subcategories (case-insensitive), the
/// normalization applied when seeds and questions are ingested.
Taxonomy normalize_taxonomy(const Taxonomy& t);

/// Ids that occur more than once, in first-occurrence order.
template <typename Record>
std::vector<std::string> duplicate_ids(const std::vector<Record>& records) {
    std::vector<std::string> seen, dups;
    for (const auto& r : records) {
        bool duplicate = false;
        for (const auto& s : seen) {
            if (s == r.id) { duplicate = true; break; }
        }
        if (!duplicate) {
            seen.push_back(r.id);
            continue;
        }
        bool reported = false;
        for (const auto& d : dups) {
            if (d == r.id) { reported = true; break; }
        }
        if (!reported) dups.push_back(r.id);
    }
    return dups;
}

// ---------------------------------------------------------------------------
// Line-delimited record files: UTF-8, one JSON object per line, multi-line
// text escaped inside the line. Order-preserving in both directions.
// ---------------------------------------------------------------------------

struct RejectedLine {
    std::size_t line_number = 0;  // 1-based
    std::string error;
    std::string raw;
};

template <typename Record>
struct LoadResult {
    std::vector<Record> records;
    std::vector<RejectedLine> rejections;
};

struct RecordIoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string serialize_record_line(const nlohmann::json& j);

namespace detail {
struct ParsedLine {
    std::size_t line_number = 0;
    nlohmann::json value;
};
struct JsonLinesResult {
    std::vector<ParsedLine> lines;
    std::vector<RejectedLine> rejections;
};
JsonLinesResult load_json_lines(const std::filesystem::path& path, bool strict);
std::size_t write_lines(const std::vector<std::string>& lines, const std::filesystem::path& path);
}  // namespace detail

/// Loads every parseable record in file order. Malformed lines are collected
/// with their 1-based line numbers; in strict mode the first one throws.
template <typename Record>
LoadResult<Record> load_records(const std::filesystem::path& path, bool strict = false) {
    detail::JsonLinesResult raw = detail::load_json_lines(path, strict);
    LoadResult<Record> out;
    out.rejections = std::move(raw.rejections);
    out.records.reserve(raw.lines.size());
    for (const auto& line : raw.lines) {
        try {
            out.records.push_back(line.value.template get<Record>());
        } catch (const std::exception& ex) {
            RejectedLine rej;
            rej.line_number = line.line_number;
            rej.error = ex.what();
            rej.raw = line.value.dump();
            if (strict) {
                throw RecordIoError(path.string() + ":" + std::to_string(rej.line_number) + ": " +
                                    rej.error);
            }
            out.rejections.push_back(std::move(rej));
        }
    }
    return out;
}

/// Writes one line per record, replacing the file atomically. Serialization
/// failure on any record aborts before anything is committed.
template <typename Record>
std::size_t write_records(const std::vector<Record>& records, const std::filesystem::path& path) {
    std::vector<std::string> lines;
    lines.reserve(records.size());
    for (const auto& r : records) {
        nlohmann::json j = r;
        lines.push_back(serialize_record_line(j));
    }
    return detail::write_lines(lines, path);
}

/// Serialized append-mode writer: one writer instance per output path, safe
/// to call from many tasks. Each append is flushed so partial progress
/// survives a crash.
class RecordWriter {
public:
    explicit RecordWriter(std::filesystem::path path, bool append = true);
    ~RecordWriter();
    RecordWriter(const RecordWriter&) = delete;
    RecordWriter& operator=(const RecordWriter&) = delete;

    template <typename Record>
    void append(const Record& r) {
        nlohmann::json j = r;
        append_line(serialize_record_line(j));
    }

    std::size_t written() const;

private:
    void append_line(const std::string& line);

    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace longcot
