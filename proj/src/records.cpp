#include "longcot/records.hpp"

#include <fstream>
#include <mutex>
#include <set>

#include "longcot/util.hpp"

namespace longcot {

namespace {

constexpr std::string_view kThoughtOpen = "<thought>";
constexpr std::string_view kThoughtClose = "</thought>";

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
    std::size_t count = 0;
    std::size_t pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string_view::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

bool valid_budget_scale(double s) { return s == 1.0 || s == 0.5 || s == 0.25; }

}  // namespace

std::string to_string(FilterVerdictValue v) {
    switch (v) {
        case FilterVerdictValue::correct: return "correct";
        case FilterVerdictValue::incorrect: return "incorrect";
        case FilterVerdictValue::unjudged: return "unjudged";
        case FilterVerdictValue::unparseable: return "unparseable";
    }
    return "unjudged";
}

FilterVerdictValue filter_verdict_from_string(const std::string& s) {
    if (s == "correct") return FilterVerdictValue::correct;
    if (s == "incorrect") return FilterVerdictValue::incorrect;
    if (s == "unjudged") return FilterVerdictValue::unjudged;
    if (s == "unparseable") return FilterVerdictValue::unparseable;
    throw std::invalid_argument("unknown filter verdict: " + s);
}

// ---------------------------------------------------------------------------
// JSON adapters
// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const Taxonomy& v) {
    j = nlohmann::json{{"main_category", v.main_category}, {"sub_categories", v.sub_categories}};
}

void from_json(const nlohmann::json& j, Taxonomy& v) {
    j.at("main_category").get_to(v.main_category);
    j.at("sub_categories").get_to(v.sub_categories);
}

void to_json(nlohmann::json& j, const Outline& v) {
    j = nlohmann::json{{"title", v.title}, {"body", v.body}};
}

void from_json(const nlohmann::json& j, Outline& v) {
    j.at("title").get_to(v.title);
    j.at("body").get_to(v.body);
}

void to_json(nlohmann::json& j, const ReasoningFlow& v) {
    j = nlohmann::json{{"expected_count", v.expected_count}, {"outlines", v.outlines}};
}

void from_json(const nlohmann::json& j, ReasoningFlow& v) {
    j.at("expected_count").get_to(v.expected_count);
    j.at("outlines").get_to(v.outlines);
}

void to_json(nlohmann::json& j, const SeedRecord& v) {
    j = nlohmann::json{{"id", v.id},
                       {"question", v.question},
                       {"taxonomy", v.taxonomy},
                       {"flow_ref", v.flow_ref},
                       {"budget_ref", v.budget_ref}};
}

void from_json(const nlohmann::json& j, SeedRecord& v) {
    j.at("id").get_to(v.id);
    j.at("question").get_to(v.question);
    j.at("taxonomy").get_to(v.taxonomy);
    j.at("flow_ref").get_to(v.flow_ref);
    j.at("budget_ref").get_to(v.budget_ref);
}

void to_json(nlohmann::json& j, const QuestionRecord& v) {
    j = nlohmann::json{{"id", v.id}, {"question", v.question}, {"taxonomy", v.taxonomy}};
    if (v.reference_answer) j["reference_answer"] = *v.reference_answer;
    if (v.target_budget) j["target_budget"] = *v.target_budget;
}

void from_json(const nlohmann::json& j, QuestionRecord& v) {
    j.at("id").get_to(v.id);
    j.at("question").get_to(v.question);
    j.at("taxonomy").get_to(v.taxonomy);
    v.reference_answer.reset();
    v.target_budget.reset();
    if (j.contains("reference_answer") && !j["reference_answer"].is_null()) {
        v.reference_answer = j["reference_answer"].get<std::string>();
    }
    if (j.contains("target_budget") && !j["target_budget"].is_null()) {
        v.target_budget = j["target_budget"].get<long long>();
    }
}

void to_json(nlohmann::json& j, const RationaleSegment& v) {
    j = nlohmann::json{{"outline_index", v.outline_index}, {"text", v.text}};
}

void from_json(const nlohmann::json& j, RationaleSegment& v) {
    j.at("outline_index").get_to(v.outline_index);
    j.at("text").get_to(v.text);
}

void to_json(nlohmann::json& j, const RationaleTrace& v) {
    j = nlohmann::json{{"segments", v.segments}, {"final_solution", v.final_solution}};
}

void from_json(const nlohmann::json& j, RationaleTrace& v) {
    j.at("segments").get_to(v.segments);
    j.at("final_solution").get_to(v.final_solution);
}

void to_json(nlohmann::json& j, const Provenance& v) {
    j = nlohmann::json{
        {"backend", v.backend}, {"demo_ids", v.demo_ids}, {"created_at", v.created_at}};
}

void from_json(const nlohmann::json& j, Provenance& v) {
    j.at("backend").get_to(v.backend);
    j.at("demo_ids").get_to(v.demo_ids);
    j.at("created_at").get_to(v.created_at);
}

void to_json(nlohmann::json& j, const DatasetRecord& v) {
    j = nlohmann::json{{"id", v.id},
                       {"question", v.question},
                       {"flow", v.flow},
                       {"trace", v.trace},
                       {"aggregated_text", v.aggregated_text},
                       {"budget_scale", v.budget_scale},
                       {"generated_thought_tokens", v.generated_thought_tokens},
                       {"filter_verdict", to_string(v.filter_verdict)},
                       {"provenance", v.provenance}};
}

void from_json(const nlohmann::json& j, DatasetRecord& v) {
    j.at("id").get_to(v.id);
    j.at("question").get_to(v.question);
    j.at("flow").get_to(v.flow);
    j.at("trace").get_to(v.trace);
    j.at("aggregated_text").get_to(v.aggregated_text);
    j.at("budget_scale").get_to(v.budget_scale);
    j.at("generated_thought_tokens").get_to(v.generated_thought_tokens);
    v.filter_verdict = filter_verdict_from_string(j.at("filter_verdict").get<std::string>());
    j.at("provenance").get_to(v.provenance);
}

void to_json(nlohmann::json& j, const RewardInput& v) {
    j = nlohmann::json{{"id", v.id},
                       {"response", v.response},
                       {"gold", v.gold},
                       {"target_thought_tokens", v.target_thought_tokens}};
}

void from_json(const nlohmann::json& j, RewardInput& v) {
    j.at("id").get_to(v.id);
    j.at("response").get_to(v.response);
    j.at("gold").get_to(v.gold);
    j.at("target_thought_tokens").get_to(v.target_thought_tokens);
}

void to_json(nlohmann::json& j, const JudgeInput& v) {
    j = nlohmann::json{{"id", v.id},
                       {"question", v.question},
                       {"left_source", v.left_source},
                       {"left_response", v.left_response},
                       {"right_source", v.right_source},
                       {"right_response", v.right_response}};
}

void from_json(const nlohmann::json& j, JudgeInput& v) {
    j.at("id").get_to(v.id);
    j.at("question").get_to(v.question);
    j.at("left_source").get_to(v.left_source);
    j.at("left_response").get_to(v.left_response);
    j.at("right_source").get_to(v.right_source);
    j.at("right_response").get_to(v.right_response);
}

void to_json(nlohmann::json& j, const BonInput& v) {
    j = nlohmann::json{{"id", v.id}, {"correct", v.correct}};
}

void from_json(const nlohmann::json& j, BonInput& v) {
    j.at("id").get_to(v.id);
    j.at("correct").get_to(v.correct);
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

ValidationReport validate(const Taxonomy& v) {
    ValidationReport report;
    if (util::trim(v.main_category).empty()) {
        report.violations.push_back("main_category non-empty");
    }
    std::set<std::string> seen;
    for (const auto& sub : v.sub_categories) {
        if (!seen.insert(util::to_lower(util::trim(sub))).second) {
            report.violations.push_back("sub_categories contain no duplicates");
            break;
        }
    }
    return report;
}

ValidationReport validate(const Outline& v) {
    ValidationReport report;
    if (util::trim(v.title).empty()) {
        report.violations.push_back("title non-empty");
    }
    return report;
}

ValidationReport validate(const ReasoningFlow& v) {
    ValidationReport report;
    if (v.outlines.empty()) {
        report.violations.push_back("outlines non-empty");
    }
    if (v.expected_count != static_cast<int>(v.outlines.size())) {
        report.violations.push_back("expected_count equals length of outlines");
    }
    for (const auto& o : v.outlines) {
        if (!validate(o).ok()) {
            report.violations.push_back("every outline valid");
            break;
        }
    }
    return report;
}

ValidationReport validate(const SeedRecord& v) {
    ValidationReport report;
    if (v.id.empty()) report.violations.push_back("id non-empty");
    if (v.budget_ref < 1) report.violations.push_back("budget_ref >= 1");
    if (v.flow_ref.outlines.empty()) report.violations.push_back("flow_ref has >= 1 outline");
    for (const auto& viol : validate(v.taxonomy).violations) report.violations.push_back(viol);
    return report;
}

ValidationReport validate(const QuestionRecord& v) {
    ValidationReport report;
    if (v.id.empty()) report.violations.push_back("id non-empty");
    if (v.target_budget && *v.target_budget < 1) {
        report.violations.push_back("target_budget >= 1");
    }
    for (const auto& viol : validate(v.taxonomy).violations) report.violations.push_back(viol);
    return report;
}

ValidationReport validate(const RationaleTrace& v) {
    ValidationReport report;
    for (std::size_t i = 0; i < v.segments.size(); ++i) {
        if (v.segments[i].outline_index != static_cast<int>(i)) {
            report.violations.push_back("outline_index values are 0..n-1 in order");
            break;
        }
    }
    for (const auto& seg : v.segments) {
        if (seg.text.empty()) {
            report.violations.push_back("segments non-empty");
            break;
        }
    }
    if (v.final_solution.empty()) {
        report.violations.push_back("final_solution non-empty");
    }
    return report;
}

ValidationReport validate(const DatasetRecord& v) {
    ValidationReport report;
    if (v.id.empty()) report.violations.push_back("id non-empty");
    if (count_occurrences(v.aggregated_text, kThoughtOpen) != 1 ||
        count_occurrences(v.aggregated_text, kThoughtClose) != 1) {
        report.violations.push_back("aggregated_text contains exactly one thought delimiter pair");
    }
    if (v.trace.segments.size() != v.flow.outlines.size()) {
        report.violations.push_back("segment count equals outline count");
    }
    if (!valid_budget_scale(v.budget_scale)) {
        report.violations.push_back("budget_scale in {1.00, 0.50, 0.25}");
    }
    if (v.generated_thought_tokens < 0) {
        report.violations.push_back("generated_thought_tokens >= 0");
    }
    for (const auto& viol : validate(v.flow).violations) report.violations.push_back(viol);
    for (const auto& viol : validate(v.trace).violations) report.violations.push_back(viol);
    return report;
}

Taxonomy normalize_taxonomy(const Taxonomy& t) {
    Taxonomy out;
    out.main_category = util::trim(t.main_category);
    std::set<std::string> seen;
    for (const auto& sub : t.sub_categories) {
        std::string trimmed = util::trim(sub);
        if (trimmed.empty()) continue;
        if (seen.insert(util::to_lower(trimmed)).second) {
            out.sub_categories.push_back(trimmed);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Line-delimited I/O
// ---------------------------------------------------------------------------

std::string serialize_record_line(const nlohmann::json& j) {
    // dump() escapes embedded newlines, keeping the one-record-per-line
    // contract exact for multi-line text fields.
    return j.dump();
}

namespace detail {

JsonLinesResult load_json_lines(const std::filesystem::path& path, bool strict) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw RecordIoError("cannot open record file: " + path.string());
    }
    JsonLinesResult result;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (util::trim(line).empty()) continue;
        nlohmann::json parsed = nlohmann::json::parse(line, nullptr, false);
        if (parsed.is_discarded()) {
            if (strict) {
                throw RecordIoError(path.string() + ":" + std::to_string(line_number) +
                                    ": malformed JSON line");
            }
            result.rejections.push_back({line_number, "malformed JSON line", line});
            continue;
        }
        result.lines.push_back({line_number, std::move(parsed)});
    }
    return result;
}

std::size_t write_lines(const std::vector<std::string>& lines, const std::filesystem::path& path) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw RecordIoError("cannot open for writing: " + tmp.string());
        }
        for (const auto& line : lines) {
            out << line << '\n';
        }
        out.flush();
        if (!out) {
            throw RecordIoError("write failed: " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
    return lines.size();
}

}  // namespace detail

struct RecordWriter::Impl {
    std::mutex mutex;
    std::ofstream out;
    std::filesystem::path path;
    std::size_t written = 0;
};

RecordWriter::RecordWriter(std::filesystem::path path, bool append) : impl_(new Impl) {
    impl_->path = std::move(path);
    if (impl_->path.has_parent_path()) {
        std::filesystem::create_directories(impl_->path.parent_path());
    }
    auto mode = std::ios::binary | (append ? std::ios::app : std::ios::trunc);
    impl_->out.open(impl_->path, mode);
    if (!impl_->out) {
        throw RecordIoError("cannot open for writing: " + impl_->path.string());
    }
}

RecordWriter::~RecordWriter() = default;

void RecordWriter::append_line(const std::string& line) {
    std::lock_guard<std::mutex> lock(impl_->mutex);
    impl_->out << line << '\n';
    impl_->out.flush();
    if (!impl_->out) {
        throw RecordIoError("write failed: " + impl_->path.string());
    }
    ++impl_->written;
}

std::size_t RecordWriter::written() const {
    std::lock_guard<std::mutex> lock(impl_->mutex);
    return impl_->written;
}

}  // namespace longcot
