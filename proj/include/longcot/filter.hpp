#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "longcot/backend.hpp"
#include "longcot/records.hpp"

namespace longcot::filtering {

struct FilterVerdict {
    FilterVerdictValue value = FilterVerdictValue::unjudged;
    std::string judge_raw;
    std::string judge_model;
};

struct JudgeCorrectnessOptions {
    std::string model_name = "gpt-4o";
    int max_tokens = 256;
    double temperature = 0.0;
    std::uint64_t seed = 0;
};

/// Asks the judge whether the generated answer span agrees with the
/// reference answer. The verdict is the last non-empty line of the
/// completion, a single CORRECT/INCORRECT token (case-insensitive); anything
/// else is re-asked once and then recorded as unparseable. Never defaults to
/// correct.
FilterVerdict judge_correctness(const std::string& question, const std::string& reference_answer,
                                const std::string& generated_answer_span,
                                backend::Backend& backend,
                                const JudgeCorrectnessOptions& options = {});

enum class FilterPolicy { correct_only, correct_and_unjudged };

std::string to_string(FilterPolicy policy);
FilterPolicy filter_policy_from_string(const std::string& s);

struct FilterReport {
    std::size_t total = 0;
    std::size_t correct = 0;
    std::size_t incorrect = 0;
    std::size_t unjudged = 0;
    std::size_t unparseable = 0;
    std::size_t retained = 0;
    // Retention over all records and over judged (correct+incorrect) records;
    // both denominators are reported because either can be the one a
    // retention figure refers to.
    double retention_of_all = 0.0;
    double retention_of_judged = 0.0;
};

/// A record rejected by the filter, carrying the judge transcript.
struct QuarantinedRecord {
    DatasetRecord record;
    std::string judge_raw;
    std::string judge_model;
};

struct FilterOutcome {
    std::vector<DatasetRecord> retained;      // input order, verdicts set
    std::vector<QuarantinedRecord> quarantined;  // incorrect + unparseable
    FilterReport report;
};

/// Judges every record against its question's reference answer and splits
/// the set per policy. Records without a reference answer are unjudged with
/// no backend call; records whose aggregated text has no extractable answer
/// span are unparseable. Unparseable records are quarantined under both
/// policies. Order-preserving and idempotent on the retained set.
FilterOutcome filter_dataset(std::span<const DatasetRecord> records,
                             const std::map<std::string, std::string>& reference_answers,
                             backend::Backend& backend, FilterPolicy policy,
                             const JudgeCorrectnessOptions& options = {});

void to_json(nlohmann::json& j, const FilterReport& v);
void to_json(nlohmann::json& j, const QuarantinedRecord& v);
void from_json(const nlohmann::json& j, QuarantinedRecord& v);

}  // namespace longcot::filtering
