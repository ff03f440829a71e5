#include "longcot/filter.hpp"

#include <optional>

#include "longcot/prompts.hpp"
#include "longcot/rewards.hpp"
#include "longcot/util.hpp"

namespace longcot::filtering {

namespace {

backend::CompletionRequest build_judge_request(const std::string& question,
                                               const std::string& reference_answer,
                                               const std::string& generated_answer_span,
                                               const JudgeCorrectnessOptions& options,
                                               std::uint64_t seed) {
    std::string body;
    body += "You are grading an answer. Decide whether the generated answer agrees with the "
            "reference answer; equivalent forms (different notation, equal values) count as "
            "agreement.\n\n";
    body += prompts::kQuestionLabel;
    body += question;
    body += '\n';
    body += prompts::kReferenceAnswerLabel;
    body += reference_answer;
    body += '\n';
    body += prompts::kGeneratedAnswerLabel;
    body += generated_answer_span;
    body += "\n\nReply with a single word on the last line: CORRECT or INCORRECT.\n";
    body += prompts::kCorrectnessMarker;

    backend::CompletionRequest request;
    request.model_name = options.model_name;
    request.max_tokens = options.max_tokens;
    request.temperature = options.temperature;
    request.seed = seed;
    request.messages = {{backend::Role::user, std::move(body)}};
    return request;
}

std::optional<FilterVerdictValue> parse_correctness_verdict(const std::string& text) {
    auto lines = util::split_lines(text);
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
        std::string token = util::trim(*it);
        if (token.empty()) continue;
        while (!token.empty() && (token.back() == '.' || token.back() == '!')) token.pop_back();
        if (util::iequals(token, "CORRECT")) return FilterVerdictValue::correct;
        if (util::iequals(token, "INCORRECT")) return FilterVerdictValue::incorrect;
        return std::nullopt;
    }
    return std::nullopt;
}

}  // namespace

std::string to_string(FilterPolicy policy) {
    return policy == FilterPolicy::correct_only ? "correct-only" : "correct-and-unjudged";
}

FilterPolicy filter_policy_from_string(const std::string& s) {
    if (s == "correct-only") return FilterPolicy::correct_only;
    if (s == "correct-and-unjudged") return FilterPolicy::correct_and_unjudged;
    throw std::invalid_argument("unknown filter policy: " + s);
}

FilterVerdict judge_correctness(const std::string& question, const std::string& reference_answer,
                                const std::string& generated_answer_span,
                                backend::Backend& backend,
                                const JudgeCorrectnessOptions& options) {
    if (reference_answer.empty()) {
        throw std::invalid_argument("judge_correctness requires a reference answer");
    }
    FilterVerdict verdict;
    verdict.judge_model = options.model_name;
    for (int attempt = 0; attempt < 2; ++attempt) {
        auto request = build_judge_request(question, reference_answer, generated_answer_span,
                                           options,
                                           util::fnv1a_mix(options.seed,
                                                           static_cast<std::uint64_t>(attempt)));
        backend::Completion completion = backend.complete(request);
        verdict.judge_raw = completion.text;
        if (auto value = parse_correctness_verdict(completion.text)) {
            verdict.value = *value;
            return verdict;
        }
    }
    verdict.value = FilterVerdictValue::unparseable;
    return verdict;
}

FilterOutcome filter_dataset(std::span<const DatasetRecord> records,
                             const std::map<std::string, std::string>& reference_answers,
                             backend::Backend& backend, FilterPolicy policy,
                             const JudgeCorrectnessOptions& options) {
    FilterOutcome outcome;
    outcome.report.total = records.size();

    JudgeCorrectnessOptions record_options = options;
    for (const auto& input : records) {
        DatasetRecord record = input;
        std::string judge_raw;
        std::string judge_model;

        auto ref = reference_answers.find(record.id);
        if (ref == reference_answers.end() || ref->second.empty()) {
            record.filter_verdict = FilterVerdictValue::unjudged;
        } else {
            auto span = rewards::extract_answer_span(record.aggregated_text);
            if (!span) {
                // Nothing to show the judge; quarantined like any unverifiable record.
                record.filter_verdict = FilterVerdictValue::unparseable;
                judge_raw = "(no extractable answer span)";
            } else {
                record_options.seed = util::fnv1a(record.id, options.seed);
                FilterVerdict verdict;
                try {
                    verdict = judge_correctness(record.question, ref->second, *span, backend,
                                                record_options);
                } catch (const backend::BackendError& ex) {
                    verdict.value = FilterVerdictValue::unparseable;
                    verdict.judge_raw = std::string("backend error: ") + ex.what();
                    verdict.judge_model = options.model_name;
                }
                record.filter_verdict = verdict.value;
                judge_raw = verdict.judge_raw;
                judge_model = verdict.judge_model;
            }
        }

        switch (record.filter_verdict) {
            case FilterVerdictValue::correct: outcome.report.correct += 1; break;
            case FilterVerdictValue::incorrect: outcome.report.incorrect += 1; break;
            case FilterVerdictValue::unjudged: outcome.report.unjudged += 1; break;
            case FilterVerdictValue::unparseable: outcome.report.unparseable += 1; break;
        }

        bool keep = record.filter_verdict == FilterVerdictValue::correct ||
                    (policy == FilterPolicy::correct_and_unjudged &&
                     record.filter_verdict == FilterVerdictValue::unjudged);
        if (keep) {
            outcome.retained.push_back(std::move(record));
        } else if (record.filter_verdict != FilterVerdictValue::unjudged) {
            outcome.quarantined.push_back({std::move(record), judge_raw, judge_model});
        }
    }

    outcome.report.retained = outcome.retained.size();
    if (outcome.report.total > 0) {
        outcome.report.retention_of_all = static_cast<double>(outcome.report.retained) /
                                          static_cast<double>(outcome.report.total);
    }
    std::size_t judged = outcome.report.correct + outcome.report.incorrect;
    if (judged > 0) {
        outcome.report.retention_of_judged =
            static_cast<double>(outcome.report.correct) / static_cast<double>(judged);
    }
    return outcome;
}

void to_json(nlohmann::json& j, const FilterReport& v) {
    j = nlohmann::json{{"total", v.total},
                       {"correct", v.correct},
                       {"incorrect", v.incorrect},
                       {"unjudged", v.unjudged},
                       {"unparseable", v.unparseable},
                       {"retained", v.retained},
                       {"retention_of_all", v.retention_of_all},
                       {"retention_of_judged", v.retention_of_judged}};
}

void to_json(nlohmann::json& j, const QuarantinedRecord& v) {
    to_json(j, v.record);
    j["judge_raw"] = v.judge_raw;
    j["judge_model"] = v.judge_model;
}

void from_json(const nlohmann::json& j, QuarantinedRecord& v) {
    from_json(j, v.record);
    v.judge_raw = j.value("judge_raw", "");
    v.judge_model = j.value("judge_model", "");
}

}  // namespace longcot::filtering
