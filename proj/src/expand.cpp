#include "longcot/expand.hpp"

#include <numeric>

#include "longcot/analysis.hpp"
#include "longcot/prompts.hpp"
#include "longcot/rewards.hpp"
#include "longcot/util.hpp"

namespace longcot::expansion {

namespace {

constexpr std::string_view kThoughtOpen = "<thought>";
constexpr std::string_view kThoughtClose = "</thought>";

// Joins priors newest-last; elides the earliest whole segments once the
// character budget is exceeded.
std::string render_priors(std::span<const std::string> priors, std::size_t char_budget) {
    if (priors.empty()) return std::string(prompts::kNoPriorPlaceholder);
    std::size_t total = 0;
    for (const auto& p : priors) total += p.size() + 2;
    std::size_t first = 0;
    while (first + 1 < priors.size() && total > char_budget) {
        total -= priors[first].size() + 2;
        ++first;
    }
    std::string out;
    if (first > 0) {
        out += prompts::kElisionMarker;
        out += "\n\n";
    }
    for (std::size_t i = first; i < priors.size(); ++i) {
        if (i > first) out += "\n\n";
        out += priors[i];
    }
    return out;
}

backend::CompletionRequest build_step_request(const std::string& question,
                                              std::span<const std::string> priors,
                                              const Outline& current, const Outline* next,
                                              const ExpandOptions& options, std::uint64_t seed) {
    std::string body;
    body += "You are writing one segment of an extended reasoning trace for the question below. "
            "Think in first person; explore, check, and revise as you go.\n\n";
    body += prompts::kQuestionLabel;
    body += question;
    body += "\n\n";
    body += prompts::kPriorLabel;
    body += '\n';
    body += render_priors(priors, options.prior_char_budget);
    body += "\n\n";
    body += prompts::kCurrentStepLabel;
    body += current.title;
    body += ": ";
    body += current.body;
    body += '\n';
    if (next) {
        body += prompts::kNextStepLabel;
        body += next->title;
        body += ": ";
        body += next->body;
        body += '\n';
    }
    body += "\nWrite the rationale for the current step only and stop before the next step.\n";
    body += prompts::kStepMarker;

    backend::CompletionRequest request;
    request.model_name = options.model_name;
    request.max_tokens = options.max_tokens;
    request.temperature = options.temperature;
    request.seed = seed;
    request.messages = {{backend::Role::user, std::move(body)}};
    return request;
}

backend::CompletionRequest build_solution_request(const std::string& question,
                                                  std::span<const std::string> segments,
                                                  bool remind_boxed, const ExpandOptions& options,
                                                  std::uint64_t seed) {
    std::string body;
    body += prompts::kQuestionLabel;
    body += question;
    body += "\n\nFull reasoning:\n";
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (i > 0) body += "\n\n";
        body += segments[i];
    }
    body += "\n\nWrite the final solution for the question based on the reasoning above. ";
    body += prompts::kBoxedReminder;
    if (remind_boxed) {
        body += "\nYour previous solution lacked an explicit answer span; it must contain one.";
    }
    body += '\n';
    body += prompts::kSolutionMarker;

    backend::CompletionRequest request;
    request.model_name = options.model_name;
    request.max_tokens = options.max_tokens;
    request.temperature = options.temperature;
    request.seed = seed;
    request.messages = {{backend::Role::user, std::move(body)}};
    return request;
}

}  // namespace

std::string expand_step(const std::string& question, std::span<const std::string> prior_segments,
                        const Outline& current, const Outline* next, backend::Backend& backend,
                        const ExpandOptions& options) {
    for (int attempt = 0; attempt < 2; ++attempt) {
        auto request = build_step_request(
            question, prior_segments, current, next, options,
            util::fnv1a_mix(util::fnv1a(current.title, options.seed),
                            static_cast<std::uint64_t>(attempt)));
        backend::Completion completion = backend.complete(request);
        std::string segment = util::trim(completion.text);
        if (!segment.empty()) return segment;
    }
    throw ExpandError("empty rationale segment for step '" + current.title + "' after retry");
}

FinalSolution finalize_solution(const std::string& question,
                                std::span<const std::string> segments, backend::Backend& backend,
                                const ExpandOptions& options) {
    if (segments.empty()) {
        throw std::invalid_argument("finalize_solution requires at least one segment");
    }
    FinalSolution result;
    for (int attempt = 0; attempt < 2; ++attempt) {
        auto request = build_solution_request(
            question, segments, attempt > 0, options,
            util::fnv1a_mix(util::fnv1a("solution", options.seed),
                            static_cast<std::uint64_t>(attempt)));
        backend::Completion completion = backend.complete(request);
        result.text = util::trim(completion.text);
        if (rewards::extract_answer_span(result.text)) {
            result.answer_span_missing = false;
            return result;
        }
        result.answer_span_missing = true;
    }
    return result;
}

std::string aggregate(const RationaleTrace& trace) {
    ValidationReport report = validate(trace);
    if (!report.ok()) {
        std::string what = "cannot aggregate invalid trace:";
        for (const auto& v : report.violations) what += " [" + v + "]";
        throw std::invalid_argument(what);
    }
    std::string out(kThoughtOpen);
    for (std::size_t i = 0; i < trace.segments.size(); ++i) {
        if (i > 0) out += "\n\n";
        out += trace.segments[i].text;
    }
    out += kThoughtClose;
    out += '\n';
    out += trace.final_solution;
    return out;
}

DatasetRecord expand_flow(const QuestionRecord& question, const ReasoningFlow& flow,
                          flowgen::BudgetScale scale, backend::Backend& backend,
                          const ExpandOptions& options, std::vector<std::string> demo_ids,
                          const analysis::Tokenizer& tokenizer) {
    ValidationReport flow_report = validate(flow);
    if (!flow_report.ok()) {
        throw std::invalid_argument("expand_flow requires a valid flow");
    }

    RationaleTrace trace;
    std::vector<std::string> prior_texts;
    ExpandOptions step_options = options;
    for (std::size_t i = 0; i < flow.outlines.size(); ++i) {
        const Outline* next =
            i + 1 < flow.outlines.size() ? &flow.outlines[i + 1] : nullptr;
        step_options.seed = util::fnv1a_mix(options.seed, static_cast<std::uint64_t>(i));
        std::string segment = expand_step(question.question, prior_texts, flow.outlines[i], next,
                                          backend, step_options);
        trace.segments.push_back({static_cast<int>(i), segment});
        prior_texts.push_back(std::move(segment));
    }

    FinalSolution solution = finalize_solution(question.question, prior_texts, backend, options);
    trace.final_solution = solution.text;

    DatasetRecord record;
    record.id = question.id;
    record.question = question.question;
    record.flow = flow;
    record.trace = std::move(trace);
    record.aggregated_text = aggregate(record.trace);
    record.budget_scale = scale.factor();
    record.generated_thought_tokens = analysis::count_thought_tokens(
        record.aggregated_text, analysis::TokenConvention::tag_thought, tokenizer);
    record.filter_verdict = FilterVerdictValue::unjudged;
    record.provenance.backend = backend.name();
    record.provenance.demo_ids = std::move(demo_ids);
    record.provenance.created_at = util::utc_timestamp();
    return record;
}

}  // namespace longcot::expansion
