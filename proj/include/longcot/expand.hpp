#pragma once

#include <span>
#include <string>
#include <vector>

#include "longcot/backend.hpp"
#include "longcot/flowgen.hpp"
#include "longcot/records.hpp"
#include "longcot/tokenizer.hpp"

namespace longcot::expansion {

struct ExpandError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExpandOptions {
    std::string model_name = "gpt-4o";
    int max_tokens = 4096;
    double temperature = 0.7;
    // Earliest prior segments are elided once their concatenation exceeds
    // this many characters.
    std::size_t prior_char_budget = 24000;
    std::uint64_t seed = 0;
};

/// Generates the rationale for one flow step. The prompt carries exactly:
/// the question, the concatenated prior segments, the current outline, and
/// the next outline when one exists. An empty completion is retried once.
std::string expand_step(const std::string& question, std::span<const std::string> prior_segments,
                        const Outline& current, const Outline* next, backend::Backend& backend,
                        const ExpandOptions& options);

struct FinalSolution {
    std::string text;
    // Set when no answer span could be obtained even after the re-prompt.
    bool answer_span_missing = false;
};

/// Produces the final solution from the full reasoning. When the completion
/// lacks an extractable answer span the model is re-prompted once with an
/// explicit boxed-answer reminder; a span still missing is flagged.
FinalSolution finalize_solution(const std::string& question,
                                std::span<const std::string> segments, backend::Backend& backend,
                                const ExpandOptions& options);

/// "<thought>" + segments joined by blank lines + "</thought>\n" + solution.
/// The trace must satisfy its invariants.
std::string aggregate(const RationaleTrace& trace);

/// Runs the full per-question expansion: every outline in order, the final
/// solution, aggregation, and thought-token accounting. The returned record
/// is unjudged.
DatasetRecord expand_flow(const QuestionRecord& question, const ReasoningFlow& flow,
                          flowgen::BudgetScale scale, backend::Backend& backend,
                          const ExpandOptions& options,
                          std::vector<std::string> demo_ids = {},
                          const analysis::Tokenizer& tokenizer = analysis::default_tokenizer());

}  // namespace longcot::expansion
