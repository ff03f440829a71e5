#pragma once

#include <string_view>

// Prompt field labels and trailing markers shared by the prompt builders and
// the mock backend. Every builder ends its prompt with the marker for its
// stage; the mock dispatches on the marker that occurs last in the prompt.
namespace longcot::prompts {

inline constexpr std::string_view kQuestionLabel = "Question: ";
inline constexpr std::string_view kNewQuestionLabel = "New question: ";

// Flow generation
inline constexpr std::string_view kCountDeclaration = "Expected number of outlines:";
inline constexpr std::string_view kExactCountPrefix = "Produce exactly ";
inline constexpr std::string_view kExactCountSuffix = " outlines.";
inline constexpr std::string_view kFlowMarker = "Reasoning flow:";

// Step-wise expansion
inline constexpr std::string_view kPriorLabel = "Reasoning so far:";
inline constexpr std::string_view kNoPriorPlaceholder = "(none yet)";
inline constexpr std::string_view kElisionMarker = "[earlier reasoning elided]";
inline constexpr std::string_view kCurrentStepLabel = "Current step: ";
inline constexpr std::string_view kNextStepLabel = "Next step: ";
inline constexpr std::string_view kStepMarker = "Continue the reasoning:";
inline constexpr std::string_view kSolutionMarker = "Final solution:";
inline constexpr std::string_view kBoxedReminder =
    "End with the final answer in \\boxed{...}.";

// Correctness filtering
inline constexpr std::string_view kReferenceAnswerLabel = "Reference answer: ";
inline constexpr std::string_view kGeneratedAnswerLabel = "Generated answer: ";
inline constexpr std::string_view kCorrectnessMarker =
    "Validate the generated answer against the reference answer:";

// Pairwise quality judging
inline constexpr std::string_view kResponseALabel = "Response A:";
inline constexpr std::string_view kResponseBLabel = "Response B:";
inline constexpr std::string_view kPairwiseMarker =
    "Reply with exactly one word on the last line: A, B, or tie.";

}  // namespace longcot::prompts
