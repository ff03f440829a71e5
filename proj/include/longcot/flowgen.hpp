#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include "longcot/backend.hpp"
#include "longcot/records.hpp"
#include "longcot/retrieval.hpp"

namespace longcot::flowgen {

/// Fraction of the baseline outline count enforced during flow generation.
class BudgetScale {
public:
    explicit BudgetScale(double factor);
    static BudgetScale full() { return BudgetScale(1.0); }
    static BudgetScale half() { return BudgetScale(0.5); }
    static BudgetScale quarter() { return BudgetScale(0.25); }
    static BudgetScale parse(std::string_view text);

    double factor() const { return factor_; }
    bool is_full() const { return factor_ == 1.0; }

private:
    double factor_;
};

struct FlowGenOptions {
    std::string model_name = "gpt-4o";
    int max_tokens = 2048;
    double temperature = 0.7;
    int max_parse_retries = 2;  // re-prompts after the first failed parse
    std::uint64_t seed = 0;
};

/// Assembles the in-context flow prompt: instruction, demonstrations in
/// retrieval-score order (question, numbered reference flow, outline count),
/// the new question, the optional exact-count constraint, and the trailing
/// flow marker.
backend::CompletionRequest build_flow_prompt(const std::string& question,
                                             std::span<const retrieval::RankedDemo> demos,
                                             BudgetScale scale,
                                             std::optional<int> target_outline_count,
                                             const FlowGenOptions& options);

enum class FlowParseErrorKind { missing_declaration, count_mismatch, zero_outlines };

/// Parse failure, carrying the raw completion text for quarantine.
class FlowParseError : public std::runtime_error {
public:
    FlowParseError(FlowParseErrorKind kind, std::string raw_text, const std::string& what)
        : std::runtime_error(what), kind(kind), raw_text(std::move(raw_text)) {}
    FlowParseErrorKind kind;
    std::string raw_text;
};

/// Parses the canonical flow grammar: a count declaration line
/// ("Expected number of outlines: N") followed by numbered
/// "i. <title>: <body>" lines. Succeeds only when the declared count equals
/// the number of parsed outlines.
ReasoningFlow parse_flow(const std::string& completion_text);

/// Canonical text form of a flow; parse_flow(serialize_flow(f)) == f for
/// single-line titles and bodies.
std::string serialize_flow(const ReasoningFlow& flow);

/// max(1, ceil(baseline * factor)).
int scale_outline_count(int baseline, BudgetScale scale);

/// Full-budget generation is one pass: prompt, complete, parse. Scaled
/// generation measures a baseline first, then re-prompts with the exact
/// scaled outline count. Each pass re-prompts up to max_parse_retries times
/// on parse failure (with a distinct deterministic sub-seed per attempt).
ReasoningFlow generate_flow(const QuestionRecord& question,
                            std::span<const retrieval::RankedDemo> demos, BudgetScale scale,
                            backend::Backend& backend, const FlowGenOptions& options);

}  // namespace longcot::flowgen
