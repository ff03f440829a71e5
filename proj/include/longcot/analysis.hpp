#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "longcot/backend.hpp"
#include "longcot/records.hpp"
#include "longcot/tokenizer.hpp"

namespace longcot::analysis {

// ---------------------------------------------------------------------------
// Thought-token accounting
// ---------------------------------------------------------------------------

/// How a model's thought region is delimited: <thought> tags, <think> tags,
/// or by subtracting response tokens from the API's completion total.
enum class TokenConvention { tag_thought, tag_think, api_subtraction };

enum class ThoughtExtractionFlag { ok, missing_tags, missing_close };

struct ThoughtExtraction {
    std::string content;
    ThoughtExtractionFlag flag = ThoughtExtractionFlag::ok;
};

/// Content strictly between the first opening and last closing tag of the
/// convention. Missing tags yield empty content with a flag; an opening tag
/// without a closing one yields content to end of text, flagged malformed.
/// api_subtraction is not a tag convention and is rejected.
ThoughtExtraction extract_thought(std::string_view text, TokenConvention convention);

long long count_thought_tokens(std::string_view text, TokenConvention convention,
                               const Tokenizer& tokenizer = default_tokenizer());

/// Thought tokens from API usage counts: total completion tokens minus
/// response tokens. Throws when total < response.
long long api_thought_tokens(long long total_completion_tokens, long long response_tokens);

// ---------------------------------------------------------------------------
// Dataset statistics
// ---------------------------------------------------------------------------

/// Reasoning-trigger phrases tracked by the stats report.
const std::vector<std::string>& default_trigger_phrases();

/// Per phrase, the fraction of texts containing at least one case-sensitive
/// occurrence. A trailing '-' marks a prefix phrase ("Verif-" matches any
/// token starting with "Verif").
std::vector<std::pair<std::string, double>> trigger_frequency(
    std::span<const std::string> corpus, std::span<const std::string> phrases);

/// Squared Pearson correlation. Throws on length mismatch, fewer than two
/// points, or zero variance in either series.
double pearson_r2(std::span<const double> xs, std::span<const double> ys);

/// Correlation report that always carries its sample size.
struct CorrelationReport {
    double r2 = 0.0;
    std::size_t n = 0;
};

/// R^2 between generated thought tokens and the questions' target budgets,
/// over the records whose question declares one. Absent when fewer than two
/// usable pairs exist or a series is constant.
std::optional<CorrelationReport> budget_correlation(std::span<const DatasetRecord> records,
                                                    std::span<const QuestionRecord> questions);

/// Case-folded whitespace tokens of outline titles, counted across flows and
/// ordered by count (descending), then token. A coarse view of which moves
/// the flows lean on.
std::vector<std::pair<std::string, std::size_t>> title_token_frequency(
    std::span<const ReasoningFlow> flows, std::size_t top_n = 15);

/// Fraction of questions whose first n samples contain at least one correct
/// one. Every question must have at least n samples.
double pass_at_n(const std::vector<std::vector<bool>>& per_question_correctness, int n);

struct HistogramBucket {
    long long lower = 0;
    long long upper = 0;  // exclusive
    std::size_t count = 0;
};

struct BudgetHistogram {
    std::vector<HistogramBucket> buckets;  // contiguous from 0
    double mean = 0.0;
    double median = 0.0;
    long long max = 0;
    std::size_t total = 0;
};

BudgetHistogram budget_histogram(std::span<const DatasetRecord> records, long long bucket_width);

// ---------------------------------------------------------------------------
// Pairwise quality judging
// ---------------------------------------------------------------------------

enum class PairwiseCriterion { reasoning_flow, reasoning_strategy, correctness };

std::string to_string(PairwiseCriterion c);
PairwiseCriterion pairwise_criterion_from_string(const std::string& s);

enum class PairwiseVerdict { a, b, tie, unparseable };

std::string to_string(PairwiseVerdict v);

struct ResponseSource {
    std::string label;
    std::string text;
};

struct JudgeOutcome {
    std::string id;
    PairwiseCriterion criterion = PairwiseCriterion::reasoning_flow;
    PairwiseVerdict verdict = PairwiseVerdict::unparseable;
    std::string shown_as_a;  // source label presented as Response A
    std::string shown_as_b;
    std::optional<std::string> winner;  // absent on tie or unparseable
    std::string judge_raw;
};

struct JudgeOptions {
    std::string model_name = "judge";
    int max_tokens = 512;
    double temperature = 0.0;
};

/// Presents the two responses in an order drawn from the seeded generator,
/// asks the judge to pick A, B, or tie under the criterion, and maps the
/// verdict back to source labels. An unparseable verdict is re-asked once,
/// then recorded as unparseable. Deterministic in (inputs, rng_seed).
JudgeOutcome pairwise_judge(const std::string& question, const ResponseSource& first,
                            const ResponseSource& second, PairwiseCriterion criterion,
                            backend::Backend& backend, std::uint64_t rng_seed,
                            const JudgeOptions& options = {});

void to_json(nlohmann::json& j, const JudgeOutcome& v);
void from_json(const nlohmann::json& j, JudgeOutcome& v);

}  // namespace longcot::analysis
