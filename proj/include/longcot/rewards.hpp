#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "longcot/tokenizer.hpp"

namespace longcot::rewards {

/// Scales the gap between sampled and target thought lengths into (0,1]:
/// 1 - |min(x,y)/max(x,y) - 1|. Shares its implementation with the retrieval
/// budget similarity, so both carry the same symmetry and scale-invariance
/// guarantees. Inputs must be >= 1.
double length_reward(long long sampled_thought_tokens, long long target_thought_tokens);

/// Answer span of a response: innermost content of the last \boxed{...}
/// group (balanced-brace scan); failing that, the text after the last
/// case-insensitive "Answer:" marker up to end of line. Absent otherwise.
std::optional<std::string> extract_answer_span(std::string_view response);

/// Swappable answer comparison. The default normalizes (trim, strip outer
/// $ / \boxed{} / braces, drop thousands separators, evaluate integers,
/// decimals, fractions p/q and percents, compare numerically at 1e-6
/// relative tolerance) and otherwise falls back to whitespace-collapsed
/// case-folded string equality.
class AnswerComparator {
public:
    virtual ~AnswerComparator() = default;
    virtual bool equivalent(std::string_view a, std::string_view b) const = 0;
};

class NormalizingComparator final : public AnswerComparator {
public:
    bool equivalent(std::string_view a, std::string_view b) const override;
};

const AnswerComparator& default_comparator();

bool answers_equivalent(std::string_view a, std::string_view b);

/// 1 iff the response has an extractable span equivalent to gold.
int answer_reward(std::string_view response, std::string_view gold,
                  const AnswerComparator& comparator = default_comparator());

/// 1 iff the response has an extractable answer span at all.
int format_reward(std::string_view response);

struct RewardWeights {
    double length = 1.0;
    double answer = 1.0;
    double format = 1.0;
};

struct RewardReport {
    double length_reward = 0.0;
    int answer_reward = 0;
    int format_reward = 0;
    double total = 0.0;
    struct Details {
        std::optional<std::string> answer_span;
        long long target_thought_tokens = 0;
        long long sampled_thought_tokens = 0;
        bool thought_region_missing = false;
    } details;
};

/// Computes all three rewards for a full response whose thought region sits
/// in <thought> tags. A missing or empty thought region is scored as one
/// token and flagged.
RewardReport total_reward(std::string_view response, std::string_view gold,
                          long long target_thought_tokens, const RewardWeights& weights = {},
                          const analysis::Tokenizer& tokenizer = analysis::default_tokenizer(),
                          const AnswerComparator& comparator = default_comparator());

void to_json(nlohmann::json& j, const RewardReport& v);
void from_json(const nlohmann::json& j, RewardReport& v);

}  // namespace longcot::rewards
