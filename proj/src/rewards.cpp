#include "longcot/rewards.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "longcot/analysis.hpp"
#include "longcot/retrieval.hpp"
#include "longcot/util.hpp"

namespace longcot::rewards {

namespace {

constexpr std::string_view kBoxedPrefix = "\\boxed{";
constexpr std::string_view kAnswerMarker = "answer:";

// Content of the \boxed group starting at `open_brace` (the '{'), or nullopt
// when the braces never balance.
std::optional<std::string> balanced_content(std::string_view text, std::size_t open_brace) {
    int depth = 0;
    for (std::size_t i = open_brace; i < text.size(); ++i) {
        if (text[i] == '{') {
            ++depth;
        } else if (text[i] == '}') {
            --depth;
            if (depth == 0) {
                return std::string(text.substr(open_brace + 1, i - open_brace - 1));
            }
        }
    }
    return std::nullopt;
}

std::optional<std::size_t> rfind_ci(std::string_view haystack, std::string_view needle) {
    if (needle.empty() || haystack.size() < needle.size()) return std::nullopt;
    for (std::size_t start = haystack.size() - needle.size() + 1; start-- > 0;) {
        bool match = true;
        for (std::size_t i = 0; i < needle.size(); ++i) {
            if (std::tolower(static_cast<unsigned char>(haystack[start + i])) !=
                std::tolower(static_cast<unsigned char>(needle[i]))) {
                match = false;
                break;
            }
        }
        if (match) return start;
    }
    return std::nullopt;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    bool pending_space = false;
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out += ' ';
            pending_space = false;
            out += static_cast<char>(c);
        }
    }
    return out;
}

std::string strip_wrappers(std::string_view s) {
    std::string cur = util::trim(s);
    bool changed = true;
    while (changed && !cur.empty()) {
        changed = false;
        if (cur.size() >= 2 && cur.front() == '$' && cur.back() == '$') {
            cur = util::trim(std::string_view(cur).substr(1, cur.size() - 2));
            changed = true;
            continue;
        }
        if (cur.rfind(std::string(kBoxedPrefix), 0) == 0 && cur.back() == '}') {
            auto inner = balanced_content(cur, kBoxedPrefix.size() - 1);
            if (inner && kBoxedPrefix.size() - 1 + 1 + inner->size() + 1 == cur.size()) {
                cur = util::trim(*inner);
                changed = true;
                continue;
            }
        }
        if (cur.front() == '{' && cur.back() == '}') {
            auto inner = balanced_content(cur, 0);
            if (inner && inner->size() + 2 == cur.size()) {
                cur = util::trim(*inner);
                changed = true;
                continue;
            }
        }
    }
    return cur;
}

// Drops commas sitting between digits ("1,234,567" -> "1234567").
std::string drop_thousands_separators(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == ',' && i > 0 && i + 1 < s.size() &&
            std::isdigit(static_cast<unsigned char>(s[i - 1])) &&
            std::isdigit(static_cast<unsigned char>(s[i + 1]))) {
            continue;
        }
        out += s[i];
    }
    return out;
}

std::optional<double> parse_plain_number(std::string_view s) {
    if (s.empty()) return std::nullopt;
    std::string text(s);
    char* end = nullptr;
    double value = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size()) return std::nullopt;
    if (std::isnan(value) || std::isinf(value)) return std::nullopt;
    return value;
}

// Integers, decimals, fractions p/q, percents.
std::optional<double> parse_numeric(std::string_view s) {
    std::string text = util::trim(s);
    if (text.empty()) return std::nullopt;
    bool percent = false;
    if (text.back() == '%') {
        percent = true;
        text = util::trim(std::string_view(text).substr(0, text.size() - 1));
    }
    std::optional<double> value;
    std::size_t slash = text.find('/');
    if (slash != std::string_view::npos && slash > 0 && slash + 1 < text.size()) {
        auto num = parse_plain_number(util::trim(std::string_view(text).substr(0, slash)));
        auto den = parse_plain_number(util::trim(std::string_view(text).substr(slash + 1)));
        if (num && den && *den != 0.0) value = *num / *den;
    } else {
        value = parse_plain_number(text);
    }
    if (!value) return std::nullopt;
    return percent ? *value / 100.0 : *value;
}

std::string normalize_text(std::string_view s) {
    return util::to_lower(collapse_whitespace(drop_thousands_separators(strip_wrappers(s))));
}

}  // namespace

double length_reward(long long sampled_thought_tokens, long long target_thought_tokens) {
    return retrieval::budget_similarity(sampled_thought_tokens, target_thought_tokens);
}

std::optional<std::string> extract_answer_span(std::string_view response) {
    // Scan \boxed occurrences from last to first until one balances; the last
    // occurrence of the prefix is the innermost group of a nested stack.
    std::size_t search_end = response.size();
    while (true) {
        std::size_t pos = response.rfind(kBoxedPrefix, search_end);
        if (pos == std::string_view::npos) break;
        auto content = balanced_content(response, pos + kBoxedPrefix.size() - 1);
        if (content) return content;
        if (pos == 0) break;
        search_end = pos - 1;
    }
    if (auto marker = rfind_ci(response, kAnswerMarker)) {
        std::size_t start = *marker + kAnswerMarker.size();
        std::size_t end = response.find('\n', start);
        if (end == std::string_view::npos) end = response.size();
        std::string span = util::trim(response.substr(start, end - start));
        if (!span.empty()) return span;
    }
    return std::nullopt;
}

bool NormalizingComparator::equivalent(std::string_view a, std::string_view b) const {
    std::string na = drop_thousands_separators(strip_wrappers(a));
    std::string nb = drop_thousands_separators(strip_wrappers(b));
    auto va = parse_numeric(na);
    auto vb = parse_numeric(nb);
    if (va && vb) {
        double scale = std::max({1.0, std::fabs(*va), std::fabs(*vb)});
        return std::fabs(*va - *vb) <= 1e-6 * scale;
    }
    return normalize_text(a) == normalize_text(b);
}

const AnswerComparator& default_comparator() {
    static const NormalizingComparator cmp;
    return cmp;
}

bool answers_equivalent(std::string_view a, std::string_view b) {
    return default_comparator().equivalent(a, b);
}

int answer_reward(std::string_view response, std::string_view gold,
                  const AnswerComparator& comparator) {
    if (gold.empty()) {
        throw std::invalid_argument("answer_reward requires a non-empty gold answer");
    }
    auto span = extract_answer_span(response);
    if (!span) return 0;
    return comparator.equivalent(*span, gold) ? 1 : 0;
}

int format_reward(std::string_view response) {
    return extract_answer_span(response).has_value() ? 1 : 0;
}

RewardReport total_reward(std::string_view response, std::string_view gold,
                          long long target_thought_tokens, const RewardWeights& weights,
                          const analysis::Tokenizer& tokenizer,
                          const AnswerComparator& comparator) {
    if (weights.length < 0 || weights.answer < 0 || weights.format < 0) {
        throw std::invalid_argument("reward weights must be nonnegative");
    }
    if (target_thought_tokens < 1) {
        throw std::invalid_argument("target_thought_tokens must be >= 1");
    }

    RewardReport report;
    auto extraction = analysis::extract_thought(response, analysis::TokenConvention::tag_thought);
    long long sampled = tokenizer.count_tokens(extraction.content);
    if (extraction.flag == analysis::ThoughtExtractionFlag::missing_tags || sampled < 1) {
        report.details.thought_region_missing = true;
        sampled = 1;
    }
    report.details.sampled_thought_tokens = sampled;
    report.details.target_thought_tokens = target_thought_tokens;
    report.details.answer_span = extract_answer_span(response);

    report.length_reward = length_reward(sampled, target_thought_tokens);
    report.answer_reward = answer_reward(response, gold, comparator);
    report.format_reward = format_reward(response);
    report.total = weights.length * report.length_reward +
                   weights.answer * static_cast<double>(report.answer_reward) +
                   weights.format * static_cast<double>(report.format_reward);
    return report;
}

void to_json(nlohmann::json& j, const RewardReport& v) {
    j = nlohmann::json{{"length_reward", v.length_reward},
                       {"answer_reward", v.answer_reward},
                       {"format_reward", v.format_reward},
                       {"total", v.total},
                       {"details",
                        {{"target_thought_tokens", v.details.target_thought_tokens},
                         {"sampled_thought_tokens", v.details.sampled_thought_tokens},
                         {"thought_region_missing", v.details.thought_region_missing}}}};
    if (v.details.answer_span) j["details"]["answer_span"] = *v.details.answer_span;
}

void from_json(const nlohmann::json& j, RewardReport& v) {
    j.at("length_reward").get_to(v.length_reward);
    j.at("answer_reward").get_to(v.answer_reward);
    j.at("format_reward").get_to(v.format_reward);
    j.at("total").get_to(v.total);
    const auto& d = j.at("details");
    d.at("target_thought_tokens").get_to(v.details.target_thought_tokens);
    d.at("sampled_thought_tokens").get_to(v.details.sampled_thought_tokens);
    d.at("thought_region_missing").get_to(v.details.thought_region_missing);
    v.details.answer_span.reset();
    if (d.contains("answer_span")) v.details.answer_span = d["answer_span"].get<std::string>();
}

}  // namespace longcot::rewards
