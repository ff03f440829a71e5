#include "longcot/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

#include "longcot/prompts.hpp"
#include "longcot/util.hpp"

namespace longcot::analysis {

namespace {

struct TagPair {
    std::string_view open;
    std::string_view close;
};

TagPair tags_for(TokenConvention convention) {
    switch (convention) {
        case TokenConvention::tag_thought: return {"<thought>", "</thought>"};
        case TokenConvention::tag_think: return {"<think>", "</think>"};
        case TokenConvention::api_subtraction: break;
    }
    throw std::invalid_argument("convention has no tags; use api_thought_tokens");
}

bool is_token_start(std::string_view text, std::size_t pos) {
    if (pos == 0) return true;
    unsigned char prev = static_cast<unsigned char>(text[pos - 1]);
    return !(std::isalnum(prev) != 0);
}

bool contains_phrase(const std::string& text, const std::string& phrase) {
    if (!phrase.empty() && phrase.back() == '-') {
        // Prefix phrase: any token starting with the stem.
        std::string stem = phrase.substr(0, phrase.size() - 1);
        std::size_t pos = 0;
        while ((pos = text.find(stem, pos)) != std::string::npos) {
            if (is_token_start(text, pos)) return true;
            pos += 1;
        }
        return false;
    }
    return text.find(phrase) != std::string::npos;
}

}  // namespace

ThoughtExtraction extract_thought(std::string_view text, TokenConvention convention) {
    TagPair tags = tags_for(convention);
    ThoughtExtraction out;
    std::size_t open = text.find(tags.open);
    if (open == std::string_view::npos) {
        out.flag = ThoughtExtractionFlag::missing_tags;
        return out;
    }
    std::size_t content_begin = open + tags.open.size();
    std::size_t close = text.rfind(tags.close);
    if (close == std::string_view::npos || close < content_begin) {
        out.flag = ThoughtExtractionFlag::missing_close;
        out.content = std::string(text.substr(content_begin));
        return out;
    }
    out.content = std::string(text.substr(content_begin, close - content_begin));
    return out;
}

long long count_thought_tokens(std::string_view text, TokenConvention convention,
                               const Tokenizer& tokenizer) {
    return tokenizer.count_tokens(extract_thought(text, convention).content);
}

long long api_thought_tokens(long long total_completion_tokens, long long response_tokens) {
    if (total_completion_tokens < response_tokens) {
        throw std::invalid_argument("total completion tokens < response tokens");
    }
    if (response_tokens < 0) {
        throw std::invalid_argument("response tokens must be nonnegative");
    }
    return total_completion_tokens - response_tokens;
}

const std::vector<std::string>& default_trigger_phrases() {
    static const std::vector<std::string> phrases = {"Let's", "Wait", "Okay",
                                                     "Verif-", "?", "!"};
    return phrases;
}

std::vector<std::pair<std::string, double>> trigger_frequency(
    std::span<const std::string> corpus, std::span<const std::string> phrases) {
    if (corpus.empty()) {
        throw std::invalid_argument("trigger_frequency requires a non-empty corpus");
    }
    if (phrases.empty()) {
        throw std::invalid_argument("trigger_frequency requires at least one phrase");
    }
    std::vector<std::pair<std::string, double>> out;
    out.reserve(phrases.size());
    for (const auto& phrase : phrases) {
        std::size_t hits = 0;
        for (const auto& text : corpus) {
            if (contains_phrase(text, phrase)) ++hits;
        }
        out.emplace_back(phrase, static_cast<double>(hits) / static_cast<double>(corpus.size()));
    }
    return out;
}

double pearson_r2(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) {
        throw std::invalid_argument("series length mismatch");
    }
    if (xs.size() < 2) {
        throw std::invalid_argument("need at least two points");
    }
    const double n = static_cast<double>(xs.size());
    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mean_x += xs[i];
        mean_y += ys[i];
    }
    mean_x /= n;
    mean_y /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double dx = xs[i] - mean_x;
        double dy = ys[i] - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw std::invalid_argument("zero variance series");
    }
    double r2 = (sxy * sxy) / (sxx * syy);
    return std::min(r2, 1.0);
}

std::optional<CorrelationReport> budget_correlation(std::span<const DatasetRecord> records,
                                                    std::span<const QuestionRecord> questions) {
    std::map<std::string, long long> targets;
    for (const auto& q : questions) {
        if (q.target_budget) targets[q.id] = *q.target_budget;
    }
    std::vector<double> xs, ys;
    for (const auto& r : records) {
        auto it = targets.find(r.id);
        if (it == targets.end()) continue;
        xs.push_back(static_cast<double>(r.generated_thought_tokens));
        ys.push_back(static_cast<double>(it->second));
    }
    if (xs.size() < 2) return std::nullopt;
    try {
        return CorrelationReport{pearson_r2(xs, ys), xs.size()};
    } catch (const std::invalid_argument&) {
        return std::nullopt;  // constant series
    }
}

std::vector<std::pair<std::string, std::size_t>> title_token_frequency(
    std::span<const ReasoningFlow> flows, std::size_t top_n) {
    std::map<std::string, std::size_t> counts;
    for (const auto& flow : flows) {
        for (const auto& outline : flow.outlines) {
            std::string token;
            auto flush = [&] {
                if (!token.empty()) counts[token] += 1;
                token.clear();
            };
            for (unsigned char c : outline.title) {
                if (std::isspace(c)) {
                    flush();
                } else {
                    token += static_cast<char>(std::tolower(c));
                }
            }
            flush();
        }
    }
    std::vector<std::pair<std::string, std::size_t>> out(counts.begin(), counts.end());
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (out.size() > top_n) out.resize(top_n);
    return out;
}

double pass_at_n(const std::vector<std::vector<bool>>& per_question_correctness, int n) {
    if (n < 1) {
        throw std::invalid_argument("n must be >= 1");
    }
    if (per_question_correctness.empty()) {
        throw std::invalid_argument("no questions");
    }
    std::size_t solved = 0;
    for (const auto& samples : per_question_correctness) {
        if (samples.size() < static_cast<std::size_t>(n)) {
            throw std::invalid_argument("a question has fewer than n samples");
        }
        for (int i = 0; i < n; ++i) {
            if (samples[static_cast<std::size_t>(i)]) {
                ++solved;
                break;
            }
        }
    }
    return static_cast<double>(solved) / static_cast<double>(per_question_correctness.size());
}

BudgetHistogram budget_histogram(std::span<const DatasetRecord> records, long long bucket_width) {
    if (records.empty()) {
        throw std::invalid_argument("budget_histogram requires records");
    }
    if (bucket_width < 1) {
        throw std::invalid_argument("bucket_width must be >= 1");
    }
    std::vector<long long> values;
    values.reserve(records.size());
    for (const auto& r : records) values.push_back(r.generated_thought_tokens);
    std::sort(values.begin(), values.end());

    BudgetHistogram hist;
    hist.total = values.size();
    hist.max = values.back();
    double sum = 0.0;
    for (long long v : values) sum += static_cast<double>(v);
    hist.mean = sum / static_cast<double>(values.size());
    std::size_t mid = values.size() / 2;
    hist.median = values.size() % 2 == 1
                      ? static_cast<double>(values[mid])
                      : (static_cast<double>(values[mid - 1]) + static_cast<double>(values[mid])) / 2.0;

    std::size_t bucket_count = static_cast<std::size_t>(hist.max / bucket_width) + 1;
    hist.buckets.resize(bucket_count);
    for (std::size_t i = 0; i < bucket_count; ++i) {
        hist.buckets[i].lower = static_cast<long long>(i) * bucket_width;
        hist.buckets[i].upper = hist.buckets[i].lower + bucket_width;
    }
    for (long long v : values) {
        hist.buckets[static_cast<std::size_t>(v / bucket_width)].count += 1;
    }
    return hist;
}

// ---------------------------------------------------------------------------
// Pairwise judging
// ---------------------------------------------------------------------------

std::string to_string(PairwiseCriterion c) {
    switch (c) {
        case PairwiseCriterion::reasoning_flow: return "reasoning_flow";
        case PairwiseCriterion::reasoning_strategy: return "reasoning_strategy";
        case PairwiseCriterion::correctness: return "correctness";
    }
    return "reasoning_flow";
}

PairwiseCriterion pairwise_criterion_from_string(const std::string& s) {
    if (s == "reasoning_flow") return PairwiseCriterion::reasoning_flow;
    if (s == "reasoning_strategy") return PairwiseCriterion::reasoning_strategy;
    if (s == "correctness") return PairwiseCriterion::correctness;
    throw std::invalid_argument("unknown criterion: " + s);
}

std::string to_string(PairwiseVerdict v) {
    switch (v) {
        case PairwiseVerdict::a: return "A";
        case PairwiseVerdict::b: return "B";
        case PairwiseVerdict::tie: return "tie";
        case PairwiseVerdict::unparseable: return "unparseable";
    }
    return "unparseable";
}

namespace {

std::string_view criterion_preamble(PairwiseCriterion c) {
    switch (c) {
        case PairwiseCriterion::reasoning_flow:
            return "Compare the logical progression and coherence of the reasoning steps in the "
                   "two responses, judging how naturally each step leads to the next.";
        case PairwiseCriterion::reasoning_strategy:
            return "Compare the problem-solving techniques and approaches the two responses use "
                   "to break down and solve the question.";
        case PairwiseCriterion::correctness:
            return "Compare the accuracy of each reasoning step in the two responses.";
    }
    return {};
}

backend::CompletionRequest build_pairwise_request(const std::string& question,
                                                  const ResponseSource& shown_a,
                                                  const ResponseSource& shown_b,
                                                  PairwiseCriterion criterion,
                                                  const JudgeOptions& options,
                                                  std::uint64_t seed) {
    std::string body;
    body += criterion_preamble(criterion);
    body += "\n\n";
    body += prompts::kQuestionLabel;
    body += question;
    body += "\n\n";
    body += prompts::kResponseALabel;
    body += '\n';
    body += shown_a.text;
    body += "\n\n";
    body += prompts::kResponseBLabel;
    body += '\n';
    body += shown_b.text;
    body += "\n\nWhich response is better under this criterion?\n";
    body += prompts::kPairwiseMarker;

    backend::CompletionRequest request;
    request.model_name = options.model_name;
    request.max_tokens = options.max_tokens;
    request.temperature = options.temperature;
    request.seed = seed;
    request.messages = {{backend::Role::system,
                         "You are a meticulous reasoning-quality judge."},
                        {backend::Role::user, std::move(body)}};
    return request;
}

std::optional<PairwiseVerdict> parse_pairwise_verdict(const std::string& text) {
    auto lines = util::split_lines(text);
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
        std::string token = util::trim(*it);
        if (token.empty()) continue;
        while (!token.empty() && (token.back() == '.' || token.back() == '!')) token.pop_back();
        if (util::iequals(token, "A")) return PairwiseVerdict::a;
        if (util::iequals(token, "B")) return PairwiseVerdict::b;
        if (util::iequals(token, "tie")) return PairwiseVerdict::tie;
        return std::nullopt;
    }
    return std::nullopt;
}

}  // namespace

JudgeOutcome pairwise_judge(const std::string& question, const ResponseSource& first,
                            const ResponseSource& second, PairwiseCriterion criterion,
                            backend::Backend& backend, std::uint64_t rng_seed,
                            const JudgeOptions& options) {
    if (first.text.empty() || second.text.empty()) {
        throw std::invalid_argument("pairwise_judge requires non-empty responses");
    }
    std::mt19937_64 rng(util::scramble(rng_seed));
    bool first_shown_as_a = std::uniform_int_distribution<int>(0, 1)(rng) == 0;
    const ResponseSource& shown_a = first_shown_as_a ? first : second;
    const ResponseSource& shown_b = first_shown_as_a ? second : first;

    JudgeOutcome outcome;
    outcome.criterion = criterion;
    outcome.shown_as_a = shown_a.label;
    outcome.shown_as_b = shown_b.label;

    std::optional<PairwiseVerdict> verdict;
    for (int attempt = 0; attempt < 2 && !verdict; ++attempt) {
        auto request = build_pairwise_request(question, shown_a, shown_b, criterion, options,
                                              util::fnv1a_mix(util::scramble(rng_seed),
                                                              static_cast<std::uint64_t>(attempt)));
        backend::Completion completion = backend.complete(request);
        outcome.judge_raw = completion.text;
        verdict = parse_pairwise_verdict(completion.text);
    }

    outcome.verdict = verdict.value_or(PairwiseVerdict::unparseable);
    if (outcome.verdict == PairwiseVerdict::a) {
        outcome.winner = shown_a.label;
    } else if (outcome.verdict == PairwiseVerdict::b) {
        outcome.winner = shown_b.label;
    }
    return outcome;
}

void to_json(nlohmann::json& j, const JudgeOutcome& v) {
    j = nlohmann::json{{"id", v.id},
                       {"criterion", to_string(v.criterion)},
                       {"verdict", to_string(v.verdict)},
                       {"shown_as_a", v.shown_as_a},
                       {"shown_as_b", v.shown_as_b},
                       {"judge_raw", v.judge_raw}};
    if (v.winner) j["winner"] = *v.winner;
}

void from_json(const nlohmann::json& j, JudgeOutcome& v) {
    j.at("id").get_to(v.id);
    v.criterion = pairwise_criterion_from_string(j.at("criterion").get<std::string>());
    std::string verdict = j.at("verdict").get<std::string>();
    if (verdict == "A") {
        v.verdict = PairwiseVerdict::a;
    } else if (verdict == "B") {
        v.verdict = PairwiseVerdict::b;
    } else if (verdict == "tie") {
        v.verdict = PairwiseVerdict::tie;
    } else {
        v.verdict = PairwiseVerdict::unparseable;
    }
    j.at("shown_as_a").get_to(v.shown_as_a);
    j.at("shown_as_b").get_to(v.shown_as_b);
    j.at("judge_raw").get_to(v.judge_raw);
    v.winner.reset();
    if (j.contains("winner")) v.winner = j["winner"].get<std::string>();
}

}  // namespace longcot::analysis
