#include "longcot/mock_backend.hpp"

#include <array>
#include <cctype>
#include <fstream>
#include <optional>

#include <json.hpp>

#include "longcot/prompts.hpp"
#include "longcot/tokenizer.hpp"
#include "longcot/util.hpp"

namespace longcot::backend {

namespace {

using util::fnv1a;
using util::fnv1a_mix;

constexpr std::array<std::string_view, 12> kOutlineTitles = {
    "Understand the problem",      "Identify the key quantities",
    "Recall a relevant method",    "Set up the relations",
    "Work the main derivation",    "Explore an alternative route",
    "Check intermediate results",  "Reconcile the two approaches",
    "Handle the edge cases",       "Consolidate the findings",
    "Verify the candidate answer", "Conclude with the result"};

constexpr std::array<std::string_view, 24> kFillerWords = {
    "consider", "the",       "term",    "next",    "value",   "bound",
    "case",     "then",      "so",      "we",      "obtain",  "a",
    "relation", "and",       "simplify", "it",     "to",      "compare",
    "with",     "compute",   "this",    "holds",   "since",   "therefore"};

std::uint64_t request_hash(const CompletionRequest& request) {
    std::uint64_t h = util::kFnvOffset;
    for (const auto& m : request.messages) {
        h = fnv1a(to_string(m.role), h);
        h = fnv1a(m.content, h);
    }
    if (request.seed) h = fnv1a_mix(h, *request.seed);
    return h;
}

std::optional<long long> parse_integer_at(std::string_view text, std::size_t after) {
    std::size_t i = after;
    while (i < text.size() && text[i] == ' ') ++i;
    std::size_t start = i;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
    if (i == start) return std::nullopt;
    try {
        return std::stoll(std::string(text.substr(start, i - start)));
    } catch (const std::out_of_range&) {
        return std::nullopt;
    }
}

// First (or last) occurrence of the label that is actually followed by an
// integer. Prompt instructions may quote the label without a number.
std::optional<long long> integer_after(std::string_view text, std::string_view label,
                                       bool last_occurrence) {
    if (last_occurrence) {
        std::size_t search_end = text.size();
        while (true) {
            std::size_t pos = text.rfind(label, search_end);
            if (pos == std::string_view::npos) return std::nullopt;
            if (auto value = parse_integer_at(text, pos + label.size())) return value;
            if (pos == 0) return std::nullopt;
            search_end = pos - 1;
        }
    }
    std::size_t pos = 0;
    while ((pos = text.find(label, pos)) != std::string_view::npos) {
        if (auto value = parse_integer_at(text, pos + label.size())) return value;
        pos += label.size();
    }
    return std::nullopt;
}

std::string line_after(std::string_view text, std::string_view label, bool last_occurrence) {
    std::size_t pos = last_occurrence ? text.rfind(label) : text.find(label);
    if (pos == std::string_view::npos) return {};
    std::size_t start = pos + label.size();
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    return util::trim(text.substr(start, end - start));
}

std::string filler_sentence(std::uint64_t h, int words) {
    std::string out;
    for (int i = 0; i < words; ++i) {
        h = util::scramble(h + static_cast<std::uint64_t>(i) + 1);
        if (!out.empty()) out += ' ';
        out += kFillerWords[h % kFillerWords.size()];
    }
    out += '.';
    return out;
}

std::string flow_response(const CompletionRequest& request) {
    std::string prompt = prompt_text(request);
    std::uint64_t h = request_hash(request);

    long long count = 0;
    if (auto constrained = integer_after(prompt, prompts::kExactCountPrefix, true)) {
        count = *constrained;
    } else if (auto demo = integer_after(prompt, prompts::kCountDeclaration, false)) {
        count = *demo;
    } else {
        count = 3 + static_cast<long long>(h % 4);
    }
    if (count < 1) count = 1;

    std::string out = std::string(prompts::kCountDeclaration) + " " + std::to_string(count) + "\n";
    for (long long i = 0; i < count; ++i) {
        std::string title(kOutlineTitles[static_cast<std::size_t>(i) % kOutlineTitles.size()]);
        if (i >= static_cast<long long>(kOutlineTitles.size())) title += " revisited";
        std::uint64_t bh = util::scramble(h ^ static_cast<std::uint64_t>(i + 1));
        out += std::to_string(i + 1) + ". " + title + ": " + filler_sentence(bh, 6) + "\n";
    }
    return out;
}

std::string step_response(const CompletionRequest& request) {
    std::string prompt = prompt_text(request);
    std::uint64_t h = request_hash(request);
    std::string current = line_after(prompt, prompts::kCurrentStepLabel, true);
    std::size_t colon = current.find(':');
    std::string title = colon == std::string::npos ? current : current.substr(0, colon);
    if (title.empty()) title = "this step";

    // Word count stays within [30, 49] so per-step lengths are comparable
    // across budget scales.
    int words = 30 + static_cast<int>(h % 20);
    std::string out = "Let's work on " + title + ". ";
    if (h % 3 == 0) out += "Wait, I should double-check the previous relation first. ";
    out += filler_sentence(util::scramble(h), words);
    return out;
}

std::string solution_response(const CompletionRequest& request) {
    std::uint64_t h = request_hash(request);
    long long answer = static_cast<long long>(h % 1000);
    return "All reasoning steps are complete, and the result is consistent across checks.\n"
           "The final result is \\boxed{" +
           std::to_string(answer) + "}.";
}

std::string correctness_response(const CompletionRequest& request) {
    std::string prompt = prompt_text(request);
    std::string reference = line_after(prompt, prompts::kReferenceAnswerLabel, true);
    std::string generated = line_after(prompt, prompts::kGeneratedAnswerLabel, true);
    if (!reference.empty() && reference == generated) {
        return "The generated answer matches the reference answer.\nCORRECT";
    }
    return "The generated answer does not match the reference answer.\nINCORRECT";
}

std::string pairwise_response(const CompletionRequest& request) {
    std::uint64_t h = request_hash(request);
    const char* verdict = (h % 3 == 0) ? "A" : (h % 3 == 1) ? "B" : "tie";
    return std::string("Comparing both responses under the stated criterion.\n") + verdict;
}

std::string fallback_response(const CompletionRequest& request) {
    std::uint64_t h = request_hash(request);
    return "Understood. " + filler_sentence(h, 8);
}

// Cuts text at the max_tokens-th whitespace token, mirroring a service-side
// length stop.
std::string truncate_tokens(const std::string& text, int max_tokens, bool& truncated) {
    long long count = 0;
    bool in_token = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        bool space = std::isspace(static_cast<unsigned char>(text[i])) != 0;
        if (!space && !in_token) {
            ++count;
            if (count > max_tokens) {
                truncated = true;
                return text.substr(0, i);
            }
        }
        in_token = !space;
    }
    truncated = false;
    return text;
}

}  // namespace

MockBackend::MockBackend() {
    auto add = [&](std::string_view marker, TemplateFn fn) {
        entries_.push_back({std::string(marker), std::move(fn), true});
    };
    add(prompts::kFlowMarker, flow_response);
    add(prompts::kStepMarker, step_response);
    add(prompts::kSolutionMarker, solution_response);
    add(prompts::kCorrectnessMarker, correctness_response);
    add(prompts::kPairwiseMarker, pairwise_response);
}

void MockBackend::register_template(std::string marker, TemplateFn fn) {
    entries_.push_back({std::move(marker), std::move(fn), false});
}

void MockBackend::register_literal(std::string marker, std::string text) {
    register_template(std::move(marker),
                      [text = std::move(text)](const CompletionRequest&) { return text; });
}

void MockBackend::load_template_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open mock template file: " + path.string());
    }
    nlohmann::json doc = nlohmann::json::parse(in);
    for (const auto& [marker, value] : doc.at("templates").items()) {
        register_literal(marker, value.get<std::string>());
    }
}

Completion MockBackend::complete(const CompletionRequest& request) {
    validate(request);
    std::string prompt = prompt_text(request);

    const Entry* chosen = nullptr;
    std::size_t chosen_pos = 0;
    for (const auto& entry : entries_) {
        std::size_t pos = prompt.rfind(entry.marker);
        if (pos == std::string::npos) continue;
        // Later-registered entries win ties, so custom templates shadow
        // builtins keyed on the same marker.
        if (!chosen || pos >= chosen_pos) {
            chosen = &entry;
            chosen_pos = pos;
        }
    }

    std::string text = chosen ? chosen->fn(request) : fallback_response(request);
    bool truncated = false;
    text = truncate_tokens(text, request.max_tokens, truncated);

    Completion completion;
    completion.text = std::move(text);
    const analysis::Tokenizer& tok = analysis::default_tokenizer();
    completion.prompt_tokens = tok.count_tokens(prompt);
    completion.completion_tokens = tok.count_tokens(completion.text);
    completion.finish_reason = truncated ? FinishReason::length : FinishReason::stop;
    return completion;
}

}  // namespace longcot::backend
