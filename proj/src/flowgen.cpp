#include "longcot/flowgen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "longcot/prompts.hpp"
#include "longcot/util.hpp"

namespace longcot::flowgen {

namespace {

constexpr std::string_view kInstruction =
    "Study the example reasoning flows below, then plan a reasoning flow for the new question. "
    "A reasoning flow begins with a line \"Expected number of outlines: N\" followed by exactly "
    "N numbered outlines, one per line, each in the form \"i. <title>: <details>\". The flow "
    "should move from understanding the problem through exploration and verification to the "
    "conclusion.";

std::string render_demo(int index, const SeedRecord& seed) {
    std::string out = "Demonstration " + std::to_string(index) + ":\n";
    out += prompts::kQuestionLabel;
    out += seed.question;
    out += '\n';
    out += serialize_flow(seed.flow_ref);
    return out;
}

// "i." or "i)" line prefix; returns the numbered index or nullopt.
std::optional<int> numbered_prefix(std::string_view line, std::size_t& content_start) {
    std::size_t i = 0;
    while (i < line.size() && line[i] == ' ') ++i;
    std::size_t digits_start = i;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i == digits_start) return std::nullopt;
    if (i >= line.size() || (line[i] != '.' && line[i] != ')')) return std::nullopt;
    content_start = i + 1;
    try {
        return std::stoi(std::string(line.substr(digits_start, i - digits_start)));
    } catch (const std::out_of_range&) {
        return std::nullopt;
    }
}

}  // namespace

BudgetScale::BudgetScale(double factor) : factor_(factor) {
    if (factor != 1.0 && factor != 0.5 && factor != 0.25) {
        throw std::invalid_argument("budget scale must be one of 1.00, 0.50, 0.25");
    }
}

BudgetScale BudgetScale::parse(std::string_view text) {
    std::string t = util::trim(text);
    if (t == "1" || t == "1.0" || t == "1.00" || t == "100%") return full();
    if (t == "0.5" || t == "0.50" || t == ".5" || t == "50%") return half();
    if (t == "0.25" || t == ".25" || t == "25%") return quarter();
    throw std::invalid_argument("budget scale must be one of 1.0, 0.5, 0.25 (got '" + t + "')");
}

backend::CompletionRequest build_flow_prompt(const std::string& question,
                                             std::span<const retrieval::RankedDemo> demos,
                                             BudgetScale /*scale*/,
                                             std::optional<int> target_outline_count,
                                             const FlowGenOptions& options) {
    if (demos.empty()) {
        throw std::invalid_argument("build_flow_prompt requires at least one demonstration");
    }

    std::string body(kInstruction);
    body += "\n\n";
    for (std::size_t i = 0; i < demos.size(); ++i) {
        body += render_demo(static_cast<int>(i) + 1, demos[i].seed);
        body += '\n';
    }
    body += '\n';
    body += prompts::kNewQuestionLabel;
    body += question;
    body += '\n';
    if (target_outline_count) {
        body += prompts::kExactCountPrefix;
        body += std::to_string(*target_outline_count);
        body += prompts::kExactCountSuffix;
        body += '\n';
    }
    body += prompts::kFlowMarker;

    backend::CompletionRequest request;
    request.model_name = options.model_name;
    request.max_tokens = options.max_tokens;
    request.temperature = options.temperature;
    request.seed = options.seed;
    request.messages = {
        {backend::Role::system,
         "You plan reasoning before solving: produce only the requested reasoning flow."},
        {backend::Role::user, std::move(body)}};
    return request;
}

ReasoningFlow parse_flow(const std::string& completion_text) {
    std::optional<int> declared;
    ReasoningFlow flow;

    for (const auto& raw_line : util::split_lines(completion_text)) {
        std::string line = util::trim(raw_line);
        if (line.empty()) continue;

        if (!declared) {
            std::size_t pos = line.find(prompts::kCountDeclaration);
            if (pos != std::string::npos) {
                std::string rest = util::trim(line.substr(pos + prompts::kCountDeclaration.size()));
                try {
                    declared = std::stoi(rest);
                } catch (const std::exception&) {
                    // fall through; a later line may declare properly
                }
                continue;
            }
        }

        std::size_t content_start = 0;
        if (auto index = numbered_prefix(line, content_start)) {
            if (!declared) {
                throw FlowParseError(FlowParseErrorKind::missing_declaration, completion_text,
                                     "numbered outlines before any count declaration");
            }
            (void)index;
            std::string content = util::trim(line.substr(content_start));
            std::size_t colon = content.find(':');
            Outline outline;
            if (colon == std::string::npos) {
                outline.title = content;
            } else {
                outline.title = util::trim(content.substr(0, colon));
                outline.body = util::trim(content.substr(colon + 1));
            }
            flow.outlines.push_back(std::move(outline));
        } else if (declared && !flow.outlines.empty()) {
            // Continuation line: extend the body of the current outline.
            auto& body = flow.outlines.back().body;
            if (!body.empty()) body += ' ';
            body += line;
        }
    }

    if (!declared) {
        throw FlowParseError(FlowParseErrorKind::missing_declaration, completion_text,
                             "no outline-count declaration found");
    }
    if (flow.outlines.empty()) {
        throw FlowParseError(FlowParseErrorKind::zero_outlines, completion_text,
                             "flow declared but no outlines parsed");
    }
    if (*declared != static_cast<int>(flow.outlines.size())) {
        throw FlowParseError(FlowParseErrorKind::count_mismatch, completion_text,
                             "declared " + std::to_string(*declared) + " outlines but parsed " +
                                 std::to_string(flow.outlines.size()));
    }
    flow.expected_count = *declared;
    return flow;
}

std::string serialize_flow(const ReasoningFlow& flow) {
    std::string out = std::string(prompts::kCountDeclaration) + " " +
                      std::to_string(flow.expected_count) + "\n";
    for (std::size_t i = 0; i < flow.outlines.size(); ++i) {
        out += std::to_string(i + 1) + ". " + flow.outlines[i].title;
        out += ": " + flow.outlines[i].body;
        out += '\n';
    }
    return out;
}

int scale_outline_count(int baseline, BudgetScale scale) {
    if (baseline < 1) {
        throw std::invalid_argument("baseline outline count must be >= 1");
    }
    int scaled = static_cast<int>(std::ceil(static_cast<double>(baseline) * scale.factor()));
    return std::max(1, scaled);
}

namespace {

ReasoningFlow complete_and_parse(const QuestionRecord& question,
                                 std::span<const retrieval::RankedDemo> demos, BudgetScale scale,
                                 std::optional<int> target_outline_count,
                                 backend::Backend& backend, const FlowGenOptions& options,
                                 std::uint64_t pass_tag) {
    FlowGenOptions attempt_options = options;
    std::optional<FlowParseError> last_error;
    for (int attempt = 0; attempt <= options.max_parse_retries; ++attempt) {
        attempt_options.seed = util::fnv1a_mix(
            util::fnv1a_mix(options.seed, pass_tag), static_cast<std::uint64_t>(attempt));
        auto request = build_flow_prompt(question.question, demos, scale, target_outline_count,
                                         attempt_options);
        backend::Completion completion = backend.complete(request);
        try {
            return parse_flow(completion.text);
        } catch (const FlowParseError& ex) {
            last_error = ex;
        }
    }
    throw FlowParseError(last_error->kind, last_error->raw_text,
                         "flow unparseable after " +
                             std::to_string(options.max_parse_retries + 1) +
                             " attempts: " + last_error->what());
}

}  // namespace

ReasoningFlow generate_flow(const QuestionRecord& question,
                            std::span<const retrieval::RankedDemo> demos, BudgetScale scale,
                            backend::Backend& backend, const FlowGenOptions& options) {
    ReasoningFlow baseline =
        complete_and_parse(question, demos, scale, std::nullopt, backend, options, 1);
    if (scale.is_full()) {
        return baseline;
    }
    int target = scale_outline_count(baseline.expected_count, scale);
    return complete_and_parse(question, demos, scale, target, backend, options, 2);
}

}  // namespace longcot::flowgen
