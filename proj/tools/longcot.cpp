#include <cstdint>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "longcot/analysis.hpp"
#include "longcot/expand.hpp"
#include "longcot/filter.hpp"
#include "longcot/flowgen.hpp"
#include "longcot/pipeline.hpp"
#include "longcot/records.hpp"
#include "longcot/retrieval.hpp"
#include "longcot/rewards.hpp"
#include "longcot/util.hpp"

namespace {

using namespace longcot;

struct CommonOptions {
    std::string seeds;
    std::string questions;
    std::string out;
    std::string budget_scale = "1.0";
    int k_demos = 1;
    bool mock = false;
    std::string backend_url;
    std::string annotator_model = "gpt-4o";
    std::string judge_model = "gpt-4o";
    std::string credential_env = "LONGCOT_API_KEY";
    std::string mock_templates;
    int parallelism = 8;
    int retry_limit = 4;
    std::uint64_t rng_seed = 0;
    std::string filter_policy = "correct-and-unjudged";
    bool no_filter = false;
    std::string weights = "1,1,1";
};

void add_backend_flags(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_flag("--mock", opts.mock, "Use the deterministic offline mock backend");
    cmd->add_option("--backend-url", opts.backend_url, "Chat-completions service base URL");
    cmd->add_option("--annotator-model", opts.annotator_model, "Model used for generation");
    cmd->add_option("--judge-model", opts.judge_model, "Model used for judging");
    cmd->add_option("--credential-env", opts.credential_env,
                    "Environment variable holding the API credential");
    cmd->add_option("--mock-templates", opts.mock_templates,
                    "JSON file mapping prompt markers to mock response templates");
    cmd->add_option("--parallelism", opts.parallelism, "Max concurrent backend requests")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--retry-limit", opts.retry_limit, "Max attempts per request")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", opts.rng_seed, "RNG seed for reproducible runs");
}

rewards::RewardWeights parse_weights(const std::string& text) {
    std::vector<double> values;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t comma = text.find(',', start);
        std::string part = comma == std::string::npos ? text.substr(start)
                                                      : text.substr(start, comma - start);
        values.push_back(std::stod(util::trim(part)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (values.size() != 3) {
        throw pipeline::ConfigError("--weights expects w_len,w_ans,w_fmt");
    }
    return {values[0], values[1], values[2]};
}

pipeline::BackendSettings backend_settings(const CommonOptions& opts) {
    pipeline::BackendSettings settings;
    settings.mock = opts.mock;
    settings.base_url = opts.backend_url;
    settings.annotator_model = opts.annotator_model;
    settings.judge_model = opts.judge_model;
    settings.credential_env = opts.credential_env;
    settings.parallelism = opts.parallelism;
    settings.retry_limit = opts.retry_limit;
    if (!opts.mock_templates.empty()) settings.mock_templates = opts.mock_templates;
    return settings;
}

int cmd_seed_import(const CommonOptions& opts, const std::string& in, bool strict) {
    auto loaded = load_records<SeedRecord>(in, strict);
    std::vector<SeedRecord> kept;
    std::size_t dropped = 0;
    for (auto& seed : loaded.records) {
        seed.taxonomy = normalize_taxonomy(seed.taxonomy);
        ValidationReport report = validate(seed);
        if (report.ok()) {
            kept.push_back(std::move(seed));
        } else {
            ++dropped;
            std::cerr << "dropping seed '" << seed.id << "':";
            for (const auto& v : report.violations) std::cerr << " [" << v << "]";
            std::cerr << "\n";
        }
    }
    write_records(kept, opts.out);
    for (const auto& rej : loaded.rejections) {
        std::cerr << in << ":" << rej.line_number << ": " << rej.error << "\n";
    }
    std::cout << "imported " << kept.size() << " seeds (" << dropped << " dropped, "
              << loaded.rejections.size() << " malformed lines)\n";
    return (dropped + loaded.rejections.size()) > 0 ? 1 : 0;
}

int cmd_retrieve(const CommonOptions& opts) {
    auto seeds = load_records<SeedRecord>(opts.seeds, true);
    auto questions = load_records<QuestionRecord>(opts.questions, true);
    for (const auto& q : questions.records) {
        long long target = retrieval::estimate_target_budget(q, seeds.records);
        auto ranked = retrieval::retrieve_demonstrations(q, seeds.records, opts.k_demos);
        std::cout << q.id << " target_budget=" << target << "\n";
        for (const auto& demo : ranked) {
            std::cout << "  " << demo.seed.id << " total=" << demo.score.total
                      << " domain=" << demo.score.domain_score
                      << " budget=" << demo.score.budget_score << "\n";
        }
    }
    return 0;
}

int cmd_synthesize(const CommonOptions& opts) {
    pipeline::PipelineConfig config;
    config.seed_path = opts.seeds;
    config.questions_path = opts.questions;
    config.output_path = opts.out;
    config.backend = backend_settings(opts);
    config.budget_scale = flowgen::BudgetScale::parse(opts.budget_scale);
    config.k_demos = opts.k_demos;
    config.run_filter = !opts.no_filter;
    config.filter_policy = filtering::filter_policy_from_string(opts.filter_policy);
    config.weights = parse_weights(opts.weights);
    config.rng_seed = opts.rng_seed;

    pipeline::RunReport report = pipeline::run_pipeline(config);
    std::cout << report.to_json().dump(2) << "\n";
    return report.per_record_failures > 0 ? 1 : 0;
}

int cmd_filter(const CommonOptions& opts, const std::string& records_path) {
    auto dataset = load_records<DatasetRecord>(records_path, false);
    auto questions = load_records<QuestionRecord>(opts.questions, true);
    std::map<std::string, std::string> reference_answers;
    for (const auto& q : questions.records) {
        if (q.reference_answer) reference_answers[q.id] = *q.reference_answer;
    }
    auto backend_handle = pipeline::make_backend(backend_settings(opts));
    filtering::JudgeCorrectnessOptions judge_options;
    judge_options.model_name = opts.judge_model;
    judge_options.seed = opts.rng_seed;
    auto outcome =
        filtering::filter_dataset(dataset.records, reference_answers, *backend_handle,
                                  filtering::filter_policy_from_string(opts.filter_policy),
                                  judge_options);
    write_records(outcome.retained, opts.out);
    write_records(outcome.quarantined, pipeline::sibling_path(opts.out, ".quarantine"));
    nlohmann::json report;
    filtering::to_json(report, outcome.report);
    std::cout << report.dump(2) << "\n";
    return 0;
}

int cmd_rewards(const CommonOptions& opts, const std::string& in, const std::string& tokenizer) {
    auto inputs = load_records<RewardInput>(in, false);
    const analysis::Tokenizer* tok = &analysis::default_tokenizer();
    analysis::CharRatioTokenizer char_ratio;
    if (tokenizer == "char-ratio") tok = &char_ratio;
    rewards::RewardWeights weights = parse_weights(opts.weights);

    RecordWriter writer(opts.out, /*append=*/false);
    std::size_t failures = 0;
    for (const auto& input : inputs.records) {
        try {
            rewards::RewardReport report = rewards::total_reward(
                input.response, input.gold, input.target_thought_tokens, weights, *tok);
            nlohmann::json j;
            rewards::to_json(j, report);
            j["id"] = input.id;
            writer.append(j);
        } catch (const std::exception& ex) {
            ++failures;
            std::cerr << "reward failed for '" << input.id << "': " << ex.what() << "\n";
        }
    }
    std::cout << "scored " << (inputs.records.size() - failures) << " of "
              << inputs.records.size() << " responses\n";
    return failures > 0 ? 1 : 0;
}

int cmd_stats(const CommonOptions& opts, const std::string& records_path, long long bucket_width) {
    auto dataset = load_records<DatasetRecord>(records_path, false);
    if (dataset.records.empty()) {
        throw pipeline::ConfigError("no dataset records in " + records_path);
    }
    auto hist = analysis::budget_histogram(dataset.records, bucket_width);

    std::vector<std::string> thoughts;
    std::vector<ReasoningFlow> flows;
    thoughts.reserve(dataset.records.size());
    for (const auto& r : dataset.records) {
        thoughts.push_back(
            analysis::extract_thought(r.aggregated_text, analysis::TokenConvention::tag_thought)
                .content);
        flows.push_back(r.flow);
    }
    auto triggers = analysis::trigger_frequency(thoughts, analysis::default_trigger_phrases());
    auto title_tokens = analysis::title_token_frequency(flows);

    std::cout << "thought tokens: n=" << hist.total << " mean=" << hist.mean
              << " median=" << hist.median << " max=" << hist.max << "\n";
    for (const auto& bucket : hist.buckets) {
        std::cout << "  [" << bucket.lower << "," << bucket.upper << "): " << bucket.count << "\n";
    }
    std::cout << "trigger phrases:\n";
    for (const auto& [phrase, fraction] : triggers) {
        std::cout << "  \"" << phrase << "\": " << fraction * 100.0 << "%\n";
    }
    std::cout << "top outline-title tokens:\n";
    for (const auto& [token, count] : title_tokens) {
        std::cout << "  " << token << ": " << count << "\n";
    }

    std::optional<analysis::CorrelationReport> correlation;
    if (!opts.questions.empty()) {
        auto questions = load_records<QuestionRecord>(opts.questions, true);
        correlation = analysis::budget_correlation(dataset.records, questions.records);
        if (correlation) {
            std::cout << "budget correlation: r2=" << correlation->r2 << " n=" << correlation->n
                      << "\n";
        } else {
            std::cout << "budget correlation: n/a (needs >= 2 records with target budgets)\n";
        }
    }

    if (!opts.out.empty()) {
        nlohmann::json j;
        j["thought_tokens"] = {{"n", hist.total},
                               {"mean", hist.mean},
                               {"median", hist.median},
                               {"max", hist.max}};
        j["buckets"] = nlohmann::json::array();
        for (const auto& bucket : hist.buckets) {
            j["buckets"].push_back(
                {{"lower", bucket.lower}, {"upper", bucket.upper}, {"count", bucket.count}});
        }
        j["triggers"] = nlohmann::json::object();
        for (const auto& [phrase, fraction] : triggers) j["triggers"][phrase] = fraction;
        j["title_tokens"] = nlohmann::json::array();
        for (const auto& [token, count] : title_tokens) {
            j["title_tokens"].push_back({{"token", token}, {"count", count}});
        }
        if (correlation) {
            j["budget_correlation"] = {{"r2", correlation->r2}, {"n", correlation->n}};
        }
        RecordWriter writer(opts.out, /*append=*/false);
        writer.append(j);
    }
    return 0;
}

int cmd_judge(const CommonOptions& opts, const std::string& in, const std::string& criterion) {
    auto inputs = load_records<JudgeInput>(in, true);
    auto backend_handle = pipeline::make_backend(backend_settings(opts));
    analysis::PairwiseCriterion crit = analysis::pairwise_criterion_from_string(criterion);
    analysis::JudgeOptions judge_options;
    judge_options.model_name = opts.judge_model;

    std::map<std::string, std::size_t> wins;
    std::size_t ties = 0, unparseable = 0;
    RecordWriter writer(opts.out, /*append=*/false);
    for (const auto& input : inputs.records) {
        auto outcome = analysis::pairwise_judge(
            input.question, {input.left_source, input.left_response},
            {input.right_source, input.right_response}, crit, *backend_handle,
            util::fnv1a(input.id, util::fnv1a_mix(util::kFnvOffset, opts.rng_seed)),
            judge_options);
        outcome.id = input.id;
        writer.append(outcome);
        if (outcome.winner) {
            wins[*outcome.winner] += 1;
        } else if (outcome.verdict == analysis::PairwiseVerdict::tie) {
            ++ties;
        } else {
            ++unparseable;
        }
    }
    std::cout << "criterion=" << criterion << " comparisons=" << inputs.records.size() << "\n";
    for (const auto& [label, count] : wins) {
        std::cout << "  " << label << ": " << count << " wins\n";
    }
    std::cout << "  ties: " << ties << "\n  unparseable: " << unparseable << "\n";
    return 0;
}

int cmd_bon(const CommonOptions& opts, const std::string& in, const std::string& n_list) {
    auto inputs = load_records<BonInput>(in, true);
    std::vector<std::vector<bool>> matrix;
    matrix.reserve(inputs.records.size());
    for (const auto& input : inputs.records) matrix.push_back(input.correct);

    nlohmann::json results = nlohmann::json::object();
    std::size_t start = 0;
    while (start <= n_list.size()) {
        std::size_t comma = n_list.find(',', start);
        std::string part = comma == std::string::npos ? n_list.substr(start)
                                                      : n_list.substr(start, comma - start);
        int n = std::stoi(util::trim(part));
        double fraction = analysis::pass_at_n(matrix, n);
        std::cout << "pass@" << n << " = " << fraction << " (n_questions=" << matrix.size()
                  << ")\n";
        results["pass@" + std::to_string(n)] = fraction;
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (!opts.out.empty()) {
        results["n_questions"] = matrix.size();
        RecordWriter writer(opts.out, /*append=*/false);
        writer.append(results);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Long chain-of-thought data synthesis pipeline"};
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "TOML config file ([subcommand] sections); flags override file values");

    CommonOptions opts;
    std::string in_path;
    std::string records_path;
    std::string criterion = "reasoning_flow";
    std::string tokenizer = "whitespace";
    std::string n_list = "1,2,4,8,16,32";
    long long bucket_width = 500;
    bool strict = false;

    // --config may appear after the subcommand; unmatched options fall
    // through to the root app.
    auto add_config = [&](CLI::App* cmd) { cmd->fallthrough(); };

    CLI::App* seed_import = app.add_subcommand("seed-import", "Validate and normalize a seed file");
    seed_import->add_option("--in", in_path, "Raw seed record file")->required();
    seed_import->add_option("--out", opts.out, "Normalized output path")->required();
    seed_import->add_flag("--strict", strict, "Abort on the first malformed line");
    add_config(seed_import);

    CLI::App* retrieve = app.add_subcommand("retrieve", "Rank demonstrations for questions");
    retrieve->add_option("--seeds", opts.seeds, "Seed record file")->required();
    retrieve->add_option("--questions", opts.questions, "Question record file")->required();
    retrieve->add_option("--k-demos", opts.k_demos, "Demonstrations per question")
        ->check(CLI::PositiveNumber);
    add_config(retrieve);

    CLI::App* synthesize = app.add_subcommand("synthesize", "Run the full synthesis pipeline");
    synthesize->add_option("--seeds", opts.seeds, "Seed record file")->required();
    synthesize->add_option("--questions", opts.questions, "Question record file")->required();
    synthesize->add_option("--out", opts.out, "Dataset output file (appended; resumable)")
        ->required();
    synthesize->add_option("--budget-scale", opts.budget_scale, "One of 1.0, 0.5, 0.25");
    synthesize->add_option("--k-demos", opts.k_demos, "Demonstrations per question")
        ->check(CLI::PositiveNumber);
    synthesize->add_option("--filter-policy", opts.filter_policy,
                           "correct-only or correct-and-unjudged");
    synthesize->add_flag("--no-filter", opts.no_filter, "Skip the correctness-filter stage");
    synthesize->add_option("--weights", opts.weights, "Reward weights w_len,w_ans,w_fmt");
    add_backend_flags(synthesize, opts);
    add_config(synthesize);

    CLI::App* filter = app.add_subcommand("filter", "Judge and filter an existing dataset file");
    filter->add_option("--records", records_path, "Dataset record file")->required();
    filter->add_option("--questions", opts.questions, "Questions with reference answers")
        ->required();
    filter->add_option("--out", opts.out, "Retained records output path")->required();
    filter->add_option("--filter-policy", opts.filter_policy,
                       "correct-only or correct-and-unjudged");
    add_backend_flags(filter, opts);
    add_config(filter);

    CLI::App* rewards_cmd = app.add_subcommand("rewards", "Score (response, gold, target) triplets");
    rewards_cmd->add_option("--in", in_path, "Reward input record file")->required();
    rewards_cmd->add_option("--out", opts.out, "Reward report output path")->required();
    rewards_cmd->add_option("--weights", opts.weights, "Reward weights w_len,w_ans,w_fmt");
    rewards_cmd->add_option("--tokenizer", tokenizer, "whitespace or char-ratio");
    add_config(rewards_cmd);

    CLI::App* stats = app.add_subcommand("stats", "Dataset statistics and trigger frequencies");
    stats->add_option("--records", records_path, "Dataset record file")->required();
    stats->add_option("--bucket-width", bucket_width, "Histogram bucket width in tokens")
        ->check(CLI::PositiveNumber);
    stats->add_option("--questions", opts.questions,
                      "Question file; enables the generated-vs-target budget correlation");
    stats->add_option("--out", opts.out, "Optional machine-readable report path");
    add_config(stats);

    CLI::App* judge = app.add_subcommand("judge", "Pairwise response comparison");
    judge->add_option("--in", in_path, "Judge input record file")->required();
    judge->add_option("--out", opts.out, "Judge outcome output path")->required();
    judge->add_option("--criterion", criterion,
                      "reasoning_flow, reasoning_strategy, or correctness");
    add_backend_flags(judge, opts);
    add_config(judge);

    CLI::App* bon = app.add_subcommand("bon", "Pass@n over per-question correctness samples");
    bon->add_option("--in", in_path, "Best-of-n input record file")->required();
    bon->add_option("--n", n_list, "Comma-separated n values");
    bon->add_option("--out", opts.out, "Optional report output path");
    add_config(bon);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (seed_import->parsed()) return cmd_seed_import(opts, in_path, strict);
        if (retrieve->parsed()) return cmd_retrieve(opts);
        if (synthesize->parsed()) return cmd_synthesize(opts);
        if (filter->parsed()) return cmd_filter(opts, records_path);
        if (rewards_cmd->parsed()) return cmd_rewards(opts, in_path, tokenizer);
        if (stats->parsed()) return cmd_stats(opts, records_path, bucket_width);
        if (judge->parsed()) return cmd_judge(opts, in_path, criterion);
        if (bon->parsed()) return cmd_bon(opts, in_path, n_list);
    } catch (const pipeline::ConfigError& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 2;
    } catch (const RecordIoError& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 2;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 2;
    }
    return 0;
}
