#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "longcot/backend.hpp"
#include "longcot/filter.hpp"
#include "longcot/flowgen.hpp"
#include "longcot/records.hpp"
#include "longcot/rewards.hpp"

namespace longcot::pipeline {

/// Configuration or input problems that abort a run before any generation.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BackendSettings {
    bool mock = false;
    std::string base_url;
    std::string completions_path = "/v1/chat/completions";
    std::string annotator_model = "gpt-4o";
    std::string judge_model = "gpt-4o";
    std::string credential_env = "LONGCOT_API_KEY";
    int parallelism = 8;
    int retry_limit = 4;
    std::optional<std::filesystem::path> mock_templates;
};

struct PipelineConfig {
    std::filesystem::path seed_path;
    std::filesystem::path questions_path;
    std::filesystem::path output_path;
    BackendSettings backend;
    flowgen::BudgetScale budget_scale = flowgen::BudgetScale::full();
    int k_demos = 1;
    bool run_filter = true;
    filtering::FilterPolicy filter_policy = filtering::FilterPolicy::correct_and_unjudged;
    rewards::RewardWeights weights;
    std::uint64_t rng_seed = 0;
};

void validate(const PipelineConfig& config);  // throws ConfigError

std::shared_ptr<backend::Backend> make_backend(const BackendSettings& settings);

/// Derived output paths: "<stem>.retained<ext>" etc. next to the output file.
std::filesystem::path sibling_path(const std::filesystem::path& base, const std::string& tag);

struct RunReport {
    std::size_t questions_loaded = 0;
    std::size_t question_rejections = 0;
    std::size_t skipped_resume = 0;
    std::size_t flows_generated = 0;
    std::size_t expanded = 0;
    std::size_t written = 0;
    std::size_t per_record_failures = 0;
    bool filter_ran = false;
    filtering::FilterReport filter;
    std::filesystem::path output_path;
    std::filesystem::path retained_path;
    std::filesystem::path quarantine_path;

    nlohmann::json to_json() const;
};

/// Runs retrieval, flow generation, expansion and (optionally) filtering for
/// every question. Records are appended to the output file in question
/// order; reruns skip question ids already present, so interrupted runs are
/// resumable. Per-record errors are logged and skipped; only configuration
/// and input errors abort the run.
RunReport run_pipeline(const PipelineConfig& config);

/// Per-question seed, a pure function of the run seed and the question id.
std::uint64_t question_seed(std::uint64_t rng_seed, const std::string& question_id);

}  // namespace longcot::pipeline
