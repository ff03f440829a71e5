#include "longcot/pipeline.hpp"

#include <atomic>
#include <condition_variable>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <thread>
#include <vector>

#include "longcot/expand.hpp"
#include "longcot/mock_backend.hpp"
#include "longcot/retrieval.hpp"
#include "longcot/util.hpp"

namespace longcot::pipeline {

namespace {

struct TaskResult {
    bool flow_ok = false;
    std::optional<DatasetRecord> record;
    std::string error;
};

std::set<std::string> existing_output_ids(const std::filesystem::path& path) {
    std::set<std::string> ids;
    if (!std::filesystem::exists(path)) return ids;
    auto parsed = detail::load_json_lines(path, false);
    for (const auto& line : parsed.lines) {
        if (line.value.contains("id") && line.value["id"].is_string()) {
            ids.insert(line.value["id"].get<std::string>());
        }
    }
    return ids;
}

}  // namespace

void validate(const PipelineConfig& config) {
    if (config.seed_path.empty()) throw ConfigError("seed path is empty");
    if (config.questions_path.empty()) throw ConfigError("questions path is empty");
    if (config.output_path.empty()) throw ConfigError("output path is empty");
    if (config.k_demos < 1) throw ConfigError("k_demos must be >= 1");
    if (config.backend.parallelism < 1) throw ConfigError("parallelism must be >= 1");
    if (config.backend.retry_limit < 1) throw ConfigError("retry limit must be >= 1");
    if (!config.backend.mock && config.backend.base_url.empty()) {
        throw ConfigError("backend URL required unless running with the mock backend");
    }
    if (config.weights.length < 0 || config.weights.answer < 0 || config.weights.format < 0) {
        throw ConfigError("reward weights must be nonnegative");
    }
    if (!std::filesystem::exists(config.seed_path)) {
        throw ConfigError("seed file not found: " + config.seed_path.string());
    }
    if (!std::filesystem::exists(config.questions_path)) {
        throw ConfigError("questions file not found: " + config.questions_path.string());
    }
}

std::shared_ptr<backend::Backend> make_backend(const BackendSettings& settings) {
    if (settings.mock) {
        auto mock = std::make_shared<backend::MockBackend>();
        if (settings.mock_templates) {
            mock->load_template_file(*settings.mock_templates);
        }
        return std::make_shared<backend::BoundedBackend>(std::move(mock), settings.parallelism);
    }
    backend::HttpConfig http;
    http.base_url = settings.base_url;
    http.completions_path = settings.completions_path;
    http.credential_env = settings.credential_env;
    http.retry.max_attempts = settings.retry_limit;
    http.parallelism = settings.parallelism;
    return std::make_shared<backend::HttpBackend>(std::move(http));
}

std::filesystem::path sibling_path(const std::filesystem::path& base, const std::string& tag) {
    std::filesystem::path out = base;
    std::string ext = out.extension().string();
    out.replace_extension();
    out += tag;
    out += ext;
    return out;
}

std::uint64_t question_seed(std::uint64_t rng_seed, const std::string& question_id) {
    return util::fnv1a(question_id, util::fnv1a_mix(util::kFnvOffset, rng_seed));
}

nlohmann::json RunReport::to_json() const {
    nlohmann::json j{{"questions_loaded", questions_loaded},
                     {"question_rejections", question_rejections},
                     {"skipped_resume", skipped_resume},
                     {"flows_generated", flows_generated},
                     {"expanded", expanded},
                     {"written", written},
                     {"per_record_failures", per_record_failures},
                     {"output_path", output_path.string()}};
    if (filter_ran) {
        nlohmann::json f;
        filtering::to_json(f, filter);
        j["filter"] = std::move(f);
        j["retained_path"] = retained_path.string();
        j["quarantine_path"] = quarantine_path.string();
    }
    return j;
}

RunReport run_pipeline(const PipelineConfig& config) {
    validate(config);

    auto seed_load = load_records<SeedRecord>(config.seed_path);
    std::vector<SeedRecord> corpus;
    corpus.reserve(seed_load.records.size());
    for (auto& seed : seed_load.records) {
        if (validate(seed).ok()) {
            seed.taxonomy = normalize_taxonomy(seed.taxonomy);
            corpus.push_back(std::move(seed));
        } else {
            std::cerr << "warning: dropping invalid seed record '" << seed.id << "'\n";
        }
    }
    if (corpus.empty()) {
        throw ConfigError("no valid seed records in " + config.seed_path.string());
    }

    auto question_load = load_records<QuestionRecord>(config.questions_path);
    for (const auto& rej : question_load.rejections) {
        std::cerr << "warning: " << config.questions_path.string() << ":" << rej.line_number
                  << ": " << rej.error << "\n";
    }
    std::vector<QuestionRecord> questions = std::move(question_load.records);
    auto dups = duplicate_ids(questions);
    if (!dups.empty()) {
        throw ConfigError("duplicate question id in batch: " + dups.front());
    }

    RunReport report;
    report.questions_loaded = questions.size();
    report.question_rejections = question_load.rejections.size();
    report.output_path = config.output_path;

    std::set<std::string> already_done = existing_output_ids(config.output_path);

    std::vector<const QuestionRecord*> pending;
    for (const auto& q : questions) {
        if (already_done.count(q.id)) {
            report.skipped_resume += 1;
        } else {
            pending.push_back(&q);
        }
    }

    auto backend_handle = make_backend(config.backend);

    std::vector<TaskResult> results(pending.size());
    std::vector<bool> done(pending.size(), false);
    std::mutex mutex;
    std::condition_variable cv;
    std::atomic<std::size_t> next{0};

    auto run_task = [&](std::size_t index) {
        const QuestionRecord& q = *pending[index];
        TaskResult result;
        try {
            QuestionRecord question = q;
            question.taxonomy = normalize_taxonomy(question.taxonomy);
            ValidationReport question_report = validate(question);
            if (!question_report.ok()) {
                throw std::runtime_error("invalid question record: " +
                                         question_report.violations.front());
            }
            std::uint64_t qseed = question_seed(config.rng_seed, question.id);

            auto demos = retrieval::retrieve_demonstrations(question, corpus, config.k_demos);

            flowgen::FlowGenOptions flow_options;
            flow_options.model_name = config.backend.annotator_model;
            flow_options.seed = qseed;
            ReasoningFlow flow = flowgen::generate_flow(question, demos, config.budget_scale,
                                                        *backend_handle, flow_options);
            result.flow_ok = true;

            expansion::ExpandOptions expand_options;
            expand_options.model_name = config.backend.annotator_model;
            expand_options.seed = util::fnv1a("expand", qseed);
            std::vector<std::string> demo_ids;
            demo_ids.reserve(demos.size());
            for (const auto& d : demos) demo_ids.push_back(d.seed.id);
            DatasetRecord record =
                expansion::expand_flow(question, flow, config.budget_scale, *backend_handle,
                                       expand_options, std::move(demo_ids));

            ValidationReport record_report = validate(record);
            if (!record_report.ok()) {
                throw std::runtime_error("generated record violates invariants: " +
                                         record_report.violations.front());
            }
            result.record = std::move(record);
        } catch (const std::exception& ex) {
            result.error = ex.what();
        }
        {
            std::lock_guard<std::mutex> lock(mutex);
            results[index] = std::move(result);
            done[index] = true;
        }
        cv.notify_all();
    };

    std::size_t worker_count =
        std::min<std::size_t>(static_cast<std::size_t>(config.backend.parallelism),
                              pending.size());
    std::vector<std::thread> workers;
    workers.reserve(worker_count);
    for (std::size_t w = 0; w < worker_count; ++w) {
        workers.emplace_back([&] {
            while (true) {
                std::size_t index = next.fetch_add(1);
                if (index >= pending.size()) break;
                run_task(index);
            }
        });
    }

    // Records land in the output file in question order regardless of task
    // completion order, keeping runs replayable byte for byte.
    {
        RecordWriter writer(config.output_path, /*append=*/true);
        for (std::size_t i = 0; i < pending.size(); ++i) {
            TaskResult result;
            {
                std::unique_lock<std::mutex> lock(mutex);
                cv.wait(lock, [&] { return done[i]; });
                result = std::move(results[i]);
            }
            if (result.flow_ok) report.flows_generated += 1;
            if (result.record) {
                report.expanded += 1;
                writer.append(*result.record);
                report.written += 1;
            } else {
                report.per_record_failures += 1;
                std::cerr << "warning: question '" << pending[i]->id
                          << "' failed: " << result.error << "\n";
            }
        }
    }
    for (auto& w : workers) w.join();

    if (config.run_filter) {
        auto dataset = load_records<DatasetRecord>(config.output_path);
        std::map<std::string, std::string> reference_answers;
        for (const auto& q : questions) {
            if (q.reference_answer) reference_answers[q.id] = *q.reference_answer;
        }
        filtering::JudgeCorrectnessOptions judge_options;
        judge_options.model_name = config.backend.judge_model;
        judge_options.seed = config.rng_seed;
        auto outcome = filtering::filter_dataset(dataset.records, reference_answers,
                                                 *backend_handle, config.filter_policy,
                                                 judge_options);
        report.filter_ran = true;
        report.filter = outcome.report;
        report.retained_path = sibling_path(config.output_path, ".retained");
        report.quarantine_path = sibling_path(config.output_path, ".quarantine");
        write_records(outcome.retained, report.retained_path);
        write_records(outcome.quarantined, report.quarantine_path);
    }

    return report;
}

}  // namespace longcot::pipeline
