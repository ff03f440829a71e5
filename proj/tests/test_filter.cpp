#include <doctest.h>

#include "longcot/filter.hpp"
#include "longcot/mock_backend.hpp"
#include "test_support.hpp"

using namespace longcot;
using namespace longcot::filtering;

namespace {

DatasetRecord record_with_answer(const std::string& id, const std::string& answer) {
    DatasetRecord r;
    r.id = id;
    r.question = "question " + id;
    r.flow = testsupport::flow_of(1);
    r.trace.segments = {{0, "reasoning"}};
    r.trace.final_solution = "\\boxed{" + answer + "}";
    r.aggregated_text = "<thought>reasoning</thought>\n\\boxed{" + answer + "}";
    r.provenance = {"mock", {}, "2026-01-01T00:00:00Z"};
    return r;
}

DatasetRecord record_without_span(const std::string& id) {
    DatasetRecord r = record_with_answer(id, "0");
    r.trace.final_solution = "I ran out of ideas.";
    r.aggregated_text = "<thought>reasoning</thought>\nI ran out of ideas.";
    return r;
}

}  // namespace

TEST_SUITE("filter") {

TEST_CASE("judge_correctness parses the last-line verdict") {
    backend::MockBackend mock;
    SUBCASE("matching answers are judged correct") {
        auto verdict = judge_correctness("q", "42", "42", mock);
        CHECK(verdict.value == FilterVerdictValue::correct);
        CHECK_FALSE(verdict.judge_raw.empty());
    }
    SUBCASE("mismatched answers are judged incorrect") {
        auto verdict = judge_correctness("q", "42", "41", mock);
        CHECK(verdict.value == FilterVerdictValue::incorrect);
    }
    SUBCASE("case and trailing punctuation are tolerated") {
        testsupport::ScriptedBackend scripted({"Reasoning about it...\ncorrect."});
        CHECK(judge_correctness("q", "1", "1", scripted).value ==
              FilterVerdictValue::correct);
    }
    SUBCASE("free text twice becomes unparseable") {
        testsupport::ScriptedBackend scripted({"The two answers look vaguely similar."});
        auto verdict = judge_correctness("q", "1", "1", scripted);
        CHECK(verdict.value == FilterVerdictValue::unparseable);
        CHECK(scripted.requests.size() == 2);
    }
    SUBCASE("never defaults to correct on garbage") {
        testsupport::ScriptedBackend scripted({"CORRECT is a word I refuse to emit alone"});
        CHECK(judge_correctness("q", "1", "2", scripted).value ==
              FilterVerdictValue::unparseable);
    }
    SUBCASE("missing reference answer is a precondition violation") {
        CHECK_THROWS_AS(judge_correctness("q", "", "1", mock), std::invalid_argument);
    }
}

TEST_CASE("records without reference answers are unjudged with no backend call") {
    backend::MockBackend mock;
    testsupport::InstrumentedBackend instrumented(mock);
    std::vector<DatasetRecord> records = {record_with_answer("a", "5")};
    auto outcome = filter_dataset(records, {}, instrumented,
                                  FilterPolicy::correct_and_unjudged);
    CHECK(instrumented.requests.empty());
    REQUIRE(outcome.retained.size() == 1);
    CHECK(outcome.retained[0].filter_verdict == FilterVerdictValue::unjudged);
    CHECK(outcome.report.retention_of_all == 1.0);
}

TEST_CASE("filter_dataset splits by verdict and reports both denominators") {
    backend::MockBackend mock;
    // 7 of 10 records match their reference answers.
    std::vector<DatasetRecord> records;
    std::map<std::string, std::string> refs;
    for (int i = 0; i < 10; ++i) {
        std::string id = "r" + std::to_string(i);
        records.push_back(record_with_answer(id, std::to_string(i)));
        refs[id] = i < 7 ? std::to_string(i) : "mismatch";
    }

    auto outcome = filter_dataset(records, refs, mock, FilterPolicy::correct_only);
    CHECK(outcome.report.total == 10);
    CHECK(outcome.report.correct == 7);
    CHECK(outcome.report.incorrect == 3);
    CHECK(outcome.report.unjudged == 0);
    CHECK(outcome.report.unparseable == 0);
    CHECK(outcome.report.retained == 7);
    CHECK(outcome.report.retention_of_all == doctest::Approx(0.7));
    CHECK(outcome.report.retention_of_judged == doctest::Approx(0.7));
    CHECK(outcome.quarantined.size() == 3);

    // Verdict counts sum to the input size.
    CHECK(outcome.report.correct + outcome.report.incorrect + outcome.report.unjudged +
              outcome.report.unparseable ==
          records.size());

    // Order-preserving on the retained subset.
    for (std::size_t i = 0; i + 1 < outcome.retained.size(); ++i) {
        CHECK(outcome.retained[i].id < outcome.retained[i + 1].id);
    }

    SUBCASE("idempotent on the retained set") {
        auto again = filter_dataset(outcome.retained, refs, mock, FilterPolicy::correct_only);
        CHECK(again.retained.size() == outcome.retained.size());
        for (std::size_t i = 0; i < again.retained.size(); ++i) {
            CHECK(again.retained[i].id == outcome.retained[i].id);
            CHECK(again.retained[i].filter_verdict == FilterVerdictValue::correct);
        }
        CHECK(again.report.retention_of_all == 1.0);
    }
}

TEST_CASE("all-unjudged input retains everything under correct-and-unjudged") {
    backend::MockBackend mock;
    std::vector<DatasetRecord> records = {record_with_answer("a", "1"),
                                          record_with_answer("b", "2")};
    auto outcome =
        filter_dataset(records, {}, mock, FilterPolicy::correct_and_unjudged);
    CHECK(outcome.report.retention_of_all == 1.0);
    CHECK(outcome.report.retention_of_judged == 0.0);  // nothing judged
    CHECK(outcome.quarantined.empty());

    SUBCASE("correct-only drops unjudged records without quarantining them") {
        auto strict = filter_dataset(records, {}, mock, FilterPolicy::correct_only);
        CHECK(strict.retained.empty());
        CHECK(strict.quarantined.empty());
        CHECK(strict.report.unjudged == 2);
    }
}

TEST_CASE("records without an extractable span are quarantined as unparseable") {
    backend::MockBackend mock;
    testsupport::InstrumentedBackend instrumented(mock);
    std::vector<DatasetRecord> records = {record_without_span("x")};
    std::map<std::string, std::string> refs = {{"x", "42"}};
    auto outcome = filter_dataset(records, refs, instrumented,
                                  FilterPolicy::correct_and_unjudged);
    CHECK(instrumented.requests.empty());  // nothing to show the judge
    CHECK(outcome.retained.empty());
    REQUIRE(outcome.quarantined.size() == 1);
    CHECK(outcome.quarantined[0].record.filter_verdict == FilterVerdictValue::unparseable);
}

TEST_CASE("backend errors during judging become unparseable, not fatal") {
    backend::MockBackend mock;
    testsupport::FailOnMarkerBackend failing(mock, "question bad");
    std::vector<DatasetRecord> records = {record_with_answer("good", "1"),
                                          record_with_answer("bad", "2")};
    std::map<std::string, std::string> refs = {{"good", "1"}, {"bad", "2"}};
    auto outcome = filter_dataset(records, refs, failing, FilterPolicy::correct_only);
    CHECK(outcome.report.correct == 1);
    CHECK(outcome.report.unparseable == 1);
    REQUIRE(outcome.quarantined.size() == 1);
    CHECK(outcome.quarantined[0].record.id == "bad");
    CHECK(outcome.quarantined[0].judge_raw.find("backend error") != std::string::npos);
}

TEST_CASE("quarantined records serialize with the judge transcript") {
    backend::MockBackend mock;
    std::vector<DatasetRecord> records = {record_with_answer("r", "1")};
    std::map<std::string, std::string> refs = {{"r", "2"}};
    auto outcome = filter_dataset(records, refs, mock, FilterPolicy::correct_only);
    REQUIRE(outcome.quarantined.size() == 1);

    testsupport::TempDir dir;
    auto path = dir.file("quarantine.jsonl");
    write_records(outcome.quarantined, path);
    auto loaded = load_records<QuarantinedRecord>(path);
    REQUIRE(loaded.records.size() == 1);
    CHECK(loaded.records[0].record.id == "r");
    CHECK(loaded.records[0].record.filter_verdict == FilterVerdictValue::incorrect);
    CHECK_FALSE(loaded.records[0].judge_raw.empty());
}

}  // TEST_SUITE
