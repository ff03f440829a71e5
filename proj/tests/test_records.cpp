#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <random>

#include "longcot/records.hpp"
#include "test_support.hpp"

using namespace longcot;
using testsupport::TempDir;

namespace {

std::string random_text(std::mt19937_64& rng, bool allow_newlines = true) {
    static const std::vector<std::string> words = {
        "alpha", "beta",  "gamma", "delta", "check", "verify", "sum",
        "ratio", "bound", "case",  "prove", "count", "图表",   "émigré"};
    std::uniform_int_distribution<int> len(1, 12);
    std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
    std::uniform_int_distribution<int> newline(0, 9);
    std::string out;
    int n = len(rng);
    for (int i = 0; i < n; ++i) {
        if (i > 0) out += (allow_newlines && newline(rng) == 0) ? "\n" : " ";
        out += words[pick(rng)];
    }
    return out;
}

DatasetRecord random_dataset_record(std::mt19937_64& rng, int index) {
    std::uniform_int_distribution<int> outline_count(1, 6);
    int n = outline_count(rng);
    DatasetRecord r;
    r.id = "rec-" + std::to_string(index);
    r.question = random_text(rng);
    r.flow.expected_count = n;
    for (int i = 0; i < n; ++i) {
        r.flow.outlines.push_back({"Step " + std::to_string(i), random_text(rng, false)});
        r.trace.segments.push_back({i, random_text(rng)});
    }
    r.trace.final_solution = random_text(rng);
    r.aggregated_text = "<thought>x</thought>\n" + r.trace.final_solution;
    int scale_pick = std::uniform_int_distribution<int>(0, 2)(rng);
    r.budget_scale = scale_pick == 0 ? 1.0 : (scale_pick == 1 ? 0.5 : 0.25);
    r.generated_thought_tokens = std::uniform_int_distribution<long long>(0, 30000)(rng);
    r.filter_verdict = FilterVerdictValue::unjudged;
    r.provenance = {"mock", {"seed-1"}, "2026-01-01T00:00:00Z"};
    return r;
}

bool same_record(const DatasetRecord& a, const DatasetRecord& b) {
    nlohmann::json ja = a, jb = b;
    return ja == jb;
}

}  // namespace

TEST_SUITE("records") {

TEST_CASE("seed file loads in order") {
    TempDir dir;
    std::vector<SeedRecord> seeds = {testsupport::seed("a", "Math", 100),
                                     testsupport::seed("b", "Math", 200),
                                     testsupport::seed("c", "Reasoning", 300)};
    auto path = dir.file("seeds.jsonl");
    CHECK(write_records(seeds, path) == 3);

    auto loaded = load_records<SeedRecord>(path);
    REQUIRE(loaded.records.size() == 3);
    CHECK(loaded.rejections.empty());
    CHECK(loaded.records[0].id == "a");
    CHECK(loaded.records[1].id == "b");
    CHECK(loaded.records[2].id == "c");
}

TEST_CASE("malformed line is rejected with its line number") {
    TempDir dir;
    auto path = dir.file("seeds.jsonl");
    {
        nlohmann::json j1 = testsupport::seed("a", "Math", 100);
        nlohmann::json j3 = testsupport::seed("c", "Math", 300);
        nlohmann::json j4 = testsupport::seed("d", "Math", 400);
        std::ofstream out(path);
        out << j1.dump() << "\n";
        out << "{not json at all\n";
        out << j3.dump() << "\n";
        out << j4.dump() << "\n";
    }
    auto loaded = load_records<SeedRecord>(path);
    CHECK(loaded.records.size() == 3);
    REQUIRE(loaded.rejections.size() == 1);
    CHECK(loaded.rejections[0].line_number == 2);

    CHECK_THROWS_AS(load_records<SeedRecord>(path, /*strict=*/true), RecordIoError);
}

TEST_CASE("structurally valid JSON with wrong fields is rejected, not fatal") {
    TempDir dir;
    auto path = dir.file("seeds.jsonl");
    {
        std::ofstream out(path);
        out << nlohmann::json(testsupport::seed("a", "Math", 100)).dump() << "\n";
        out << R"({"id": "b"})" << "\n";
    }
    auto loaded = load_records<SeedRecord>(path);
    CHECK(loaded.records.size() == 1);
    REQUIRE(loaded.rejections.size() == 1);
    CHECK(loaded.rejections[0].line_number == 2);
}

TEST_CASE("empty file loads to empty list") {
    TempDir dir;
    auto path = dir.file("empty.jsonl");
    std::ofstream(path).close();
    auto loaded = load_records<SeedRecord>(path);
    CHECK(loaded.records.empty());
    CHECK(loaded.rejections.empty());
}

TEST_CASE("missing file throws") {
    CHECK_THROWS_AS(load_records<SeedRecord>("/nonexistent/zzz.jsonl"), RecordIoError);
}

TEST_CASE("write_records of empty list makes an empty file") {
    TempDir dir;
    auto path = dir.file("none.jsonl");
    CHECK(write_records(std::vector<SeedRecord>{}, path) == 0);
    CHECK(std::filesystem::file_size(path) == 0);
}

TEST_CASE("multi-line rationale text round-trips byte-exactly") {
    TempDir dir;
    DatasetRecord record;
    record.id = "multi";
    record.question = "line one\nline two";
    record.flow.expected_count = 1;
    record.flow.outlines.push_back({"Plan", "do it"});
    record.trace.segments.push_back({0, "first paragraph\n\nsecond paragraph\twith tab"});
    record.trace.final_solution = "answer\nover two lines";
    record.aggregated_text = "<thought>x</thought>\ny";
    record.provenance = {"mock", {}, "2026-01-01T00:00:00Z"};

    auto path = dir.file("d.jsonl");
    write_records(std::vector<DatasetRecord>{record}, path);

    // One record, one line.
    std::ifstream in(path);
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 1);

    auto loaded = load_records<DatasetRecord>(path);
    REQUIRE(loaded.records.size() == 1);
    CHECK(same_record(loaded.records[0], record));
    CHECK(loaded.records[0].trace.segments[0].text ==
          "first paragraph\n\nsecond paragraph\twith tab");
}

TEST_CASE("serialization round-trip is the identity on random records") {
    std::mt19937_64 rng(20260810);
    TempDir dir;
    std::vector<DatasetRecord> records;
    for (int i = 0; i < 200; ++i) records.push_back(random_dataset_record(rng, i));
    auto path = dir.file("random.jsonl");
    write_records(records, path);
    auto loaded = load_records<DatasetRecord>(path);
    REQUIRE(loaded.records.size() == records.size());
    CHECK(loaded.rejections.empty());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(same_record(loaded.records[i], records[i]));
    }
}

TEST_CASE("question optional fields round-trip") {
    TempDir dir;
    QuestionRecord with = testsupport::question("q1", "Math");
    with.reference_answer = "42";
    with.target_budget = 800;
    QuestionRecord without = testsupport::question("q2", "Math");
    auto path = dir.file("q.jsonl");
    write_records(std::vector<QuestionRecord>{with, without}, path);
    auto loaded = load_records<QuestionRecord>(path);
    REQUIRE(loaded.records.size() == 2);
    CHECK(loaded.records[0].reference_answer == "42");
    CHECK(loaded.records[0].target_budget == 800);
    CHECK_FALSE(loaded.records[1].reference_answer.has_value());
    CHECK_FALSE(loaded.records[1].target_budget.has_value());
}

TEST_CASE("validate_record flags violated invariants by name") {
    SUBCASE("seed with zero budget") {
        SeedRecord s = testsupport::seed("s", "Math", 0);
        auto report = validate(s);
        CHECK_FALSE(report.ok());
        CHECK(std::count(report.violations.begin(), report.violations.end(), "budget_ref >= 1") ==
              1);
    }
    SUBCASE("dataset record with segment/outline mismatch") {
        DatasetRecord r;
        r.id = "x";
        r.flow = testsupport::flow_of(5);
        for (int i = 0; i < 4; ++i) r.trace.segments.push_back({i, "seg"});
        r.trace.final_solution = "done";
        r.aggregated_text = "<thought>t</thought>\ndone";
        auto report = validate(r);
        CHECK_FALSE(report.ok());
        CHECK(std::count(report.violations.begin(), report.violations.end(),
                         "segment count equals outline count") == 1);
    }
    SUBCASE("well-formed records pass") {
        CHECK(validate(testsupport::seed("s", "Math", 10)).ok());
        CHECK(validate(testsupport::question("q", "Math")).ok());
    }
    SUBCASE("taxonomy rules") {
        CHECK_FALSE(validate(testsupport::taxonomy("   ")).ok());
        CHECK_FALSE(validate(testsupport::taxonomy("Math", {"algebra", "Algebra "})).ok());
        CHECK(validate(testsupport::taxonomy("Math", {"algebra", "geometry"})).ok());
    }
    SUBCASE("flow count mismatch") {
        ReasoningFlow f = testsupport::flow_of(3);
        f.expected_count = 4;
        auto report = validate(f);
        CHECK_FALSE(report.ok());
    }
    SUBCASE("validation is total over arbitrary field values") {
        DatasetRecord r;  // everything empty or zero
        CHECK_NOTHROW(validate(r));
        CHECK_FALSE(validate(r).ok());
        SeedRecord s;
        s.budget_ref = -999;
        CHECK_NOTHROW(validate(s));
    }
}

TEST_CASE("normalize_taxonomy dedupes case-insensitively and trims") {
    Taxonomy t = testsupport::taxonomy("  Math ", {" algebra", "Algebra", "geometry", ""});
    Taxonomy n = normalize_taxonomy(t);
    CHECK(n.main_category == "Math");
    REQUIRE(n.sub_categories.size() == 2);
    CHECK(n.sub_categories[0] == "algebra");
    CHECK(n.sub_categories[1] == "geometry");
}

TEST_CASE("duplicate_ids finds repeats in batch order") {
    std::vector<QuestionRecord> qs = {testsupport::question("a", "Math"),
                                      testsupport::question("b", "Math"),
                                      testsupport::question("a", "Math")};
    auto dups = duplicate_ids(qs);
    REQUIRE(dups.size() == 1);
    CHECK(dups[0] == "a");
}

TEST_CASE("RecordWriter appends and is serialized") {
    TempDir dir;
    auto path = dir.file("appended.jsonl");
    {
        RecordWriter writer(path);
        writer.append(testsupport::seed("a", "Math", 10));
        writer.append(testsupport::seed("b", "Math", 20));
        CHECK(writer.written() == 2);
    }
    {
        RecordWriter writer(path);  // append mode by default
        writer.append(testsupport::seed("c", "Math", 30));
    }
    auto loaded = load_records<SeedRecord>(path);
    REQUIRE(loaded.records.size() == 3);
    CHECK(loaded.records[2].id == "c");
}

}  // TEST_SUITE
