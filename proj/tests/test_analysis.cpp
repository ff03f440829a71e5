#include <doctest.h>

#include <cmath>
#include <random>

#include "longcot/analysis.hpp"
#include "longcot/mock_backend.hpp"
#include "longcot/prompts.hpp"
#include "test_support.hpp"

using namespace longcot;
using namespace longcot::analysis;

namespace {

DatasetRecord record_with_tokens(const std::string& id, long long tokens) {
    DatasetRecord r;
    r.id = id;
    r.generated_thought_tokens = tokens;
    return r;
}

// Oracle route: find the earliest correct sample; solved iff it lands in the
// first n.
double oracle_pass_at_n(const std::vector<std::vector<bool>>& matrix, int n) {
    std::size_t solved = 0;
    for (const auto& row : matrix) {
        std::ptrdiff_t earliest = -1;
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (row[i]) {
                earliest = static_cast<std::ptrdiff_t>(i);
                break;
            }
        }
        if (earliest >= 0 && earliest < n) ++solved;
    }
    return static_cast<double>(solved) / static_cast<double>(matrix.size());
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("extract_thought") {
    SUBCASE("thought tags") {
        auto e = extract_thought("<thought>a b</thought>x", TokenConvention::tag_thought);
        CHECK(e.content == "a b");
        CHECK(e.flag == ThoughtExtractionFlag::ok);
    }
    SUBCASE("think tags") {
        auto e = extract_thought("<think>p</think>", TokenConvention::tag_think);
        CHECK(e.content == "p");
        CHECK(e.flag == ThoughtExtractionFlag::ok);
    }
    SUBCASE("missing tags flagged, empty content") {
        auto e = extract_thought("no tags anywhere", TokenConvention::tag_thought);
        CHECK(e.content.empty());
        CHECK(e.flag == ThoughtExtractionFlag::missing_tags);
    }
    SUBCASE("open without close runs to end of text, flagged") {
        auto e = extract_thought("<thought>runs to the end", TokenConvention::tag_thought);
        CHECK(e.content == "runs to the end");
        CHECK(e.flag == ThoughtExtractionFlag::missing_close);
    }
    SUBCASE("first open and last close delimit the region") {
        auto e = extract_thought("<thought>a</thought>mid<thought>b</thought>",
                                 TokenConvention::tag_thought);
        CHECK(e.content == "a</thought>mid<thought>b");
    }
    SUBCASE("api_subtraction has no tags") {
        CHECK_THROWS_AS(extract_thought("x", TokenConvention::api_subtraction),
                        std::invalid_argument);
    }
}

TEST_CASE("count_thought_tokens with the whitespace tokenizer") {
    WhitespaceTokenizer tok;
    CHECK(count_thought_tokens("<thought>a b c</thought>z", TokenConvention::tag_thought, tok) ==
          3);
    CHECK(count_thought_tokens("<thought></thought>z", TokenConvention::tag_thought, tok) == 0);
    CHECK(count_thought_tokens("no region", TokenConvention::tag_thought, tok) == 0);
}

TEST_CASE("api_thought_tokens subtracts response from total") {
    CHECK(api_thought_tokens(1000, 300) == 700);
    CHECK(api_thought_tokens(500, 500) == 0);
    CHECK_THROWS_AS(api_thought_tokens(100, 200), std::invalid_argument);
}

TEST_CASE("tokenizers are pluggable") {
    WhitespaceTokenizer ws;
    CharRatioTokenizer ratio(4.0);
    CHECK(ws.count_tokens("one two three") == 3);
    CHECK(ws.count_tokens("  padded   ") == 1);
    CHECK(ws.count_tokens("") == 0);
    CHECK(ratio.count_tokens("12345678") == 2);
    CHECK(ratio.count_tokens("123456789") == 3);
    CHECK(ratio.count_tokens("") == 0);
}

TEST_CASE("trigger_frequency") {
    std::vector<std::string> corpus = {"Wait, check this", "Okay"};
    std::vector<std::string> phrases = {"Wait"};
    auto out = trigger_frequency(corpus, phrases);
    REQUIRE(out.size() == 1);
    CHECK(out[0].second == doctest::Approx(0.5));

    SUBCASE("absent phrase is zero") {
        std::vector<std::string> p2 = {"Hmm"};
        CHECK(trigger_frequency(corpus, p2)[0].second == 0.0);
    }
    SUBCASE("matching is case-sensitive") {
        std::vector<std::string> lower = {"wait a moment"};
        std::vector<std::string> p2 = {"Wait"};
        CHECK(trigger_frequency(lower, p2)[0].second == 0.0);
    }
    SUBCASE("prefix phrases match token starts only") {
        std::vector<std::string> texts = {"Let me Verify the sum", "I reVerify nothing",
                                          "Verification pending"};
        std::vector<std::string> p2 = {"Verif-"};
        auto freq = trigger_frequency(texts, p2);
        CHECK(freq[0].second == doctest::Approx(2.0 / 3.0));
    }
    SUBCASE("punctuation phrases work as substrings") {
        std::vector<std::string> texts = {"Is it so?", "Yes!", "done"};
        std::vector<std::string> p2 = {"?", "!"};
        auto freq = trigger_frequency(texts, p2);
        CHECK(freq[0].second == doctest::Approx(1.0 / 3.0));
        CHECK(freq[1].second == doctest::Approx(1.0 / 3.0));
    }
    SUBCASE("empty corpus is an error") {
        CHECK_THROWS_AS(trigger_frequency(std::vector<std::string>{}, phrases),
                        std::invalid_argument);
    }
}

TEST_CASE("pearson_r2") {
    SUBCASE("perfect linearity") {
        std::vector<double> xs = {1, 2, 3, 4, 5};
        std::vector<double> ys;
        for (double x : xs) ys.push_back(2 * x + 1);
        CHECK(pearson_r2(xs, ys) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("hand-computed fixture") {
        std::vector<double> xs = {1, 2, 3};
        std::vector<double> ys = {2, 4, 5};
        CHECK(pearson_r2(xs, ys) == doctest::Approx(27.0 / 28.0).epsilon(1e-9));
        CHECK(std::fabs(pearson_r2(xs, ys) - 0.9643) < 1e-4);
    }
    SUBCASE("errors") {
        std::vector<double> xs = {1, 2, 3};
        std::vector<double> flat = {5, 5, 5};
        CHECK_THROWS_AS(pearson_r2(xs, flat), std::invalid_argument);
        std::vector<double> short_ys = {1, 2};
        CHECK_THROWS_AS(pearson_r2(xs, short_ys), std::invalid_argument);
        std::vector<double> one = {1};
        CHECK_THROWS_AS(pearson_r2(one, one), std::invalid_argument);
    }
    SUBCASE("affine invariance and range") {
        std::mt19937_64 rng(17);
        std::uniform_real_distribution<double> value(-100, 100);
        std::uniform_real_distribution<double> slope(0.1, 10);
        std::uniform_int_distribution<int> len(2, 40);
        for (int trial = 0; trial < 1000; ++trial) {
            int n = len(rng);
            std::vector<double> xs(n), ys(n);
            for (int i = 0; i < n; ++i) {
                xs[i] = value(rng);
                ys[i] = value(rng);
            }
            // keep variance nonzero
            xs[0] += 1000;
            ys[0] -= 1000;
            double base = pearson_r2(xs, ys);
            CHECK(base >= 0.0);
            CHECK(base <= 1.0);
            double a = slope(rng) * (trial % 2 == 0 ? 1.0 : -1.0);
            double b = value(rng);
            std::vector<double> txs(xs);
            for (auto& x : txs) x = a * x + b;
            CHECK(pearson_r2(txs, ys) == doctest::Approx(base).epsilon(1e-9));
        }
    }
}

TEST_CASE("pass_at_n") {
    CHECK(pass_at_n({{false, false, true, false}}, 4) == 1.0);
    CHECK(pass_at_n({{false, false}}, 2) == 0.0);
    CHECK(pass_at_n({{true}, {false}, {true}, {false}}, 1) == 0.5);
    CHECK(pass_at_n({{false, true}}, 1) == 0.0);
    CHECK_THROWS_AS(pass_at_n({{true}}, 2), std::invalid_argument);
    CHECK_THROWS_AS(pass_at_n({}, 1), std::invalid_argument);

    SUBCASE("monotone nondecreasing in n") {
        std::mt19937_64 rng(5);
        std::uniform_int_distribution<int> rows(1, 6);
        std::uniform_int_distribution<int> cols(1, 8);
        for (int trial = 0; trial < 1000; ++trial) {
            int q = rows(rng), s = cols(rng);
            std::vector<std::vector<bool>> matrix(q, std::vector<bool>(s));
            for (auto& row : matrix) {
                for (std::size_t i = 0; i < row.size(); ++i) row[i] = rng() % 3 == 0;
            }
            double prev = 0.0;
            for (int n = 1; n <= s; ++n) {
                double now = pass_at_n(matrix, n);
                CHECK(now >= prev);
                CHECK(now == oracle_pass_at_n(matrix, n));
                prev = now;
            }
        }
    }
}

TEST_CASE("budget_histogram buckets and summary") {
    SUBCASE("hand bucketing") {
        std::vector<DatasetRecord> records = {record_with_tokens("a", 100),
                                              record_with_tokens("b", 150),
                                              record_with_tokens("c", 900)};
        auto hist = budget_histogram(records, 500);
        REQUIRE(hist.buckets.size() == 2);
        CHECK(hist.buckets[0].lower == 0);
        CHECK(hist.buckets[0].upper == 500);
        CHECK(hist.buckets[0].count == 2);
        CHECK(hist.buckets[1].count == 1);
        CHECK(hist.max == 900);
        std::size_t total = 0;
        for (const auto& b : hist.buckets) total += b.count;
        CHECK(total == records.size());
    }
    SUBCASE("single record") {
        std::vector<DatasetRecord> records = {record_with_tokens("a", 123)};
        auto hist = budget_histogram(records, 500);
        CHECK(hist.buckets.size() == 1);
        CHECK(hist.mean == 123.0);
        CHECK(hist.median == 123.0);
    }
    SUBCASE("mean and median") {
        std::vector<DatasetRecord> records = {record_with_tokens("a", 2),
                                              record_with_tokens("b", 4),
                                              record_with_tokens("c", 9)};
        auto hist = budget_histogram(records, 10);
        CHECK(hist.mean == doctest::Approx(5.0));
        CHECK(hist.median == 4.0);
    }
    SUBCASE("even count median averages the middles") {
        std::vector<DatasetRecord> records = {record_with_tokens("a", 2),
                                              record_with_tokens("b", 4),
                                              record_with_tokens("c", 6),
                                              record_with_tokens("d", 20)};
        CHECK(budget_histogram(records, 10).median == 5.0);
    }
    SUBCASE("empty input is an error") {
        CHECK_THROWS_AS(budget_histogram(std::vector<DatasetRecord>{}, 10),
                        std::invalid_argument);
    }
}

TEST_CASE("pairwise_judge maps verdicts through the seeded assignment") {
    backend::MockBackend mock;
    mock.register_literal(std::string(prompts::kPairwiseMarker), "A");
    ResponseSource ours{"ours", "response text one"};
    ResponseSource theirs{"theirs", "response text two"};

    SUBCASE("always-A credits whichever source was shown as A") {
        for (std::uint64_t seed : {0ull, 1ull, 2ull, 3ull, 17ull}) {
            auto outcome = pairwise_judge("q", ours, theirs,
                                          PairwiseCriterion::reasoning_flow, mock, seed);
            CHECK(outcome.verdict == PairwiseVerdict::a);
            REQUIRE(outcome.winner);
            CHECK(*outcome.winner == outcome.shown_as_a);
        }
    }
    SUBCASE("assignment varies across seeds") {
        bool saw_ours_as_a = false, saw_theirs_as_a = false;
        for (std::uint64_t seed = 0; seed < 64; ++seed) {
            auto outcome = pairwise_judge("q", ours, theirs,
                                          PairwiseCriterion::reasoning_flow, mock, seed);
            if (outcome.shown_as_a == "ours") saw_ours_as_a = true;
            if (outcome.shown_as_a == "theirs") saw_theirs_as_a = true;
        }
        CHECK(saw_ours_as_a);
        CHECK(saw_theirs_as_a);
    }
    SUBCASE("identical inputs and seed give identical outcomes") {
        auto a = pairwise_judge("q", ours, theirs, PairwiseCriterion::correctness, mock, 7);
        auto b = pairwise_judge("q", ours, theirs, PairwiseCriterion::correctness, mock, 7);
        CHECK(a.shown_as_a == b.shown_as_a);
        CHECK(a.verdict == b.verdict);
        CHECK(a.judge_raw == b.judge_raw);
    }
}

TEST_CASE("pairwise_judge handles ties and unparseable verdicts") {
    ResponseSource left{"left", "x"};
    ResponseSource right{"right", "y"};

    SUBCASE("tie yields no winner") {
        backend::MockBackend mock;
        mock.register_literal(std::string(prompts::kPairwiseMarker), "after thought...\ntie");
        auto outcome = pairwise_judge("q", left, right,
                                      PairwiseCriterion::reasoning_strategy, mock, 3);
        CHECK(outcome.verdict == PairwiseVerdict::tie);
        CHECK_FALSE(outcome.winner.has_value());
    }
    SUBCASE("free text twice is unparseable and excluded from wins") {
        testsupport::ScriptedBackend scripted({"I simply cannot decide between them."});
        auto outcome = pairwise_judge("q", left, right,
                                      PairwiseCriterion::correctness, scripted, 3);
        CHECK(outcome.verdict == PairwiseVerdict::unparseable);
        CHECK_FALSE(outcome.winner.has_value());
        CHECK(scripted.requests.size() == 2);  // one re-ask
    }
    SUBCASE("empty responses are rejected") {
        backend::MockBackend mock;
        ResponseSource blank{"blank", ""};
        CHECK_THROWS_AS(pairwise_judge("q", blank, right,
                                       PairwiseCriterion::correctness, mock, 1),
                        std::invalid_argument);
    }
}

TEST_CASE("judge prompts carry the criterion and both responses") {
    backend::MockBackend mock;
    testsupport::InstrumentedBackend instrumented(mock);
    ResponseSource left{"left", "LEFT RESPONSE BODY"};
    ResponseSource right{"right", "RIGHT RESPONSE BODY"};
    pairwise_judge("the question", left, right, PairwiseCriterion::reasoning_strategy,
                   instrumented, 5);
    REQUIRE(instrumented.requests.size() == 1);
    std::string prompt = backend::prompt_text(instrumented.requests[0]);
    CHECK(prompt.find("problem-solving techniques") != std::string::npos);
    CHECK(prompt.find("LEFT RESPONSE BODY") != std::string::npos);
    CHECK(prompt.find("RIGHT RESPONSE BODY") != std::string::npos);
    CHECK(prompt.find("the question") != std::string::npos);
}

TEST_CASE("title_token_frequency counts case-folded title tokens") {
    std::vector<ReasoningFlow> flows;
    ReasoningFlow a;
    a.expected_count = 2;
    a.outlines = {{"Verify the result", ""}, {"Check the result", ""}};
    ReasoningFlow b;
    b.expected_count = 1;
    b.outlines = {{"verify carefully", ""}};
    flows.push_back(a);
    flows.push_back(b);

    auto freq = title_token_frequency(flows);
    // verify, the, result each occur twice; ties order by token ascending
    REQUIRE(freq.size() == 5);
    CHECK(freq[0] == std::pair<std::string, std::size_t>{"result", 2});
    CHECK(freq[1] == std::pair<std::string, std::size_t>{"the", 2});
    CHECK(freq[2] == std::pair<std::string, std::size_t>{"verify", 2});
    CHECK(freq[3].second == 1);
    CHECK(freq[4].second == 1);

    SUBCASE("top_n truncates") {
        CHECK(title_token_frequency(flows, 1).size() == 1);
    }
}

TEST_CASE("budget_correlation pairs records with question targets") {
    std::vector<QuestionRecord> questions;
    std::vector<DatasetRecord> records;
    for (int i = 1; i <= 5; ++i) {
        QuestionRecord q = testsupport::question("q" + std::to_string(i), "Math");
        q.target_budget = 100 * i;
        questions.push_back(q);
        records.push_back(record_with_tokens("q" + std::to_string(i), 200 * i + 1));
    }
    auto report = budget_correlation(records, questions);
    REQUIRE(report.has_value());
    CHECK(report->n == 5);
    CHECK(report->r2 == doctest::Approx(1.0).epsilon(1e-9));

    SUBCASE("questions without targets are skipped") {
        questions[0].target_budget.reset();
        questions[1].target_budget.reset();
        auto partial = budget_correlation(records, questions);
        REQUIRE(partial.has_value());
        CHECK(partial->n == 3);
    }
    SUBCASE("fewer than two usable pairs yields no report") {
        std::vector<QuestionRecord> one = {questions[0]};
        std::vector<DatasetRecord> one_r = {records[0]};
        CHECK_FALSE(budget_correlation(one_r, one).has_value());
    }
    SUBCASE("constant series yields no report") {
        for (auto& q : questions) q.target_budget = 500;
        CHECK_FALSE(budget_correlation(records, questions).has_value());
    }
}

TEST_CASE("win credit is assignment-balanced across seeds") {
    backend::MockBackend mock;
    mock.register_literal(std::string(prompts::kPairwiseMarker), "A");
    ResponseSource ours{"ours", "one"};
    ResponseSource theirs{"theirs", "two"};
    int ours_wins = 0;
    const int trials = 1000;
    for (int seed = 0; seed < trials; ++seed) {
        auto outcome =
            pairwise_judge("q", ours, theirs, PairwiseCriterion::reasoning_flow, mock,
                           static_cast<std::uint64_t>(seed));
        if (outcome.winner && *outcome.winner == "ours") ++ours_wins;
    }
    // binomial(1000, 0.5): 3 sigma ~ 47.4
    CHECK(ours_wins >= 453);
    CHECK(ours_wins <= 547);
}

}  // TEST_SUITE
