#include "longcot/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <set>
#include <stdexcept>

#include "longcot/util.hpp"

namespace longcot::retrieval {

namespace {

std::set<std::string> normalized_subs(const Taxonomy& t) {
    std::set<std::string> out;
    for (const auto& sub : t.sub_categories) {
        std::string norm = util::to_lower(util::trim(sub));
        if (!norm.empty()) out.insert(std::move(norm));
    }
    return out;
}

long long budget_gap(long long target, const SeedRecord& seed) {
    return std::llabs(target - seed.budget_ref);
}

}  // namespace

double domain_match_score(const Taxonomy& query, const Taxonomy& candidate) {
    double score = 0.0;
    if (util::iequals(util::trim(query.main_category), util::trim(candidate.main_category))) {
        score += 1.0;
    }
    std::set<std::string> query_subs = normalized_subs(query);
    std::set<std::string> candidate_subs = normalized_subs(candidate);
    std::size_t shared = 0;
    for (const auto& sub : query_subs) {
        if (candidate_subs.count(sub)) ++shared;
    }
    return score + 0.2 * static_cast<double>(shared);
}

double budget_similarity(long long x, long long y) {
    if (x < 1 || y < 1) {
        throw std::invalid_argument("budget_similarity requires positive budgets");
    }
    long long lo = std::min(x, y);
    long long hi = std::max(x, y);
    return static_cast<double>(lo) / static_cast<double>(hi);
}

RetrievalScore score_candidate(const Taxonomy& query_taxonomy, long long target_budget,
                               const SeedRecord& candidate) {
    RetrievalScore s;
    s.domain_score = domain_match_score(query_taxonomy, candidate.taxonomy);
    s.budget_score = budget_similarity(target_budget, candidate.budget_ref);
    s.total = s.domain_score * s.budget_score;
    return s;
}

long long estimate_target_budget(const QuestionRecord& query, std::span<const SeedRecord> corpus) {
    if (query.target_budget) {
        if (*query.target_budget < 1) {
            throw std::invalid_argument("target_budget must be positive");
        }
        return *query.target_budget;
    }
    if (corpus.empty()) {
        throw std::invalid_argument("estimate_target_budget requires a non-empty corpus");
    }
    double best_domain = -1.0;
    std::vector<long long> budgets;
    for (const auto& seed : corpus) {
        double d = domain_match_score(query.taxonomy, seed.taxonomy);
        if (d > best_domain) {
            best_domain = d;
            budgets.clear();
        }
        if (d == best_domain) {
            budgets.push_back(seed.budget_ref);
        }
    }
    std::sort(budgets.begin(), budgets.end());
    // Median; an even count rounds toward the larger middle value.
    return budgets[budgets.size() / 2];
}

std::vector<RankedDemo> retrieve_demonstrations(const QuestionRecord& query,
                                                std::span<const SeedRecord> corpus, int k) {
    if (corpus.empty()) {
        throw std::invalid_argument("retrieve_demonstrations requires a non-empty corpus");
    }
    if (k < 1) {
        throw std::invalid_argument("k must be >= 1");
    }
    long long target = estimate_target_budget(query, corpus);

    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<RetrievalScore> scores;
    scores.reserve(corpus.size());
    for (const auto& seed : corpus) {
        scores.push_back(score_candidate(query.taxonomy, target, seed));
    }

    auto better = [&](std::size_t a, std::size_t b) {
        if (scores[a].total != scores[b].total) return scores[a].total > scores[b].total;
        long long gap_a = budget_gap(target, corpus[a]);
        long long gap_b = budget_gap(target, corpus[b]);
        if (gap_a != gap_b) return gap_a < gap_b;
        return corpus[a].id < corpus[b].id;
    };
    std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), corpus.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take),
                      order.end(), better);

    std::vector<RankedDemo> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        out.push_back({corpus[order[i]], scores[order[i]]});
    }
    return out;
}

}  // namespace longcot::retrieval
