#pragma once

#include <span>
#include <vector>

#include "longcot/records.hpp"

namespace longcot::retrieval {

/// Combined retrieval score for one (question, seed) pair:
/// total = domain_score * budget_score.
struct RetrievalScore {
    double domain_score = 0.0;
    double budget_score = 0.0;
    double total = 0.0;
};

/// 1 point for matching main categories plus 0.2 per shared subcategory.
/// Labels are compared case-insensitively after trimming; duplicate
/// subcategory labels count once.
double domain_match_score(const Taxonomy& query, const Taxonomy& candidate);

/// 1 - |min(x,y)/max(x,y) - 1|, i.e. min/max. Symmetric, 1 exactly at x == y,
/// invariant under scaling both budgets by the same factor. Also serves as
/// the length reward. Throws std::invalid_argument for nonpositive inputs.
double budget_similarity(long long x, long long y);

RetrievalScore score_candidate(const Taxonomy& query_taxonomy, long long target_budget,
                               const SeedRecord& candidate);

struct RankedDemo {
    SeedRecord seed;
    RetrievalScore score;
};

/// Resolved thought-budget target for a new question: the explicit
/// target_budget when present, otherwise the median budget_ref among the
/// candidates with maximal domain score (even counts round toward the larger
/// middle value). Throws on an empty corpus.
long long estimate_target_budget(const QuestionRecord& query, std::span<const SeedRecord> corpus);

/// Top-k seeds by total score, descending. Ties break on smaller
/// |target_budget - budget_ref|, then lexicographically smaller id, so the
/// ranking is a pure function of (query, corpus, k).
std::vector<RankedDemo> retrieve_demonstrations(const QuestionRecord& query,
                                                std::span<const SeedRecord> corpus, int k);

}  // namespace longcot::retrieval
