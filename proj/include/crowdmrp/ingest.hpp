#pragma once
// Ingestion rules for crowd-worker data and design-time planning of the review budget.

#include <optional>
#include <string>
#include <vector>

#include "crowdmrp/types.hpp"

namespace crowdmrp {

enum class RejectionReason { attention, zip_dup, no_assessments };
std::string_view to_string(RejectionReason r);

struct Rejection {
    std::string rater_id;
    RejectionReason reason;
};

struct RaterValidation {
    std::vector<Rater> accepted;
    std::vector<Rejection> rejected;
};

// Drops raters failing more than one attention check, keeps the first rater per ZIP
// (input order, then id) and drops raters without assessments. Duplicate ids throw.
RaterValidation validate_raters(const std::vector<Rater>& raters,
                                const std::vector<Assessment>& assessments);

struct PartisanshipConfig {
    double neutral_band = 0.25;       // |score| <= band -> neutral
    bool negative_is_democrat = true;  // sign convention of the elite score
};

Party classify_partisanship(std::optional<double> score, const PartisanshipConfig& cfg = {});

struct AnnotationDrop {
    std::string annotation;
    std::string reason;  // "rank" or "co_occurrence:<kept partner>"
};

struct AnnotationFilterResult {
    std::vector<Item> items;
    std::vector<std::string> kept;  // surviving annotations, by descending frequency
    std::vector<AnnotationDrop> dropped;
};

AnnotationFilterResult filter_context_annotations(const std::vector<Item>& items, int top_k = 30,
                                                  double co_occurrence_cap = 0.60);

struct AllocationCandidate {
    double mean_reviews = 0.0;
    long long pool_size = 0;
    double expected_effective = 0.0;
};

struct AllocationPlan {
    std::vector<AllocationCandidate> candidates;
    std::size_t best = 0;
    const AllocationCandidate& recommended() const { return candidates[best]; }
};

// Poisson(r) model of reviews per item: pool M = floor(budget / r) and
// expected effective items M * P(X > threshold).
AllocationPlan plan_review_allocation(long long review_budget,
                                      const std::vector<double>& candidate_means,
                                      int effective_threshold = 5);

}  // namespace crowdmrp
