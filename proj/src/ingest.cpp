#include "crowdmrp/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <boost/math/distributions/poisson.hpp>

namespace crowdmrp {

std::string_view to_string(RejectionReason r) {
    switch (r) {
        case RejectionReason::attention: return "attention";
        case RejectionReason::zip_dup: return "zip_dup";
        case RejectionReason::no_assessments: return "no_assessments";
    }
    return "unknown";
}

RaterValidation validate_raters(const std::vector<Rater>& raters,
                                const std::vector<Assessment>& assessments) {
    std::unordered_set<std::string> ids;
    for (const auto& r : raters)
        if (!ids.insert(r.id).second) throw ValidationError("duplicate rater id '" + r.id + "'");

    std::unordered_set<std::string> assessed;
    for (const auto& a : assessments) assessed.insert(a.rater_id);

    // ZIP winner among attention-passing raters: earliest ingestion position. Positions
    // are unique, so the id tie-break only matters for callers that pre-sort.
    std::unordered_map<std::string, std::size_t> zip_owner;
    for (std::size_t i = 0; i < raters.size(); ++i) {
        const auto& r = raters[i];
        if (!r.zip || r.zip->empty() || r.attention_failures > 1) continue;
        zip_owner.emplace(*r.zip, i);
    }

    RaterValidation out;
    for (std::size_t i = 0; i < raters.size(); ++i) {
        const auto& r = raters[i];
        if (r.attention_failures < 0 || r.attention_failures > kAttentionChecks)
            throw ValidationError("rater '" + r.id + "': attention_failures out of range");
        if (r.attention_failures > 1) {
            out.rejected.push_back({r.id, RejectionReason::attention});
        } else if (r.zip && !r.zip->empty() && zip_owner.at(*r.zip) != i) {
            out.rejected.push_back({r.id, RejectionReason::zip_dup});
        } else if (!assessed.contains(r.id)) {
            out.rejected.push_back({r.id, RejectionReason::no_assessments});
        } else {
            out.accepted.push_back(r);
        }
    }
    return out;
}

Party classify_partisanship(std::optional<double> score, const PartisanshipConfig& cfg) {
    if (!score) return Party::neutral;
    const double s = *score;
    if (!std::isfinite(s) || s < -1.0 || s > 1.0)
        throw ValidationError("partisanship score outside [-1, 1]");
    if (std::abs(s) <= cfg.neutral_band) return Party::neutral;
    const bool negative = s < 0.0;
    return negative == cfg.negative_is_democrat ? Party::democrat : Party::republican;
}

AnnotationFilterResult filter_context_annotations(const std::vector<Item>& items, int top_k,
                                                  double co_occurrence_cap) {
    std::map<std::string, long long> freq;
    for (const auto& it : items) {
        std::set<std::string> uniq(it.annotations.begin(), it.annotations.end());
        for (const auto& a : uniq) ++freq[a];
    }
    std::vector<std::string> ranked;
    for (const auto& [a, _] : freq) ranked.push_back(a);
    // Frequency descending; ties resolved lexicographically.
    std::stable_sort(ranked.begin(), ranked.end(),
                     [&](const std::string& a, const std::string& b) { return freq[a] > freq[b]; });

    AnnotationFilterResult out;
    const auto k = static_cast<std::size_t>(std::max(top_k, 0));
    for (std::size_t i = k; i < ranked.size(); ++i) out.dropped.push_back({ranked[i], "rank"});
    if (ranked.size() > k) ranked.resize(k);

    std::map<std::pair<std::string, std::string>, long long> joint;
    std::set<std::string> top(ranked.begin(), ranked.end());
    for (const auto& it : items) {
        std::set<std::string> uniq;
        for (const auto& a : it.annotations)
            if (top.contains(a)) uniq.insert(a);
        for (auto a = uniq.begin(); a != uniq.end(); ++a)
            for (auto b = std::next(a); b != uniq.end(); ++b) ++joint[{*a, *b}];
    }

    // Walk pairs from the most frequent annotation down; a dropped annotation no longer
    // eliminates others.
    std::set<std::string> removed;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (removed.contains(ranked[i])) continue;
        for (std::size_t j = i + 1; j < ranked.size(); ++j) {
            if (removed.contains(ranked[j])) continue;
            const auto& a = ranked[i];
            const auto& b = ranked[j];
            auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
            auto jt = joint.find(key);
            if (jt == joint.end()) continue;
            const double both = static_cast<double>(jt->second);
            const double p_a_given_b = both / static_cast<double>(freq[b]);
            const double p_b_given_a = both / static_cast<double>(freq[a]);
            if (p_a_given_b > co_occurrence_cap && p_b_given_a > co_occurrence_cap) {
                // ranked order puts the less frequent (or lexicographically later) second
                removed.insert(b);
                out.dropped.push_back({b, "co_occurrence:" + a});
            }
        }
    }
    for (const auto& a : ranked)
        if (!removed.contains(a)) out.kept.push_back(a);

    std::set<std::string> keep(out.kept.begin(), out.kept.end());
    out.items.reserve(items.size());
    for (const auto& it : items) {
        Item copy = it;
        copy.annotations.clear();
        std::set<std::string> seen;
        for (const auto& a : it.annotations)
            if (keep.contains(a) && seen.insert(a).second) copy.annotations.push_back(a);
        out.items.push_back(std::move(copy));
    }
    return out;
}

AllocationPlan plan_review_allocation(long long review_budget,
                                      const std::vector<double>& candidate_means,
                                      int effective_threshold) {
    if (review_budget <= 0) throw ValidationError("review budget must be positive");
    if (candidate_means.empty()) throw ValidationError("no candidate review means given");
    if (effective_threshold < 0) throw ValidationError("effective threshold must be >= 0");

    AllocationPlan plan;
    for (double r : candidate_means) {
        if (!(r > 0.0) || !std::isfinite(r))
            throw ValidationError("candidate mean reviews per item must be positive");
        AllocationCandidate c;
        c.mean_reviews = r;
        c.pool_size = static_cast<long long>(std::floor(static_cast<double>(review_budget) / r));
        boost::math::poisson_distribution<double> reviews(r);
        const double p_effective =
            boost::math::cdf(boost::math::complement(reviews, static_cast<double>(effective_threshold)));
        c.expected_effective = static_cast<double>(c.pool_size) * p_effective;
        plan.candidates.push_back(c);
    }
    for (std::size_t i = 1; i < plan.candidates.size(); ++i)
        if (plan.candidates[i].expected_effective > plan.candidates[plan.best].expected_effective)
            plan.best = i;
    return plan;
}

}  // namespace crowdmrp
