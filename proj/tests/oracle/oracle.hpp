#pragma once
// Brute-force reference implementations for tests. Nothing here calls into the library;
// inputs are plain structs filled by the tests.

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

struct OrdinalObs {
    int tweet = 0;
    std::vector<int> contexts;
    int gender = 0, age = 0, state = 0, party = 0;
    std::vector<int> interactions;
    int rating = 1;
};

// Factors in the order tweet, context, gender, age, state, party, context_party.
struct OrdinalData {
    std::array<int, 7> levels{};
    std::vector<OrdinalObs> obs;
    bool context_mean = false;
};

// Layout: [a1, log(a2 - a1), log(a3 - a2)], then per factor [log sigma, v_1 .. v_K].
// Thresholds ~ N(0, threshold_sd), sigma ~ half-N(0, scale_sd).
double ordinal_log_density(const OrdinalData& d, const std::vector<double>& u, bool non_centered,
                           double threshold_sd = 5.0, double scale_sd = 1.0);

// Category probabilities of a 4-point cumulative logit, computed by differences.
std::array<double, 4> ordinal_probs(double mu, const std::array<double, 3>& alpha);

struct ShareRow {
    int gender = 0, age = 0, party = 0, state = 0;
    std::array<double, 3> x{};
    int outcome = 0;
};

// Factors in the order gender, age, party, state.
struct SharingData {
    std::array<int, 4> levels{};
    std::vector<ShareRow> rows;
};

// Layout: [alpha, gamma_1..3], then per factor [log sigma, v_1 .. v_K].
double sharing_log_density(const SharingData& d, const std::vector<double>& u, bool non_centered,
                           double intercept_sd = 1.0, double gamma_sd = 1.0, double scale_sd = 1.0);

// Exact mean of the balanced estimator over all subsamples of the majority group.
// Throws when a group exceeds 12 ratings.
double exhaustive_balanced_expectation(const std::vector<int>& democrat, const std::vector<int>& republican);
// Variance of one round of the balanced estimator, by the same enumeration.
double exhaustive_balanced_variance(const std::vector<int>& democrat, const std::vector<int>& republican);

// Plain iterative proportional fitting without caps, run to 1e-13. Weights have mean 1.
std::vector<double> rake_uncapped(const std::vector<std::vector<int>>& levels,
                                  const std::vector<std::vector<double>>& targets);

// Mean number of items with more than `threshold` reviews when `budget` reviews are
// assigned uniformly at random over floor(budget / mean) items.
double simulate_effective_items(long long budget, double mean, int threshold, int replications,
                                std::uint64_t seed);

// Ids flagged by sorting (value, id) and taking the first ceil(num / den * M).
std::vector<std::string> percentile_sort_oracle(std::vector<std::pair<double, std::string>> scores,
                                                long long num, long long den);

// Pearson r by the raw-sums formula.
double textbook_pearson(const std::vector<double>& x, const std::vector<double>& y);
// Two-sided p-value of r with n - 2 degrees of freedom via the incomplete beta function.
double pearson_p_value(double r, int n);

std::vector<double> central_difference(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h = 1e-5);

// Weighted share of `level` among units.
double weighted_share(const std::vector<int>& levels, const std::vector<double>& weights, int level);

}  // namespace oracle
