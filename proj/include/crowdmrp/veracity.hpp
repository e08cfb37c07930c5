#pragma once
// Per-item veracity metrics (naive and model-based estimation under sample, balanced,
// population and partisan aggregation), dichotomisation and metric comparison.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crowdmrp/ordinal.hpp"
#include "crowdmrp/types.hpp"

namespace crowdmrp {

enum class Metric {
    naive_sample,
    naive_balanced,
    naive_population,
    naive_partisan_D,
    naive_partisan_R,
    model_sample,
    model_balanced,
    model_population,
    model_partisan_D,
    model_partisan_R,
};

const std::vector<Metric>& all_metrics();
std::string_view to_string(Metric m);
Metric parse_metric(std::string_view s);
bool is_partisan(Metric m);

struct VeracityScore {
    std::string item_id;
    Metric metric = Metric::naive_sample;
    std::optional<double> value;  // in [1, 4] when present
    int n_used = 0;
    std::vector<std::string> flags;
};

// A rating together with the assessor's covariates.
struct RatedBy {
    int rating = 0;
    const Rater* rater = nullptr;
};

VeracityScore naive_sample(std::string_view item_id, std::span<const int> ratings);
VeracityScore naive_partisan(std::string_view item_id, std::span<const RatedBy> ratings, Party j);

struct BalancedConfig {
    int rounds = 1000;  // bootstrap rounds S
    std::uint64_t seed = 1;
};

// Also reports the Monte Carlo standard error of the bootstrap mean (0 when balanced).
struct BalancedEstimate {
    VeracityScore score;
    double mc_standard_error = 0.0;
};

// The bootstrap stream is derived from (seed, item id), independent of call order.
BalancedEstimate naive_balanced(std::string_view item_id, std::span<const int> democrat,
                                std::span<const int> republican, const BalancedConfig& cfg);
BalancedEstimate naive_balanced(std::string_view item_id, std::span<const RatedBy> ratings,
                                const BalancedConfig& cfg);

// Weighted mean with the full-sample raking weights (not re-raked per item).
VeracityScore naive_population(std::string_view item_id, std::span<const int> ratings,
                               std::span<const double> weights);

Persona persona_of(const Rater& r);
Persona persona_of(const PersonaCell& c);

VeracityScore model_sample(const OrdinalPredictor& model, std::string_view item_id,
                           std::span<const RatedBy> ratings);
VeracityScore model_partisan(const OrdinalPredictor& model, std::string_view item_id,
                             const StratificationFrame& frame, Party j);
VeracityScore model_balanced(std::string_view item_id, const VeracityScore& democrat,
                             const VeracityScore& republican);
VeracityScore model_population(const OrdinalPredictor& model, std::string_view item_id,
                               const StratificationFrame& frame);

struct ScoringInputs {
    const std::vector<Rater>* raters = nullptr;
    const std::vector<Item>* items = nullptr;
    const std::vector<Assessment>* assessments = nullptr;
    const std::map<std::string, double>* rake_weights = nullptr;  // needed for naive_population
    const OrdinalFit* fit = nullptr;                   // needed for model_* metrics
    const StratificationFrame* frame = nullptr;        // needed for model partisan/balanced/population
};

struct ScoringConfig {
    std::vector<Metric> metrics = all_metrics();
    BalancedConfig balanced;
    std::size_t prediction_draws = 200;  // 0 = use every draw
    int threads = 1;
};

// Scores every item under every requested metric; output is ordered by item then metric.
std::vector<VeracityScore> score_items(const ScoringInputs& in, const ScoringConfig& cfg);

enum class DichotomyRule { threshold_le2, lowest_decile };
std::string_view to_string(DichotomyRule r);
DichotomyRule parse_rule(std::string_view s);

struct FakeLabel {
    std::string item_id;
    Metric metric = Metric::naive_sample;
    DichotomyRule rule = DichotomyRule::threshold_le2;
    std::optional<int> label;  // missing when the score is missing
};

// 1 iff value <= threshold (inclusive).
FakeLabel dichotomize_threshold(const VeracityScore& score, double threshold = 2.0);

// Flags exactly ceil(q * M) of the M present scores: lowest values first, ties by item id.
// Requires at least 10 present scores. Missing scores get missing labels.
std::vector<FakeLabel> dichotomize_percentile(const std::vector<VeracityScore>& scores, double q = 0.10);

struct CorrelationCell {
    std::optional<double> r;
    std::optional<double> p_value;  // two-sided, t with n - 2 df
    int n = 0;                      // pairwise-complete items
    std::vector<std::string> flags;
};

struct CorrelationMatrix {
    std::vector<Metric> metrics;
    std::vector<std::vector<CorrelationCell>> cells;
};

std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

CorrelationMatrix metric_correlation_matrix(const std::vector<VeracityScore>& scores,
                                            const std::vector<Metric>& metrics);

}  // namespace crowdmrp
