#pragma once
// Hierarchical Bayesian cumulative-logit model of 1..4 accuracy ratings.
//
//   y ~ Categorical(pi),  pi_c = psi_c - psi_{c-1},  logit(psi_c) = alpha_c - mu
//   mu = tweet_t + sum_{z in z[t]} context_z + gender_g + age_a + state_s + party_p
//        + sum_{z in z[t]} context_party_{(z,p)}
//
// Every effect family is partially pooled, theta^u ~ Normal(0, sigma^u) with
// sigma^u ~ Half-Normal(0, 1). The thresholds alone carry the location: there is no
// global intercept.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "crowdmrp/diagnostics.hpp"
#include "crowdmrp/hierarchy.hpp"
#include "crowdmrp/map_fit.hpp"
#include "crowdmrp/nuts.hpp"
#include "crowdmrp/optimize.hpp"
#include "crowdmrp/types.hpp"

namespace crowdmrp {

enum class OrdinalFactor : std::size_t { tweet, context, gender, age, state, party, context_party };
inline constexpr std::size_t kOrdinalFactors = 7;
inline constexpr std::size_t kThresholds = kCategories - 1;

std::string_view factor_name(OrdinalFactor f);

enum class ContextCombination { sum, mean };
std::string_view to_string(ContextCombination c);
ContextCombination parse_context_combination(std::string_view s);

using Thresholds = std::array<double, kThresholds>;

// Category probabilities for one linear predictor. Throws ValidationError unless the
// thresholds are strictly increasing.
std::array<double, kCategories> cumulative_probs(double mu, const Thresholds& alpha);
// Expected category sum_c c * pi_c, in [1, 4].
double expected_rating(double mu, const Thresholds& alpha);

// Level vocabulary of a fitted or to-be-fitted model.
struct OrdinalStructure {
    std::array<std::vector<std::string>, kOrdinalFactors> levels;
    // Per tweet level: indices into the context levels.
    std::vector<std::vector<int>> item_contexts;
    ContextCombination combination = ContextCombination::sum;

    std::size_t size(OrdinalFactor f) const { return levels[static_cast<std::size_t>(f)].size(); }
    int find(OrdinalFactor f, std::string_view label) const;  // -1 when unseen
    static std::string interaction_label(std::string_view annotation, Party p);
};

struct OrdinalDesign {
    OrdinalStructure structure;
    // Per observation.
    std::vector<int> tweet, gender, age, state, party, rating;
    std::vector<std::string> rater_id;
    // context_party indices per observation, CSR layout.
    std::vector<int> interaction_offsets;  // size n + 1
    std::vector<int> interaction_index;

    std::size_t observations() const { return rating.size(); }
    std::span<const int> interactions(std::size_t obs) const;
};

// Builds a design from raters/items/assessments. Only assessed items and observed levels
// become model levels. Unknown rater or item ids and ratings outside 1..4 throw.
OrdinalDesign build_ordinal_design(const std::vector<Rater>& raters, const std::vector<Item>& items,
                                   const std::vector<Assessment>& assessments,
                                   ContextCombination combination = ContextCombination::sum);

struct OrdinalParams {
    Thresholds alpha{};
    std::array<std::vector<double>, kOrdinalFactors> effects;
    std::array<double, kOrdinalFactors> scales{};

    std::vector<double>& effect(OrdinalFactor f) { return effects[static_cast<std::size_t>(f)]; }
    const std::vector<double>& effect(OrdinalFactor f) const {
        return effects[static_cast<std::size_t>(f)];
    }
    double& scale(OrdinalFactor f) { return scales[static_cast<std::size_t>(f)]; }
    double scale(OrdinalFactor f) const { return scales[static_cast<std::size_t>(f)]; }

    // All-zero effects, unit scales and the given thresholds, sized to `s`.
    static OrdinalParams zeros(const OrdinalStructure& s, Thresholds alpha = {-1.0, 0.0, 1.0});
};

struct OrdinalPriors {
    double threshold_sd = 5.0;  // Normal(0, sd) on each threshold
    double scale_sd = 1.0;      // Half-Normal(0, sd) on every sigma
};

// Unconstrained-space log density of the model. Layout: [alpha_1, log(alpha_2 - alpha_1),
// log(alpha_3 - alpha_2)] followed by one pooled block per factor in OrdinalFactor order.
class OrdinalModel {
public:
    OrdinalModel(const OrdinalDesign& design, Parameterization param, OrdinalPriors priors = {});

    std::size_t dimension() const { return dim_; }
    Parameterization parameterization() const { return param_; }
    const PooledBlock& block(OrdinalFactor f) const { return blocks_[static_cast<std::size_t>(f)]; }

    // Log posterior including Jacobians; when grad is non-empty it receives the gradient.
    double log_density(std::span<const double> u, std::span<double> grad = {}) const;
    double log_likelihood(const OrdinalParams& p) const;
    double log_posterior(const OrdinalParams& p) const { return log_density(pack(p)); }

    OrdinalParams unpack(std::span<const double> u) const;
    std::vector<double> pack(const OrdinalParams& p) const;
    double linear_predictor(const OrdinalParams& p, std::size_t obs) const;

    LogDensityFn as_function() const;

private:
    const OrdinalDesign& design_;
    Parameterization param_;
    OrdinalPriors priors_;
    std::array<PooledBlock, kOrdinalFactors> blocks_;
    std::size_t dim_ = 0;
    std::vector<double> context_weight_;  // per tweet level
};

struct MapConfig {
    OptimizerConfig optimizer;
    double min_scale = 1e-4;  // lower bound on every sigma (joint modes collapse at 0)
    std::uint64_t seed = 1;   // initial jitter of the effects
    double init_jitter = 0.1;
    ScaleEstimate scales = ScaleEstimate::marginal;
};

struct MapReport {
    bool converged = false;
    double grad_max_norm = 0.0;
    int iterations = 0;
    int em_iterations = 0;
    std::string message;
    std::vector<double> trace;
    std::vector<std::string> scales_at_floor;
};

struct OrdinalFit {
    std::string method;  // "map" or "mcmc"
    OrdinalStructure structure;
    OrdinalPriors priors;
    std::vector<OrdinalParams> draws;  // MAP: a single entry
    std::vector<int> draw_chain;
    std::vector<Summary> summaries;   // MCMC only
    std::optional<MapReport> map;
    std::vector<ChainResult> chain_stats;  // draws dropped, stats kept
};

// MAP in the centered parameterization (with sigma >= min_scale).
OrdinalFit fit_ordinal_map(const OrdinalDesign& design, const MapConfig& cfg = {},
                           const OrdinalPriors& priors = {});

// NUTS in the non-centered parameterization.
OrdinalFit sample_ordinal_posterior(const OrdinalDesign& design, const SamplerConfig& cfg,
                                    const OrdinalPriors& priors = {});

// Scalar parameter names in a stable order, and their value for one draw.
std::vector<std::string> ordinal_parameter_names(const OrdinalStructure& s);
std::vector<double> ordinal_parameter_values(const OrdinalParams& p);

struct Persona {
    Gender gender = Gender::male;
    std::string age_band;
    std::string state;
    Party party = Party::neutral;
};

struct PersonaPrediction {
    double value = 0.0;
    bool unseen_level = false;  // some level was absent from training and contributed 0
};

// Plug-in or Monte Carlo mean predictions of the expected rating.
class OrdinalPredictor {
public:
    // max_draws > 0 thins the draws evenly down to at most that many.
    explicit OrdinalPredictor(const OrdinalFit& fit, std::size_t max_draws = 0);

    bool has_item(std::string_view item_id) const;
    PersonaPrediction predict(std::string_view item_id, const Persona& persona) const;

private:
    int lookup(OrdinalFactor f, const std::string& label) const;

    const OrdinalFit& fit_;
    std::vector<std::size_t> draw_index_;
    std::array<std::unordered_map<std::string, int>, kOrdinalFactors> index_;
};

}  // namespace crowdmrp
