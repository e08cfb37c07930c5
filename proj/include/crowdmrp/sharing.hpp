#pragma once
// Hierarchical Bernoulli model of fake-news sharing and its state-level post-stratification.
//
//   nu*_{t,i} ~ Bernoulli(theta_i)
//   logit(theta_i) = alpha + gender_g + age_a + party_p + state_s + gamma . x_s
//
// x_s are the z-scored state predictors (white share, college share, density).
// alpha, gamma ~ Normal(0, 1); pooled effects ~ Normal(0, sigma), sigma ~ Half-Normal(0, 1).

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "crowdmrp/diagnostics.hpp"
#include "crowdmrp/hierarchy.hpp"
#include "crowdmrp/nuts.hpp"
#include "crowdmrp/ordinal.hpp"
#include "crowdmrp/types.hpp"

namespace crowdmrp {

struct SharerObservation {
    std::string user_id;
    Gender gender = Gender::male;
    std::string age_band;
    std::string state;
    Party party = Party::neutral;
    std::vector<std::string> item_ids;
    std::vector<int> outcomes;  // 0/1 per shared item
};

inline constexpr std::size_t kStatePredictors = 3;
std::string_view predictor_name(std::size_t k);  // white, college, density

struct StatePredictorRow {
    std::string state;
    double white_share = 0.0;
    double college_share = 0.0;
    double pop_density = 0.0;
};

struct StatePredictors {
    std::vector<std::string> states;  // sorted
    std::vector<std::array<double, kStatePredictors>> raw;
    std::vector<std::array<double, kStatePredictors>> z;
    std::array<double, kStatePredictors> mean{};
    std::array<double, kStatePredictors> sd{};  // sample sd (n - 1)

    // Validates codes, share ranges and duplicates, then z-scores across the given states.
    static StatePredictors standardize(std::vector<StatePredictorRow> rows);
    int find(std::string_view state) const;  // -1 when absent
};

enum class SharingFactor : std::size_t { gender, age, party, state };
inline constexpr std::size_t kSharingFactors = 4;
std::string_view factor_name(SharingFactor f);

struct SharingStructure {
    std::array<std::vector<std::string>, kSharingFactors> levels;
    std::size_t size(SharingFactor f) const { return levels[static_cast<std::size_t>(f)].size(); }
    int find(SharingFactor f, std::string_view label) const;
};

struct SharingDesign {
    SharingStructure structure;
    StatePredictors predictors;
    // One Bernoulli row per (user, shared item).
    std::vector<std::string> row_user, row_item;
    std::vector<int> row_outcome;
    std::vector<std::size_t> row_cell;
    // Rows aggregated by covariate cell; the binomial likelihood over cells equals the
    // Bernoulli likelihood over rows.
    std::vector<std::array<int, kSharingFactors>> cell_levels;
    std::vector<std::array<double, kStatePredictors>> cell_x;
    std::vector<double> cell_trials, cell_successes;
    std::vector<std::string> warnings;

    std::size_t rows() const { return row_outcome.size(); }
    std::size_t cells() const { return cell_trials.size(); }
};

// Users without shares are dropped with a warning; unknown states and outcomes outside
// {0, 1} throw.
SharingDesign build_sharing_design(const std::vector<SharerObservation>& observations,
                                   const StatePredictors& predictors);

struct SharingParams {
    double alpha = 0.0;
    std::array<double, kStatePredictors> gamma{};
    std::array<std::vector<double>, kSharingFactors> effects;
    std::array<double, kSharingFactors> scales{};

    std::vector<double>& effect(SharingFactor f) { return effects[static_cast<std::size_t>(f)]; }
    const std::vector<double>& effect(SharingFactor f) const { return effects[static_cast<std::size_t>(f)]; }

    static SharingParams zeros(const SharingStructure& s);
};

struct SharingPriors {
    double intercept_sd = 1.0;
    double gamma_sd = 1.0;
    double scale_sd = 1.0;
};

// Layout: [alpha, gamma_1..3] followed by one pooled block per factor.
class SharingModel {
public:
    SharingModel(const SharingDesign& design, Parameterization param, SharingPriors priors = {});

    std::size_t dimension() const { return dim_; }
    const PooledBlock& block(SharingFactor f) const { return blocks_[static_cast<std::size_t>(f)]; }

    double log_density(std::span<const double> u, std::span<double> grad = {}) const;
    double log_likelihood(const SharingParams& p) const;
    double log_posterior(const SharingParams& p) const { return log_density(pack(p)); }

    SharingParams unpack(std::span<const double> u) const;
    std::vector<double> pack(const SharingParams& p) const;
    LogDensityFn as_function() const;

private:
    double cell_eta(const SharingParams& p, std::size_t c) const;

    const SharingDesign& design_;
    Parameterization param_;
    SharingPriors priors_;
    std::array<PooledBlock, kSharingFactors> blocks_;
    std::size_t dim_ = 0;
};

struct SharingFit {
    std::string method;  // "map" or "mcmc"
    SharingStructure structure;
    StatePredictors predictors;
    SharingPriors priors;
    std::vector<SharingParams> draws;
    std::vector<int> draw_chain;
    std::vector<Summary> summaries;  // MCMC only
    std::optional<MapReport> map;
    std::vector<ChainResult> chain_stats;
};

SharingFit fit_sharing_map(const SharingDesign& design, const MapConfig& cfg = {},
                           const SharingPriors& priors = {});
SharingFit sample_sharing_posterior(const SharingDesign& design, const SamplerConfig& cfg,
                                    const SharingPriors& priors = {});

std::vector<std::string> sharing_parameter_names(const SharingStructure& s);
std::vector<double> sharing_parameter_values(const SharingParams& p);

// logistic(alpha + sum of effects + gamma . x). Unseen levels count as 0.
double predict_cell_theta(const SharingParams& p, const SharingStructure& s, const Persona& cell,
                          std::span<const double, kStatePredictors> x);

// Weighted mean of cell thetas per state, sorted by state. Throws when a state's total
// weight is zero or the sizes disagree.
std::vector<std::pair<std::string, double>> poststratify(std::span<const double> cell_theta,
                                                         const StratificationFrame& frame);

struct StateEstimate {
    std::string state;
    double theta = 0.0;  // posterior mean (or plug-in)
    std::optional<double> q10, q50, q90;
    std::optional<long long> expected_count;
};

enum class PoststratMode { drawwise, plugin };

struct PoststratConfig {
    PoststratMode mode = PoststratMode::drawwise;
    std::size_t max_draws = 0;  // 0 = every draw
    int threads = 1;
    // Adult population per state; when empty the frame's state weight totals are used.
    std::map<std::string, double> population;
};

std::vector<StateEstimate> poststratify_states(const SharingFit& fit, const StratificationFrame& frame,
                                               const PoststratConfig& cfg = {});

// 100 (exp(beta) - 1) and its inverse.
double odds_change(double beta);
double odds_change_inverse(double pct);

long long expected_sharers(double theta, double population);

struct CoefficientRow {
    std::string name;
    double q10 = 0.0, q50 = 0.0, q90 = 0.0;
    double odds_change_q10 = 0.0, odds_change_q90 = 0.0;
    std::optional<double> prob_positive;
};

CoefficientRow coefficient_row(std::string name, double q10, double q50, double q90,
                               std::optional<double> prob_positive = std::nullopt);
// Every fitted coefficient; MAP fits report the point estimate in all quantile columns.
std::vector<CoefficientRow> coefficient_report(const SharingFit& fit);

// Conditional party shares (democrat, republican, neutral) keyed by gender|age_band|state.
using PartyShareTable = std::map<std::string, std::array<double, 3>>;
std::string demographic_key(Gender g, std::string_view age_band, std::string_view state);

// Splits every cell by the conditional party shares; zero-share parts are dropped.
StratificationFrame extend_frame_with_party(const StratificationFrame& frame, const PartyShareTable& shares);

}  // namespace crowdmrp
