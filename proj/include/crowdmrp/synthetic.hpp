#pragma once
// Synthetic populations drawn from known ground truth, for recovery tests and
// end-to-end runs of the pipeline.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crowdmrp/ordinal.hpp"
#include "crowdmrp/raking.hpp"
#include "crowdmrp/sharing.hpp"
#include "crowdmrp/types.hpp"

namespace crowdmrp {

struct DemographicMix {
    double female_share = 0.5;
    std::vector<std::string> age_bands = default_age_bands();
    std::vector<double> age_probs = {0.1, 0.3, 0.3, 0.3};
    std::vector<std::string> states;  // empty = all 51
    std::vector<double> state_probs;  // empty = uniform
    std::array<double, 3> party_probs = {0.4, 0.4, 0.2};  // democrat, republican, neutral
};

struct OrdinalTruthConfig {
    Thresholds alpha = {-1.0, 0.0, 1.0};
    // Scale of every factor in OrdinalFactor order; effects are centred and rescaled so
    // their sample sd equals the scale exactly.
    std::array<double, kOrdinalFactors> scales = {0.8, 0.3, 0.2, 0.2, 0.2, 0.4, 0.2};
    // Explicit effects for a factor, in the generator's level order, override the scale.
    std::array<std::optional<std::vector<double>>, kOrdinalFactors> fixed;
    // When > 0, context x party effects become +p_z for democrats, -p_z for republicans
    // and 0 for neutrals, with p_z ~ Normal(0, polarization).
    double polarization = 0.0;
};

struct SyntheticOrdinalConfig {
    int raters = 200;
    int items = 300;
    double assessments_per_item = 8.0;  // Poisson mean, at least 1 per item
    int annotations = 8;
    int annotations_per_item = 1;
    DemographicMix mix;
    OrdinalTruthConfig truth;
    std::uint64_t seed = 1;
};

struct SyntheticOrdinalData {
    std::vector<Rater> raters;
    std::vector<Item> items;
    std::vector<Assessment> assessments;
    OrdinalStructure structure;  // generator level order
    OrdinalParams truth;
};

// Level order of the generator: gender {male, female}; mix age bands; mix states;
// party {democrat, republican, neutral}; contexts ctxNN; items tNNNN; interactions
// context-major then party.
SyntheticOrdinalData generate_ordinal_dataset(const SyntheticOrdinalConfig& cfg);

// Effect of `label` in the truth of a generated dataset (0 when absent).
double truth_effect(const SyntheticOrdinalData& d, OrdinalFactor f, std::string_view label);

struct SharingTruthConfig {
    double alpha = -1.5;
    std::array<double, kStatePredictors> gamma = {0.1, -0.1, 0.0};
    std::array<double, kSharingFactors> scales = {0.2, 0.2, 0.3, 0.2};
    std::array<std::optional<std::vector<double>>, kSharingFactors> fixed;
};

struct SyntheticSharingConfig {
    int users = 2000;
    double shares_per_user = 10.0;  // Poisson mean, at least 1
    int item_pool = 500;
    DemographicMix mix;
    SharingTruthConfig truth;
    std::uint64_t seed = 1;
};

struct SyntheticSharingData {
    std::vector<SharerObservation> observations;
    std::vector<StatePredictorRow> predictors;
    SharingStructure structure;
    SharingParams truth;
};

SyntheticSharingData generate_sharing_dataset(const SyntheticSharingConfig& cfg);

std::vector<StatePredictorRow> synthetic_state_predictors(std::uint64_t seed);

// Frame over gender x age x state x party with weights proportional to the mix, scaled
// by a per-state population drawn from the seed.
StratificationFrame synthetic_frame(const DemographicMix& mix, std::uint64_t seed, bool with_party = true);

// Conditional party shares per gender|age|state that vary around the mix.
PartyShareTable synthetic_party_shares(const DemographicMix& mix, std::uint64_t seed);

// Marginal targets matching the mix (gender, age_band, party).
MarginTargets synthetic_margin_targets(const DemographicMix& mix);

}  // namespace crowdmrp
