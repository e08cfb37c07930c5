#pragma once
// File formats of every pipeline stage. Model files carry a format name and version and
// are rejected on mismatch.

#include <map>
#include <string>
#include <vector>

#include "crowdmrp/ingest.hpp"
#include "crowdmrp/ordinal.hpp"
#include "crowdmrp/raking.hpp"
#include "crowdmrp/sharing.hpp"
#include "crowdmrp/types.hpp"
#include "crowdmrp/veracity.hpp"

namespace crowdmrp {

inline constexpr int kFormatVersion = 1;

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// raters.csv: id, gender, age_band, state [, party, party_score, zip, attention_failures].
// An empty or absent party is classified from party_score.
std::vector<Rater> read_raters(const std::string& path, const PartisanshipConfig& cfg = {});
void write_raters(const std::string& path, const std::vector<Rater>& raters);

// items.csv: id [, annotations (|-separated), text].
std::vector<Item> read_items(const std::string& path);
void write_items(const std::string& path, const std::vector<Item>& items);

// assessments.csv: rater_id, item_id, rating (1..4).
std::vector<Assessment> read_assessments(const std::string& path);
void write_assessments(const std::string& path, const std::vector<Assessment>& assessments);

// {factor: {level: share}}, factors raked in file order.
MarginTargets read_targets(const std::string& path);
void write_targets(const std::string& path, const MarginTargets& targets);

// weights.csv: rater_id, weight.
void write_weights(const std::string& path, const RakeWeights& w);
std::map<std::string, double> read_weights(const std::string& path);
void write_rake_report(const std::string& path, const RakeWeights& w);

void write_ingest_report(const std::string& path, const RaterValidation& v,
                         const AnnotationFilterResult& annotations);

void write_ordinal_fit(const std::string& path, const OrdinalFit& fit);
OrdinalFit read_ordinal_fit(const std::string& path);
void write_sharing_fit(const std::string& path, const SharingFit& fit);
SharingFit read_sharing_fit(const std::string& path);

// scores.csv: item_id, metric, value, n_used, flags (|-separated). Missing values are empty.
void write_scores(const std::string& path, const std::vector<VeracityScore>& scores);
std::vector<VeracityScore> read_scores(const std::string& path);

// labels.csv: item_id, metric, rule, label.
void write_labels(const std::string& path, const std::vector<FakeLabel>& labels);
std::vector<FakeLabel> read_labels(const std::string& path);

void write_correlations(const std::string& path, const CorrelationMatrix& m);

// shares.csv: user_id, gender, age_band, state, party, item_id.
struct ShareRow {
    std::string user_id;
    Gender gender = Gender::male;
    std::string age_band;
    std::string state;
    Party party = Party::neutral;
    std::string item_id;
};
std::vector<ShareRow> read_shares(const std::string& path);
void write_shares(const std::string& path, const std::vector<ShareRow>& rows);
std::vector<ShareRow> share_rows(const std::vector<SharerObservation>& observations);

// Joins share rows with the labels of one metric and rule. Shares of unlabelled items
// are dropped with a warning.
std::vector<SharerObservation> observations_from_shares(const std::vector<ShareRow>& rows,
                                                        const std::vector<FakeLabel>& labels, Metric metric,
                                                        DichotomyRule rule, std::vector<std::string>& warnings);

// predictors.csv: state, white_share, college_share, pop_density.
std::vector<StatePredictorRow> read_predictors(const std::string& path);
void write_predictors(const std::string& path, const std::vector<StatePredictorRow>& rows);

// frame.csv: gender, age_band, state, party, weight (party may be absent before extension).
StratificationFrame read_frame(const std::string& path);
void write_frame(const std::string& path, const StratificationFrame& frame);

// party_shares.csv: gender, age_band, state, democrat, republican, neutral.
PartyShareTable read_party_shares(const std::string& path);
void write_party_shares(const std::string& path, const PartyShareTable& shares);

// population.csv: state, population.
std::map<std::string, double> read_population(const std::string& path);

// state_estimates.csv: state, q10, q50, q90, expected_count.
void write_state_estimates(const std::string& path, const std::vector<StateEstimate>& estimates);

// coefficient_report.csv: name, q10, q50, q90, odds_change_q10, odds_change_q90, prob_positive.
void write_coefficient_report(const std::string& path, const std::vector<CoefficientRow>& rows);
// Published coefficient quantiles: name, q10, q50, q90 [, prob_positive].
std::vector<CoefficientRow> read_coefficient_quantiles(const std::string& path);

void write_allocation_plan(const std::string& path, const AllocationPlan& plan);

}  // namespace crowdmrp
