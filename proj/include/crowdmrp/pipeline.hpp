#pragma once
// Stage commands of the two-stage pipeline. Every stage reads and writes plain files
// inside one working directory; relative paths are resolved against it.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crowdmrp/ingest.hpp"
#include "crowdmrp/ordinal.hpp"
#include "crowdmrp/raking.hpp"
#include "crowdmrp/sharing.hpp"
#include "crowdmrp/veracity.hpp"

namespace crowdmrp {

struct PipelineConfig {
    std::string dir = ".";

    // Raw inputs.
    std::string raters = "raters.csv";
    std::string items = "items.csv";
    std::string assessments = "assessments.csv";
    std::string targets = "targets.json";
    std::string frame = "frame.csv";
    std::string predictors = "predictors.csv";
    std::string shares = "shares.csv";
    std::string demographic_frame = "frame_demographic.csv";  // input of extend-frame
    std::string party_shares = "party_shares.csv";
    std::string population;  // optional state,population table
    std::string coefficients;  // optional published quantiles for `report`

    std::optional<std::uint64_t> seed;
    int threads = 1;

    // Ingestion.
    PartisanshipConfig partisanship;
    int top_k = 30;
    double co_occurrence_cap = 0.60;

    RakeConfig rake;

    // Ordinal model.
    std::string method = "map";  // map | mcmc
    int chains = 4;
    int warmup = 500;
    int draws = 500;
    int max_depth = 10;
    double target_accept = 0.8;
    double min_scale = 1e-4;
    ScaleEstimate map_scales = ScaleEstimate::marginal;  // how MAP fits set each sigma
    ContextCombination combination = ContextCombination::sum;

    // Scoring.
    std::vector<Metric> metrics = all_metrics();
    int bootstrap_rounds = 1000;
    std::size_t prediction_draws = 200;

    // Dichotomisation.
    std::vector<DichotomyRule> rules = {DichotomyRule::threshold_le2, DichotomyRule::lowest_decile};
    double threshold = 2.0;
    double quantile = 0.10;

    // Sharing model.
    Metric sharing_metric = Metric::naive_sample;
    DichotomyRule sharing_rule = DichotomyRule::threshold_le2;
    std::string sharing_method = "map";
    PoststratMode poststrat = PoststratMode::drawwise;
    std::size_t poststrat_draws = 0;

    // Planning.
    long long budget = 40000;
    std::vector<double> plan_means = {3, 4, 5, 6, 7, 8, 9, 10, 12};
    int effective_threshold = 5;

    // Synthetic fixture.
    int synth_raters = 400;
    int synth_items = 300;
    double synth_assessments_per_item = 8.0;
    int synth_users = 1500;
    double synth_polarization = 0.0;

    std::string path(const std::string& name) const;
};

// Loads a JSON config; unknown keys are rejected.
PipelineConfig load_config(const std::string& path);

// Stage file names inside the working directory.
namespace stage_files {
inline constexpr const char* clean_raters = "clean_raters.csv";
inline constexpr const char* clean_items = "clean_items.csv";
inline constexpr const char* clean_assessments = "clean_assessments.csv";
inline constexpr const char* ingest_report = "ingest_report.json";
inline constexpr const char* weights = "weights.csv";
inline constexpr const char* rake_report = "rake_report.json";
inline constexpr const char* ordinal_fit = "ordinal_fit.json";
inline constexpr const char* scores = "scores.csv";
inline constexpr const char* labels = "labels.csv";
inline constexpr const char* sharing_fit = "sharing_fit.json";
inline constexpr const char* state_estimates = "state_estimates.csv";
inline constexpr const char* coefficient_report = "coefficient_report.csv";
inline constexpr const char* correlations = "correlations.json";
inline constexpr const char* state_table = "state_table.csv";
inline constexpr const char* plan = "plan.csv";
}  // namespace stage_files

class StageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct StageResult {
    std::vector<std::string> warnings;
    std::vector<std::string> outputs;
};

StageResult cmd_ingest(const PipelineConfig& cfg);
StageResult cmd_rake(const PipelineConfig& cfg);
StageResult cmd_fit_ordinal(const PipelineConfig& cfg);
StageResult cmd_score(const PipelineConfig& cfg);
StageResult cmd_dichotomize(const PipelineConfig& cfg);
StageResult cmd_fit_sharing(const PipelineConfig& cfg);
StageResult cmd_poststratify(const PipelineConfig& cfg);
StageResult cmd_report(const PipelineConfig& cfg);
StageResult cmd_extend_frame(const PipelineConfig& cfg);
StageResult cmd_plan(const PipelineConfig& cfg);
StageResult cmd_synth(const PipelineConfig& cfg);
// ingest, rake, fit-ordinal, score, dichotomize, fit-sharing, poststratify, report.
StageResult cmd_run(const PipelineConfig& cfg);

}  // namespace crowdmrp
