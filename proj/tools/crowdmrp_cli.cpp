// crowdmrp: command-line driver for the veracity / sharing pipeline.
//
// Exit codes: 0 success, 2 success with warnings, 1 error.

#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "crowdmrp/csv.hpp"
#include "crowdmrp/io.hpp"
#include "crowdmrp/pipeline.hpp"

namespace {

using namespace crowdmrp;

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::string> dir, raters, items, assessments, targets, frame, predictors, shares, population,
        coefficients, demographic_frame, party_shares;
    std::optional<std::string> method, sharing_method, map_scales, metrics, rules, sharing_metric, sharing_rule, poststrat;
    std::optional<int> chains, warmup, draws, bootstrap_rounds, synth_raters, synth_items, synth_users;
    std::optional<double> ipf_cap, ipf_tol, threshold, quantile, polarization;
    std::optional<long long> budget;
    std::optional<std::string> means;

    PipelineConfig apply() const {
        PipelineConfig c = config.empty() ? PipelineConfig{} : load_config(config);
        auto set = [](auto& dst, const auto& src) {
            if (src) dst = *src;
        };
        if (seed) c.seed = seed;
        set(c.threads, threads);
        set(c.dir, dir);
        set(c.raters, raters);
        set(c.items, items);
        set(c.assessments, assessments);
        set(c.targets, targets);
        set(c.frame, frame);
        set(c.predictors, predictors);
        set(c.shares, shares);
        set(c.population, population);
        set(c.coefficients, coefficients);
        set(c.demographic_frame, demographic_frame);
        set(c.party_shares, party_shares);
        set(c.method, method);
        set(c.sharing_method, sharing_method);
        if (map_scales) c.map_scales = parse_scale_estimate(*map_scales);
        set(c.chains, chains);
        set(c.warmup, warmup);
        set(c.draws, draws);
        set(c.bootstrap_rounds, bootstrap_rounds);
        set(c.rake.cap, ipf_cap);
        set(c.rake.tol, ipf_tol);
        set(c.threshold, threshold);
        set(c.quantile, quantile);
        set(c.synth_polarization, polarization);
        set(c.synth_raters, synth_raters);
        set(c.synth_items, synth_items);
        set(c.synth_users, synth_users);
        set(c.budget, budget);
        if (metrics) {
            c.metrics.clear();
            for (const auto& m : split_list(*metrics)) c.metrics.push_back(parse_metric(m));
        }
        if (rules) {
            c.rules.clear();
            for (const auto& r : split_list(*rules)) c.rules.push_back(parse_rule(r));
        }
        if (sharing_metric) c.sharing_metric = parse_metric(*sharing_metric);
        if (sharing_rule) c.sharing_rule = parse_rule(*sharing_rule);
        if (poststrat) {
            if (*poststrat == "drawwise") c.poststrat = PoststratMode::drawwise;
            else if (*poststrat == "plugin") c.poststrat = PoststratMode::plugin;
            else throw ValidationError("--poststrat must be drawwise or plugin");
        }
        if (means) {
            c.plan_means.clear();
            for (const auto& m : split_list(*means)) c.plan_means.push_back(std::stod(m));
        }
        if (c.threads < 1) throw ValidationError("--threads must be >= 1");
        return c;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Crowd veracity scoring, MrP post-stratification and fake-news sharing analysis"};
    app.require_subcommand(1);
    app.fallthrough();

    Overrides o;
    app.add_option("--config", o.config, "JSON config file");
    app.add_option("--seed", o.seed, "seed for every stochastic step");
    app.add_option("--threads", o.threads, "worker threads");
    app.add_option("--dir", o.dir, "working directory for stage files");
    app.add_option("--raters", o.raters);
    app.add_option("--items", o.items);
    app.add_option("--assessments", o.assessments);
    app.add_option("--targets", o.targets);
    app.add_option("--frame", o.frame);
    app.add_option("--predictors", o.predictors);
    app.add_option("--shares", o.shares);
    app.add_option("--population", o.population);
    app.add_option("--coefficients", o.coefficients, "published coefficient quantiles (name,q10,q50,q90)");
    app.add_option("--demographic-frame", o.demographic_frame);
    app.add_option("--party-shares", o.party_shares);
    app.add_option("--method", o.method, "ordinal inference: map | mcmc");
    app.add_option("--sharing-method", o.sharing_method, "sharing inference: map | mcmc");
    app.add_option("--map-scales", o.map_scales, "MAP scale estimate: marginal | joint");
    app.add_option("--chains", o.chains);
    app.add_option("--warmup", o.warmup);
    app.add_option("--draws", o.draws);
    app.add_option("--metrics", o.metrics, "comma-separated metric names");
    app.add_option("--rules", o.rules, "comma-separated: threshold_le2, lowest_decile");
    app.add_option("--sharing-metric", o.sharing_metric);
    app.add_option("--sharing-rule", o.sharing_rule);
    app.add_option("--poststrat", o.poststrat, "drawwise | plugin");
    app.add_option("--bootstrap-rounds", o.bootstrap_rounds);
    app.add_option("--ipf-cap", o.ipf_cap);
    app.add_option("--ipf-tol", o.ipf_tol);
    app.add_option("--threshold", o.threshold);
    app.add_option("--quantile", o.quantile);
    app.add_option("--budget", o.budget);
    app.add_option("--means", o.means, "comma-separated candidate mean reviews per item");
    app.add_option("--polarization", o.polarization, "synth: opposing context x party effect scale");
    app.add_option("--synth-raters", o.synth_raters);
    app.add_option("--synth-items", o.synth_items);
    app.add_option("--synth-users", o.synth_users);

    const std::map<std::string, std::pair<std::string, std::function<StageResult(const PipelineConfig&)>>> commands = {
        {"ingest", {"validate raters, classify partisanship, filter annotations", cmd_ingest}},
        {"rake", {"raking weights for the accepted raters", cmd_rake}},
        {"fit-ordinal", {"fit the ordinal veracity model", cmd_fit_ordinal}},
        {"score", {"per-item veracity scores", cmd_score}},
        {"dichotomize", {"fake-news labels from scores", cmd_dichotomize}},
        {"fit-sharing", {"fit the sharing model", cmd_fit_sharing}},
        {"poststratify", {"state-level sharing estimates", cmd_poststratify}},
        {"report", {"correlations, odds-change table and state table", cmd_report}},
        {"extend-frame", {"split a demographic frame by party shares", cmd_extend_frame}},
        {"plan", {"review allocation planning", cmd_plan}},
        {"synth", {"write a seeded synthetic fixture", cmd_synth}},
        {"run", {"ingest through report", cmd_run}},
    };
    for (const auto& [name, entry] : commands) app.add_subcommand(name, entry.first);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        const PipelineConfig cfg = o.apply();
        StageResult result;
        for (const auto& [name, entry] : commands)
            if (app.got_subcommand(name)) result = entry.second(cfg);
        for (const auto& p : result.outputs) std::cout << "wrote " << p << "\n";
        for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
        return result.warnings.empty() ? 0 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
