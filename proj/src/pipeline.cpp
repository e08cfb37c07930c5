#include "crowdmrp/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "crowdmrp/csv.hpp"
#include "crowdmrp/io.hpp"
#include "crowdmrp/synthetic.hpp"

namespace crowdmrp {

namespace fs = std::filesystem;
using nlohmann::json;

std::string PipelineConfig::path(const std::string& name) const {
    if (name.empty()) return name;
    const fs::path p(name);
    return p.is_absolute() ? name : (fs::path(dir) / p).string();
}

namespace {

template <class T>
void take(const json& j, const char* key, T& out, std::set<std::string>& used) {
    if (!j.contains(key)) return;
    used.insert(key);
    out = j.at(key).get<T>();
}

template <class T, class Parse>
void take_parsed(const json& j, const char* key, T& out, std::set<std::string>& used, Parse parse) {
    if (!j.contains(key)) return;
    used.insert(key);
    out = parse(j.at(key).get<std::string>());
}

}  // namespace

PipelineConfig load_config(const std::string& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw FormatError("'" + path + "': invalid JSON: " + e.what());
    }
    if (!j.is_object()) throw FormatError("'" + path + "': config must be a JSON object");
    PipelineConfig c;
    std::set<std::string> used;
    try {
        take(j, "dir", c.dir, used);
        take(j, "raters", c.raters, used);
        take(j, "items", c.items, used);
        take(j, "assessments", c.assessments, used);
        take(j, "targets", c.targets, used);
        take(j, "frame", c.frame, used);
        take(j, "predictors", c.predictors, used);
        take(j, "shares", c.shares, used);
        take(j, "demographic_frame", c.demographic_frame, used);
        take(j, "party_shares", c.party_shares, used);
        take(j, "population", c.population, used);
        take(j, "coefficients", c.coefficients, used);
        if (j.contains("seed")) {
            used.insert("seed");
            c.seed = j.at("seed").get<std::uint64_t>();
        }
        take(j, "threads", c.threads, used);
        take(j, "neutral_band", c.partisanship.neutral_band, used);
        take(j, "negative_is_democrat", c.partisanship.negative_is_democrat, used);
        take(j, "top_k", c.top_k, used);
        take(j, "co_occurrence_cap", c.co_occurrence_cap, used);
        take(j, "ipf_cap", c.rake.cap, used);
        take(j, "ipf_tol", c.rake.tol, used);
        take(j, "ipf_max_iter", c.rake.max_iter, used);
        take(j, "method", c.method, used);
        take(j, "chains", c.chains, used);
        take(j, "warmup", c.warmup, used);
        take(j, "draws", c.draws, used);
        take(j, "max_depth", c.max_depth, used);
        take(j, "target_accept", c.target_accept, used);
        take(j, "min_scale", c.min_scale, used);
        take_parsed(j, "map_scales", c.map_scales, used, parse_scale_estimate);
        take_parsed(j, "combination", c.combination, used, parse_context_combination);
        if (j.contains("metrics")) {
            used.insert("metrics");
            c.metrics.clear();
            for (const auto& m : j.at("metrics")) c.metrics.push_back(parse_metric(m.get<std::string>()));
        }
        take(j, "bootstrap_rounds", c.bootstrap_rounds, used);
        take(j, "prediction_draws", c.prediction_draws, used);
        if (j.contains("rules")) {
            used.insert("rules");
            c.rules.clear();
            for (const auto& r : j.at("rules")) c.rules.push_back(parse_rule(r.get<std::string>()));
        }
        take(j, "threshold", c.threshold, used);
        take(j, "quantile", c.quantile, used);
        take_parsed(j, "sharing_metric", c.sharing_metric, used, parse_metric);
        take_parsed(j, "sharing_rule", c.sharing_rule, used, parse_rule);
        take(j, "sharing_method", c.sharing_method, used);
        if (j.contains("poststrat")) {
            used.insert("poststrat");
            const auto s = j.at("poststrat").get<std::string>();
            if (s == "drawwise") c.poststrat = PoststratMode::drawwise;
            else if (s == "plugin") c.poststrat = PoststratMode::plugin;
            else throw ValidationError("poststrat must be drawwise or plugin");
        }
        take(j, "poststrat_draws", c.poststrat_draws, used);
        take(j, "budget", c.budget, used);
        take(j, "plan_means", c.plan_means, used);
        take(j, "effective_threshold", c.effective_threshold, used);
        take(j, "synth_raters", c.synth_raters, used);
        take(j, "synth_items", c.synth_items, used);
        take(j, "synth_assessments_per_item", c.synth_assessments_per_item, used);
        take(j, "synth_users", c.synth_users, used);
        take(j, "synth_polarization", c.synth_polarization, used);
    } catch (const json::exception& e) {
        throw FormatError("'" + path + "': " + e.what());
    }
    for (const auto& [key, value] : j.items())
        if (!used.count(key)) throw FormatError("'" + path + "': unknown config key '" + key + "'");
    return c;
}

namespace {

std::string require_stage(const PipelineConfig& cfg, const char* file, const char* stage) {
    const std::string p = cfg.path(file);
    if (!fs::exists(p)) throw StageError("missing " + p + "; run `" + stage + "` first");
    return p;
}

std::string require_input(const PipelineConfig& cfg, const std::string& name, const char* what) {
    const std::string p = cfg.path(name);
    if (p.empty() || !fs::exists(p)) throw StageError("missing " + std::string(what) + " '" + p + "'");
    return p;
}

std::uint64_t need_seed(const PipelineConfig& cfg, const char* stage) {
    if (!cfg.seed) throw StageError(std::string(stage) + " is stochastic and needs --seed");
    return *cfg.seed;
}

struct CleanData {
    std::vector<Rater> raters;
    std::vector<Item> items;
    std::vector<Assessment> assessments;
};

CleanData read_clean(const PipelineConfig& cfg) {
    CleanData d;
    d.raters = read_raters(require_stage(cfg, stage_files::clean_raters, "ingest"), cfg.partisanship);
    d.items = read_items(require_stage(cfg, stage_files::clean_items, "ingest"));
    d.assessments = read_assessments(require_stage(cfg, stage_files::clean_assessments, "ingest"));
    return d;
}

void add_output(StageResult& r, const std::string& p) { r.outputs.push_back(p); }

bool is_model_metric(Metric m) {
    return m == Metric::model_sample || m == Metric::model_balanced || m == Metric::model_population ||
           m == Metric::model_partisan_D || m == Metric::model_partisan_R;
}

MapConfig map_config(const PipelineConfig& cfg, std::uint64_t seed) {
    MapConfig m;
    m.min_scale = cfg.min_scale;
    m.scales = cfg.map_scales;
    m.seed = seed;
    return m;
}

SamplerConfig sampler_config(const PipelineConfig& cfg, std::uint64_t seed) {
    SamplerConfig s;
    s.chains = cfg.chains;
    s.warmup = cfg.warmup;
    s.draws = cfg.draws;
    s.seed = seed;
    s.max_depth = cfg.max_depth;
    s.target_accept = cfg.target_accept;
    s.threads = cfg.threads;
    return s;
}

void check_method(const std::string& m) {
    if (m != "map" && m != "mcmc") throw ValidationError("method must be map or mcmc, got '" + m + "'");
}

template <class Fit>
void fit_warnings(const Fit& fit, StageResult& r, const char* model) {
    if (fit.map && !fit.map->converged)
        r.warnings.push_back(std::string(model) + " MAP did not converge: " + fit.map->message);
    if (fit.method != "mcmc") return;
    int divergences = 0;
    for (const auto& c : fit.chain_stats) divergences += c.divergences;
    if (divergences > 0) r.warnings.push_back(std::string(model) + ": " + std::to_string(divergences) + " divergent transitions");
    const std::size_t total = fit.draws.size();
    std::size_t failing = 0;
    for (const auto& s : fit.summaries)
        if (!meets(s.diag, total)) ++failing;
    if (failing > 0)
        r.warnings.push_back(std::string(model) + ": " + std::to_string(failing) +
                             " parameters miss R-hat <= 1.05 or ESS/draws >= 0.1");
}

}  // namespace

StageResult cmd_ingest(const PipelineConfig& cfg) {
    StageResult r;
    auto raters = read_raters(require_input(cfg, cfg.raters, "raters file"), cfg.partisanship);
    auto items = read_items(require_input(cfg, cfg.items, "items file"));
    auto assessments = read_assessments(require_input(cfg, cfg.assessments, "assessments file"));

    std::unordered_set<std::string> rater_ids, item_ids;
    for (const auto& x : raters) rater_ids.insert(x.id);
    for (const auto& x : items)
        if (!item_ids.insert(x.id).second) throw ValidationError("duplicate item id '" + x.id + "'");
    for (const auto& a : assessments) {
        if (!rater_ids.count(a.rater_id)) throw ValidationError("assessment by unknown rater '" + a.rater_id + "'");
        if (!item_ids.count(a.item_id)) throw ValidationError("assessment of unknown item '" + a.item_id + "'");
    }

    RaterValidation v = validate_raters(raters, assessments);
    AnnotationFilterResult ann = filter_context_annotations(items, cfg.top_k, cfg.co_occurrence_cap);
    std::unordered_set<std::string> accepted;
    for (const auto& x : v.accepted) accepted.insert(x.id);
    std::vector<Assessment> kept;
    for (const auto& a : assessments)
        if (accepted.count(a.rater_id)) kept.push_back(a);

    write_raters(cfg.path(stage_files::clean_raters), v.accepted);
    write_items(cfg.path(stage_files::clean_items), ann.items);
    write_assessments(cfg.path(stage_files::clean_assessments), kept);
    write_ingest_report(cfg.path(stage_files::ingest_report), v, ann);
    for (const char* f : {stage_files::clean_raters, stage_files::clean_items, stage_files::clean_assessments,
                          stage_files::ingest_report})
        add_output(r, cfg.path(f));
    return r;
}

StageResult cmd_rake(const PipelineConfig& cfg) {
    StageResult r;
    const auto raters = read_raters(require_stage(cfg, stage_files::clean_raters, "ingest"), cfg.partisanship);
    const auto targets = read_targets(require_input(cfg, cfg.targets, "targets file"));
    const RakeWeights w = ipf_weights(raters, targets, cfg.rake);
    if (!w.converged)
        r.warnings.push_back("raking did not converge (max margin error " + format_double(w.max_margin_error, 3) + ")");
    if (w.cap_binding) r.warnings.push_back("raking weight cap is binding");
    write_weights(cfg.path(stage_files::weights), w);
    write_rake_report(cfg.path(stage_files::rake_report), w);
    add_output(r, cfg.path(stage_files::weights));
    add_output(r, cfg.path(stage_files::rake_report));
    return r;
}

StageResult cmd_fit_ordinal(const PipelineConfig& cfg) {
    StageResult r;
    check_method(cfg.method);
    const std::uint64_t seed = need_seed(cfg, "fit-ordinal");
    const CleanData d = read_clean(cfg);
    const OrdinalDesign design = build_ordinal_design(d.raters, d.items, d.assessments, cfg.combination);
    OrdinalFit fit = cfg.method == "map" ? fit_ordinal_map(design, map_config(cfg, seed))
                                         : sample_ordinal_posterior(design, sampler_config(cfg, seed));
    fit_warnings(fit, r, "ordinal model");
    write_ordinal_fit(cfg.path(stage_files::ordinal_fit), fit);
    add_output(r, cfg.path(stage_files::ordinal_fit));
    return r;
}

StageResult cmd_score(const PipelineConfig& cfg) {
    StageResult r;
    if (cfg.metrics.empty()) throw ValidationError("no metrics selected");
    const CleanData d = read_clean(cfg);
    const auto has = [&](Metric m) { return std::find(cfg.metrics.begin(), cfg.metrics.end(), m) != cfg.metrics.end(); };
    const bool any_model = std::any_of(cfg.metrics.begin(), cfg.metrics.end(), is_model_metric);
    const bool need_frame = any_model && !(cfg.metrics.size() == 1 && has(Metric::model_sample));

    ScoringConfig sc;
    sc.metrics = cfg.metrics;
    sc.balanced.rounds = cfg.bootstrap_rounds;
    sc.balanced.seed = has(Metric::naive_balanced) ? need_seed(cfg, "score") : 0;
    sc.prediction_draws = cfg.prediction_draws;
    sc.threads = cfg.threads;

    std::map<std::string, double> weights;
    std::optional<OrdinalFit> fit;
    std::optional<StratificationFrame> frame;
    ScoringInputs in{&d.raters, &d.items, &d.assessments, nullptr, nullptr, nullptr};
    if (has(Metric::naive_population)) {
        weights = read_weights(require_stage(cfg, stage_files::weights, "rake"));
        in.rake_weights = &weights;
    }
    if (any_model) {
        fit = read_ordinal_fit(require_stage(cfg, stage_files::ordinal_fit, "fit-ordinal"));
        in.fit = &*fit;
    }
    if (need_frame) {
        frame = read_frame(require_input(cfg, cfg.frame, "frame file"));
        frame->validate();
        in.frame = &*frame;
    }
    const auto scores = score_items(in, sc);
    std::map<Metric, int> missing;
    for (const auto& s : scores)
        if (!s.value) ++missing[s.metric];
    for (const auto& [m, n] : missing)
        r.warnings.push_back(std::to_string(n) + " items have no " + std::string(to_string(m)) + " score");
    write_scores(cfg.path(stage_files::scores), scores);
    add_output(r, cfg.path(stage_files::scores));
    return r;
}

StageResult cmd_dichotomize(const PipelineConfig& cfg) {
    StageResult r;
    const auto scores = read_scores(require_stage(cfg, stage_files::scores, "score"));
    std::vector<Metric> order;
    std::map<Metric, std::vector<VeracityScore>> by_metric;
    for (const auto& s : scores) {
        if (!by_metric.count(s.metric)) order.push_back(s.metric);
        by_metric[s.metric].push_back(s);
    }
    std::vector<FakeLabel> labels;
    for (DichotomyRule rule : cfg.rules) {
        for (Metric m : order) {
            const auto& v = by_metric[m];
            if (rule == DichotomyRule::threshold_le2) {
                for (const auto& s : v) labels.push_back(dichotomize_threshold(s, cfg.threshold));
                continue;
            }
            try {
                const auto l = dichotomize_percentile(v, cfg.quantile);
                labels.insert(labels.end(), l.begin(), l.end());
            } catch (const ValidationError& e) {
                r.warnings.push_back(std::string(to_string(m)) + ": lowest_decile skipped: " + e.what());
            }
        }
    }
    std::size_t missing = 0;
    for (const auto& l : labels)
        if (!l.label) ++missing;
    if (missing > 0) r.warnings.push_back(std::to_string(missing) + " labels are missing (no score)");
    write_labels(cfg.path(stage_files::labels), labels);
    add_output(r, cfg.path(stage_files::labels));
    return r;
}

StageResult cmd_fit_sharing(const PipelineConfig& cfg) {
    StageResult r;
    check_method(cfg.sharing_method);
    const std::uint64_t seed = need_seed(cfg, "fit-sharing");
    const auto labels = read_labels(require_stage(cfg, stage_files::labels, "dichotomize"));
    const auto rows = read_shares(require_input(cfg, cfg.shares, "shares file"));
    const auto preds = StatePredictors::standardize(read_predictors(require_input(cfg, cfg.predictors, "predictors file")));
    const auto obs = observations_from_shares(rows, labels, cfg.sharing_metric, cfg.sharing_rule, r.warnings);
    const SharingDesign design = build_sharing_design(obs, preds);
    r.warnings.insert(r.warnings.end(), design.warnings.begin(), design.warnings.end());
    SharingFit fit = cfg.sharing_method == "map" ? fit_sharing_map(design, map_config(cfg, seed))
                                                 : sample_sharing_posterior(design, sampler_config(cfg, seed));
    fit_warnings(fit, r, "sharing model");
    write_sharing_fit(cfg.path(stage_files::sharing_fit), fit);
    add_output(r, cfg.path(stage_files::sharing_fit));
    return r;
}

namespace {

std::vector<StateEstimate> state_estimates(const PipelineConfig& cfg, const SharingFit& fit, StageResult& r) {
    StratificationFrame frame = read_frame(require_input(cfg, cfg.frame, "frame file"));
    PoststratConfig pc;
    pc.mode = cfg.poststrat;
    pc.max_draws = cfg.poststrat_draws;
    pc.threads = cfg.threads;
    if (!cfg.population.empty()) pc.population = read_population(require_input(cfg, cfg.population, "population file"));
    auto est = poststratify_states(fit, frame, pc);
    std::size_t no_count = 0;
    for (const auto& e : est)
        if (!e.expected_count) ++no_count;
    if (no_count > 0) r.warnings.push_back(std::to_string(no_count) + " states have no population total");
    return est;
}

}  // namespace

StageResult cmd_poststratify(const PipelineConfig& cfg) {
    StageResult r;
    const SharingFit fit = read_sharing_fit(require_stage(cfg, stage_files::sharing_fit, "fit-sharing"));
    write_state_estimates(cfg.path(stage_files::state_estimates), state_estimates(cfg, fit, r));
    add_output(r, cfg.path(stage_files::state_estimates));
    return r;
}

StageResult cmd_report(const PipelineConfig& cfg) {
    StageResult r;
    const std::string scores_path = cfg.path(stage_files::scores);
    if (fs::exists(scores_path)) {
        const auto scores = read_scores(scores_path);
        std::vector<Metric> metrics;
        for (Metric m : all_metrics())
            if (std::any_of(scores.begin(), scores.end(), [&](const auto& s) { return s.metric == m; }))
                metrics.push_back(m);
        const auto matrix = metric_correlation_matrix(scores, metrics);
        for (std::size_t a = 0; a < metrics.size(); ++a)
            for (std::size_t b = a + 1; b < metrics.size(); ++b)
                if (!matrix.cells[a][b].r)
                    r.warnings.push_back("correlation " + std::string(to_string(metrics[a])) + " x " +
                                         std::string(to_string(metrics[b])) + " undefined");
        write_correlations(cfg.path(stage_files::correlations), matrix);
        add_output(r, cfg.path(stage_files::correlations));
    }

    const std::string fit_path = cfg.path(stage_files::sharing_fit);
    std::optional<SharingFit> fit;
    if (fs::exists(fit_path)) fit = read_sharing_fit(fit_path);
    if (!cfg.coefficients.empty()) {
        write_coefficient_report(cfg.path(stage_files::coefficient_report),
                                 read_coefficient_quantiles(require_input(cfg, cfg.coefficients, "coefficient file")));
        add_output(r, cfg.path(stage_files::coefficient_report));
    } else if (fit) {
        write_coefficient_report(cfg.path(stage_files::coefficient_report), coefficient_report(*fit));
        add_output(r, cfg.path(stage_files::coefficient_report));
    }

    if (fit && fs::exists(cfg.path(cfg.frame))) {
        const auto est = state_estimates(cfg, *fit, r);
        std::ostringstream ss;
        CsvWriter w(ss);
        w.row({"state", "theta", "q10", "q50", "q90", "expected_count"});
        for (const auto& e : est)
            w.row({e.state, format_double(e.theta), format_double(e.q10.value_or(e.theta)),
                   format_double(e.q50.value_or(e.theta)), format_double(e.q90.value_or(e.theta)),
                   e.expected_count ? std::to_string(*e.expected_count) : std::string()});
        write_text_file(cfg.path(stage_files::state_table), ss.str());
        add_output(r, cfg.path(stage_files::state_table));
    }
    if (r.outputs.empty()) throw StageError("nothing to report; run `score` or `fit-sharing`, or pass --coefficients");
    return r;
}

StageResult cmd_extend_frame(const PipelineConfig& cfg) {
    StageResult r;
    StratificationFrame base = read_frame(require_input(cfg, cfg.demographic_frame, "demographic frame"));
    const auto shares = read_party_shares(require_input(cfg, cfg.party_shares, "party shares file"));
    const StratificationFrame extended = extend_frame_with_party(base, shares);
    const double before = base.total_weight(), after = extended.total_weight();
    if (std::abs(before - after) > 1e-9 * std::max(1.0, before))
        r.warnings.push_back("frame weight changed from " + format_double(before) + " to " + format_double(after));
    write_frame(cfg.path(cfg.frame), extended);
    add_output(r, cfg.path(cfg.frame));
    return r;
}

StageResult cmd_plan(const PipelineConfig& cfg) {
    StageResult r;
    const AllocationPlan plan = plan_review_allocation(cfg.budget, cfg.plan_means, cfg.effective_threshold);
    write_allocation_plan(cfg.path(stage_files::plan), plan);
    add_output(r, cfg.path(stage_files::plan));
    return r;
}

StageResult cmd_synth(const PipelineConfig& cfg) {
    StageResult r;
    const std::uint64_t seed = need_seed(cfg, "synth");
    fs::create_directories(cfg.dir);

    SyntheticOrdinalConfig oc;
    oc.raters = cfg.synth_raters;
    oc.items = cfg.synth_items;
    oc.assessments_per_item = cfg.synth_assessments_per_item;
    oc.truth.polarization = cfg.synth_polarization;
    oc.seed = seed;
    SyntheticOrdinalData od = generate_ordinal_dataset(oc);
    // A few attention failures and shared ZIP codes so that ingestion has work to do.
    for (std::size_t i = 0; i < od.raters.size(); ++i) {
        if (i % 37 == 36) od.raters[i].attention_failures = 2;
        else if (i % 53 == 52) od.raters[i].zip = od.raters[i - 1].zip;
    }

    SyntheticSharingConfig sc;
    sc.users = cfg.synth_users;
    sc.item_pool = cfg.synth_items;
    sc.seed = seed;
    const SyntheticSharingData sd = generate_sharing_dataset(sc);

    write_raters(cfg.path(cfg.raters), od.raters);
    write_items(cfg.path(cfg.items), od.items);
    write_assessments(cfg.path(cfg.assessments), od.assessments);
    write_targets(cfg.path(cfg.targets), synthetic_margin_targets(oc.mix));
    write_predictors(cfg.path(cfg.predictors), sd.predictors);
    write_shares(cfg.path(cfg.shares), share_rows(sd.observations));
    write_frame(cfg.path(cfg.demographic_frame), synthetic_frame(oc.mix, seed, false));
    write_party_shares(cfg.path(cfg.party_shares), synthetic_party_shares(oc.mix, seed));
    for (const auto* p : {&cfg.raters, &cfg.items, &cfg.assessments, &cfg.targets, &cfg.predictors, &cfg.shares,
                          &cfg.demographic_frame, &cfg.party_shares})
        add_output(r, cfg.path(*p));
    const StageResult ext = cmd_extend_frame(cfg);
    r.outputs.insert(r.outputs.end(), ext.outputs.begin(), ext.outputs.end());
    r.warnings.insert(r.warnings.end(), ext.warnings.begin(), ext.warnings.end());
    return r;
}

StageResult cmd_run(const PipelineConfig& cfg) {
    StageResult all;
    for (auto stage : {cmd_ingest, cmd_rake, cmd_fit_ordinal, cmd_score, cmd_dichotomize, cmd_fit_sharing,
                       cmd_poststratify, cmd_report}) {
        StageResult s = stage(cfg);
        all.warnings.insert(all.warnings.end(), s.warnings.begin(), s.warnings.end());
        all.outputs.insert(all.outputs.end(), s.outputs.begin(), s.outputs.end());
    }
    return all;
}

}  // namespace crowdmrp
