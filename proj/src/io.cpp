#include "crowdmrp/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "crowdmrp/csv.hpp"

namespace crowdmrp {

using nlohmann::json;

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw FormatError("failed writing '" + path + "'");
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    if (s.empty()) return out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::string join(const std::vector<std::string>& v, char sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out.push_back(sep);
        out += v[i];
    }
    return out;
}

template <class Fn>
auto checked(const CsvTable& t, const CsvRow& row, std::string_view col, Fn&& fn) {
    try {
        return fn(t.get(row, col));
    } catch (const ValidationError& e) {
        t.fail(row, col, e.what());
    }
}

Gender gender_field(const CsvTable& t, const CsvRow& row) {
    return checked(t, row, "gender", [](const std::string& s) { return parse_gender(s); });
}

Party party_field(const CsvTable& t, const CsvRow& row) {
    return checked(t, row, "party", [](const std::string& s) { return parse_party(s); });
}

std::string state_field(const CsvTable& t, const CsvRow& row) {
    const std::string& s = t.get(row, "state");
    if (!is_state_code(s)) t.fail(row, "state", "unknown state code '" + s + "'");
    return s;
}

std::string nonempty(const CsvTable& t, const CsvRow& row, std::string_view col) {
    const std::string& s = t.get(row, col);
    if (s.empty()) t.fail(row, col, "value must not be empty");
    return s;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream ss;
    CsvWriter w(ss);
    w.row(header);
    for (const auto& r : rows) w.row(r);
    write_text_file(path, ss.str());
}

json read_json(const std::string& path) {
    try {
        return json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw FormatError("'" + path + "': invalid JSON: " + e.what());
    }
}

void write_json(const std::string& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

json stamp(const std::string& format) { return json{{"format", format}, {"version", kFormatVersion}}; }

void check_stamp(const json& j, const std::string& path, const std::string& format) {
    if (!j.is_object() || !j.contains("format") || j.at("format") != format)
        throw FormatError("'" + path + "' is not a " + format + " file");
    if (!j.contains("version") || j.at("version") != kFormatVersion)
        throw FormatError("'" + path + "': unsupported " + format + " version (expected " +
                          std::to_string(kFormatVersion) + ")");
}

std::string opt_double(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

json summary_json(const Summary& s) {
    return {{"name", s.name},   {"mean", s.mean}, {"sd", s.sd},
            {"q10", s.q10},     {"q50", s.q50},   {"q90", s.q90},
            {"prob_positive", s.prob_positive},
            {"rhat", s.diag.rhat}, {"split_rhat", s.diag.split_rhat}, {"ess", s.diag.ess},
            {"degenerate", s.diag.degenerate}};
}

double json_number(const json& j) {
    // Non-finite diagnostics are stored as null.
    return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

Summary summary_from(const json& j) {
    Summary s;
    s.name = j.at("name").get<std::string>();
    s.mean = j.at("mean").get<double>();
    s.sd = j.at("sd").get<double>();
    s.q10 = j.at("q10").get<double>();
    s.q50 = j.at("q50").get<double>();
    s.q90 = j.at("q90").get<double>();
    s.prob_positive = j.at("prob_positive").get<double>();
    s.diag.rhat = json_number(j.at("rhat"));
    s.diag.split_rhat = json_number(j.at("split_rhat"));
    s.diag.ess = json_number(j.at("ess"));
    s.diag.degenerate = j.at("degenerate").get<bool>();
    return s;
}

json chain_json(const ChainResult& c) {
    return {{"chain", c.chain},
            {"step_size", c.step_size},
            {"mean_accept", c.mean_accept},
            {"divergences", c.divergences},
            {"max_depth_hits", c.max_depth_hits},
            {"inv_metric", c.inv_metric}};
}

ChainResult chain_from(const json& j) {
    ChainResult c;
    c.chain = j.at("chain").get<int>();
    c.step_size = j.at("step_size").get<double>();
    c.mean_accept = j.at("mean_accept").get<double>();
    c.divergences = j.at("divergences").get<int>();
    c.max_depth_hits = j.at("max_depth_hits").get<int>();
    c.inv_metric = j.at("inv_metric").get<std::vector<double>>();
    return c;
}

json map_json(const MapReport& m) {
    return {{"converged", m.converged},   {"grad_max_norm", m.grad_max_norm},
            {"iterations", m.iterations}, {"message", m.message},
            {"trace", m.trace},           {"scales_at_floor", m.scales_at_floor}};
}

MapReport map_from(const json& j) {
    MapReport m;
    m.converged = j.at("converged").get<bool>();
    m.grad_max_norm = j.at("grad_max_norm").get<double>();
    m.iterations = j.at("iterations").get<int>();
    m.message = j.at("message").get<std::string>();
    m.trace = j.at("trace").get<std::vector<double>>();
    m.scales_at_floor = j.at("scales_at_floor").get<std::vector<std::string>>();
    return m;
}

template <class Fit>
void put_common(json& j, const Fit& fit) {
    j["method"] = fit.method;
    j["draw_chain"] = fit.draw_chain;
    json sums = json::array();
    for (const auto& s : fit.summaries) sums.push_back(summary_json(s));
    j["summaries"] = sums;
    j["map"] = fit.map ? map_json(*fit.map) : json(nullptr);
    json chains = json::array();
    for (const auto& c : fit.chain_stats) chains.push_back(chain_json(c));
    j["chains"] = chains;
}

template <class Fit>
void get_common(const json& j, Fit& fit) {
    fit.method = j.at("method").get<std::string>();
    fit.draw_chain = j.at("draw_chain").get<std::vector<int>>();
    for (const auto& s : j.at("summaries")) fit.summaries.push_back(summary_from(s));
    if (!j.at("map").is_null()) fit.map = map_from(j.at("map"));
    for (const auto& c : j.at("chains")) fit.chain_stats.push_back(chain_from(c));
}

constexpr const char* kOrdinalFormat = "crowdmrp.ordinal_fit";
constexpr const char* kSharingFormat = "crowdmrp.sharing_fit";

}  // namespace

std::vector<Rater> read_raters(const std::string& path, const PartisanshipConfig& cfg) {
    const auto t = CsvTable::read(path, {"id", "gender", "age_band", "state"},
                                  {"party", "party_score", "zip", "attention_failures"});
    std::vector<Rater> out;
    for (const auto& row : t.rows()) {
        Rater r;
        r.id = nonempty(t, row, "id");
        r.gender = gender_field(t, row);
        r.age_band = nonempty(t, row, "age_band");
        r.state = state_field(t, row);
        if (!t.get(row, "party_score").empty()) {
            r.party_score = t.get_double(row, "party_score");
            if (!(*r.party_score >= -1.0 && *r.party_score <= 1.0))
                t.fail(row, "party_score", "score must lie in [-1, 1]");
        }
        r.party = t.get(row, "party").empty() ? classify_partisanship(r.party_score, cfg) : party_field(t, row);
        if (!t.get(row, "zip").empty()) r.zip = t.get(row, "zip");
        if (!t.get(row, "attention_failures").empty()) {
            const long long a = t.get_int(row, "attention_failures");
            if (a < 0 || a > kAttentionChecks) t.fail(row, "attention_failures", "count must lie in 0..3");
            r.attention_failures = static_cast<int>(a);
        }
        out.push_back(std::move(r));
    }
    return out;
}

void write_raters(const std::string& path, const std::vector<Rater>& raters) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : raters)
        rows.push_back({r.id, std::string(to_string(r.gender)), r.age_band, r.state, std::string(to_string(r.party)),
                        opt_double(r.party_score), r.zip.value_or(""), std::to_string(r.attention_failures)});
    write_csv(path, {"id", "gender", "age_band", "state", "party", "party_score", "zip", "attention_failures"}, rows);
}

std::vector<Item> read_items(const std::string& path) {
    const auto t = CsvTable::read(path, {"id"}, {"annotations", "text"});
    std::vector<Item> out;
    for (const auto& row : t.rows()) {
        Item it;
        it.id = nonempty(t, row, "id");
        for (auto& a : split(t.get(row, "annotations"), '|')) {
            if (a.empty()) t.fail(row, "annotations", "empty annotation label");
            it.annotations.push_back(std::move(a));
        }
        it.text = t.get(row, "text");
        out.push_back(std::move(it));
    }
    return out;
}

void write_items(const std::string& path, const std::vector<Item>& items) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& it : items) rows.push_back({it.id, join(it.annotations, '|'), it.text});
    write_csv(path, {"id", "annotations", "text"}, rows);
}

std::vector<Assessment> read_assessments(const std::string& path) {
    const auto t = CsvTable::read(path, {"rater_id", "item_id", "rating"});
    std::vector<Assessment> out;
    for (const auto& row : t.rows()) {
        Assessment a;
        a.rater_id = nonempty(t, row, "rater_id");
        a.item_id = nonempty(t, row, "item_id");
        const long long y = t.get_int(row, "rating");
        if (y < 1 || y > kCategories) t.fail(row, "rating", "rating must be an integer in 1..4");
        a.rating = static_cast<int>(y);
        out.push_back(std::move(a));
    }
    return out;
}

void write_assessments(const std::string& path, const std::vector<Assessment>& assessments) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& a : assessments) rows.push_back({a.rater_id, a.item_id, std::to_string(a.rating)});
    write_csv(path, {"rater_id", "item_id", "rating"}, rows);
}

MarginTargets read_targets(const std::string& path) {
    // Ordered parsing keeps the declaration order, which is the raking cycle order.
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(read_text_file(path));
    } catch (const nlohmann::ordered_json::exception& e) {
        throw FormatError("'" + path + "': invalid JSON: " + e.what());
    }
    if (!j.is_object()) throw FormatError("'" + path + "': targets must map factor -> {level: share}");
    MarginTargets m;
    for (const auto& [factor, levels] : j.items()) {
        if (!levels.is_object()) throw FormatError("'" + path + "': factor '" + factor + "' must be an object");
        std::vector<std::pair<std::string, double>> lv;
        for (const auto& [level, share] : levels.items()) {
            if (!share.is_number()) throw FormatError("'" + path + "': share of " + factor + "=" + level + " must be a number");
            lv.emplace_back(level, share.get<double>());
        }
        m.factors.emplace_back(factor, std::move(lv));
    }
    m.validate();
    return m;
}

void write_targets(const std::string& path, const MarginTargets& targets) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [name, levels] : targets.factors) {
        nlohmann::ordered_json lv = nlohmann::ordered_json::object();
        for (const auto& [l, share] : levels) lv[l] = share;
        j[name] = lv;
    }
    write_text_file(path, j.dump(2) + "\n");
}

void write_weights(const std::string& path, const RakeWeights& w) {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < w.rater_ids.size(); ++i) rows.push_back({w.rater_ids[i], format_double(w.weights[i])});
    write_csv(path, {"rater_id", "weight"}, rows);
}

std::map<std::string, double> read_weights(const std::string& path) {
    const auto t = CsvTable::read(path, {"rater_id", "weight"});
    std::map<std::string, double> out;
    for (const auto& row : t.rows()) {
        const double w = t.get_double(row, "weight");
        if (!(w > 0.0)) t.fail(row, "weight", "weight must be positive");
        if (!out.emplace(nonempty(t, row, "rater_id"), w).second) t.fail(row, "rater_id", "duplicate rater id");
    }
    return out;
}

void write_rake_report(const std::string& path, const RakeWeights& w) {
    json j = stamp("crowdmrp.rake_report");
    j["iterations"] = w.iterations;
    j["max_margin_error"] = w.max_margin_error;
    j["converged"] = w.converged;
    j["cap_binding"] = w.cap_binding;
    j["raters"] = w.rater_ids.size();
    write_json(path, j);
}

void write_ingest_report(const std::string& path, const RaterValidation& v,
                         const AnnotationFilterResult& annotations) {
    json j = stamp("crowdmrp.ingest_report");
    j["accepted"] = v.accepted.size();
    json rej = json::array();
    for (const auto& r : v.rejected) rej.push_back({{"rater_id", r.rater_id}, {"reason", to_string(r.reason)}});
    j["rejected"] = rej;
    j["annotations_kept"] = annotations.kept;
    json dropped = json::array();
    for (const auto& d : annotations.dropped) dropped.push_back({{"annotation", d.annotation}, {"reason", d.reason}});
    j["annotations_dropped"] = dropped;
    write_json(path, j);
}

void write_ordinal_fit(const std::string& path, const OrdinalFit& fit) {
    json j = stamp(kOrdinalFormat);
    json levels = json::object();
    for (std::size_t f = 0; f < kOrdinalFactors; ++f)
        levels[std::string(factor_name(static_cast<OrdinalFactor>(f)))] = fit.structure.levels[f];
    j["structure"] = {{"levels", levels},
                      {"item_contexts", fit.structure.item_contexts},
                      {"combination", to_string(fit.structure.combination)}};
    j["priors"] = {{"threshold_sd", fit.priors.threshold_sd}, {"scale_sd", fit.priors.scale_sd}};
    json draws = json::array();
    for (const auto& d : fit.draws) {
        json effects = json::object();
        json scales = json::object();
        for (std::size_t f = 0; f < kOrdinalFactors; ++f) {
            const std::string name(factor_name(static_cast<OrdinalFactor>(f)));
            effects[name] = d.effects[f];
            scales[name] = d.scales[f];
        }
        draws.push_back({{"alpha", d.alpha}, {"scales", scales}, {"effects", effects}});
    }
    j["draws"] = draws;
    put_common(j, fit);
    write_json(path, j);
}

OrdinalFit read_ordinal_fit(const std::string& path) {
    const json j = read_json(path);
    check_stamp(j, path, kOrdinalFormat);
    OrdinalFit fit;
    try {
        const auto& s = j.at("structure");
        for (std::size_t f = 0; f < kOrdinalFactors; ++f)
            fit.structure.levels[f] =
                s.at("levels").at(std::string(factor_name(static_cast<OrdinalFactor>(f)))).get<std::vector<std::string>>();
        fit.structure.item_contexts = s.at("item_contexts").get<std::vector<std::vector<int>>>();
        fit.structure.combination = parse_context_combination(s.at("combination").get<std::string>());
        fit.priors.threshold_sd = j.at("priors").at("threshold_sd").get<double>();
        fit.priors.scale_sd = j.at("priors").at("scale_sd").get<double>();
        for (const auto& d : j.at("draws")) {
            OrdinalParams p;
            const auto a = d.at("alpha").get<std::vector<double>>();
            if (a.size() != kThresholds) throw FormatError("'" + path + "': draw needs 3 thresholds");
            std::copy(a.begin(), a.end(), p.alpha.begin());
            for (std::size_t f = 0; f < kOrdinalFactors; ++f) {
                const std::string name(factor_name(static_cast<OrdinalFactor>(f)));
                p.effects[f] = d.at("effects").at(name).get<std::vector<double>>();
                p.scales[f] = d.at("scales").at(name).get<double>();
                if (p.effects[f].size() != fit.structure.levels[f].size())
                    throw FormatError("'" + path + "': effect size mismatch for " + name);
            }
            fit.draws.push_back(std::move(p));
        }
        get_common(j, fit);
    } catch (const json::exception& e) {
        throw FormatError("'" + path + "': malformed ordinal fit: " + e.what());
    }
    if (fit.structure.item_contexts.size() != fit.structure.levels[0].size())
        throw FormatError("'" + path + "': item_contexts does not match the tweet levels");
    return fit;
}

void write_sharing_fit(const std::string& path, const SharingFit& fit) {
    json j = stamp(kSharingFormat);
    json levels = json::object();
    for (std::size_t f = 0; f < kSharingFactors; ++f)
        levels[std::string(factor_name(static_cast<SharingFactor>(f)))] = fit.structure.levels[f];
    j["structure"] = {{"levels", levels}};
    json preds = json::array();
    for (std::size_t s = 0; s < fit.predictors.states.size(); ++s)
        preds.push_back({{"state", fit.predictors.states[s]}, {"raw", fit.predictors.raw[s]}});
    j["predictors"] = preds;
    j["priors"] = {{"intercept_sd", fit.priors.intercept_sd},
                   {"gamma_sd", fit.priors.gamma_sd},
                   {"scale_sd", fit.priors.scale_sd}};
    json draws = json::array();
    for (const auto& d : fit.draws) {
        json effects = json::object();
        json scales = json::object();
        for (std::size_t f = 0; f < kSharingFactors; ++f) {
            const std::string name(factor_name(static_cast<SharingFactor>(f)));
            effects[name] = d.effects[f];
            scales[name] = d.scales[f];
        }
        draws.push_back({{"alpha", d.alpha}, {"gamma", d.gamma}, {"scales", scales}, {"effects", effects}});
    }
    j["draws"] = draws;
    put_common(j, fit);
    write_json(path, j);
}

SharingFit read_sharing_fit(const std::string& path) {
    const json j = read_json(path);
    check_stamp(j, path, kSharingFormat);
    SharingFit fit;
    try {
        for (std::size_t f = 0; f < kSharingFactors; ++f)
            fit.structure.levels[f] = j.at("structure")
                                          .at("levels")
                                          .at(std::string(factor_name(static_cast<SharingFactor>(f))))
                                          .get<std::vector<std::string>>();
        std::vector<StatePredictorRow> rows;
        for (const auto& p : j.at("predictors")) {
            const auto raw = p.at("raw").get<std::vector<double>>();
            if (raw.size() != kStatePredictors) throw FormatError("'" + path + "': predictor row needs 3 values");
            rows.push_back({p.at("state").get<std::string>(), raw[0], raw[1], raw[2]});
        }
        fit.predictors = StatePredictors::standardize(std::move(rows));
        fit.priors.intercept_sd = j.at("priors").at("intercept_sd").get<double>();
        fit.priors.gamma_sd = j.at("priors").at("gamma_sd").get<double>();
        fit.priors.scale_sd = j.at("priors").at("scale_sd").get<double>();
        for (const auto& d : j.at("draws")) {
            SharingParams p;
            p.alpha = d.at("alpha").get<double>();
            const auto g = d.at("gamma").get<std::vector<double>>();
            if (g.size() != kStatePredictors) throw FormatError("'" + path + "': draw needs 3 gamma values");
            std::copy(g.begin(), g.end(), p.gamma.begin());
            for (std::size_t f = 0; f < kSharingFactors; ++f) {
                const std::string name(factor_name(static_cast<SharingFactor>(f)));
                p.effects[f] = d.at("effects").at(name).get<std::vector<double>>();
                p.scales[f] = d.at("scales").at(name).get<double>();
                if (p.effects[f].size() != fit.structure.levels[f].size())
                    throw FormatError("'" + path + "': effect size mismatch for " + name);
            }
            fit.draws.push_back(std::move(p));
        }
        get_common(j, fit);
    } catch (const json::exception& e) {
        throw FormatError("'" + path + "': malformed sharing fit: " + e.what());
    }
    return fit;
}

void write_scores(const std::string& path, const std::vector<VeracityScore>& scores) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& s : scores)
        rows.push_back({s.item_id, std::string(to_string(s.metric)), opt_double(s.value), std::to_string(s.n_used),
                        join(s.flags, '|')});
    write_csv(path, {"item_id", "metric", "value", "n_used", "flags"}, rows);
}

std::vector<VeracityScore> read_scores(const std::string& path) {
    const auto t = CsvTable::read(path, {"item_id", "metric", "value", "n_used", "flags"});
    std::vector<VeracityScore> out;
    for (const auto& row : t.rows()) {
        VeracityScore s;
        s.item_id = nonempty(t, row, "item_id");
        s.metric = checked(t, row, "metric", [](const std::string& m) { return parse_metric(m); });
        if (!t.get(row, "value").empty()) {
            s.value = t.get_double(row, "value");
            if (!(*s.value >= 1.0 && *s.value <= 4.0)) t.fail(row, "value", "score must lie in [1, 4]");
        }
        s.n_used = static_cast<int>(t.get_int(row, "n_used"));
        s.flags = split(t.get(row, "flags"), '|');
        out.push_back(std::move(s));
    }
    return out;
}

void write_labels(const std::string& path, const std::vector<FakeLabel>& labels) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& l : labels)
        rows.push_back({l.item_id, std::string(to_string(l.metric)), std::string(to_string(l.rule)),
                        l.label ? std::to_string(*l.label) : std::string()});
    write_csv(path, {"item_id", "metric", "rule", "label"}, rows);
}

std::vector<FakeLabel> read_labels(const std::string& path) {
    const auto t = CsvTable::read(path, {"item_id", "metric", "rule", "label"});
    std::vector<FakeLabel> out;
    for (const auto& row : t.rows()) {
        FakeLabel l;
        l.item_id = nonempty(t, row, "item_id");
        l.metric = checked(t, row, "metric", [](const std::string& m) { return parse_metric(m); });
        l.rule = checked(t, row, "rule", [](const std::string& r) { return parse_rule(r); });
        if (!t.get(row, "label").empty()) {
            const long long v = t.get_int(row, "label");
            if (v != 0 && v != 1) t.fail(row, "label", "label must be 0 or 1");
            l.label = static_cast<int>(v);
        }
        out.push_back(std::move(l));
    }
    return out;
}

void write_correlations(const std::string& path, const CorrelationMatrix& m) {
    json j = stamp("crowdmrp.correlations");
    json names = json::array();
    for (Metric x : m.metrics) names.push_back(to_string(x));
    j["metrics"] = names;
    json cells = json::array();
    for (std::size_t a = 0; a < m.metrics.size(); ++a)
        for (std::size_t b = 0; b < m.metrics.size(); ++b) {
            const auto& c = m.cells[a][b];
            cells.push_back({{"row", to_string(m.metrics[a])},
                             {"col", to_string(m.metrics[b])},
                             {"r", c.r ? json(*c.r) : json(nullptr)},
                             {"p_value", c.p_value ? json(*c.p_value) : json(nullptr)},
                             {"n", c.n},
                             {"flags", c.flags}});
        }
    j["cells"] = cells;
    write_json(path, j);
}

std::vector<ShareRow> read_shares(const std::string& path) {
    const auto t = CsvTable::read(path, {"user_id", "gender", "age_band", "state", "party", "item_id"});
    std::vector<ShareRow> out;
    std::map<std::string, std::tuple<Gender, std::string, std::string, Party>> covariates;
    for (const auto& row : t.rows()) {
        ShareRow r;
        r.user_id = nonempty(t, row, "user_id");
        r.gender = gender_field(t, row);
        r.age_band = nonempty(t, row, "age_band");
        r.state = state_field(t, row);
        r.party = party_field(t, row);
        r.item_id = nonempty(t, row, "item_id");
        auto key = std::make_tuple(r.gender, r.age_band, r.state, r.party);
        auto [it, fresh] = covariates.emplace(r.user_id, key);
        if (!fresh && it->second != key) t.fail(row, "user_id", "covariates differ between rows of the same user");
        out.push_back(std::move(r));
    }
    return out;
}

void write_shares(const std::string& path, const std::vector<ShareRow>& rows) {
    std::vector<std::vector<std::string>> out;
    for (const auto& r : rows)
        out.push_back({r.user_id, std::string(to_string(r.gender)), r.age_band, r.state,
                       std::string(to_string(r.party)), r.item_id});
    write_csv(path, {"user_id", "gender", "age_band", "state", "party", "item_id"}, out);
}

std::vector<ShareRow> share_rows(const std::vector<SharerObservation>& observations) {
    std::vector<ShareRow> rows;
    for (const auto& o : observations)
        for (const auto& item : o.item_ids) rows.push_back({o.user_id, o.gender, o.age_band, o.state, o.party, item});
    return rows;
}

std::vector<SharerObservation> observations_from_shares(const std::vector<ShareRow>& rows,
                                                        const std::vector<FakeLabel>& labels, Metric metric,
                                                        DichotomyRule rule, std::vector<std::string>& warnings) {
    std::map<std::string, std::optional<int>> label_of;
    for (const auto& l : labels)
        if (l.metric == metric && l.rule == rule) label_of[l.item_id] = l.label;
    if (label_of.empty())
        throw ValidationError("no labels for metric " + std::string(to_string(metric)) + " and rule " +
                              std::string(to_string(rule)));
    std::vector<SharerObservation> out;
    std::map<std::string, std::size_t> pos;
    std::size_t unlabeled = 0;
    for (const auto& r : rows) {
        auto [it, fresh] = pos.emplace(r.user_id, out.size());
        if (fresh) out.push_back({r.user_id, r.gender, r.age_band, r.state, r.party, {}, {}});
        auto l = label_of.find(r.item_id);
        if (l == label_of.end() || !l->second) {
            ++unlabeled;
            continue;
        }
        out[it->second].item_ids.push_back(r.item_id);
        out[it->second].outcomes.push_back(*l->second);
    }
    if (unlabeled > 0) warnings.push_back(std::to_string(unlabeled) + " shares of unlabelled items dropped");
    return out;
}

std::vector<StatePredictorRow> read_predictors(const std::string& path) {
    const auto t = CsvTable::read(path, {"state", "white_share", "college_share", "pop_density"});
    std::vector<StatePredictorRow> out;
    for (const auto& row : t.rows())
        out.push_back({state_field(t, row), t.get_double(row, "white_share"), t.get_double(row, "college_share"),
                       t.get_double(row, "pop_density")});
    return out;
}

void write_predictors(const std::string& path, const std::vector<StatePredictorRow>& rows) {
    std::vector<std::vector<std::string>> out;
    for (const auto& r : rows)
        out.push_back({r.state, format_double(r.white_share), format_double(r.college_share), format_double(r.pop_density)});
    write_csv(path, {"state", "white_share", "college_share", "pop_density"}, out);
}

StratificationFrame read_frame(const std::string& path) {
    const auto t = CsvTable::read(path, {"gender", "age_band", "state", "weight"}, {"party"});
    StratificationFrame f;
    f.label = path;
    for (const auto& row : t.rows()) {
        PersonaCell c;
        c.gender = gender_field(t, row);
        c.age_band = nonempty(t, row, "age_band");
        c.state = state_field(t, row);
        c.party = t.get(row, "party").empty() ? Party::neutral : party_field(t, row);
        c.weight = t.get_double(row, "weight");
        if (!(c.weight >= 0.0)) t.fail(row, "weight", "weight must be non-negative");
        f.cells.push_back(std::move(c));
    }
    return f;
}

void write_frame(const std::string& path, const StratificationFrame& frame) {
    std::vector<std::vector<std::string>> out;
    for (const auto& c : frame.cells)
        out.push_back({std::string(to_string(c.gender)), c.age_band, c.state, std::string(to_string(c.party)),
                       format_double(c.weight)});
    write_csv(path, {"gender", "age_band", "state", "party", "weight"}, out);
}

PartyShareTable read_party_shares(const std::string& path) {
    const auto t = CsvTable::read(path, {"gender", "age_band", "state", "democrat", "republican", "neutral"});
    PartyShareTable out;
    for (const auto& row : t.rows()) {
        const std::string key = demographic_key(gender_field(t, row), nonempty(t, row, "age_band"), state_field(t, row));
        const std::array<double, 3> v = {t.get_double(row, "democrat"), t.get_double(row, "republican"),
                                         t.get_double(row, "neutral")};
        if (std::abs(v[0] + v[1] + v[2] - 1.0) > 1e-9) t.fail(row, "neutral", "party shares must sum to 1");
        if (!out.emplace(key, v).second) t.fail(row, "state", "duplicate demographic key " + key);
    }
    return out;
}

void write_party_shares(const std::string& path, const PartyShareTable& shares) {
    std::vector<std::vector<std::string>> out;
    for (const auto& [key, v] : shares) {
        auto parts = split(key, '|');
        out.push_back({parts.at(0), parts.at(1), parts.at(2), format_double(v[0]), format_double(v[1]),
                       format_double(v[2])});
    }
    write_csv(path, {"gender", "age_band", "state", "democrat", "republican", "neutral"}, out);
}

std::map<std::string, double> read_population(const std::string& path) {
    const auto t = CsvTable::read(path, {"state", "population"});
    std::map<std::string, double> out;
    for (const auto& row : t.rows()) {
        const double p = t.get_double(row, "population");
        if (!(p > 0.0)) t.fail(row, "population", "population must be positive");
        if (!out.emplace(state_field(t, row), p).second) t.fail(row, "state", "duplicate state");
    }
    return out;
}

void write_state_estimates(const std::string& path, const std::vector<StateEstimate>& estimates) {
    std::vector<std::vector<std::string>> out;
    for (const auto& e : estimates)
        out.push_back({e.state, format_double(e.q10.value_or(e.theta)), format_double(e.q50.value_or(e.theta)),
                       format_double(e.q90.value_or(e.theta)),
                       e.expected_count ? std::to_string(*e.expected_count) : std::string()});
    write_csv(path, {"state", "q10", "q50", "q90", "expected_count"}, out);
}

void write_coefficient_report(const std::string& path, const std::vector<CoefficientRow>& rows) {
    std::vector<std::vector<std::string>> out;
    for (const auto& r : rows)
        out.push_back({r.name, format_double(r.q10), format_double(r.q50), format_double(r.q90),
                       format_double(r.odds_change_q10, 6), format_double(r.odds_change_q90, 6),
                       opt_double(r.prob_positive)});
    write_csv(path, {"name", "q10", "q50", "q90", "odds_change_q10", "odds_change_q90", "prob_positive"}, out);
}

std::vector<CoefficientRow> read_coefficient_quantiles(const std::string& path) {
    const auto t = CsvTable::read(path, {"name", "q10", "q50", "q90"}, {"prob_positive"});
    std::vector<CoefficientRow> out;
    for (const auto& row : t.rows()) {
        std::optional<double> pp;
        if (!t.get(row, "prob_positive").empty()) pp = t.get_double(row, "prob_positive");
        const double q10 = t.get_double(row, "q10"), q50 = t.get_double(row, "q50"), q90 = t.get_double(row, "q90");
        if (!(q10 <= q50 && q50 <= q90)) t.fail(row, "q50", "quantiles must be ordered");
        out.push_back(coefficient_row(nonempty(t, row, "name"), q10, q50, q90, pp));
    }
    return out;
}

void write_allocation_plan(const std::string& path, const AllocationPlan& plan) {
    std::vector<std::vector<std::string>> out;
    for (std::size_t i = 0; i < plan.candidates.size(); ++i) {
        const auto& c = plan.candidates[i];
        out.push_back({format_double(c.mean_reviews), std::to_string(c.pool_size), format_double(c.expected_effective),
                       i == plan.best ? "1" : "0"});
    }
    write_csv(path, {"mean_reviews", "pool_size", "expected_effective", "recommended"}, out);
}

}  // namespace crowdmrp
