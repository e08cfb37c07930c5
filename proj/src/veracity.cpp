#include "crowdmrp/veracity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_map>

#include <boost/math/distributions/students_t.hpp>

#include "crowdmrp/parallel.hpp"
#include "crowdmrp/raking.hpp"
#include "crowdmrp/rng.hpp"

namespace crowdmrp {

const std::vector<Metric>& all_metrics() {
    static const std::vector<Metric> m = {
        Metric::naive_sample,     Metric::naive_balanced, Metric::naive_population,
        Metric::naive_partisan_D, Metric::naive_partisan_R, Metric::model_sample,
        Metric::model_balanced,   Metric::model_population, Metric::model_partisan_D,
        Metric::model_partisan_R};
    return m;
}

std::string_view to_string(Metric m) {
    switch (m) {
        case Metric::naive_sample: return "naive_sample";
        case Metric::naive_balanced: return "naive_balanced";
        case Metric::naive_population: return "naive_population";
        case Metric::naive_partisan_D: return "naive_partisan_D";
        case Metric::naive_partisan_R: return "naive_partisan_R";
        case Metric::model_sample: return "model_sample";
        case Metric::model_balanced: return "model_balanced";
        case Metric::model_population: return "model_population";
        case Metric::model_partisan_D: return "model_partisan_D";
        case Metric::model_partisan_R: return "model_partisan_R";
    }
    return "unknown";
}

Metric parse_metric(std::string_view s) {
    for (Metric m : all_metrics())
        if (to_string(m) == s) return m;
    throw ValidationError("unknown metric '" + std::string(s) + "'");
}

bool is_partisan(Metric m) {
    return m == Metric::naive_partisan_D || m == Metric::naive_partisan_R ||
           m == Metric::model_partisan_D || m == Metric::model_partisan_R;
}

namespace {

VeracityScore make_score(std::string_view item_id, Metric m) {
    VeracityScore s;
    s.item_id = std::string(item_id);
    s.metric = m;
    return s;
}

double mean_of(std::span<const int> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

Metric partisan_metric(bool model, Party j) {
    if (j == Party::democrat) return model ? Metric::model_partisan_D : Metric::naive_partisan_D;
    return model ? Metric::model_partisan_R : Metric::naive_partisan_R;
}

}  // namespace

VeracityScore naive_sample(std::string_view item_id, std::span<const int> ratings) {
    VeracityScore s = make_score(item_id, Metric::naive_sample);
    if (ratings.empty()) {
        s.flags.emplace_back("no_assessments");
        return s;
    }
    s.value = mean_of(ratings);
    s.n_used = static_cast<int>(ratings.size());
    return s;
}

VeracityScore naive_partisan(std::string_view item_id, std::span<const RatedBy> ratings, Party j) {
    if (j == Party::neutral) throw ValidationError("partisan metrics are defined for democrat/republican only");
    VeracityScore s = make_score(item_id, partisan_metric(false, j));
    std::vector<int> subset;
    for (const auto& r : ratings)
        if (r.rater->party == j) subset.push_back(r.rating);
    if (subset.empty()) {
        s.flags.emplace_back("insufficient_partisans");
        return s;
    }
    s.value = mean_of(subset);
    s.n_used = static_cast<int>(subset.size());
    return s;
}

BalancedEstimate naive_balanced(std::string_view item_id, std::span<const int> democrat,
                                std::span<const int> republican, const BalancedConfig& cfg) {
    BalancedEstimate out;
    out.score = make_score(item_id, Metric::naive_balanced);
    if (democrat.empty() || republican.empty()) {
        out.score.flags.emplace_back("insufficient_partisans");
        return out;
    }
    out.score.n_used = static_cast<int>(democrat.size() + republican.size());
    if (democrat.size() == republican.size()) {
        out.score.value = 0.5 * (mean_of(democrat) + mean_of(republican));
        return out;
    }
    if (cfg.rounds < 1) throw ValidationError("bootstrap rounds must be >= 1");

    const bool dem_major = democrat.size() > republican.size();
    std::vector<int> pool(dem_major ? democrat.begin() : republican.begin(),
                          dem_major ? democrat.end() : republican.end());
    const double minority_mean = dem_major ? mean_of(republican) : mean_of(democrat);
    const std::size_t target = dem_major ? republican.size() : democrat.size();

    Rng rng = make_rng(cfg.seed, item_id);
    double sum = 0.0, sum_sq = 0.0;
    for (int s = 0; s < cfg.rounds; ++s) {
        // Partial Fisher-Yates: the first `target` slots form a uniform subset.
        long long acc = 0;
        for (std::size_t i = 0; i < target; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
            std::swap(pool[i], pool[pick(rng)]);
            acc += pool[i];
        }
        const double lambda = 0.5 * (static_cast<double>(acc) / static_cast<double>(target) + minority_mean);
        sum += lambda;
        sum_sq += lambda * lambda;
    }
    const double S = cfg.rounds;
    const double mean = sum / S;
    out.score.value = mean;
    const double var = S > 1 ? std::max(0.0, (sum_sq - S * mean * mean) / (S - 1.0)) : 0.0;
    out.mc_standard_error = std::sqrt(var / S);
    out.score.flags.emplace_back("bootstrapped");
    return out;
}

BalancedEstimate naive_balanced(std::string_view item_id, std::span<const RatedBy> ratings,
                                const BalancedConfig& cfg) {
    std::vector<int> d, r;
    for (const auto& x : ratings) {
        if (x.rater->party == Party::democrat) d.push_back(x.rating);
        if (x.rater->party == Party::republican) r.push_back(x.rating);
    }
    return naive_balanced(item_id, d, r, cfg);
}

VeracityScore naive_population(std::string_view item_id, std::span<const int> ratings,
                               std::span<const double> weights) {
    VeracityScore s = make_score(item_id, Metric::naive_population);
    if (ratings.empty()) {
        s.flags.emplace_back("no_assessments");
        return s;
    }
    if (weights.size() != ratings.size()) throw ValidationError("naive_population: missing rake weight");
    std::vector<double> v(ratings.begin(), ratings.end());
    s.value = weighted_mean(v, weights);
    s.n_used = static_cast<int>(ratings.size());
    return s;
}

Persona persona_of(const Rater& r) { return {r.gender, r.age_band, r.state, r.party}; }
Persona persona_of(const PersonaCell& c) { return {c.gender, c.age_band, c.state, c.party}; }

VeracityScore model_sample(const OrdinalPredictor& model, std::string_view item_id,
                           std::span<const RatedBy> ratings) {
    VeracityScore s = make_score(item_id, Metric::model_sample);
    if (!model.has_item(item_id)) {
        s.flags.emplace_back("item_not_in_fit");
        return s;
    }
    if (ratings.empty()) {
        s.flags.emplace_back("no_assessments");
        return s;
    }
    double total = 0.0;
    bool unseen = false;
    for (const auto& r : ratings) {
        const auto p = model.predict(item_id, persona_of(*r.rater));
        total += p.value;
        unseen = unseen || p.unseen_level;
    }
    s.value = total / static_cast<double>(ratings.size());
    s.n_used = static_cast<int>(ratings.size());
    if (unseen) s.flags.emplace_back("unseen_level");
    return s;
}

namespace {

VeracityScore poststratified(const OrdinalPredictor& model, std::string_view item_id,
                             const std::vector<PersonaCell>& cells, Metric m) {
    VeracityScore s = make_score(item_id, m);
    if (!model.has_item(item_id)) {
        s.flags.emplace_back("item_not_in_fit");
        return s;
    }
    double num = 0.0, den = 0.0;
    int used = 0;
    bool unseen = false;
    for (const auto& c : cells) {
        if (!(c.weight > 0.0)) continue;
        const auto p = model.predict(item_id, persona_of(c));
        num += c.weight * p.value;
        den += c.weight;
        ++used;
        unseen = unseen || p.unseen_level;
    }
    if (!(den > 0.0)) {
        s.flags.emplace_back("empty_frame");
        return s;
    }
    s.value = num / den;
    s.n_used = used;
    if (unseen) s.flags.emplace_back("unseen_level");
    return s;
}

}  // namespace

VeracityScore model_partisan(const OrdinalPredictor& model, std::string_view item_id,
                             const StratificationFrame& frame, Party j) {
    if (j == Party::neutral) throw ValidationError("partisan metrics are defined for democrat/republican only");
    return poststratified(model, item_id, frame.partisan(j).cells, partisan_metric(true, j));
}

VeracityScore model_balanced(std::string_view item_id, const VeracityScore& democrat,
                             const VeracityScore& republican) {
    VeracityScore s = make_score(item_id, Metric::model_balanced);
    if (!democrat.value || !republican.value) {
        s.flags.emplace_back("insufficient_partisans");
        return s;
    }
    s.value = 0.5 * (*democrat.value + *republican.value);
    s.n_used = democrat.n_used + republican.n_used;
    for (const auto* src : {&democrat, &republican})
        for (const auto& f : src->flags)
            if (std::find(s.flags.begin(), s.flags.end(), f) == s.flags.end()) s.flags.push_back(f);
    return s;
}

VeracityScore model_population(const OrdinalPredictor& model, std::string_view item_id,
                               const StratificationFrame& frame) {
    return poststratified(model, item_id, frame.cells, Metric::model_population);
}

std::vector<VeracityScore> score_items(const ScoringInputs& in, const ScoringConfig& cfg) {
    if (!in.raters || !in.items || !in.assessments) throw ValidationError("score_items: missing inputs");
    auto wants = [&](Metric m) { return std::find(cfg.metrics.begin(), cfg.metrics.end(), m) != cfg.metrics.end(); };
    const bool need_model = std::any_of(cfg.metrics.begin(), cfg.metrics.end(), [](Metric m) {
        return m == Metric::model_sample || m == Metric::model_balanced || m == Metric::model_population ||
               m == Metric::model_partisan_D || m == Metric::model_partisan_R;
    });
    const bool need_frame = wants(Metric::model_balanced) || wants(Metric::model_population) ||
                            wants(Metric::model_partisan_D) || wants(Metric::model_partisan_R);
    if (need_model && !in.fit) throw ValidationError("model-based metrics need a fitted ordinal model");
    if (need_frame && !in.frame) throw ValidationError("post-stratified metrics need a stratification frame");
    if (wants(Metric::naive_population) && !in.rake_weights)
        throw ValidationError("naive_population needs raking weights");

    std::unordered_map<std::string, const Rater*> rater_by_id;
    for (const auto& r : *in.raters) rater_by_id.emplace(r.id, &r);
    std::unordered_map<std::string, std::size_t> item_pos;
    for (std::size_t i = 0; i < in.items->size(); ++i) item_pos.emplace((*in.items)[i].id, i);
    std::vector<std::vector<RatedBy>> by_item(in.items->size());
    for (const auto& a : *in.assessments) {
        auto r = rater_by_id.find(a.rater_id);
        auto it = item_pos.find(a.item_id);
        if (r == rater_by_id.end() || it == item_pos.end())
            throw ValidationError("assessment references unknown rater or item (" + a.rater_id + ", " + a.item_id + ")");
        by_item[it->second].push_back({a.rating, r->second});
    }

    std::optional<OrdinalPredictor> predictor;
    if (need_model) predictor.emplace(*in.fit, cfg.prediction_draws);

    std::vector<std::vector<VeracityScore>> slots(in.items->size());
    parallel_for(in.items->size(), cfg.threads, [&](std::size_t i) {
        const std::string& id = (*in.items)[i].id;
        const auto& rated = by_item[i];
        std::vector<int> ratings;
        for (const auto& r : rated) ratings.push_back(r.rating);
        std::optional<VeracityScore> md, mr;
        auto& out = slots[i];
        for (Metric m : cfg.metrics) {
            switch (m) {
                case Metric::naive_sample: out.push_back(naive_sample(id, ratings)); break;
                case Metric::naive_balanced: out.push_back(naive_balanced(id, rated, cfg.balanced).score); break;
                case Metric::naive_population: {
                    std::vector<double> w;
                    for (const auto& r : rated) {
                        auto it = in.rake_weights->find(r.rater->id);
                        if (it == in.rake_weights->end())
                            throw ValidationError("no raking weight for rater '" + r.rater->id + "'");
                        w.push_back(it->second);
                    }
                    out.push_back(naive_population(id, ratings, w));
                    break;
                }
                case Metric::naive_partisan_D: out.push_back(naive_partisan(id, rated, Party::democrat)); break;
                case Metric::naive_partisan_R: out.push_back(naive_partisan(id, rated, Party::republican)); break;
                case Metric::model_sample: out.push_back(model_sample(*predictor, id, rated)); break;
                case Metric::model_partisan_D:
                    if (!md) md = model_partisan(*predictor, id, *in.frame, Party::democrat);
                    out.push_back(*md);
                    break;
                case Metric::model_partisan_R:
                    if (!mr) mr = model_partisan(*predictor, id, *in.frame, Party::republican);
                    out.push_back(*mr);
                    break;
                case Metric::model_balanced:
                    if (!md) md = model_partisan(*predictor, id, *in.frame, Party::democrat);
                    if (!mr) mr = model_partisan(*predictor, id, *in.frame, Party::republican);
                    out.push_back(model_balanced(id, *md, *mr));
                    break;
                case Metric::model_population: out.push_back(model_population(*predictor, id, *in.frame)); break;
            }
        }
    });
    std::vector<VeracityScore> all;
    for (auto& s : slots)
        for (auto& v : s) all.push_back(std::move(v));
    return all;
}

std::string_view to_string(DichotomyRule r) {
    return r == DichotomyRule::threshold_le2 ? "threshold_le2" : "lowest_decile";
}

DichotomyRule parse_rule(std::string_view s) {
    if (s == "threshold_le2") return DichotomyRule::threshold_le2;
    if (s == "lowest_decile") return DichotomyRule::lowest_decile;
    throw ValidationError("unknown dichotomisation rule '" + std::string(s) + "'");
}

FakeLabel dichotomize_threshold(const VeracityScore& score, double threshold) {
    FakeLabel l{score.item_id, score.metric, DichotomyRule::threshold_le2, std::nullopt};
    if (score.value) l.label = *score.value <= threshold ? 1 : 0;
    return l;
}

std::vector<FakeLabel> dichotomize_percentile(const std::vector<VeracityScore>& scores, double q) {
    if (!(q > 0.0 && q < 1.0)) throw ValidationError("quantile must lie in (0, 1)");
    if (!scores.empty())
        for (const auto& s : scores)
            if (s.metric != scores.front().metric)
                throw ValidationError("dichotomize_percentile expects scores of a single metric");
    std::vector<std::size_t> present;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (scores[i].value) present.push_back(i);
    if (present.size() < 10)
        throw ValidationError("lowest-quantile rule needs at least 10 scored items, got " +
                              std::to_string(present.size()));
    std::sort(present.begin(), present.end(), [&](std::size_t a, std::size_t b) {
        if (*scores[a].value != *scores[b].value) return *scores[a].value < *scores[b].value;
        return scores[a].item_id < scores[b].item_id;
    });
    const double m = static_cast<double>(present.size());
    const auto flagged = static_cast<std::size_t>(std::ceil(q * m - 1e-9));

    std::vector<FakeLabel> out;
    out.reserve(scores.size());
    for (const auto& s : scores) out.push_back({s.item_id, s.metric, DichotomyRule::lowest_decile, std::nullopt});
    for (std::size_t rank = 0; rank < present.size(); ++rank) out[present[rank]].label = rank < flagged ? 1 : 0;
    return out;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) return std::nullopt;
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationMatrix metric_correlation_matrix(const std::vector<VeracityScore>& scores,
                                            const std::vector<Metric>& metrics) {
    CorrelationMatrix out;
    out.metrics = metrics;
    std::vector<std::map<std::string, double>> by_metric(metrics.size());
    for (const auto& s : scores) {
        if (!s.value) continue;
        for (std::size_t k = 0; k < metrics.size(); ++k)
            if (metrics[k] == s.metric) by_metric[k][s.item_id] = *s.value;
    }
    out.cells.assign(metrics.size(), std::vector<CorrelationCell>(metrics.size()));
    for (std::size_t a = 0; a < metrics.size(); ++a) {
        for (std::size_t b = 0; b < metrics.size(); ++b) {
            auto& cell = out.cells[a][b];
            std::vector<double> x, y;
            for (const auto& [id, v] : by_metric[a]) {
                auto it = by_metric[b].find(id);
                if (it == by_metric[b].end()) continue;
                x.push_back(v);
                y.push_back(it->second);
            }
            cell.n = static_cast<int>(x.size());
            if (cell.n < 3) {
                cell.flags.emplace_back("too_few_items");
                continue;
            }
            cell.r = pearson(x, y);
            if (!cell.r) {
                cell.flags.emplace_back("zero_variance");
                continue;
            }
            const double r = *cell.r;
            const double df = cell.n - 2;
            if (std::abs(r) >= 1.0) {
                cell.p_value = 0.0;
            } else if (df >= 1.0) {
                const double t = r * std::sqrt(df / (1.0 - r * r));
                boost::math::students_t_distribution<double> dist(df);
                cell.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
            }
        }
    }
    return out;
}

}  // namespace crowdmrp
