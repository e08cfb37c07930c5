#include "crowdmrp/ordinal.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

#include "crowdmrp/math.hpp"
#include "crowdmrp/rng.hpp"

namespace crowdmrp {

std::string_view to_string(Parameterization p) {
    return p == Parameterization::centered ? "centered" : "non_centered";
}

Parameterization parse_parameterization(std::string_view s) {
    if (s == "centered") return Parameterization::centered;
    if (s == "non_centered") return Parameterization::non_centered;
    throw ValidationError("unknown parameterization '" + std::string(s) + "'");
}

std::string_view factor_name(OrdinalFactor f) {
    static constexpr std::array<std::string_view, kOrdinalFactors> names = {
        "tweet", "context", "gender", "age", "state", "party", "context_party"};
    return names[static_cast<std::size_t>(f)];
}

std::string_view to_string(ContextCombination c) {
    return c == ContextCombination::sum ? "sum" : "mean";
}

ContextCombination parse_context_combination(std::string_view s) {
    if (s == "sum") return ContextCombination::sum;
    if (s == "mean") return ContextCombination::mean;
    throw ValidationError("unknown context combination '" + std::string(s) + "'");
}

namespace {

void check_thresholds(const Thresholds& alpha) {
    for (std::size_t c = 0; c < kThresholds; ++c) {
        if (!std::isfinite(alpha[c])) throw ValidationError("thresholds must be finite");
        if (c > 0 && !(alpha[c] > alpha[c - 1]))
            throw ValidationError("thresholds must be strictly increasing");
    }
}

// log pi_y and its derivatives with respect to mu and the two adjacent thresholds.
struct CategoryTerm {
    double log_prob;
    double d_mu;
    double d_lower;  // w.r.t. alpha_{y-1} (unused for y = 1)
    double d_upper;  // w.r.t. alpha_y (unused for y = C)
};

CategoryTerm category_term(int y, double mu, const Thresholds& alpha) {
    CategoryTerm t{};
    if (y == 1) {
        const double b = alpha[0] - mu;
        t.log_prob = log_logistic(b);
        t.d_upper = 1.0 - logistic(b);
        t.d_mu = -t.d_upper;
    } else if (y == kCategories) {
        const double a = alpha[kThresholds - 1] - mu;
        t.log_prob = log_logistic(-a);
        t.d_lower = -logistic(a);
        t.d_mu = -t.d_lower;
    } else {
        const double b = alpha[static_cast<std::size_t>(y - 1)] - mu;
        const double a = alpha[static_cast<std::size_t>(y - 2)] - mu;
        const double gap = std::expm1(b - a);
        t.log_prob = log_logistic(b) + log_logistic(-a) + std::log(-std::expm1(a - b));
        t.d_upper = (1.0 - logistic(b)) + 1.0 / gap;
        t.d_lower = -logistic(a) - 1.0 / gap;
        t.d_mu = -(t.d_upper + t.d_lower);
    }
    return t;
}

}  // namespace

std::array<double, kCategories> cumulative_probs(double mu, const Thresholds& alpha) {
    check_thresholds(alpha);
    std::array<double, kCategories> pi{};
    for (int y = 1; y <= kCategories; ++y)
        pi[static_cast<std::size_t>(y - 1)] = std::exp(category_term(y, mu, alpha).log_prob);
    return pi;
}

double expected_rating(double mu, const Thresholds& alpha) {
    // E[y] = C - sum_{c<C} psi_c
    double e = kCategories;
    for (double a : alpha) e -= logistic(a - mu);
    return e;
}

int OrdinalStructure::find(OrdinalFactor f, std::string_view label) const {
    const auto& lv = levels[static_cast<std::size_t>(f)];
    auto it = std::find(lv.begin(), lv.end(), label);
    return it == lv.end() ? -1 : static_cast<int>(it - lv.begin());
}

std::string OrdinalStructure::interaction_label(std::string_view annotation, Party p) {
    return std::string(annotation) + "|" + std::string(to_string(p));
}

std::span<const int> OrdinalDesign::interactions(std::size_t obs) const {
    const auto b = static_cast<std::size_t>(interaction_offsets[obs]);
    const auto e = static_cast<std::size_t>(interaction_offsets[obs + 1]);
    return std::span<const int>(interaction_index).subspan(b, e - b);
}

OrdinalDesign build_ordinal_design(const std::vector<Rater>& raters, const std::vector<Item>& items,
                                   const std::vector<Assessment>& assessments,
                                   ContextCombination combination) {
    if (assessments.empty()) throw ValidationError("ordinal design: no assessments");
    std::unordered_map<std::string, const Rater*> rater_by_id;
    for (const auto& r : raters) rater_by_id.emplace(r.id, &r);
    std::unordered_map<std::string, std::size_t> item_pos;
    for (std::size_t i = 0; i < items.size(); ++i)
        if (!item_pos.emplace(items[i].id, i).second)
            throw ValidationError("duplicate item id '" + items[i].id + "'");

    std::set<std::pair<std::string, std::string>> seen_pairs;
    std::vector<char> assessed(items.size(), 0);
    std::set<std::string> genders, ages, states, parties, contexts, inter;
    for (const auto& a : assessments) {
        auto r = rater_by_id.find(a.rater_id);
        if (r == rater_by_id.end()) throw ValidationError("assessment by unknown rater '" + a.rater_id + "'");
        auto it = item_pos.find(a.item_id);
        if (it == item_pos.end()) throw ValidationError("assessment of unknown item '" + a.item_id + "'");
        if (a.rating < 1 || a.rating > kCategories)
            throw ValidationError("rating outside 1..4 for (" + a.rater_id + ", " + a.item_id + ")");
        if (!seen_pairs.emplace(a.rater_id, a.item_id).second)
            throw ValidationError("duplicate assessment (" + a.rater_id + ", " + a.item_id + ")");
        assessed[it->second] = 1;
        const Rater& rr = *r->second;
        genders.insert(std::string(to_string(rr.gender)));
        ages.insert(rr.age_band);
        states.insert(rr.state);
        parties.insert(std::string(to_string(rr.party)));
        for (const auto& z : items[it->second].annotations) {
            contexts.insert(z);
            inter.insert(OrdinalStructure::interaction_label(z, rr.party));
        }
    }

    OrdinalDesign d;
    auto& lv = d.structure.levels;
    d.structure.combination = combination;
    std::vector<int> tweet_index(items.size(), -1);
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (!assessed[i]) continue;
        tweet_index[i] = static_cast<int>(lv[0].size());
        lv[0].push_back(items[i].id);
    }
    lv[1].assign(contexts.begin(), contexts.end());
    lv[2].assign(genders.begin(), genders.end());
    lv[3].assign(ages.begin(), ages.end());
    lv[4].assign(states.begin(), states.end());
    lv[5].assign(parties.begin(), parties.end());
    lv[6].assign(inter.begin(), inter.end());

    auto index_of = [](const std::vector<std::string>& v) {
        std::unordered_map<std::string, int> m;
        for (std::size_t i = 0; i < v.size(); ++i) m.emplace(v[i], static_cast<int>(i));
        return m;
    };
    const auto ctx_idx = index_of(lv[1]), g_idx = index_of(lv[2]), a_idx = index_of(lv[3]),
               s_idx = index_of(lv[4]), p_idx = index_of(lv[5]), k_idx = index_of(lv[6]);

    d.structure.item_contexts.resize(lv[0].size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (tweet_index[i] < 0) continue;
        std::set<std::string> uniq(items[i].annotations.begin(), items[i].annotations.end());
        auto& ctx = d.structure.item_contexts[static_cast<std::size_t>(tweet_index[i])];
        for (const auto& z : uniq) ctx.push_back(ctx_idx.at(z));
    }

    const std::size_t n = assessments.size();
    d.tweet.reserve(n);
    d.interaction_offsets.reserve(n + 1);
    d.interaction_offsets.push_back(0);
    for (const auto& a : assessments) {
        const Rater& r = *rater_by_id.at(a.rater_id);
        const std::size_t item = item_pos.at(a.item_id);
        d.tweet.push_back(tweet_index[item]);
        d.gender.push_back(g_idx.at(std::string(to_string(r.gender))));
        d.age.push_back(a_idx.at(r.age_band));
        d.state.push_back(s_idx.at(r.state));
        d.party.push_back(p_idx.at(std::string(to_string(r.party))));
        d.rating.push_back(a.rating);
        d.rater_id.push_back(r.id);
        std::set<std::string> uniq(items[item].annotations.begin(), items[item].annotations.end());
        for (const auto& z : uniq)
            d.interaction_index.push_back(k_idx.at(OrdinalStructure::interaction_label(z, r.party)));
        d.interaction_offsets.push_back(static_cast<int>(d.interaction_index.size()));
    }
    return d;
}

OrdinalParams OrdinalParams::zeros(const OrdinalStructure& s, Thresholds alpha) {
    OrdinalParams p;
    p.alpha = alpha;
    for (std::size_t f = 0; f < kOrdinalFactors; ++f) {
        p.effects[f].assign(s.levels[f].size(), 0.0);
        p.scales[f] = 1.0;
    }
    return p;
}

OrdinalModel::OrdinalModel(const OrdinalDesign& design, Parameterization param, OrdinalPriors priors)
    : design_(design), param_(param), priors_(priors) {
    std::size_t offset = kThresholds;
    for (std::size_t f = 0; f < kOrdinalFactors; ++f) {
        blocks_[f] = {offset, design.structure.levels[f].size()};
        offset = blocks_[f].end();
    }
    dim_ = offset;
    const auto& ctx = design.structure.item_contexts;
    context_weight_.resize(ctx.size(), 1.0);
    if (design.structure.combination == ContextCombination::mean)
        for (std::size_t t = 0; t < ctx.size(); ++t)
            context_weight_[t] = ctx[t].empty() ? 1.0 : 1.0 / static_cast<double>(ctx[t].size());
}

OrdinalParams OrdinalModel::unpack(std::span<const double> u) const {
    OrdinalParams p;
    p.alpha[0] = u[0];
    for (std::size_t c = 1; c < kThresholds; ++c) p.alpha[c] = p.alpha[c - 1] + std::exp(u[c]);
    for (std::size_t f = 0; f < kOrdinalFactors; ++f) {
        p.effects[f].resize(blocks_[f].size);
        p.scales[f] = pooled_effects(u, blocks_[f], param_, p.effects[f]);
    }
    return p;
}

std::vector<double> OrdinalModel::pack(const OrdinalParams& p) const {
    check_thresholds(p.alpha);
    std::vector<double> u(dim_, 0.0);
    u[0] = p.alpha[0];
    for (std::size_t c = 1; c < kThresholds; ++c) u[c] = std::log(p.alpha[c] - p.alpha[c - 1]);
    for (std::size_t f = 0; f < kOrdinalFactors; ++f) {
        if (p.effects[f].size() != blocks_[f].size)
            throw ValidationError("effect vector size mismatch for " +
                                  std::string(factor_name(static_cast<OrdinalFactor>(f))));
        if (!(p.scales[f] > 0.0)) throw ValidationError("scales must be positive");
        pack_pooled(p.effects[f], p.scales[f], blocks_[f], param_, u);
    }
    return u;
}

double OrdinalModel::linear_predictor(const OrdinalParams& p, std::size_t obs) const {
    const auto t = static_cast<std::size_t>(design_.tweet[obs]);
    const double w = context_weight_[t];
    double mu = p.effects[0][t];
    for (int z : design_.structure.item_contexts[t]) mu += w * p.effects[1][static_cast<std::size_t>(z)];
    mu += p.effects[2][static_cast<std::size_t>(design_.gender[obs])];
    mu += p.effects[3][static_cast<std::size_t>(design_.age[obs])];
    mu += p.effects[4][static_cast<std::size_t>(design_.state[obs])];
    mu += p.effects[5][static_cast<std::size_t>(design_.party[obs])];
    for (int k : design_.interactions(obs)) mu += w * p.effects[6][static_cast<std::size_t>(k)];
    return mu;
}

double OrdinalModel::log_likelihood(const OrdinalParams& p) const {
    check_thresholds(p.alpha);
    double ll = 0.0;
    for (std::size_t i = 0; i < design_.observations(); ++i)
        ll += category_term(design_.rating[i], linear_predictor(p, i), p.alpha).log_prob;
    return ll;
}

double OrdinalModel::log_density(std::span<const double> u, std::span<double> grad) const {
    const bool want_grad = !grad.empty();
    if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);

    Thresholds alpha;
    alpha[0] = u[0];
    for (std::size_t c = 1; c < kThresholds; ++c) alpha[c] = alpha[c - 1] + std::exp(u[c]);

    OrdinalParams p;
    p.alpha = alpha;
    for (std::size_t f = 0; f < kOrdinalFactors; ++f) {
        p.effects[f].resize(blocks_[f].size);
        p.scales[f] = pooled_effects(u, blocks_[f], param_, p.effects[f]);
    }

    std::array<std::vector<double>, kOrdinalFactors> d_theta;
    if (want_grad)
        for (std::size_t f = 0; f < kOrdinalFactors; ++f) d_theta[f].assign(blocks_[f].size, 0.0);
    Thresholds d_alpha{};

    double lp = 0.0;
    for (std::size_t i = 0; i < design_.observations(); ++i) {
        const double mu = linear_predictor(p, i);
        const int y = design_.rating[i];
        const CategoryTerm term = category_term(y, mu, alpha);
        lp += term.log_prob;
        if (!want_grad) continue;
        if (y < kCategories) d_alpha[static_cast<std::size_t>(y - 1)] += term.d_upper;
        if (y > 1) d_alpha[static_cast<std::size_t>(y - 2)] += term.d_lower;
        const auto t = static_cast<std::size_t>(design_.tweet[i]);
        const double w = context_weight_[t];
        d_theta[0][t] += term.d_mu;
        for (int z : design_.structure.item_contexts[t]) d_theta[1][static_cast<std::size_t>(z)] += w * term.d_mu;
        d_theta[2][static_cast<std::size_t>(design_.gender[i])] += term.d_mu;
        d_theta[3][static_cast<std::size_t>(design_.age[i])] += term.d_mu;
        d_theta[4][static_cast<std::size_t>(design_.state[i])] += term.d_mu;
        d_theta[5][static_cast<std::size_t>(design_.party[i])] += term.d_mu;
        for (int k : design_.interactions(i)) d_theta[6][static_cast<std::size_t>(k)] += w * term.d_mu;
    }

    // Threshold prior and the ordered-transform Jacobian.
    for (std::size_t c = 0; c < kThresholds; ++c) {
        lp += normal_logpdf(alpha[c], priors_.threshold_sd);
        if (want_grad) d_alpha[c] -= alpha[c] / (priors_.threshold_sd * priors_.threshold_sd);
    }
    for (std::size_t c = 1; c < kThresholds; ++c) lp += u[c];
    if (want_grad) {
        double tail = 0.0;
        for (std::size_t c = kThresholds; c-- > 1;) {
            tail += d_alpha[c];
            grad[c] = std::exp(u[c]) * tail + 1.0;
        }
        grad[0] = tail + d_alpha[0];
    }

    for (std::size_t f = 0; f < kOrdinalFactors; ++f)
        lp += pooled_log_prior(u, blocks_[f], param_, priors_.scale_sd, d_theta[f], grad);
    return lp;
}

LogDensityFn OrdinalModel::as_function() const {
    return [this](std::span<const double> u, std::span<double> g) { return log_density(u, g); };
}

namespace {

Thresholds empirical_thresholds(const OrdinalDesign& d) {
    std::array<double, kCategories> count{};
    for (int y : d.rating) count[static_cast<std::size_t>(y - 1)] += 1.0;
    const double n = static_cast<double>(d.rating.size());
    Thresholds alpha{};
    double cum = 0.0;
    for (std::size_t c = 0; c < kThresholds; ++c) {
        cum += count[c];
        const double p = std::clamp((cum + 0.5) / (n + 1.0), 1e-3, 1.0 - 1e-3);
        alpha[c] = logit(p);
        if (c > 0 && alpha[c] < alpha[c - 1] + 0.05) alpha[c] = alpha[c - 1] + 0.05;
    }
    return alpha;
}

}  // namespace

OrdinalFit fit_ordinal_map(const OrdinalDesign& design, const MapConfig& cfg, const OrdinalPriors& priors) {
    if (design.observations() == 0) throw ValidationError("ordinal MAP: no observations");
    OrdinalModel model(design, Parameterization::centered, priors);

    OrdinalParams init = OrdinalParams::zeros(design.structure, empirical_thresholds(design));
    Rng rng = make_rng(cfg.seed, "ordinal-map-init");
    std::normal_distribution<double> jitter(0.0, cfg.init_jitter);
    for (auto& e : init.effects)
        for (auto& v : e) v = jitter(rng);
    for (auto& s : init.scales) s = 1.0;

    std::vector<PooledBlockInfo> blocks;
    for (std::size_t f = 0; f < kOrdinalFactors; ++f) {
        const auto factor = static_cast<OrdinalFactor>(f);
        blocks.push_back({model.block(factor), factor != OrdinalFactor::context && factor != OrdinalFactor::context_party});
    }
    PooledMapConfig pc;
    pc.optimizer = cfg.optimizer;
    pc.scales = cfg.scales;
    pc.min_scale = cfg.min_scale;
    pc.scale_sd = priors.scale_sd;
    PooledMapResult res = fit_pooled_map(model.as_function(), model.pack(init), blocks, pc);

    OrdinalFit fit;
    fit.method = "map";
    fit.structure = design.structure;
    fit.priors = priors;
    fit.draws.push_back(model.unpack(res.u));
    fit.draw_chain.push_back(0);
    MapReport rep;
    rep.converged = res.converged;
    rep.grad_max_norm = res.grad_max_norm;
    rep.iterations = res.iterations;
    rep.em_iterations = res.em_iterations;
    rep.message = res.message;
    rep.trace = std::move(res.trace);
    for (std::size_t f = 0; f < kOrdinalFactors; ++f)
        if (res.u[model.block(static_cast<OrdinalFactor>(f)).offset] <= std::log(cfg.min_scale) + 1e-12)
            rep.scales_at_floor.emplace_back(factor_name(static_cast<OrdinalFactor>(f)));
    fit.map = std::move(rep);
    return fit;
}

OrdinalFit sample_ordinal_posterior(const OrdinalDesign& design, const SamplerConfig& cfg,
                                    const OrdinalPriors& priors) {
    if (design.observations() == 0) throw ValidationError("ordinal MCMC: no observations");
    if (cfg.chains < 2) throw ValidationError("ordinal MCMC: need at least 2 chains");
    OrdinalModel model(design, Parameterization::non_centered, priors);
    std::vector<ChainResult> chains = sample_nuts(model.as_function(), model.dimension(), cfg);

    OrdinalFit fit;
    fit.method = "mcmc";
    fit.structure = design.structure;
    fit.priors = priors;
    const auto names = ordinal_parameter_names(design.structure);
    std::vector<std::vector<std::vector<double>>> per_param(names.size(),
                                                            std::vector<std::vector<double>>(chains.size()));
    for (std::size_t c = 0; c < chains.size(); ++c) {
        for (const auto& u : chains[c].draws) {
            OrdinalParams p = model.unpack(u);
            const auto values = ordinal_parameter_values(p);
            for (std::size_t k = 0; k < values.size(); ++k) per_param[k][c].push_back(values[k]);
            fit.draws.push_back(std::move(p));
            fit.draw_chain.push_back(static_cast<int>(c));
        }
        chains[c].draws.clear();
    }
    if (!fit.draws.empty())
        for (std::size_t k = 0; k < names.size(); ++k) fit.summaries.push_back(summarize(names[k], per_param[k]));
    fit.chain_stats = std::move(chains);
    return fit;
}

std::vector<std::string> ordinal_parameter_names(const OrdinalStructure& s) {
    std::vector<std::string> names;
    for (std::size_t c = 0; c < kThresholds; ++c) names.push_back("alpha[" + std::to_string(c + 1) + "]");
    for (std::size_t f = 0; f < kOrdinalFactors; ++f)
        names.push_back("sigma[" + std::string(factor_name(static_cast<OrdinalFactor>(f))) + "]");
    for (std::size_t f = 0; f < kOrdinalFactors; ++f)
        for (const auto& l : s.levels[f])
            names.push_back(std::string(factor_name(static_cast<OrdinalFactor>(f))) + "[" + l + "]");
    return names;
}

std::vector<double> ordinal_parameter_values(const OrdinalParams& p) {
    std::vector<double> v(p.alpha.begin(), p.alpha.end());
    v.insert(v.end(), p.scales.begin(), p.scales.end());
    for (const auto& e : p.effects) v.insert(v.end(), e.begin(), e.end());
    return v;
}

OrdinalPredictor::OrdinalPredictor(const OrdinalFit& fit, std::size_t max_draws) : fit_(fit) {
    const std::size_t n = fit.draws.size();
    if (n == 0) throw ValidationError("ordinal fit has no draws");
    const std::size_t keep = max_draws == 0 ? n : std::min(n, max_draws);
    for (std::size_t k = 0; k < keep; ++k) draw_index_.push_back(k * n / keep);
    for (std::size_t f = 0; f < kOrdinalFactors; ++f) {
        const auto& lv = fit.structure.levels[f];
        for (std::size_t i = 0; i < lv.size(); ++i) index_[f].emplace(lv[i], static_cast<int>(i));
    }
}

int OrdinalPredictor::lookup(OrdinalFactor f, const std::string& label) const {
    const auto& m = index_[static_cast<std::size_t>(f)];
    auto it = m.find(label);
    return it == m.end() ? -1 : it->second;
}

bool OrdinalPredictor::has_item(std::string_view item_id) const {
    return lookup(OrdinalFactor::tweet, std::string(item_id)) >= 0;
}

PersonaPrediction OrdinalPredictor::predict(std::string_view item_id, const Persona& persona) const {
    const auto& s = fit_.structure;
    PersonaPrediction out;
    const int t = lookup(OrdinalFactor::tweet, std::string(item_id));
    const int g = lookup(OrdinalFactor::gender, std::string(to_string(persona.gender)));
    const int a = lookup(OrdinalFactor::age, persona.age_band);
    const int st = lookup(OrdinalFactor::state, persona.state);
    const int pa = lookup(OrdinalFactor::party, std::string(to_string(persona.party)));
    std::vector<int> contexts, interactions;
    double w = 1.0;
    if (t >= 0) {
        contexts = s.item_contexts[static_cast<std::size_t>(t)];
        if (s.combination == ContextCombination::mean && !contexts.empty())
            w = 1.0 / static_cast<double>(contexts.size());
        for (int z : contexts) {
            const int k = lookup(OrdinalFactor::context_party,
                                 OrdinalStructure::interaction_label(s.levels[1][static_cast<std::size_t>(z)],
                                                                     persona.party));
            if (k < 0) out.unseen_level = true;
            interactions.push_back(k);
        }
    }
    out.unseen_level = out.unseen_level || t < 0 || g < 0 || a < 0 || st < 0 || pa < 0;

    auto at = [](const std::vector<double>& v, int i) { return i < 0 ? 0.0 : v[static_cast<std::size_t>(i)]; };
    double total = 0.0;
    for (std::size_t d : draw_index_) {
        const OrdinalParams& p = fit_.draws[d];
        double mu = at(p.effects[0], t) + at(p.effects[2], g) + at(p.effects[3], a) + at(p.effects[4], st) +
                    at(p.effects[5], pa);
        for (int z : contexts) mu += w * at(p.effects[1], z);
        for (int k : interactions) mu += w * at(p.effects[6], k);
        total += expected_rating(mu, p.alpha);
    }
    out.value = total / static_cast<double>(draw_index_.size());
    return out;
}

}  // namespace crowdmrp
