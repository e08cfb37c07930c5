#include "crowdmrp/sharing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <tuple>

#include "crowdmrp/math.hpp"
#include "crowdmrp/parallel.hpp"
#include "crowdmrp/rng.hpp"

namespace crowdmrp {

std::string_view predictor_name(std::size_t k) {
    static constexpr std::array<std::string_view, kStatePredictors> names = {"white", "college", "density"};
    return names.at(k);
}

std::string_view factor_name(SharingFactor f) {
    static constexpr std::array<std::string_view, kSharingFactors> names = {"gender", "age", "party", "state"};
    return names[static_cast<std::size_t>(f)];
}

StatePredictors StatePredictors::standardize(std::vector<StatePredictorRow> rows) {
    if (rows.size() < 2) throw ValidationError("state predictors: need at least 2 states");
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.state < b.state; });
    StatePredictors out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (!is_state_code(r.state)) throw ValidationError("state predictors: unknown state '" + r.state + "'");
        if (i > 0 && rows[i - 1].state == r.state)
            throw ValidationError("state predictors: duplicate state '" + r.state + "'");
        if (!(r.white_share >= 0.0 && r.white_share <= 1.0) || !(r.college_share >= 0.0 && r.college_share <= 1.0))
            throw ValidationError("state predictors: shares must lie in [0, 1] for '" + r.state + "'");
        if (!std::isfinite(r.pop_density) || r.pop_density < 0.0)
            throw ValidationError("state predictors: invalid density for '" + r.state + "'");
        out.states.push_back(r.state);
        out.raw.push_back({r.white_share, r.college_share, r.pop_density});
    }
    const double n = static_cast<double>(rows.size());
    for (std::size_t k = 0; k < kStatePredictors; ++k) {
        double m = 0.0;
        for (const auto& x : out.raw) m += x[k];
        m /= n;
        double ss = 0.0;
        for (const auto& x : out.raw) ss += (x[k] - m) * (x[k] - m);
        const double sd = std::sqrt(ss / (n - 1.0));
        if (!(sd > 0.0))
            throw ValidationError("state predictors: '" + std::string(predictor_name(k)) + "' is constant");
        out.mean[k] = m;
        out.sd[k] = sd;
    }
    out.z.resize(out.raw.size());
    for (std::size_t i = 0; i < out.raw.size(); ++i)
        for (std::size_t k = 0; k < kStatePredictors; ++k) out.z[i][k] = (out.raw[i][k] - out.mean[k]) / out.sd[k];
    return out;
}

int StatePredictors::find(std::string_view state) const {
    auto it = std::lower_bound(states.begin(), states.end(), state);
    return it != states.end() && *it == state ? static_cast<int>(it - states.begin()) : -1;
}

int SharingStructure::find(SharingFactor f, std::string_view label) const {
    const auto& lv = levels[static_cast<std::size_t>(f)];
    auto it = std::lower_bound(lv.begin(), lv.end(), label);
    return it != lv.end() && *it == label ? static_cast<int>(it - lv.begin()) : -1;
}

namespace {

std::array<std::string, kSharingFactors> labels_of(const Persona& p) {
    return {std::string(to_string(p.gender)), p.age_band, std::string(to_string(p.party)), p.state};
}

}  // namespace

SharingDesign build_sharing_design(const std::vector<SharerObservation>& observations,
                                   const StatePredictors& predictors) {
    SharingDesign d;
    d.predictors = predictors;
    std::vector<const SharerObservation*> kept;
    std::set<std::string> seen_users;
    for (const auto& o : observations) {
        if (!seen_users.insert(o.user_id).second)
            throw ValidationError("sharing: duplicate user '" + o.user_id + "'");
        if (o.item_ids.size() != o.outcomes.size())
            throw ValidationError("sharing: user '" + o.user_id + "' has mismatched items and outcomes");
        if (predictors.find(o.state) < 0)
            throw ValidationError("sharing: no predictors for state '" + o.state + "' (user '" + o.user_id + "')");
        for (int y : o.outcomes)
            if (y != 0 && y != 1) throw ValidationError("sharing: outcome must be 0 or 1 (user '" + o.user_id + "')");
        if (o.outcomes.empty()) {
            d.warnings.push_back("user '" + o.user_id + "' has no shares; dropped");
            continue;
        }
        kept.push_back(&o);
    }
    if (kept.empty()) throw ValidationError("sharing: no observations");

    std::array<std::set<std::string>, kSharingFactors> levels;
    for (const auto* o : kept) {
        const auto l = labels_of({o->gender, o->age_band, o->state, o->party});
        for (std::size_t f = 0; f < kSharingFactors; ++f) levels[f].insert(l[f]);
    }
    for (std::size_t f = 0; f < kSharingFactors; ++f)
        d.structure.levels[f].assign(levels[f].begin(), levels[f].end());

    std::map<std::array<int, kSharingFactors>, std::size_t> cell_of;
    for (const auto* o : kept) {
        const auto l = labels_of({o->gender, o->age_band, o->state, o->party});
        std::array<int, kSharingFactors> key{};
        for (std::size_t f = 0; f < kSharingFactors; ++f) key[f] = d.structure.find(static_cast<SharingFactor>(f), l[f]);
        auto [it, fresh] = cell_of.emplace(key, d.cell_trials.size());
        if (fresh) {
            d.cell_levels.push_back(key);
            d.cell_x.push_back(predictors.z[static_cast<std::size_t>(predictors.find(o->state))]);
            d.cell_trials.push_back(0.0);
            d.cell_successes.push_back(0.0);
        }
        for (std::size_t k = 0; k < o->outcomes.size(); ++k) {
            d.row_user.push_back(o->user_id);
            d.row_item.push_back(o->item_ids[k]);
            d.row_outcome.push_back(o->outcomes[k]);
            d.row_cell.push_back(it->second);
            d.cell_trials[it->second] += 1.0;
            d.cell_successes[it->second] += o->outcomes[k];
        }
    }
    return d;
}

SharingParams SharingParams::zeros(const SharingStructure& s) {
    SharingParams p;
    for (std::size_t f = 0; f < kSharingFactors; ++f) {
        p.effects[f].assign(s.levels[f].size(), 0.0);
        p.scales[f] = 1.0;
    }
    return p;
}

SharingModel::SharingModel(const SharingDesign& design, Parameterization param, SharingPriors priors)
    : design_(design), param_(param), priors_(priors) {
    std::size_t offset = 1 + kStatePredictors;
    for (std::size_t f = 0; f < kSharingFactors; ++f) {
        blocks_[f] = {offset, design.structure.levels[f].size()};
        offset = blocks_[f].end();
    }
    dim_ = offset;
}

SharingParams SharingModel::unpack(std::span<const double> u) const {
    SharingParams p;
    p.alpha = u[0];
    for (std::size_t k = 0; k < kStatePredictors; ++k) p.gamma[k] = u[1 + k];
    for (std::size_t f = 0; f < kSharingFactors; ++f) {
        p.effects[f].resize(blocks_[f].size);
        p.scales[f] = pooled_effects(u, blocks_[f], param_, p.effects[f]);
    }
    return p;
}

std::vector<double> SharingModel::pack(const SharingParams& p) const {
    std::vector<double> u(dim_, 0.0);
    u[0] = p.alpha;
    for (std::size_t k = 0; k < kStatePredictors; ++k) u[1 + k] = p.gamma[k];
    for (std::size_t f = 0; f < kSharingFactors; ++f) {
        if (p.effects[f].size() != blocks_[f].size)
            throw ValidationError("effect vector size mismatch for " +
                                  std::string(factor_name(static_cast<SharingFactor>(f))));
        if (!(p.scales[f] > 0.0)) throw ValidationError("scales must be positive");
        pack_pooled(p.effects[f], p.scales[f], blocks_[f], param_, u);
    }
    return u;
}

double SharingModel::cell_eta(const SharingParams& p, std::size_t c) const {
    double eta = p.alpha;
    for (std::size_t f = 0; f < kSharingFactors; ++f)
        eta += p.effects[f][static_cast<std::size_t>(design_.cell_levels[c][f])];
    for (std::size_t k = 0; k < kStatePredictors; ++k) eta += p.gamma[k] * design_.cell_x[c][k];
    return eta;
}

double SharingModel::log_likelihood(const SharingParams& p) const {
    double ll = 0.0;
    for (std::size_t c = 0; c < design_.cells(); ++c) {
        const double eta = cell_eta(p, c);
        const double k = design_.cell_successes[c];
        ll += k * log_logistic(eta) + (design_.cell_trials[c] - k) * log_logistic(-eta);
    }
    return ll;
}

double SharingModel::log_density(std::span<const double> u, std::span<double> grad) const {
    const bool want_grad = !grad.empty();
    if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
    const SharingParams p = unpack(u);

    std::array<std::vector<double>, kSharingFactors> d_theta;
    for (std::size_t f = 0; f < kSharingFactors; ++f) d_theta[f].assign(blocks_[f].size, 0.0);

    double lp = 0.0;
    for (std::size_t c = 0; c < design_.cells(); ++c) {
        const double eta = cell_eta(p, c);
        const double k = design_.cell_successes[c];
        const double n = design_.cell_trials[c];
        lp += k * log_logistic(eta) + (n - k) * log_logistic(-eta);
        if (!want_grad) continue;
        const double d = k - n * logistic(eta);
        grad[0] += d;
        for (std::size_t j = 0; j < kStatePredictors; ++j) grad[1 + j] += d * design_.cell_x[c][j];
        for (std::size_t f = 0; f < kSharingFactors; ++f)
            d_theta[f][static_cast<std::size_t>(design_.cell_levels[c][f])] += d;
    }

    lp += normal_logpdf(p.alpha, priors_.intercept_sd);
    if (want_grad) grad[0] -= p.alpha / (priors_.intercept_sd * priors_.intercept_sd);
    for (std::size_t j = 0; j < kStatePredictors; ++j) {
        lp += normal_logpdf(p.gamma[j], priors_.gamma_sd);
        if (want_grad) grad[1 + j] -= p.gamma[j] / (priors_.gamma_sd * priors_.gamma_sd);
    }
    for (std::size_t f = 0; f < kSharingFactors; ++f)
        lp += pooled_log_prior(u, blocks_[f], param_, priors_.scale_sd, d_theta[f], grad);
    return lp;
}

LogDensityFn SharingModel::as_function() const {
    return [this](std::span<const double> u, std::span<double> g) { return log_density(u, g); };
}

SharingFit fit_sharing_map(const SharingDesign& design, const MapConfig& cfg, const SharingPriors& priors) {
    if (design.cells() == 0) throw ValidationError("sharing MAP: no observations");
    SharingModel model(design, Parameterization::centered, priors);

    SharingParams init = SharingParams::zeros(design.structure);
    const double trials = std::accumulate(design.cell_trials.begin(), design.cell_trials.end(), 0.0);
    const double hits = std::accumulate(design.cell_successes.begin(), design.cell_successes.end(), 0.0);
    init.alpha = logit((hits + 0.5) / (trials + 1.0));
    Rng rng = make_rng(cfg.seed, "sharing-map-init");
    std::normal_distribution<double> jitter(0.0, cfg.init_jitter);
    for (auto& e : init.effects)
        for (auto& v : e) v = jitter(rng);
    for (auto& s : init.scales) s = 1.0;

    std::vector<PooledBlockInfo> blocks;
    for (std::size_t f = 0; f < kSharingFactors; ++f) {
        const auto factor = static_cast<SharingFactor>(f);
        blocks.push_back({model.block(factor), true});
    }
    PooledMapConfig pc;
    pc.optimizer = cfg.optimizer;
    pc.scales = cfg.scales;
    pc.min_scale = cfg.min_scale;
    pc.scale_sd = priors.scale_sd;
    PooledMapResult res = fit_pooled_map(model.as_function(), model.pack(init), blocks, pc);

    SharingFit fit;
    fit.method = "map";
    fit.structure = design.structure;
    fit.predictors = design.predictors;
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
    for (std::size_t f = 0; f < kSharingFactors; ++f)
        if (res.u[model.block(static_cast<SharingFactor>(f)).offset] <= std::log(cfg.min_scale) + 1e-12)
            rep.scales_at_floor.emplace_back(factor_name(static_cast<SharingFactor>(f)));
    fit.map = std::move(rep);
    return fit;
}

SharingFit sample_sharing_posterior(const SharingDesign& design, const SamplerConfig& cfg,
                                    const SharingPriors& priors) {
    if (design.cells() == 0) throw ValidationError("sharing MCMC: no observations");
    if (cfg.chains < 2) throw ValidationError("sharing MCMC: need at least 2 chains");
    SharingModel model(design, Parameterization::non_centered, priors);
    std::vector<ChainResult> chains = sample_nuts(model.as_function(), model.dimension(), cfg);

    SharingFit fit;
    fit.method = "mcmc";
    fit.structure = design.structure;
    fit.predictors = design.predictors;
    fit.priors = priors;
    const auto names = sharing_parameter_names(design.structure);
    std::vector<std::vector<std::vector<double>>> per_param(names.size(),
                                                            std::vector<std::vector<double>>(chains.size()));
    for (std::size_t c = 0; c < chains.size(); ++c) {
        for (const auto& u : chains[c].draws) {
            SharingParams p = model.unpack(u);
            const auto values = sharing_parameter_values(p);
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

std::vector<std::string> sharing_parameter_names(const SharingStructure& s) {
    std::vector<std::string> names{"alpha"};
    for (std::size_t k = 0; k < kStatePredictors; ++k) names.push_back("gamma[" + std::string(predictor_name(k)) + "]");
    for (std::size_t f = 0; f < kSharingFactors; ++f)
        names.push_back("sigma[" + std::string(factor_name(static_cast<SharingFactor>(f))) + "]");
    for (std::size_t f = 0; f < kSharingFactors; ++f)
        for (const auto& l : s.levels[f])
            names.push_back(std::string(factor_name(static_cast<SharingFactor>(f))) + "[" + l + "]");
    return names;
}

std::vector<double> sharing_parameter_values(const SharingParams& p) {
    std::vector<double> v{p.alpha};
    v.insert(v.end(), p.gamma.begin(), p.gamma.end());
    v.insert(v.end(), p.scales.begin(), p.scales.end());
    for (const auto& e : p.effects) v.insert(v.end(), e.begin(), e.end());
    return v;
}

double predict_cell_theta(const SharingParams& p, const SharingStructure& s, const Persona& cell,
                          std::span<const double, kStatePredictors> x) {
    const auto l = labels_of(cell);
    double eta = p.alpha;
    for (std::size_t f = 0; f < kSharingFactors; ++f) {
        const int k = s.find(static_cast<SharingFactor>(f), l[f]);
        if (k >= 0) eta += p.effects[f][static_cast<std::size_t>(k)];
    }
    for (std::size_t k = 0; k < kStatePredictors; ++k) eta += p.gamma[k] * x[k];
    return logistic(eta);
}

std::vector<std::pair<std::string, double>> poststratify(std::span<const double> cell_theta,
                                                         const StratificationFrame& frame) {
    if (cell_theta.size() != frame.cells.size())
        throw ValidationError("poststratify: one theta per frame cell is required");
    std::map<std::string, std::pair<double, double>> acc;
    for (std::size_t h = 0; h < frame.cells.size(); ++h) {
        auto& a = acc[frame.cells[h].state];
        a.first += frame.cells[h].weight * cell_theta[h];
        a.second += frame.cells[h].weight;
    }
    std::vector<std::pair<std::string, double>> out;
    for (const auto& [state, a] : acc) {
        if (!(a.second > 0.0)) throw ValidationError("poststratify: state '" + state + "' has zero weight");
        out.emplace_back(state, a.first / a.second);
    }
    return out;
}

std::vector<StateEstimate> poststratify_states(const SharingFit& fit, const StratificationFrame& frame,
                                               const PoststratConfig& cfg) {
    if (fit.draws.empty()) throw ValidationError("sharing fit has no draws");
    frame.validate();
    std::vector<std::array<double, kStatePredictors>> cell_x(frame.cells.size());
    for (std::size_t h = 0; h < frame.cells.size(); ++h) {
        const int s = fit.predictors.find(frame.cells[h].state);
        if (s < 0) throw ValidationError("poststratify: no predictors for state '" + frame.cells[h].state + "'");
        cell_x[h] = fit.predictors.z[static_cast<std::size_t>(s)];
    }
    auto state_values = [&](const SharingParams& p) {
        std::vector<double> theta(frame.cells.size());
        for (std::size_t h = 0; h < frame.cells.size(); ++h) {
            const auto& c = frame.cells[h];
            theta[h] = predict_cell_theta(p, fit.structure, {c.gender, c.age_band, c.state, c.party}, cell_x[h]);
        }
        return poststratify(theta, frame);
    };

    std::vector<std::size_t> use;
    if (cfg.mode == PoststratMode::drawwise) {
        const std::size_t n = fit.draws.size();
        const std::size_t keep = cfg.max_draws == 0 ? n : std::min(n, cfg.max_draws);
        for (std::size_t k = 0; k < keep; ++k) use.push_back(k * n / keep);
    }

    std::vector<StateEstimate> out;
    if (use.empty() || fit.method == "map") {
        // Plug-in at the posterior mean of the parameters (the point estimate for MAP).
        SharingParams mean = fit.draws.front();
        if (fit.draws.size() > 1) {
            auto values = sharing_parameter_values(fit.draws.front());
            std::fill(values.begin(), values.end(), 0.0);
            for (const auto& d : fit.draws) {
                const auto v = sharing_parameter_values(d);
                for (std::size_t k = 0; k < v.size(); ++k) values[k] += v[k];
            }
            for (auto& v : values) v /= static_cast<double>(fit.draws.size());
            std::size_t k = 0;
            mean.alpha = values[k++];
            for (auto& g : mean.gamma) g = values[k++];
            for (auto& s : mean.scales) s = values[k++];
            for (auto& e : mean.effects)
                for (auto& v : e) v = values[k++];
        }
        for (auto& [state, theta] : state_values(mean)) {
            StateEstimate e;
            e.state = state;
            e.theta = theta;
            out.push_back(std::move(e));
        }
    } else {
        std::vector<std::vector<std::pair<std::string, double>>> per_draw(use.size());
        parallel_for(use.size(), cfg.threads, [&](std::size_t i) { per_draw[i] = state_values(fit.draws[use[i]]); });
        for (std::size_t s = 0; s < per_draw.front().size(); ++s) {
            std::vector<double> v;
            v.reserve(use.size());
            for (const auto& d : per_draw) v.push_back(d[s].second);
            StateEstimate e;
            e.state = per_draw.front()[s].first;
            e.theta = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
            e.q10 = quantile(v, 0.10);
            e.q50 = quantile(v, 0.50);
            e.q90 = quantile(v, 0.90);
            out.push_back(std::move(e));
        }
    }

    std::map<std::string, double> frame_population;
    for (const auto& c : frame.cells) frame_population[c.state] += c.weight;
    for (auto& e : out) {
        const auto& pop = cfg.population.empty() ? frame_population : cfg.population;
        auto it = pop.find(e.state);
        if (it != pop.end() && it->second > 0.0) e.expected_count = expected_sharers(e.theta, it->second);
    }
    return out;
}

double odds_change(double beta) {
    if (!std::isfinite(beta)) throw ValidationError("odds change of a non-finite coefficient");
    return 100.0 * std::expm1(beta);
}

double odds_change_inverse(double pct) { return std::log1p(pct / 100.0); }

long long expected_sharers(double theta, double population) {
    if (!(population > 0.0)) throw ValidationError("expected sharers: population must be positive");
    if (!(theta >= 0.0 && theta <= 1.0)) throw ValidationError("expected sharers: theta must lie in [0, 1]");
    return std::llround(theta * population);
}

CoefficientRow coefficient_row(std::string name, double q10, double q50, double q90,
                               std::optional<double> prob_positive) {
    CoefficientRow r;
    r.name = std::move(name);
    r.q10 = q10;
    r.q50 = q50;
    r.q90 = q90;
    r.odds_change_q10 = odds_change(q10);
    r.odds_change_q90 = odds_change(q90);
    r.prob_positive = prob_positive;
    return r;
}

std::vector<CoefficientRow> coefficient_report(const SharingFit& fit) {
    std::vector<CoefficientRow> rows;
    if (!fit.summaries.empty()) {
        for (const auto& s : fit.summaries) rows.push_back(coefficient_row(s.name, s.q10, s.q50, s.q90, s.prob_positive));
        return rows;
    }
    if (fit.draws.empty()) throw ValidationError("sharing fit has no draws");
    const auto names = sharing_parameter_names(fit.structure);
    const auto values = sharing_parameter_values(fit.draws.front());
    for (std::size_t k = 0; k < names.size(); ++k)
        rows.push_back(coefficient_row(names[k], values[k], values[k], values[k]));
    return rows;
}

std::string demographic_key(Gender g, std::string_view age_band, std::string_view state) {
    return std::string(to_string(g)) + "|" + std::string(age_band) + "|" + std::string(state);
}

StratificationFrame extend_frame_with_party(const StratificationFrame& frame, const PartyShareTable& shares) {
    for (const auto& [key, s] : shares) {
        for (double v : s)
            if (!(v >= 0.0)) throw ValidationError("party shares must be non-negative ('" + key + "')");
        if (std::abs(s[0] + s[1] + s[2] - 1.0) > 1e-9)
            throw ValidationError("party shares must sum to 1 ('" + key + "')");
    }
    StratificationFrame out;
    out.label = frame.label.empty() ? "extended" : frame.label + "+party";
    std::set<std::string> seen;
    static constexpr std::array<Party, 3> parties = {Party::democrat, Party::republican, Party::neutral};
    for (const auto& c : frame.cells) {
        const std::string key = demographic_key(c.gender, c.age_band, c.state);
        if (!seen.insert(key).second) throw ValidationError("frame cell '" + key + "' appears twice");
        auto it = shares.find(key);
        if (it == shares.end()) throw ValidationError("no party shares for '" + key + "'");
        for (std::size_t j = 0; j < parties.size(); ++j) {
            if (it->second[j] <= 0.0) continue;
            PersonaCell p = c;
            p.party = parties[j];
            p.weight = c.weight * it->second[j];
            out.cells.push_back(std::move(p));
        }
    }
    return out;
}

}  // namespace crowdmrp
