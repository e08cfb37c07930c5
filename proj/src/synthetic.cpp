#include "crowdmrp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "crowdmrp/math.hpp"
#include "crowdmrp/rng.hpp"

namespace crowdmrp {

namespace {

std::string numbered(const char* prefix, int i, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%0*d", prefix, width, i);
    return buf;
}

std::vector<std::string> mix_states(const DemographicMix& mix) {
    if (!mix.states.empty()) return mix.states;
    return {state_codes().begin(), state_codes().end()};
}

void check_mix(const DemographicMix& mix) {
    if (mix.age_bands.empty() || mix.age_bands.size() != mix.age_probs.size())
        throw ValidationError("synthetic mix: one probability per age band is required");
    if (!mix.state_probs.empty() && mix.state_probs.size() != mix_states(mix).size())
        throw ValidationError("synthetic mix: one probability per state is required");
    if (!(mix.female_share >= 0.0 && mix.female_share <= 1.0))
        throw ValidationError("synthetic mix: female share must lie in [0, 1]");
}

// Centred effects whose sample sd equals sigma exactly.
std::vector<double> scaled_effects(Rng& rng, std::size_t k, double sigma) {
    std::vector<double> v(k, 0.0);
    if (k < 2 || sigma <= 0.0) return v;
    std::normal_distribution<double> n01;
    for (auto& x : v) x = n01(rng);
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(k);
    double ss = 0.0;
    for (auto& x : v) {
        x -= m;
        ss += x * x;
    }
    const double sd = std::sqrt(ss / static_cast<double>(k - 1));
    for (auto& x : v) x *= sigma / sd;
    return v;
}

struct Demographics {
    Gender gender;
    std::string age_band;
    std::string state;
    Party party;
};

class DemographicSampler {
public:
    explicit DemographicSampler(const DemographicMix& mix)
        : mix_(mix),
          states_(mix_states(mix)),
          age_(mix.age_probs.begin(), mix.age_probs.end()),
          party_(mix.party_probs.begin(), mix.party_probs.end()) {
        if (mix.state_probs.empty()) {
            std::vector<double> w(states_.size(), 1.0);
            state_ = std::discrete_distribution<std::size_t>(w.begin(), w.end());
        } else {
            state_ = std::discrete_distribution<std::size_t>(mix.state_probs.begin(), mix.state_probs.end());
        }
    }

    Demographics draw(Rng& rng) {
        Demographics d;
        d.gender = std::bernoulli_distribution(mix_.female_share)(rng) ? Gender::female : Gender::male;
        d.age_band = mix_.age_bands[age_(rng)];
        d.state = states_[state_(rng)];
        d.party = static_cast<Party>(party_(rng));
        return d;
    }

private:
    const DemographicMix& mix_;
    std::vector<std::string> states_;
    std::discrete_distribution<std::size_t> age_, state_, party_;
};

int poisson_at_least_one(Rng& rng, double mean) {
    std::poisson_distribution<int> p(mean);
    return std::max(1, p(rng));
}

}  // namespace

SyntheticOrdinalData generate_ordinal_dataset(const SyntheticOrdinalConfig& cfg) {
    if (cfg.raters < 1 || cfg.items < 1 || cfg.annotations < 1 || cfg.annotations_per_item < 0 ||
        cfg.annotations_per_item > cfg.annotations || !(cfg.assessments_per_item > 0.0))
        throw ValidationError("synthetic ordinal config: counts must be positive");
    check_mix(cfg.mix);
    const auto& alpha = cfg.truth.alpha;
    if (!(alpha[0] < alpha[1] && alpha[1] < alpha[2])) throw ValidationError("synthetic thresholds must increase");

    SyntheticOrdinalData out;
    Rng rng = make_rng(cfg.seed, "synthetic-ordinal");
    DemographicSampler sampler(cfg.mix);
    std::uniform_real_distribution<double> unit;

    for (int i = 0; i < cfg.raters; ++i) {
        const Demographics d = sampler.draw(rng);
        Rater r;
        r.id = numbered("r", i + 1, 5);
        r.gender = d.gender;
        r.age_band = d.age_band;
        r.state = d.state;
        r.party = d.party;
        const double u = unit(rng);
        if (d.party == Party::democrat) r.party_score = -(0.4 + 0.6 * u);
        else if (d.party == Party::republican) r.party_score = 0.4 + 0.6 * u;
        else r.party_score = -0.2 + 0.4 * u;
        r.zip = numbered("", 10000 + i, 5);
        out.raters.push_back(std::move(r));
    }

    std::vector<std::string> contexts;
    for (int z = 0; z < cfg.annotations; ++z) contexts.push_back(numbered("ctx", z + 1, 2));
    for (int t = 0; t < cfg.items; ++t) {
        Item it;
        it.id = numbered("t", t + 1, 5);
        std::vector<std::size_t> pick(contexts.size());
        std::iota(pick.begin(), pick.end(), 0);
        for (int k = 0; k < cfg.annotations_per_item; ++k) {
            std::uniform_int_distribution<std::size_t> u(static_cast<std::size_t>(k), pick.size() - 1);
            std::swap(pick[static_cast<std::size_t>(k)], pick[u(rng)]);
            it.annotations.push_back(contexts[pick[static_cast<std::size_t>(k)]]);
        }
        std::sort(it.annotations.begin(), it.annotations.end());
        out.items.push_back(std::move(it));
    }

    auto& lv = out.structure.levels;
    for (const auto& it : out.items) lv[0].push_back(it.id);
    lv[1] = contexts;
    lv[2] = {"male", "female"};
    lv[3] = cfg.mix.age_bands;
    lv[4] = mix_states(cfg.mix);
    lv[5] = {"democrat", "republican", "neutral"};
    for (const auto& z : contexts)
        for (Party p : {Party::democrat, Party::republican, Party::neutral})
            lv[6].push_back(OrdinalStructure::interaction_label(z, p));
    for (const auto& it : out.items) {
        std::vector<int> idx;
        for (const auto& z : it.annotations) idx.push_back(out.structure.find(OrdinalFactor::context, z));
        out.structure.item_contexts.push_back(std::move(idx));
    }

    out.truth.alpha = alpha;
    for (std::size_t f = 0; f < kOrdinalFactors; ++f) {
        const double sigma = cfg.truth.scales[f];
        out.truth.scales[f] = sigma;
        if (cfg.truth.fixed[f]) {
            if (cfg.truth.fixed[f]->size() != lv[f].size())
                throw ValidationError("fixed effects for " + std::string(factor_name(static_cast<OrdinalFactor>(f))) +
                                      " need " + std::to_string(lv[f].size()) + " values");
            out.truth.effects[f] = *cfg.truth.fixed[f];
        } else {
            out.truth.effects[f] = scaled_effects(rng, lv[f].size(), sigma);
        }
    }
    if (cfg.truth.polarization > 0.0 && !cfg.truth.fixed[6]) {
        std::normal_distribution<double> pol(0.0, cfg.truth.polarization);
        auto& cp = out.truth.effects[6];
        for (std::size_t z = 0; z < contexts.size(); ++z) {
            const double p = pol(rng);
            cp[3 * z + 0] = p;
            cp[3 * z + 1] = -p;
            cp[3 * z + 2] = 0.0;
        }
    }

    std::vector<std::size_t> order(out.raters.size());
    for (std::size_t t = 0; t < out.items.size(); ++t) {
        const int n = std::min(poisson_at_least_one(rng, cfg.assessments_per_item), cfg.raters);
        std::iota(order.begin(), order.end(), 0);
        for (int k = 0; k < n; ++k) {
            std::uniform_int_distribution<std::size_t> u(static_cast<std::size_t>(k), order.size() - 1);
            std::swap(order[static_cast<std::size_t>(k)], order[u(rng)]);
        }
        std::vector<std::size_t> chosen(order.begin(), order.begin() + n);
        std::sort(chosen.begin(), chosen.end());
        for (std::size_t ri : chosen) {
            const Rater& r = out.raters[ri];
            const auto& e = out.truth.effects;
            const std::size_t party = static_cast<std::size_t>(r.party);
            double mu = e[0][t];
            for (int z : out.structure.item_contexts[t]) {
                mu += e[1][static_cast<std::size_t>(z)];
                mu += e[6][3 * static_cast<std::size_t>(z) + party];
            }
            mu += e[2][r.gender == Gender::male ? 0 : 1];
            mu += e[3][static_cast<std::size_t>(out.structure.find(OrdinalFactor::age, r.age_band))];
            mu += e[4][static_cast<std::size_t>(out.structure.find(OrdinalFactor::state, r.state))];
            mu += e[5][party];
            const auto pi = cumulative_probs(mu, alpha);
            std::discrete_distribution<int> cat(pi.begin(), pi.end());
            out.assessments.push_back({r.id, out.items[t].id, cat(rng) + 1});
        }
    }
    return out;
}

double truth_effect(const SyntheticOrdinalData& d, OrdinalFactor f, std::string_view label) {
    const int k = d.structure.find(f, label);
    return k < 0 ? 0.0 : d.truth.effects[static_cast<std::size_t>(f)][static_cast<std::size_t>(k)];
}

std::vector<StatePredictorRow> synthetic_state_predictors(std::uint64_t seed) {
    Rng rng = make_rng(seed, "synthetic-state-predictors");
    std::uniform_real_distribution<double> white(0.35, 0.95), college(0.2, 0.5);
    std::lognormal_distribution<double> density(4.5, 1.2);
    std::vector<StatePredictorRow> rows;
    for (auto code : state_codes())
        rows.push_back({std::string(code), white(rng), college(rng), density(rng)});
    return rows;
}

SyntheticSharingData generate_sharing_dataset(const SyntheticSharingConfig& cfg) {
    if (cfg.users < 1 || cfg.item_pool < 1 || !(cfg.shares_per_user > 0.0))
        throw ValidationError("synthetic sharing config: counts must be positive");
    check_mix(cfg.mix);
    SyntheticSharingData out;
    out.predictors = synthetic_state_predictors(cfg.seed);
    const StatePredictors preds = StatePredictors::standardize(out.predictors);

    // Sorted level order, matching the fitted structure.
    auto& lv = out.structure.levels;
    lv[0] = {"female", "male"};
    lv[1] = cfg.mix.age_bands;
    std::sort(lv[1].begin(), lv[1].end());
    lv[2] = {"democrat", "neutral", "republican"};
    lv[3] = mix_states(cfg.mix);
    std::sort(lv[3].begin(), lv[3].end());

    Rng rng = make_rng(cfg.seed, "synthetic-sharing");
    out.truth.alpha = cfg.truth.alpha;
    out.truth.gamma = cfg.truth.gamma;
    for (std::size_t f = 0; f < kSharingFactors; ++f) {
        out.truth.scales[f] = cfg.truth.scales[f];
        if (cfg.truth.fixed[f]) {
            if (cfg.truth.fixed[f]->size() != lv[f].size())
                throw ValidationError("fixed effects for " + std::string(factor_name(static_cast<SharingFactor>(f))) +
                                      " need " + std::to_string(lv[f].size()) + " values");
            out.truth.effects[f] = *cfg.truth.fixed[f];
        } else {
            out.truth.effects[f] = scaled_effects(rng, lv[f].size(), cfg.truth.scales[f]);
        }
    }

    DemographicSampler sampler(cfg.mix);
    std::uniform_int_distribution<int> item(1, cfg.item_pool);
    for (int i = 0; i < cfg.users; ++i) {
        const Demographics d = sampler.draw(rng);
        SharerObservation o;
        o.user_id = numbered("u", i + 1, 6);
        o.gender = d.gender;
        o.age_band = d.age_band;
        o.state = d.state;
        o.party = d.party;
        const auto& x = preds.z[static_cast<std::size_t>(preds.find(d.state))];
        const double theta = predict_cell_theta(out.truth, out.structure, {d.gender, d.age_band, d.state, d.party}, x);
        std::bernoulli_distribution share(theta);
        const int n = poisson_at_least_one(rng, cfg.shares_per_user);
        for (int k = 0; k < n; ++k) {
            o.item_ids.push_back(numbered("t", item(rng), 5));
            o.outcomes.push_back(share(rng) ? 1 : 0);
        }
        out.observations.push_back(std::move(o));
    }
    return out;
}

StratificationFrame synthetic_frame(const DemographicMix& mix, std::uint64_t seed, bool with_party) {
    check_mix(mix);
    Rng rng = make_rng(seed, "synthetic-frame");
    std::lognormal_distribution<double> pop(std::log(5e6), 0.8);
    std::uniform_real_distribution<double> jitter(0.8, 1.25);
    const auto states = mix_states(mix);
    StratificationFrame f;
    f.label = with_party ? "synthetic" : "synthetic-demographic";
    for (std::size_t s = 0; s < states.size(); ++s) {
        const double state_pop = pop(rng);
        for (Gender g : {Gender::male, Gender::female}) {
            const double pg = g == Gender::female ? mix.female_share : 1.0 - mix.female_share;
            for (std::size_t a = 0; a < mix.age_bands.size(); ++a) {
                const double base = state_pop * pg * mix.age_probs[a] * jitter(rng);
                if (!with_party) {
                    f.cells.push_back({g, mix.age_bands[a], states[s], Party::neutral, base});
                    continue;
                }
                for (std::size_t j = 0; j < 3; ++j)
                    f.cells.push_back({g, mix.age_bands[a], states[s], static_cast<Party>(j), base * mix.party_probs[j]});
            }
        }
    }
    return f;
}

PartyShareTable synthetic_party_shares(const DemographicMix& mix, std::uint64_t seed) {
    check_mix(mix);
    Rng rng = make_rng(seed, "synthetic-party-shares");
    std::uniform_real_distribution<double> jitter(0.7, 1.3);
    PartyShareTable t;
    for (const auto& s : mix_states(mix))
        for (Gender g : {Gender::male, Gender::female})
            for (const auto& a : mix.age_bands) {
                std::array<double, 3> v{};
                double total = 0.0;
                for (std::size_t j = 0; j < 3; ++j) total += v[j] = mix.party_probs[j] * jitter(rng);
                for (auto& x : v) x /= total;
                v[2] = 1.0 - v[0] - v[1];
                t[demographic_key(g, a, s)] = v;
            }
    return t;
}

MarginTargets synthetic_margin_targets(const DemographicMix& mix) {
    check_mix(mix);
    MarginTargets m;
    m.factors.push_back({"gender", {{"male", 1.0 - mix.female_share}, {"female", mix.female_share}}});
    const double age_total = std::accumulate(mix.age_probs.begin(), mix.age_probs.end(), 0.0);
    std::vector<std::pair<std::string, double>> ages;
    for (std::size_t a = 0; a < mix.age_bands.size(); ++a) ages.emplace_back(mix.age_bands[a], mix.age_probs[a] / age_total);
    m.factors.push_back({"age_band", ages});
    const double pt = mix.party_probs[0] + mix.party_probs[1] + mix.party_probs[2];
    m.factors.push_back({"party",
                         {{"democrat", mix.party_probs[0] / pt},
                          {"republican", mix.party_probs[1] / pt},
                          {"neutral", mix.party_probs[2] / pt}}});
    return m;
}

}  // namespace crowdmrp
