#include <doctest.h>

#include <cmath>
#include <map>

#include "crowdmrp/synthetic.hpp"
#include "crowdmrp/veracity.hpp"
#include "oracle.hpp"

using namespace crowdmrp;

TEST_CASE("zero-truth category frequencies") {
    SyntheticOrdinalConfig cfg;
    cfg.truth.scales.fill(0.0);
    cfg.seed = 4;
    const auto d = generate_ordinal_dataset(cfg);
    const auto pi = oracle::ordinal_probs(0.0, {-1, 0, 1});
    std::array<double, 4> count{};
    for (const auto& a : d.assessments) count[static_cast<std::size_t>(a.rating - 1)] += 1;
    const double n = static_cast<double>(d.assessments.size());
    for (std::size_t c = 0; c < 4; ++c) {
        const double se = std::sqrt(pi[c] * (1 - pi[c]) / n);
        CHECK(std::abs(count[c] / n - pi[c]) < 3 * se);
    }
}

TEST_CASE("ordinal generator shape and determinism") {
    SyntheticOrdinalConfig cfg;
    cfg.seed = 10;
    const auto a = generate_ordinal_dataset(cfg);
    const auto b = generate_ordinal_dataset(cfg);
    CHECK(a.raters.size() == 200);
    CHECK(a.items.size() == 300);
    REQUIRE(a.assessments.size() == b.assessments.size());
    for (std::size_t i = 0; i < a.assessments.size(); ++i) {
        CHECK(a.assessments[i].rating == b.assessments[i].rating);
        CHECK(a.assessments[i].rater_id == b.assessments[i].rater_id);
    }
    const double per_item = static_cast<double>(a.assessments.size()) / 300.0;
    CHECK(per_item > 7.0);
    CHECK(per_item < 9.0);
    // Party sd matches the configured scale exactly.
    const auto& party = a.truth.effect(OrdinalFactor::party);
    double m = (party[0] + party[1] + party[2]) / 3, ss = 0;
    for (double v : party) ss += (v - m) * (v - m);
    CHECK(std::sqrt(ss / 2) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(truth_effect(a, OrdinalFactor::party, "republican") == party[1]);
}

TEST_CASE("strong polarization anti-correlates naive partisan scores") {
    SyntheticOrdinalConfig cfg;
    cfg.items = 300;
    cfg.raters = 400;
    cfg.assessments_per_item = 20;
    cfg.annotations = 12;
    cfg.truth.scales[0] = 0.2;
    cfg.truth.polarization = 2.0;
    cfg.seed = 6;
    const auto d = generate_ordinal_dataset(cfg);
    std::map<std::string, const Rater*> by_id;
    for (const auto& r : d.raters) by_id[r.id] = &r;
    std::map<std::string, std::array<std::vector<int>, 2>> split;
    for (const auto& a : d.assessments) {
        const Party p = by_id[a.rater_id]->party;
        if (p != Party::neutral) split[a.item_id][static_cast<std::size_t>(p)].push_back(a.rating);
    }
    std::vector<double> dem, rep;
    for (const auto& [id, g] : split) {
        if (g[0].empty() || g[1].empty()) continue;
        dem.push_back(*naive_sample(id, g[0]).value);
        rep.push_back(*naive_sample(id, g[1]).value);
    }
    CHECK(oracle::textbook_pearson(dem, rep) < 0.0);
}

TEST_CASE("sharing generator") {
    SUBCASE("theta 0.5 everywhere") {
        SyntheticSharingConfig cfg;
        cfg.truth.alpha = 0.0;
        cfg.truth.gamma = {0, 0, 0};
        cfg.truth.scales.fill(0.0);
        cfg.seed = 2;
        const auto d = generate_sharing_dataset(cfg);
        double n = 0, k = 0;
        for (const auto& o : d.observations)
            for (int y : o.outcomes) {
                n += 1;
                k += y;
            }
        CHECK(std::abs(k / n - 0.5) < 3 * std::sqrt(0.25 / n));
    }
    SUBCASE("democrat effect -0.5 lowers the democrat rate") {
        SyntheticSharingConfig cfg;
        cfg.truth.fixed[2] = std::vector<double>{-0.5, 0.0, 0.0};
        cfg.seed = 3;
        const auto d = generate_sharing_dataset(cfg);
        std::array<double, 3> n{}, k{};
        for (const auto& o : d.observations)
            for (int y : o.outcomes) {
                n[static_cast<std::size_t>(o.party)] += 1;
                k[static_cast<std::size_t>(o.party)] += y;
            }
        CHECK(k[0] / n[0] < k[1] / n[1]);
    }
    SUBCASE("determinism") {
        SyntheticSharingConfig cfg;
        cfg.users = 300;
        const auto a = generate_sharing_dataset(cfg);
        const auto b = generate_sharing_dataset(cfg);
        REQUIRE(a.observations.size() == b.observations.size());
        for (std::size_t i = 0; i < a.observations.size(); ++i) CHECK(a.observations[i].outcomes == b.observations[i].outcomes);
    }
}

TEST_CASE("frames and margins") {
    DemographicMix mix;
    const auto f = synthetic_frame(mix, 1);
    CHECK(f.cells.size() == 51 * 2 * 4 * 3);
    CHECK_NOTHROW(f.validate());
    const auto shares = synthetic_party_shares(mix, 1);
    CHECK(shares.size() == 51 * 2 * 4);
    for (const auto& [k, s] : shares) CHECK(std::abs(s[0] + s[1] + s[2] - 1.0) < 1e-9);
    CHECK_NOTHROW(synthetic_margin_targets(mix).validate());
}

TEST_CASE("exhaustive balanced oracle") {
    CHECK(oracle::exhaustive_balanced_expectation({1, 3}, {2, 2, 4}) == doctest::Approx(7.0 / 3.0));
    CHECK(oracle::exhaustive_balanced_expectation({1, 3}, {2, 4}) == doctest::Approx(2.5));
    CHECK(oracle::exhaustive_balanced_expectation({3, 3, 3, 3}, {1, 2}) == doctest::Approx(0.5 * (3 + 1.5)));
    CHECK_THROWS(oracle::exhaustive_balanced_expectation(std::vector<int>(13, 1), {2}));
}
