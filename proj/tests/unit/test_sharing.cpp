#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "crowdmrp/sharing.hpp"
#include "crowdmrp/synthetic.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace crowdmrp;

namespace {

SharerObservation user(std::string id, std::string state, std::vector<int> outcomes, Party p = Party::democrat) {
    SharerObservation o;
    o.user_id = std::move(id);
    o.age_band = "19-29";
    o.state = std::move(state);
    o.party = p;
    for (std::size_t k = 0; k < outcomes.size(); ++k) o.item_ids.push_back("t" + std::to_string(k));
    o.outcomes = std::move(outcomes);
    return o;
}

SyntheticSharingData sharing_data(std::uint64_t seed, int users = 2000) {
    SyntheticSharingConfig cfg;
    cfg.users = users;
    cfg.seed = seed;
    return generate_sharing_dataset(cfg);
}

}  // namespace

TEST_CASE("state predictors are standardized") {
    const auto p = StatePredictors::standardize(synthetic_state_predictors(3));
    REQUIRE(p.states.size() == 51);
    CHECK(std::is_sorted(p.states.begin(), p.states.end()));
    for (std::size_t k = 0; k < kStatePredictors; ++k) {
        double s = 0.0, ss = 0.0;
        for (const auto& z : p.z) s += z[k];
        const double m = s / 51.0;
        for (const auto& z : p.z) ss += (z[k] - m) * (z[k] - m);
        CHECK(std::abs(m) < 1e-9);
        CHECK(std::abs(std::sqrt(ss / 50.0) - 1.0) < 1e-9);
    }
    auto rows = synthetic_state_predictors(3);
    rows[0].white_share = 1.5;
    CHECK_THROWS(StatePredictors::standardize(rows));
}

TEST_CASE("sharing design rows") {
    const auto preds = StatePredictors::standardize(synthetic_state_predictors(1));
    SUBCASE("three shares give three rows with one cell") {
        auto d = build_sharing_design({user("u1", "CA", {1, 0, 1})}, preds);
        CHECK(d.rows() == 3);
        CHECK(d.row_cell[0] == d.row_cell[1]);
        CHECK(d.row_cell[1] == d.row_cell[2]);
        CHECK(d.cell_trials[0] == 3.0);
        CHECK(d.cell_successes[0] == 2.0);
    }
    SUBCASE("user without shares dropped with a warning") {
        auto d = build_sharing_design({user("u1", "CA", {1}), user("u2", "NY", {})}, preds);
        CHECK(d.rows() == 1);
        CHECK(d.warnings.size() == 1);
    }
    SUBCASE("unknown state throws") { CHECK_THROWS(build_sharing_design({user("u1", "ZZ", {1})}, preds)); }
    SUBCASE("bad outcome throws") { CHECK_THROWS(build_sharing_design({user("u1", "CA", {2})}, preds)); }
}

TEST_CASE("sharing log density") {
    const auto data = sharing_data(5, 60);
    const auto preds = StatePredictors::standardize(data.predictors);
    const auto d = build_sharing_design(data.observations, preds);
    const auto od = testsupport::to_oracle(d);

    SUBCASE("all zero gives n log 0.5") {
        SharingModel m(d, Parameterization::centered);
        const auto p = SharingParams::zeros(d.structure);
        CHECK(m.log_likelihood(p) == doctest::Approx(static_cast<double>(d.rows()) * std::log(0.5)).epsilon(1e-12));
    }
    SUBCASE("oracle agreement and gradients") {
        std::mt19937_64 rng(4);
        for (auto param : {Parameterization::centered, Parameterization::non_centered}) {
            SharingModel m(d, param);
            for (int k = 0; k < 10; ++k) {
                const auto u = testsupport::random_point(m.dimension(), rng);
                const double a = m.log_density(u);
                const double b = oracle::sharing_log_density(od, u, param == Parameterization::non_centered);
                CHECK(std::abs(a - b) < 1e-10 * std::max(1.0, std::abs(b)));
            }
            const auto u = testsupport::random_point(m.dimension(), rng);
            std::vector<double> g(u.size());
            m.log_density(u, g);
            const auto fd = oracle::central_difference([&](const std::vector<double>& x) { return m.log_density(x); }, u);
            for (std::size_t i = 0; i < g.size(); ++i)
                CHECK(std::abs(g[i] - fd[i]) / std::max(1.0, std::abs(fd[i])) < 1e-5);
        }
    }
    SUBCASE("row order does not change the oracle") {
        auto shuffled = od;
        std::mt19937_64 rng(2);
        std::shuffle(shuffled.rows.begin(), shuffled.rows.end(), rng);
        SharingModel m(d, Parameterization::centered);
        const auto u = testsupport::random_point(m.dimension(), rng);
        CHECK(oracle::sharing_log_density(od, u, false) == doctest::Approx(oracle::sharing_log_density(shuffled, u, false)).epsilon(1e-13));
    }
}

TEST_CASE("sharing MAP recovery") {
    SUBCASE("democrat effect -0.5") {
        SyntheticSharingConfig cfg;
        cfg.users = 2000;
        cfg.seed = 8;
        cfg.truth.fixed[2] = std::vector<double>{-0.5, 0.0, 0.5};
        const auto data = generate_sharing_dataset(cfg);
        const auto d = build_sharing_design(data.observations, StatePredictors::standardize(data.predictors));
        CHECK(d.rows() >= 20000);
        const auto fit = fit_sharing_map(d);
        const auto& p = fit.draws.at(0);
        CHECK(std::abs(p.effect(SharingFactor::party)[0] - (-0.5)) < 0.2);
    }
    SUBCASE("zero truth") {
        SyntheticSharingConfig cfg;
        cfg.users = 2000;
        cfg.seed = 9;
        cfg.truth.alpha = 0.0;
        cfg.truth.gamma = {0, 0, 0};
        cfg.truth.scales.fill(0.0);
        const auto data = generate_sharing_dataset(cfg);
        const auto d = build_sharing_design(data.observations, StatePredictors::standardize(data.predictors));
        const auto fit = fit_sharing_map(d);
        const auto& p = fit.draws.at(0);
        for (const auto& e : p.effects)
            for (double v : e) CHECK(std::abs(v) < 0.1);
    }
}

TEST_CASE("sharing fit determinism") {
    const auto data = sharing_data(3, 200);
    const auto d = build_sharing_design(data.observations, StatePredictors::standardize(data.predictors));
    SamplerConfig sc;
    sc.chains = 2;
    sc.warmup = 60;
    sc.draws = 30;
    sc.seed = 5;
    const auto a = sample_sharing_posterior(d, sc);
    const auto b = sample_sharing_posterior(d, sc);
    CHECK(sharing_parameter_values(a.draws[45]) == sharing_parameter_values(b.draws[45]));
}

TEST_CASE("cell predictions") {
    SharingStructure s;
    s.levels[0] = {"female", "male"};
    s.levels[1] = {"19-29"};
    s.levels[2] = {"democrat", "neutral", "republican"};
    s.levels[3] = {"CA"};
    SharingParams p = SharingParams::zeros(s);
    const std::array<double, 3> x{0.3, -1.0, 2.0};
    const Persona who{Gender::male, "19-29", "CA", Party::democrat};
    CHECK(predict_cell_theta(p, s, who, x) == doctest::Approx(0.5));
    p.alpha = -2.63;
    CHECK(std::round(predict_cell_theta(p, s, who, x) * 1000) / 1000 == doctest::Approx(0.067));
    p.alpha = -1.83;
    CHECK(std::round(predict_cell_theta(p, s, who, x) * 1000) / 1000 == doctest::Approx(0.138));

    // Raising one level's effect raises that cell's theta.
    p.alpha = -1.0;
    const double before = predict_cell_theta(p, s, who, x);
    p.effect(SharingFactor::party)[0] += 0.1;
    CHECK(predict_cell_theta(p, s, who, x) > before);
}

TEST_CASE("poststratify") {
    StratificationFrame f;
    f.cells = {{Gender::male, "19-29", "CA", Party::democrat, 3.0}, {Gender::female, "19-29", "CA", Party::democrat, 1.0}};
    const std::vector<double> theta = {0.2, 0.6};
    const auto r = poststratify(theta, f);
    REQUIRE(r.size() == 1);
    CHECK(r[0].second == doctest::Approx(0.3).epsilon(1e-14));

    f.cells[0].weight = f.cells[1].weight = 1.0;
    const std::vector<double> c = {0.4, 0.4};
    CHECK(poststratify(c, f)[0].second == doctest::Approx(0.4).epsilon(1e-14));

    f.cells[0].weight = f.cells[1].weight = 0.0;
    CHECK_THROWS(poststratify(c, f));
}

TEST_CASE("odds change and expected sharers") {
    CHECK(odds_change(-0.85) == doctest::Approx(-57.3).epsilon(0.001));
    CHECK(odds_change(0.0) == 0.0);
    CHECK(odds_change(0.16) == doctest::Approx(17.35).epsilon(0.001));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int i = 0; i < 1000; ++i) {
        const double b = u(rng);
        CHECK(std::abs(odds_change_inverse(odds_change(b)) - b) < 1e-12);
    }
    CHECK(expected_sharers(0.05, 1e6) == 50000);
    CHECK(expected_sharers(0.0, 1e6) == 0);

    // Averaging per-draw counts matches the count of the averaged theta within rounding.
    std::uniform_real_distribution<double> t(0.01, 0.3);
    double mean_theta = 0.0, mean_count = 0.0;
    for (int i = 0; i < 400; ++i) {
        const double th = t(rng);
        mean_theta += th / 400.0;
        mean_count += static_cast<double>(expected_sharers(th, 2.5e6)) / 400.0;
    }
    CHECK(std::abs(mean_count - static_cast<double>(expected_sharers(mean_theta, 2.5e6))) <= 1.0);
}

TEST_CASE("coefficient rows") {
    const auto r = coefficient_row("Party: Democrat", -0.85, -0.28, -0.04, 0.02);
    CHECK(r.odds_change_q10 == doctest::Approx(-57.26).epsilon(0.001));
    CHECK(r.odds_change_q90 == doctest::Approx(-3.92).epsilon(0.001));
}

TEST_CASE("frame party extension") {
    StratificationFrame f;
    f.cells = {{Gender::male, "19-29", "CA", Party::neutral, 90.0}, {Gender::female, "40+", "NY", Party::neutral, 30.0}};
    PartyShareTable shares;
    shares[demographic_key(Gender::male, "19-29", "CA")] = {1.0, 0.0, 0.0};
    shares[demographic_key(Gender::female, "40+", "NY")] = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    const auto e = extend_frame_with_party(f, shares);
    CHECK(e.cells.size() == 4);
    CHECK(std::abs(e.total_weight() - 120.0) < 1e-9);
    for (const auto& c : e.cells)
        if (c.state == "NY") CHECK(c.weight == doctest::Approx(10.0));

    shares.erase(demographic_key(Gender::male, "19-29", "CA"));
    CHECK_THROWS(extend_frame_with_party(f, shares));
}
