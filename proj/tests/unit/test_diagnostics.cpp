#include <doctest.h>

#include <cmath>
#include <random>

#include "crowdmrp/diagnostics.hpp"

using namespace crowdmrp;

TEST_CASE("identical chains give R-hat 1") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n;
    std::vector<double> seq(400);
    for (auto& v : seq) v = n(rng);
    const auto d = diagnose({seq, seq, seq, seq});
    CHECK(std::abs(d.rhat - 1.0) < 1e-9);
    CHECK_FALSE(d.degenerate);
}

TEST_CASE("constant chains at distinct values") {
    const auto d = diagnose({std::vector<double>(100, 0.0), std::vector<double>(100, 1.0)});
    CHECK(d.rhat > 1.05);
    CHECK_FALSE(meets(d, 200));
}

TEST_CASE("degenerate parameter") {
    const auto d = diagnose({std::vector<double>(50, 2.0), std::vector<double>(50, 2.0)});
    CHECK(d.degenerate);
    CHECK(d.rhat == 1.0);
}

TEST_CASE("white noise ESS") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n;
    std::vector<std::vector<double>> chains(4, std::vector<double>(1000));
    for (auto& c : chains)
        for (auto& v : c) v = n(rng);
    const auto d = diagnose(chains);
    CHECK(std::abs(d.ess - 4000.0) / 4000.0 < 0.2);
    CHECK(d.rhat < 1.01);
    CHECK(meets(d, 4000));
}

TEST_CASE("autocorrelated chains have lower ESS") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n;
    std::vector<std::vector<double>> chains(2, std::vector<double>(2000));
    for (auto& c : chains) {
        double x = 0.0;
        for (auto& v : c) v = x = 0.9 * x + n(rng);
    }
    const auto d = diagnose(chains);
    // AR(1) with rho 0.9: ESS / N is about (1 - rho) / (1 + rho).
    const double expected = 4000.0 * 0.1 / 1.9;
    CHECK(d.ess > 0.6 * expected);
    CHECK(d.ess < 1.6 * expected);
}

TEST_CASE("type-7 quantile and summaries") {
    CHECK(quantile({1, 2, 3, 4, 5}, 0.5) == 3.0);
    CHECK(quantile({1, 2, 3, 4}, 0.1) == doctest::Approx(1.3));
    CHECK(quantile({5}, 0.9) == 5.0);
    const auto s = summarize("x", {{-1, 1, 2}, {3, -2, 4}});
    CHECK(s.mean == doctest::Approx(7.0 / 6.0));
    CHECK(s.prob_positive == doctest::Approx(4.0 / 6.0));
}
