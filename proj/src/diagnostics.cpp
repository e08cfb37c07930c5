#include "crowdmrp/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace crowdmrp {

namespace {

double mean_of(std::span<const double> x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

// sqrt(1 + (B/n) / W_n) where W_n is the mean biased within-chain variance and
// B/n the unbiased variance of the chain means.
double psrf(const std::vector<std::span<const double>>& chains, bool& degenerate) {
    const std::size_t m = chains.size();
    std::vector<double> means(m);
    double within = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
        means[c] = mean_of(chains[c]);
        double ss = 0.0;
        for (double v : chains[c]) ss += (v - means[c]) * (v - means[c]);
        within += ss / static_cast<double>(chains[c].size());
    }
    within /= static_cast<double>(m);
    const double grand = mean_of(means);
    double between_over_n = 0.0;
    for (double mu : means) between_over_n += (mu - grand) * (mu - grand);
    between_over_n /= static_cast<double>(m - 1);

    const double scale = std::max(std::abs(grand), 1.0);
    degenerate = within <= 0.0 && between_over_n <= 1e-300 * scale;
    if (degenerate) return 1.0;
    if (within <= 0.0) return std::numeric_limits<double>::infinity();
    return std::sqrt(1.0 + between_over_n / within);
}

// Autocovariance at `lag` with 1/n normalisation.
double autocov(std::span<const double> x, double mean, std::size_t lag) {
    double s = 0.0;
    for (std::size_t t = 0; t + lag < x.size(); ++t) s += (x[t] - mean) * (x[t + lag] - mean);
    return s / static_cast<double>(x.size());
}

double effective_size(const std::vector<std::span<const double>>& chains) {
    const std::size_t m = chains.size();
    const std::size_t n = chains.front().size();
    std::vector<double> means(m);
    for (std::size_t c = 0; c < m; ++c) means[c] = mean_of(chains[c]);

    auto mean_acov = [&](std::size_t lag) {
        double s = 0.0;
        for (std::size_t c = 0; c < m; ++c) s += autocov(chains[c], means[c], lag);
        return s / static_cast<double>(m);
    };
    const double nd = static_cast<double>(n);
    const double w = mean_acov(0) * nd / (nd - 1.0);
    double var_plus = w * (nd - 1.0) / nd;
    if (m > 1) {
        const double grand = mean_of(means);
        double b = 0.0;
        for (double mu : means) b += (mu - grand) * (mu - grand);
        var_plus += b / static_cast<double>(m - 1);
    }
    if (!(var_plus > 0.0)) return static_cast<double>(m * n);

    auto rho = [&](std::size_t lag) { return 1.0 - (w - mean_acov(lag)) / var_plus; };

    // Geyer's initial positive sequence with the monotone adjustment.
    std::vector<double> pairs;
    for (std::size_t t = 0; t + 1 < n; t += 2) {
        const double p = (t == 0 ? 1.0 : rho(t)) + rho(t + 1);
        if (!(p > 0.0)) break;
        if (!pairs.empty()) pairs.push_back(std::min(p, pairs.back()));
        else pairs.push_back(p);
    }
    const double tau = -1.0 + 2.0 * std::accumulate(pairs.begin(), pairs.end(), 0.0);
    const double total = static_cast<double>(m * n);
    const double tau_floor = 1.0 / std::log10(std::max(total, 10.0));
    return total / std::max(tau, tau_floor);
}

}  // namespace

ParameterDiagnostics diagnose(const std::vector<std::vector<double>>& chains) {
    if (chains.size() < 2) throw std::invalid_argument("diagnostics need at least 2 chains");
    const std::size_t n = chains.front().size();
    if (n < 4) throw std::invalid_argument("diagnostics need at least 4 draws per chain");
    for (const auto& c : chains)
        if (c.size() != n) throw std::invalid_argument("chains must have equal length");

    ParameterDiagnostics d;
    std::vector<std::span<const double>> whole;
    for (const auto& c : chains) whole.emplace_back(c);
    bool degenerate = false;
    d.rhat = psrf(whole, degenerate);
    d.degenerate = degenerate;

    std::vector<std::span<const double>> halves;
    const std::size_t half = n / 2;
    for (const auto& c : chains) {
        std::span<const double> s(c);
        halves.push_back(s.subspan(0, half));
        halves.push_back(s.subspan(n - half, half));
    }
    bool split_degenerate = false;
    d.split_rhat = psrf(halves, split_degenerate);
    d.ess = degenerate ? static_cast<double>(chains.size() * n) : effective_size(whole);
    return d;
}

bool meets(const ParameterDiagnostics& d, std::size_t total_draws, const ConvergenceCriteria& c) {
    if (d.degenerate) return true;
    return std::max(d.rhat, d.split_rhat) <= c.max_rhat &&
           d.ess / static_cast<double>(total_draws) >= c.min_ess_ratio;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile of empty sample");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Summary summarize(const std::string& name, const std::vector<std::vector<double>>& chains) {
    Summary s;
    s.name = name;
    std::vector<double> all;
    for (const auto& c : chains) all.insert(all.end(), c.begin(), c.end());
    if (all.empty()) throw std::invalid_argument("summary of empty sample");
    s.mean = mean_of(all);
    double ss = 0.0;
    std::size_t positive = 0;
    for (double v : all) {
        ss += (v - s.mean) * (v - s.mean);
        if (v > 0.0) ++positive;
    }
    s.sd = all.size() > 1 ? std::sqrt(ss / static_cast<double>(all.size() - 1)) : 0.0;
    s.q10 = quantile(all, 0.10);
    s.q50 = quantile(all, 0.50);
    s.q90 = quantile(all, 0.90);
    s.prob_positive = static_cast<double>(positive) / static_cast<double>(all.size());
    if (chains.size() >= 2 && chains.front().size() >= 4) s.diag = diagnose(chains);
    return s;
}

}  // namespace crowdmrp
