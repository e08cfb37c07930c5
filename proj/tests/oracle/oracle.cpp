#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include <boost/math/special_functions/beta.hpp>

namespace oracle {

namespace {

const double kPi = std::acos(-1.0);

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double gauss_log(double x, double sd) {
    return -0.5 * (x / sd) * (x / sd) - std::log(sd) - 0.5 * std::log(2.0 * kPi);
}

// Reads K effects of one block, returns sigma and adds the prior terms to lp.
double read_block(const std::vector<double>& u, std::size_t& pos, int k, bool non_centered, double scale_sd,
                  std::vector<double>& effects, double& lp) {
    const double log_sigma = u[pos++];
    const double sigma = std::exp(log_sigma);
    lp += std::log(2.0) + gauss_log(sigma, scale_sd) + log_sigma;
    effects.assign(static_cast<std::size_t>(k), 0.0);
    for (int j = 0; j < k; ++j) {
        const double v = u[pos++];
        if (non_centered) {
            effects[static_cast<std::size_t>(j)] = sigma * v;
            lp += gauss_log(v, 1.0);
        } else {
            effects[static_cast<std::size_t>(j)] = v;
            lp += gauss_log(v, sigma);
        }
    }
    return sigma;
}

}  // namespace

std::array<double, 4> ordinal_probs(double mu, const std::array<double, 3>& alpha) {
    // sigmoid(a) - sigmoid(b) = sigmoid(a) sigmoid(-b) (1 - exp(b - a)), free of cancellation.
    auto diff = [](double a, double b) { return sigmoid(a) * sigmoid(-b) * -std::expm1(b - a); };
    return {sigmoid(alpha[0] - mu), diff(alpha[1] - mu, alpha[0] - mu), diff(alpha[2] - mu, alpha[1] - mu),
            sigmoid(mu - alpha[2])};
}

double ordinal_log_density(const OrdinalData& d, const std::vector<double>& u, bool non_centered,
                           double threshold_sd, double scale_sd) {
    std::array<double, 3> alpha{u[0], u[0] + std::exp(u[1]), 0.0};
    alpha[2] = alpha[1] + std::exp(u[2]);
    double lp = u[1] + u[2];
    for (double a : alpha) lp += gauss_log(a, threshold_sd);

    std::size_t pos = 3;
    std::array<std::vector<double>, 7> eff;
    for (int f = 0; f < 7; ++f) read_block(u, pos, d.levels[static_cast<std::size_t>(f)], non_centered, scale_sd,
                                           eff[static_cast<std::size_t>(f)], lp);
    if (pos != u.size()) throw std::invalid_argument("oracle: wrong parameter count");

    for (const auto& o : d.obs) {
        double ctx = 0.0, inter = 0.0;
        for (int z : o.contexts) ctx += eff[1][static_cast<std::size_t>(z)];
        for (int k : o.interactions) inter += eff[6][static_cast<std::size_t>(k)];
        if (d.context_mean && !o.contexts.empty()) {
            ctx /= static_cast<double>(o.contexts.size());
            inter /= static_cast<double>(o.contexts.size());
        }
        const double mu = eff[0][static_cast<std::size_t>(o.tweet)] + ctx + eff[2][static_cast<std::size_t>(o.gender)] +
                          eff[3][static_cast<std::size_t>(o.age)] + eff[4][static_cast<std::size_t>(o.state)] +
                          eff[5][static_cast<std::size_t>(o.party)] + inter;
        lp += std::log(ordinal_probs(mu, alpha)[static_cast<std::size_t>(o.rating - 1)]);
    }
    return lp;
}

double sharing_log_density(const SharingData& d, const std::vector<double>& u, bool non_centered,
                           double intercept_sd, double gamma_sd, double scale_sd) {
    double lp = gauss_log(u[0], intercept_sd);
    for (int k = 1; k <= 3; ++k) lp += gauss_log(u[static_cast<std::size_t>(k)], gamma_sd);
    std::size_t pos = 4;
    std::array<std::vector<double>, 4> eff;
    for (int f = 0; f < 4; ++f) read_block(u, pos, d.levels[static_cast<std::size_t>(f)], non_centered, scale_sd,
                                           eff[static_cast<std::size_t>(f)], lp);
    if (pos != u.size()) throw std::invalid_argument("oracle: wrong parameter count");

    for (const auto& r : d.rows) {
        const double eta = u[0] + u[1] * r.x[0] + u[2] * r.x[1] + u[3] * r.x[2] +
                           eff[0][static_cast<std::size_t>(r.gender)] + eff[1][static_cast<std::size_t>(r.age)] +
                           eff[2][static_cast<std::size_t>(r.party)] + eff[3][static_cast<std::size_t>(r.state)];
        const double theta = sigmoid(eta);
        lp += r.outcome ? std::log(theta) : std::log(1.0 - theta);
    }
    return lp;
}

namespace {

// Every round value of the balanced estimator, one per size-n subset of the majority.
std::vector<double> balanced_rounds(const std::vector<int>& democrat, const std::vector<int>& republican) {
    if (democrat.empty() || republican.empty()) throw std::invalid_argument("oracle: empty group");
    if (democrat.size() > 12 || republican.size() > 12) throw std::invalid_argument("oracle: group larger than 12");
    auto mean = [](const std::vector<int>& v) {
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    if (democrat.size() == republican.size()) return {0.5 * (mean(democrat) + mean(republican))};

    const bool d_major = democrat.size() > republican.size();
    const auto& major = d_major ? democrat : republican;
    const auto& minor = d_major ? republican : democrat;
    const std::size_t n = minor.size();
    const std::size_t m = major.size();
    std::vector<double> out;
    for (unsigned mask = 0; mask < (1u << m); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != n) continue;
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            if (mask & (1u << i)) s += major[i];
        out.push_back(0.5 * (s / static_cast<double>(n) + mean(minor)));
    }
    return out;
}

}  // namespace

double exhaustive_balanced_expectation(const std::vector<int>& democrat, const std::vector<int>& republican) {
    const auto r = balanced_rounds(democrat, republican);
    return std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
}

double exhaustive_balanced_variance(const std::vector<int>& democrat, const std::vector<int>& republican) {
    const auto r = balanced_rounds(democrat, republican);
    const double mu = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
    double ss = 0.0;
    for (double v : r) ss += (v - mu) * (v - mu);
    return ss / static_cast<double>(r.size());
}

std::vector<double> rake_uncapped(const std::vector<std::vector<int>>& levels,
                                  const std::vector<std::vector<double>>& targets) {
    const std::size_t n = levels.front().size();
    std::vector<double> w(n, 1.0);
    for (int it = 0; it < 100000; ++it) {
        for (std::size_t f = 0; f < levels.size(); ++f) {
            std::vector<double> tot(targets[f].size(), 0.0);
            for (std::size_t i = 0; i < n; ++i) tot[levels[f][i]] += w[i];
            for (std::size_t i = 0; i < n; ++i) w[i] *= targets[f][levels[f][i]] * n / tot[levels[f][i]];
        }
        double err = 0.0;
        for (std::size_t f = 0; f < levels.size(); ++f) {
            std::vector<double> tot(targets[f].size(), 0.0);
            for (std::size_t i = 0; i < n; ++i) tot[levels[f][i]] += w[i] / n;
            for (std::size_t l = 0; l < tot.size(); ++l) err = std::max(err, std::abs(tot[l] - targets[f][l]));
        }
        if (err < 1e-13) break;
    }
    return w;
}

double simulate_effective_items(long long budget, double mean, int threshold, int replications,
                                std::uint64_t seed) {
    const auto pool = static_cast<std::size_t>(std::floor(static_cast<double>(budget) / mean));
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, pool - 1);
    std::vector<int> reviews(pool);
    double total = 0.0;
    for (int r = 0; r < replications; ++r) {
        std::fill(reviews.begin(), reviews.end(), 0);
        for (long long b = 0; b < budget; ++b) ++reviews[pick(rng)];
        total += static_cast<double>(std::count_if(reviews.begin(), reviews.end(), [&](int c) { return c > threshold; }));
    }
    return total / replications;
}

std::vector<std::string> percentile_sort_oracle(std::vector<std::pair<double, std::string>> scores,
                                                long long num, long long den) {
    std::sort(scores.begin(), scores.end());
    const long long m = static_cast<long long>(scores.size());
    const long long k = (num * m + den - 1) / den;
    std::vector<std::string> out;
    for (long long i = 0; i < k; ++i) out.push_back(scores[static_cast<std::size_t>(i)].second);
    std::sort(out.begin(), out.end());
    return out;
}

double textbook_pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

double pearson_p_value(double r, int n) {
    const double df = n - 2;
    const double t2 = r * r * df / (1.0 - r * r);
    return boost::math::ibeta(df / 2.0, 0.5, df / (df + t2));
}

std::vector<double> central_difference(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double x0 = x[i];
        x[i] = x0 + h;
        const double up = f(x);
        x[i] = x0 - h;
        const double down = f(x);
        x[i] = x0;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

double weighted_share(const std::vector<int>& levels, const std::vector<double>& weights, int level) {
    double in = 0.0, all = 0.0;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        all += weights[i];
        if (levels[i] == level) in += weights[i];
    }
    return in / all;
}

}  // namespace oracle
