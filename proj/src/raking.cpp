#include "crowdmrp/raking.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace crowdmrp {

void MarginTargets::validate() const {
    if (factors.empty()) throw ValidationError("raking targets: no factors");
    for (const auto& [name, levels] : factors) {
        double sum = 0.0;
        for (const auto& [level, p] : levels) {
            if (!(p >= 0.0)) throw ValidationError("raking targets: negative share in " + name);
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw ValidationError("raking targets: shares of '" + name + "' sum to " +
                                  std::to_string(sum));
    }
}

std::string rater_level(const Rater& rater, const std::string& factor) {
    if (factor == "gender") return std::string(to_string(rater.gender));
    if (factor == "age_band") return rater.age_band;
    if (factor == "state") return rater.state;
    if (factor == "party") return std::string(to_string(rater.party));
    throw ValidationError("unknown raking factor '" + factor + "'");
}

namespace {

void normalize_mean_one(std::vector<double>& w) {
    const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
    for (auto& x : w) x /= mean;
}

double margin_error(const std::vector<std::vector<int>>& levels,
                    const std::vector<std::vector<double>>& targets, const std::vector<double>& w) {
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    double worst = 0.0;
    for (std::size_t f = 0; f < levels.size(); ++f) {
        std::vector<double> share(targets[f].size(), 0.0);
        for (std::size_t i = 0; i < w.size(); ++i) share[levels[f][i]] += w[i];
        for (std::size_t l = 0; l < share.size(); ++l)
            worst = std::max(worst, std::abs(share[l] / total - targets[f][l]));
    }
    return worst;
}

}  // namespace

RakeWeights ipf_weights(const std::vector<std::vector<int>>& levels,
                        const std::vector<std::vector<double>>& targets, const RakeConfig& cfg,
                        std::span<const double> initial) {
    if (levels.empty() || levels.size() != targets.size())
        throw ValidationError("raking: factor count mismatch");
    const std::size_t n = levels.front().size();
    if (n == 0) throw ValidationError("raking: empty sample");
    if (!(cfg.cap >= 1.0)) throw ValidationError("raking: cap must be >= 1");
    if (!initial.empty() && initial.size() != n) throw ValidationError("raking: initial weights size");

    for (std::size_t f = 0; f < levels.size(); ++f) {
        std::vector<int> count(targets[f].size(), 0);
        for (int l : levels[f]) {
            if (l < 0 || static_cast<std::size_t>(l) >= count.size())
                throw ValidationError("raking: level index out of range");
            ++count[static_cast<std::size_t>(l)];
        }
        for (std::size_t l = 0; l < count.size(); ++l)
            if (count[l] == 0 && targets[f][l] > 0.0)
                throw ValidationError("raking: target level with no sample representation (factor " +
                                      std::to_string(f) + ", level " + std::to_string(l) + ")");
    }

    RakeWeights out;
    out.weights.assign(n, 1.0);
    if (!initial.empty()) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!(initial[i] > 0.0)) throw ValidationError("raking: initial weights must be positive");
            out.weights[i] = initial[i];
        }
    }
    normalize_mean_one(out.weights);
    auto& w = out.weights;

    const double lo = 1.0 / cfg.cap;
    const double hi = cfg.cap;
    for (int iter = 1; iter <= cfg.max_iter; ++iter) {
        for (std::size_t f = 0; f < levels.size(); ++f) {
            std::vector<double> share(targets[f].size(), 0.0);
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                share[levels[f][i]] += w[i];
                total += w[i];
            }
            std::vector<double> factor(share.size(), 1.0);
            for (std::size_t l = 0; l < share.size(); ++l)
                if (share[l] > 0.0) factor[l] = targets[f][l] / (share[l] / total);
            for (std::size_t i = 0; i < n; ++i) w[i] *= factor[levels[f][i]];
        }
        normalize_mean_one(w);
        out.cap_binding = false;
        for (auto& x : w) {
            if (x < lo || x > hi) {
                x = std::clamp(x, lo, hi);
                out.cap_binding = true;
            }
        }
        if (out.cap_binding) normalize_mean_one(w);
        out.iterations = iter;
        out.max_margin_error = margin_error(levels, targets, w);
        if (out.max_margin_error < cfg.tol) {
            out.converged = true;
            break;
        }
    }
    return out;
}

RakeWeights ipf_weights(const std::vector<Rater>& raters, const MarginTargets& targets,
                        const RakeConfig& cfg) {
    targets.validate();
    std::vector<std::vector<int>> levels;
    std::vector<std::vector<double>> shares;
    for (const auto& [factor, table] : targets.factors) {
        std::map<std::string, int> index;
        std::vector<double> s;
        for (const auto& [level, p] : table) {
            index.emplace(level, static_cast<int>(s.size()));
            s.push_back(p);
        }
        std::vector<int> lv;
        lv.reserve(raters.size());
        for (const auto& r : raters) {
            const std::string level = rater_level(r, factor);
            auto it = index.find(level);
            if (it == index.end())
                throw ValidationError("raking: rater '" + r.id + "' has level '" + level +
                                      "' of factor '" + factor + "' absent from targets");
            lv.push_back(it->second);
        }
        levels.push_back(std::move(lv));
        shares.push_back(std::move(s));
    }
    RakeWeights out = ipf_weights(levels, shares, cfg);
    for (const auto& r : raters) out.rater_ids.push_back(r.id);
    return out;
}

double weighted_mean(std::span<const double> values, std::span<const double> weights) {
    if (values.empty()) throw ValidationError("weighted_mean: empty input");
    if (values.size() != weights.size()) throw ValidationError("weighted_mean: length mismatch");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        num += weights[i] * values[i];
        den += weights[i];
    }
    if (!(den > 0.0)) throw ValidationError("weighted_mean: weights sum to zero");
    return num / den;
}

}  // namespace crowdmrp
