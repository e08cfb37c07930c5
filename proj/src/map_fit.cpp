#include "crowdmrp/map_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "crowdmrp/types.hpp"

namespace crowdmrp {

std::string_view to_string(ScaleEstimate s) { return s == ScaleEstimate::marginal ? "marginal" : "joint"; }

ScaleEstimate parse_scale_estimate(std::string_view s) {
    if (s == "marginal") return ScaleEstimate::marginal;
    if (s == "joint") return ScaleEstimate::joint;
    throw ValidationError("unknown scale estimate '" + std::string(s) + "' (marginal or joint)");
}

namespace {

constexpr double kCurvatureStep = 1e-4;
constexpr double kMaxJump = 2.0;  // cap on one extrapolation, in log sigma

// Diagonal of the negative Hessian of `f` over the effects of one block, by central
// differences of the gradient.
std::vector<double> block_curvature(const LogDensityFn& f, std::vector<double> u, const PooledBlockInfo& info) {
    const PooledBlock& b = info.block;
    std::vector<double> out(b.size, 0.0);
    std::vector<double> gp(u.size()), gm(u.size());
    auto shift = [&](std::size_t k, double h) {
        if (info.one_level_per_observation)
            for (std::size_t j = b.begin(); j < b.end(); ++j) u[j] += h;
        else
            u[k] += h;
    };
    const std::size_t rounds = info.one_level_per_observation ? 1 : b.size;
    for (std::size_t r = 0; r < rounds; ++r) {
        const std::size_t k = b.begin() + r;
        shift(k, kCurvatureStep);
        f(u, gp);
        shift(k, -2.0 * kCurvatureStep);
        f(u, gm);
        shift(k, kCurvatureStep);
        if (info.one_level_per_observation) {
            for (std::size_t j = 0; j < b.size; ++j)
                out[j] = -(gp[b.begin() + j] - gm[b.begin() + j]) / (2.0 * kCurvatureStep);
        } else {
            out[r] = -(gp[k] - gm[k]) / (2.0 * kCurvatureStep);
        }
    }
    return out;
}

// Maximizer over sigma of E[log N(theta | 0, sigma)] + log half-N(sigma | scale_sd) + log sigma,
// where S = sum E[theta_k^2] over K levels.
double em_scale(double S, std::size_t K, double scale_sd) {
    const double s2 = scale_sd * scale_sd;
    const double a = static_cast<double>(K) - 1.0;
    const double var = 0.5 * s2 * (-a + std::sqrt(a * a + 4.0 * S / s2));
    return std::sqrt(std::max(var, 0.0));
}

}  // namespace

PooledMapResult fit_pooled_map(const LogDensityFn& centered, std::vector<double> u0,
                               const std::vector<PooledBlockInfo>& infos, const PooledMapConfig& cfg) {
    std::vector<PooledBlock> blocks;
    for (const auto& i : infos) blocks.push_back(i.block);
    const double floor = std::log(cfg.min_scale);
    std::vector<double> lower(u0.size(), -std::numeric_limits<double>::infinity());
    for (const auto& b : blocks) {
        lower[b.offset] = floor;
        u0[b.offset] = std::max(u0[b.offset], floor);
    }

    const LogDensityFn scaled = scaled_objective(centered, blocks);
    const LogDensityFn conditional = fixed_scale_objective(scaled, blocks);

    PooledMapResult out;
    std::vector<double> u = std::move(u0);
    std::vector<double> x(u.size());
    OptimizeResult last;
    auto conditional_fit = [&] {
        centered_to_scaled(u, blocks, x);
        last = maximize_lbfgs(conditional, x, cfg.optimizer, lower);
        out.iterations += last.iterations;
        scaled_to_centered(std::vector<double>(last.x), blocks, u);
    };
    // One EM step from the current effects; returns the updated log scales.
    auto em_step = [&] {
        std::vector<double> next(infos.size());
        for (std::size_t i = 0; i < infos.size(); ++i) {
            const PooledBlock& b = infos[i].block;
            if (b.size == 0) {
                next[i] = u[b.offset];
                continue;
            }
            const auto h = block_curvature(centered, u, infos[i]);
            double S = 0.0;
            for (std::size_t j = 0; j < b.size; ++j) {
                const double theta = u[b.begin() + j];
                S += theta * theta + 1.0 / std::max(h[j], 1e-12);
            }
            next[i] = std::max(std::log(std::max(em_scale(S, b.size, cfg.scale_sd), 1e-300)), floor);
        }
        ++out.em_iterations;
        return next;
    };
    auto set_scales = [&](const std::vector<double>& s) {
        for (std::size_t i = 0; i < infos.size(); ++i) u[infos[i].block.offset] = s[i];
    };
    auto scales = [&] {
        std::vector<double> s(infos.size());
        for (std::size_t i = 0; i < infos.size(); ++i) s[i] = u[infos[i].block.offset];
        return s;
    };
    auto max_change = [](const std::vector<double>& a, const std::vector<double>& b) {
        double m = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
        return m;
    };

    conditional_fit();
    bool settled = cfg.scales == ScaleEstimate::joint;
    // EM on the scales. A scale whose true value is near zero converges sublinearly, so
    // every third step extrapolates each log scale along its geometric tail (Aitken).
    std::vector<double> s0, s1;
    while (!settled && out.em_iterations < cfg.max_em_iter) {
        const std::vector<double> cur = scales();
        std::vector<double> next = em_step();
        if (max_change(next, cur) < cfg.em_tol) settled = true;
        if (!settled) {
            s0 = std::move(s1);
            s1 = cur;
            if (!s0.empty()) {
                for (std::size_t i = 0; i < next.size(); ++i) {
                    const double d0 = s1[i] - s0[i], d1 = next[i] - s1[i];
                    if (d0 == 0.0) continue;
                    const double ratio = d1 / d0;
                    if (ratio <= 0.0 || ratio >= 1.0) continue;
                    const double jump = std::clamp(d1 * ratio / (1.0 - ratio), -kMaxJump, kMaxJump);
                    next[i] = std::max(next[i] + jump, floor);
                }
                s0.clear();
                s1.clear();
            }
        }
        set_scales(next);
        conditional_fit();
    }

    if (cfg.scales == ScaleEstimate::joint) {
        centered_to_scaled(u, blocks, x);
        last = maximize_lbfgs(scaled, x, cfg.optimizer, lower);
        out.iterations += last.iterations;
        scaled_to_centered(std::vector<double>(last.x), blocks, u);
        settled = true;
    }

    out.value = last.value;
    out.grad_max_norm = last.grad_max_norm;
    out.converged = last.converged && settled;
    out.message = settled ? last.message : "scale updates did not settle within " + std::to_string(cfg.max_em_iter) +
                                               " EM steps";
    out.trace = std::move(last.trace);
    out.u = std::move(u);
    return out;
}

}  // namespace crowdmrp
