#pragma once
// Partially pooled effect blocks shared by the ordinal and sharing models.
//
// A block with K levels occupies K + 1 unconstrained slots: [log sigma, v_1 .. v_K].
// Centered:      theta_k = v_k,          theta_k ~ Normal(0, sigma)
// Non-centered:  theta_k = sigma * v_k,  v_k ~ Normal(0, 1)
// In both cases sigma ~ Half-Normal(0, scale_sd) and the log-sigma Jacobian is included.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "crowdmrp/math.hpp"
#include "crowdmrp/optimize.hpp"

namespace crowdmrp {

enum class Parameterization { centered, non_centered };

std::string_view to_string(Parameterization p);
Parameterization parse_parameterization(std::string_view s);

struct PooledBlock {
    std::size_t offset = 0;  // slot of log sigma
    std::size_t size = 0;    // number of levels K

    std::size_t begin() const { return offset + 1; }
    std::size_t end() const { return offset + 1 + size; }
};

// Writes the effects of `block` into theta (size K) and returns sigma.
inline double pooled_effects(std::span<const double> u, const PooledBlock& block,
                             Parameterization p, std::span<double> theta) {
    const double sigma = std::exp(u[block.offset]);
    for (std::size_t k = 0; k < block.size; ++k) {
        const double v = u[block.begin() + k];
        theta[k] = p == Parameterization::centered ? v : sigma * v;
    }
    return sigma;
}

// Log prior (with Jacobian) of the block. When grad is non-empty, adds the prior gradient
// and maps the likelihood gradient dlik_dtheta (size K) through the parameterization.
inline double pooled_log_prior(std::span<const double> u, const PooledBlock& block,
                               Parameterization p, double scale_sd,
                               std::span<const double> dlik_dtheta, std::span<double> grad) {
    const double log_sigma = u[block.offset];
    const double sigma = std::exp(log_sigma);
    double lp = half_normal_logpdf(sigma, scale_sd) + log_sigma;
    double g_log_sigma = 1.0 - (sigma * sigma) / (scale_sd * scale_sd);

    if (p == Parameterization::centered) {
        const double inv_var = 1.0 / (sigma * sigma);
        for (std::size_t k = 0; k < block.size; ++k) {
            const double theta = u[block.begin() + k];
            lp += -0.5 * theta * theta * inv_var - log_sigma - kHalfLog2Pi;
            if (!grad.empty()) {
                grad[block.begin() + k] += dlik_dtheta[k] - theta * inv_var;
                g_log_sigma += theta * theta * inv_var - 1.0;
            }
        }
    } else {
        for (std::size_t k = 0; k < block.size; ++k) {
            const double z = u[block.begin() + k];
            lp += -0.5 * z * z - kHalfLog2Pi;
            if (!grad.empty()) {
                grad[block.begin() + k] += sigma * dlik_dtheta[k] - z;
                g_log_sigma += dlik_dtheta[k] * sigma * z;
            }
        }
    }
    if (!grad.empty()) grad[block.offset] += g_log_sigma;
    return lp;
}

// Inverse of pooled_effects: unconstrained slots for given effects and sigma.
inline void pack_pooled(std::span<const double> theta, double sigma, const PooledBlock& block,
                        Parameterization p, std::span<double> u) {
    u[block.offset] = std::log(sigma);
    for (std::size_t k = 0; k < block.size; ++k)
        u[block.begin() + k] = p == Parameterization::centered ? theta[k] : theta[k] / sigma;
}

// Centered MAP objectives are badly conditioned once a sigma approaches its floor (the
// effect curvature grows like 1 / sigma^2). The optimizer therefore works on
// x = [.., log sigma, theta / sigma, ..], a plain change of coordinates without a Jacobian,
// so its maximizer is the centered mode.
inline void scaled_to_centered(std::span<const double> x, std::span<const PooledBlock> blocks, std::span<double> u) {
    std::copy(x.begin(), x.end(), u.begin());
    for (const auto& b : blocks) {
        const double sigma = std::exp(x[b.offset]);
        for (std::size_t k = b.begin(); k < b.end(); ++k) u[k] = sigma * x[k];
    }
}

inline void centered_to_scaled(std::span<const double> u, std::span<const PooledBlock> blocks, std::span<double> x) {
    std::copy(u.begin(), u.end(), x.begin());
    for (const auto& b : blocks) {
        const double sigma = std::exp(u[b.offset]);
        for (std::size_t k = b.begin(); k < b.end(); ++k) x[k] = u[k] / sigma;
    }
}

inline LogDensityFn scaled_objective(LogDensityFn centered, std::vector<PooledBlock> blocks) {
    return [f = std::move(centered), blocks = std::move(blocks)](std::span<const double> x, std::span<double> grad) {
        std::vector<double> u(x.size());
        scaled_to_centered(x, blocks, u);
        if (grad.empty()) return f(u, grad);
        const double value = f(u, grad);
        for (const auto& b : blocks) {
            const double sigma = std::exp(x[b.offset]);
            for (std::size_t k = b.begin(); k < b.end(); ++k) {
                grad[b.offset] += grad[k] * u[k];
                grad[k] *= sigma;
            }
        }
        return value;
    };
}

// The same objective with every log sigma held at its current value (zero gradient).
inline LogDensityFn fixed_scale_objective(LogDensityFn f, std::vector<PooledBlock> blocks) {
    return [f = std::move(f), blocks = std::move(blocks)](std::span<const double> x, std::span<double> grad) {
        const double value = f(x, grad);
        if (!grad.empty())
            for (const auto& b : blocks) grad[b.offset] = 0.0;
        return value;
    };
}

}  // namespace crowdmrp
