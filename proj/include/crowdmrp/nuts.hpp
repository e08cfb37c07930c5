#pragma once
// No-U-Turn Hamiltonian sampler (slice variant) with a diagonal metric, dual-averaging
// step-size adaptation and windowed metric adaptation during warmup.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "crowdmrp/optimize.hpp"

namespace crowdmrp {

class SamplerError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SamplerConfig {
    int chains = 4;
    int warmup = 500;
    int draws = 500;
    std::uint64_t seed = 1;
    int max_depth = 10;
    double target_accept = 0.8;
    double init_radius = 2.0;  // uniform(-r, r) initialisation in unconstrained space
    int threads = 1;
};

struct ChainResult {
    int chain = 0;
    std::vector<std::vector<double>> draws;  // post-warmup, draws x dim
    double step_size = 0.0;
    double mean_accept = 0.0;
    int divergences = 0;
    int max_depth_hits = 0;
    std::vector<double> inv_metric;
};

// Chains run on up to cfg.threads workers; chain c uses the stream derived from
// (cfg.seed, c), so draws do not depend on the thread count. When `init` is non-empty
// every chain starts there, otherwise from its own uniform(-r, r) draw.
std::vector<ChainResult> sample_nuts(const LogDensityFn& target, std::size_t dim,
                                     const SamplerConfig& cfg,
                                     const std::vector<double>& init = {});

}  // namespace crowdmrp
