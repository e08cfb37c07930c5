#pragma once
// Point estimation for models built from pooled blocks, in the centered parameterization.
//
// The joint posterior mode of a hierarchical model is degenerate: as every sigma -> 0 with
// its effects, the density grows without bound, and levels with little data per level
// fall into that corner even when the true scale is large. The default estimator
// therefore fixes the scales, maximizes over everything else, and updates each scale
// by an EM step under a Laplace (diagonal curvature) approximation of the effects'
// conditional posterior, until the scales settle. `joint` instead finishes with a plain
// joint maximization from the settled point.

#include <string>
#include <vector>

#include "crowdmrp/hierarchy.hpp"
#include "crowdmrp/optimize.hpp"

namespace crowdmrp {

enum class ScaleEstimate { marginal, joint };
std::string_view to_string(ScaleEstimate s);
ScaleEstimate parse_scale_estimate(std::string_view s);

struct PooledMapConfig {
    OptimizerConfig optimizer;
    ScaleEstimate scales = ScaleEstimate::marginal;
    double min_scale = 1e-4;
    double scale_sd = 1.0;   // half-normal prior on every sigma
    int max_em_iter = 500;
    double em_tol = 1e-6;    // max change of log sigma between EM steps
};

struct PooledBlockInfo {
    PooledBlock block;
    // True when no observation touches two levels of this block, so one simultaneous
    // perturbation yields every diagonal curvature term.
    bool one_level_per_observation = true;
};

struct PooledMapResult {
    std::vector<double> u;  // centered, unconstrained
    double value = 0.0;
    // Max-norm of the projected gradient over the coordinates that were optimized last
    // (all but the scales under `marginal`).
    double grad_max_norm = 0.0;
    bool converged = false;
    int iterations = 0;     // optimizer iterations, all phases
    int em_iterations = 0;
    std::string message;
    std::vector<double> trace;  // objective along the last optimizer run
};

// `centered` is the centered log density; u0 carries the initial scales.
PooledMapResult fit_pooled_map(const LogDensityFn& centered, std::vector<double> u0,
                               const std::vector<PooledBlockInfo>& blocks, const PooledMapConfig& cfg);

}  // namespace crowdmrp
