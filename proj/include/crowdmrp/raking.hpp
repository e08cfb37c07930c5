#pragma once
// Survey raking: iterative proportional fitting of per-rater weights to marginal targets.

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "crowdmrp/types.hpp"

namespace crowdmrp {

// Ordered list of factors, each an ordered list of (level, target proportion).
struct MarginTargets {
    std::vector<std::pair<std::string, std::vector<std::pair<std::string, double>>>> factors;

    // Throws unless every factor's proportions are nonnegative and sum to 1 within 1e-9.
    void validate() const;
};

struct RakeConfig {
    double cap = 5.0;
    double tol = 1e-6;
    int max_iter = 500;
};

struct RakeWeights {
    std::vector<std::string> rater_ids;
    std::vector<double> weights;  // mean 1
    int iterations = 0;
    double max_margin_error = 0.0;
    bool converged = false;
    bool cap_binding = false;  // some weight sits on the cap after the last cycle
};

// Level of `rater` for a named factor: gender, age_band, state or party.
std::string rater_level(const Rater& rater, const std::string& factor);

// Generic form: levels[f][i] is the level index of unit i for factor f.
RakeWeights ipf_weights(const std::vector<std::vector<int>>& levels,
                        const std::vector<std::vector<double>>& targets, const RakeConfig& cfg,
                        std::span<const double> initial = {});

RakeWeights ipf_weights(const std::vector<Rater>& raters, const MarginTargets& targets,
                        const RakeConfig& cfg = {});

double weighted_mean(std::span<const double> values, std::span<const double> weights);

}  // namespace crowdmrp
