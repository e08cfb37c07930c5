#pragma once
// Convergence diagnostics for multi-chain MCMC output.

#include <span>
#include <string>
#include <vector>

namespace crowdmrp {

struct ParameterDiagnostics {
    // Potential scale reduction over whole chains: sqrt(var_plus / W) with both variance
    // terms on the same (1/n) footing, so identical chains give exactly 1.
    double rhat = 1.0;
    // Same statistic after splitting every chain in half.
    double split_rhat = 1.0;
    double ess = 0.0;        // autocorrelation-adjusted effective sample size
    bool degenerate = false;  // zero total variance; rhat reported as 1
};

// chains[c][t] = value of one scalar parameter in chain c at draw t.
ParameterDiagnostics diagnose(const std::vector<std::vector<double>>& chains);

struct ConvergenceCriteria {
    double max_rhat = 1.05;
    double min_ess_ratio = 0.10;  // ESS / total draws
};

bool meets(const ParameterDiagnostics& d, std::size_t total_draws,
           const ConvergenceCriteria& c = {});

// Sample quantile with linear interpolation between order statistics (type 7).
double quantile(std::vector<double> values, double q);

struct Summary {
    std::string name;
    double mean = 0.0;
    double sd = 0.0;
    double q10 = 0.0;
    double q50 = 0.0;
    double q90 = 0.0;
    double prob_positive = 0.0;
    ParameterDiagnostics diag;
};

Summary summarize(const std::string& name, const std::vector<std::vector<double>>& chains);

}  // namespace crowdmrp
