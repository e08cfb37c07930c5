#pragma once
// Limited-memory BFGS maximizer with optional per-coordinate lower bounds (projection).

#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace crowdmrp {

// Returns f(x) and writes the gradient into grad.
using LogDensityFn = std::function<double(std::span<const double> x, std::span<double> grad)>;

class OptimizationError : public std::runtime_error {
public:
    OptimizationError(const std::string& what, std::vector<double> trace)
        : std::runtime_error(what), trace_(std::move(trace)) {}
    const std::vector<double>& trace() const { return trace_; }

private:
    std::vector<double> trace_;
};

struct OptimizerConfig {
    int max_iter = 2000;
    int history = 12;
    double grad_tol = 1e-8;   // projected gradient max-norm
    double rel_ftol = 1e-15;  // stop after 10 consecutive steps with smaller relative gain
};

struct OptimizeResult {
    std::vector<double> x;
    double value = 0.0;
    double grad_max_norm = 0.0;  // projected
    int iterations = 0;
    bool converged = false;
    std::string message;
    std::vector<double> trace;  // objective after each accepted step, starting at x0
};

// Maximizes f starting from x0. `lower` is empty or one bound per coordinate
// (use -infinity for unbounded). Non-finite objective values at the start throw.
OptimizeResult maximize_lbfgs(const LogDensityFn& f, std::vector<double> x0,
                              const OptimizerConfig& cfg = {},
                              std::span<const double> lower = {});

}  // namespace crowdmrp
