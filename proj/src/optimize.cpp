#include "crowdmrp/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace crowdmrp {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

struct Pair {
    std::vector<double> s, y;
    double rho;
};

}  // namespace

OptimizeResult maximize_lbfgs(const LogDensityFn& f, std::vector<double> x0,
                              const OptimizerConfig& cfg, std::span<const double> lower) {
    const std::size_t n = x0.size();
    const bool bounded = !lower.empty();
    if (bounded && lower.size() != n) throw std::invalid_argument("lower bounds size mismatch");
    auto project = [&](std::vector<double>& x) {
        if (!bounded) return;
        for (std::size_t i = 0; i < n; ++i) x[i] = std::max(x[i], lower[i]);
    };
    // Internally minimizes F = -f with gradient G = -grad f.
    std::vector<double> scratch(n);
    auto eval = [&](const std::vector<double>& x, std::vector<double>& g) {
        const double v = f(x, scratch);
        for (std::size_t i = 0; i < n; ++i) g[i] = -scratch[i];
        return -v;
    };
    auto at_bound = [&](const std::vector<double>& x, std::size_t i) {
        return bounded && x[i] <= lower[i];
    };
    auto projected_norm = [&](const std::vector<double>& x, const std::vector<double>& g) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (at_bound(x, i) && g[i] > 0.0) continue;  // descent would leave the box
            m = std::max(m, std::abs(g[i]));
        }
        return m;
    };

    OptimizeResult res;
    std::vector<double> x = std::move(x0);
    project(x);
    std::fill(scratch.begin(), scratch.end(), 0.0);
    std::vector<double> g(n);
    double F = eval(x, g);
    if (!std::isfinite(F)) throw OptimizationError("non-finite objective at initial point", {});
    res.trace.push_back(-F);

    std::deque<Pair> memory;
    std::vector<double> d(n), x_new(n), g_new(n), q(n);
    std::vector<double> alpha_hist;
    int stalled = 0;

    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        res.iterations = iter;
        const double pg = projected_norm(x, g);
        if (pg < cfg.grad_tol) {
            res.converged = true;
            res.message = "gradient tolerance reached";
            break;
        }

        // Free set: coordinates not pinned at a bound by the gradient.
        std::vector<char> free(n, 1);
        for (std::size_t i = 0; i < n; ++i)
            if (at_bound(x, i) && g[i] > 0.0) free[i] = 0;

        for (std::size_t i = 0; i < n; ++i) q[i] = free[i] ? g[i] : 0.0;
        alpha_hist.assign(memory.size(), 0.0);
        for (std::size_t k = memory.size(); k-- > 0;) {
            alpha_hist[k] = memory[k].rho * dot(memory[k].s, q);
            for (std::size_t i = 0; i < n; ++i) q[i] -= alpha_hist[k] * memory[k].y[i];
        }
        double gamma = 1.0;
        if (!memory.empty()) {
            const auto& last = memory.back();
            gamma = dot(last.s, last.y) / dot(last.y, last.y);
        } else {
            gamma = 1.0 / std::max(1.0, pg);
        }
        for (auto& v : q) v *= gamma;
        for (std::size_t k = 0; k < memory.size(); ++k) {
            const double beta = memory[k].rho * dot(memory[k].y, q);
            for (std::size_t i = 0; i < n; ++i) q[i] += (alpha_hist[k] - beta) * memory[k].s[i];
        }
        for (std::size_t i = 0; i < n; ++i) d[i] = free[i] ? -q[i] : 0.0;
        double slope = dot(g, d);
        if (!(slope < 0.0)) {
            // Not a descent direction: reset to steepest descent.
            memory.clear();
            for (std::size_t i = 0; i < n; ++i) d[i] = free[i] ? -g[i] / std::max(1.0, pg) : 0.0;
            slope = dot(g, d);
        }

        double t = 1.0;
        bool accepted = false;
        double F_new = F;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + t * d[i];
            project(x_new);
            F_new = eval(x_new, g_new);
            double decrease = 0.0;
            for (std::size_t i = 0; i < n; ++i) decrease += g[i] * (x_new[i] - x[i]);
            if (std::isfinite(F_new) && F_new <= F + 1e-4 * decrease && F_new <= F) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            if (!std::isfinite(F_new) && t < 1e-12)
                throw OptimizationError("non-finite objective during line search", res.trace);
            res.message = "line search could not improve the objective";
            res.converged = pg < std::sqrt(cfg.grad_tol);
            break;
        }

        Pair p;
        p.s.resize(n);
        p.y.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            p.s[i] = x_new[i] - x[i];
            p.y[i] = g_new[i] - g[i];
        }
        const double sy = dot(p.s, p.y);
        if (sy > 1e-12 * std::sqrt(dot(p.s, p.s) * dot(p.y, p.y))) {
            p.rho = 1.0 / sy;
            memory.push_back(std::move(p));
            if (static_cast<int>(memory.size()) > cfg.history) memory.pop_front();
        }

        const double gain = F - F_new;
        x.swap(x_new);
        g.swap(g_new);
        F = F_new;
        if (!std::isfinite(F)) throw OptimizationError("non-finite objective", res.trace);
        res.trace.push_back(-F);
        stalled = gain <= cfg.rel_ftol * std::max(1.0, std::abs(F)) ? stalled + 1 : 0;
        if (stalled >= 10) {
            res.iterations = iter + 1;
            res.message = "objective stalled";
            res.converged = projected_norm(x, g) < std::sqrt(cfg.grad_tol);
            break;
        }
        res.iterations = iter + 1;
    }
    if (res.message.empty()) res.message = "iteration limit reached";
    res.x = std::move(x);
    res.value = -F;
    res.grad_max_norm = projected_norm(res.x, g);
    if (!res.converged && res.grad_max_norm < cfg.grad_tol) res.converged = true;
    return res;
}

}  // namespace crowdmrp
