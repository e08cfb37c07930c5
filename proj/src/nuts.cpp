#include "crowdmrp/nuts.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "crowdmrp/parallel.hpp"
#include "crowdmrp/rng.hpp"

namespace crowdmrp {

namespace {

struct State {
    std::vector<double> q, p, grad;
    double lp = 0.0;
};

struct Tree {
    State minus, plus;
    State proposal;
    double n = 0.0;  // count of slice-admissible states
    bool ok = true;
    double sum_accept = 0.0;
    int n_accept = 0;
    bool divergent = false;
};

class Chain {
public:
    Chain(const LogDensityFn& target, std::size_t dim, const SamplerConfig& cfg, int index)
        : target_(target), dim_(dim), cfg_(cfg), rng_(make_rng(cfg.seed, static_cast<std::uint64_t>(index))),
          inv_metric_(dim, 1.0) {}

    ChainResult run(const std::vector<double>& init, int index) {
        State cur = initial_state(init);
        ChainResult out;
        out.chain = index;

        step_ = find_reasonable_step(cur);
        restart_dual_averaging();

        const int warmup = cfg_.warmup;
        int init_buffer = 75, term_buffer = 50, base_window = 25;
        if (warmup < init_buffer + term_buffer + base_window) {
            init_buffer = static_cast<int>(0.15 * warmup);
            term_buffer = static_cast<int>(0.1 * warmup);
            base_window = warmup - init_buffer - term_buffer;
        }
        const bool adapt_metric = warmup >= 20;
        int window_size = base_window;
        int window_end = init_buffer + window_size;
        auto fix_window = [&] {
            const int next_end = window_end + 2 * window_size;
            if (next_end > warmup - term_buffer) window_end = warmup - term_buffer;
        };
        fix_window();
        std::vector<double> mean(dim_, 0.0), m2(dim_, 0.0);
        int window_count = 0;

        for (int it = 0; it < warmup; ++it) {
            double accept = 0.0;
            cur = transition(cur, accept, nullptr, nullptr);
            adapt_step(accept);
            if (!adapt_metric) continue;
            if (it >= init_buffer && it < warmup - term_buffer) {
                ++window_count;
                for (std::size_t i = 0; i < dim_; ++i) {
                    const double delta = cur.q[i] - mean[i];
                    mean[i] += delta / window_count;
                    m2[i] += delta * (cur.q[i] - mean[i]);
                }
                if (it + 1 == window_end) {
                    const double n = window_count;
                    for (std::size_t i = 0; i < dim_; ++i) {
                        const double var = n > 1 ? m2[i] / (n - 1) : 1.0;
                        inv_metric_[i] = (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0));
                    }
                    std::fill(mean.begin(), mean.end(), 0.0);
                    std::fill(m2.begin(), m2.end(), 0.0);
                    window_count = 0;
                    window_size *= 2;
                    window_end = it + 1 + window_size;
                    fix_window();
                    step_ = find_reasonable_step(cur);
                    restart_dual_averaging();
                }
            }
        }
        if (warmup > 0) step_ = std::exp(log_step_bar_);

        out.draws.reserve(static_cast<std::size_t>(cfg_.draws));
        double accept_sum = 0.0;
        bool moved = cfg_.draws == 0;
        for (int it = 0; it < cfg_.draws; ++it) {
            double accept = 0.0;
            int divergent = 0, depth_hit = 0;
            State next = transition(cur, accept, &divergent, &depth_hit);
            if (next.q != cur.q) moved = true;
            cur = std::move(next);
            accept_sum += accept;
            out.divergences += divergent;
            out.max_depth_hits += depth_hit;
            out.draws.push_back(cur.q);
        }
        if (!moved)
            throw SamplerError("chain " + std::to_string(index) +
                               ": every proposal was rejected (step size pathologically large)");
        out.step_size = step_;
        out.mean_accept = cfg_.draws > 0 ? accept_sum / cfg_.draws : 0.0;
        out.inv_metric = inv_metric_;
        return out;
    }

private:
    double evaluate(State& s) {
        s.grad.assign(dim_, 0.0);
        s.lp = target_(s.q, s.grad);
        return s.lp;
    }

    State initial_state(const std::vector<double>& init) {
        State s;
        std::uniform_real_distribution<double> unif(-cfg_.init_radius, cfg_.init_radius);
        for (int attempt = 0; attempt < 100; ++attempt) {
            if (!init.empty()) {
                s.q = init;
            } else {
                s.q.resize(dim_);
                for (auto& v : s.q) v = unif(rng_);
            }
            evaluate(s);
            bool finite = std::isfinite(s.lp);
            for (double g : s.grad) finite = finite && std::isfinite(g);
            if (finite) return s;
            if (!init.empty()) break;
        }
        throw SamplerError("could not find a finite initial point");
    }

    double kinetic(const std::vector<double>& p) const {
        double k = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) k += p[i] * p[i] * inv_metric_[i];
        return 0.5 * k;
    }

    void leapfrog(State& s, double eps) {
        for (std::size_t i = 0; i < dim_; ++i) s.p[i] += 0.5 * eps * s.grad[i];
        for (std::size_t i = 0; i < dim_; ++i) s.q[i] += eps * inv_metric_[i] * s.p[i];
        evaluate(s);
        for (std::size_t i = 0; i < dim_; ++i) s.p[i] += 0.5 * eps * s.grad[i];
    }

    void draw_momentum(State& s) {
        s.p.resize(dim_);
        for (std::size_t i = 0; i < dim_; ++i) s.p[i] = normal_(rng_) / std::sqrt(inv_metric_[i]);
    }

    bool no_u_turn(const State& minus, const State& plus) const {
        double a = 0.0, b = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) {
            const double dq = plus.q[i] - minus.q[i];
            a += dq * inv_metric_[i] * minus.p[i];
            b += dq * inv_metric_[i] * plus.p[i];
        }
        return a >= 0.0 && b >= 0.0;
    }

    Tree build_tree(const State& from, double log_u, int dir, int depth, double H0) {
        if (depth == 0) {
            Tree t;
            State s = from;
            leapfrog(s, dir * step_);
            const double H = s.lp - kinetic(s.p);
            const bool finite = std::isfinite(H);
            t.n = (finite && log_u <= H) ? 1.0 : 0.0;
            t.ok = finite && log_u < H + 1000.0;
            t.divergent = !t.ok;
            t.sum_accept = finite ? std::min(1.0, std::exp(H - H0)) : 0.0;
            t.n_accept = 1;
            t.minus = s;
            t.plus = s;
            t.proposal = std::move(s);
            return t;
        }
        Tree t = build_tree(from, log_u, dir, depth - 1, H0);
        if (!t.ok) return t;
        Tree t2 = build_tree(dir < 0 ? t.minus : t.plus, log_u, dir, depth - 1, H0);
        if (dir < 0)
            t.minus = std::move(t2.minus);
        else
            t.plus = std::move(t2.plus);
        if (t.n + t2.n > 0.0 && uniform_(rng_) < t2.n / (t.n + t2.n)) t.proposal = std::move(t2.proposal);
        t.sum_accept += t2.sum_accept;
        t.n_accept += t2.n_accept;
        t.divergent = t.divergent || t2.divergent;
        t.ok = t2.ok && no_u_turn(t.minus, t.plus);
        t.n += t2.n;
        return t;
    }

    State transition(const State& cur, double& accept, int* divergent, int* depth_hit) {
        State start = cur;
        draw_momentum(start);
        const double H0 = start.lp - kinetic(start.p);
        const double log_u = H0 + std::log(uniform_(rng_));
        State minus = start, plus = start;
        State result = cur;
        double n = 1.0;
        double sum_accept = 0.0;
        int n_accept = 0;
        bool div = false;
        int depth = 0;
        for (; depth < cfg_.max_depth; ++depth) {
            const int dir = uniform_(rng_) < 0.5 ? -1 : 1;
            Tree t = build_tree(dir < 0 ? minus : plus, log_u, dir, depth, H0);
            if (dir < 0)
                minus = std::move(t.minus);
            else
                plus = std::move(t.plus);
            sum_accept += t.sum_accept;
            n_accept += t.n_accept;
            div = div || t.divergent;
            if (!t.ok) break;
            if (uniform_(rng_) < std::min(1.0, t.n / n)) result = std::move(t.proposal);
            n += t.n;
            if (!no_u_turn(minus, plus)) break;
        }
        accept = n_accept > 0 ? sum_accept / n_accept : 0.0;
        if (divergent) *divergent = div ? 1 : 0;
        if (depth_hit) *depth_hit = depth >= cfg_.max_depth ? 1 : 0;
        result.p.clear();
        return result;
    }

    double find_reasonable_step(const State& cur) {
        double eps = step_ > 0.0 ? step_ : 1.0;
        State s = cur;
        draw_momentum(s);
        const double H0 = s.lp - kinetic(s.p);
        auto log_ratio = [&](double e) {
            State t = s;
            leapfrog(t, e);
            const double H = t.lp - kinetic(t.p);
            return std::isfinite(H) ? H - H0 : -std::numeric_limits<double>::infinity();
        };
        double lr = log_ratio(eps);
        const int direction = lr > std::log(0.8) ? 1 : -1;
        for (int k = 0; k < 100; ++k) {
            if (direction > 0 && !(lr > std::log(0.8))) break;
            if (direction < 0 && !(lr < std::log(0.8))) break;
            eps = direction > 0 ? eps * 2.0 : eps * 0.5;
            if (eps > 1e7 || eps < 1e-10) break;
            lr = log_ratio(eps);
        }
        return eps;
    }

    void restart_dual_averaging() {
        mu_ = std::log(10.0 * step_);
        hbar_ = 0.0;
        log_step_bar_ = 0.0;
        adapt_count_ = 0;
    }

    void adapt_step(double accept) {
        constexpr double gamma = 0.05, t0 = 10.0, kappa = 0.75;
        ++adapt_count_;
        const double m = adapt_count_;
        const double eta = 1.0 / (m + t0);
        hbar_ = (1.0 - eta) * hbar_ + eta * (cfg_.target_accept - accept);
        const double log_step = mu_ - std::sqrt(m) / gamma * hbar_;
        const double w = std::pow(m, -kappa);
        log_step_bar_ = w * log_step + (1.0 - w) * log_step_bar_;
        step_ = std::exp(log_step);
    }

    const LogDensityFn& target_;
    std::size_t dim_;
    SamplerConfig cfg_;
    Rng rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
    std::vector<double> inv_metric_;
    double step_ = 0.0;
    double mu_ = 0.0, hbar_ = 0.0, log_step_bar_ = 0.0;
    int adapt_count_ = 0;
};

}  // namespace

std::vector<ChainResult> sample_nuts(const LogDensityFn& target, std::size_t dim,
                                     const SamplerConfig& cfg, const std::vector<double>& init) {
    if (cfg.chains < 1) throw SamplerError("need at least one chain");
    if (cfg.warmup < 0 || cfg.draws < 0) throw SamplerError("negative warmup or draw count");
    if (!init.empty() && init.size() != dim) throw SamplerError("initial point has wrong size");
    std::vector<ChainResult> results(static_cast<std::size_t>(cfg.chains));
    parallel_for(results.size(), cfg.threads, [&](std::size_t c) {
        Chain chain(target, dim, cfg, static_cast<int>(c));
        results[c] = chain.run(init, static_cast<int>(c));
    });
    return results;
}

}  // namespace crowdmrp
