#include "ngfreg/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ngfreg {

void validate(const LbfgsConfig &cfg) {
    if(cfg.memory < 1) throw std::invalid_argument("L-BFGS memory must be >= 1");
    if(!(cfg.c1 > 0.0 && cfg.c1 < 1.0)) throw std::invalid_argument("Armijo c1 must lie in (0,1)");
    if(!(cfg.step_shrink > 0.0 && cfg.step_shrink < 1.0)) throw std::invalid_argument("step_shrink must lie in (0,1)");
    if(!(cfg.initial_step > 0.0)) throw std::invalid_argument("initial_step must be > 0");
    if(cfg.max_ls_steps < 1) throw std::invalid_argument("max_ls_steps must be >= 1");
    if(cfg.max_iterations < 0) throw std::invalid_argument("max_iterations must be >= 0");
}

void validate(const StoppingRules &stop) {
    if(!(stop.tol_J > 0.0 && stop.tol_grad > 0.0 && stop.tol_step > 0.0))
        throw std::invalid_argument("Stopping tolerances must be > 0");
    if(stop.min_iterations < 0) throw std::invalid_argument("min_iterations must be >= 0");
}

std::string to_string(StopReason r) {
    switch(r) {
    case StopReason::None: return "none";
    case StopReason::StationaryStart: return "stationary_start";
    case StopReason::GradientNorm: return "gradient_norm";
    case StopReason::ObjectiveChange: return "objective_change";
    case StopReason::StepNorm: return "step_norm";
    case StopReason::MaxIterations: return "max_iterations";
    case StopReason::LineSearchFailure: return "line_search_failure";
    }
    return "unknown";
}

namespace {

template <class Real>
double dot(std::span<const Real> a, std::span<const Real> b) {
    double s = 0.0;
    for(std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return s;
}

template <class Real>
double norm2(std::span<const Real> a) {
    return std::sqrt(dot(a, a));
}

template <class Real>
double norm_inf(std::span<const Real> a) {
    double m = 0.0;
    for(Real v : a) m = std::max(m, std::abs(static_cast<double>(v)));
    return m;
}

template <class Real>
std::span<const Real> cspan(const std::vector<Real> &v) {
    return {v.data(), v.size()};
}

} // namespace

template <class Real>
LbfgsHistory<Real>::LbfgsHistory(int memory) : memory_(static_cast<std::size_t>(std::max(1, memory))) {}

template <class Real>
bool LbfgsHistory<Real>::push(std::vector<Real> s, std::vector<Real> y) {
    const double sy = dot(cspan(s), cspan(y));
    if(!(sy > 1e-10 * norm2(cspan(s)) * norm2(cspan(y)))) return false;
    if(pairs_.size() == memory_) pairs_.pop_front();
    pairs_.push_back({std::move(s), std::move(y), sy});
    return true;
}

template <class Real>
std::vector<Real> two_loop_direction(const LbfgsHistory<Real> &history, std::span<const Real> g) {
    std::vector<double> q(g.begin(), g.end());
    const auto &pairs = history.pairs();
    std::vector<double> alpha(pairs.size());
    for(std::size_t idx = pairs.size(); idx-- > 0;) {
        const auto &p = pairs[idx];
        double sq = 0.0;
        for(std::size_t i = 0; i < q.size(); ++i) sq += static_cast<double>(p.s[i]) * q[i];
        alpha[idx] = sq / p.sy;
        for(std::size_t i = 0; i < q.size(); ++i) q[i] -= alpha[idx] * static_cast<double>(p.y[i]);
    }
    double gamma = 1.0;
    if(!pairs.empty()) {
        const auto &last = pairs.back();
        gamma = last.sy / dot(cspan(last.y), cspan(last.y));
    }
    for(auto &v : q) v *= gamma;
    for(std::size_t idx = 0; idx < pairs.size(); ++idx) {
        const auto &p = pairs[idx];
        double yr = 0.0;
        for(std::size_t i = 0; i < q.size(); ++i) yr += static_cast<double>(p.y[i]) * q[i];
        const double beta = yr / p.sy;
        for(std::size_t i = 0; i < q.size(); ++i) q[i] += static_cast<double>(p.s[i]) * (alpha[idx] - beta);
    }
    std::vector<Real> dir(q.size());
    for(std::size_t i = 0; i < q.size(); ++i) dir[i] = static_cast<Real>(-q[i]);
    return dir;
}

template <class Real>
LbfgsResult<Real> lbfgs_minimize(const ObjectiveCallback<Real> &f, std::vector<Real> x0, const LbfgsConfig &cfg,
                                 const StoppingRules &stop, const IterationObserver &observer) {
    validate(cfg);
    validate(stop);

    LbfgsResult<Real> res;
    auto &trace = res.trace;
    std::vector<Real> x = std::move(x0);
    std::vector<Real> g(x.size());
    double J = static_cast<double>(f(cspan(x), std::span<Real>(g)));
    trace.evaluations = 1;
    if(!std::isfinite(J)) throw std::runtime_error("Objective is not finite at the starting point");

    const double g0_inf = norm_inf(cspan(g));
    {
        IterationRecord rec;
        rec.J = J;
        rec.grad_inf = g0_inf;
        rec.evaluations = 1;
        trace.iterations.push_back(rec);
        if(observer) observer(rec);
    }

    const auto finish = [&](StopReason reason) {
        trace.reason = reason;
        res.x = std::move(x);
        res.J = J;
        return res;
    };

    if(g0_inf <= stop.abs_grad) return finish(StopReason::StationaryStart);
    if(cfg.max_iterations == 0) return finish(StopReason::MaxIterations);

    LbfgsHistory<Real> history(cfg.memory);
    std::vector<Real> x_trial(x.size());
    std::vector<Real> g_trial(x.size());

    for(int k = 1; k <= cfg.max_iterations; ++k) {
        bool accepted = false;
        double t = 0.0;
        double J_trial = J;
        int evals = 0;

        // A failed search with a quasi-Newton direction is retried once along -g.
        for(int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            if(attempt == 1) {
                if(history.empty()) break;
                history.clear();
            }
            std::vector<Real> d = two_loop_direction(history, cspan(g));
            double gd = dot(cspan(g), cspan(d));
            if(!(gd < 0.0)) {
                history.clear();
                d = two_loop_direction(history, cspan(g));
                gd = dot(cspan(g), cspan(d));
            }
            t = cfg.initial_step;
            if(history.empty() && cfg.first_step_limit > 0.0) {
                const double d_inf = norm_inf(cspan(d));
                if(d_inf > 0.0) t = std::min(t, cfg.first_step_limit / d_inf);
            }
            for(int ls = 0; ls < cfg.max_ls_steps; ++ls) {
                for(std::size_t i = 0; i < x.size(); ++i) x_trial[i] = x[i] + static_cast<Real>(t) * d[i];
                J_trial = static_cast<double>(f(cspan(x_trial), std::span<Real>(g_trial)));
                ++evals;
                if(std::isfinite(J_trial) && J_trial <= J + cfg.c1 * t * gd) {
                    accepted = true;
                    break;
                }
                t *= cfg.step_shrink;
            }
        }
        trace.evaluations += evals;

        if(!accepted) {
            trace.line_search_failed = true;
            return finish(StopReason::LineSearchFailure);
        }

        std::vector<Real> s(x.size()), yv(x.size());
        for(std::size_t i = 0; i < x.size(); ++i) {
            s[i] = x_trial[i] - x[i];
            yv[i] = g_trial[i] - g[i];
        }
        const double step_norm = norm2(cspan(s));
        const double x_norm = norm2(cspan(x));
        // A rejected pair means the stored curvature no longer describes the current region; restart.
        if(!history.push(std::move(s), std::move(yv))) {
            ++trace.rejected_updates;
            history.clear();
        }

        const double J_prev = J;
        x.swap(x_trial);
        g.swap(g_trial);
        J = J_trial;

        IterationRecord rec;
        rec.iteration = k;
        rec.J = J;
        rec.grad_inf = norm_inf(cspan(g));
        rec.step = t;
        rec.step_norm = step_norm;
        rec.evaluations = evals;
        trace.iterations.push_back(rec);
        if(observer) observer(rec);

        if(rec.grad_inf <= stop.abs_grad) return finish(StopReason::GradientNorm);
        if(k >= stop.min_iterations) {
            if(rec.grad_inf <= stop.tol_grad * g0_inf) return finish(StopReason::GradientNorm);
            if(std::abs(J_prev - J) <= stop.tol_J * std::abs(J_prev)) return finish(StopReason::ObjectiveChange);
            if(step_norm <= stop.tol_step * (1.0 + x_norm)) return finish(StopReason::StepNorm);
        }
    }
    return finish(StopReason::MaxIterations);
}

template class LbfgsHistory<float>;
template class LbfgsHistory<double>;
template std::vector<float> two_loop_direction<float>(const LbfgsHistory<float> &, std::span<const float>);
template std::vector<double> two_loop_direction<double>(const LbfgsHistory<double> &, std::span<const double>);
template LbfgsResult<float> lbfgs_minimize<float>(const ObjectiveCallback<float> &, std::vector<float>,
                                                  const LbfgsConfig &, const StoppingRules &, const IterationObserver &);
template LbfgsResult<double> lbfgs_minimize<double>(const ObjectiveCallback<double> &, std::vector<double>,
                                                    const LbfgsConfig &, const StoppingRules &,
                                                    const IterationObserver &);

} // namespace ngfreg
