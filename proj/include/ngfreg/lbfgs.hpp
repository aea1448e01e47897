// lbfgs.hpp - limited-memory BFGS with Armijo backtracking.

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace ngfreg {

struct LbfgsConfig {
    int memory = 5;
    int max_iterations = 100;
    double c1 = 1e-4;
    double initial_step = 1.0;
    double step_shrink = 0.5;
    int max_ls_steps = 20;
    // Upper bound on the max-norm of the first trial step while the history is empty, in units of
    // the variables. Non-positive disables the bound.
    double first_step_limit = 1.0;
};

struct StoppingRules {
    double tol_J = 1e-4;    // |J_{k-1} - J_k| <= tol_J * |J_{k-1}|
    double tol_grad = 1e-3; // |g_k|_inf <= tol_grad * |g_0|_inf
    double tol_step = 1e-5; // |x_k - x_{k-1}|_2 <= tol_step * (1 + |x_{k-1}|_2)
    int min_iterations = 3;
    double abs_grad = 1e-10; // |g|_inf at or below this stops immediately, even at iteration 0
};

void validate(const LbfgsConfig &cfg);
void validate(const StoppingRules &stop);

enum class StopReason { None, StationaryStart, GradientNorm, ObjectiveChange, StepNorm, MaxIterations, LineSearchFailure };

std::string to_string(StopReason r);

struct IterationRecord {
    int iteration = 0;
    double J = 0.0;
    double grad_inf = 0.0;
    double step = 0.0;        // accepted step length t
    double step_norm = 0.0;   // |x_k - x_{k-1}|_2
    int evaluations = 0;      // objective evaluations spent in this iteration's line search
};

struct LbfgsTrace {
    std::vector<IterationRecord> iterations; // entry 0 describes x0
    StopReason reason = StopReason::None;
    bool line_search_failed = false;
    int evaluations = 0;
    int rejected_updates = 0; // history pairs dropped by the curvature filter
};

template <class Real>
using ObjectiveCallback = std::function<Real(std::span<const Real> x, std::span<Real> grad)>;

template <class Real>
struct CurvaturePair {
    std::vector<Real> s;
    std::vector<Real> y;
    double sy = 0.0;
};

template <class Real>
class LbfgsHistory {
  public:
    explicit LbfgsHistory(int memory = 5);

    // Stores (s, y) if <s,y> > 1e-10 |s||y|; returns whether it was kept.
    bool push(std::vector<Real> s, std::vector<Real> y);
    void clear() { pairs_.clear(); }

    std::size_t size() const noexcept { return pairs_.size(); }
    bool empty() const noexcept { return pairs_.empty(); }
    const std::deque<CurvaturePair<Real>> &pairs() const noexcept { return pairs_; }

  private:
    std::size_t memory_;
    std::deque<CurvaturePair<Real>> pairs_;
};

// -H g via the two-loop recursion; -g for an empty history.
template <class Real>
std::vector<Real> two_loop_direction(const LbfgsHistory<Real> &history, std::span<const Real> g);

template <class Real>
struct LbfgsResult {
    std::vector<Real> x;
    double J = 0.0;
    LbfgsTrace trace;
};

using IterationObserver = std::function<void(const IterationRecord &)>;

template <class Real>
LbfgsResult<Real> lbfgs_minimize(const ObjectiveCallback<Real> &f, std::vector<Real> x0, const LbfgsConfig &cfg,
                                 const StoppingRules &stop, const IterationObserver &observer = {});

} // namespace ngfreg
