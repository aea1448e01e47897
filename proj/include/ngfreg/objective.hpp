// objective.hpp - J(y) = D_NGF(y) + alpha * S(y) on one pyramid level, with a flat
// component-major variable layout (all y_x, then y_y, then y_z).

#pragma once

#include <span>
#include <vector>

#include "ngfreg/curvature.hpp"
#include "ngfreg/lbfgs.hpp"
#include "ngfreg/ngf.hpp"

namespace ngfreg {

template <class Real>
struct ObjectiveValue {
    Real J = Real(0);
    Real D = Real(0);
    Real S = Real(0);
    std::vector<Real> grad;
};

template <class Real>
ObjectiveValue<Real> evaluate_objective(const DeformationField<Real> &y, const LevelData<Real> &level, double alpha,
                                        PtVariant variant = PtVariant::Gather,
                                        const Executor &exec = serial_executor());

// Adapts one level to the optimizer's callback contract and keeps the split of the most recent
// evaluation for reporting.
template <class Real>
class LevelObjective {
  public:
    LevelObjective(const LevelData<Real> &level, double alpha, PtVariant variant, const Executor &exec);

    Real operator()(std::span<const Real> x, std::span<Real> grad);
    ObjectiveCallback<Real> callback();

    Real last_D() const noexcept { return last_D_; }
    Real last_S() const noexcept { return last_S_; }
    int evaluations() const noexcept { return evaluations_; }

  private:
    const LevelData<Real> &level_;
    double alpha_;
    PtVariant variant_;
    const Executor &exec_;
    DeformationField<Real> scratch_;
    Real last_D_ = Real(0);
    Real last_S_ = Real(0);
    int evaluations_ = 0;
};

} // namespace ngfreg
