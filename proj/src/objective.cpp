#include "ngfreg/objective.hpp"

#include <algorithm>
#include <stdexcept>

namespace ngfreg {

template <class Real>
ObjectiveValue<Real> evaluate_objective(const DeformationField<Real> &y, const LevelData<Real> &level, double alpha,
                                        PtVariant variant, const Executor &exec) {
    validate(CurvatureParams{alpha});
    const auto dist = distance_and_gradient(y, level, variant, exec);
    const auto curv = curvature_value_and_gradient(y, exec);
    const Real a = static_cast<Real>(alpha);

    ObjectiveValue<Real> out;
    out.D = dist.value;
    out.S = curv.value;
    out.J = out.D + a * out.S;
    const std::size_t n = y.size();
    out.grad.resize(3 * n);
    for(int d = 0; d < 3; ++d)
        for(std::size_t i = 0; i < n; ++i) out.grad[d * n + i] = dist.grad_y[d][i] + a * curv.grad[d][i];
    return out;
}

template <class Real>
LevelObjective<Real>::LevelObjective(const LevelData<Real> &level, double alpha, PtVariant variant,
                                     const Executor &exec)
    : level_(level), alpha_(alpha), variant_(variant), exec_(exec), scratch_(level.def_grid()) {}

template <class Real>
Real LevelObjective<Real>::operator()(std::span<const Real> x, std::span<Real> grad) {
    scratch_.assign_flat(x);
    auto v = evaluate_objective(scratch_, level_, alpha_, variant_, exec_);
    if(grad.size() != v.grad.size()) throw std::invalid_argument("Gradient buffer has the wrong length");
    std::copy(v.grad.begin(), v.grad.end(), grad.begin());
    last_D_ = v.D;
    last_S_ = v.S;
    ++evaluations_;
    return v.J;
}

template <class Real>
ObjectiveCallback<Real> LevelObjective<Real>::callback() {
    return [this](std::span<const Real> x, std::span<Real> g) { return (*this)(x, g); };
}

template ObjectiveValue<float> evaluate_objective<float>(const DeformationField<float> &, const LevelData<float> &,
                                                         double, PtVariant, const Executor &);
template ObjectiveValue<double> evaluate_objective<double>(const DeformationField<double> &,
                                                           const LevelData<double> &, double, PtVariant,
                                                           const Executor &);
template class LevelObjective<float>;
template class LevelObjective<double>;

} // namespace ngfreg
