#include "ngfreg/ngf.hpp"

#include <cmath>
#include <stdexcept>

namespace ngfreg {

void validate(const NgfParams &p) {
    if(!(p.tau > 0.0) || !std::isfinite(p.tau)) throw std::invalid_argument("NGF tau must be finite and > 0");
    if(!(p.rho > 0.0) || !std::isfinite(p.rho)) throw std::invalid_argument("NGF rho must be finite and > 0");
}

template <class Real>
ReferenceTerms<Real> precompute_reference_terms(const Image3<Real> &reference, const NgfParams &params,
                                                const Executor &exec) {
    validate(params);
    ReferenceTerms<Real> t;
    t.grad = image_gradient(reference, exec);
    t.norm.resize(reference.grid.size());
    const Real rho2 = static_cast<Real>(params.rho * params.rho);
    exec.for_ranges(t.norm.size(), [&](std::size_t begin, std::size_t end) {
        for(std::size_t n = begin; n < end; ++n) {
            const Real gx = t.grad[0][n], gy = t.grad[1][n], gz = t.grad[2][n];
            t.norm[n] = std::sqrt(gx * gx + gy * gy + gz * gz + rho2);
        }
    });
    return t;
}

namespace {

template <class Real>
void check_same_grid(const WarpResult<Real> &warped, const ReferenceTerms<Real> &ref) {
    if(!(warped.warped.grid == ref.grad.grid))
        throw std::invalid_argument("Warped template and reference terms live on different grids");
}

// Per-voxel term and, optionally, dD/dgT scaled by hbar.
template <class Real, bool WithGradient>
void evaluate_voxels(const VectorField3<Real> &gt, const ReferenceTerms<Real> &ref, const NgfParams &params,
                     Real h_bar, std::vector<Real> &terms, VectorField3<Real> *dgt, const Executor &exec) {
    const Real tau = static_cast<Real>(params.tau);
    const Real tau2 = tau * tau;
    const Real tau_rho = static_cast<Real>(params.tau * params.rho);
    exec.for_ranges(terms.size(), [&](std::size_t begin, std::size_t end) {
        for(std::size_t n = begin; n < end; ++n) {
            const Real g[3] = {gt[0][n], gt[1][n], gt[2][n]};
            const Real q[3] = {ref.grad[0][n], ref.grad[1][n], ref.grad[2][n]};
            const Real norm_t = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2] + tau2);
            const Real norm_r = ref.norm[n];
            const Real r = (g[0] * q[0] + g[1] * q[1] + g[2] * q[2] + tau_rho) / (norm_t * norm_r);
            terms[n] = Real(1) - r * r;
            if constexpr(WithGradient) {
                // d/dg (hbar/2)(1 - r^2) = -hbar * r * (q/|q|_rho - r g/|g|_tau) / |g|_tau
                const Real scale = -h_bar * r / norm_t;
                for(int d = 0; d < 3; ++d) (*dgt)[d][n] = scale * (q[d] / norm_r - r * g[d] / norm_t);
            }
        }
    });
}

} // namespace

template <class Real>
std::vector<Real> ngf_voxel_terms(const WarpResult<Real> &warped, const ReferenceTerms<Real> &ref,
                                  const NgfParams &params, const Executor &exec) {
    check_same_grid(warped, ref);
    const auto gt = image_gradient(warped.warped, exec);
    std::vector<Real> terms(gt.size());
    evaluate_voxels<Real, false>(gt, ref, params, Real(1), terms, nullptr, exec);
    return terms;
}

template <class Real>
Real ngf_value(const WarpResult<Real> &warped, const ReferenceTerms<Real> &ref, const NgfParams &params,
               double h_bar, const Executor &exec) {
    const auto terms = ngf_voxel_terms(warped, ref, params, exec);
    return static_cast<Real>(0.5 * h_bar) * deterministic_sum(std::span<const Real>(terms), exec);
}

template <class Real>
NgfEvaluation<Real> ngf_value_and_gradient(const WarpResult<Real> &warped, const ReferenceTerms<Real> &ref,
                                           const Image3<Real> &templ, const VectorField3<Real> &yhat,
                                           const NgfParams &params, double h_bar, const Executor &exec) {
    check_same_grid(warped, ref);
    const Grid3 &grid = warped.warped.grid;
    const auto gt = image_gradient(warped.warped, exec);
    std::vector<Real> terms(gt.size());
    VectorField3<Real> dgt(grid);
    evaluate_voxels<Real, true>(gt, ref, params, static_cast<Real>(h_bar), terms, &dgt, exec);

    NgfEvaluation<Real> res;
    res.value = static_cast<Real>(0.5 * h_bar) * deterministic_sum(std::span<const Real>(terms), exec);
    const auto d_warped = image_gradient_apply_transpose(dgt, grid, exec);
    res.grad_yhat = warp_jacobian_apply_transpose(templ, yhat, d_warped, exec);
    return res;
}

template <class Real>
VectorField3<Real> ngf_gradient_wrt_yhat(const WarpResult<Real> &warped, const ReferenceTerms<Real> &ref,
                                         const Image3<Real> &templ, const VectorField3<Real> &yhat,
                                         const NgfParams &params, double h_bar, const Executor &exec) {
    return ngf_value_and_gradient(warped, ref, templ, yhat, params, h_bar, exec).grad_yhat;
}

template <class Real>
LevelData<Real> make_level_data(Image3<Real> reference, Image3<Real> templ, const Grid3 &def_grid,
                                const NgfParams &ngf, const Executor &exec) {
    validate(ngf);
    if(!(reference.grid == templ.grid))
        throw std::invalid_argument("Reference and template must share one grid (resample the template first)");
    LevelData<Real> level;
    level.plan = build_gather_plan(def_grid, reference.grid);
    level.ref_terms = precompute_reference_terms(reference, ngf, exec);
    level.reference = std::move(reference);
    level.templ = std::move(templ);
    level.ngf = ngf;
    return level;
}

template <class Real>
VectorField3<Real> deformation_to_image_grid(const DeformationField<Real> &y, const GatherPlan &plan,
                                             const Executor &exec) {
    auto yhat = apply_P(displacement(y), plan, exec);
    const auto id = make_identity<Real>(plan.image_grid);
    for(int d = 0; d < 3; ++d)
        for(std::size_t n = 0; n < yhat.size(); ++n) yhat[d][n] += id[d][n];
    return yhat;
}

template <class Real>
DistanceEvaluation<Real> distance_and_gradient(const DeformationField<Real> &y, const LevelData<Real> &level,
                                               PtVariant variant, const Executor &exec) {
    if(!(y.grid == level.def_grid())) throw std::invalid_argument("Deformation does not live on the level's grid");
    const auto yhat = deformation_to_image_grid(y, level.plan, exec);
    const auto warped = warp_image(level.templ, yhat, exec);
    auto ngf = ngf_value_and_gradient(warped, level.ref_terms, level.templ, yhat, level.ngf,
                                      level.image_grid().cell_volume(), exec);
    return {ngf.value, apply_Pt(ngf.grad_yhat, level.plan, variant, exec)};
}

template <class Real>
Real distance_value(const DeformationField<Real> &y, const LevelData<Real> &level, const Executor &exec) {
    if(!(y.grid == level.def_grid())) throw std::invalid_argument("Deformation does not live on the level's grid");
    const auto yhat = deformation_to_image_grid(y, level.plan, exec);
    const auto warped = warp_image(level.templ, yhat, exec);
    return ngf_value(warped, level.ref_terms, level.ngf, level.image_grid().cell_volume(), exec);
}

#define NGFREG_INSTANTIATE(Real)                                                                                    \
    template ReferenceTerms<Real> precompute_reference_terms<Real>(const Image3<Real> &, const NgfParams &,         \
                                                                   const Executor &);                               \
    template std::vector<Real> ngf_voxel_terms<Real>(const WarpResult<Real> &, const ReferenceTerms<Real> &,        \
                                                     const NgfParams &, const Executor &);                          \
    template Real ngf_value<Real>(const WarpResult<Real> &, const ReferenceTerms<Real> &, const NgfParams &,        \
                                  double, const Executor &);                                                        \
    template NgfEvaluation<Real> ngf_value_and_gradient<Real>(const WarpResult<Real> &, const ReferenceTerms<Real> &, \
                                                              const Image3<Real> &, const VectorField3<Real> &,     \
                                                              const NgfParams &, double, const Executor &);         \
    template VectorField3<Real> ngf_gradient_wrt_yhat<Real>(const WarpResult<Real> &, const ReferenceTerms<Real> &, \
                                                            const Image3<Real> &, const VectorField3<Real> &,       \
                                                            const NgfParams &, double, const Executor &);           \
    template LevelData<Real> make_level_data<Real>(Image3<Real>, Image3<Real>, const Grid3 &, const NgfParams &,    \
                                                   const Executor &);                                               \
    template VectorField3<Real> deformation_to_image_grid<Real>(const DeformationField<Real> &, const GatherPlan &, \
                                                                const Executor &);                                  \
    template DistanceEvaluation<Real> distance_and_gradient<Real>(const DeformationField<Real> &,                   \
                                                                  const LevelData<Real> &, PtVariant,               \
                                                                  const Executor &);                                \
    template Real distance_value<Real>(const DeformationField<Real> &, const LevelData<Real> &, const Executor &);

NGFREG_INSTANTIATE(float)
NGFREG_INSTANTIATE(double)

} // namespace ngfreg
