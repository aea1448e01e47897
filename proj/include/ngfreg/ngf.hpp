// ngf.hpp - normalized gradient fields distance and its matrix-free gradient.
//
//   D(y) = (hbar/2) * sum_i [ 1 - r_i^2 ],
//   r_i  = (<gT_i, gR_i> + tau*rho) / (||gT_i||_tau * ||gR_i||_rho),   ||v||_e = sqrt(<v,v> + e^2)
//
// gT is the finite-difference gradient of the warped template on the image grid, gR that of the
// reference. The gradient with respect to the deformation is assembled as
//   Pt * J_warp^T * G^T * dD/dgT
// without forming any of the factors.

#pragma once

#include <vector>

#include "ngfreg/geometry.hpp"
#include "ngfreg/parallel.hpp"
#include "ngfreg/transfer.hpp"
#include "ngfreg/warp.hpp"

namespace ngfreg {

struct NgfParams {
    double tau = 10.0; // template gradient noise level
    double rho = 10.0; // reference gradient noise level
};

void validate(const NgfParams &p);

template <class Real>
struct ReferenceTerms {
    VectorField3<Real> grad;
    std::vector<Real> norm; // ||grad_i||_rho, never below rho
};

template <class Real>
ReferenceTerms<Real> precompute_reference_terms(const Image3<Real> &reference, const NgfParams &params,
                                                const Executor &exec = serial_executor());

// Per-voxel 1 - r_i^2, unscaled.
template <class Real>
std::vector<Real> ngf_voxel_terms(const WarpResult<Real> &warped, const ReferenceTerms<Real> &ref,
                                  const NgfParams &params, const Executor &exec = serial_executor());

template <class Real>
Real ngf_value(const WarpResult<Real> &warped, const ReferenceTerms<Real> &ref, const NgfParams &params,
               double h_bar, const Executor &exec = serial_executor());

template <class Real>
struct NgfEvaluation {
    Real value = Real(0);
    VectorField3<Real> grad_yhat; // dD/dyhat on the image grid
};

template <class Real>
NgfEvaluation<Real> ngf_value_and_gradient(const WarpResult<Real> &warped, const ReferenceTerms<Real> &ref,
                                           const Image3<Real> &templ, const VectorField3<Real> &yhat,
                                           const NgfParams &params, double h_bar,
                                           const Executor &exec = serial_executor());

template <class Real>
VectorField3<Real> ngf_gradient_wrt_yhat(const WarpResult<Real> &warped, const ReferenceTerms<Real> &ref,
                                         const Image3<Real> &templ, const VectorField3<Real> &yhat,
                                         const NgfParams &params, double h_bar,
                                         const Executor &exec = serial_executor());

// Everything the distance needs on one pyramid level.
template <class Real>
struct LevelData {
    Image3<Real> reference;
    Image3<Real> templ;
    GatherPlan plan;
    ReferenceTerms<Real> ref_terms;
    NgfParams ngf;

    const Grid3 &image_grid() const { return plan.image_grid; }
    const Grid3 &def_grid() const { return plan.def_grid; }
};

template <class Real>
LevelData<Real> make_level_data(Image3<Real> reference, Image3<Real> templ, const Grid3 &def_grid,
                                const NgfParams &ngf, const Executor &exec = serial_executor());

// Image-grid positions of a deformation: identity + P(y - identity). Shares P's derivative, and
// maps the identity on the deformation grid to the identity on the image grid.
template <class Real>
VectorField3<Real> deformation_to_image_grid(const DeformationField<Real> &y, const GatherPlan &plan,
                                             const Executor &exec = serial_executor());

template <class Real>
struct DistanceEvaluation {
    Real value = Real(0);
    VectorField3<Real> grad_y; // on the deformation grid
};

template <class Real>
DistanceEvaluation<Real> distance_and_gradient(const DeformationField<Real> &y, const LevelData<Real> &level,
                                               PtVariant variant = PtVariant::Gather,
                                               const Executor &exec = serial_executor());

template <class Real>
Real distance_value(const DeformationField<Real> &y, const LevelData<Real> &level,
                    const Executor &exec = serial_executor());

} // namespace ngfreg
