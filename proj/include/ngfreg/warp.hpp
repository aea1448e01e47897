// warp.hpp - template sampling at deformed positions and image-grid finite differences.
//
// Sampling is trilinear between template cell centers, with zero-valued ghost nodes one voxel
// beyond each face. Samples therefore fade to 0 within a voxel of the cell-center hull and are 0
// further out; the mask flags samples inside the hull. The matching adjoints are exact
// transposes of the linearized operators, evaluated stencil by stencil.

#pragma once

#include <cstdint>
#include <vector>

#include "ngfreg/geometry.hpp"
#include "ngfreg/parallel.hpp"

namespace ngfreg {

template <class Real>
struct WarpResult {
    Image3<Real> warped;
    std::vector<std::uint8_t> inside_mask;
};

template <class Real>
WarpResult<Real> warp_image(const Image3<Real> &templ, const VectorField3<Real> &yhat,
                            const Executor &exec = serial_executor());

// (d T(yhat) / d yhat)^T w: per voxel, w_i times the spatial gradient (mm^-1) of the trilinear
// interpolant at yhat_i. Zero beyond the ghost ring.
template <class Real>
VectorField3<Real> warp_jacobian_apply_transpose(const Image3<Real> &templ, const VectorField3<Real> &yhat,
                                                 const std::vector<Real> &w, const Executor &exec = serial_executor());

// Central differences in the interior, one-sided first-order differences on faces, zero along
// axes of length 1.
template <class Real>
VectorField3<Real> image_gradient(const Image3<Real> &img, const Executor &exec = serial_executor());

// Exact transpose of image_gradient.
template <class Real>
std::vector<Real> image_gradient_apply_transpose(const VectorField3<Real> &w, const Grid3 &grid,
                                                 const Executor &exec = serial_executor());

// Trilinear, clamp-to-edge evaluation of grid samples at an arbitrary world position.
template <class Real>
Real sample_clamped(const std::vector<Real> &values, const Grid3 &grid, const Vec3 &world);

// Trilinear, clamp-to-edge resampling of an image onto another grid.
template <class Real>
Image3<Real> resample_clamped(const Image3<Real> &img, const Grid3 &target, const Executor &exec = serial_executor());

} // namespace ngfreg
