// curvature.hpp - curvature smoothness term on the displacement u = y - identity.
//
//   S(y) = (hbar_y / 2) * sum_d sum_points (L u_d)^2
//
// L is the 7-point Laplacian. Outside the grid, samples are extended linearly
// (u[-1] := 2u[0] - u[1]), so every boundary point's second difference along that axis is zero
// and affine displacements are in the null space.

#pragma once

#include <vector>

#include "ngfreg/geometry.hpp"
#include "ngfreg/parallel.hpp"

namespace ngfreg {

struct CurvatureParams {
    double alpha = 1.0;
};

void validate(const CurvatureParams &p);

template <class Real>
std::vector<Real> apply_laplacian(const std::vector<Real> &u, const Grid3 &grid,
                                  const Executor &exec = serial_executor());

// Exact transpose of apply_laplacian.
template <class Real>
std::vector<Real> apply_laplacian_transpose(const std::vector<Real> &w, const Grid3 &grid,
                                            const Executor &exec = serial_executor());

template <class Real>
Real curvature_value(const DeformationField<Real> &y, const Executor &exec = serial_executor());

// hbar_y * L^T L u per component.
template <class Real>
VectorField3<Real> curvature_gradient(const DeformationField<Real> &y, const Executor &exec = serial_executor());

template <class Real>
struct CurvatureEvaluation {
    Real value = Real(0);
    VectorField3<Real> grad;
};

template <class Real>
CurvatureEvaluation<Real> curvature_value_and_gradient(const DeformationField<Real> &y,
                                                       const Executor &exec = serial_executor());

} // namespace ngfreg
