// transfer.hpp - grid conversion between the deformation grid and the image grid.
//
// P interpolates a field given at deformation-grid cell centers onto image-grid cell centers with
// separable linear weights. Image points beyond the outermost deformation cell centers take the
// edge value (clamp-to-edge), so every row of P sums to one.
//
// Three implementations of the transpose are provided:
//   gather    - one output (deformation) point at a time, summing its image-domain support in
//               a fixed x/y/z order. No write conflicts; bit-identical for any worker count.
//   scatter   - one input (image) point at a time, pushing weighted values with atomic adds.
//   redblack  - scatter over z-slabs; even slabs run concurrently, then odd slabs.

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ngfreg/geometry.hpp"
#include "ngfreg/parallel.hpp"

namespace ngfreg {

enum class PtVariant { Gather, Scatter, RedBlack };

std::string to_string(PtVariant v);
PtVariant parse_pt_variant(const std::string &s);

// Linear weights of one continuous coordinate s (in coarse index units) on an axis of length m.
// Clamped to [0, m-1]. Zero weights are dropped, so count is 1 when s lands on a node.
struct LinearWeights {
    std::array<std::int64_t, 2> index{0, 0};
    std::array<double, 2> weight{1.0, 0.0};
    int count = 1;
};
LinearWeights clamped_linear_weights(double s, std::int64_t m);

// One-dimensional transfer table between a coarse and a fine axis spanning the same interval.
struct AxisWeights {
    std::int64_t coarse = 1;
    std::int64_t fine = 1;

    // Row view: fine index -> at most two (coarse index, weight) entries.
    std::vector<LinearWeights> rows;

    // Column view: coarse index j owns entries [col_begin[j], col_begin[j+1]) of
    // (fine index, weight), fine indices ascending and contiguous.
    std::vector<std::size_t> col_begin;
    std::vector<std::int64_t> col_fine;
    std::vector<double> col_weight;
};

AxisWeights build_axis_weights(std::int64_t coarse, std::int64_t fine);

struct GatherPlan {
    Grid3 def_grid;
    Grid3 image_grid;
    std::array<AxisWeights, 3> axes;
};

// Throws std::invalid_argument when the grids do not span the same world box or the image grid is
// coarser than the deformation grid along some axis.
void check_transfer_grids(const Grid3 &def_grid, const Grid3 &image_grid);

GatherPlan build_gather_plan(const Grid3 &def_grid, const Grid3 &image_grid);

template <class Real>
VectorField3<Real> apply_P(const VectorField3<Real> &y, const GatherPlan &plan,
                           const Executor &exec = serial_executor());

template <class Real>
VectorField3<Real> apply_P(const VectorField3<Real> &y, const Grid3 &image_grid,
                           const Executor &exec = serial_executor());

template <class Real>
VectorField3<Real> apply_Pt_gather(const VectorField3<Real> &r, const GatherPlan &plan,
                                   const Executor &exec = serial_executor());

template <class Real>
VectorField3<Real> apply_Pt_scatter_atomic(const VectorField3<Real> &r, const GatherPlan &plan,
                                           const Executor &exec = serial_executor());

template <class Real>
VectorField3<Real> apply_Pt_redblack(const VectorField3<Real> &r, const GatherPlan &plan,
                                     const Executor &exec = serial_executor());

template <class Real>
VectorField3<Real> apply_Pt(const VectorField3<Real> &r, const GatherPlan &plan, PtVariant variant,
                            const Executor &exec = serial_executor());

} // namespace ngfreg
