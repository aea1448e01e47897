// multilevel.hpp - image pyramids, per-level deformation grids and the coarse-to-fine driver.

#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ngfreg/geometry.hpp"
#include "ngfreg/lbfgs.hpp"
#include "ngfreg/ngf.hpp"
#include "ngfreg/transfer.hpp"

namespace ngfreg {

struct MultilevelConfig {
    int num_levels = 0; // 0 selects the count automatically from coarsest_min_dim
    int coarsest_min_dim = 16;
    int grid_ratio = 4;
    double alpha = 1.0;
    NgfParams ngf;
    LbfgsConfig lbfgs;
    StoppingRules stop;
    Precision precision = Precision::F64;
    int workers = 1;
    PtVariant pt_variant = PtVariant::Gather;
};

void validate(const MultilevelConfig &cfg);

struct LevelIterate {
    int iteration = 0;
    double J = 0.0;
    double D = 0.0;
    double S = 0.0;
    double grad_inf = 0.0;
    double step = 0.0;
};

struct LevelReport {
    int level_index = 0; // 0 = coarsest
    Grid3 image_grid;
    Grid3 def_grid;
    int iterations = 0;
    int evaluations = 0;
    StopReason stop_reason = StopReason::None;
    bool line_search_failed = false;
    std::vector<LevelIterate> trace;
    double seconds_setup = 0.0;
    double seconds_optimize = 0.0;
    double seconds_prolong = 0.0;
};

struct RegistrationReport {
    Precision precision = Precision::F64;
    PtVariant pt_variant = PtVariant::Gather;
    int workers = 1;
    double alpha = 0.0;
    NgfParams ngf;
    std::vector<LevelReport> levels;
    double seconds_pyramid = 0.0;
    double seconds_total = 0.0;
    double final_grad_inf = 0.0;
    double final_max_displacement_mm = 0.0;
    double final_max_displacement_voxels = 0.0; // per-axis |u_d| / image spacing_d, maximized
};

template <class Real>
struct RegistrationResult {
    DeformationField<Real> deformation; // on the finest deformation grid
    RegistrationReport report;
};

class RegistrationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Halves every axis of length > 1 (ceil for odd lengths) by averaging 2x2x2 blocks. The world box
// is preserved: spacing becomes extent / new length and the origin moves to the new first center.
template <class Real>
Image3<Real> downsample_image(const Image3<Real> &img);

Grid3 downsampled_grid(const Grid3 &g);

// Number of levels such that the smallest non-unit axis stays >= coarsest_min_dim.
int auto_level_count(const Grid3 &g, int coarsest_min_dim);

// Fine to coarse: result[0] is the input. Throws std::invalid_argument when some axis of
// length >= 2 would shrink below 2.
template <class Real>
std::vector<Image3<Real>> build_pyramid(const Image3<Real> &img, int levels);

// ceil(dims / ratio), at least 2 per axis unless the image axis has length 1; same world box.
Grid3 deformation_grid_for(const Grid3 &image_grid, int grid_ratio);

// Interpolates the displacement onto the finer grid with the clamped linear rule of P and adds
// the finer identity.
template <class Real>
DeformationField<Real> prolong_deformation(const DeformationField<Real> &y, const Grid3 &finer_def_grid);

// Largest |u_d| over the field, in mm and in units of the given voxel spacing.
template <class Real>
std::pair<double, double> max_displacement(const DeformationField<Real> &y, const Vec3 &voxel_spacing);

// R and T must share a grid.
template <class Real>
RegistrationResult<Real> register_images(const Image3<Real> &reference, const Image3<Real> &templ,
                                         const MultilevelConfig &cfg);

} // namespace ngfreg
