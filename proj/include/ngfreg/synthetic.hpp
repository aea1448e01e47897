// synthetic.hpp - analytic test volumes with a known deformation.
//
// The template is a smooth sum of oblique plane waves plus a blob. The reference samples the
// same pattern through phi(x) = x + b(x), where b is a Gaussian bump, so phi is the exact
// reference-to-template correspondence a registration should recover.

#pragma once

#include <cstdint>

#include "ngfreg/evaluation.hpp"
#include "ngfreg/geometry.hpp"

namespace ngfreg {

struct SyntheticSpec {
    Index3 dims{64, 64, 64};
    Vec3 spacing{1.0, 1.0, 1.0};
    Vec3 origin{0.0, 0.0, 0.0};
    double bump_amplitude_voxels = 4.0;
    double bump_sigma_fraction = 0.3125; // sigma relative to the smallest non-unit extent
    int probes_per_axis = 5;             // lattice spans the central half of the volume
};

struct SyntheticCase {
    Image3<double> reference;
    Image3<double> templ;
    LandmarkSet probes_reference; // world mm
    LandmarkSet probes_template;  // phi(probes_reference)
    SyntheticSpec spec;
};

// Intensity pattern in world coordinates, for a volume described by spec.
double synthetic_intensity(const SyntheticSpec &spec, const Vec3 &world);

// Ground-truth correspondence phi(x) = x + b(x).
Vec3 synthetic_map(const SyntheticSpec &spec, const Vec3 &world);

SyntheticCase make_synthetic_case(const SyntheticSpec &spec);

} // namespace ngfreg
