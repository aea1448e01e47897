#include "ngfreg/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ngfreg {

namespace {

struct Frame {
    Vec3 center{};
    Vec3 extent{};
    double scale = 1.0; // smallest non-unit extent in mm
};

Frame frame_of(const SyntheticSpec &spec) {
    Frame f;
    f.scale = 0.0;
    for(int d = 0; d < 3; ++d) {
        f.extent[d] = static_cast<double>(spec.dims[d]) * spec.spacing[d];
        f.center[d] = spec.origin[d] + 0.5 * static_cast<double>(spec.dims[d] - 1) * spec.spacing[d];
        if(spec.dims[d] > 1) f.scale = f.scale == 0.0 ? f.extent[d] : std::min(f.scale, f.extent[d]);
    }
    if(f.scale == 0.0) f.scale = 1.0;
    return f;
}

} // namespace

double synthetic_intensity(const SyntheticSpec &spec, const Vec3 &world) {
    const Frame f = frame_of(spec);
    Vec3 p{};
    for(int d = 0; d < 3; ++d) p[d] = (world[d] - f.center[d]) / f.scale; // roughly [-0.5, 0.5]

    constexpr double two_pi = 2.0 * std::numbers::pi;
    struct Wave {
        double kx, ky, kz, phase, amplitude;
    };
    // Wavelengths of 0.4 to 0.6 extents in assorted directions.
    static constexpr Wave waves[] = {
        {2.0, 0.7, 0.3, 0.3, 420.0},
        {-0.5, 1.9, 0.8, 1.1, 360.0},
        {0.6, -0.4, 2.1, 2.0, 330.0},
        {1.2, 1.3, -1.1, 0.7, 250.0},
    };
    double v = 0.0;
    for(const auto &w : waves) v += w.amplitude * std::sin(two_pi * (w.kx * p[0] + w.ky * p[1] + w.kz * p[2]) + w.phase);
    const double r2 = (p[0] - 0.1) * (p[0] - 0.1) + (p[1] + 0.08) * (p[1] + 0.08) + (p[2] - 0.05) * (p[2] - 0.05);
    v += 500.0 * std::exp(-r2 / (2.0 * 0.12 * 0.12));
    return v;
}

Vec3 synthetic_map(const SyntheticSpec &spec, const Vec3 &world) {
    const Frame f = frame_of(spec);
    const double sigma = spec.bump_sigma_fraction * f.scale;
    double r2 = 0.0;
    for(int d = 0; d < 3; ++d)
        if(spec.dims[d] > 1) r2 += (world[d] - f.center[d]) * (world[d] - f.center[d]);
    const double g = std::exp(-r2 / (2.0 * sigma * sigma));
    // Unit direction, scaled per axis by the voxel size so the amplitude is in voxels.
    const Vec3 dir{0.8, 0.48, -0.36};
    Vec3 out = world;
    for(int d = 0; d < 3; ++d)
        if(spec.dims[d] > 1) out[d] += spec.bump_amplitude_voxels * spec.spacing[d] * dir[d] * g;
    return out;
}

SyntheticCase make_synthetic_case(const SyntheticSpec &spec) {
    SyntheticCase c;
    c.spec = spec;
    const Grid3 grid(spec.dims, spec.spacing, spec.origin);
    c.reference = Image3<double>(grid);
    c.templ = Image3<double>(grid);
    for(std::size_t n = 0; n < grid.size(); ++n) {
        const Vec3 x = world_of_index(grid, grid.delinearize(n));
        c.templ.values[n] = synthetic_intensity(spec, x);
        c.reference.values[n] = synthetic_intensity(spec, synthetic_map(spec, x));
    }

    c.probes_reference.frame = LandmarkFrame::WorldMm;
    c.probes_template.frame = LandmarkFrame::WorldMm;
    const int n = std::max(1, spec.probes_per_axis);
    const auto lattice = [&](int d, int a) {
        const double m = static_cast<double>(spec.dims[d] - 1);
        const double t = n == 1 ? 0.5 : static_cast<double>(a) / static_cast<double>(n - 1);
        return spec.origin[d] + (0.25 + 0.5 * t) * m * spec.spacing[d];
    };
    for(int k = 0; k < n; ++k)
        for(int j = 0; j < n; ++j)
            for(int i = 0; i < n; ++i) {
                const Vec3 p{lattice(0, i), lattice(1, j), lattice(2, k)};
                c.probes_reference.points.push_back(p);
                c.probes_template.points.push_back(synthetic_map(spec, p));
            }
    return c;
}

} // namespace ngfreg
