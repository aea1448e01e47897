#include "ngfreg/evaluation.hpp"

#include <cmath>
#include <stdexcept>

#include "ngfreg/warp.hpp"

namespace ngfreg {

std::string to_string(LandmarkFrame f) {
    switch(f) {
    case LandmarkFrame::VoxelIndex1Based: return "index1";
    case LandmarkFrame::VoxelIndex0Based: return "index0";
    case LandmarkFrame::WorldMm: return "world";
    }
    return "unknown";
}

LandmarkFrame parse_landmark_frame(const std::string &s) {
    if(s == "index1" || s == "voxel1") return LandmarkFrame::VoxelIndex1Based;
    if(s == "index0" || s == "voxel0") return LandmarkFrame::VoxelIndex0Based;
    if(s == "world" || s == "mm") return LandmarkFrame::WorldMm;
    throw std::invalid_argument("Unknown landmark frame '" + s + "' (expected index1, index0 or world)");
}

LandmarkSet to_world(const LandmarkSet &set, const Grid3 &image_grid) {
    if(set.frame == LandmarkFrame::WorldMm) return set;
    const double base = set.frame == LandmarkFrame::VoxelIndex1Based ? 1.0 : 0.0;
    LandmarkSet out;
    out.frame = LandmarkFrame::WorldMm;
    out.points.reserve(set.points.size());
    for(const auto &p : set.points) {
        Vec3 w{};
        for(int d = 0; d < 3; ++d) w[d] = image_grid.origin()[d] + (p[d] - base) * image_grid.step(d);
        out.points.push_back(w);
    }
    return out;
}

template <class Real>
Vec3 map_point(const DeformationField<Real> &y, const VectorField3<Real> &u, const Vec3 &p) {
    Vec3 q{};
    for(int d = 0; d < 3; ++d) q[d] = p[d] + static_cast<double>(sample_clamped(u[d], y.grid, p));
    return q;
}

template <class Real>
LandmarkErrors landmark_error(const DeformationField<Real> &y, const LandmarkSet &reference,
                              const LandmarkSet &templ, const Grid3 &image_grid) {
    if(reference.count() != templ.count())
        throw std::invalid_argument("Landmark count mismatch: " + std::to_string(reference.count()) + " reference vs " +
                                    std::to_string(templ.count()) + " template");
    const auto ref = to_world(reference, image_grid);
    const auto tmp = to_world(templ, image_grid);
    const auto u = displacement(y);

    LandmarkErrors out;
    const std::size_t n = ref.count();
    out.per_landmark.resize(n);
    out.outside.resize(n, 0);
    for(std::size_t l = 0; l < n; ++l) {
        const Vec3 &p = ref.points[l];
        for(int d = 0; d < 3; ++d) {
            if(p[d] < image_grid.lower(d) || p[d] > image_grid.lower(d) + image_grid.extent(d)) out.outside[l] = 1;
        }
        const Vec3 q = map_point(y, u, p);
        double s = 0.0;
        for(int d = 0; d < 3; ++d) s += (q[d] - tmp.points[l][d]) * (q[d] - tmp.points[l][d]);
        out.per_landmark[l] = std::sqrt(s);
    }
    if(n == 0) return out;
    double sum = 0.0;
    for(double e : out.per_landmark) sum += e;
    out.mean = sum / static_cast<double>(n);
    double var = 0.0;
    for(double e : out.per_landmark) var += (e - out.mean) * (e - out.mean);
    out.stddev = std::sqrt(var / static_cast<double>(n));
    return out;
}

template <class Real>
FieldDifference field_difference_stats(const DeformationField<Real> &a, const DeformationField<Real> &b) {
    if(!(a.grid == b.grid)) throw std::invalid_argument("Deformation fields live on different grids");
    FieldDifference out;
    out.magnitude = Image3<double>(a.grid);
    double sum = 0.0;
    for(std::size_t n = 0; n < a.size(); ++n) {
        double s = 0.0;
        for(int d = 0; d < 3; ++d) {
            const double diff = static_cast<double>(a[d][n]) - static_cast<double>(b[d][n]);
            s += diff * diff;
        }
        const double m = std::sqrt(s);
        out.magnitude.values[n] = m;
        out.max_mm = std::max(out.max_mm, m);
        sum += m;
    }
    out.mean_mm = a.size() > 0 ? sum / static_cast<double>(a.size()) : 0.0;
    return out;
}

#define NGFREG_INSTANTIATE(Real)                                                                                     \
    template Vec3 map_point<Real>(const DeformationField<Real> &, const VectorField3<Real> &, const Vec3 &);         \
    template LandmarkErrors landmark_error<Real>(const DeformationField<Real> &, const LandmarkSet &,                 \
                                                 const LandmarkSet &, const Grid3 &);                                \
    template FieldDifference field_difference_stats<Real>(const DeformationField<Real> &,                            \
                                                          const DeformationField<Real> &);

NGFREG_INSTANTIATE(float)
NGFREG_INSTANTIATE(double)

} // namespace ngfreg
