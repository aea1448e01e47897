// evaluation.hpp - landmark error and deformation-difference statistics.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ngfreg/geometry.hpp"

namespace ngfreg {

enum class LandmarkFrame { VoxelIndex1Based, VoxelIndex0Based, WorldMm };

std::string to_string(LandmarkFrame f);
LandmarkFrame parse_landmark_frame(const std::string &s);

struct LandmarkSet {
    std::vector<Vec3> points;
    LandmarkFrame frame = LandmarkFrame::WorldMm;

    std::size_t count() const noexcept { return points.size(); }
};

// Returns the same landmarks in world millimeters.
LandmarkSet to_world(const LandmarkSet &set, const Grid3 &image_grid);

struct LandmarkErrors {
    double mean = 0.0;
    double stddev = 0.0; // population
    std::vector<double> per_landmark;
    std::vector<std::uint8_t> outside; // reference landmark lies outside the image domain
};

// Maps every reference landmark through y (the displacement is interpolated on the deformation
// grid, clamp-to-edge) and measures the Euclidean distance to the matching template landmark.
template <class Real>
LandmarkErrors landmark_error(const DeformationField<Real> &y, const LandmarkSet &reference,
                              const LandmarkSet &templ, const Grid3 &image_grid);

// y evaluated at a world point.
template <class Real>
Vec3 map_point(const DeformationField<Real> &y, const VectorField3<Real> &u, const Vec3 &p);

struct FieldDifference {
    double max_mm = 0.0;
    double mean_mm = 0.0;
    Image3<double> magnitude; // per-point |a - b|
};

template <class Real>
FieldDifference field_difference_stats(const DeformationField<Real> &a, const DeformationField<Real> &b);

} // namespace ngfreg
