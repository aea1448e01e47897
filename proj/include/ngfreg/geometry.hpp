// geometry.hpp - grids, volumes and deformation fields shared by every stage of the registration.
//
// All grids are axis-aligned and cell-centered. The origin is the world position (mm) of the
// center of cell (0,0,0). Voxel arrays are linearized x-fastest: index = i + m_x*(j + m_y*k).

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ngfreg {

using Index3 = std::array<std::int64_t, 3>;
using Vec3 = std::array<double, 3>;

enum class Precision { F32, F64 };

std::string to_string(Precision p);
Precision parse_precision(const std::string &s);

class Grid3 {
  public:
    Grid3() = default;
    Grid3(Index3 dims, Vec3 spacing, Vec3 origin = {0.0, 0.0, 0.0});

    const Index3 &dims() const noexcept { return dims_; }
    const Vec3 &spacing() const noexcept { return spacing_; }
    const Vec3 &origin() const noexcept { return origin_; }

    std::int64_t dim(int axis) const noexcept { return dims_[axis]; }
    double step(int axis) const noexcept { return spacing_[axis]; }

    std::size_t size() const noexcept {
        return static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2]);
    }

    // Voxel volume h_x*h_y*h_z.
    double cell_volume() const noexcept { return spacing_[0] * spacing_[1] * spacing_[2]; }

    // World position of the lower face of the domain, and its length, per axis.
    double lower(int axis) const noexcept { return origin_[axis] - 0.5 * spacing_[axis]; }
    double extent(int axis) const noexcept { return static_cast<double>(dims_[axis]) * spacing_[axis]; }

    std::size_t linearize(std::int64_t i, std::int64_t j, std::int64_t k) const noexcept {
        return static_cast<std::size_t>(i + dims_[0] * (j + dims_[1] * k));
    }
    Index3 delinearize(std::size_t n) const noexcept;

    bool contains(const Index3 &idx) const noexcept;

    // Cell-center coordinate along one axis, no range check.
    double center(int axis, std::int64_t i) const noexcept {
        return origin_[axis] + static_cast<double>(i) * spacing_[axis];
    }

    bool operator==(const Grid3 &) const = default;

  private:
    Index3 dims_{1, 1, 1};
    Vec3 spacing_{1.0, 1.0, 1.0};
    Vec3 origin_{0.0, 0.0, 0.0};
};

// Throws std::out_of_range for indices outside the grid.
Vec3 world_of_index(const Grid3 &grid, const Index3 &index);

// Continuous (fractional) index of a world position; no range check.
Vec3 continuous_index_of_world(const Grid3 &grid, const Vec3 &world);

// Nearest cell index of a world position. Throws std::out_of_range when it falls outside the grid.
Index3 index_of_world(const Grid3 &grid, const Vec3 &world);

// Two grids describe the same world box (lower corner and extent agree per axis).
bool same_domain(const Grid3 &a, const Grid3 &b, double tol_mm = 1e-6);

std::string describe(const Grid3 &g);

template <class Real>
struct Image3 {
    Grid3 grid;
    std::vector<Real> values;

    Image3() = default;
    explicit Image3(const Grid3 &g, Real fill = Real(0)) : grid(g), values(g.size(), fill) {}
    Image3(const Grid3 &g, std::vector<Real> v);

    Real &operator()(std::int64_t i, std::int64_t j, std::int64_t k) { return values[grid.linearize(i, j, k)]; }
    Real operator()(std::int64_t i, std::int64_t j, std::int64_t k) const { return values[grid.linearize(i, j, k)]; }

    template <class Other>
    Image3<Other> cast() const {
        Image3<Other> out(grid);
        for(std::size_t n = 0; n < values.size(); ++n) out.values[n] = static_cast<Other>(values[n]);
        return out;
    }
};

// Three scalar arrays on one grid. Used for positions on the image grid (yhat) and for
// gradients on either grid.
template <class Real>
struct VectorField3 {
    Grid3 grid;
    std::array<std::vector<Real>, 3> components;

    VectorField3() = default;
    explicit VectorField3(const Grid3 &g, Real fill = Real(0));

    std::size_t size() const noexcept { return grid.size(); }
    std::vector<Real> &operator[](int d) { return components[d]; }
    const std::vector<Real> &operator[](int d) const { return components[d]; }

    // Component-major flat copy: all x, then all y, then all z.
    std::vector<Real> flatten() const;
    void assign_flat(std::span<const Real> flat);

    template <class Other>
    VectorField3<Other> cast() const {
        VectorField3<Other> out(grid);
        for(int d = 0; d < 3; ++d)
            for(std::size_t n = 0; n < size(); ++n) out[d][n] = static_cast<Other>(components[d][n]);
        return out;
    }
};

// World-coordinate map y sampled on the deformation grid.
template <class Real>
using DeformationField = VectorField3<Real>;

template <class Real>
DeformationField<Real> make_identity(const Grid3 &grid);

// y - identity.
template <class Real>
VectorField3<Real> displacement(const DeformationField<Real> &y);

// identity + u.
template <class Real>
DeformationField<Real> from_displacement(const VectorField3<Real> &u);

// Throws std::invalid_argument if any array length disagrees with the grid or a value is not finite.
template <class Real>
void validate(const Image3<Real> &img);
template <class Real>
void validate(const VectorField3<Real> &f);

} // namespace ngfreg
