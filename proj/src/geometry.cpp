#include "ngfreg/geometry.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ngfreg {

std::string to_string(Precision p) {
    return p == Precision::F32 ? "f32" : "f64";
}

Precision parse_precision(const std::string &s) {
    if(s == "f32" || s == "float" || s == "single") return Precision::F32;
    if(s == "f64" || s == "double") return Precision::F64;
    throw std::invalid_argument("Unknown precision '" + s + "' (expected f32 or f64)");
}

Grid3::Grid3(Index3 dims, Vec3 spacing, Vec3 origin) : dims_(dims), spacing_(spacing), origin_(origin) {
    for(int d = 0; d < 3; ++d) {
        if(dims_[d] < 1) throw std::invalid_argument("Grid dimensions must be >= 1");
        if(!(spacing_[d] > 0.0) || !std::isfinite(spacing_[d]))
            throw std::invalid_argument("Grid spacing must be finite and > 0");
        if(!std::isfinite(origin_[d])) throw std::invalid_argument("Grid origin must be finite");
    }
}

Index3 Grid3::delinearize(std::size_t n) const noexcept {
    const auto nn = static_cast<std::int64_t>(n);
    const std::int64_t i = nn % dims_[0];
    const std::int64_t rest = nn / dims_[0];
    return {i, rest % dims_[1], rest / dims_[1]};
}

bool Grid3::contains(const Index3 &idx) const noexcept {
    for(int d = 0; d < 3; ++d)
        if(idx[d] < 0 || idx[d] >= dims_[d]) return false;
    return true;
}

Vec3 world_of_index(const Grid3 &grid, const Index3 &index) {
    if(!grid.contains(index)) throw std::out_of_range("Index outside grid");
    return {grid.center(0, index[0]), grid.center(1, index[1]), grid.center(2, index[2])};
}

Vec3 continuous_index_of_world(const Grid3 &grid, const Vec3 &world) {
    Vec3 s{};
    for(int d = 0; d < 3; ++d) s[d] = (world[d] - grid.origin()[d]) / grid.step(d);
    return s;
}

Index3 index_of_world(const Grid3 &grid, const Vec3 &world) {
    const auto s = continuous_index_of_world(grid, world);
    Index3 idx{};
    for(int d = 0; d < 3; ++d) idx[d] = static_cast<std::int64_t>(std::llround(s[d]));
    if(!grid.contains(idx)) throw std::out_of_range("World position outside grid");
    return idx;
}

bool same_domain(const Grid3 &a, const Grid3 &b, double tol_mm) {
    for(int d = 0; d < 3; ++d) {
        const double scale = std::max(1.0, std::abs(a.extent(d)));
        if(std::abs(a.lower(d) - b.lower(d)) > tol_mm * scale) return false;
        if(std::abs(a.extent(d) - b.extent(d)) > tol_mm * scale) return false;
    }
    return true;
}

std::string describe(const Grid3 &g) {
    std::ostringstream os;
    os << g.dim(0) << "x" << g.dim(1) << "x" << g.dim(2) << " spacing (" << g.step(0) << "," << g.step(1) << ","
       << g.step(2) << ") origin (" << g.origin()[0] << "," << g.origin()[1] << "," << g.origin()[2] << ")";
    return os.str();
}

template <class Real>
Image3<Real>::Image3(const Grid3 &g, std::vector<Real> v) : grid(g), values(std::move(v)) {
    if(values.size() != grid.size()) throw std::invalid_argument("Image value count does not match grid");
}

template <class Real>
VectorField3<Real>::VectorField3(const Grid3 &g, Real fill) : grid(g) {
    for(auto &c : components) c.assign(g.size(), fill);
}

template <class Real>
std::vector<Real> VectorField3<Real>::flatten() const {
    std::vector<Real> out;
    out.reserve(3 * size());
    for(const auto &c : components) out.insert(out.end(), c.begin(), c.end());
    return out;
}

template <class Real>
void VectorField3<Real>::assign_flat(std::span<const Real> flat) {
    const std::size_t n = size();
    if(flat.size() != 3 * n) throw std::invalid_argument("Flat vector length does not match field");
    for(int d = 0; d < 3; ++d) components[d].assign(flat.begin() + d * n, flat.begin() + (d + 1) * n);
}

template <class Real>
DeformationField<Real> make_identity(const Grid3 &grid) {
    DeformationField<Real> y(grid);
    std::size_t n = 0;
    for(std::int64_t k = 0; k < grid.dim(2); ++k) {
        for(std::int64_t j = 0; j < grid.dim(1); ++j) {
            for(std::int64_t i = 0; i < grid.dim(0); ++i, ++n) {
                y[0][n] = static_cast<Real>(grid.center(0, i));
                y[1][n] = static_cast<Real>(grid.center(1, j));
                y[2][n] = static_cast<Real>(grid.center(2, k));
            }
        }
    }
    return y;
}

template <class Real>
VectorField3<Real> displacement(const DeformationField<Real> &y) {
    VectorField3<Real> u = make_identity<Real>(y.grid);
    for(int d = 0; d < 3; ++d)
        for(std::size_t n = 0; n < u.size(); ++n) u[d][n] = y[d][n] - u[d][n];
    return u;
}

template <class Real>
DeformationField<Real> from_displacement(const VectorField3<Real> &u) {
    DeformationField<Real> y = make_identity<Real>(u.grid);
    for(int d = 0; d < 3; ++d)
        for(std::size_t n = 0; n < y.size(); ++n) y[d][n] += u[d][n];
    return y;
}

template <class Real>
void validate(const Image3<Real> &img) {
    if(img.values.size() != img.grid.size()) throw std::invalid_argument("Image value count does not match grid");
    for(Real v : img.values)
        if(!std::isfinite(v)) throw std::invalid_argument("Image contains non-finite values");
}

template <class Real>
void validate(const VectorField3<Real> &f) {
    for(const auto &c : f.components) {
        if(c.size() != f.grid.size()) throw std::invalid_argument("Field component length does not match grid");
        for(Real v : c)
            if(!std::isfinite(v)) throw std::invalid_argument("Field contains non-finite values");
    }
}

#define NGFREG_INSTANTIATE(Real)                                                     \
    template struct Image3<Real>;                                                    \
    template struct VectorField3<Real>;                                              \
    template DeformationField<Real> make_identity<Real>(const Grid3 &);              \
    template VectorField3<Real> displacement<Real>(const DeformationField<Real> &);  \
    template DeformationField<Real> from_displacement<Real>(const VectorField3<Real> &); \
    template void validate<Real>(const Image3<Real> &);                              \
    template void validate<Real>(const VectorField3<Real> &);

NGFREG_INSTANTIATE(float)
NGFREG_INSTANTIATE(double)

} // namespace ngfreg
