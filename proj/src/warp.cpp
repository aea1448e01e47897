#include "ngfreg/warp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ngfreg/transfer.hpp"

namespace ngfreg {

namespace {

template <class Real>
struct AxisCell {
    std::int64_t lo = 0;
    std::int64_t hi = 0;
    Real frac = Real(0);
};

// Places world coordinate p on one template axis. The template is extended by a ring of zero-valued
// ghost nodes at -1 and m, so values fall continuously to zero within one voxel outside the
// cell-center hull. Returns false beyond the ghost nodes; `inside` reports hull membership.
// Coordinates within a few ulps of a node are snapped onto it so identity positions sample exactly.
template <class Real>
bool locate(Real p, double origin, double spacing, std::int64_t m, AxisCell<Real> &cell, bool &inside) {
    const Real s = (p - static_cast<Real>(origin)) / static_cast<Real>(spacing);
    if(m == 1) {
        cell = {0, 0, Real(0)};
        inside = std::abs(s) <= Real(0.5);
        return inside;
    }
    // Rounding in p and origin scales with their magnitude, not with s.
    const Real scale = std::max({Real(1), std::abs(s), (std::abs(p) + static_cast<Real>(std::abs(origin))) /
                                                          static_cast<Real>(spacing)});
    const Real tol = Real(16) * std::numeric_limits<Real>::epsilon() * scale;
    const Real top = static_cast<Real>(m - 1);
    inside = s >= -tol && s <= top + tol;
    if(!(s > Real(-1) && s < static_cast<Real>(m))) return false;
    Real t = s;
    const Real nearest = std::nearbyint(t);
    if(std::abs(t - nearest) <= tol) t = nearest;
    if(inside) t = std::clamp(t, Real(0), top);
    std::int64_t lo = static_cast<std::int64_t>(std::floor(t));
    // The last hull node uses the interior cell, like the first one.
    if(t == top) lo = m - 2;
    lo = std::clamp<std::int64_t>(lo, -1, m - 1);
    cell = {lo, lo + 1, t - static_cast<Real>(lo)};
    return true;
}

template <class Real>
inline Real mix(Real a, Real b, Real f) {
    return (Real(1) - f) * a + f * b;
}

template <class Real>
struct Corners {
    Real v[2][2][2]; // [z][y][x]
};

template <class Real>
inline Corners<Real> load(const Image3<Real> &img, const AxisCell<Real> (&c)[3]) {
    Corners<Real> k{};
    const std::int64_t xs[2] = {c[0].lo, c[0].hi};
    const std::int64_t ys[2] = {c[1].lo, c[1].hi};
    const std::int64_t zs[2] = {c[2].lo, c[2].hi};
    for(int z = 0; z < 2; ++z)
        for(int y = 0; y < 2; ++y)
            for(int x = 0; x < 2; ++x) {
                const bool ghost = xs[x] < 0 || ys[y] < 0 || zs[z] < 0 || xs[x] >= img.grid.dim(0) ||
                                   ys[y] >= img.grid.dim(1) || zs[z] >= img.grid.dim(2);
                k.v[z][y][x] = ghost ? Real(0) : img(xs[x], ys[y], zs[z]);
            }
    return k;
}

template <class Real>
inline Real interpolate(const Corners<Real> &k, Real fx, Real fy, Real fz) {
    Real plane[2];
    for(int z = 0; z < 2; ++z) {
        const Real r0 = mix(k.v[z][0][0], k.v[z][0][1], fx);
        const Real r1 = mix(k.v[z][1][0], k.v[z][1][1], fx);
        plane[z] = mix(r0, r1, fy);
    }
    return mix(plane[0], plane[1], fz);
}

// Gradient of the trilinear interpolant with respect to the fractional coordinates.
template <class Real>
inline void interpolate_gradient(const Corners<Real> &k, Real fx, Real fy, Real fz, Real (&g)[3]) {
    Real dx[2][2], vx[2][2];
    for(int z = 0; z < 2; ++z) {
        for(int y = 0; y < 2; ++y) {
            dx[z][y] = k.v[z][y][1] - k.v[z][y][0];
            vx[z][y] = mix(k.v[z][y][0], k.v[z][y][1], fx);
        }
    }
    g[0] = mix(mix(dx[0][0], dx[0][1], fy), mix(dx[1][0], dx[1][1], fy), fz);
    g[1] = mix(vx[0][1] - vx[0][0], vx[1][1] - vx[1][0], fz);
    g[2] = mix(vx[1][0], vx[1][1], fy) - mix(vx[0][0], vx[0][1], fy);
}

template <class Real>
inline bool locate_voxel(const Image3<Real> &templ, const VectorField3<Real> &yhat, std::size_t n,
                         AxisCell<Real> (&cell)[3], bool &inside) {
    const Grid3 &g = templ.grid;
    inside = true;
    for(int d = 0; d < 3; ++d) {
        bool in = false;
        if(!locate(yhat[d][n], g.origin()[d], g.step(d), g.dim(d), cell[d], in)) {
            inside = false;
            return false;
        }
        inside = inside && in;
    }
    return true;
}

} // namespace

template <class Real>
WarpResult<Real> warp_image(const Image3<Real> &templ, const VectorField3<Real> &yhat, const Executor &exec) {
    WarpResult<Real> res{Image3<Real>(yhat.grid), std::vector<std::uint8_t>(yhat.size(), 0)};
    exec.for_ranges(yhat.size(), [&](std::size_t begin, std::size_t end) {
        for(std::size_t n = begin; n < end; ++n) {
            AxisCell<Real> cell[3];
            bool inside = false;
            if(!locate_voxel(templ, yhat, n, cell, inside)) continue;
            res.inside_mask[n] = inside ? 1 : 0;
            res.warped.values[n] = interpolate(load(templ, cell), cell[0].frac, cell[1].frac, cell[2].frac);
        }
    });
    return res;
}

template <class Real>
VectorField3<Real> warp_jacobian_apply_transpose(const Image3<Real> &templ, const VectorField3<Real> &yhat,
                                                 const std::vector<Real> &w, const Executor &exec) {
    if(w.size() != yhat.size()) throw std::invalid_argument("Weight count does not match deformed positions");
    VectorField3<Real> out(yhat.grid);
    const Real inv_h[3] = {Real(1) / static_cast<Real>(templ.grid.step(0)),
                           Real(1) / static_cast<Real>(templ.grid.step(1)),
                           Real(1) / static_cast<Real>(templ.grid.step(2))};
    exec.for_ranges(yhat.size(), [&](std::size_t begin, std::size_t end) {
        for(std::size_t n = begin; n < end; ++n) {
            if(w[n] == Real(0)) continue;
            AxisCell<Real> cell[3];
            bool inside = false;
            if(!locate_voxel(templ, yhat, n, cell, inside)) continue;
            Real g[3];
            interpolate_gradient(load(templ, cell), cell[0].frac, cell[1].frac, cell[2].frac, g);
            for(int d = 0; d < 3; ++d) out[d][n] = templ.grid.dim(d) > 1 ? w[n] * g[d] * inv_h[d] : Real(0);
        }
    });
    return out;
}

template <class Real>
VectorField3<Real> image_gradient(const Image3<Real> &img, const Executor &exec) {
    const Grid3 &g = img.grid;
    VectorField3<Real> out(g);
    const std::int64_t stride[3] = {1, g.dim(0), g.dim(0) * g.dim(1)};
    exec.for_ranges(g.size(), [&](std::size_t begin, std::size_t end) {
        for(std::size_t n = begin; n < end; ++n) {
            const Index3 idx = g.delinearize(n);
            for(int d = 0; d < 3; ++d) {
                const std::int64_t m = g.dim(d);
                if(m < 2) continue;
                const Real h = static_cast<Real>(g.step(d));
                const std::int64_t i = idx[d];
                const Real *v = img.values.data() + n;
                const std::int64_t s = stride[d];
                Real val;
                if(i == 0) {
                    val = (v[s] - v[0]) / h;
                } else if(i == m - 1) {
                    val = (v[0] - v[-s]) / h;
                } else {
                    val = (v[s] - v[-s]) / (Real(2) * h);
                }
                out[d][n] = val;
            }
        }
    });
    return out;
}

template <class Real>
std::vector<Real> image_gradient_apply_transpose(const VectorField3<Real> &w, const Grid3 &grid, const Executor &exec) {
    if(!(w.grid == grid)) throw std::invalid_argument("Field grid does not match image grid");
    std::vector<Real> out(grid.size(), Real(0));
    const std::int64_t stride[3] = {1, grid.dim(0), grid.dim(0) * grid.dim(1)};
    exec.for_ranges(grid.size(), [&](std::size_t begin, std::size_t end) {
        for(std::size_t n = begin; n < end; ++n) {
            const Index3 idx = grid.delinearize(n);
            Real acc = Real(0);
            for(int d = 0; d < 3; ++d) {
                const std::int64_t m = grid.dim(d);
                if(m < 2) continue;
                const Real h = static_cast<Real>(grid.step(d));
                const std::int64_t i = idx[d];
                const std::int64_t s = stride[d];
                const Real *wd = w[d].data() + n;
                Real col = Real(0);
                // One-sided rows at the two faces.
                if(i == 0) col -= wd[0] / h;
                if(i == 1) col += wd[-s] / h;
                if(i == m - 1) col += wd[0] / h;
                if(i == m - 2) col -= wd[s] / h;
                // Central rows k = i+1 and k = i-1 when they are interior.
                if(i + 1 >= 1 && i + 1 <= m - 2) col -= wd[s] / (Real(2) * h);
                if(i - 1 >= 1 && i - 1 <= m - 2) col += wd[-s] / (Real(2) * h);
                acc += col;
            }
            out[n] = acc;
        }
    });
    return out;
}

template <class Real>
Real sample_clamped(const std::vector<Real> &values, const Grid3 &grid, const Vec3 &world) {
    LinearWeights lw[3];
    for(int d = 0; d < 3; ++d)
        lw[d] = clamped_linear_weights((world[d] - grid.origin()[d]) / grid.step(d), grid.dim(d));
    Real acc = Real(0);
    for(int ez = 0; ez < lw[2].count; ++ez) {
        Real acc_y = Real(0);
        for(int ey = 0; ey < lw[1].count; ++ey) {
            Real acc_x = Real(0);
            for(int ex = 0; ex < lw[0].count; ++ex)
                acc_x += static_cast<Real>(lw[0].weight[ex]) *
                         values[grid.linearize(lw[0].index[ex], lw[1].index[ey], lw[2].index[ez])];
            acc_y += static_cast<Real>(lw[1].weight[ey]) * acc_x;
        }
        acc += static_cast<Real>(lw[2].weight[ez]) * acc_y;
    }
    return acc;
}

template <class Real>
Image3<Real> resample_clamped(const Image3<Real> &img, const Grid3 &target, const Executor &exec) {
    Image3<Real> out(target);
    exec.for_ranges(target.size(), [&](std::size_t begin, std::size_t end) {
        for(std::size_t n = begin; n < end; ++n) {
            const Index3 idx = target.delinearize(n);
            out.values[n] = sample_clamped(img.values, img.grid, world_of_index(target, idx));
        }
    });
    return out;
}

#define NGFREG_INSTANTIATE(Real)                                                                                      \
    template WarpResult<Real> warp_image<Real>(const Image3<Real> &, const VectorField3<Real> &, const Executor &);   \
    template VectorField3<Real> warp_jacobian_apply_transpose<Real>(const Image3<Real> &, const VectorField3<Real> &, \
                                                                    const std::vector<Real> &, const Executor &);     \
    template VectorField3<Real> image_gradient<Real>(const Image3<Real> &, const Executor &);                         \
    template std::vector<Real> image_gradient_apply_transpose<Real>(const VectorField3<Real> &, const Grid3 &,        \
                                                                    const Executor &);                                \
    template Real sample_clamped<Real>(const std::vector<Real> &, const Grid3 &, const Vec3 &);                       \
    template Image3<Real> resample_clamped<Real>(const Image3<Real> &, const Grid3 &, const Executor &);

NGFREG_INSTANTIATE(float)
NGFREG_INSTANTIATE(double)

} // namespace ngfreg
