// Test-side reference implementations: dense matrices assembled entry by entry from world
// coordinates, plus random problem generators.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "ngfreg/geometry.hpp"

namespace oracle {

using ngfreg::Grid3;
using ngfreg::Index3;
using ngfreg::Vec3;

struct Dense {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Dense(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}
    double &at(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    std::vector<double> mul(const std::vector<double> &x) const {
        std::vector<double> y(rows, 0.0);
        for(std::size_t i = 0; i < rows; ++i)
            for(std::size_t j = 0; j < cols; ++j) y[i] += at(i, j) * x[j];
        return y;
    }
    std::vector<double> mul_t(const std::vector<double> &x) const {
        std::vector<double> y(cols, 0.0);
        for(std::size_t i = 0; i < rows; ++i)
            for(std::size_t j = 0; j < cols; ++j) y[j] += at(i, j) * x[i];
        return y;
    }
};

// Grid with `dims` cells tiling the box [lower, lower + extent).
inline Grid3 box_grid(Index3 dims, Vec3 lower, Vec3 extent) {
    Vec3 h{}, o{};
    for(int d = 0; d < 3; ++d) {
        h[d] = extent[d] / static_cast<double>(dims[d]);
        o[d] = lower[d] + 0.5 * h[d];
    }
    return Grid3(dims, h, o);
}

// 1D interpolation weights of a world coordinate onto the centers of a coarse axis, clamped.
inline std::vector<std::pair<std::int64_t, double>> axis_weights(double x, double origin, double h, std::int64_t m) {
    if(m == 1) return {{0, 1.0}};
    double s = (x - origin) / h;
    s = std::clamp(s, 0.0, static_cast<double>(m - 1));
    std::int64_t lo = static_cast<std::int64_t>(std::floor(s));
    lo = std::min(lo, m - 2);
    const double f = s - static_cast<double>(lo);
    return {{lo, 1.0 - f}, {lo + 1, f}};
}

// Matrix of P for one scalar component: rows = image points, cols = deformation points.
inline Dense dense_P(const Grid3 &def_grid, const Grid3 &image_grid) {
    if(def_grid.size() > 512 || image_grid.size() > 512) throw std::invalid_argument("dense_P: grids too large");
    Dense P(image_grid.size(), def_grid.size());
    for(std::size_t n = 0; n < image_grid.size(); ++n) {
        const Index3 idx = image_grid.delinearize(n);
        std::vector<std::pair<std::int64_t, double>> w[3];
        for(int d = 0; d < 3; ++d)
            w[d] = axis_weights(image_grid.center(d, idx[d]), def_grid.origin()[d], def_grid.step(d), def_grid.dim(d));
        for(auto [k, wk] : w[2])
            for(auto [j, wj] : w[1])
                for(auto [i, wi] : w[0]) P.at(n, def_grid.linearize(i, j, k)) += wi * wj * wk;
    }
    return P;
}

// Matrix of the image-gradient stencil: rows are (component d, voxel n) at d * size + n.
inline Dense dense_gradient(const Grid3 &g) {
    const std::size_t N = g.size();
    Dense G(3 * N, N);
    for(std::size_t n = 0; n < N; ++n) {
        const Index3 idx = g.delinearize(n);
        for(int d = 0; d < 3; ++d) {
            const std::int64_t m = g.dim(d);
            if(m < 2) continue;
            const double h = g.step(d);
            Index3 a = idx, b = idx;
            double scale;
            if(idx[d] == 0) {
                b[d] += 1;
                scale = 1.0 / h;
            } else if(idx[d] == m - 1) {
                a[d] -= 1;
                scale = 1.0 / h;
            } else {
                a[d] -= 1;
                b[d] += 1;
                scale = 0.5 / h;
            }
            G.at(d * N + n, g.linearize(b[0], b[1], b[2])) += scale;
            G.at(d * N + n, g.linearize(a[0], a[1], a[2])) -= scale;
        }
    }
    return G;
}

// Matrix of the 7-point Laplacian with linearly extrapolated ghost samples
// u[-1] = 2u[0] - u[1], u[m] = 2u[m-1] - u[m-2], expanded literally.
inline Dense dense_laplacian(const Grid3 &g) {
    const std::size_t N = g.size();
    Dense L(N, N);
    for(std::size_t n = 0; n < N; ++n) {
        const Index3 idx = g.delinearize(n);
        for(int d = 0; d < 3; ++d) {
            const std::int64_t m = g.dim(d);
            if(m < 2) continue;
            const double w = 1.0 / (g.step(d) * g.step(d));
            auto add = [&](std::int64_t i, double c) {
                Index3 q = idx;
                if(i == -1) {
                    q[d] = 0;
                    L.at(n, g.linearize(q[0], q[1], q[2])) += 2.0 * c;
                    q[d] = 1;
                    L.at(n, g.linearize(q[0], q[1], q[2])) -= c;
                } else if(i == m) {
                    q[d] = m - 1;
                    L.at(n, g.linearize(q[0], q[1], q[2])) += 2.0 * c;
                    q[d] = m - 2;
                    L.at(n, g.linearize(q[0], q[1], q[2])) -= c;
                } else {
                    q[d] = i;
                    L.at(n, g.linearize(q[0], q[1], q[2])) += c;
                }
            };
            add(idx[d] + 1, w);
            add(idx[d], -2.0 * w);
            add(idx[d] - 1, w);
        }
    }
    return L;
}

inline double dot(const std::vector<double> &a, const std::vector<double> &b) {
    long double s = 0.0L;
    for(std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
    return static_cast<double>(s);
}

inline std::vector<double> random_vector(std::mt19937_64 &rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(n);
    for(auto &x : v) x = dist(rng);
    return v;
}

template <class Field>
void fill_random(Field &f, std::mt19937_64 &rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    for(auto &c : f.components)
        for(auto &x : c) x = dist(rng);
}

// Random box and random dims in [lo, hi] per axis.
inline Grid3 random_grid(std::mt19937_64 &rng, std::int64_t lo, std::int64_t hi, Vec3 *lower = nullptr,
                         Vec3 *extent = nullptr) {
    std::uniform_int_distribution<std::int64_t> dim(lo, hi);
    std::uniform_real_distribution<double> org(-20.0, 20.0), len(2.0, 30.0);
    Vec3 l{org(rng), org(rng), org(rng)}, e{len(rng), len(rng), len(rng)};
    if(lower) *lower = l;
    if(extent) *extent = e;
    return box_grid({dim(rng), dim(rng), dim(rng)}, l, e);
}

// A coarser grid over the same box as g, with 1 <= dims <= g.dims.
inline Grid3 random_coarser(std::mt19937_64 &rng, const Grid3 &g) {
    Index3 dims{};
    Vec3 lower{}, extent{};
    for(int d = 0; d < 3; ++d) {
        std::uniform_int_distribution<std::int64_t> dim(1, g.dim(d));
        dims[d] = dim(rng);
        lower[d] = g.lower(d);
        extent[d] = g.extent(d);
    }
    return box_grid(dims, lower, extent);
}

inline double max_abs(const std::vector<double> &v) {
    double m = 0.0;
    for(double x : v) m = std::max(m, std::abs(x));
    return m;
}

// Continuous template index of a world coordinate.
inline double index_coord(const Grid3 &g, int d, double world) { return (world - g.origin()[d]) / g.step(d); }

// True if every coordinate of a, b (template index units) lies strictly inside the same unit cell,
// at least `margin` away from any node plane. Piecewise-trilinear sampling is smooth there.
template <class Field>
bool same_cells(const Field &a, const Field &b, const Grid3 &templ_grid, double margin) {
    for(int d = 0; d < 3; ++d) {
        if(templ_grid.dim(d) == 1) continue;
        for(std::size_t n = 0; n < a.size(); ++n) {
            const double sa = index_coord(templ_grid, d, a[d][n]);
            const double sb = index_coord(templ_grid, d, b[d][n]);
            const double fa = std::floor(sa);
            if(std::floor(sb) != fa) return false;
            if(sa - fa < margin || fa + 1.0 - sa < margin) return false;
            if(sb - fa < margin || fa + 1.0 - sb < margin) return false;
        }
    }
    return true;
}

// Sum of a few random oblique plane waves; smooth at voxel scale.
inline ngfreg::Image3<double> smooth_random_image(std::mt19937_64 &rng, const Grid3 &g, double amplitude = 100.0) {
    std::uniform_real_distribution<double> u(-1.0, 1.0), ph(0.0, 6.283185307179586);
    struct Wave {
        Vec3 k;
        double phase, amp;
    } waves[4];
    for(auto &w : waves) {
        for(int d = 0; d < 3; ++d) w.k[d] = 0.9 * u(rng) / g.step(d);
        w.phase = ph(rng);
        w.amp = amplitude * (0.5 + 0.5 * std::abs(u(rng)));
    }
    const double offset = amplitude * u(rng);
    ngfreg::Image3<double> img(g);
    for(std::size_t n = 0; n < g.size(); ++n) {
        const Vec3 p = ngfreg::world_of_index(g, g.delinearize(n));
        double v = offset;
        for(const auto &w : waves) v += w.amp * std::sin(w.k[0] * p[0] + w.k[1] * p[1] + w.k[2] * p[2] + w.phase);
        img.values[n] = v;
    }
    return img;
}

struct FdReport {
    double max_err = 0.0;
    double max_fd = 0.0;
    int checked = 0;
    int skipped = 0;
    double relative() const { return max_fd > 0.0 ? max_err / max_fd : max_err; }
};

// Central differences of f at x along the listed coordinates, compared with grad. Coordinates for
// which usable(x_plus, x_minus) is false are skipped and counted.
template <class F, class Usable>
FdReport central_fd(const std::vector<double> &x, const std::vector<double> &grad, const std::vector<std::size_t> &coords,
                    double h, F &&f, Usable &&usable) {
    FdReport rep;
    for(std::size_t j : coords) {
        auto xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        if(!usable(xp, xm)) {
            ++rep.skipped;
            continue;
        }
        const double fd = (f(xp) - f(xm)) / (2.0 * h);
        rep.max_err = std::max(rep.max_err, std::abs(fd - grad[j]));
        rep.max_fd = std::max(rep.max_fd, std::abs(fd));
        ++rep.checked;
    }
    return rep;
}

inline std::vector<std::size_t> all_coords(std::size_t n) {
    std::vector<std::size_t> c(n);
    for(std::size_t i = 0; i < n; ++i) c[i] = i;
    return c;
}

} // namespace oracle
