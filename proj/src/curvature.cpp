#include "ngfreg/curvature.hpp"

#include <cmath>
#include <stdexcept>

namespace ngfreg {

void validate(const CurvatureParams &p) {
    if(!(p.alpha > 0.0) || !std::isfinite(p.alpha)) throw std::invalid_argument("alpha must be finite and > 0");
}

namespace {

inline bool interior(std::int64_t i, std::int64_t m) { return i >= 1 && i <= m - 2; }

} // namespace

template <class Real>
std::vector<Real> apply_laplacian(const std::vector<Real> &u, const Grid3 &grid, const Executor &exec) {
    if(u.size() != grid.size()) throw std::invalid_argument("Component length does not match grid");
    std::vector<Real> out(u.size(), Real(0));
    const std::int64_t stride[3] = {1, grid.dim(0), grid.dim(0) * grid.dim(1)};
    exec.for_ranges(grid.size(), [&](std::size_t begin, std::size_t end) {
        for(std::size_t n = begin; n < end; ++n) {
            const Index3 idx = grid.delinearize(n);
            const Real *v = u.data() + n;
            Real acc = Real(0);
            for(int d = 0; d < 3; ++d) {
                // Boundary rows vanish under linear extrapolation.
                if(!interior(idx[d], grid.dim(d))) continue;
                const Real inv_h2 = Real(1) / static_cast<Real>(grid.step(d) * grid.step(d));
                const std::int64_t s = stride[d];
                acc += (v[s] - Real(2) * v[0] + v[-s]) * inv_h2;
            }
            out[n] = acc;
        }
    });
    return out;
}

template <class Real>
std::vector<Real> apply_laplacian_transpose(const std::vector<Real> &w, const Grid3 &grid, const Executor &exec) {
    if(w.size() != grid.size()) throw std::invalid_argument("Component length does not match grid");
    std::vector<Real> out(w.size(), Real(0));
    const std::int64_t stride[3] = {1, grid.dim(0), grid.dim(0) * grid.dim(1)};
    exec.for_ranges(grid.size(), [&](std::size_t n0, std::size_t n1) {
        for(std::size_t n = n0; n < n1; ++n) {
            const Index3 idx = grid.delinearize(n);
            const Real *v = w.data() + n;
            Real acc = Real(0);
            for(int d = 0; d < 3; ++d) {
                const std::int64_t m = grid.dim(d);
                const std::int64_t i = idx[d];
                const std::int64_t s = stride[d];
                const Real inv_h2 = Real(1) / static_cast<Real>(grid.step(d) * grid.step(d));
                Real col = Real(0);
                if(interior(i - 1, m)) col += v[-s];
                if(interior(i, m)) col -= Real(2) * v[0];
                if(interior(i + 1, m)) col += v[s];
                acc += col * inv_h2;
            }
            out[n] = acc;
        }
    });
    return out;
}

template <class Real>
CurvatureEvaluation<Real> curvature_value_and_gradient(const DeformationField<Real> &y, const Executor &exec) {
    const auto u = displacement(y);
    const Real h_bar = static_cast<Real>(y.grid.cell_volume());
    CurvatureEvaluation<Real> res;
    res.grad = VectorField3<Real>(y.grid);
    Real total = Real(0);
    for(int d = 0; d < 3; ++d) {
        auto lu = apply_laplacian(u[d], y.grid, exec);
        std::vector<Real> sq(lu.size());
        for(std::size_t n = 0; n < lu.size(); ++n) sq[n] = lu[n] * lu[n];
        total += deterministic_sum(std::span<const Real>(sq), exec);
        auto g = apply_laplacian_transpose(lu, y.grid, exec);
        for(auto &v : g) v *= h_bar;
        res.grad[d] = std::move(g);
    }
    res.value = Real(0.5) * h_bar * total;
    return res;
}

template <class Real>
Real curvature_value(const DeformationField<Real> &y, const Executor &exec) {
    const auto u = displacement(y);
    Real total = Real(0);
    for(int d = 0; d < 3; ++d) {
        auto lu = apply_laplacian(u[d], y.grid, exec);
        for(auto &v : lu) v *= v;
        total += deterministic_sum(std::span<const Real>(lu), exec);
    }
    return Real(0.5) * static_cast<Real>(y.grid.cell_volume()) * total;
}

template <class Real>
VectorField3<Real> curvature_gradient(const DeformationField<Real> &y, const Executor &exec) {
    return curvature_value_and_gradient(y, exec).grad;
}

#define NGFREG_INSTANTIATE(Real)                                                                                    \
    template std::vector<Real> apply_laplacian<Real>(const std::vector<Real> &, const Grid3 &, const Executor &);  \
    template std::vector<Real> apply_laplacian_transpose<Real>(const std::vector<Real> &, const Grid3 &,           \
                                                               const Executor &);                                  \
    template Real curvature_value<Real>(const DeformationField<Real> &, const Executor &);                         \
    template VectorField3<Real> curvature_gradient<Real>(const DeformationField<Real> &, const Executor &);         \
    template CurvatureEvaluation<Real> curvature_value_and_gradient<Real>(const DeformationField<Real> &,           \
                                                                          const Executor &);

NGFREG_INSTANTIATE(float)
NGFREG_INSTANTIATE(double)

} // namespace ngfreg
