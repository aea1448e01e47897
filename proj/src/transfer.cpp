#include "ngfreg/transfer.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

namespace ngfreg {

std::string to_string(PtVariant v) {
    switch(v) {
    case PtVariant::Gather: return "gather";
    case PtVariant::Scatter: return "scatter";
    case PtVariant::RedBlack: return "redblack";
    }
    return "unknown";
}

PtVariant parse_pt_variant(const std::string &s) {
    if(s == "gather") return PtVariant::Gather;
    if(s == "scatter" || s == "atomic") return PtVariant::Scatter;
    if(s == "redblack" || s == "red-black") return PtVariant::RedBlack;
    throw std::invalid_argument("Unknown Pt variant '" + s + "' (expected gather, scatter or redblack)");
}

LinearWeights clamped_linear_weights(double s, std::int64_t m) {
    LinearWeights lw;
    if(m <= 1 || !(s > 0.0)) return lw; // index 0, weight 1
    if(s >= static_cast<double>(m - 1)) {
        lw.index = {m - 1, m - 1};
        return lw;
    }
    const auto j0 = static_cast<std::int64_t>(std::floor(s));
    const double f = s - static_cast<double>(j0);
    lw.index = {j0, j0 + 1};
    if(f == 0.0) return lw;
    lw.weight = {1.0 - f, f};
    lw.count = 2;
    return lw;
}

AxisWeights build_axis_weights(std::int64_t coarse, std::int64_t fine) {
    if(coarse < 1 || fine < 1) throw std::invalid_argument("Axis lengths must be >= 1");
    AxisWeights aw;
    aw.coarse = coarse;
    aw.fine = fine;
    aw.rows.resize(static_cast<std::size_t>(fine));

    // Fine cell center i sits at coarse coordinate (i + 1/2) * coarse/fine - 1/2 when both axes
    // span the same interval.
    const double ratio = static_cast<double>(coarse) / static_cast<double>(fine);
    std::vector<std::size_t> counts(static_cast<std::size_t>(coarse), 0);
    for(std::int64_t i = 0; i < fine; ++i) {
        const double s = (static_cast<double>(i) + 0.5) * ratio - 0.5;
        auto &row = aw.rows[static_cast<std::size_t>(i)];
        row = clamped_linear_weights(s, coarse);
        for(int e = 0; e < row.count; ++e) ++counts[static_cast<std::size_t>(row.index[e])];
    }

    aw.col_begin.assign(static_cast<std::size_t>(coarse) + 1, 0);
    for(std::int64_t j = 0; j < coarse; ++j)
        aw.col_begin[static_cast<std::size_t>(j) + 1] = aw.col_begin[static_cast<std::size_t>(j)] + counts[static_cast<std::size_t>(j)];
    aw.col_fine.resize(aw.col_begin.back());
    aw.col_weight.resize(aw.col_begin.back());
    std::vector<std::size_t> cursor(aw.col_begin.begin(), aw.col_begin.end() - 1);
    for(std::int64_t i = 0; i < fine; ++i) {
        const auto &row = aw.rows[static_cast<std::size_t>(i)];
        for(int e = 0; e < row.count; ++e) {
            const auto pos = cursor[static_cast<std::size_t>(row.index[e])]++;
            aw.col_fine[pos] = i;
            aw.col_weight[pos] = row.weight[e];
        }
    }
    return aw;
}

void check_transfer_grids(const Grid3 &def_grid, const Grid3 &image_grid) {
    if(!same_domain(def_grid, image_grid))
        throw std::invalid_argument("Deformation grid (" + describe(def_grid) + ") and image grid (" +
                                    describe(image_grid) + ") do not cover the same world domain");
    for(int d = 0; d < 3; ++d)
        if(image_grid.dim(d) < def_grid.dim(d))
            throw std::invalid_argument("Image grid is coarser than the deformation grid along an axis");
}

GatherPlan build_gather_plan(const Grid3 &def_grid, const Grid3 &image_grid) {
    check_transfer_grids(def_grid, image_grid);
    GatherPlan plan;
    plan.def_grid = def_grid;
    plan.image_grid = image_grid;
    for(int d = 0; d < 3; ++d) plan.axes[d] = build_axis_weights(def_grid.dim(d), image_grid.dim(d));
    return plan;
}

namespace {

// Interpolates src (dims `in`) along `axis` from aw.coarse to aw.fine samples.
template <class Real>
std::vector<Real> interpolate_axis(const std::vector<Real> &src, const Index3 &in, int axis, const AxisWeights &aw,
                                   const Executor &exec) {
    Index3 out_dims = in;
    out_dims[axis] = aw.fine;
    std::vector<Real> dst(static_cast<std::size_t>(out_dims[0] * out_dims[1] * out_dims[2]));
    const std::int64_t nz = out_dims[2];
    const std::int64_t ny = out_dims[1];
    const std::int64_t nx = out_dims[0];
    exec.for_ranges(static_cast<std::size_t>(ny * nz), [&](std::size_t begin, std::size_t end) {
        for(std::size_t line = begin; line < end; ++line) {
            const std::int64_t j = static_cast<std::int64_t>(line) % ny;
            const std::int64_t k = static_cast<std::int64_t>(line) / ny;
            for(std::int64_t i = 0; i < nx; ++i) {
                Index3 o{i, j, k};
                const auto &row = aw.rows[static_cast<std::size_t>(o[axis])];
                Real acc = Real(0);
                for(int e = 0; e < row.count; ++e) {
                    Index3 s = o;
                    s[axis] = row.index[e];
                    acc += static_cast<Real>(row.weight[e]) *
                           src[static_cast<std::size_t>(s[0] + in[0] * (s[1] + in[1] * s[2]))];
                }
                dst[static_cast<std::size_t>(i + nx * (j + ny * k))] = acc;
            }
        }
    });
    return dst;
}

template <class Real>
void check_image_field(const VectorField3<Real> &r, const GatherPlan &plan) {
    if(!(r.grid == plan.image_grid)) throw std::invalid_argument("Field grid does not match the plan's image grid");
    for(const auto &c : r.components)
        if(c.size() != r.grid.size()) throw std::invalid_argument("Field component length does not match grid");
}

// Scatters image point n of r into out with the given add operation.
template <class Real, class Add>
inline void scatter_point(const VectorField3<Real> &r, const GatherPlan &plan, std::int64_t i, std::int64_t j,
                          std::int64_t k, VectorField3<Real> &out, Add add) {
    const auto &rx = plan.axes[0].rows[static_cast<std::size_t>(i)];
    const auto &ry = plan.axes[1].rows[static_cast<std::size_t>(j)];
    const auto &rz = plan.axes[2].rows[static_cast<std::size_t>(k)];
    const std::size_t n = plan.image_grid.linearize(i, j, k);
    const Real v[3] = {r[0][n], r[1][n], r[2][n]};
    for(int ez = 0; ez < rz.count; ++ez) {
        for(int ey = 0; ey < ry.count; ++ey) {
            const Real wyz = static_cast<Real>(rz.weight[ez]) * static_cast<Real>(ry.weight[ey]);
            for(int ex = 0; ex < rx.count; ++ex) {
                const Real w = static_cast<Real>(rx.weight[ex]) * wyz;
                const std::size_t m = plan.def_grid.linearize(rx.index[ex], ry.index[ey], rz.index[ez]);
                for(int d = 0; d < 3; ++d) add(out[d][m], w * v[d]);
            }
        }
    }
}

} // namespace

template <class Real>
VectorField3<Real> apply_P(const VectorField3<Real> &y, const GatherPlan &plan, const Executor &exec) {
    if(!(y.grid == plan.def_grid)) throw std::invalid_argument("Field grid does not match the plan's deformation grid");
    VectorField3<Real> out(plan.image_grid);
    for(int d = 0; d < 3; ++d) {
        Index3 dims = plan.def_grid.dims();
        auto a = interpolate_axis(y[d], dims, 0, plan.axes[0], exec);
        dims[0] = plan.image_grid.dim(0);
        auto b = interpolate_axis(a, dims, 1, plan.axes[1], exec);
        dims[1] = plan.image_grid.dim(1);
        out[d] = interpolate_axis(b, dims, 2, plan.axes[2], exec);
    }
    return out;
}

template <class Real>
VectorField3<Real> apply_P(const VectorField3<Real> &y, const Grid3 &image_grid, const Executor &exec) {
    return apply_P(y, build_gather_plan(y.grid, image_grid), exec);
}

template <class Real>
VectorField3<Real> apply_Pt_gather(const VectorField3<Real> &r, const GatherPlan &plan, const Executor &exec) {
    check_image_field(r, plan);
    VectorField3<Real> out(plan.def_grid);
    const auto &ax = plan.axes[0];
    const auto &ay = plan.axes[1];
    const auto &az = plan.axes[2];
    const Grid3 &img = plan.image_grid;

    exec.for_ranges(plan.def_grid.size(), [&](std::size_t begin, std::size_t end) {
        for(std::size_t m = begin; m < end; ++m) {
            const auto [a, b, c] = plan.def_grid.delinearize(m);
            Real acc[3] = {Real(0), Real(0), Real(0)};
            for(std::size_t ez = az.col_begin[c]; ez < az.col_begin[c + 1]; ++ez) {
                const Real wz = static_cast<Real>(az.col_weight[ez]);
                Real acc_y[3] = {Real(0), Real(0), Real(0)};
                for(std::size_t ey = ay.col_begin[b]; ey < ay.col_begin[b + 1]; ++ey) {
                    const Real wy = static_cast<Real>(ay.col_weight[ey]);
                    const std::size_t row = img.linearize(0, ay.col_fine[ey], az.col_fine[ez]);
                    Real acc_x[3] = {Real(0), Real(0), Real(0)};
                    for(std::size_t ex = ax.col_begin[a]; ex < ax.col_begin[a + 1]; ++ex) {
                        const Real wx = static_cast<Real>(ax.col_weight[ex]);
                        const std::size_t n = row + static_cast<std::size_t>(ax.col_fine[ex]);
                        acc_x[0] += wx * r[0][n];
                        acc_x[1] += wx * r[1][n];
                        acc_x[2] += wx * r[2][n];
                    }
                    for(int d = 0; d < 3; ++d) acc_y[d] += wy * acc_x[d];
                }
                for(int d = 0; d < 3; ++d) acc[d] += wz * acc_y[d];
            }
            for(int d = 0; d < 3; ++d) out[d][m] = acc[d];
        }
    });
    return out;
}

template <class Real>
VectorField3<Real> apply_Pt_scatter_atomic(const VectorField3<Real> &r, const GatherPlan &plan, const Executor &exec) {
    check_image_field(r, plan);
    VectorField3<Real> out(plan.def_grid);
    const Grid3 &img = plan.image_grid;
    exec.for_ranges(img.size(), [&](std::size_t begin, std::size_t end) {
        for(std::size_t n = begin; n < end; ++n) {
            const auto [i, j, k] = img.delinearize(n);
            scatter_point(r, plan, i, j, k, out, [](Real &target, Real v) {
                std::atomic_ref<Real>(target).fetch_add(v, std::memory_order_relaxed);
            });
        }
    });
    return out;
}

template <class Real>
VectorField3<Real> apply_Pt_redblack(const VectorField3<Real> &r, const GatherPlan &plan, const Executor &exec) {
    check_image_field(r, plan);
    VectorField3<Real> out(plan.def_grid);
    const Grid3 &img = plan.image_grid;
    const auto &az = plan.axes[2];

    // Slab s holds the image z-slices whose weights land on deformation slices {s, s+1}.
    const std::int64_t slabs = std::max<std::int64_t>(1, az.coarse - 1);
    std::vector<std::vector<std::int64_t>> slab_slices(static_cast<std::size_t>(slabs));
    for(std::int64_t k = 0; k < img.dim(2); ++k) {
        const std::int64_t s = std::min(az.rows[static_cast<std::size_t>(k)].index[0], slabs - 1);
        slab_slices[static_cast<std::size_t>(s)].push_back(k);
    }

    const auto plain_add = [](Real &target, Real v) { target += v; };
    for(std::int64_t colour = 0; colour < 2; ++colour) {
        std::vector<std::int64_t> batch;
        for(std::int64_t s = colour; s < slabs; s += 2) batch.push_back(s);
        exec.for_tasks(batch.size(), [&](std::size_t t) {
            for(const std::int64_t k : slab_slices[static_cast<std::size_t>(batch[t])])
                for(std::int64_t j = 0; j < img.dim(1); ++j)
                    for(std::int64_t i = 0; i < img.dim(0); ++i) scatter_point(r, plan, i, j, k, out, plain_add);
        });
    }
    return out;
}

template <class Real>
VectorField3<Real> apply_Pt(const VectorField3<Real> &r, const GatherPlan &plan, PtVariant variant,
                            const Executor &exec) {
    switch(variant) {
    case PtVariant::Gather: return apply_Pt_gather(r, plan, exec);
    case PtVariant::Scatter: return apply_Pt_scatter_atomic(r, plan, exec);
    case PtVariant::RedBlack: return apply_Pt_redblack(r, plan, exec);
    }
    throw std::invalid_argument("Unknown Pt variant");
}

#define NGFREG_INSTANTIATE(Real)                                                                                     \
    template VectorField3<Real> apply_P<Real>(const VectorField3<Real> &, const GatherPlan &, const Executor &);     \
    template VectorField3<Real> apply_P<Real>(const VectorField3<Real> &, const Grid3 &, const Executor &);          \
    template VectorField3<Real> apply_Pt_gather<Real>(const VectorField3<Real> &, const GatherPlan &,                \
                                                      const Executor &);                                             \
    template VectorField3<Real> apply_Pt_scatter_atomic<Real>(const VectorField3<Real> &, const GatherPlan &,        \
                                                              const Executor &);                                     \
    template VectorField3<Real> apply_Pt_redblack<Real>(const VectorField3<Real> &, const GatherPlan &,              \
                                                        const Executor &);                                           \
    template VectorField3<Real> apply_Pt<Real>(const VectorField3<Real> &, const GatherPlan &, PtVariant,            \
                                               const Executor &);

NGFREG_INSTANTIATE(float)
NGFREG_INSTANTIATE(double)

} // namespace ngfreg
