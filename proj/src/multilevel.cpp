#include "ngfreg/multilevel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <tuple>

#include "ngfreg/objective.hpp"

namespace ngfreg {

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

Grid3 grid_with_dims(const Grid3 &g, const Index3 &dims) {
    Vec3 spacing{}, origin{};
    for(int d = 0; d < 3; ++d) {
        spacing[d] = g.extent(d) / static_cast<double>(dims[d]);
        origin[d] = g.lower(d) + 0.5 * spacing[d];
        if(dims[d] == g.dim(d)) { // untouched axes keep their exact geometry
            spacing[d] = g.step(d);
            origin[d] = g.origin()[d];
        }
    }
    return Grid3(dims, spacing, origin);
}

} // namespace

void validate(const MultilevelConfig &cfg) {
    if(cfg.num_levels < 0) throw std::invalid_argument("num_levels must be >= 1 (or 0 for auto)");
    if(cfg.coarsest_min_dim < 1) throw std::invalid_argument("coarsest_min_dim must be >= 1");
    if(cfg.grid_ratio < 1) throw std::invalid_argument("grid_ratio must be >= 1");
    if(cfg.workers < 1) throw std::invalid_argument("worker count must be >= 1");
    validate(CurvatureParams{cfg.alpha});
    validate(cfg.ngf);
    validate(cfg.lbfgs);
    validate(cfg.stop);
}

Grid3 downsampled_grid(const Grid3 &g) {
    Index3 dims{};
    for(int d = 0; d < 3; ++d) dims[d] = (g.dim(d) + 1) / 2;
    return grid_with_dims(g, dims);
}

template <class Real>
Image3<Real> downsample_image(const Image3<Real> &img) {
    const Grid3 &g = img.grid;
    Image3<Real> out(downsampled_grid(g));
    const Grid3 &o = out.grid;
    for(std::int64_t k = 0; k < o.dim(2); ++k) {
        for(std::int64_t j = 0; j < o.dim(1); ++j) {
            for(std::int64_t i = 0; i < o.dim(0); ++i) {
                Real sum = Real(0);
                int count = 0;
                for(std::int64_t dk = 0; dk < 2; ++dk) {
                    const std::int64_t kk = 2 * k + dk;
                    if(kk >= g.dim(2)) continue;
                    for(std::int64_t dj = 0; dj < 2; ++dj) {
                        const std::int64_t jj = 2 * j + dj;
                        if(jj >= g.dim(1)) continue;
                        for(std::int64_t di = 0; di < 2; ++di) {
                            const std::int64_t ii = 2 * i + di;
                            if(ii >= g.dim(0)) continue;
                            sum += img(ii, jj, kk);
                            ++count;
                        }
                    }
                }
                out(i, j, k) = sum / static_cast<Real>(count);
            }
        }
    }
    return out;
}

int auto_level_count(const Grid3 &g, int coarsest_min_dim) {
    int levels = 1;
    Index3 dims = g.dims();
    while(true) {
        bool any = false;
        bool ok = true;
        for(int d = 0; d < 3; ++d) {
            if(dims[d] <= 1) continue;
            any = true;
            if((dims[d] + 1) / 2 < coarsest_min_dim) ok = false;
        }
        if(!any || !ok) break;
        for(auto &m : dims) m = (m + 1) / 2;
        ++levels;
    }
    return levels;
}

template <class Real>
std::vector<Image3<Real>> build_pyramid(const Image3<Real> &img, int levels) {
    if(levels < 1) throw std::invalid_argument("Pyramid needs at least one level");
    Index3 dims = img.grid.dims();
    for(int l = 1; l < levels; ++l)
        for(auto &m : dims) m = (m + 1) / 2;
    for(int d = 0; d < 3; ++d)
        if(img.grid.dim(d) >= 2 && dims[d] < 2)
            throw std::invalid_argument("Pyramid with " + std::to_string(levels) + " levels is too deep for a " +
                                        describe(img.grid) + " image");
    std::vector<Image3<Real>> pyr;
    pyr.reserve(static_cast<std::size_t>(levels));
    pyr.push_back(img);
    for(int l = 1; l < levels; ++l) pyr.push_back(downsample_image(pyr.back()));
    return pyr;
}

Grid3 deformation_grid_for(const Grid3 &image_grid, int grid_ratio) {
    if(grid_ratio < 1) throw std::invalid_argument("grid_ratio must be >= 1");
    Index3 dims{};
    for(int d = 0; d < 3; ++d) {
        const std::int64_t m = image_grid.dim(d);
        dims[d] = m == 1 ? 1 : std::max<std::int64_t>(2, (m + grid_ratio - 1) / grid_ratio);
    }
    return grid_with_dims(image_grid, dims);
}

template <class Real>
DeformationField<Real> prolong_deformation(const DeformationField<Real> &y, const Grid3 &finer_def_grid) {
    const auto plan = build_gather_plan(y.grid, finer_def_grid);
    return from_displacement(apply_P(displacement(y), plan));
}

template <class Real>
std::pair<double, double> max_displacement(const DeformationField<Real> &y, const Vec3 &voxel_spacing) {
    const auto u = displacement(y);
    double mm = 0.0, vox = 0.0;
    for(int d = 0; d < 3; ++d) {
        for(Real v : u[d]) {
            const double a = std::abs(static_cast<double>(v));
            mm = std::max(mm, a);
            vox = std::max(vox, a / voxel_spacing[d]);
        }
    }
    return {mm, vox};
}

template <class Real>
RegistrationResult<Real> register_images(const Image3<Real> &reference, const Image3<Real> &templ,
                                         const MultilevelConfig &cfg) {
    validate(cfg);
    validate(reference);
    validate(templ);
    if(!(reference.grid == templ.grid))
        throw std::invalid_argument("Reference (" + describe(reference.grid) + ") and template (" +
                                    describe(templ.grid) + ") grids differ; resample the template first");

    const auto t_start = clock_type::now();
    const Executor exec(cfg.workers);
    RegistrationResult<Real> result;
    auto &report = result.report;
    report.precision = cfg.precision;
    report.pt_variant = cfg.pt_variant;
    report.workers = cfg.workers;
    report.alpha = cfg.alpha;
    report.ngf = cfg.ngf;

    const int levels = cfg.num_levels > 0 ? cfg.num_levels : auto_level_count(reference.grid, cfg.coarsest_min_dim);

    // Both pyramids are built concurrently.
    std::vector<Image3<Real>> pyramids[2];
    const Image3<Real> *inputs[2] = {&reference, &templ};
    try {
        exec.for_tasks(2, [&](std::size_t t) { pyramids[t] = build_pyramid(*inputs[t], levels); });
    } catch(const std::exception &e) {
        throw RegistrationError("pyramid with " + std::to_string(levels) + " levels: " + e.what());
    }
    report.seconds_pyramid = seconds_since(t_start);

    DeformationField<Real> y;
    for(int fine_index = levels - 1; fine_index >= 0; --fine_index) {
        LevelReport lr;
        lr.level_index = levels - 1 - fine_index;
        std::string phase = "setup";
        try {
            auto t0 = clock_type::now();
            const Grid3 &image_grid = pyramids[0][fine_index].grid;
            lr.image_grid = image_grid;
            lr.def_grid = deformation_grid_for(image_grid, cfg.grid_ratio);
            if(fine_index == levels - 1) {
                y = make_identity<Real>(lr.def_grid);
            } else {
                phase = "prolong";
                y = prolong_deformation(y, lr.def_grid);
                lr.seconds_prolong = seconds_since(t0);
                t0 = clock_type::now();
                phase = "setup";
            }
            const auto level = make_level_data(pyramids[0][fine_index], pyramids[1][fine_index], lr.def_grid, cfg.ngf,
                                               exec);
            lr.seconds_setup = seconds_since(t0);

            phase = "optimize";
            t0 = clock_type::now();
            LevelObjective<Real> objective(level, cfg.alpha, cfg.pt_variant, exec);
            const auto observer = [&](const IterationRecord &rec) {
                lr.trace.push_back({rec.iteration, rec.J, static_cast<double>(objective.last_D()),
                                    static_cast<double>(objective.last_S()), rec.grad_inf, rec.step});
            };
            auto opt = lbfgs_minimize<Real>(objective.callback(), y.flatten(), cfg.lbfgs, cfg.stop, observer);
            y.assign_flat(std::span<const Real>(opt.x));
            lr.seconds_optimize = seconds_since(t0);
            lr.iterations = static_cast<int>(opt.trace.iterations.size()) - 1;
            lr.evaluations = opt.trace.evaluations;
            lr.stop_reason = opt.trace.reason;
            lr.line_search_failed = opt.trace.line_search_failed;
            if(!opt.trace.iterations.empty()) report.final_grad_inf = opt.trace.iterations.back().grad_inf;
        } catch(const std::exception &e) {
            throw RegistrationError("level " + std::to_string(lr.level_index) + " (" + phase + "): " + e.what());
        }
        report.levels.push_back(std::move(lr));
    }
    std::tie(report.final_max_displacement_mm, report.final_max_displacement_voxels) =
        max_displacement(y, reference.grid.spacing());
    result.deformation = std::move(y);
    report.seconds_total = seconds_since(t_start);
    return result;
}

#define NGFREG_INSTANTIATE(Real)                                                                                 \
    template Image3<Real> downsample_image<Real>(const Image3<Real> &);                                          \
    template std::vector<Image3<Real>> build_pyramid<Real>(const Image3<Real> &, int);                           \
    template std::pair<double, double> max_displacement<Real>(const DeformationField<Real> &, const Vec3 &);     \
    template DeformationField<Real> prolong_deformation<Real>(const DeformationField<Real> &, const Grid3 &);    \
    template RegistrationResult<Real> register_images<Real>(const Image3<Real> &, const Image3<Real> &,          \
                                                            const MultilevelConfig &);

NGFREG_INSTANTIATE(float)
NGFREG_INSTANTIATE(double)

} // namespace ngfreg
