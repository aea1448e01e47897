#include "ngfreg/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include "ngfreg/multilevel.hpp"
#include "ngfreg/ngf.hpp"
#include "ngfreg/synthetic.hpp"

namespace ngfreg {

std::string fnv1a_hex(const void *data, std::size_t bytes, std::uint64_t state) {
    const auto *p = static_cast<const unsigned char *>(data);
    for(std::size_t i = 0; i < bytes; ++i) {
        state ^= p[i];
        state *= 0x100000001b3ull;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << state;
    return os.str();
}

namespace {

template <class Real>
std::string checksum(const VectorField3<Real> &f, const std::vector<Real> &extra = {}) {
    std::uint64_t state = 0xcbf29ce484222325ull;
    std::string h;
    for(const auto &c : f.components) {
        h = fnv1a_hex(c.data(), c.size() * sizeof(Real), state);
        state = std::stoull(h, nullptr, 16);
    }
    if(!extra.empty()) h = fnv1a_hex(extra.data(), extra.size() * sizeof(Real), state);
    return h;
}

template <class Real>
VectorField3<Real> random_field(const Grid3 &g, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    VectorField3<Real> f(g);
    for(auto &c : f.components)
        for(auto &v : c) v = static_cast<Real>(dist(rng));
    return f;
}

double max_relative_difference(const VectorField3<double> &a, const VectorField3<double> &b) {
    double diff = 0.0, scale = 0.0;
    for(int d = 0; d < 3; ++d)
        for(std::size_t n = 0; n < a.size(); ++n) {
            diff = std::max(diff, std::abs(a[d][n] - b[d][n]));
            scale = std::max(scale, std::abs(a[d][n]));
        }
    return scale > 0.0 ? diff / scale : diff;
}

struct Timing {
    double min = 0.0;
    double median = 0.0;
};

template <class F>
Timing time_repeated(int reps, F &&f) {
    std::vector<double> t;
    for(int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    std::sort(t.begin(), t.end());
    return {t.front(), t[t.size() / 2]};
}

template <class Real>
void bench_precision(const BenchmarkOptions &opts, Precision precision, const SyntheticCase &sc,
                     std::vector<BenchmarkRecord> &records) {
    const Grid3 &image_grid = sc.reference.grid;
    const Grid3 def_grid = deformation_grid_for(image_grid, opts.grid_ratio);
    const Image3<Real> R = sc.reference.template cast<Real>();
    const Image3<Real> T = sc.templ.template cast<Real>();

    // A smooth deformation: the ground-truth map sampled on the deformation grid.
    DeformationField<Real> y(def_grid);
    for(std::size_t n = 0; n < def_grid.size(); ++n) {
        const Vec3 p = synthetic_map(sc.spec, world_of_index(def_grid, def_grid.delinearize(n)));
        for(int d = 0; d < 3; ++d) y[d][n] = static_cast<Real>(p[d]);
    }
    const auto r = random_field<Real>(image_grid, 11);

    for(const int workers : opts.workers) {
        const Executor exec(workers);
        const auto plan = build_gather_plan(def_grid, image_grid);
        const auto record = [&](std::string op, std::string variant, Timing t, std::string sum) {
            records.push_back({std::move(op), std::move(variant), precision, workers, image_grid.dims(),
                               opts.repetitions, t.min, t.median, std::move(sum)});
        };

        {
            VectorField3<Real> out;
            const auto t = time_repeated(opts.repetitions, [&] { out = apply_P(y, plan, exec); });
            record("apply_P", "none", t, checksum(out));
        }
        for(const auto variant : opts.variants) {
            VectorField3<Real> out;
            const auto t = time_repeated(opts.repetitions, [&] { out = apply_Pt(r, plan, variant, exec); });
            record("apply_Pt", to_string(variant), t, checksum(out));
        }
        const auto level = make_level_data(R, T, def_grid, NgfParams{}, exec);
        for(const auto variant : opts.variants) {
            DistanceEvaluation<Real> out;
            const auto t = time_repeated(opts.repetitions, [&] { out = distance_and_gradient(y, level, variant, exec); });
            record("ngf_value_gradient", to_string(variant), t, checksum(out.grad_y, std::vector<Real>{out.value}));
        }
        if(opts.include_register) {
            for(const auto variant : opts.variants) {
                MultilevelConfig cfg;
                cfg.grid_ratio = opts.grid_ratio;
                cfg.workers = workers;
                cfg.precision = precision;
                cfg.pt_variant = variant;
                cfg.lbfgs.max_iterations = opts.register_max_iterations;
                RegistrationResult<Real> out;
                const auto t = time_repeated(opts.repetitions, [&] { out = register_images(R, T, cfg); });
                record("register", to_string(variant), t, checksum(out.deformation));
            }
        }
    }
}

} // namespace

double transpose_variant_disagreement(const Grid3 &def_grid, const Grid3 &image_grid, int workers,
                                      std::uint64_t seed) {
    const Executor exec(workers);
    const auto plan = build_gather_plan(def_grid, image_grid);
    const auto r = random_field<double>(image_grid, seed);
    const auto g = apply_Pt_gather(r, plan, exec);
    const auto s = apply_Pt_scatter_atomic(r, plan, exec);
    const auto b = apply_Pt_redblack(r, plan, exec);
    return std::max(max_relative_difference(g, s), max_relative_difference(g, b));
}

std::vector<BenchmarkRecord> run_benchmark(const BenchmarkOptions &opts) {
    if(opts.repetitions < 3) throw std::invalid_argument("Benchmark needs at least 3 repetitions");
    if(opts.workers.empty() || opts.precisions.empty() || opts.variants.empty())
        throw std::invalid_argument("Benchmark needs at least one worker count, precision and variant");

    SyntheticSpec spec;
    spec.dims = opts.dims;
    const auto sc = make_synthetic_case(spec);
    const Grid3 def_grid = deformation_grid_for(sc.reference.grid, opts.grid_ratio);

    // Correctness gate: transposes on random data, then full distance gradients.
    const int max_workers = *std::max_element(opts.workers.begin(), opts.workers.end());
    const double pt_gap = transpose_variant_disagreement(def_grid, sc.reference.grid, max_workers);
    if(!(pt_gap <= opts.agreement_tolerance))
        throw AgreementError("Pt variants disagree (relative " + std::to_string(pt_gap) + ")");
    {
        const Executor exec(max_workers);
        const auto level = make_level_data(sc.reference, sc.templ, def_grid, NgfParams{}, exec);
        const auto y = make_identity<double>(def_grid);
        const auto ref = distance_and_gradient(y, level, PtVariant::Gather, exec);
        for(const auto v : {PtVariant::Scatter, PtVariant::RedBlack}) {
            const auto other = distance_and_gradient(y, level, v, exec);
            const double gap = max_relative_difference(ref.grad_y, other.grad_y);
            if(!(gap <= opts.agreement_tolerance) || ref.value != other.value)
                throw AgreementError("Distance gradients disagree between gather and " + to_string(v));
        }
    }

    std::vector<BenchmarkRecord> records;
    for(const auto p : opts.precisions) {
        if(p == Precision::F32) bench_precision<float>(opts, p, sc, records);
        else bench_precision<double>(opts, p, sc, records);
    }
    return records;
}

void write_benchmark_table(std::ostream &os, const std::vector<BenchmarkRecord> &records) {
    os << "operation\tvariant\tprecision\tworkers\tdims\trepetitions\tmin_seconds\tmedian_seconds\tchecksum\n";
    os << std::setprecision(6);
    for(const auto &r : records) {
        os << r.operation << "\t" << r.variant << "\t" << to_string(r.precision) << "\t" << r.workers << "\t"
           << r.dims[0] << "x" << r.dims[1] << "x" << r.dims[2] << "\t" << r.repetitions << "\t" << r.min_seconds
           << "\t" << r.median_seconds << "\t" << r.checksum << "\n";
    }
}

} // namespace ngfreg
