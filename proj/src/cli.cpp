#include "ngfreg/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ngfreg/benchmark.hpp"
#include "ngfreg/evaluation.hpp"
#include "ngfreg/io.hpp"
#include "ngfreg/multilevel.hpp"
#include "ngfreg/ngf.hpp"
#include "ngfreg/report.hpp"
#include "ngfreg/warp.hpp"

namespace ngfreg {
namespace {

// Input data that cannot be used as given; reported with the I/O exit code.
class InputError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct RegisterArgs {
    std::string reference, templ, out_deformation, out_warped, report;
    double alpha = MultilevelConfig{}.alpha;
    double tau = NgfParams{}.tau;
    double rho = NgfParams{}.rho;
    std::string levels = "auto";
    int grid_ratio = MultilevelConfig{}.grid_ratio;
    int coarsest_min_dim = MultilevelConfig{}.coarsest_min_dim;
    std::string precision = "f64";
    int threads = 1;
    std::string pt_variant = "gather";
    int max_iter = LbfgsConfig{}.max_iterations;
};

struct WarpArgs {
    std::string templ, deformation, out, like, reference, out_difference;
    std::string precision = "f64";
    int threads = 1;
};

struct EvaluateArgs {
    std::string deformation, landmarks_ref, landmarks_template, image_grid_from, out;
    std::string frame = "index1";
    std::string compare_deformation, out_difference;
};

struct BenchmarkArgs {
    std::vector<int> dims{32, 32, 32};
    std::vector<int> threads{1};
    std::vector<std::string> precisions{"f64"};
    std::vector<std::string> variants{"gather", "scatter", "redblack"};
    int reps = 3;
    std::string out;
    int register_max_iter = 10;
    bool no_register = false;
};

struct ResampleArgs {
    std::string input, like, out;
    int threads = 1;
};

template <class Real>
VectorField3<Real> positions_on(const DeformationField<Real> &y, const Grid3 &image_grid, const Executor &exec) {
    if(!same_domain(y.grid, image_grid))
        throw InputError("Deformation grid (" + describe(y.grid) + ") does not cover the image grid (" +
                         describe(image_grid) + ")");
    return deformation_to_image_grid(y, build_gather_plan(y.grid, image_grid), exec);
}

template <class Real>
Image3<Real> difference(const Image3<Real> &a, const Image3<Real> &b) {
    Image3<Real> d(a.grid);
    for(std::size_t n = 0; n < a.values.size(); ++n) d.values[n] = a.values[n] - b.values[n];
    return d;
}

template <class Real>
int do_register(const RegisterArgs &a, std::ostream &out) {
    MultilevelConfig cfg;
    cfg.alpha = a.alpha;
    cfg.ngf = {a.tau, a.rho};
    if(a.levels == "auto") {
        cfg.num_levels = 0;
    } else {
        std::size_t used = 0;
        cfg.num_levels = std::stoi(a.levels, &used);
        if(used != a.levels.size() || cfg.num_levels < 1)
            throw std::invalid_argument("--levels expects a positive integer or 'auto'");
    }
    cfg.grid_ratio = a.grid_ratio;
    cfg.coarsest_min_dim = a.coarsest_min_dim;
    cfg.precision = parse_precision(a.precision);
    cfg.workers = a.threads;
    cfg.pt_variant = parse_pt_variant(a.pt_variant);
    cfg.lbfgs.max_iterations = a.max_iter;
    validate(cfg);

    const auto R = read_volume<Real>(a.reference);
    const auto T = read_volume<Real>(a.templ);
    if(!(R.grid == T.grid))
        throw InputError("Reference grid (" + describe(R.grid) + ") differs from template grid (" + describe(T.grid) +
                         "); run 'ngfreg resample --input " + a.templ + " --like " + a.reference +
                         " --out <path>' first");

    const auto result = register_images(R, T, cfg);
    write_deformation(result.deformation, a.out_deformation);
    if(!a.out_warped.empty()) {
        const Executor exec(a.threads);
        const auto yhat = positions_on(result.deformation, R.grid, exec);
        write_volume(warp_image(T, yhat, exec).warped, a.out_warped);
    }
    if(!a.report.empty()) write_report(a.report, result.report);

    const auto &rep = result.report;
    out << "levels: " << rep.levels.size() << "\n"
        << "final_max_displacement_mm: " << rep.final_max_displacement_mm << "\n"
        << "final_max_displacement_voxels: " << rep.final_max_displacement_voxels << "\n"
        << "seconds_total: " << rep.seconds_total << "\n";
    return exit_code::ok;
}

template <class Real>
int do_warp(const WarpArgs &a, std::ostream &) {
    const Executor exec(a.threads);
    const auto T = read_volume<Real>(a.templ);
    const auto y = read_deformation<Real>(a.deformation);
    std::optional<Image3<Real>> reference;
    if(!a.reference.empty()) reference = read_volume<Real>(a.reference);

    Grid3 target = T.grid;
    if(!a.like.empty()) target = read_metaimage(a.like).grid;
    else if(reference) target = reference->grid;

    const auto warped = warp_image(T, positions_on(y, target, exec), exec).warped;
    write_volume(warped, a.out);
    if(!a.out_difference.empty()) {
        if(!reference) throw std::invalid_argument("--out-difference requires --reference");
        if(!(reference->grid == target))
            throw InputError("Reference grid (" + describe(reference->grid) + ") differs from the output grid (" +
                             describe(target) + ")");
        write_volume(difference(warped, *reference), a.out_difference);
    }
    return exit_code::ok;
}

int do_evaluate(const EvaluateArgs &a, std::ostream &out) {
    const bool landmarks = !a.landmarks_ref.empty() || !a.landmarks_template.empty();
    if(!landmarks && a.compare_deformation.empty())
        throw std::invalid_argument("Nothing to evaluate: pass landmark files or --compare-deformation");
    if(landmarks && (a.landmarks_ref.empty() || a.landmarks_template.empty() || a.image_grid_from.empty()))
        throw std::invalid_argument("Landmark evaluation needs --landmarks-ref, --landmarks-template and --image-grid-from");

    const auto y = read_deformation<double>(a.deformation);
    out << std::fixed << std::setprecision(4);
    if(landmarks) {
        const auto frame = parse_landmark_frame(a.frame);
        const Grid3 grid = read_metaimage(a.image_grid_from).grid;
        const auto ref = read_landmarks(a.landmarks_ref, frame, grid);
        const auto tmp = read_landmarks(a.landmarks_template, frame, grid);
        if(ref.count() != tmp.count())
            throw InputError("Landmark count mismatch: " + std::to_string(ref.count()) + " reference vs " +
                             std::to_string(tmp.count()) + " template");
        const auto e = landmark_error(y, ref, tmp, grid);
        std::size_t outside = 0;
        for(auto o : e.outside) outside += o;
        out << "landmarks: " << e.per_landmark.size() << "\n"
            << "LME: " << e.mean << " ± " << e.stddev << " mm\n";
        if(outside) out << "landmarks outside the image domain: " << outside << "\n";
        if(!a.out.empty()) {
            std::ofstream os(a.out);
            if(!os) throw InputError("Cannot open '" + a.out + "' for writing");
            os << "# index error_mm outside\n" << std::setprecision(17);
            for(std::size_t i = 0; i < e.per_landmark.size(); ++i)
                os << i << " " << e.per_landmark[i] << " " << int(e.outside[i]) << "\n";
            if(!os) throw InputError("Failed writing '" + a.out + "'");
        }
    }
    if(!a.compare_deformation.empty()) {
        const auto other = read_deformation<double>(a.compare_deformation);
        if(!(other.grid == y.grid))
            throw InputError("Deformations live on different grids: " + describe(y.grid) + " vs " + describe(other.grid));
        const auto d = field_difference_stats(y, other);
        out << std::scientific << std::setprecision(6) << "field_difference_max_mm: " << d.max_mm << "\n"
            << "field_difference_mean_mm: " << d.mean_mm << "\n";
        if(!a.out_difference.empty()) write_volume(d.magnitude, a.out_difference);
    }
    return exit_code::ok;
}

int do_benchmark(const BenchmarkArgs &a, std::ostream &out) {
    if(a.dims.size() != 3) throw std::invalid_argument("--dims expects X,Y,Z");
    BenchmarkOptions o;
    o.dims = {a.dims[0], a.dims[1], a.dims[2]};
    o.workers = a.threads;
    o.precisions.clear();
    for(const auto &p : a.precisions) o.precisions.push_back(parse_precision(p));
    o.variants.clear();
    for(const auto &v : a.variants) o.variants.push_back(parse_pt_variant(v));
    o.repetitions = a.reps;
    o.register_max_iterations = a.register_max_iter;
    o.include_register = !a.no_register;
    for(int w : o.workers)
        if(w < 1) throw std::invalid_argument("--threads entries must be >= 1");

    const auto records = run_benchmark(o);
    if(a.out.empty()) {
        write_benchmark_table(out, records);
    } else {
        std::ofstream os(a.out);
        if(!os) throw InputError("Cannot open '" + a.out + "' for writing");
        write_benchmark_table(os, records);
        if(!os) throw InputError("Failed writing '" + a.out + "'");
    }
    return exit_code::ok;
}

int do_resample(const ResampleArgs &a, std::ostream &) {
    const Executor exec(a.threads);
    const auto in = read_volume<double>(a.input);
    const Grid3 target = read_metaimage(a.like).grid;
    write_volume(resample_clamped(in, target, exec), a.out);
    return exit_code::ok;
}

} // namespace

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"Deformable NGF registration with curvature regularization"};
    app.name("ngfreg");
    app.require_subcommand(1);

    RegisterArgs ra;
    auto *reg = app.add_subcommand("register", "Register a template volume to a reference volume");
    reg->add_option("--reference", ra.reference, "Reference volume (MetaImage)")->required();
    reg->add_option("--template", ra.templ, "Template volume (MetaImage)")->required();
    reg->add_option("--out-deformation", ra.out_deformation, "Output deformation field")->required();
    reg->add_option("--out-warped", ra.out_warped, "Output warped template");
    reg->add_option("--alpha", ra.alpha, "Curvature weight")->capture_default_str();
    reg->add_option("--tau", ra.tau, "Template edge parameter")->capture_default_str();
    reg->add_option("--rho", ra.rho, "Reference edge parameter")->capture_default_str();
    reg->add_option("--levels", ra.levels, "Number of levels or 'auto'")->capture_default_str();
    reg->add_option("--grid-ratio", ra.grid_ratio, "Image voxels per deformation grid point")->capture_default_str();
    reg->add_option("--coarsest-min-dim", ra.coarsest_min_dim, "Smallest axis length of the coarsest level")
        ->capture_default_str();
    reg->add_option("--precision", ra.precision, "f32 or f64")->capture_default_str();
    reg->add_option("--threads", ra.threads, "Worker count")->capture_default_str()->check(CLI::PositiveNumber);
    reg->add_option("--pt-variant", ra.pt_variant, "gather, scatter or redblack")->capture_default_str();
    reg->add_option("--max-iter", ra.max_iter, "L-BFGS iterations per level")->capture_default_str();
    reg->add_option("--report", ra.report, "Text report with per-level traces and timings");

    WarpArgs wa;
    auto *warp = app.add_subcommand("warp", "Apply a stored deformation to a template volume");
    warp->add_option("--template", wa.templ, "Template volume")->required();
    warp->add_option("--deformation", wa.deformation, "Deformation field")->required();
    warp->add_option("--out", wa.out, "Output warped volume")->required();
    warp->add_option("--like", wa.like, "Volume whose grid the output uses (default: reference, then template)");
    warp->add_option("--reference", wa.reference, "Reference volume for the difference image");
    warp->add_option("--out-difference", wa.out_difference, "Output warped minus reference");
    warp->add_option("--precision", wa.precision, "f32 or f64")->capture_default_str();
    warp->add_option("--threads", wa.threads, "Worker count")->capture_default_str()->check(CLI::PositiveNumber);

    EvaluateArgs ea;
    auto *eval = app.add_subcommand("evaluate", "Landmark error and deformation comparison");
    eval->add_option("--deformation", ea.deformation, "Deformation field")->required();
    eval->add_option("--landmarks-ref", ea.landmarks_ref, "Reference landmarks");
    eval->add_option("--landmarks-template", ea.landmarks_template, "Template landmarks");
    eval->add_option("--image-grid-from", ea.image_grid_from, "Volume defining the landmark index grid");
    eval->add_option("--frame", ea.frame, "index1, index0 or world")->capture_default_str();
    eval->add_option("--out", ea.out, "Per-landmark errors");
    eval->add_option("--compare-deformation", ea.compare_deformation, "Second deformation to compare against");
    eval->add_option("--out-difference", ea.out_difference, "Per-point difference magnitude volume");

    BenchmarkArgs ba;
    auto *bench = app.add_subcommand("benchmark", "Time transfers, distance and registration on synthetic volumes");
    bench->add_option("--dims", ba.dims, "X,Y,Z")->delimiter(',')->expected(3);
    bench->add_option("--threads", ba.threads, "Worker counts")->delimiter(',');
    bench->add_option("--precision", ba.precisions, "Precisions")->delimiter(',');
    bench->add_option("--pt-variant", ba.variants, "Transpose variants")->delimiter(',');
    bench->add_option("--reps", ba.reps, "Repetitions (>= 3)")->capture_default_str();
    bench->add_option("--out", ba.out, "Write the table here instead of stdout");
    bench->add_option("--register-max-iter", ba.register_max_iter, "Iterations per level in the register runs")
        ->capture_default_str();
    bench->add_flag("--no-register", ba.no_register, "Skip the full registration timings");

    ResampleArgs sa;
    auto *resample = app.add_subcommand("resample", "Trilinear resampling onto another volume's grid");
    resample->add_option("--input", sa.input, "Input volume")->required();
    resample->add_option("--like", sa.like, "Volume providing the target grid")->required();
    resample->add_option("--out", sa.out, "Output volume")->required();
    resample->add_option("--threads", sa.threads, "Worker count")->capture_default_str()->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch(const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_code::ok : exit_code::usage;
    }

    try {
        if(reg->parsed()) {
            return parse_precision(ra.precision) == Precision::F32 ? do_register<float>(ra, out)
                                                                   : do_register<double>(ra, out);
        }
        if(warp->parsed()) {
            return parse_precision(wa.precision) == Precision::F32 ? do_warp<float>(wa, out) : do_warp<double>(wa, out);
        }
        if(eval->parsed()) return do_evaluate(ea, out);
        if(bench->parsed()) return do_benchmark(ba, out);
        if(resample->parsed()) return do_resample(sa, out);
    } catch(const VolumeIoError &e) {
        err << "error: " << e.what() << "\n";
        return exit_code::io;
    } catch(const LandmarkParseError &e) {
        err << "error: " << e.what() << "\n";
        return exit_code::io;
    } catch(const InputError &e) {
        err << "error: " << e.what() << "\n";
        return exit_code::io;
    } catch(const std::filesystem::filesystem_error &e) {
        err << "error: " << e.what() << "\n";
        return exit_code::io;
    } catch(const std::invalid_argument &e) {
        err << "error: " << e.what() << "\n";
        return exit_code::usage;
    } catch(const std::out_of_range &e) {
        err << "error: " << e.what() << "\n";
        return exit_code::usage;
    } catch(const AgreementError &e) {
        err << "error: variant outputs disagree, no timings reported: " << e.what() << "\n";
        return exit_code::numeric;
    } catch(const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return exit_code::numeric;
    }
    err << app.help();
    return exit_code::usage;
}

} // namespace ngfreg
