#include "ngfreg/report.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>

#include "ngfreg/io.hpp"

namespace ngfreg {

namespace {

void write_dims(std::ostream &os, const Grid3 &g) {
    os << g.dim(0) << " " << g.dim(1) << " " << g.dim(2);
}

} // namespace

void write_report(std::ostream &os, const RegistrationReport &r) {
    os << std::setprecision(17);
    os << "# ngfreg registration report\n";
    os << "precision = " << to_string(r.precision) << "\n";
    os << "pt_variant = " << to_string(r.pt_variant) << "\n";
    os << "workers = " << r.workers << "\n";
    os << "alpha = " << r.alpha << "\n";
    os << "tau = " << r.ngf.tau << "\n";
    os << "rho = " << r.ngf.rho << "\n";
    os << "levels = " << r.levels.size() << "\n";
    os << "seconds_pyramid = " << r.seconds_pyramid << "\n";
    os << "seconds_total = " << r.seconds_total << "\n";
    os << "final_grad_inf = " << r.final_grad_inf << "\n";
    os << "final_max_displacement_mm = " << r.final_max_displacement_mm << "\n";
    os << "final_max_displacement_voxels = " << r.final_max_displacement_voxels << "\n";
    for(const auto &lr : r.levels) {
        os << "\n[level " << lr.level_index << "]\n";
        os << "image_dims = ";
        write_dims(os, lr.image_grid);
        os << "\ndef_dims = ";
        write_dims(os, lr.def_grid);
        os << "\niterations = " << lr.iterations << "\n";
        os << "evaluations = " << lr.evaluations << "\n";
        os << "stop_reason = " << to_string(lr.stop_reason) << "\n";
        os << "line_search_failed = " << (lr.line_search_failed ? "true" : "false") << "\n";
        os << "seconds_prolong = " << lr.seconds_prolong << "\n";
        os << "seconds_setup = " << lr.seconds_setup << "\n";
        os << "seconds_optimize = " << lr.seconds_optimize << "\n";
        os << "iter J D S grad_inf step\n";
        for(const auto &it : lr.trace)
            os << it.iteration << " " << it.J << " " << it.D << " " << it.S << " " << it.grad_inf << " " << it.step << "\n";
    }
}

void write_report(const std::filesystem::path &path, const RegistrationReport &report) {
    std::ofstream out(path);
    if(!out) throw VolumeIoError(VolumeIoError::Kind::Io, "Cannot write report '" + path.string() + "'");
    write_report(out, report);
}

} // namespace ngfreg
