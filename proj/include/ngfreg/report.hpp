// report.hpp - plain-text registration reports: key = value lines, one [level N] section per
// pyramid level, followed by a whitespace-separated iteration table.

#pragma once

#include <filesystem>
#include <iosfwd>

#include "ngfreg/multilevel.hpp"

namespace ngfreg {

void write_report(std::ostream &os, const RegistrationReport &report);
void write_report(const std::filesystem::path &path, const RegistrationReport &report);

} // namespace ngfreg
