// cli.hpp - command-line driver: register, warp, evaluate, benchmark, resample.

#pragma once

#include <iosfwd>

namespace ngfreg {

namespace exit_code {
constexpr int ok = 0;
constexpr int usage = 1;
constexpr int io = 2;
constexpr int numeric = 3;
} // namespace exit_code

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace ngfreg
