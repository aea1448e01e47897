// benchmark.hpp - timing harness for the grid transfers, the distance and full registrations.
//
// Outputs of the three transpose variants are cross-checked in double precision before any
// timing is taken; disagreement aborts the run.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "ngfreg/geometry.hpp"
#include "ngfreg/transfer.hpp"

namespace ngfreg {

struct BenchmarkOptions {
    Index3 dims{32, 32, 32};
    std::vector<int> workers{1};
    std::vector<Precision> precisions{Precision::F64};
    std::vector<PtVariant> variants{PtVariant::Gather, PtVariant::Scatter, PtVariant::RedBlack};
    int repetitions = 3;
    int grid_ratio = 4;
    int register_max_iterations = 10;
    bool include_register = true;
    double agreement_tolerance = 1e-12;
};

struct BenchmarkRecord {
    std::string operation;
    std::string variant; // "none" for operations without a transpose choice
    Precision precision = Precision::F64;
    int workers = 1;
    Index3 dims{};
    int repetitions = 0;
    double min_seconds = 0.0;
    double median_seconds = 0.0;
    std::string checksum; // FNV-1a of the output bytes
};

class AgreementError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Largest relative disagreement among the transpose variants on a random input (double).
double transpose_variant_disagreement(const Grid3 &def_grid, const Grid3 &image_grid, int workers,
                                      std::uint64_t seed = 7);

std::vector<BenchmarkRecord> run_benchmark(const BenchmarkOptions &opts);

void write_benchmark_table(std::ostream &os, const std::vector<BenchmarkRecord> &records);

std::string fnv1a_hex(const void *data, std::size_t bytes, std::uint64_t state = 0xcbf29ce484222325ull);

} // namespace ngfreg
