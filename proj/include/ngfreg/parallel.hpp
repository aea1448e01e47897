// parallel.hpp - explicit worker pools and reproducible reductions.
//
// Every data-parallel kernel takes an Executor by reference; nothing reads a global thread count.
// Chunking only decides which worker computes an output, never how a sum is associated, so
// results do not depend on the worker count.

#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace ngfreg {

class Executor {
  public:
    explicit Executor(int workers = 1);
    ~Executor();

    Executor(const Executor &) = delete;
    Executor &operator=(const Executor &) = delete;

    int workers() const noexcept { return workers_; }

    // Calls body(begin, end) on disjoint sub-ranges covering [0, n). Blocks until all are done.
    // Exceptions thrown by body are rethrown on the calling thread (first one wins).
    void for_ranges(std::size_t n, const std::function<void(std::size_t, std::size_t)> &body) const;

    // Runs task(w) for w in [0, count) with at most workers() in flight.
    void for_tasks(std::size_t count, const std::function<void(std::size_t)> &task) const;

  private:
    void worker_loop();

    int workers_;
    std::vector<std::thread> threads_;
    mutable std::mutex mutex_;
    mutable std::condition_variable wake_;
    mutable std::condition_variable done_;
    mutable const std::function<void(std::size_t)> *job_ = nullptr;
    mutable std::size_t job_count_ = 0;
    mutable std::size_t next_ = 0;
    mutable std::size_t finished_ = 0;
    mutable std::size_t generation_ = 0;
    bool stop_ = false;
};

// Serial executor for callers that do not care.
const Executor &serial_executor();

// Fixed-shape pairwise summation: the input is cut into blocks of a constant size, each block
// summed by recursive halving, and the block sums combined the same way. Bit-identical for
// any worker count.
template <class Real>
Real deterministic_sum(std::span<const Real> values, const Executor &exec = serial_executor());

} // namespace ngfreg
