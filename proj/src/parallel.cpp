#include "ngfreg/parallel.hpp"

#include <algorithm>
#include <exception>
#include <stdexcept>

namespace ngfreg {

Executor::Executor(int workers) : workers_(std::max(1, workers)) {
    // The calling thread takes part, so only workers-1 helpers are spawned.
    for(int w = 1; w < workers_; ++w) threads_.emplace_back([this] { worker_loop(); });
}

Executor::~Executor() {
    {
        std::lock_guard lock(mutex_);
        stop_ = true;
    }
    wake_.notify_all();
    for(auto &t : threads_) t.join();
}

void Executor::worker_loop() {
    std::size_t seen = 0;
    std::unique_lock lock(mutex_);
    while(true) {
        wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if(stop_) return;
        seen = generation_;
        while(job_ != nullptr && next_ < job_count_) {
            const std::size_t t = next_++;
            const auto *job = job_;
            lock.unlock();
            (*job)(t);
            lock.lock();
            if(++finished_ == job_count_) done_.notify_all();
        }
    }
}

void Executor::for_tasks(std::size_t count, const std::function<void(std::size_t)> &task) const {
    if(count == 0) return;
    if(workers_ == 1 || count == 1) {
        for(std::size_t t = 0; t < count; ++t) task(t);
        return;
    }

    std::exception_ptr error;
    std::mutex error_mutex;
    const std::function<void(std::size_t)> guarded = [&](std::size_t t) {
        try {
            task(t);
        } catch(...) {
            std::lock_guard lock(error_mutex);
            if(!error) error = std::current_exception();
        }
    };

    std::unique_lock lock(mutex_);
    if(job_ != nullptr) {
        // Nested or concurrent use of a busy pool degrades to serial execution on this thread.
        lock.unlock();
        for(std::size_t t = 0; t < count; ++t) task(t);
        return;
    }
    job_ = &guarded;
    job_count_ = count;
    next_ = 0;
    finished_ = 0;
    ++generation_;
    wake_.notify_all();
    while(next_ < job_count_) {
        const std::size_t t = next_++;
        lock.unlock();
        guarded(t);
        lock.lock();
        ++finished_;
    }
    done_.wait(lock, [&] { return finished_ == job_count_; });
    job_ = nullptr;
    lock.unlock();

    if(error) std::rethrow_exception(error);
}

void Executor::for_ranges(std::size_t n, const std::function<void(std::size_t, std::size_t)> &body) const {
    if(n == 0) return;
    const std::size_t chunks = std::min<std::size_t>(n, static_cast<std::size_t>(workers_) * 4);
    const std::size_t base = n / chunks;
    const std::size_t extra = n % chunks;
    for_tasks(chunks, [&](std::size_t c) {
        const std::size_t begin = c * base + std::min(c, extra);
        const std::size_t end = begin + base + (c < extra ? 1 : 0);
        body(begin, end);
    });
}

const Executor &serial_executor() {
    static const Executor exec(1);
    return exec;
}

namespace {

constexpr std::size_t reduction_block = 4096;

template <class Real>
Real pairwise(std::span<const Real> v) {
    if(v.size() <= 8) {
        Real s = Real(0);
        for(Real x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise(v.first(half)) + pairwise(v.subspan(half));
}

} // namespace

template <class Real>
Real deterministic_sum(std::span<const Real> values, const Executor &exec) {
    if(values.size() <= reduction_block) return pairwise(values);
    const std::size_t blocks = (values.size() + reduction_block - 1) / reduction_block;
    std::vector<Real> partial(blocks);
    exec.for_tasks(blocks, [&](std::size_t b) {
        const std::size_t begin = b * reduction_block;
        const std::size_t len = std::min(reduction_block, values.size() - begin);
        partial[b] = pairwise(values.subspan(begin, len));
    });
    return pairwise(std::span<const Real>(partial));
}

template float deterministic_sum<float>(std::span<const float>, const Executor &);
template double deterministic_sum<double>(std::span<const double>, const Executor &);

} // namespace ngfreg
