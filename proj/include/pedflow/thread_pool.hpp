#pragma once
#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace pedflow {

// Persistent worker pool. Work is split into fixed chunks [i*chunk,
// (i+1)*chunk) whose boundaries depend only on (n, chunk), never on the
// thread count; chunks write to disjoint output slots, so results are
// bit-identical for any pool size. The calling thread participates, so a
// pool of size 1 degenerates to an inline loop. Each parallel_for gets its
// own job object: a worker waking late claims from an exhausted counter and
// goes back to sleep, it can never touch a newer job's chunks.
class ThreadPool {
public:
    explicit ThreadPool(int threads) : requested_(threads < 1 ? 1 : threads) {
        for (int i = 0; i < requested_ - 1; ++i)
            workers_.emplace_back([this] { worker_loop(); });
    }

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    ~ThreadPool() {
        {
            std::lock_guard<std::mutex> lock(mu_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto& w : workers_) w.join();
    }

    int size() const { return requested_; }

    // body(first, last) over [0, n) split into chunks of `chunk`.
    void parallel_for(std::size_t n, std::size_t chunk,
                      std::function<void(std::size_t, std::size_t)> body) {
        if (n == 0) return;
        if (chunk == 0) chunk = 1;
        const std::size_t nchunks = (n + chunk - 1) / chunk;
        if (requested_ == 1 || nchunks == 1) {
            for (std::size_t c = 0; c < nchunks; ++c)
                body(c * chunk, std::min(n, (c + 1) * chunk));
            return;
        }
        auto job = std::make_shared<Job>();
        job->body = std::move(body);
        job->n = n;
        job->chunk = chunk;
        job->nchunks = nchunks;
        job->pending.store(nchunks, std::memory_order_relaxed);
        {
            std::lock_guard<std::mutex> lock(mu_);
            current_ = job;
        }
        cv_.notify_all();
        run_job(*job);
        {
            std::unique_lock<std::mutex> lock(mu_);
            done_cv_.wait(lock, [&] { return job->pending.load(std::memory_order_acquire) == 0; });
            if (current_ == job) current_.reset();
        }
    }

private:
    struct Job {
        std::function<void(std::size_t, std::size_t)> body;
        std::size_t n = 0, chunk = 0, nchunks = 0;
        std::atomic<std::size_t> next{0};
        std::atomic<std::size_t> pending{0};
    };

    void run_job(Job& job) {
        for (;;) {
            const std::size_t c = job.next.fetch_add(1, std::memory_order_relaxed);
            if (c >= job.nchunks) return;
            job.body(c * job.chunk, std::min(job.n, (c + 1) * job.chunk));
            if (job.pending.fetch_sub(1, std::memory_order_acq_rel) == 1) {
                std::lock_guard<std::mutex> lock(mu_);
                done_cv_.notify_all();
            }
        }
    }

    void worker_loop() {
        std::shared_ptr<Job> seen;
        for (;;) {
            std::shared_ptr<Job> job;
            {
                std::unique_lock<std::mutex> lock(mu_);
                cv_.wait(lock, [&] { return stop_ || (current_ && current_ != seen); });
                if (stop_) return;
                job = current_;
            }
            run_job(*job);
            seen = std::move(job);  // holding it pins the address until a new job arrives
        }
    }

    int requested_;
    std::vector<std::thread> workers_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::condition_variable done_cv_;
    bool stop_ = false;
    std::shared_ptr<Job> current_;
};

} // namespace pedflow
