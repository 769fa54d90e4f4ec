#include "core/parallel.h"

#include <algorithm>
#include <condition_variable>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace canonify {
namespace {

thread_local bool t_inside_parallel = false;

struct Pool {
    struct Task {
        std::int64_t begin = 0;
        std::int64_t end = 0;
    };

    std::vector<std::thread> workers;
    std::mutex mutex;
    std::condition_variable cv_work;
    std::condition_variable cv_done;
    const std::function<void(std::int64_t, std::int64_t)>* fn = nullptr;
    std::vector<Task> tasks;
    std::uint64_t generation = 0;
    int pending = 0;
    bool stop = false;
    std::exception_ptr error;

    explicit Pool(int n) {
        workers.reserve(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            workers.emplace_back([this, i] { worker_loop(i); });
        }
    }

    ~Pool() {
        {
            std::lock_guard<std::mutex> lock(mutex);
            stop = true;
        }
        cv_work.notify_all();
        for (auto& w : workers) w.join();
    }

    void worker_loop(int id) {
        t_inside_parallel = true;
        std::uint64_t seen = 0;
        for (;;) {
            Task task;
            const std::function<void(std::int64_t, std::int64_t)>* run = nullptr;
            {
                std::unique_lock<std::mutex> lock(mutex);
                cv_work.wait(lock, [&] { return stop || generation != seen; });
                if (stop) return;
                seen = generation;
                task = tasks[static_cast<size_t>(id)];
                run = fn;
            }
            if (task.begin < task.end) {
                try {
                    (*run)(task.begin, task.end);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mutex);
                    if (!error) error = std::current_exception();
                }
            }
            {
                std::lock_guard<std::mutex> lock(mutex);
                if (--pending == 0) cv_done.notify_all();
            }
        }
    }

    // Caller runs chunk 0 itself; workers handle the rest.
    void run(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& f) {
        const int parts = static_cast<int>(workers.size()) + 1;
        const std::int64_t chunk = (n + parts - 1) / parts;
        Task own{0, std::min<std::int64_t>(chunk, n)};
        {
            std::lock_guard<std::mutex> lock(mutex);
            tasks.assign(workers.size(), Task{});
            for (size_t i = 0; i < workers.size(); ++i) {
                const std::int64_t b = chunk * static_cast<std::int64_t>(i + 1);
                tasks[i] = Task{std::min(b, n), std::min(b + chunk, n)};
            }
            fn = &f;
            error = nullptr;
            pending = static_cast<int>(workers.size());
            ++generation;
        }
        cv_work.notify_all();

        std::exception_ptr own_error;
        if (own.begin < own.end) {
            try {
                f(own.begin, own.end);
            } catch (...) {
                own_error = std::current_exception();
            }
        }
        {
            std::unique_lock<std::mutex> lock(mutex);
            cv_done.wait(lock, [&] { return pending == 0; });
            if (!own_error && error) own_error = error;
        }
        if (own_error) std::rethrow_exception(own_error);
    }
};

std::mutex g_pool_mutex;
Pool* g_pool = nullptr;
int g_threads = 0;

int default_threads() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

int effective_threads() {
    return g_threads > 0 ? g_threads : default_threads();
}

Pool* pool_for(int n_threads) {
    // n_threads counts the calling thread, so the pool holds n_threads - 1.
    if (g_pool && static_cast<int>(g_pool->workers.size()) == n_threads - 1) return g_pool;
    delete g_pool;
    g_pool = nullptr;
    g_pool = new Pool(n_threads - 1);
    return g_pool;
}

}  // namespace

void set_thread_count(int n) {
    std::lock_guard<std::mutex> lock(g_pool_mutex);
    g_threads = n < 0 ? 0 : n;
}

int thread_count() {
    std::lock_guard<std::mutex> lock(g_pool_mutex);
    return effective_threads();
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn) {
    if (n <= 0) return;
    // Nested calls run inline on the caller's chunk.
    if (t_inside_parallel) {
        fn(0, n);
        return;
    }
    std::unique_lock<std::mutex> lock(g_pool_mutex);
    const int threads = static_cast<int>(std::min<std::int64_t>(effective_threads(), n));
    if (threads <= 1) {
        lock.unlock();
        fn(0, n);
        return;
    }
    Pool* pool = pool_for(threads);
    t_inside_parallel = true;
    try {
        // g_pool_mutex stays held: one parallel region at a time.
        pool->run(n, fn);
    } catch (...) {
        t_inside_parallel = false;
        throw;
    }
    t_inside_parallel = false;
}

void parallel_for_each(std::int64_t n, const std::function<void(std::int64_t)>& fn) {
    parallel_for(n, [&fn](std::int64_t begin, std::int64_t end) {
        for (std::int64_t i = begin; i < end; ++i) fn(i);
    });
}

}  // namespace canonify
