#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace entk {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Domain errors: bad arguments, invalid configs, impossible requests.
class DomainError : public std::invalid_argument {
public:
    explicit DomainError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Shape errors: dimension mismatches between otherwise valid objects.
class ShapeError : public std::invalid_argument {
public:
    explicit ShapeError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Solver errors: numerical failure inside an iterative routine.
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {
inline int& thread_count_ref() {
    static int n = 0;  // 0 = auto
    return n;
}
}  // namespace detail

inline void set_num_threads(int n) { detail::thread_count_ref() = n; }

inline int num_threads() {
    int n = detail::thread_count_ref();
    if (n > 0) return n;
    if (const char* env = std::getenv("ENTK_DMFT_THREADS")) {
        int e = std::atoi(env);
        if (e > 0) return e;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Deterministic parallel loop: the index->work mapping is fixed, so results
// never depend on the number of worker threads.
inline void parallel_for(std::int64_t begin, std::int64_t end,
                         const std::function<void(std::int64_t)>& body) {
    const std::int64_t n = end - begin;
    if (n <= 0) return;
    int nt = num_threads();
    if (nt > n) nt = static_cast<int>(n);
    if (nt <= 1) {
        for (std::int64_t i = begin; i < end; ++i) body(i);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(nt);
    std::exception_ptr first_error;
    std::mutex err_mutex;
    for (int w = 0; w < nt; ++w) {
        const std::int64_t lo = begin + n * w / nt;
        const std::int64_t hi = begin + n * (w + 1) / nt;
        workers.emplace_back([&, lo, hi]() {
            try {
                for (std::int64_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : workers) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace entk
