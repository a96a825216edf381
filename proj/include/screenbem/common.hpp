#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace screenbem {

using Vec3 = Eigen::Vector3d;

// Input or mesh consistency problem (CLI exit code 2).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Breakdown of a numerical procedure (CLI exit code 3).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Splits [0, n) into per-worker contiguous ranges and runs body(worker, begin, end)
// on each. Workers own disjoint state; the caller merges results in worker order,
// which keeps floating-point sums bit-stable for a fixed worker count.
inline void run_partitioned(std::int64_t n, int workers,
                            const std::function<void(int, std::int64_t, std::int64_t)>& body)
{
    if (workers < 1) workers = 1;
    if (n <= 0) return;
    if (workers == 1 || n < 2 * workers) {
        body(0, 0, n);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    pool.reserve(workers);
    const std::int64_t chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const std::int64_t b = std::min<std::int64_t>(w * chunk, n);
        const std::int64_t e = std::min<std::int64_t>(b + chunk, n);
        if (b >= e) break;
        pool.emplace_back([=, &body, &errors] {
            try {
                body(w, b, e);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& err : errors)
        if (err) std::rethrow_exception(err);
}

inline std::string format_sci(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.16e", v);
    return buf;
}

}  // namespace screenbem
