#pragma once
#include <Eigen/Dense>
#include <complex>
#include <cstddef>
#include <cstdlib>
#include <numbers>
#include <thread>
#include <vector>

namespace mtlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using IVec = Eigen::VectorXi;
using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline cplx expi(double phase) { return {std::cos(phase), std::sin(phase)}; }

// MTLAB_THREADS caps the worker count
inline unsigned thread_count() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* s = std::getenv("MTLAB_THREADS")) {
        int v = std::atoi(s);
        if (v > 0) return std::min<unsigned>(hw, unsigned(v));
    }
    return hw;
}

// Fixed-size chunks so reductions do not depend on the thread count.
inline constexpr std::size_t kChunk = 2048;

template <class F>
void parallel_chunks(std::size_t n, F&& body) {
    std::size_t chunks = (n + kChunk - 1) / kChunk;
    unsigned nt = std::min<std::size_t>(thread_count(), std::max<std::size_t>(chunks, 1));
    if (nt <= 1) {
        for (std::size_t c = 0; c < chunks; ++c)
            body(c, c * kChunk, std::min(n, (c + 1) * kChunk));
        return;
    }
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nt; ++t)
        pool.emplace_back([&, t] {
            for (std::size_t c = t; c < chunks; c += nt)
                body(c, c * kChunk, std::min(n, (c + 1) * kChunk));
        });
    for (auto& th : pool) th.join();
}

template <class T, class F>
T parallel_sum(std::size_t n, F&& term) {
    std::size_t chunks = (n + kChunk - 1) / kChunk;
    std::vector<T> part(chunks, T{});
    parallel_chunks(n, [&](std::size_t c, std::size_t lo, std::size_t hi) {
        T acc{};
        for (std::size_t i = lo; i < hi; ++i) acc += term(i);
        part[c] = acc;
    });
    T total{};
    for (auto& p : part) total += p;
    return total;
}

template <class F>
void parallel_for(std::size_t n, F&& body) {
    parallel_chunks(n, [&](std::size_t, std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) body(i);
    });
}

}  // namespace mtlab
