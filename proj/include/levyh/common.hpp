#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace levyh {

using Index  = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

#define LEVYH_REQUIRE(cond, msg)                                    \
    do {                                                            \
        if (!(cond)) {                                              \
            throw ::levyh::Error(std::string("levyh: ") + (msg));   \
        }                                                           \
    } while (0)

inline std::string range_str(Index begin, Index end)
{
    return "[" + std::to_string(begin) + "," + std::to_string(end) + ")";
}

// process-wide worker count used when a call passes 0 (0 = all cores)
inline int& default_threads()
{
    static int n = 0;
    return n;
}

//
// run f(i) for i in [0,n) on up to `threads` workers
//
template <typename F>
void parallel_for(Index n, F&& f, int threads = 0)
{
    if (threads <= 0)
        threads = default_threads();
    if (threads <= 0)
        threads = int(std::max(1u, std::thread::hardware_concurrency()));

    const Index nt = std::min<Index>(threads, n);

    if (nt <= 1) {
        for (Index i = 0; i < n; ++i)
            f(i);
        return;
    }

    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (Index t = 0; t < nt; ++t)
        pool.emplace_back([&, t] {
            for (Index i = t; i < n; i += nt)
                f(i);
        });
    for (auto& th : pool)
        th.join();
}

inline bool all_finite(const Matrix& M)
{
    return M.allFinite();
}

}// namespace levyh
