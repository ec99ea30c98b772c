#pragma once

#include <random>

#include "levyh/geometry.hpp"

namespace testsupport {

using levyh::Index;
using levyh::Matrix;
using levyh::Vector;

inline levyh::PointSet uniform_line(Index n, double lo = -1.0, double hi = 1.0)
{
    std::vector<double> xs;
    const double        h = (hi - lo) / double(n);
    for (Index i = 0; i < n; ++i)
        xs.push_back(lo + double(i) * h);
    return levyh::PointSet::line(xs);
}

inline levyh::PointSet uniform_square(Index n, double lo = -1.0, double hi = 1.0)
{
    std::vector<levyh::Point> pts;
    const double              h = (hi - lo) / double(n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            pts.push_back({lo + double(i) * h, lo + double(j) * h});
    return levyh::PointSet(2, pts);
}

// exp(-eps2 |x_i - x_j|^2) in tree ordering, assembled entry by entry
inline Matrix gaussian_matrix(const levyh::ClusterTree& t, double eps2)
{
    const Index n = t.size();
    Matrix      K(n, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i) {
            const auto&  x  = t.point(i);
            const auto&  y  = t.point(j);
            const double d2 = (x[0] - y[0]) * (x[0] - y[0]) + (x[1] - y[1]) * (x[1] - y[1]);
            K(i, j)         = std::exp(-eps2 * d2);
        }
    return K;
}

inline double rel_err(const Vector& a, const Vector& b)
{
    return (a - b).norm() / b.norm();
}

inline Vector random_unit(Index n, std::mt19937& rng)
{
    std::normal_distribution<double> g;
    Vector                           x(n);
    for (Index i = 0; i < n; ++i)
        x[i] = g(rng);
    return x / x.norm();
}

inline Matrix random_matrix(Index m, Index n, std::mt19937& rng)
{
    std::normal_distribution<double> g;
    Matrix                           A(m, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < m; ++i)
            A(i, j) = g(rng);
    return A;
}

// least-squares slope of log(y) against log(x)
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const std::size_t n  = x.size();
    double            sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (double(n) * sxy - sx * sy) / (double(n) * sxx - sx * sx);
}

}// namespace testsupport
