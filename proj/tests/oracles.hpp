#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <vector>

// Reference computations kept apart from the library kernels.
namespace oracle {

using hp = boost::multiprecision::cpp_bin_float_50;

inline double f(double s, double a, double x)
{
    if (x == 0) return -1.0;
    const double v = (2.0 - a) * std::pow(std::fabs(x), s) - 1.0;
    return x > 0 ? v : -v;
}

inline hp f(double s, const hp& a, const hp& x)
{
    if (x == 0) return hp(-1);
    const hp v = (2 - a) * pow(abs(x), hp(s)) - 1;
    return x > 0 ? v : hp(-v);
}

template <class F>
double bisect(F&& g, double lo, double hi, int steps = 200)
{
    double glo = g(lo);
    for (int i = 0; i < steps; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if ((gm > 0) == (glo > 0)) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// xi_k = f^{k-1}(-1)
inline double xi(double s, double a, int k)
{
    double x = -1;
    for (int i = 1; i < k; ++i) x = f(s, a, x);
    return x;
}

inline hp iterate(double s, const hp& a, hp x, int n)
{
    for (int i = 0; i < n; ++i) x = f(s, a, x);
    return x;
}

}  // namespace oracle
