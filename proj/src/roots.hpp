#pragma once

#include <cmath>

namespace rovella::detail {

// Bisection to full double resolution. g increasing with g(lo) < target <= g(hi).
template <class F>
double bisect_increasing(F&& g, double lo, double hi, double target)
{
    for (int i = 0; i < 2200; ++i) {
        const double mid = lo + (hi - lo) / 2;
        if (!(mid > lo && mid < hi)) break;
        if (g(mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    return std::fabs(g(lo) - target) <= std::fabs(g(hi) - target) ? lo : hi;
}

// f(lo) and f(hi) of opposite sign (or zero)
template <class F>
double bisect_sign(F&& f, double lo, double hi)
{
    double flo = f(lo);
    if (flo == 0) return lo;
    for (int i = 0; i < 2200; ++i) {
        const double mid = lo + (hi - lo) / 2;
        if (!(mid > lo && mid < hi)) break;
        const double fm = f(mid);
        if (fm == 0) return mid;
        if ((fm > 0) == (flo > 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return std::fabs(f(lo)) <= std::fabs(f(hi)) ? lo : hi;
}

}  // namespace rovella::detail
