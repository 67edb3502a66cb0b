#pragma once

#include <boost/multiprecision/mpfr.hpp>

#include <string>
#include <vector>

namespace rovella::detail {

using Real = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<0>,
                                           boost::multiprecision::et_off>;

// default precision is process-wide: single-threaded callers only
class Precision {
public:
    explicit Precision(unsigned bits) : old_(Real::default_precision())
    {
        Real::default_precision(static_cast<unsigned>(bits * 0.30103) + 2);
    }
    ~Precision() { Real::default_precision(old_); }
    Precision(const Precision&) = delete;
    Precision& operator=(const Precision&) = delete;

private:
    unsigned old_;
};

inline Real rpow(const Real& u, double s)
{
    if (s == 1.5) return u * sqrt(u);
    return pow(u, Real(s));
}

inline Real rmap(double s, const Real& a, const Real& x)
{
    if (x > 0) return (2 - a) * rpow(x, s) - 1;
    if (x < 0) return 1 - (2 - a) * rpow(-x, s);
    return Real(-1);
}

inline Real rslope(double s, const Real& a, const Real& x)
{
    const Real u = abs(x);
    if (s == 1.5) return (2 - a) * Real(1.5) * sqrt(u);
    return (2 - a) * Real(s) * pow(u, Real(s - 1));
}

inline Real rparam_slope(double s, const Real& x)
{
    if (x > 0) return -rpow(x, s);
    if (x < 0) return rpow(-x, s);
    return Real(0);
}

struct RealOrbit {
    Real xi;                 // xi_k
    Real dxi;                // d xi_k / da
    std::vector<char> signs;  // sign pattern of xi_1 .. xi_{k-1}
    bool hit_zero = false;    // some xi_j = 0 with j < k
};

inline RealOrbit real_orbit(double s, const Real& a, int k, bool derivative = false)
{
    RealOrbit o;
    Real x = -1, dx = 0;
    o.signs.reserve(k);
    for (int i = 1; i < k; ++i) {
        o.signs.push_back(x > 0 ? 1 : (x < 0 ? -1 : 0));
        if (x == 0) o.hit_zero = true;
        if (derivative) dx = rslope(s, a, x) * dx + rparam_slope(s, x);
        x = rmap(s, a, x);
    }
    o.xi = x;
    o.dxi = dx;
    return o;
}

// y_a^+ of the period-two orbit: (2 - a) t^s + t - 1 = 0
inline Real real_y_plus(double s, const Real& a, double guess)
{
    Real t = guess;
    for (int i = 0; i < 14; ++i) {
        const Real h = (2 - a) * rpow(t, s) + t - 1;
        const Real dh = (2 - a) * Real(s) * (s == 1.5 ? sqrt(t) : pow(t, Real(s - 1))) + 1;
        t -= h / dh;
    }
    return t;
}

inline std::string real_text(const Real& x, unsigned bits)
{
    return x.str(static_cast<std::streamsize>(bits * 0.30103) + 2, std::ios_base::scientific);
}

}  // namespace rovella::detail
