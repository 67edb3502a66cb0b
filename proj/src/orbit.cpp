#include "rovella/orbit.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "rovella/config.hpp"
#include "rovella/errors.hpp"
#include "roots.hpp"

namespace rovella {

CriticalOrbit critical_orbit(const FamilyParams& p, double a, int n, CriticalSide side)
{
    if (n < 1) throw DomainError("critical_orbit: n >= 1 required");
    if (!(a >= 0 && a <= p.a_max)) throw ParameterRangeError("critical_orbit: a outside [0, a_max]");
    CriticalOrbit o;
    o.side = side;
    o.a = a;
    o.xi.resize(n);
    o.D.resize(n);
    o.dxi_da.resize(n);
    double x = side == CriticalSide::plus ? -1.0 : 1.0;
    double dx = 0.0;
    double D = 1.0;
    for (int k = 1; k <= n; ++k) {
        o.xi[k - 1] = x;
        o.dxi_da[k - 1] = dx;
        if (!o.truncated_at && std::fabs(x) < 1e-300) o.truncated_at = k;
        const double fp = map_slope(p.s, a, x);
        D *= fp;
        o.D[k - 1] = D;
        dx = fp * dx + map_param_slope(p.s, x);
        x = map_value(p.s, a, x);
    }
    return o;
}

OrbitPoint orbit_point(const FamilyParams& p, double a, int k)
{
    double x = -1.0, dx = 0.0;
    for (int i = 1; i < k; ++i) {
        dx = map_slope(p.s, a, x) * dx + map_param_slope(p.s, x);
        x = map_value(p.s, a, x);
    }
    return {x, dx};
}

double xi_plus(const FamilyParams& p, double a, int k)
{
    double x = -1.0;
    for (int i = 1; i < k; ++i) x = map_value(p.s, a, x);
    return x;
}

GrowthReport check_growth(const CriticalOrbit& orbit, double lambda, double eta, int N)
{
    GrowthReport r;
    r.lambda_used = lambda;
    r.eta_used = eta;
    int last = std::max(1, orbit.size() - 1);
    if (orbit.truncated_at && *orbit.truncated_at <= last) {
        r.partial = true;
        last = *orbit.truncated_at - 1;
    }
    if (orbit.truncated_at && *orbit.truncated_at <= N) r.partial = true;
    const double ll = std::log(lambda), le = std::log(eta);
    for (int j = 1; j <= last; ++j) {
        const double lD = std::log(orbit.D_at(j));
        if (!r.first_failure && lD < j * ll - 1e-12) {
            r.passes_EG = false;
            r.first_failure = j;
        }
        if (j <= N && !r.first_eta_failure && lD < j * le - 1e-12) {
            r.passes_eta = false;
            r.first_eta_failure = j;
        }
    }
    if (N > orbit.size()) r.partial = true;
    return r;
}

GrowthReport check_basic_assumption(const CriticalOrbit& orbit, double alpha)
{
    GrowthReport r;
    r.alpha_used = alpha;
    r.min_margin = std::numeric_limits<double>::infinity();
    for (int j = 1; j <= orbit.size(); ++j) {
        const double ax = std::fabs(orbit.xi_at(j));
        const double m = ax > 0 ? std::log(ax) + alpha * j : -std::numeric_limits<double>::infinity();
        r.min_margin = std::min(r.min_margin, m);
        if (m < 0 && !r.first_BA_failure) {
            r.passes_BA = false;
            r.first_BA_failure = j;
        }
    }
    return r;
}

double comparability(const FamilyParams& p, double a, int n)
{
    if (n < 1) throw DomainError("comparability: n >= 1 required");
    if (n == 1) return 0.0;
    const CriticalOrbit o = critical_orbit(p, a, n);
    const double d = o.D_at(n - 1);
    if (d == 0) throw NumericalError("derivative vanished (BA violated)");
    return std::fabs(o.dxi_at(n)) / d;
}

namespace {

int classify_endpoint(double y, double delta)
{
    if (std::fabs(y) < delta) return 2;
    if (std::fabs(y) < std::exp(-1.0)) return 3;
    return 1;
}

}  // namespace

ExpansionRecord outside_expansion(const FamilyParams& p, double a, double x, int n, int Delta)
{
    if (n < 0) throw DomainError("outside_expansion: n >= 0 required");
    const double delta = std::exp(-static_cast<double>(Delta));
    ExpansionRecord r;
    r.n = n;
    double y = x;
    for (int i = 0; i < n; ++i) {
        if (std::fabs(y) < delta)
            throw DomainError(fmt::format("orbit enters U_Delta at step {} (|x| = {:.17g})", i, std::fabs(y)));
        r.derivative *= map_slope(p.s, a, y);
        y = map_value(p.s, a, y);
    }
    r.endpoint = y;
    r.item = classify_endpoint(y, delta);
    return r;
}

ExpansionCalibration calibrate_expansion(const FamilyParams& p, double a_hi, int Delta, int orbits, int n_max,
                                         std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ua(0.0, a_hi), ux(-1.0, 1.0);
    const double delta = std::exp(-static_cast<double>(Delta));
    struct Sample {
        int n;
        double logD;
        bool entry;
    };
    std::vector<Sample> samples;
    ExpansionCalibration cal;
    for (int t = 0; t < orbits; ++t) {
        const double a = ua(rng);
        double x = ux(rng);
        if (std::fabs(x) < delta) continue;
        ++cal.orbits;
        double logD = 0;
        for (int n = 1; n <= n_max; ++n) {
            logD += std::log(map_slope(p.s, a, x));
            x = map_value(p.s, a, x);
            const bool entry = std::fabs(x) < delta;
            samples.push_back({n, logD, entry});
            if (entry) break;
        }
    }
    double rate = std::numeric_limits<double>::infinity();
    for (auto& s : samples)
        if (s.entry) {
            rate = std::min(rate, s.logD / s.n);
            ++cal.entries;
        }
    if (!std::isfinite(rate)) rate = 0;
    cal.lambda_c = std::exp(rate);
    double logc = 0;
    for (auto& s : samples) logc = std::min(logc, s.logD - s.n * rate);
    cal.c = std::exp(logc);
    return cal;
}

ComparabilityCalibration calibrate_comparability(const FamilyParams& p, double a_hi, double lambda, double eta,
                                                 int N, int n_max, int parameters, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ua(0.0, a_hi);
    ComparabilityCalibration cal;
    cal.min_ratio = std::numeric_limits<double>::infinity();
    for (int t = 0; t < parameters; ++t) {
        const double a = t == 0 ? 0.0 : ua(rng);
        const CriticalOrbit o = critical_orbit(p, a, n_max);
        const GrowthReport g = check_growth(o, lambda, eta, N);
        if (!g.passes_eta) continue;
        const int good = g.first_failure ? *g.first_failure : o.size();
        for (int n = std::max(N, 2); n <= std::min(good, o.size()); ++n) {
            const double r = std::fabs(o.dxi_at(n)) / o.D_at(n - 1);
            cal.min_ratio = std::min(cal.min_ratio, r);
            cal.max_ratio = std::max(cal.max_ratio, r);
            ++cal.samples;
        }
    }
    if (cal.samples == 0) throw NumericalError("calibrate_comparability: no parameter satisfies the hypotheses");
    cal.A = std::max(cal.max_ratio, 1.0 / cal.min_ratio);
    return cal;
}

namespace {

bool early_growth(const FamilyParams& p, double a, int N0, double eta1, double zero_minus)
{
    double x = -1.0, D = 1.0;
    for (int n = 1; n <= N0; ++n) {
        D *= map_slope(p.s, a, x);
        x = map_value(p.s, a, x);
        if (D < std::pow(eta1, n) || x > zero_minus) return false;
    }
    return true;
}

}  // namespace

InitialInterval find_initial_interval(const FamilyParams& p, int Delta, double eta1, double lambda0, int N0,
                                      int n_cap)
{
    InitialInterval r;
    r.N0 = N0;
    r.eta1 = eta1;
    r.lambda0 = lambda0;
    const double delta = std::exp(-static_cast<double>(Delta));
    const double zero_minus = map_zero(p, 0.0, Side::minus);

    // largest a with early growth on all of [0, a]
    const int grid = 4000;
    double good = 0.0, bad = -1.0;
    for (int i = 1; i <= grid; ++i) {
        const double a = p.a_max * i / grid;
        if (!early_growth(p, a, N0, eta1, zero_minus)) {
            bad = a;
            break;
        }
        good = a;
    }
    if (bad < 0) {
        r.a_N0 = p.a_max;
    } else {
        double lo = good, hi = bad;
        for (int i = 0; i < 200; ++i) {
            const double mid = lo + (hi - lo) / 2;
            if (!(mid > lo && mid < hi)) break;
            (early_growth(p, mid, N0, eta1, zero_minus) ? lo : hi) = mid;
        }
        r.a_N0 = lo;
    }
    if (!(r.a_N0 > 0)) throw NotFound("find_initial_interval: early growth fails for every a > 0");

    // f_0(x0) = e^{-(Delta-1)} on the left branch
    const double target = std::exp(-static_cast<double>(Delta - 1));
    r.x0 = detail::bisect_increasing([&](double x) { return map_value(p.s, 0.0, x); }, -1.0, -1e-300, target);
    r.lambda0_prime = map_slope(p.s, 0.0, r.x0);

    int n1p = 0;
    {
        double x = -1.0;
        for (int i = 1; i <= n_cap; ++i) {
            if (x >= r.x0) {
                n1p = i;
                break;
            }
            x = map_value(p.s, r.a_N0, x);
        }
    }
    if (n1p == 0)
        throw NotFound(fmt::format("find_initial_interval: critical orbit does not expand enough within {} steps; "
                                   "use a larger a_max or a smaller Delta",
                                   n_cap));
    r.N1 = n1p + 1;
    if (r.N1 < N0)
        throw NotFound(fmt::format("find_initial_interval: first return N1 = {} precedes N0 = {}", r.N1, N0));
    r.a0 = detail::bisect_increasing([&](double a) { return xi_plus(p, a, n1p); }, 0.0, r.a_N0, r.x0);
    if (xi_plus(p, r.a0, n1p) >= r.x0) r.a0 = std::nextafter(r.a0, 0.0);

    // items (1)-(4) on a parameter grid
    const int checks = 256;
    r.item1 = r.item2 = r.item3 = true;
    for (int i = 0; i <= checks; ++i) {
        const double a = r.a0 * i / checks;
        const CriticalOrbit o = critical_orbit(p, a, r.N1);
        for (int j = 1; j <= r.N1 - 1; ++j) {
            if (j <= N0 - 1 && o.D_at(j) < std::pow(eta1, j)) r.item1 = false;
            if (o.D_at(j) < std::pow(lambda0, j)) r.item2 = false;
            if (std::fabs(o.xi_at(j)) < delta) r.item3 = false;
        }
    }
    auto last = [&](double a) { return xi_plus(p, a, r.N1); };
    r.item4 = last(0.0) <= -delta && last(r.a0) >= delta;
    if (r.item4) {
        r.a_minus_delta = detail::bisect_increasing(last, 0.0, r.a0, -delta);
        r.a_plus_delta = detail::bisect_increasing(last, 0.0, r.a0, delta);
        double prev = last(0.0);
        for (int i = 1; i <= 64; ++i) {
            const double v = last(r.a0 * i / 64);
            if (v < prev) r.item4 = false;
            prev = v;
        }
    }
    if (!r.item3 || !r.item4)
        throw NotFound("find_initial_interval: items (3)/(4) fail at Delta = " + std::to_string(Delta) +
                       "; use a larger Delta or a_max");
    return r;
}

void write_orbit_csv(std::ostream& out, const CriticalOrbit& orbit)
{
    out << "j,xi,D,dxi_da\n";
    for (int j = 1; j <= orbit.size(); ++j)
        out << j << ',' << fmt_num(orbit.xi_at(j)) << ',' << fmt_num(orbit.D_at(j)) << ','
            << fmt_num(orbit.dxi_at(j)) << '\n';
}

}  // namespace rovella
