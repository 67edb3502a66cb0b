#include "rovella/combinatorics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "rovella/config.hpp"
#include "rovella/errors.hpp"
#include "rovella/orbit.hpp"

namespace rovella {

int ConstantsBundle::exclusion_level(int n) const
{
    return std::max(Delta, static_cast<int>(std::floor(alpha * n)));
}

double ConstantsBundle::bound_period_limit(int m) const
{
    return (s + 1.0) * std::abs(m) / (beta + std::log(lambda));
}

ConstantsBundle derive_constants(double s, int Delta, double alpha, double beta, double lambda0)
{
    auto require = [](bool ok, const std::string& name) {
        if (!ok) throw ConstraintError(name, "constraint violated: " + name);
    };
    require(s > 1, "s > 1");
    require(Delta >= 2, "Delta >= 2");
    require(alpha > 0, "alpha > 0");
    require(beta > 0, "beta > 0");
    require(lambda0 > 1, "lambda0 > 1");

    ConstantsBundle b;
    b.s = s;
    b.Delta = Delta;
    b.delta = std::exp(-static_cast<double>(Delta));
    b.alpha = alpha;
    b.beta = beta;
    b.lambda0 = lambda0;
    b.c_prime = 1.0 - (2.0 * alpha + (s - 1.0) * alpha / std::log(lambda0));
    require(b.c_prime > 0, "c' = 1 - (2 alpha + (s-1) alpha / log lambda0) > 0");
    b.lambda = std::pow(lambda0, b.c_prime);
    require(b.lambda > 1, "lambda = lambda0^c' > 1");
    const double ll = std::log(b.lambda);
    require(alpha * s < ll, "alpha s < log lambda");
    require(s * alpha <= beta, "s alpha <= beta");
    b.kappa1 = beta * (s + 2.0) / (beta + ll);
    b.kappa2 = beta * (s + 3.0) / (beta + ll);
    b.kappa = beta * (s + 5.0) / (beta + ll);
    require(b.kappa < 1, "beta (s+5)/(beta + log lambda) < 1");
    return b;
}

int comparability_horizon(double eta, double lambda)
{
    if (!(eta > 2 && lambda > 1)) throw DomainError("comparability_horizon: eta > 2 and lambda > 1 required");
    for (int N = 2; N < 10000; ++N) {
        double head = 0;
        for (int k = 1; k <= N; ++k) head += std::pow(eta, -k);
        const double tail = std::pow(lambda, -(N + 1)) / (1.0 - 1.0 / lambda);
        if (head + tail < 1) return N;
    }
    throw NumericalError("comparability_horizon: no horizon below 10000");
}

double level_width(int m)
{
    const double am = std::abs(m);
    return std::exp(-am) - std::exp(-(am + 1));
}

double cell_width(int m)
{
    const double am = std::abs(m);
    return level_width(m) / (am * am);
}

namespace {

// positive-side cell bounds [lo, hi)
void cell_bounds(int am, int k, double& lo, double& hi)
{
    const double top = std::exp(-static_cast<double>(am));
    const double w = cell_width(am);
    lo = top - k * w;
    hi = top - (k - 1) * w;
    if (k == am * am) lo = std::exp(-static_cast<double>(am + 1));
}

}  // namespace

IntervalAddress cell(int m, int k)
{
    const int am = std::abs(m);
    if (am < 1 || k < 1 || k > am * am) throw DomainError(fmt::format("no partition cell ({}, {})", m, k));
    IntervalAddress r;
    r.m = m;
    r.k = k;
    double lo, hi;
    cell_bounds(am, k, lo, hi);
    double in_lo, in_hi, out_lo, out_hi;
    if (k < am * am)
        cell_bounds(am, k + 1, in_lo, in_hi);
    else
        cell_bounds(am + 1, 1, in_lo, in_hi);
    if (k > 1) {
        cell_bounds(am, k - 1, out_lo, out_hi);
    } else if (am > 1) {
        cell_bounds(am - 1, (am - 1) * (am - 1), out_lo, out_hi);
    } else {
        out_lo = hi;
        out_hi = hi + (hi - lo);
    }
    if (m > 0) {
        r.lo = lo;
        r.hi = hi;
        r.plus_lo = in_lo;
        r.plus_hi = out_hi;
    } else {
        r.lo = -hi;
        r.hi = -lo;
        r.plus_lo = -out_hi;
        r.plus_hi = -in_lo;
    }
    return r;
}

Location locate(double x, const ConstantsBundle& b)
{
    Location loc;
    if (x == 0) {
        loc.critical = true;
        return loc;
    }
    const double y = std::fabs(x);
    if (y >= std::exp(-static_cast<double>(b.Delta - 1))) return loc;
    int m = static_cast<int>(std::floor(-std::log(y)));
    while (y < std::exp(-static_cast<double>(m + 1))) ++m;
    while (m > 1 && y >= std::exp(-static_cast<double>(m))) --m;
    const double top = std::exp(-static_cast<double>(m));
    int k = static_cast<int>(std::ceil((top - y) / cell_width(m)));
    k = std::clamp(k, 1, m * m);
    double lo, hi;
    cell_bounds(m, k, lo, hi);
    while (y < lo && k < m * m) cell_bounds(m, ++k, lo, hi);
    while (y >= hi && k > 1) cell_bounds(m, --k, lo, hi);
    loc.address = cell(x > 0 ? m : -m, k);
    return loc;
}

bool in_deep_zone(double x, const ConstantsBundle& b)
{
    double lo, hi;
    cell_bounds(b.Delta, 1, lo, hi);
    return std::fabs(x) < lo;
}

double bound_edge(int m) { return (m > 0 ? 1.0 : -1.0) * std::exp(-(std::abs(m) - 1.0)); }

BoundPeriod bound_period(const FamilyParams& fp, const ConstantsBundle& b, double a, int m, double x)
{
    const int am = std::abs(m);
    const double y = std::fabs(x);
    if (m == 0 || (x > 0) != (m > 0) || y > std::exp(-(am - 1.0)) * (1 + 1e-12) ||
        y < std::exp(-(am + 2.0)) * (1 - 1e-12))
        throw DomainError(fmt::format("bound_period: x = {:.17g} not in I_m^+ for m = {}", x, m));
    const double s = fp.s;
    const int cap = static_cast<int>(std::ceil(4 * b.bound_period_limit(m))) + 64;

    BoundPeriod r;
    double xi = m > 0 ? -1.0 : 1.0;
    // offset d = f^j(x) - xi_j, kept separately so tiny offsets survive
    double d = (m > 0 ? 1.0 : -1.0) * (2.0 - a) * std::pow(y, s);
    for (int j = 1; j <= cap; ++j) {
        const double gap = std::fabs(d);
        r.gaps.push_back(gap);
        if (gap > std::exp(-b.beta * j)) {
            r.p = j - 1;
            return r;
        }
        const double z = xi + d;
        double nd;
        if (xi == 0 || (z > 0) != (xi > 0) || std::fabs(d) > 1e-6 * std::fabs(xi)) {
            nd = map_value(s, a, z) - map_value(s, a, xi);
        } else {
            const double u = std::fabs(xi);
            const double f1 = (2.0 - a) * s * std::pow(u, s - 1.0);
            const double f2 = (xi > 0 ? 1.0 : -1.0) * (2.0 - a) * s * (s - 1.0) * std::pow(u, s - 2.0);
            nd = f1 * d + 0.5 * f2 * d * d;
        }
        xi = map_value(s, a, xi);
        d = nd;
    }
    throw NumericalError(fmt::format("insufficient orbit depth: still bound after {} steps (m = {})", cap, m));
}

int bound_period_at(const FamilyParams& fp, const ConstantsBundle& b, double a, int m)
{
    return bound_period(fp, b, a, m, bound_edge(m)).p;
}

int bound_period_interval(const FamilyParams& fp, const ConstantsBundle& b, double lo, double hi, int m,
                          int samples)
{
    if (samples < 1) throw DomainError("bound_period_interval: samples >= 1");
    int best = bound_period_at(fp, b, lo, m);
    for (int i = 1; i < samples; ++i) {
        const double a = lo + (hi - lo) * i / (samples - 1);
        best = std::min(best, bound_period_at(fp, b, a, m));
    }
    return best;
}

double iterate_derivative(const FamilyParams& fp, double a, double x, int j)
{
    double d = 1.0;
    for (int i = 0; i < j; ++i) {
        d *= map_slope(fp.s, a, x);
        x = map_value(fp.s, a, x);
    }
    return d;
}

double distortion_bound(const FamilyParams& fp, double a, int m, int p, int points)
{
    const double sg = m > 0 ? 1.0 : -1.0;
    const double start = -sg;
    const double end = map_value(fp.s, a, bound_edge(m));
    const CriticalOrbit o = critical_orbit(fp, a, std::max(p, 1), m > 0 ? CriticalSide::plus : CriticalSide::minus);
    double worst = 1.0;
    for (int i = 0; i < points; ++i) {
        double y = start + (end - start) * i / (points - 1);
        double d = 1.0;
        for (int k = 1; k <= p; ++k) {
            d *= map_slope(fp.s, a, y);
            y = map_value(fp.s, a, y);
            const double r = d / o.D_at(k);
            if (r > 0) worst = std::max({worst, r, 1.0 / r});
        }
    }
    return worst;
}

int Itinerary::covered_length() const
{
    int total = 0;
    for (auto& s : segments) total += s.length;
    return total;
}

int free_time(const std::vector<Segment>& segments)
{
    int F = 0;
    for (auto& s : segments)
        if (s.kind == SegmentKind::free || (s.kind == SegmentKind::ret && s.escape)) F += s.length;
    return F;
}

int deep_block_time(const std::vector<Segment>& segments, int n)
{
    int T = 0;
    bool deep = false;
    int start = 0;
    for (auto& s : segments) {
        if (s.kind != SegmentKind::ret) continue;
        if (!deep && !s.escape) {
            deep = true;
            start = s.start;
        } else if (deep && s.escape) {
            T += s.start - start;
            deep = false;
        }
    }
    if (deep) T += n + 1 - start;
    return T;
}

Itinerary itinerary(const FamilyParams& fp, double a, int n, const ConstantsBundle& b)
{
    if (n < 1) throw DomainError("itinerary: n >= 1 required");
    const CriticalOrbit orbit = critical_orbit(fp, a, n);
    Itinerary it;
    it.horizon = n;
    auto push_free = [&](int j) {
        if (!it.segments.empty() && it.segments.back().kind == SegmentKind::free &&
            it.segments.back().start + it.segments.back().length == j)
            ++it.segments.back().length;
        else
            it.segments.push_back({SegmentKind::free, j, 1});
    };
    int j = 1;
    while (j <= n) {
        const double x = orbit.xi_at(j);
        const Location loc = locate(x, b);
        if (loc.critical || (loc.address && std::abs(loc.address->m) >= b.exclusion_level(j))) {
            Segment r{SegmentKind::ret, j, 1};
            if (loc.address) {
                r.m = loc.address->m;
                r.k = loc.address->k;
            }
            it.segments.push_back(r);
            it.truncated_at = j;
            break;
        }
        if (loc.outside() || (std::abs(loc.address->m) == b.Delta && loc.address->k == 1)) {
            push_free(j);
            ++j;
            continue;
        }
        const IntervalAddress& ad = *loc.address;
        Segment r{SegmentKind::ret, j, 1, ad.m, ad.k};
        if (std::abs(ad.m) == b.Delta - 1) {
            r.escape = true;
            it.segments.push_back(r);
            ++j;
            continue;
        }
        r.p = bound_period_at(fp, b, a, ad.m);
        it.segments.push_back(r);
        const int len = std::min(r.p, n - j);
        if (len > 0) it.segments.push_back({SegmentKind::bound, j + 1, len});
        j += 1 + len;
    }
    it.n = it.truncated_at ? *it.truncated_at : n;
    it.F = free_time(it.segments);
    it.T = deep_block_time(it.segments, it.n);
    it.passes_FA = it.F >= (1.0 - b.alpha) * n;
    return it;
}

std::string to_string(SegmentKind k)
{
    switch (k) {
    case SegmentKind::ret: return "return";
    case SegmentKind::bound: return "bound";
    case SegmentKind::free: return "free";
    }
    return "?";
}

void write_itinerary_csv(std::ostream& out, const Itinerary& it)
{
    out << "start,length,kind,m,k,p\n";
    for (auto& s : it.segments)
        out << s.start << ',' << s.length << ',' << (s.escape ? std::string("escape") : to_string(s.kind)) << ','
            << s.m << ',' << s.k << ',' << s.p << '\n';
}

}  // namespace rovella
