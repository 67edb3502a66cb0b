#include "rovella/flow.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "rovella/config.hpp"
#include "rovella/errors.hpp"

namespace rovella {

std::vector<std::string> FlowParams::violations(const FamilyParams& fp) const
{
    std::vector<std::string> v;
    if (!(lambda1 > 0 && lambda1 < -lambda3 && -lambda3 < -lambda2)) v.push_back("0 < lambda1 < -lambda3 < -lambda2");
    if (!(r() > s() + 3)) v.push_back("r > s + 3");
    if (!(lambda1 + lambda3 < 0)) v.push_back("lambda1 + lambda3 < 0");
    if (!(std::fabs(s() - fp.s) <= 1e-12)) v.push_back(fmt::format("s = {} differs from the family exponent {}", fmt_num(s()), fmt_num(fp.s)));
    if (!(tau0 > 0)) v.push_back("tau0 > 0");
    if (!(rho_g > 0 && rho_g < 1)) v.push_back("0 < rho_g < 1");
    if (!(critical_tolerance >= 0)) v.push_back("critical_tolerance >= 0");
    return v;
}

void FlowParams::validate(const FamilyParams& fp) const
{
    const auto v = violations(fp);
    if (v.empty()) return;
    std::string msg = "invalid flow parameters:";
    for (const auto& s : v) msg += " [" + s + "]";
    throw ParameterRangeError(msg);
}

SectionPoint poincare(const FlowParams& flow, const FamilyParams& fp, double a, SectionPoint p)
{
    const double sg = p.x < 0 ? -1.0 : 1.0;
    return {map_value(fp.s, a, p.x), sg * flow.c_g + flow.rho_g * p.y * std::pow(std::fabs(p.x), flow.r())};
}

double roof(const FlowParams& flow, double x)
{
    if (x == 0) return std::numeric_limits<double>::infinity();
    return flow.tau0 + std::log(1.0 / std::fabs(x)) / flow.lambda1;
}

Observable3D Observable3D::coordinate(int axis)
{
    if (axis < 0 || axis > 2) throw DomainError("coordinate: axis in {0, 1, 2}");
    return {Kind::coordinate, axis, 0};
}

double Observable3D::operator()(const std::array<double, 3>& p) const
{
    switch (kind) {
    case Kind::dist_to_origin_capped: return std::min(std::hypot(p[0], p[1], p[2]), 1.0);
    case Kind::coordinate: return p[axis];
    case Kind::constant: return value;
    }
    return 0;
}

std::string Observable3D::name() const
{
    switch (kind) {
    case Kind::dist_to_origin_capped: return "dist_to_origin_capped";
    case Kind::coordinate: return fmt::format("coordinate({})", axis);
    case Kind::constant: return fmt::format("constant({})", fmt_num(value));
    }
    return "?";
}

bool FlowResult::visit_ratio_holds() const
{
    if (visits.empty()) return true;
    double sum = 0;
    for (double v : visits) sum += v;
    const double m = static_cast<double>(visits.size());
    return m / T <= 2 * m / sum;
}

namespace {

// doubling panels from lo, adaptive Gauss-Kronrod on each
template <class F>
double quad(F&& f, double lo, double hi)
{
    using boost::math::quadrature::gauss_kronrod;
    double total = 0, a = lo, w = 1;
    while (a < hi) {
        const double b = std::min(hi, a + w);
        total += gauss_kronrod<double, 15>::integrate(f, a, b, 15, 1e-13);
        a = b;
        w *= 2;
    }
    return total;
}

// linear passage from (x, y, 1)
struct Passage {
    double x, y;
    const FlowParams& flow;

    std::array<double, 3> at(double t) const
    {
        return {x == 0 ? 0.0 : x * std::exp(flow.lambda1 * t), y * std::exp(flow.lambda2 * t), std::exp(flow.lambda3 * t)};
    }
    double norm2(double t) const
    {
        const auto p = at(t);
        return p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
    }
    double slope2(double t) const
    {
        const auto p = at(t);
        return 2 * (flow.lambda1 * p[0] * p[0] + flow.lambda2 * p[1] * p[1] + flow.lambda3 * p[2] * p[2]);
    }

    // |{t in [0, t1] : |p(t)| < r}|, |p|^2 is convex in t
    double dwell(double t1, double r) const
    {
        const double r2 = r * r;
        double lo = 0, hi = t1;
        if (slope2(0) >= 0)
            hi = 0;
        else if (slope2(t1) <= 0)
            lo = t1;
        else {
            for (int i = 0; i < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++i) {
                const double m = (lo + hi) / 2;
                (slope2(m) < 0 ? lo : hi) = m;
            }
        }
        const double tm = (lo + hi) / 2;
        if (norm2(tm) >= r2) return 0;
        auto cross = [&](double a, double b, bool falling) {
            for (int i = 0; i < 200 && b - a > 1e-14 * std::max(1.0, b); ++i) {
                const double m = (a + b) / 2;
                const bool inside = norm2(m) < r2;
                ((inside == falling) ? b : a) = m;
            }
            return (a + b) / 2;
        };
        const double enter = norm2(0) < r2 ? 0.0 : cross(0, tm, true);
        const double leave = norm2(t1) < r2 ? t1 : cross(tm, t1, false);
        return std::max(0.0, leave - enter);
    }
};

// |{u in [0, len] : |e + d u / tau| < r}|
double segment_dwell(const std::array<double, 3>& e, const std::array<double, 3>& d, double tau, double len, double r)
{
    const double A = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) / (tau * tau);
    const double B = 2 * (e[0] * d[0] + e[1] * d[1] + e[2] * d[2]) / tau;
    const double C = e[0] * e[0] + e[1] * e[1] + e[2] * e[2] - r * r;
    if (A == 0) return C < 0 ? len : 0;
    const double disc = B * B - 4 * A * C;
    if (disc <= 0) return 0;
    const double q = -0.5 * (B + std::copysign(std::sqrt(disc), B));
    double u0 = q / A, u1 = C / q;
    if (u0 > u1) std::swap(u0, u1);
    return std::max(0.0, std::min(u1, len) - std::max(u0, 0.0));
}

}  // namespace

FlowResult flow_average(const FlowParams& flow, const FamilyParams& fp, double a, SectionPoint p0,
                        const Observable3D& phi, double T, const FlowOptions& opt)
{
    flow.validate(fp);
    if (!(T > 0)) throw DomainError("flow_average: T > 0");
    if (!(std::fabs(p0.x) <= 1 && std::fabs(p0.y) <= 1)) throw DomainError("flow_average: p0 outside the section");
    FlowResult res;
    res.T = T;
    double t = 0, integral = 0, dwell = 0;
    SectionPoint p = p0;
    auto sample = [&] {
        if (opt.record_series && t > 0) res.series.push_back({t, integral / t, dwell / t});
    };

    while (t < T) {
        if (p.x == 0 || std::fabs(p.x) <= flow.critical_tolerance) {
            // on the stable manifold of the singularity
            const Passage leg{0.0, p.y, flow};
            const double len = T - t;
            integral += quad([&](double u) { return phi(leg.at(u)); }, 0, len);
            dwell += leg.dwell(len, opt.near);
            res.terminal = true;
            res.terminal_time = t;
            t = T;
            sample();
            break;
        }
        const Passage pass{p.x, p.y, flow};
        const double t_in = std::log(1.0 / std::fabs(p.x)) / flow.lambda1;
        const double seg = std::min(t_in, T - t);
        if (seg > 0) {
            integral += quad([&](double u) { return phi(pass.at(u)); }, 0, seg);
            dwell += pass.dwell(seg, opt.near);
        }
        t += seg;
        if (t >= T) {
            sample();
            break;
        }
        const double ax = std::fabs(p.x);
        const std::array<double, 3> exit{p.x < 0 ? -1.0 : 1.0, p.y * std::pow(ax, flow.r()), std::pow(ax, flow.s())};
        const SectionPoint next = poincare(flow, fp, a, p);
        const double leg = std::min(flow.tau0, T - t);
        if (flow.reinjection == Reinjection::frozen) {
            integral += phi(exit) * leg;
            dwell += std::hypot(exit[0], exit[1], exit[2]) < opt.near ? leg : 0;
        } else {
            const std::array<double, 3> d{next.x - exit[0], next.y - exit[1], 1.0 - exit[2]};
            auto at = [&](double u) {
                const double w = u / flow.tau0;
                return std::array<double, 3>{exit[0] + d[0] * w, exit[1] + d[1] * w, exit[2] + d[2] * w};
            };
            integral += quad([&](double u) { return phi(at(u)); }, 0, leg);
            dwell += segment_dwell(exit, d, flow.tau0, leg, opt.near);
        }
        t += leg;
        if (leg == flow.tau0) {
            res.visits.push_back(t_in + flow.tau0);
            ++res.returns;
        }
        p = next;
        sample();
    }
    res.average = integral / T;
    res.dwell_fraction = dwell / T;
    return res;
}

ContractionRecord leaf_contraction(const FlowParams& flow, const FamilyParams& fp, double a, SectionPoint p,
                                   SectionPoint q, int n)
{
    if (p.x != q.x) throw DomainError("leaf_contraction: points must share the x coordinate");
    if (n < 0) throw DomainError("leaf_contraction: n >= 0");
    ContractionRecord rec;
    rec.distances.push_back(std::fabs(p.y - q.y));
    for (int i = 0; i < n; ++i) {
        p = poincare(flow, fp, a, p);
        q = poincare(flow, fp, a, q);
        const double d = std::fabs(p.y - q.y);
        if (rec.distances.back() > 0) rec.max_step = std::max(rec.max_step, d / rec.distances.back());
        rec.distances.push_back(d);
    }
    if (n > 0 && rec.distances.front() > 0)
        rec.rate = std::pow(rec.distances.back() / rec.distances.front(), 1.0 / n);
    return rec;
}

void write_flow_csv(std::ostream& out, const FlowResult& r)
{
    out << "t,value,dwell_fraction\n";
    for (const auto& s : r.series) out << fmt_num(s.t) << ',' << fmt_num(s.average) << ',' << fmt_num(s.dwell) << '\n';
}

}  // namespace rovella
