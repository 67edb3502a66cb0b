#include "rovella/search.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "mp.hpp"
#include "roots.hpp"
#include "rovella/config.hpp"
#include "rovella/errors.hpp"
#include "rovella/orbit.hpp"

namespace rovella {

using detail::Precision;
using detail::Real;

PeriodTwoOrbit period2(const FamilyParams& fp, double a)
{
    if (!(a >= 0 && a <= fp.a_max)) throw ParameterRangeError("period2: a outside [0, a_max]");
    // odd map: the orbit is {-t, t} with f_a(t) = -t
    const double zero = map_zero(fp, a, Side::plus);
    auto h = [&](double t) { return map_value(fp.s, a, t) + t; };
    if (!(h(0.0) < 0 && h(zero) > 0)) throw NotFound("no period-2 orbit in range");
    const double t = detail::bisect_sign(h, 0.0, zero);
    PeriodTwoOrbit o;
    o.y_plus = t;
    o.y_minus = -t;
    o.multiplier = map_slope(fp.s, a, t) * map_slope(fp.s, a, -t);
    return o;
}

PreimageChain preimage_chain(const FamilyParams& fp, double a, int count)
{
    if (count < 0) throw DomainError("preimage_chain: count >= 0");
    PreimageChain c;
    c.y.push_back(period2(fp, a).y_minus);
    for (int j = 1; j <= count; ++j) {
        const double prev = c.y.back();
        // left branch: 1 - (2 - a)|t|^s = prev
        const double u = (1.0 - prev) / (2.0 - a);
        if (!(u >= 0 && u <= 1)) throw NumericalError(fmt::format("preimage {} leaves [-1, 0)", j));
        const double t = -std::pow(u, 1.0 / fp.s);
        if (!(t >= -1.0 && t < 0)) throw NumericalError(fmt::format("preimage {} leaves [-1, 0)", j));
        c.y.push_back(t);
    }
    return c;
}

PreimageChain preimage_chain(const FamilyParams& fp, double a, int count, const ConstantsBundle& b, double x0,
                             double M)
{
    PreimageChain c = preimage_chain(fp, a, count);
    c.x0 = x0;
    c.M = M;
    const double lim = fp.K1 * std::pow(b.delta, fp.s);
    for (int j = 0; j <= count; ++j) {
        if (c.j0 < 0 && c.y[j] < x0) c.j0 = j;
        if (c.j1 < 0 && std::fabs(-1.0 - c.y[j]) < lim) c.j1 = j;
    }
    if (c.j0 >= 0 && c.j1 >= 0)
        c.separation = std::pow(1.0 / M, c.j1 - c.j0 - 1) < fp.K0 * std::pow(b.delta, b.kappa * fp.s) / 6.0;
    return c;
}

std::string to_string(OrbitType t)
{
    switch (t) {
    case OrbitType::super_attracting: return "super-attracting";
    case OrbitType::attracting: return "attracting";
    case OrbitType::repelling: return "repelling";
    case OrbitType::neutral: return "neutral";
    }
    return "?";
}

namespace {

constexpr double kZero = 1e-12;

std::vector<double> snapped(const std::vector<double>& orbit)
{
    std::vector<double> o = orbit;
    for (double& x : o)
        if (std::fabs(x) <= kZero) x = 0;
    return o;
}

}  // namespace

double orbit_multiplier(const FamilyParams& fp, double a, const std::vector<double>& orbit)
{
    double m = 1;
    for (double x : snapped(orbit)) m *= map_slope(fp.s, a, x);
    return m;
}

OrbitType verify_periodic(const FamilyParams& fp, double a, const std::vector<double>& orbit)
{
    if (orbit.empty()) throw DomainError("verify_periodic: empty orbit");
    const std::vector<double> o = snapped(orbit);
    const std::size_t p = o.size();
    for (std::size_t i = 0; i < p; ++i) {
        const double img = map_value(fp.s, a, o[i]);
        if (std::fabs(img - o[(i + 1) % p]) > 1e-10)
            throw NumericalError(fmt::format("verify_periodic: orbit does not close at step {} (gap {:.3g})", i,
                                             std::fabs(img - o[(i + 1) % p])));
    }
    if (std::any_of(o.begin(), o.end(), [](double x) { return x == 0; })) return OrbitType::super_attracting;
    const double m = std::fabs(orbit_multiplier(fp, a, o));
    if (m < 1 - 1e-9) return OrbitType::attracting;
    if (m > 1 + 1e-9) return OrbitType::repelling;
    return OrbitType::neutral;
}

SuperAttractorHit find_super_attractor(const FamilyParams& fp, double lo, double hi, int k)
{
    if (k < 2) throw DomainError("find_super_attractor: k >= 2");
    if (!(lo < hi) || lo < 0 || hi > fp.a_max) throw ParameterRangeError("find_super_attractor: bad interval");
    auto g = [&](double a) { return xi_plus(fp, a, k); };
    const double glo = g(lo), ghi = g(hi);
    if ((glo > 0 && ghi > 0) || (glo < 0 && ghi < 0))
        throw NotFound(fmt::format("no sign change of xi_{} on [{}, {}]", k, fmt_num(lo), fmt_num(hi)));
    SuperAttractorHit h;
    h.a = detail::bisect_sign(g, lo, hi);
    h.residual = std::fabs(g(h.a));
    if (h.residual > 1e-9)
        throw NotFound(fmt::format("sign change of xi_{} is a jump, not a zero (residual {:.3g})", k, h.residual));
    h.a_text = fmt_num(h.a);
    h.k = k;
    const CriticalOrbit o = critical_orbit(fp, h.a, k);
    h.orbit = o.xi;
    h.period = k;
    for (int j = 1; j <= k; ++j)
        if (std::fabs(o.xi_at(j)) <= kZero) {
            h.period = j;
            h.orbit.resize(j);
            break;
        }
    double prev = glo;
    for (int i = 1; i <= 64; ++i) {
        const double v = g(lo + (hi - lo) * i / 64);
        if ((v - prev) * (ghi - glo) < 0) h.monotone = false;
        prev = v;
    }
    verify_periodic(fp, h.a, h.orbit);
    return h;
}

namespace {

Real y_minus_real(const FamilyParams& fp, const Real& a)
{
    return -detail::real_y_plus(fp.s, a, period2(fp, std::clamp(static_cast<double>(a), 0.0, fp.a_max)).y_plus);
}

}  // namespace

PreperiodicHit find_preperiodic(const FamilyParams& fp, double lo, double hi, int k, const PreperiodicOptions& opt)
{
    if (k < 2) throw DomainError("find_preperiodic: k >= 2");
    if (!(lo < hi)) throw DomainError("find_preperiodic: lo < hi");
    const unsigned bits = 128 + 2 * (k + opt.alternation_steps);
    Precision guard(bits);
    const double s = fp.s;
    const Real rlo = lo, rhi = hi;

    struct Sample {
        Real a, g;
        std::vector<char> signs;
        bool zero;
    };
    auto sample = [&](const Real& a) {
        detail::RealOrbit o = detail::real_orbit(s, a, k);
        return Sample{a, o.xi - y_minus_real(fp, a), std::move(o.signs), o.hit_zero};
    };
    std::vector<Sample> grid;
    for (int i = 0; i <= opt.grid; ++i) grid.push_back(sample(rlo + (rhi - rlo) * i / opt.grid));

    bool any_change = false;
    for (int i = 0; i < opt.grid; ++i) {
        Sample l = grid[i], h = grid[i + 1];
        if ((l.g > 0) == (h.g > 0) && l.g != 0) continue;
        any_change = true;
        if (l.signs != h.signs || l.zero || h.zero) continue;
        bool ok = true;
        for (unsigned it = 0; it < bits + 8 && ok; ++it) {
            Sample m = sample((l.a + h.a) / 2);
            if (m.signs != l.signs || m.zero) {
                ok = false;
                break;
            }
            if (m.g == 0) {
                l = h = m;
                break;
            }
            if ((m.g > 0) == (l.g > 0))
                l = std::move(m);
            else
                h = std::move(m);
        }
        if (!ok) continue;
        const Sample& best = abs(l.g) <= abs(h.g) ? l : h;
        PreperiodicHit hit;
        hit.k = k;
        hit.a = static_cast<double>(best.a);
        hit.a_text = detail::real_text(best.a, bits);
        hit.residual = static_cast<double>(abs(best.g));
        if (hit.residual > 1e-12) continue;
        const Real yp = -y_minus_real(fp, best.a);
        hit.y_plus = static_cast<double>(yp);
        hit.y_minus = -hit.y_plus;
        Real x = detail::real_orbit(s, best.a, k).xi;
        double drift = static_cast<double>(abs(x + yp));
        for (int i = 1; i <= opt.alternation_steps; ++i) {
            x = detail::rmap(s, best.a, x);
            const Real target = i % 2 == 1 ? yp : Real(-yp);
            drift = std::max(drift, static_cast<double>(abs(x - target)));
        }
        hit.max_drift = drift;
        hit.alternates = drift <= 1e-6;
        if (!hit.alternates) continue;
        return hit;
    }
    if (!any_change)
        throw NotFound(fmt::format("no sign change of xi_{} - y_a^- on [{}, {}]", k, fmt_num(lo), fmt_num(hi)));
    throw NotFound(fmt::format("sign changes of xi_{} - y_a^- on [{}, {}] are all discontinuities", k, fmt_num(lo),
                               fmt_num(hi)));
}

namespace {

// xi_L(a) = y_a^- refined by Newton at the working precision
Real refine_preperiodic(const FamilyParams& fp, const PreperiodicHit& pre)
{
    const double s = fp.s;
    Real a(pre.a_text);
    for (int it = 0; it < 16; ++it) {
        const detail::RealOrbit o = detail::real_orbit(s, a, pre.k, true);
        const Real t = detail::real_y_plus(s, a, pre.y_plus);
        // y^- = -t, dt/da = t^s / ((2 - a) s t^(s-1) + 1)
        const Real dt = detail::rpow(t, s) / ((2 - a) * Real(s) * detail::rpow(t, s - 1) + 1);
        const Real g = o.xi + t;
        const Real dg = o.dxi + dt;
        if (dg == 0) break;
        const Real step = g / dg;
        a -= step;
        if (step == 0 || abs(step) < abs(a) * std::numeric_limits<Real>::epsilon()) break;
    }
    return a;
}

struct Probe {
    Real a, x, dx;
    std::vector<char> signs;
    bool zero;
};

Probe probe(double s, const Real& a, int k, bool derivative = false)
{
    detail::RealOrbit o = detail::real_orbit(s, a, k, derivative);
    return Probe{a, std::move(o.xi), std::move(o.dxi), std::move(o.signs), o.hit_zero};
}

// zero of xi_K on a bracket with a constant itinerary, nullopt on a discontinuity
std::optional<Real> solve_bracket(double s, Probe l, Probe h, int K, int bisections)
{
    if (l.signs != h.signs || l.zero || h.zero) return std::nullopt;
    for (int i = 0; i < bisections; ++i) {
        Probe m = probe(s, (l.a + h.a) / 2, K);
        if (m.signs != l.signs || m.zero) return std::nullopt;
        if (m.x == 0) return m.a;
        if ((m.x > 0) == (l.x > 0))
            l = std::move(m);
        else
            h = std::move(m);
    }
    Real a = (l.a + h.a) / 2;
    for (int it = 0; it < 200; ++it) {
        Probe m = probe(s, a, K, true);
        if (m.signs != l.signs || m.zero) return std::nullopt;
        if (m.x == 0) return a;
        if ((m.x > 0) == (l.x > 0))
            l.a = a;
        else
            h.a = a;
        Real next = m.dx != 0 ? Real(a - m.x / m.dx) : Real((l.a + h.a) / 2);
        const Real lo = l.a < h.a ? l.a : h.a, hi = l.a < h.a ? h.a : l.a;
        if (!(next > lo && next < hi)) next = (l.a + h.a) / 2;
        if (next == a || abs(h.a - l.a) <= abs(a) * std::numeric_limits<Real>::epsilon() * 4) return next;
        a = next;
    }
    return a;
}

std::vector<std::size_t> spread(std::size_t n, int depth)
{
    std::vector<std::size_t> idx;
    if (n == 0) return idx;
    if (static_cast<std::size_t>(depth) >= n) {
        for (std::size_t i = 0; i < n; ++i) idx.push_back(i);
        return idx;
    }
    if (depth == 1) return {n - 1};
    for (int i = 0; i < depth; ++i) {
        const std::size_t j = static_cast<std::size_t>(std::llround(double(i) * double(n - 1) / double(depth - 1)));
        if (idx.empty() || idx.back() != j) idx.push_back(j);
    }
    return idx;
}

}  // namespace

SuperSequence super_sequence(const FamilyParams& fp, const PreperiodicHit& pre, int depth,
                             const SuperSequenceOptions& opt)
{
    if (depth < 1) throw DomainError("super_sequence: depth >= 1");
    if (pre.a_text.empty() || pre.k < 2) throw DomainError("super_sequence: unverified preperiodic hit");
    if (opt.k_cap <= pre.k) throw DomainError("super_sequence: k_cap must exceed the hitting index");
    if (opt.grid < 1 || !(opt.width > 0) || !(opt.r > 0)) throw DomainError("super_sequence: bad options");
    const double s = fp.s;
    const int L = pre.k;
    SuperSequence out;

    Precision top(64 + 2 * opt.k_cap + 64);
    const Real astar = refine_preperiodic(fp, pre);
    const Real yplus = detail::real_y_plus(s, astar, pre.y_plus);
    Real prev = opt.width;
    int scanned = 0, jumps = 0;

    for (int K = L + 1; K <= opt.k_cap; ++K) {
        Precision local(96 + 2 * K);
        ++scanned;
        out.last_k = K;
        std::vector<Probe> grid;
        for (int i = 0; i <= opt.grid; ++i) grid.push_back(probe(s, astar - prev + 2 * prev * i / opt.grid, K));
        std::optional<Real> best;
        Real best_d = 0;
        for (int i = 0; i < opt.grid; ++i) {
            const Probe& l = grid[i];
            const Probe& h = grid[i + 1];
            if ((l.x > 0) == (h.x > 0) && l.x != 0 && h.x != 0) continue;
            const std::optional<Real> r = solve_bracket(s, l, h, K, 30);
            if (!r) {
                ++jumps;
                continue;
            }
            const Probe chk = probe(s, *r, K);
            if (abs(chk.x) > Real(1e-20)) continue;
            const Real d = abs(*r - astar);
            if (d > 0 && d < prev && (!best || d < best_d)) {
                best = *r;
                best_d = d;
            }
        }
        if (!best) continue;
        prev = best_d;

        SuperAttractorHit h;
        h.a = static_cast<double>(*best);
        h.a_text = detail::real_text(*best, 96 + 2 * K);
        h.offset = static_cast<double>(*best - astar);
        h.k = K;
        h.period = K;
        Real x = -1;
        for (int j = 1; j <= K; ++j) {
            h.orbit.push_back(static_cast<double>(x));
            if (j < K) x = detail::rmap(s, *best, x);
        }
        h.residual = std::fabs(h.orbit.back());
        int m = L - 1;
        for (int j = L; j <= K; ++j) {
            const double target = static_cast<double>((j - L) % 2 == 0 ? Real(-yplus) : yplus);
            if (std::fabs(h.orbit[j - 1] - target) >= opt.r) break;
            m = j;
        }
        h.shadowing = m >= L;
        if (h.shadowing && (m - L) % 2 == 0) --m;
        h.m = m;
        h.rho = K - m;
        out.all_hits.push_back(std::move(h));
    }

    if (out.all_hits.empty()) {
        out.diagnostics = fmt::format("no super-attractor found for k in [{}, {}] ({} discontinuous brackets)", L + 1,
                                      opt.k_cap, jumps);
        return out;
    }
    const int parity = out.all_hits.back().k % 2;
    std::vector<const SuperAttractorHit*> same;
    for (const auto& h : out.all_hits)
        if (h.k % 2 == parity) same.push_back(&h);
    for (std::size_t i : spread(same.size(), depth)) out.hits.push_back(*same[i]);
    out.diagnostics = fmt::format("scanned k = {}..{}: {} nested hits, {} selected, {} discontinuous brackets", L + 1,
                                  out.last_k, out.all_hits.size(), out.hits.size(), jumps);
    if (static_cast<int>(out.hits.size()) < depth)
        out.diagnostics += fmt::format("; partial: {} of {} requested", out.hits.size(), depth);
    (void)scanned;
    return out;
}

InstabilitySource preperiodic_from_escape(const FamilyParams& fp, const ConstantsBundle& b,
                                          const std::vector<EscapeEvent>& escapes, int depth,
                                          const InstabilityOptions& opt)
{
    std::vector<const EscapeEvent*> usable;
    for (const auto& e : escapes)
        if (e.next_return) usable.push_back(&e);
    if (opt.escape_index < 0 || opt.escape_index >= static_cast<int>(usable.size()))
        throw NotFound(fmt::format("no escape with a recorded next return at index {} ({} available)",
                                   opt.escape_index, usable.size()));
    InstabilitySource src;
    src.escape = *usable[opt.escape_index];
    src.gamma = *src.escape.next_return;
    const double dk = std::pow(b.delta, b.kappa);
    bool found = false;
    std::string why;
    for (int side : {1, -1}) {
        try {
            src.c = invert_critical_map(fp, src.escape.lo, src.escape.hi, src.gamma, side * dk);
            src.b = invert_critical_map(fp, src.escape.lo, src.escape.hi, src.gamma, side * b.delta);
            src.side = side;
            found = true;
            break;
        } catch (const NotFound& e) {
            why = e.what();
        }
    }
    if (!found) throw NotFound("escape image does not reach delta^kappa: " + why);

    src.chain = preimage_chain(fp, 0.0, 64, b);
    if (src.chain.j1 < 0) throw NotFound("preimage chain does not reach the K1 delta^s neighbourhood of -1");
    const double lo = std::min(src.b, src.c), hi = std::max(src.b, src.c);
    std::vector<int> order{src.chain.j1 + 1};
    for (int d = 1; d <= opt.ell_radius; ++d) {
        order.push_back(src.chain.j1 + 1 + d);
        if (src.chain.j1 + 1 - d >= 0) order.push_back(src.chain.j1 + 1 - d);
    }
    std::string tried;
    for (int ell : order) {
        const int k = src.gamma + 1 + ell;
        try {
            src.hit = find_preperiodic(fp, lo, hi, k, opt.preperiodic);
            src.hit.ell = ell;
            src.ell = ell;
            SuperSequenceOptions so = opt.sequence;
            so.width = src.c - src.b > 0 ? src.c - src.b : src.b - src.c;
            src.sequence = super_sequence(fp, src.hit, depth, so);
            return src;
        } catch (const NotFound& e) {
            tried += fmt::format("{}k={}: {}", tried.empty() ? "" : "; ", k, e.what());
        }
    }
    throw NotFound("no preperiodic parameter on [b, c]: " + tried);
}

void write_hits_csv(std::ostream& out, const std::vector<SuperAttractorHit>& hits)
{
    out << "a,k,period,type,residual,offset,m,rho\n";
    for (const auto& h : hits)
        out << (h.a_text.empty() ? fmt_num(h.a) : h.a_text) << ',' << h.k << ',' << h.period << ",super-attracting,"
            << fmt_num(h.residual) << ',' << fmt_num(h.offset) << ',' << h.m << ',' << h.rho << '\n';
}

void write_hits_csv(std::ostream& out, const std::vector<PreperiodicHit>& hits)
{
    out << "a,k,period,type,residual,ell\n";
    for (const auto& h : hits)
        out << (h.a_text.empty() ? fmt_num(h.a) : h.a_text) << ',' << h.k << ",2,preperiodic," << fmt_num(h.residual)
            << ',' << (h.ell ? std::to_string(*h.ell) : std::string()) << '\n';
}

}  // namespace rovella
