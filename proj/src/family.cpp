#include "rovella/family.hpp"

#include <algorithm>
#include <limits>

#include "rovella/config.hpp"
#include "rovella/errors.hpp"
#include "roots.hpp"

namespace rovella {

FamilyParams FamilyParams::for_exponent(double s, double a_max)
{
    FamilyParams p;
    p.s = s;
    p.a_max = a_max;
    p.K0 = (2.0 - a_max) * s - 0.15;
    p.K1 = 2.0 * s + 0.25;
    p.chi = -(s * s - 1.0) / 2.0;
    return p;
}

std::vector<std::string> FamilyParams::violations() const
{
    std::vector<std::string> out;
    if (!(s > 1)) out.emplace_back("s > 1");
    if (!(a_max > 0 && a_max < 1)) out.emplace_back("0 < a_max < 1");
    if (!(K0 > 0 && K0 <= (2.0 - a_max) * s)) out.emplace_back("0 < K0 <= (2 - a_max) s");
    if (!(K1 >= 2.0 * s)) out.emplace_back("K1 >= 2 s");
    if (!(chi < 0)) out.emplace_back("chi < 0");
    if (std::fabs(chi + (s * s - 1.0) / 2.0) > 1e-12) out.emplace_back("chi = -(s^2 - 1)/2");
    return out;
}

void FamilyParams::validate() const
{
    auto v = violations();
    if (v.empty()) return;
    std::string msg = "invalid family parameters:";
    for (auto& s : v) msg += " [" + s + "]";
    throw ConfigError(msg);
}

namespace {

void check_parameter(const FamilyParams& p, double a)
{
    if (!(a >= 0 && a <= p.a_max))
        throw ParameterRangeError("parameter a = " + fmt_num(a) + " outside [0, " + fmt_num(p.a_max) + "]");
}

MapJet jet_at(const FamilyParams& p, double a, double u, int sign)
{
    const double s = p.s;
    const double c = 2.0 - a;
    MapJet j;
    const double us = std::pow(u, s);
    j.f = sign > 0 ? c * us - 1.0 : 1.0 - c * us;
    j.df_dx = c * s * std::pow(u, s - 1.0);
    j.d2f_dx2 = sign * c * s * (s - 1.0) * std::pow(u, s - 2.0);
    j.d3f_dx3 = c * s * (s - 1.0) * (s - 2.0) * std::pow(u, s - 3.0);
    j.df_da = -sign * us;
    if (u > 0) {
        const double r = j.d2f_dx2 / j.df_dx;
        j.schwarzian = j.d3f_dx3 / j.df_dx - 1.5 * r * r;
    } else {
        j.schwarzian = s > 1 ? -std::numeric_limits<double>::infinity() : 0.0;
    }
    return j;
}

}  // namespace

MapJet map_eval(const FamilyParams& p, double a, double x)
{
    check_parameter(p, a);
    if (x == 0) throw DomainError("critical point requires side convention");
    if (!(x >= -1 && x <= 1)) throw DomainError("x = " + fmt_num(x) + " outside [-1, 1]");
    return jet_at(p, a, std::fabs(x), x > 0 ? 1 : -1);
}

MapJet map_eval(const FamilyParams& p, double a, double x, Side side)
{
    if (x != 0) return map_eval(p, a, x);
    check_parameter(p, a);
    return jet_at(p, a, 0.0, static_cast<int>(side));
}

const AxiomCheck& AxiomReport::get(std::string_view id) const
{
    for (auto& c : checks)
        if (c.id == id) return c;
    throw Error("no axiom check named " + std::string(id));
}

bool AxiomReport::all_passed() const
{
    return std::all_of(checks.begin(), checks.end(), [](auto& c) { return c.passed; });
}

double AxiomReport::worst_margin() const
{
    double w = std::numeric_limits<double>::infinity();
    for (auto& c : checks) w = std::min(w, c.margin);
    return w;
}

namespace {

struct Worst {
    double margin = std::numeric_limits<double>::infinity();
    double a = 0, x = 0;
    void take(double m, double aa, double xx)
    {
        if (m < margin) {
            margin = m;
            a = aa;
            x = xx;
        }
    }
};

AxiomCheck finish(std::string id, const Worst& w, bool extra_ok = true, std::string note = {})
{
    AxiomCheck c;
    c.id = std::move(id);
    c.margin = w.margin;
    c.worst_a = w.a;
    c.worst_x = w.x;
    c.passed = extra_ok && w.margin > 0;
    c.note = std::move(note);
    return c;
}

}  // namespace

AxiomReport verify_axioms(const FamilyParams& p, const AxiomGrid& grid)
{
    if (grid.nx < 100 || grid.na < 2) throw DomainError("axiom grid needs >= 100 x points and >= 2 parameters");
    std::vector<double> xs;
    xs.reserve(grid.nx + 1);
    for (int j = 0; j <= grid.nx; ++j) {
        double x = -1.0 + 2.0 * j / grid.nx;
        if (std::fabs(x) > 1e-15) xs.push_back(x);
    }
    std::vector<double> as;
    for (int i = 0; i < grid.na; ++i) as.push_back(p.a_max * i / (grid.na - 1));

    const double s = p.s;
    AxiomReport rep;

    {
        Worst w;
        w.take(1e-12 - std::fabs(map_value(s, 0, 1) - 1.0), 0, 1);
        w.take(1e-12 - std::fabs(map_value(s, 0, -1) + 1.0), 0, -1);
        rep.checks.push_back(finish("A0", w));
    }
    {
        Worst w;
        for (double a : as) {
            w.take(1e-12 - std::fabs(jet_at(p, a, 0, 1).f + 1.0), a, 0);
            w.take(1e-12 - std::fabs(jet_at(p, a, 0, -1).f - 1.0), a, 0);
        }
        rep.checks.push_back(finish("A1", w));
    }

    Worst a2, a3, a4;
    for (double a : as) {
        for (double x : xs) {
            const MapJet j = jet_at(p, a, std::fabs(x), x > 0 ? 1 : -1);
            a2.take(std::min(j.df_dx, x > 0 ? j.d2f_dx2 : -j.d2f_dx2), a, x);
            const double scaled = j.df_dx / std::pow(std::fabs(x), s - 1.0);
            a3.take(std::min(scaled - p.K0, p.K1 - scaled), a, x);
            a4.take(p.chi + 1e-10 - j.schwarzian, a, x);
        }
    }
    rep.checks.push_back(finish("A2", a2));
    rep.checks.push_back(finish("A3", a3, s > 1, s > 1 ? "" : "requires s > 1: f' does not vanish at 0"));
    rep.checks.push_back(finish("A4", a4, p.chi < 0, p.chi < 0 ? "" : "requires chi < 0"));

    {
        // the jet must move affinely in a with slope d/da of the jet
        Worst w;
        for (size_t i = 0; i + 1 < as.size(); ++i) {
            const double da = as[i + 1] - as[i];
            for (double x : xs) {
                if (std::fabs(x) < 0.05) continue;
                const double u = std::fabs(x);
                const int sg = x > 0 ? 1 : -1;
                const MapJet j0 = jet_at(p, as[i], u, sg);
                const MapJet j1 = jet_at(p, as[i + 1], u, sg);
                const MapJet unit = jet_at(p, 1.0, u, sg);  // (2 - a) = 1
                const double diffs[4] = {j1.f - j0.f, j1.df_dx - j0.df_dx, j1.d2f_dx2 - j0.d2f_dx2,
                                         j1.d3f_dx3 - j0.d3f_dx3};
                const double slopes[4] = {j0.df_da, -unit.df_dx, -unit.d2f_dx2, -unit.d3f_dx3};
                for (int k = 0; k < 4; ++k) {
                    const double pred = slopes[k] * da;
                    if (pred == 0 && diffs[k] == 0) continue;
                    const double dev = std::fabs(diffs[k] - pred) / std::max(std::fabs(pred), 1e-300);
                    w.take(1e-9 - dev, as[i], x);
                }
            }
        }
        rep.checks.push_back(finish("A5", w));
    }
    {
        Worst w;
        const double h = 1e-6;
        for (double a : as) {
            for (double x : {-1.0, 1.0}) {
                const MapJet j = jet_at(p, a, 1.0, x > 0 ? 1 : -1);
                w.take(1e-12 - std::fabs(std::fabs(j.df_da) - 1.0), a, x);
                const double lo = std::max(0.0, a - h), hi = std::min(p.a_max, a + h);
                const double fd = (map_value(s, hi, x) - map_value(s, lo, x)) / (hi - lo);
                w.take(1e-6 - std::fabs(std::fabs(fd) - 1.0), a, x);
            }
        }
        rep.checks.push_back(finish("A6", w));
    }
    {
        Worst w;
        for (double a : as)
            for (double x : xs)
                if (x > 0) w.take(1e-14 - std::fabs(map_value(s, a, x) + map_value(s, a, -x)), a, x);
        rep.checks.push_back(finish("symmetry", w));
    }
    return rep;
}

double map_zero(const FamilyParams& p, double a, Side side)
{
    check_parameter(p, a);
    auto g = [&](double x) { return map_value(p.s, a, x); };
    if (!(g(1.0) > 0)) throw NumericalError("map_zero: no sign change on (0, 1]");
    double r = detail::bisect_increasing(g, 0.0, 1.0, 0.0);
    return side == Side::plus ? r : -r;
}

std::string to_record(const FamilyParams& p)
{
    KeyValues kv;
    kv.set("s", fmt_num(p.s));
    kv.set("a_max", fmt_num(p.a_max));
    kv.set("K0", fmt_num(p.K0));
    kv.set("K1", fmt_num(p.K1));
    kv.set("chi", fmt_num(p.chi));
    return kv.dump();
}

FamilyParams family_from_record(const std::string& text)
{
    KeyValues kv = KeyValues::parse(text);
    FamilyParams p = FamilyParams::for_exponent(kv.number("s", 1.5), kv.number("a_max", 0.4));
    p.K0 = kv.number("K0", p.K0);
    p.K1 = kv.number("K1", p.K1);
    p.chi = kv.number("chi", p.chi);
    return p;
}

}  // namespace rovella
