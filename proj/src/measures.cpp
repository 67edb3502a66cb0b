#include "rovella/measures.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "rovella/config.hpp"
#include "rovella/errors.hpp"

namespace rovella {

namespace {

std::vector<double> uniform_edges(int bins)
{
    std::vector<double> e(bins + 1);
    for (int i = 0; i <= bins; ++i) e[i] = -1.0 + 2.0 * i / bins;
    e.back() = 1.0;
    return e;
}

int bin_of(double x, int bins)
{
    const int i = static_cast<int>(std::floor((x + 1.0) * 0.5 * bins));
    return std::clamp(i, 0, bins - 1);
}

// Neumaier summation
struct Sum {
    double s = 0, c = 0;
    void add(double v)
    {
        const double t = s + v;
        c += std::fabs(s) >= std::fabs(v) ? (s - t) + v : (v - t) + s;
        s = t;
    }
    double value() const { return s + c; }
};

void check_normalised(const EmpiricalMeasure& mu, const char* who)
{
    const double t = mu.total();
    if (!(std::fabs(t - 1.0) <= 1e-12)) throw DomainError(fmt::format("{}: measure has mass {:.17g}, not 1", who, t));
    for (double m : mu.mass)
        if (m < 0) throw DomainError(fmt::format("{}: negative bin mass", who));
    for (const Atom& at : mu.atoms)
        if (at.w < 0 || at.x < -1 || at.x > 1) throw DomainError(fmt::format("{}: atom outside [-1, 1]", who));
    if (mu.edges.size() != (mu.mass.empty() ? 0 : mu.mass.size() + 1))
        throw DomainError(fmt::format("{}: edges do not match the bins", who));
}

// distribution function with the left/right limits at a point
class Cdf {
public:
    explicit Cdf(const EmpiricalMeasure& mu) : mu_(mu)
    {
        below_.assign(mu.mass.size() + 1, 0.0);
        Sum s;
        for (std::size_t i = 0; i < mu.mass.size(); ++i) {
            s.add(mu.mass[i]);
            below_[i + 1] = s.value();
        }
        atoms_ = mu.atoms;
        std::sort(atoms_.begin(), atoms_.end(), [](const Atom& a, const Atom& b) { return a.x < b.x; });
        acc_.assign(atoms_.size() + 1, 0.0);
        Sum t;
        for (std::size_t i = 0; i < atoms_.size(); ++i) {
            t.add(atoms_[i].w);
            acc_[i + 1] = t.value();
        }
    }

    double left(double x) const { return hist(x) + atoms_before(x, false); }
    double right(double x) const { return hist(x) + atoms_before(x, true); }

private:
    double hist(double x) const
    {
        const auto& e = mu_.edges;
        if (e.empty() || x <= e.front()) return 0;
        if (x >= e.back()) return below_.back();
        const std::size_t j = std::upper_bound(e.begin(), e.end(), x) - e.begin() - 1;
        return below_[j] + mu_.mass[j] * (x - e[j]) / (e[j + 1] - e[j]);
    }
    double atoms_before(double x, bool inclusive) const
    {
        auto cmp = [](const Atom& a, double v) { return a.x < v; };
        auto it = inclusive ? std::upper_bound(atoms_.begin(), atoms_.end(), x,
                                               [](double v, const Atom& a) { return v < a.x; })
                            : std::lower_bound(atoms_.begin(), atoms_.end(), x, cmp);
        return acc_[it - atoms_.begin()];
    }

    const EmpiricalMeasure& mu_;
    std::vector<double> below_;
    std::vector<Atom> atoms_;
    std::vector<double> acc_;
};

// integral of |linear| from d0 to d1 over a segment of length h
double abs_linear(double d0, double d1, double h)
{
    if ((d0 >= 0) == (d1 >= 0) || d0 == 0 || d1 == 0) return h * std::fabs(d0 + d1) / 2;
    return h * (d0 * d0 + d1 * d1) / (2 * (std::fabs(d0) + std::fabs(d1)));
}

}  // namespace

double EmpiricalMeasure::total() const
{
    Sum s;
    for (double m : mass) s.add(m);
    for (const Atom& a : atoms) s.add(a.w);
    return s.value();
}

int EmpiricalMeasure::occupied() const
{
    return static_cast<int>(std::count_if(mass.begin(), mass.end(), [](double m) { return m > 0; }));
}

EmpiricalMeasure EmpiricalMeasure::atomic(std::vector<Atom> atoms)
{
    EmpiricalMeasure mu;
    mu.atoms = std::move(atoms);
    return mu;
}

EmpiricalMeasure EmpiricalMeasure::dirac(double x) { return atomic({{x, 1.0}}); }

EmpiricalMeasure EmpiricalMeasure::uniform_atoms(const std::vector<double>& points)
{
    if (points.empty()) throw DomainError("uniform_atoms: no points");
    EmpiricalMeasure mu;
    for (double x : points) mu.atoms.push_back({x, 1.0 / static_cast<double>(points.size())});
    return mu;
}

EmpiricalMeasure EmpiricalMeasure::histogram(const std::vector<double>& points, int bins)
{
    if (points.empty()) throw DomainError("histogram: no points");
    if (bins < 1) throw DomainError("histogram: bins >= 1");
    EmpiricalMeasure mu;
    mu.edges = uniform_edges(bins);
    std::vector<long> count(bins, 0);
    for (double x : points) ++count[bin_of(x, bins)];
    mu.mass.resize(bins);
    for (int i = 0; i < bins; ++i) mu.mass[i] = static_cast<double>(count[i]) / static_cast<double>(points.size());
    return mu;
}

Observable Observable::indicator(double lo, double hi)
{
    if (!(lo < hi)) throw DomainError("indicator: lo < hi");
    return {Kind::indicator, lo, hi};
}

Observable Observable::tent(double centre, double width)
{
    if (!(width > 0)) throw DomainError("tent: width > 0");
    return {Kind::tent, centre, width};
}

double Observable::operator()(double x) const
{
    switch (kind) {
    case Kind::identity: return x;
    case Kind::abs: return std::fabs(x);
    case Kind::dist_to: return std::fabs(x - p);
    case Kind::indicator: return x >= p && x <= q ? 1.0 : 0.0;
    case Kind::tent: return std::max(0.0, 1.0 - std::fabs(x - p) / q);
    }
    return 0;
}

double Observable::lipschitz() const
{
    switch (kind) {
    case Kind::identity:
    case Kind::abs:
    case Kind::dist_to: return 1.0;
    case Kind::indicator: return std::numeric_limits<double>::infinity();
    case Kind::tent: return 1.0 / q;
    }
    return 0;
}

std::string Observable::name() const
{
    switch (kind) {
    case Kind::identity: return "identity";
    case Kind::abs: return "abs";
    case Kind::dist_to: return fmt::format("dist_to({})", fmt_num(p));
    case Kind::indicator: return fmt::format("indicator({},{})", fmt_num(p), fmt_num(q));
    case Kind::tent: return fmt::format("tent({},{})", fmt_num(p), fmt_num(q));
    }
    return "?";
}

std::vector<Observable> observable_registry()
{
    return {Observable::identity(),     Observable::absolute(),      Observable::dist_to(0.5),
            Observable::dist_to(-0.25), Observable::tent(0.43, 0.2), Observable::tent(-0.43, 0.2),
            Observable::tent(0.0, 0.5)};
}

double integrate(const EmpiricalMeasure& mu, const Observable& phi)
{
    // 5-point Gauss-Legendre inside each bin
    static const double node[5] = {0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640,
                                   0.9061798459386640};
    static const double weight[5] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                                     0.2369268850561891, 0.2369268850561891};
    Sum s;
    for (std::size_t i = 0; i < mu.mass.size(); ++i) {
        if (mu.mass[i] == 0) continue;
        const double c = (mu.edges[i] + mu.edges[i + 1]) / 2, h = (mu.edges[i + 1] - mu.edges[i]) / 2;
        double v = 0;
        for (int j = 0; j < 5; ++j) v += weight[j] * phi(c + h * node[j]);
        s.add(mu.mass[i] * v / 2);
    }
    for (const Atom& a : mu.atoms) s.add(a.w * phi(a.x));
    return s.value();
}

EmpiricalMeasure empirical_measure(const FamilyParams& fp, double a, double x0, const MeasureOptions& opt)
{
    if (!(opt.n > opt.burn && opt.burn >= 0)) throw DomainError("empirical_measure: n > burn >= 0");
    if (opt.bins < 1) throw DomainError("empirical_measure: bins >= 1");
    if (!(x0 >= -1 && x0 <= 1)) throw DomainError("empirical_measure: x0 outside [-1, 1]");
    const double s = fp.s;
    double x = x0;
    for (long i = 0; i < opt.burn; ++i) x = map_value(s, a, x);

    // exactly periodic orbit: atoms instead of a histogram
    const long horizon = std::min<long>(opt.max_period, opt.n - opt.burn);
    double y = x;
    for (long p = 1; p <= horizon; ++p) {
        y = map_value(s, a, y);
        if (std::fabs(y - x) <= opt.closure) {
            std::vector<double> pts;
            double z = x;
            for (long i = 0; i < p; ++i) {
                pts.push_back(z);
                z = map_value(s, a, z);
            }
            EmpiricalMeasure mu = EmpiricalMeasure::uniform_atoms(pts);
            mu.period = static_cast<int>(p);
            return mu;
        }
    }

    EmpiricalMeasure mu;
    mu.edges = uniform_edges(opt.bins);
    std::vector<long> count(opt.bins, 0);
    for (long i = opt.burn; i < opt.n; ++i) {
        ++count[bin_of(x, opt.bins)];
        x = map_value(s, a, x);
    }
    const double total = static_cast<double>(opt.n - opt.burn);
    mu.mass.resize(opt.bins);
    for (int i = 0; i < opt.bins; ++i) mu.mass[i] = static_cast<double>(count[i]) / total;
    return mu;
}

double birkhoff_average(const FamilyParams& fp, double a, double x0, const Observable& phi, long n)
{
    if (n < 1) throw DomainError("birkhoff_average: n >= 1");
    Sum s;
    double x = x0;
    for (long i = 0; i < n; ++i) {
        s.add(phi(x));
        x = map_value(fp.s, a, x);
    }
    return s.value() / static_cast<double>(n);
}

double wasserstein1(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu)
{
    check_normalised(mu, "wasserstein1");
    check_normalised(nu, "wasserstein1");
    std::vector<double> pts{-1.0, 1.0};
    for (const auto* m : {&mu, &nu}) {
        pts.insert(pts.end(), m->edges.begin(), m->edges.end());
        for (const Atom& a : m->atoms) pts.push_back(a.x);
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    const Cdf F(mu), G(nu);
    // between breakpoints both distribution functions are linear
    Sum w;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double x0 = pts[i], x1 = pts[i + 1];
        const double d0 = F.right(x0) - G.right(x0);
        const double d1 = F.left(x1) - G.left(x1);
        w.add(abs_linear(d0, d1, x1 - x0));
    }
    return w.value();
}

EmpiricalMeasure pushforward(const FamilyParams& fp, double a, const EmpiricalMeasure& mu, int sub)
{
    if (sub < 1) throw DomainError("pushforward: sub >= 1");
    EmpiricalMeasure out;
    out.edges = mu.edges;
    out.mass.assign(mu.mass.size(), 0.0);
    const int bins = mu.bins();
    for (int i = 0; i < bins; ++i) {
        if (mu.mass[i] == 0) continue;
        const double lo = mu.edges[i], h = mu.edges[i + 1] - lo;
        for (int j = 0; j < sub; ++j) {
            const double y = map_value(fp.s, a, lo + h * (j + 0.5) / sub);
            const double x = (y + 1.0) * 0.5 * bins;
            out.mass[std::clamp(static_cast<int>(std::floor(x)), 0, bins - 1)] += mu.mass[i] / sub;
        }
    }
    for (const Atom& at : mu.atoms) out.atoms.push_back({map_value(fp.s, a, at.x), at.w});
    out.period = mu.period;
    return out;
}

double reference_parameter(const Generation& gen)
{
    if (gen.intervals.empty()) throw NotFound("reference_parameter: no survivors");
    const auto it = std::max_element(gen.intervals.begin(), gen.intervals.end(),
                                     [](const ParamInterval& l, const ParamInterval& r) { return l.length() < r.length(); });
    return (it->lo + it->hi) / 2;
}

InstabilityTable instability_table(const FamilyParams& fp, const PreperiodicHit& pre, const SuperSequence& seq,
                                   double reference_a, double x0, const MeasureOptions& opt)
{
    if (seq.hits.empty()) throw NotFound("instability_table: empty super-attractor sequence");
    InstabilityTable t;
    t.a_pre = pre.a;
    t.reference_a = reference_a;
    const EmpiricalMeasure target = EmpiricalMeasure::atomic({{pre.y_minus, 0.5}, {pre.y_plus, 0.5}});
    const EmpiricalMeasure acim = empirical_measure(fp, reference_a, x0, opt);
    t.w1_target_acim = wasserstein1(target, acim);
    for (const auto& h : seq.hits) {
        if (h.offset == 0 && h.a == pre.a) throw DomainError("instability_table: sequence contains a_pre");
        const EmpiricalMeasure mu = EmpiricalMeasure::uniform_atoms(h.orbit);
        InstabilityRow r;
        r.a_text = h.a_text.empty() ? fmt_num(h.a) : h.a_text;
        r.a = h.a;
        r.offset = h.offset;
        r.period = h.period;
        r.w1_atomic = wasserstein1(mu, target);
        r.w1_acim = wasserstein1(mu, acim);
        t.rows.push_back(std::move(r));
    }
    return t;
}

void write_instability_csv(std::ostream& out, const InstabilityTable& table)
{
    out << "a_n,period,W1_to_atomic,W1_to_acim\n";
    for (const auto& r : table.rows)
        out << r.a_text << ',' << r.period << ',' << fmt_num(r.w1_atomic) << ',' << fmt_num(r.w1_acim) << '\n';
}

void write_measure_csv(std::ostream& out, const EmpiricalMeasure& mu)
{
    out << "lo,hi,mass\n";
    for (int i = 0; i < mu.bins(); ++i)
        out << fmt_num(mu.edges[i]) << ',' << fmt_num(mu.edges[i + 1]) << ',' << fmt_num(mu.mass[i]) << '\n';
    for (const Atom& a : mu.atoms) out << fmt_num(a.x) << ',' << fmt_num(a.x) << ',' << fmt_num(a.w) << '\n';
}

}  // namespace rovella
