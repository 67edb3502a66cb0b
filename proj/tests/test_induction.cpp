#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "rovella/errors.hpp"
#include "rovella/induction.hpp"

using namespace rovella;

namespace {

ConstantsBundle desk() { return derive_constants(1.5, 3, 0.03, 0.05, 1.5); }

double a3()
{
    return oracle::bisect([](double a) { return (2 - a) * std::pow(1 - a, 1.5) - 1; }, 0.25, 0.35);
}

}  // namespace

TEST_CASE("return list shares history")
{
    ReturnList base;
    base.push({10, 3, 1, true, false, 4});
    ReturnList left = base, right = base;
    left.push({15, -4, 2, true, false, 6});
    right.push({12, 2, 4, true, true, 0});
    CHECK(base.size() == 1);
    CHECK(left.size() == 2);
    CHECK(right.size() == 2);
    CHECK(left.has_deep());
    CHECK(left.to_vector().front().gamma == 10);
    CHECK(left.back().gamma == 15);
    CHECK(right.back().escape);
}

TEST_CASE("critical map inversion")
{
    FamilyParams fp;
    const double a = invert_critical_map(fp, 0.25, 0.35, 3, 0.0);
    CHECK(a == doctest::Approx(a3()).epsilon(1e-11));
    const double t = invert_critical_map(fp, 0.25, 0.35, 3, 0.05);
    CHECK(oracle::xi(1.5, t, 3) == doctest::Approx(0.05).epsilon(1e-10));
    CHECK_THROWS_AS(invert_critical_map(fp, 0.25, 0.35, 3, 5.0), NotFound);
    CHECK_THROWS_AS(invert_critical_map(fp, 0.3, 0.3, 3, 0.0), DomainError);
}

TEST_CASE("deviation at a = 0")
{
    FamilyParams fp;
    const Deviation d = deviation_statistic(fp, 0, 25, desk());
    CHECK(d.T == 0);
    CHECK(d.F == 25);
    CHECK(d.inequality_holds);
}

TEST_CASE("refine step around a super-attracting parameter")
{
    FamilyParams fp;
    ConstantsBundle b = desk();
    const double as = a3();
    Generation prev;
    prev.n = 2;
    ParamInterval w;
    w.lo = as - 0.04;
    w.hi = as + 0.04;
    w.generation = 2;
    w.xlo = oracle::xi(1.5, w.lo, 2);
    w.xhi = oracle::xi(1.5, w.hi, 2);
    prev.intervals = {w};
    prev.count = 1;
    prev.survivor_measure = w.length();
    long next_id = 1;
    const RefineResult r = refine_step(fp, prev, b, next_id);
    CHECK(r.next.n == 3);
    CHECK(r.new_escapes.size() == 2);
    CHECK(r.next.escapes == 2);
    CHECK(r.next.essential == 1);
    REQUIRE(r.next.intervals.size() == 2);
    CHECK(r.next.survivor_measure + r.next.excluded_measure == doctest::Approx(w.length()).epsilon(1e-14));
    // the gap is the parameter set with |xi_3| < delta
    const double glo = r.next.intervals[0].hi, ghi = r.next.intervals[1].lo;
    CHECK(std::fabs(std::fabs(oracle::xi(1.5, glo, 3)) - b.delta) < 1e-12);
    CHECK(std::fabs(std::fabs(oracle::xi(1.5, ghi, 3)) - b.delta) < 1e-12);
    CHECK(glo < as);
    CHECK(as < ghi);
    for (const auto& iv : r.next.intervals) {
        CHECK(iv.returns.back().escape);
        CHECK(std::fabs(iv.xlo - oracle::xi(1.5, iv.lo, 3)) < 1e-12);
        CHECK(std::fabs(iv.xhi - oracle::xi(1.5, iv.hi, 3)) < 1e-12);
    }
    b.N1 = 9;
    const Generation same = apply_FA_filter(fp, r.next, b);
    CHECK(same.count == r.next.count);
    CHECK(same.survivor_measure == r.next.survivor_measure);
}

TEST_CASE("induction before the first refinement is trivial")
{
    FamilyParams fp;
    const InductionRun run = run_induction(fp, desk(), 8);
    CHECK(run.bundle.N1 == 9);
    CHECK(run.bundle.a0 == doctest::Approx(4.1535e-4).epsilon(1e-3));
    REQUIRE(run.generations.size() == 8);
    CHECK(run.last().survivor_measure == doctest::Approx(run.bundle.a0).epsilon(1e-15));
    CHECK(run.checks.empty());
    CHECK(run.escapes_total == 0);
}

TEST_CASE("short induction run")
{
    FamilyParams fp;
    const InductionRun run = run_induction(fp, desk(), 16);
    const Generation& g = run.last();
    CHECK(g.n == 16);
    CHECK_FALSE(run.terminated_early);
    CHECK(g.survivor_measure > 0);
    CHECK(g.survivor_measure < run.bundle.a0);
    CHECK(run.max_bookkeeping_error <= 1e-15);
    CHECK(g.survivor_measure + run.cumulative_excluded == doctest::Approx(run.bundle.a0).epsilon(1e-12));
    for (const auto& c : run.checks) CHECK_MESSAGE(c.pass, c.id << " at n = " << c.n);
    double last = 0;
    for (const auto& iv : g.intervals) {
        CHECK(iv.lo >= last);
        last = iv.hi;
        CHECK(iv.hi <= run.bundle.a0);
    }
    // survivors at the midpoint keep exponential growth
    const ParamInterval& iv = g.intervals[g.intervals.size() / 2];
    const CriticalOrbit o = critical_orbit(fp, (iv.lo + iv.hi) / 2, g.n);
    CHECK(check_growth(o, run.bundle.lambda, run.bundle.eta1, run.bundle.N).passes_EG);
    CHECK_THROWS_AS(run_induction(fp, desk(), 12, {std::make_pair(0.0, 1.0)}), ParameterRangeError);
}
