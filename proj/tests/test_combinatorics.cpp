#include <cmath>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "rovella/combinatorics.hpp"
#include "rovella/errors.hpp"

using namespace rovella;

TEST_CASE("desk constants")
{
    const ConstantsBundle b = derive_constants(1.5, 3, 0.03, 0.05, 1.5);
    const double cp = 1 - (2 * 0.03 + 0.5 * 0.03 / std::log(1.5));
    const double lam = std::pow(1.5, cp);
    CHECK(b.c_prime == doctest::Approx(cp).epsilon(1e-14));
    CHECK(b.c_prime == doctest::Approx(0.903).epsilon(1e-3));
    CHECK(b.lambda == doctest::Approx(lam).epsilon(1e-14));
    CHECK(b.lambda == doctest::Approx(1.442).epsilon(1e-3));
    CHECK(b.delta == doctest::Approx(std::exp(-3.0)).epsilon(1e-15));
    const double den = 0.05 + std::log(lam);
    CHECK(b.kappa1 == doctest::Approx(0.05 * 3.5 / den).epsilon(1e-13));
    CHECK(b.kappa2 == doctest::Approx(0.05 * 4.5 / den).epsilon(1e-13));
    CHECK(b.kappa == doctest::Approx(0.05 * 6.5 / den).epsilon(1e-13));
    CHECK(b.kappa1 < b.kappa2);
    CHECK(b.kappa2 < b.kappa);
    CHECK(b.kappa < 1);
    CHECK(b.exclusion_level(30) == 3);
    CHECK(b.exclusion_level(200) == 6);
}

TEST_CASE("constraint violations are named")
{
    CHECK_THROWS_AS(derive_constants(1.5, 3, 0, 0, 1.5), ConstraintError);
    try {
        derive_constants(1.5, 3, 0.03, 0.2, 1.5);
        FAIL("expected a constraint error");
    } catch (const ConstraintError& e) {
        CHECK(e.inequality.find("(s+5)") != std::string::npos);
    }
    CHECK_THROWS_AS(derive_constants(1.0, 3, 0.03, 0.05, 1.5), ConstraintError);
    CHECK_THROWS_AS(derive_constants(1.5, 1, 0.03, 0.05, 1.5), ConstraintError);
    CHECK_THROWS_AS(derive_constants(1.5, 3, 0.03, 0.05, 1.0), ConstraintError);
}

TEST_CASE("partition cells")
{
    const ConstantsBundle b = derive_constants(1.5, 3, 0.03, 0.05, 1.5);
    const double x = std::exp(-3.5);
    const Location l = locate(x, b);
    REQUIRE(l.address);
    CHECK(l.address->m == 3);
    CHECK(l.address->lo <= x);
    CHECK(x < l.address->hi);
    CHECK(l.address->lo >= std::exp(-4.0) * (1 - 1e-12));
    CHECK(l.address->hi <= std::exp(-3.0) * (1 + 1e-12));
    CHECK(l.address->hi - l.address->lo == doctest::Approx((std::exp(-3.0) - std::exp(-4.0)) / 9).epsilon(1e-12));
    CHECK(l.address->plus_lo < l.address->lo);
    CHECK(l.address->plus_hi > l.address->hi);

    const Location r = locate(-x, b);
    REQUIRE(r.address);
    CHECK(r.address->m == -3);
    CHECK(r.address->k == l.address->k);
    CHECK(r.address->lo == doctest::Approx(-l.address->hi));

    CHECK(locate(0.9, b).outside());
    CHECK(locate(0.0, b).critical);
    const Location e = locate(std::exp(-2.5), b);
    REQUIRE(e.address);
    CHECK(e.address->m == 2);

    // cells of a level tile it
    for (int m = 2; m <= 6; ++m) {
        double total = 0;
        for (int k = 1; k <= m * m; ++k) {
            const IntervalAddress c = cell(m, k);
            total += c.hi - c.lo;
            if (k > 1) CHECK(cell(m, k - 1).lo == doctest::Approx(c.hi).epsilon(1e-14));
        }
        CHECK(total == doctest::Approx(std::exp(-double(m)) - std::exp(-double(m + 1))).epsilon(1e-12));
    }
}

TEST_CASE("bound period against the binding condition")
{
    FamilyParams fp;
    const ConstantsBundle b = derive_constants(1.5, 3, 0.03, 0.05, 1.5);
    const double a = 3e-4;
    for (int m = 3; m <= 6; ++m) {
        for (double t : {0.1, 0.5, 0.9}) {
            const double x = std::exp(-(m + t));
            const BoundPeriod bp = bound_period(fp, b, a, m, x);
            // reference: first j where |f^j(x) - xi_j| > e^{-beta j}
            double y = x;
            int p = 0;
            for (int j = 1; j < 200; ++j) {
                y = oracle::f(fp.s, a, y);
                if (std::fabs(y - oracle::xi(fp.s, a, j)) > std::exp(-b.beta * j)) break;
                p = j;
            }
            CHECK(bp.p == p);
            CHECK(bp.p >= 1);
            for (int j = 1; j <= bp.p; ++j) CHECK(bp.gaps[j - 1] <= std::exp(-b.beta * j));
            CHECK(bp.p <= b.bound_period_limit(m));
        }
        const int pm = bound_period_at(fp, b, a, m);
        CHECK(pm <= b.bound_period_limit(m));
        CHECK(bound_period_at(fp, b, a, -m) == pm);
        CHECK(bound_period_interval(fp, b, a, a, m) == pm);
        const int pw = bound_period_interval(fp, b, 2e-4, 4e-4, m);
        for (int i = 0; i <= 8; ++i) CHECK(pw <= bound_period_at(fp, b, 2e-4 + 2e-4 * i / 8, m));
    }
    CHECK_THROWS_AS(bound_period(fp, b, a, 3, 0.5), DomainError);
}

TEST_CASE("iterate derivative")
{
    FamilyParams fp;
    CHECK(iterate_derivative(fp, 0, -1.0, 4) == doctest::Approx(81.0).epsilon(1e-14));
    double d = 1, x = 0.37;
    for (int j = 0; j < 6; ++j) {
        d *= 1.5 * (2 - 0.1) * std::sqrt(std::fabs(x));
        x = oracle::f(1.5, 0.1, x);
    }
    CHECK(iterate_derivative(fp, 0.1, 0.37, 6) == doctest::Approx(d).epsilon(1e-12));
}

TEST_CASE("itinerary at a = 0 is free")
{
    FamilyParams fp;
    const ConstantsBundle b = derive_constants(1.5, 3, 0.03, 0.05, 1.5);
    const Itinerary it = itinerary(fp, 0, 20, b);
    CHECK(it.F == 20);
    CHECK(it.passes_FA);
    CHECK(it.T == 0);
    CHECK(it.covered_length() == 20);
    for (const auto& s : it.segments) CHECK(s.kind == SegmentKind::free);
    std::ostringstream os;
    write_itinerary_csv(os, it);
    CHECK(os.str().rfind("start,length,kind,m,k,p", 0) == 0);
}

TEST_CASE("itinerary tiles and stops at a critical hit")
{
    FamilyParams fp;
    const ConstantsBundle b = derive_constants(1.5, 3, 0.03, 0.05, 1.5);
    for (double a : {1e-4, 2.5e-4, 3.7e-4, 0.01, 0.1}) {
        const Itinerary it = itinerary(fp, a, 30, b);
        CHECK(it.covered_length() == it.n);
        int F = 0, pos = 1;
        for (const auto& s : it.segments) {
            CHECK(s.start == pos);
            pos += s.length;
            if (s.kind == SegmentKind::free) F += s.length;
        }
        CHECK(it.F == free_time(it.segments));
        CHECK(F <= it.F);
    }
    const double a3 = oracle::bisect([](double a) { return (2 - a) * std::pow(1 - a, 1.5) - 1; }, 0.25, 0.35);
    const Itinerary hit = itinerary(fp, a3, 10, b);
    REQUIRE(hit.truncated_at);
    CHECK(*hit.truncated_at <= 3);
}
