#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "rovella/errors.hpp"
#include "rovella/family.hpp"

using namespace rovella;

TEST_CASE("fixed points and the value at 0+")
{
    FamilyParams fp;
    CHECK(map_eval(fp, 0, 1.0).f == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(map_eval(fp, 0, -1.0).f == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(map_eval(fp, 0, 1e-12).f == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(map_eval(fp, 0.2, 0.0, Side::plus).f == -1.0);
}

TEST_CASE("jet at x = 0.5 and schwarzian at 1")
{
    FamilyParams fp;
    const MapJet j = map_eval(fp, 0, 0.5);
    CHECK(j.f == doctest::Approx(2 * std::pow(0.5, 1.5) - 1).epsilon(1e-14));
    CHECK(j.f == doctest::Approx(-0.292893).epsilon(1e-6));
    CHECK(j.df_dx == doctest::Approx(3 * std::sqrt(0.5)).epsilon(1e-14));
    CHECK(map_eval(fp, 0, 1.0).schwarzian == doctest::Approx(-0.625).epsilon(1e-14));
}

TEST_CASE("x = 0 without side and parameter range")
{
    FamilyParams fp;
    CHECK_THROWS_AS(map_eval(fp, 0.1, 0.0), DomainError);
    CHECK_THROWS_AS(map_eval(fp, 0.5, 0.3), ParameterRangeError);
    CHECK_THROWS_AS(map_eval(fp, -0.01, 0.3), ParameterRangeError);
}

TEST_CASE("jet against direct derivatives")
{
    FamilyParams fp;
    const double s = fp.s;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ua(0, fp.a_max), ux(-0.95, 0.95);
    for (int i = 0; i < 500; ++i) {
        const double a = ua(rng), x = ux(rng);
        if (std::fabs(x) < 0.05) continue;
        const MapJet j = map_eval(fp, a, x);
        const double u = std::fabs(x);
        const double d1 = (2 - a) * s * std::pow(u, s - 1);
        const double d2 = (x > 0 ? 1 : -1) * (2 - a) * s * (s - 1) * std::pow(u, s - 2);
        const double d3 = (2 - a) * s * (s - 1) * (s - 2) * std::pow(u, s - 3);
        const double S = d3 / d1 - 1.5 * (d2 / d1) * (d2 / d1);
        CHECK(j.f == doctest::Approx(oracle::f(s, a, x)).epsilon(1e-13));
        CHECK(j.df_dx == doctest::Approx(d1).epsilon(1e-12));
        CHECK(j.d2f_dx2 == doctest::Approx(d2).epsilon(1e-12));
        CHECK(j.schwarzian == doctest::Approx(S).epsilon(1e-10));
        CHECK(j.schwarzian <= fp.chi + 1e-10);
        const double h = 1e-6;
        const double fd = (oracle::f(s, a, x + h) - oracle::f(s, a, x - h)) / (2 * h);
        CHECK(j.df_dx == doctest::Approx(fd).epsilon(1e-6));
        const double fa = (oracle::f(s, a + h, x) - oracle::f(s, a - h, x)) / (2 * h);
        CHECK(j.df_da == doctest::Approx(fa).epsilon(1e-6));
    }
}

TEST_CASE("derivative bounds and symmetry on a sweep")
{
    FamilyParams fp;
    for (int ia = 0; ia <= 10; ++ia) {
        const double a = fp.a_max * ia / 10;
        for (int ix = 1; ix <= 200; ++ix) {
            const double x = ix / 200.0;
            const double d = map_eval(fp, a, x).df_dx;
            const double u = std::pow(x, fp.s - 1);
            CHECK(d >= fp.K0 * u * (1 - 1e-12));
            CHECK(d <= fp.K1 * u * (1 + 1e-12));
            CHECK(std::fabs(map_eval(fp, a, x).f + map_eval(fp, a, -x).f) <= 1e-14);
            if (ix > 1) CHECK(map_eval(fp, a, x).f > map_eval(fp, a, x - 1 / 200.0).f);
        }
    }
}

TEST_CASE("axiom suite")
{
    FamilyParams fp;
    const AxiomReport rep = verify_axioms(fp, {2000, 10});
    CHECK(rep.all_passed());
    CHECK(rep.worst_margin() > 0);
    for (const char* id : {"A0", "A1", "A2", "A3", "A4", "A5", "A6", "symmetry"}) CHECK(rep.passed(id));

    FamilyParams flat = FamilyParams::for_exponent(1.0);
    const AxiomReport bad = verify_axioms(flat, {500, 5});
    CHECK_FALSE(bad.passed("A3"));
    CHECK_FALSE(bad.passed("A4"));
}

TEST_CASE("zeros of the map")
{
    FamilyParams fp;
    const double z0 = oracle::bisect([](double x) { return 2 * std::pow(x, 1.5) - 1; }, 0, 1);
    CHECK(map_zero(fp, 0, Side::plus) == doctest::Approx(z0).epsilon(1e-13));
    CHECK(z0 == doctest::Approx(0.629961).epsilon(1e-6));
    CHECK(map_zero(fp, 0, Side::minus) == doctest::Approx(-z0).epsilon(1e-13));
    const double z2 = oracle::bisect([](double x) { return 1.8 * std::pow(x, 1.5) - 1; }, 0, 1);
    CHECK(map_zero(fp, 0.2, Side::plus) == doctest::Approx(z2).epsilon(1e-13));
    CHECK(std::fabs(map_eval(fp, 0.2, map_zero(fp, 0.2, Side::plus)).f) <= 1e-13);
}

TEST_CASE("flat record round trip")
{
    FamilyParams fp = FamilyParams::for_exponent(1.7, 0.3);
    const FamilyParams back = family_from_record(to_record(fp));
    CHECK(back.s == fp.s);
    CHECK(back.a_max == fp.a_max);
    CHECK(back.K0 == fp.K0);
    CHECK(back.K1 == fp.K1);
    CHECK(back.chi == fp.chi);
}
