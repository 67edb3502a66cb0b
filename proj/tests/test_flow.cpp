#include <cmath>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "rovella/errors.hpp"
#include "rovella/flow.hpp"

using namespace rovella;

namespace {

// midpoint rule over the passage p(t) = (x e^t, y e^{-5t}, e^{-1.5t})
template <class F>
double passage_integral(double x, double y, double t1, F&& g, int steps = 2000000)
{
    const double h = t1 / steps;
    double s = 0;
    for (int i = 0; i < steps; ++i) {
        const double t = h * (i + 0.5);
        s += g(x * std::exp(t), y * std::exp(-5 * t), std::exp(-1.5 * t)) * h;
    }
    return s;
}

}  // namespace

TEST_CASE("flow parameters")
{
    FamilyParams fp;
    FlowParams fl;
    CHECK(fl.r() == 5);
    CHECK(fl.s() == 1.5);
    CHECK(fl.violations(fp).empty());
    fl.lambda2 = -3;
    CHECK_FALSE(fl.violations(fp).empty());
    CHECK_THROWS_AS(fl.validate(fp), ParameterRangeError);
    FlowParams g;
    g.lambda3 = -2;
    CHECK_THROWS_AS(g.validate(fp), ParameterRangeError);
    FlowParams h;
    h.rho_g = 1.5;
    CHECK_THROWS_AS(h.validate(fp), ParameterRangeError);
}

TEST_CASE("return map and roof")
{
    FamilyParams fp;
    FlowParams fl;
    const double a = 0.1;
    const SectionPoint q = poincare(fl, fp, a, {0.3, 0.2});
    CHECK(q.x == doctest::Approx(oracle::f(1.5, a, 0.3)).epsilon(1e-15));
    CHECK(q.y == doctest::Approx(0.5 + 0.25 * 0.2 * std::pow(0.3, 5)).epsilon(1e-15));
    const SectionPoint r = poincare(fl, fp, a, {-0.3, 0.2});
    CHECK(r.y == doctest::Approx(-0.5 + 0.25 * 0.2 * std::pow(0.3, 5)).epsilon(1e-15));
    CHECK(roof(fl, 0.3) == doctest::Approx(1 + std::log(1 / 0.3)));
    CHECK(std::isinf(roof(fl, 0.0)));
}

TEST_CASE("leaves contract at the exact rate")
{
    FamilyParams fp;
    FlowParams fl;
    const ContractionRecord c = leaf_contraction(fl, fp, 0.1, {0.6, 0.1}, {0.6, -0.3}, 5);
    REQUIRE(c.distances.size() == 6);
    CHECK(c.distances[0] == doctest::Approx(0.4));
    CHECK(c.distances[1] == doctest::Approx(0.4 * 0.25 * std::pow(0.6, 5)).epsilon(1e-12));
    double x = 0.6, d = 0.4;
    for (int i = 0; i < 5; ++i) {
        d *= 0.25 * std::pow(std::fabs(x), 5);
        x = oracle::f(1.5, 0.1, x);
    }
    CHECK(c.distances[5] == doctest::Approx(d).epsilon(1e-10));
    CHECK(c.max_step <= 0.25);
    CHECK(c.rate < 1);
    CHECK_THROWS_AS(leaf_contraction(fl, fp, 0.1, {0.6, 0.1}, {0.5, 0.1}, 5), DomainError);
}

TEST_CASE("averages over one passage")
{
    FamilyParams fp;
    FlowParams fl;
    const double x = 0.2, y = 0.7;
    const double t1 = std::log(1 / x);
    const FlowResult one = flow_average(fl, fp, 0.1, {x, y}, Observable3D::constant(1), t1);
    CHECK(one.average == doctest::Approx(1.0).epsilon(1e-14));
    const FlowResult z = flow_average(fl, fp, 0.1, {x, y}, Observable3D::coordinate(2), t1);
    CHECK(z.average * t1 == doctest::Approx((1 - std::pow(x, 1.5)) / 1.5).epsilon(1e-12));
    const FlowResult d = flow_average(fl, fp, 0.1, {x, y}, Observable3D::dist_to_origin_capped(), t1);
    const double ref = passage_integral(x, y, t1, [](double u, double v, double w) {
        return std::min(1.0, std::sqrt(u * u + v * v + w * w));
    });
    CHECK(d.average * t1 == doctest::Approx(ref).epsilon(1e-8));
    const double dwell = passage_integral(x, y, t1, [](double u, double v, double w) {
        return std::sqrt(u * u + v * v + w * w) < 0.1 ? 1.0 : 0.0;
    });
    CHECK(d.dwell_fraction * t1 == doctest::Approx(dwell).epsilon(1e-5));
    CHECK(d.returns == 0);
    CHECK_THROWS_AS(Observable3D::coordinate(3), DomainError);
    CHECK_THROWS_AS(flow_average(fl, fp, 0.1, {x, y}, Observable3D::constant(1), 0), DomainError);
    CHECK_THROWS_AS(flow_average(fl, fp, 0.1, {1.2, y}, Observable3D::constant(1), 1), DomainError);
}

TEST_CASE("visits are the roof along the orbit")
{
    FamilyParams fp;
    for (Reinjection mode : {Reinjection::frozen, Reinjection::linear}) {
        FlowParams fl;
        fl.reinjection = mode;
        const double a = 0.05;
        const FlowResult r = flow_average(fl, fp, a, {0.3, 0.2}, Observable3D::constant(1), 200);
        CHECK(r.average == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.returns == static_cast<long>(r.visits.size()));
        REQUIRE(r.returns > 10);
        SectionPoint p{0.3, 0.2};
        double total = 0;
        for (double v : r.visits) {
            CHECK(v == doctest::Approx(1 + std::log(1 / std::fabs(p.x))).epsilon(1e-14));
            total += v;
            p = poincare(fl, fp, a, p);
        }
        CHECK(total <= 200);
        CHECK(r.visit_ratio_holds());
    }
}

TEST_CASE("orbit through the critical line ends in the singularity")
{
    FamilyParams fp;
    FlowParams fl;
    const double T = 50;
    const FlowResult r = flow_average(fl, fp, 0.1, {0.0, 0.4}, Observable3D::dist_to_origin_capped(), T,
                                      {true, 0.1});
    CHECK(r.terminal);
    CHECK(r.terminal_time == 0);
    const double ref = passage_integral(0, 0.4, T, [](double u, double v, double w) {
        return std::min(1.0, std::sqrt(u * u + v * v + w * w));
    });
    CHECK(r.average * T == doctest::Approx(ref).epsilon(1e-7));
    CHECK(r.dwell_fraction > 0.9);
    REQUIRE_FALSE(r.series.empty());
    std::ostringstream os;
    write_flow_csv(os, r);
    CHECK(os.str().rfind("t,value,dwell_fraction\n", 0) == 0);
}
