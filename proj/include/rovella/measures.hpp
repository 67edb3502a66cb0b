#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "rovella/family.hpp"
#include "rovella/induction.hpp"
#include "rovella/search.hpp"

namespace rovella {

struct Atom {
    double x = 0;
    double w = 0;
};

// histogram over [-1, 1] (density uniform inside a bin) plus point masses
struct EmpiricalMeasure {
    std::vector<double> edges;  // empty for a purely atomic measure
    std::vector<double> mass;   // mass[i] on [edges[i], edges[i+1])
    std::vector<Atom> atoms;
    int period = 0;             // > 0 when the orbit was detected periodic

    int bins() const { return static_cast<int>(mass.size()); }
    double total() const;
    int occupied() const;
    bool periodic() const { return period > 0; }

    static EmpiricalMeasure atomic(std::vector<Atom> atoms);
    static EmpiricalMeasure dirac(double x);
    // uniform weights on the points
    static EmpiricalMeasure uniform_atoms(const std::vector<double>& points);
    static EmpiricalMeasure histogram(const std::vector<double>& points, int bins);
};

struct Observable {
    enum class Kind { identity, abs, dist_to, indicator, tent };
    Kind kind = Kind::identity;
    double p = 0, q = 0;  // point / interval [p, q] / tent centre p, half-width q

    static Observable identity() { return {}; }
    static Observable absolute() { return {Kind::abs}; }
    static Observable dist_to(double point) { return {Kind::dist_to, point}; }
    static Observable indicator(double lo, double hi);
    static Observable tent(double centre, double width);

    double operator()(double x) const;
    double lipschitz() const;  // infinite for the indicator
    bool continuous() const { return kind != Kind::indicator; }
    std::string name() const;
};

// continuous observables used by the weak-* checks
std::vector<Observable> observable_registry();

double integrate(const EmpiricalMeasure& mu, const Observable& phi);

struct MeasureOptions {
    long n = 1000000;
    long burn = 10000;
    int bins = 2000;
    double closure = 1e-10;
    int max_period = 1000;
};

EmpiricalMeasure empirical_measure(const FamilyParams& fp, double a, double x0, const MeasureOptions& opt = {});

double birkhoff_average(const FamilyParams& fp, double a, double x0, const Observable& phi, long n);

double wasserstein1(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

// image of mu under f_a; each bin is carried by `sub` equally spaced points
EmpiricalMeasure pushforward(const FamilyParams& fp, double a, const EmpiricalMeasure& mu, int sub = 16);

// midpoint of the widest survivor
double reference_parameter(const Generation& gen);

struct InstabilityRow {
    std::string a_text;
    double a = 0;
    double offset = 0;
    int period = 0;
    double w1_atomic = 0;
    double w1_acim = 0;
};

struct InstabilityTable {
    double a_pre = 0;
    double reference_a = 0;
    double w1_target_acim = 0;  // W1(1/2(delta_- + delta_+), acim)
    std::vector<InstabilityRow> rows;
};

InstabilityTable instability_table(const FamilyParams& fp, const PreperiodicHit& pre, const SuperSequence& seq,
                                   double reference_a, double x0 = 0.3, const MeasureOptions& opt = {});

void write_instability_csv(std::ostream& out, const InstabilityTable& table);
void write_measure_csv(std::ostream& out, const EmpiricalMeasure& mu);

}  // namespace rovella
