#pragma once

#include <array>
#include <ostream>
#include <string>
#include <vector>

#include "rovella/family.hpp"

namespace rovella {

enum class Reinjection { frozen, linear };

struct FlowParams {
    double lambda1 = 1.0;
    double lambda2 = -5.0;
    double lambda3 = -1.5;
    double tau0 = 1.0;
    double rho_g = 0.25;
    double c_g = 0.5;
    Reinjection reinjection = Reinjection::frozen;
    double critical_tolerance = 0;  // |x| at or below this lies on the critical line

    double r() const { return -lambda2 / lambda1; }
    double s() const { return -lambda3 / lambda1; }
    std::vector<std::string> violations(const FamilyParams& fp) const;
    void validate(const FamilyParams& fp) const;
};

struct SectionPoint {
    double x = 0;
    double y = 0;
};

SectionPoint poincare(const FlowParams& flow, const FamilyParams& fp, double a, SectionPoint p);

// tau0 + ln(1/|x|)/lambda1, infinite at x = 0
double roof(const FlowParams& flow, double x);

struct Observable3D {
    enum class Kind { dist_to_origin_capped, coordinate, constant };
    Kind kind = Kind::dist_to_origin_capped;
    int axis = 0;
    double value = 1;

    static Observable3D dist_to_origin_capped() { return {}; }
    static Observable3D coordinate(int axis);
    static Observable3D constant(double c) { return {Kind::constant, 0, c}; }

    double operator()(const std::array<double, 3>& p) const;
    std::string name() const;
};

struct FlowSample {
    double t = 0;
    double average = 0;
    double dwell = 0;
};

struct FlowResult {
    double T = 0;
    double average = 0;
    double dwell_fraction = 0;  // time with |position| < 0.1
    long returns = 0;
    bool terminal = false;      // reached the critical line, then flowed into the singularity
    double terminal_time = 0;
    std::vector<double> visits;  // completed return times T_1, T_2, ...
    std::vector<FlowSample> series;

    // m/T <= 2m/(T_1 + ... + T_m) on the completed visits
    bool visit_ratio_holds() const;
};

struct FlowOptions {
    bool record_series = false;
    double near = 0.1;
};

FlowResult flow_average(const FlowParams& flow, const FamilyParams& fp, double a, SectionPoint p0,
                        const Observable3D& phi, double T, const FlowOptions& opt = {});

struct ContractionRecord {
    std::vector<double> distances;  // |y_p - y_q| after 0..n returns
    double rate = 0;                // (d_n/d_0)^(1/n)
    double max_step = 0;            // largest one-step ratio
};

ContractionRecord leaf_contraction(const FlowParams& flow, const FamilyParams& fp, double a, SectionPoint p,
                                   SectionPoint q, int n);

void write_flow_csv(std::ostream& out, const FlowResult& r);

}  // namespace rovella
