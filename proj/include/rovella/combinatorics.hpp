#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rovella/family.hpp"

namespace rovella {

struct ConstantsBundle {
    double s = 1.5;
    int Delta = 3;
    double delta = 0;
    double alpha = 0;
    double beta = 0;
    double lambda0 = 0;
    double c_prime = 0;
    double lambda = 0;
    double kappa1 = 0;
    double kappa2 = 0;
    double kappa = 0;

    // calibrated or searched
    double A = 0;
    double eta1 = 2.5;
    int N = 0;
    int N0 = 0;
    int N1 = 0;
    double a0 = 0;
    double c = 0;
    double lambda_c = 0;

    // levels |m| >= exclusion_level(n) are removed at time n
    int exclusion_level(int n) const;
    double bound_period_limit(int m) const;
};

ConstantsBundle derive_constants(double s, int Delta, double alpha, double beta, double lambda0);

// smallest N with sum_{k<=N} eta^-k + sum_{k>N} lambda^-k < 1
int comparability_horizon(double eta, double lambda);

struct IntervalAddress {
    int m = 0;
    int k = 0;
    double lo = 0, hi = 0;            // I_{m,k}
    double plus_lo = 0, plus_hi = 0;  // I_{m,k}^+
};

struct Location {
    std::optional<IntervalAddress> address;
    bool critical = false;
    bool outside() const { return !address.has_value(); }
};

double level_width(int m);
double cell_width(int m);
IntervalAddress cell(int m, int k);
Location locate(double x, const ConstantsBundle& b);

// a point of U_Delta outside I_{Delta,1} and I_{-Delta,1}
bool in_deep_zone(double x, const ConstantsBundle& b);

struct BoundPeriod {
    int p = 0;
    std::vector<double> gaps;  // gaps[j-1] = |f^j(x) - xi_j|, up to the first unbound step
};

BoundPeriod bound_period(const FamilyParams& fp, const ConstantsBundle& b, double a, int m, double x);
double bound_edge(int m);
int bound_period_at(const FamilyParams& fp, const ConstantsBundle& b, double a, int m);
int bound_period_interval(const FamilyParams& fp, const ConstantsBundle& b, double lo, double hi, int m,
                          int samples = 9);

// (f^{j})'(x)
double iterate_derivative(const FamilyParams& fp, double a, double x, int j);
// max over y in [-1, f(e^{-|m|+1})] (mirrored for m < 0) and k <= p of the two-sided distortion ratio
double distortion_bound(const FamilyParams& fp, double a, int m, int p, int points = 33);

enum class SegmentKind { ret, bound, free };

struct Segment {
    SegmentKind kind = SegmentKind::free;
    int start = 1;
    int length = 1;
    int m = 0;
    int k = 0;
    int p = 0;
    bool escape = false;
};

struct Itinerary {
    int horizon = 0;  // requested n
    int n = 0;        // covered horizon (< horizon when truncated)
    std::vector<Segment> segments;
    int F = 0;
    int T = 0;
    bool passes_FA = false;
    std::optional<int> truncated_at;

    int covered_length() const;
};

Itinerary itinerary(const FamilyParams& fp, double a, int n, const ConstantsBundle& b);

// free time and the escape-anchored block statistic from a segment list
int free_time(const std::vector<Segment>& segments);
int deep_block_time(const std::vector<Segment>& segments, int n);

void write_itinerary_csv(std::ostream& out, const Itinerary& it);
std::string to_string(SegmentKind k);

}  // namespace rovella
