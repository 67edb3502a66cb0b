#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "rovella/family.hpp"

namespace rovella {

// plus: orbit of -1 (the value at 0+), minus: orbit of +1
enum class CriticalSide { plus, minus };

struct CriticalOrbit {
    CriticalSide side = CriticalSide::plus;
    double a = 0;
    std::vector<double> xi;      // xi[k-1] = xi_k
    std::vector<double> D;       // D[j-1] = D_j
    std::vector<double> dxi_da;  // dxi_da[k-1] = d xi_k / da
    std::optional<int> truncated_at;

    int size() const { return static_cast<int>(xi.size()); }
    double xi_at(int k) const { return xi.at(k - 1); }
    double D_at(int j) const { return j == 0 ? 1.0 : D.at(j - 1); }
    double dxi_at(int k) const { return dxi_da.at(k - 1); }
};

CriticalOrbit critical_orbit(const FamilyParams& p, double a, int n, CriticalSide side = CriticalSide::plus);

// xi_k^+(a) and its parameter derivative, no storage
struct OrbitPoint {
    double xi = 0;
    double dxi_da = 0;
};
OrbitPoint orbit_point(const FamilyParams& p, double a, int k);
double xi_plus(const FamilyParams& p, double a, int k);

struct GrowthReport {
    bool passes_EG = true;
    double lambda_used = 0;
    std::optional<int> first_failure;
    bool passes_eta = true;
    double eta_used = 0;
    std::optional<int> first_eta_failure;
    bool passes_BA = true;
    double alpha_used = 0;
    double min_margin = 0;
    std::optional<int> first_BA_failure;
    bool partial = false;
};

GrowthReport check_growth(const CriticalOrbit& orbit, double lambda, double eta, int N);
GrowthReport check_basic_assumption(const CriticalOrbit& orbit, double alpha);

double comparability(const FamilyParams& p, double a, int n);

struct ExpansionRecord {
    int n = 0;
    double derivative = 1;
    double endpoint = 0;
    int item = 1;
};

ExpansionRecord outside_expansion(const FamilyParams& p, double a, double x, int n, int Delta);

struct ExpansionCalibration {
    double c = 1;
    double lambda_c = 1;
    int orbits = 0;
    int entries = 0;
};

ExpansionCalibration calibrate_expansion(const FamilyParams& p, double a_hi, int Delta, int orbits, int n_max,
                                         std::uint64_t seed);

struct ComparabilityCalibration {
    double A = 1;
    double min_ratio = 0;
    double max_ratio = 0;
    int samples = 0;
};

ComparabilityCalibration calibrate_comparability(const FamilyParams& p, double a_hi, double lambda, double eta,
                                                 int N, int n_max, int parameters, std::uint64_t seed);

struct InitialInterval {
    double a0 = 0;
    int N1 = 0;
    int N0 = 0;
    double a_N0 = 0;
    double x0 = 0;
    double lambda0_prime = 0;
    double eta1 = 0;
    double lambda0 = 0;
    bool item1 = false, item2 = false, item3 = false, item4 = false;
    double a_minus_delta = 0;  // xi_N1 = -delta
    double a_plus_delta = 0;   // xi_N1 = +delta
};

InitialInterval find_initial_interval(const FamilyParams& p, int Delta, double eta1, double lambda0, int N0,
                                      int n_cap = 40);

void write_orbit_csv(std::ostream& out, const CriticalOrbit& orbit);

}  // namespace rovella
