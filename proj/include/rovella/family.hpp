#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

namespace rovella {

struct FamilyParams {
    double s = 1.5;
    double a_max = 0.4;
    double K0 = 2.25;
    double K1 = 3.25;
    double chi = -0.625;

    static FamilyParams for_exponent(double s, double a_max = 0.4);

    std::vector<std::string> violations() const;
    void validate() const;
};

enum class Side { minus = -1, plus = 1 };

struct MapJet {
    double f = 0;
    double df_dx = 0;
    double d2f_dx2 = 0;
    double d3f_dx3 = 0;
    double df_da = 0;
    double schwarzian = 0;
};

MapJet map_eval(const FamilyParams& p, double a, double x);
// one-sided jet; at x = 0 the limit from `side` is returned
MapJet map_eval(const FamilyParams& p, double a, double x, Side side);

// u^s, u >= 0
inline double spow(double u, double s) { return s == 1.5 ? u * std::sqrt(u) : std::pow(u, s); }

// Unchecked kernels for inner loops. f_a(0) = -1.
inline double map_value(double s, double a, double x)
{
    if (x > 0) return (2.0 - a) * spow(x, s) - 1.0;
    if (x < 0) return 1.0 - (2.0 - a) * spow(-x, s);
    return -1.0;
}

inline double map_slope(double s, double a, double x)
{
    const double u = std::fabs(x);
    return (2.0 - a) * s * (s == 1.5 ? std::sqrt(u) : std::pow(u, s - 1.0));
}

inline double map_param_slope(double s, double x)
{
    if (x > 0) return -spow(x, s);
    if (x < 0) return spow(-x, s);
    return 0.0;
}

struct AxiomGrid {
    int nx = 10000;
    int na = 20;
};

struct AxiomCheck {
    std::string id;
    bool passed = false;
    double margin = 0;
    double worst_a = 0;
    double worst_x = 0;
    std::string note;
};

struct AxiomReport {
    std::vector<AxiomCheck> checks;

    const AxiomCheck& get(std::string_view id) const;
    bool passed(std::string_view id) const { return get(id).passed; }
    bool all_passed() const;
    double worst_margin() const;
};

AxiomReport verify_axioms(const FamilyParams& p, const AxiomGrid& grid = {});

double map_zero(const FamilyParams& p, double a, Side side);

std::string to_record(const FamilyParams& p);
FamilyParams family_from_record(const std::string& text);

}  // namespace rovella
