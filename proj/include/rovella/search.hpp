#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rovella/combinatorics.hpp"
#include "rovella/family.hpp"
#include "rovella/induction.hpp"

namespace rovella {

struct PeriodTwoOrbit {
    double y_minus = 0;
    double y_plus = 0;
    double multiplier = 0;
};

PeriodTwoOrbit period2(const FamilyParams& fp, double a);

struct PreimageChain {
    std::vector<double> y;  // y[0] = y_a^-, f_a(y[j]) = y[j-1]
    double x0 = -0.5;
    double M = 2.0;
    int j0 = -1;            // first j with y^j < x0
    int j1 = -1;            // first j with |-1 - y^j| < K1 delta^s
    bool separation = false;  // (1/M)^{j1-j0-1} < K0 delta^{kappa s} / 6
};

PreimageChain preimage_chain(const FamilyParams& fp, double a, int count);
// with the thresholds j0, j1 for the given constants
PreimageChain preimage_chain(const FamilyParams& fp, double a, int count, const ConstantsBundle& b, double x0 = -0.5,
                             double M = 2.0);

enum class OrbitType { super_attracting, attracting, repelling, neutral };
std::string to_string(OrbitType t);

struct SuperAttractorHit {
    double a = 0;
    std::string a_text;   // extended-precision value when available
    double offset = 0;    // a - a_pre for sequence hits
    int k = 0;
    int period = 0;
    std::vector<double> orbit;  // xi_1 .. xi_k, the last one ~ 0
    double residual = 0;
    int m = 0;                  // last shadowing index, sequence hits only
    int rho = 0;                // period - m
    bool shadowing = true;
    bool monotone = true;       // screen result over the bracket
};

SuperAttractorHit find_super_attractor(const FamilyParams& fp, double lo, double hi, int k);

struct PreperiodicHit {
    double a = 0;
    std::string a_text;
    int k = 0;  // xi_k^+(a) = y_a^-
    std::optional<int> ell;
    double residual = 0;
    double max_drift = 0;  // over the alternation check
    bool alternates = false;
    double y_minus = 0, y_plus = 0;
};

struct PreperiodicOptions {
    int grid = 100;
    int alternation_steps = 50;
};

PreperiodicHit find_preperiodic(const FamilyParams& fp, double lo, double hi, int k,
                                const PreperiodicOptions& opt = {});

struct SuperSequenceOptions {
    int k_cap = 320;
    int grid = 16;
    double r = 0.05;
    double width = 1e-6;  // initial half-width of the neighbourhood
};

struct SuperSequence {
    std::vector<SuperAttractorHit> hits;       // selected, |a_n - a_pre| decreasing
    std::vector<SuperAttractorHit> all_hits;   // every nested hit found
    int last_k = 0;
    std::string diagnostics;
};

SuperSequence super_sequence(const FamilyParams& fp, const PreperiodicHit& pre, int depth,
                             const SuperSequenceOptions& opt = {});

OrbitType verify_periodic(const FamilyParams& fp, double a, const std::vector<double>& orbit);
double orbit_multiplier(const FamilyParams& fp, double a, const std::vector<double>& orbit);

// escape -> preperiodic parameter -> super-attractor sequence
struct InstabilitySource {
    EscapeEvent escape;
    int gamma = 0;
    double b = 0, c = 0;  // xi_gamma = +-delta, +-delta^kappa
    int side = 1;
    PreimageChain chain;
    int ell = 0;
    PreperiodicHit hit;
    SuperSequence sequence;
};

struct InstabilityOptions {
    int escape_index = 0;  // among escapes with a known next return
    int ell_radius = 6;
    PreperiodicOptions preperiodic;
    SuperSequenceOptions sequence;
};

InstabilitySource preperiodic_from_escape(const FamilyParams& fp, const ConstantsBundle& b,
                                          const std::vector<EscapeEvent>& escapes, int depth,
                                          const InstabilityOptions& opt = {});

void write_hits_csv(std::ostream& out, const std::vector<SuperAttractorHit>& hits);
void write_hits_csv(std::ostream& out, const std::vector<PreperiodicHit>& hits);

}  // namespace rovella
