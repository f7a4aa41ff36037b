#pragma once

#include "kamforge/lattice.hpp"

namespace kamforge {

// Parameters of the weight e_{gamma,kappa}(a,b) =
//   Cw * exp(gamma1*[a-b]) * max([a-b],1)^gamma2 * min(<a>,<b>)^kappa.
struct WeightParams {
    double gamma1 = 0.0;     // exponential rate, >= 0
    double gamma2 = 0.0;     // polynomial rate
    double kappa = 0.0;      // decay exponent, >= 0
    double Cw = 1.0;         // weight constant, >= 1

    WeightParams with_kappa(double k) const { WeightParams p = *this; p.kappa = k; return p; }
    WeightParams with_gamma1(double g) const { WeightParams p = *this; p.gamma1 = g; return p; }
    void validate() const;
};

double weight(const Site& a, const Site& b, const WeightParams& p);

// Per-site Y_gamma weight e^{gamma1 |a|} <a>^{gamma2}
double site_weight(const Site& a, double gamma1, double gamma2);

// Smallest power of two >= 2^{gamma2+kappa+1} that makes both weight-algebra
// inequalities hold on a seeded sample of triples/pairs within |a| <= radius.
// (i)  e_{g,k}(a,b) <= e_{g,0}(a,c) e_{g,k}(c,b)        (needs gamma2 >= kappa)
// (ii) e_{gt,k}(a,0) <= e_{g,k}(a,b) e_{gt,k}(b,0)      for -g <= gt <= g
double calibrate_weight_constant(int d_star, double radius, double gamma1, double gamma2,
                                 double kappa, uint64_t seed = 7, int n_samples = 20000);

} // namespace kamforge
