#pragma once

#include <optional>

#include "kamforge/normal_form.hpp"
#include "kamforge/poly.hpp"
#include "kamforge/small_divisors.hpp"

namespace kamforge {

struct SolveParams {
    double kappa = 1e-3;       // exclusion threshold for the k != 0 divisors
    int n_cap = 32;            // N: modes with |k|_1 <= N are solved
    double delta_prime = 1e9;  // band between block representatives for the matrix equation
    double c_prime = 0.4;      // structural lower bound consumed by the k = 0 solves
};

struct DivisorDiag {
    ModeVec k{0, 0, 0, 0};
    std::string op;
    double divisor = 0.0;
    bool excluded = false;
};

struct ExclusionSignal {
    ModeVec k{0, 0, 0, 0};
    std::string op;
    double divisor = 0.0;
};

struct HomologicalSolution {
    JetFunction S;
    JetFunction R;
    cd mean_const = 0.0;      // hat f0(0), the scalar part of h_+
    Eigen::VectorXcd mean_r;  // hat fr(0): frequency shift of h_+
    NormalFormMatrix B;       // normal form increment, in NF_{Delta'}
    std::vector<DivisorDiag> diagnostics;
    std::optional<ExclusionSignal> exclusion;
    double worst_residual = 0.0;  // mode-wise relative residual over solved modes
    double min_divisor_k0 = 1e300;
    double min_divisor = 1e300;   // over solved k != 0 operators

    JetFunction h_plus_jet(int n_theta) const;
};

// Linear homological equation {S,h} + G = h_+ + R solved mode by mode in the
// complexified block coordinates of the decomposition d; B lives on E_{dp}.
HomologicalSolution solve_linear(const NormalFormHamiltonian& h, const JetFunction& G,
                                 const BlockDecomposition& d, const BlockDecomposition& dp,
                                 const SolveParams& params);

struct NonlinearSolution {
    HomologicalSolution total;      // aggregated S, B, means, R
    std::vector<JetFunction> stages; // S0, S1, S2
    double eps = 0.0;               // |f^T| measured
    double xi = 0.0;                // |f| measured
    double X = 0.0, Y = 0.0;        // bookkeeping factors, reported not assumed
    double residual = 0.0;          // sampled relative residual of the equation
    double bracket_tail = 0.0;      // coefficient mass dropped by mode caps
};

struct NonlinearParams {
    SolveParams solve;
    int n_theta = 32;
    double sigma = 0.4, sigma_p = 0.3;
    double mu = 0.25, mu_p = 0.2;
    WeightParams gamma;           // gamma1, gamma2 = m_star, kappa = varkappa
    double m_star = 3.0;
    double chi = 1.0, delta = 0.0;
    double constant_c = 10.0;     // the configured absolute constant
    double exp2 = 4.0, exp3 = 11.0;
    double d_delta = 1.0;         // block diameter of the current decomposition
    TNormOptions tnorm;
    int residual_samples = 64;
};

// Three-stage solution of {S,h} + {S, f-f^T}^T + f^T = h_+ + R.
NonlinearSolution solve_nonlinear(const NormalFormHamiltonian& h, const PolyHamiltonian& f,
                                  const BlockDecomposition& d, const BlockDecomposition& dp,
                                  const NonlinearParams& params);

} // namespace kamforge
