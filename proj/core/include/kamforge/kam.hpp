#pragma once

#include "kamforge/flows.hpp"
#include "kamforge/homological.hpp"

namespace kamforge {

struct KamConfig {
    double sigma = 0.4;
    double mu = 0.2;
    double gamma1 = 1.0;      // adjusted to min(gamma1, 1/d_Delta) at schedule build
    double delta_block = 1.0; // initial block scale Delta
    double eps_tol = 1e-12;
    int max_steps = 5;        // outer steps
    int K = 2;                // inner counts K_j = K^j
    double constant_c = 10.0; // the absolute constant C
    double exp2 = 4.0;
    double exp3 = 11.0;       // 4 s* + 3
    int s_star = 2;
    double m_star = 3.0;
    double varkappa = 1.0;
    int n_theta = 32;
    int n_lie = 6;
    double kappa_cap_frac = 0.05; // exclusion threshold cap as a fraction of c'
    int tnorm_samples = 96;
    int tnorm_hess_samples = 12;
    int residual_points = 32;
    uint64_t seed = 1234;
    PolyCaps poly_caps;
    bool strict_schedule = false; // raise on predicted non-contraction
};

struct ScheduleRow {
    int j = 0;
    double sigma_j = 0, mu_j = 0, eps_j = 0, xi_j = 0, delta_j = 0;
    double Delta_j = 0, Delta_next = 0, d_delta = 0, gamma_j = 0, kappa_j = 0;
    int K_j = 0;
    double X_j = 0, Y_j = 0;
};

struct KamSchedule {
    std::vector<ScheduleRow> rows;
    bool feasible = true;
    int infeasible_at = -1;
    int kappa_fixed_point_iters = 0;
};

// Parameter schedule of the infinite induction: sigma_j = (1/2 + 2^-j) sigma,
// Delta_{j+1} = 4 K_j max(1/(sigma_j - sigma_{j+1}), d_{Delta_j}) log(1/eps),
// gamma_{j+1} = 1/d_{Delta_{j+1}}, kappa_j implicit in eps_j = kappa_j/(C X_j Y_j).
KamSchedule make_schedule(const KamConfig& cfg, double eps1, double xi1, double chi,
                          double delta1, const LatticeModel& model);

struct StepReport {
    int outer_j = 0, inner_i = 0;
    double eps_in = 0, eps_out = 0, xi_in = 0, xi_out = 0, eta = 0;
    double kappa = 0, X = 0, Y = 0;
    double solver_residual = 0;   // mode-wise linear algebra identity
    double equation_residual = 0; // sampled nonlinear homological residual
    double conj_residual = 0;     // sampled (h+k+f) o Phi vs decomposition
    double min_divisor = 0, min_divisor_k0 = 0;
    double bracket_tail = 0, lie_tail = 0, lie_ratio = 0;
    bool excluded = false;
    std::string divisor_label;
};

struct BasicStepResult {
    JetFunction S;
    JetFunction h_plus;
    PolyHamiltonian f_plus;
    StepReport report;
    bool ok = false;
};

struct BasicStepParams {
    SolveParams solve;
    double sigma = 0.4, sigma_p = 0.3, mu = 0.2, mu_p = 0.15;
    WeightParams gamma;
    double m_star = 3.0, chi = 1.0, delta = 0.0;
    double constant_c = 10.0, exp2 = 4.0, exp3 = 11.0;
    double d_delta = 1.0;
    int n_theta = 32, n_lie = 6;
    TNormOptions tnorm;
    int residual_points = 32;
    double flow_tol = 1e-12;
    // Lie-series prune floors relative to the gauge of the first bracket term
    double lie_prune_jet = 1e-17;
    double lie_prune_nonjet = 1e-13;
};

// One step: solve the nonlinear homological equation for S, apply the time-1
// Lie transform to h + k + f, return the decomposition h + k + h_+ + f_+ with
// measured norms and a sampled conjugacy verification against the true flow.
BasicStepResult basic_step(const NormalFormHamiltonian& h, const JetFunction& k_accum,
                           const PolyHamiltonian& f, const BlockDecomposition& d,
                           const BlockDecomposition& dp, const BasicStepParams& params);

enum class KamVerdict { Converged, Excluded, Stalled, SmallnessViolation, MaxSteps };

struct FiniteInductionResult {
    NormalFormHamiltonian h_out;       // normal form with accumulated corrections
    PolyHamiltonian f_out;
    std::vector<JetFunction> generators;
    std::vector<StepReport> steps;
    bool excluded = false, stalled = false;
    StepReport last;
};

// K basic steps at fixed Delta' = N without changing the normal form; the
// accumulated h_+ increments ride along in k and are absorbed at the end.
FiniteInductionResult finite_induction(const NormalFormHamiltonian& h, const PolyHamiltonian& f,
                                       int K, const BlockDecomposition& d,
                                       const BlockDecomposition& dp, BasicStepParams params);

struct KamResult {
    KamVerdict verdict = KamVerdict::MaxSteps;
    std::vector<StepReport> steps;
    std::vector<double> eps_trail; // eps_j per outer step, eps_trail[0] = initial
    std::vector<JetFunction> generators;
    NormalFormHamiltonian h_final;
    PolyHamiltonian f_final;
    KamSchedule schedule;
    double chi = 0.0;
    double delta_final = 0.0;       // hypothesis-B size of the accumulated correction
    double final_jet_norm = 0.0;
    double worst_conj_residual = 0.0;
    std::string exclusion_label;
    int exclusion_step = -1;
};

KamResult run_kam(const NormalFormHamiltonian& h0, const PolyHamiltonian& f0,
                  const KamConfig& cfg);

} // namespace kamforge
