#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kamforge/normal_form.hpp"

namespace kamforge {

// Parameter samples in the unit ball of R^P
struct ParamDomain {
    int dim_p = 1;
    std::vector<Eigen::VectorXd> samples;
    uint64_t seed = 0;

    static ParamDomain monte_carlo(int dim_p, int count, uint64_t seed);
    static ParamDomain grid_1d(int count); // regular grid on [-1,1]
};

enum class DivisorKind { Scalar, Block, PairSum, PairDiff };

struct DivisorOperator {
    DivisorKind kind = DivisorKind::Scalar;
    ModeVec k{0, 0, 0, 0};
    int block_a = -1, block_b = -1;
    Eigen::MatrixXcd mat;
    std::string label() const;
};

// 1/sigma_min via dense SVD; infinity below 1e-300
double inv_norm(const DivisorOperator& L);
double inv_norm(const Eigen::MatrixXcd& m);

// <k, omega(rho)> as a 1x1 operator; k = 0 is rejected
DivisorOperator build_scalar(const ModeVec& k, const NormalFormHamiltonian& h,
                             const Eigen::VectorXd& rho);
// restriction of the vector-equation divisor to one block:
// Lambda_inf blocks: <k,omega> I + i A_{[a]} J (both Hermitian pieces);
// the F block: <k,omega> I + i H J
DivisorOperator build_block(const ModeVec& k, int block_id, const NormalFormHamiltonian& h,
                            const BlockDecomposition& d, const Eigen::VectorXd& rho);
// Sylvester-type operators of the matrix equation on block pairs; sum_case
// selects X -> <k,omega>X + tQ_a X + X Q_b, else the difference variant.
// Pairs touching F produce the mixed and F-F variants.
DivisorOperator build_pair(const ModeVec& k, int block_a, int block_b,
                           const NormalFormHamiltonian& h, const BlockDecomposition& d,
                           const Eigen::VectorXd& rho, bool sum_case);

struct ScanSpec {
    std::vector<double> kappas;
    int n_modes = 1; // N
    bool include_blocks = false;
    bool include_pairs = false;
    double pair_band = 2.0;       // pseudo-distance band between block representatives
    double max_block_norm = 1e18; // restrict blocks to |a| <= this
};

struct ExclusionReport {
    std::vector<double> kappas;
    std::vector<double> excluded_fraction; // per kappa
    double slope = 0.0;                    // log-log regression of fraction vs kappa
    double worst_inv_norm = 0.0;           // max over samples of the per-sample worst
    std::vector<double> per_sample_worst;  // 1/min divisor per sample
    int n_modes = 0;
};

// per sample: worst inverse norm over the selected operator family; exclusion
// flags are monotone in kappa by construction
ExclusionReport scan_measure(const NormalFormHamiltonian& h, const ScanSpec& spec,
                             const ParamDomain& domain, const BlockDecomposition* d = nullptr,
                             int workers = 1);

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// C^inf monotone transition, 0 for t <= lo, 1 for t >= hi
double cutoff(double t, double lo, double hi);

struct A1Report {
    double margin_asymptotic = 0.0; // (la-lb-ter)
    double margin_pairs = 0.0;      // (la-lb)
    double margin_lower = 0.0;      // (laequiv)
    double margin_separation = 0.0; // (la-lb-bis)
    double c_prime_measured = 0.0;  // min separation / lower bound actually attained
    bool ok = false;
};

A1Report check_A1(const NormalFormHamiltonian& h, const ParamDomain& domain);

// Largest-margin constants (c, c') satisfying the four A1 bounds on the
// truncated lattice. The pair bound forces c*c' >= sup |(la-lb)-(a^2-b^2)|
// weighted, while the lower bounds cap c'; both are measured and c' is placed
// between them. feasible is false when the measured window is empty.
struct A1Calibration {
    double c = 1.0;
    double c_prime = 0.0;
    bool feasible = false;
    double sup_pairs = 0.0;  // weighted pair deviation sup (lower edge for c'c)
    double min_lower = 0.0;  // min over lambda, separations, F-block bounds (upper edge)
};

A1Calibration calibrate_a1(const NormalFormHamiltonian& h, const ParamDomain& domain);

enum class A2Branch { Invertible, Transverse, Failed, Empty };

struct A2CaseReport {
    ModeVec k{0, 0, 0, 0};
    int case_id = 1; // (i), (ii), (iii)
    std::string blocks;
    A2Branch branch = A2Branch::Empty;
    int direction = -1;   // coordinate direction of the transversality witness
    double margin = 0.0;  // invertibility sigma_min or derivative margin
};

struct A2Report {
    std::vector<A2CaseReport> cases;
    bool all_certified = true;
    double worst_margin = 1e300;
};

// Numerical dichotomy test of the transversality assumption up to |k| <= N;
// derivatives by central differences with eigenvector tracking.
A2Report check_A2_sampled(const NormalFormHamiltonian& h, const ParamDomain& domain,
                          double delta0, int n_modes, const BlockDecomposition& d,
                          double fd_step = 1e-4, double max_block_norm = 8.0);

} // namespace kamforge
