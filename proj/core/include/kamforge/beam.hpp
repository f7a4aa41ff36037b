#pragma once

#include <memory>

#include "kamforge/kam.hpp"

namespace kamforge {

// Beam equation u_tt + Delta^2 u + V*u + eps g(x,u) = 0 on T^{d*} with a
// convolutive potential; V^(a) at the tangential sites are the parameters.
struct BeamConfig {
    int d_star = 1;
    double r_lat = 8.0;
    double mass = 1.0; // constant V^ off the tangential set
    std::vector<Site> set_a;
    std::vector<double> amplitudes;       // I_a > 0
    std::vector<double> vhat;             // V^(a) at the run's parameter point
    std::vector<std::pair<double, double>> vhat_box; // parameter boxes per A site
    double eps = 1e-6;
    // optional overrides V^(site) for selected non-tangential sites
    std::vector<std::pair<Site, double>> vhat_overrides;
    PolyCaps poly_caps;

    void validate() const;
};

struct BeamSystem {
    std::shared_ptr<LatticeModel> model;
    BeamConfig cfg;
    NormalFormHamiltonian h_up;
    PolyHamiltonian perturbation; // eps * P, exact quartic expansion
    Eigen::VectorXd rho_unit;     // run parameter in unit-cube coordinates
    std::vector<Site> f_sites;

    double vhat_at(const Site& s) const;
    double mu_at(const Site& s) const;     // |a|^4 + V^(a)
    double lambda_at(const Site& s) const; // sqrt |mu|
};

BeamSystem build_beam(const BeamConfig& cfg);

struct BeamFrequencyReport {
    std::vector<std::pair<Site, double>> lambdas;
    A1Report a1;
    A1Calibration calibration;
};

BeamFrequencyReport beam_frequencies(const BeamSystem& sys, int n_param_samples = 50,
                                     uint64_t seed = 7);

struct ReconstructResult {
    std::vector<double> t_grid, x_grid;
    std::vector<std::vector<double>> u;  // u[t][x]
    double pde_residual = 0.0;           // sup of |u_tt + Delta^2 u + V*u + eps g|
    double sup_distance_h = 0.0;         // sup_theta ||u1 - u0||_{H^{d*}}
    double omega_drift = 0.0;            // |omega' - omega|
};

// Evaluate u1(theta0 + t omega', x) by pulling torus points back through the
// composed transform; the PDE residual uses spectral space derivatives and
// sixth-order finite differences in time.
ReconstructResult reconstruct_solution(const BeamSystem& sys, const KamResult& run,
                                       const Eigen::VectorXd& theta0, int n_t, double t_max,
                                       int n_x);

// spectral split of the final quadratic part: elliptic spectra imaginary,
// F part with #F stable and #F unstable directions
struct LinearizationReport {
    double max_real_part_elliptic = 0.0;
    int n_stable = 0, n_unstable = 0;
    bool structure_ok = false;
};

LinearizationReport linearization_structure(const BeamSystem& sys, const KamResult& run);

} // namespace kamforge
