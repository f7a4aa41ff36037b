#pragma once

#include <Eigen/Dense>

#include "kamforge/block_matrix.hpp"
#include "kamforge/fourier.hpp"
#include "kamforge/lattice.hpp"
#include "kamforge/rng.hpp"
#include "kamforge/weights.hpp"

namespace kamforge {

// Point x = (r, theta, w): r, theta over the tangential sites (a_ids order),
// w the transverse variables in (p,q) pairs over w_ids order.
struct PhasePoint {
    Eigen::VectorXcd r;     // size n
    Eigen::VectorXcd theta; // size n
    Eigen::VectorXcd w;     // size 2L, interleaved (p_a, q_a)

    static PhasePoint zero(const LatticeModel& model);
    bool is_real(double tol = 0.0) const;
};

// || zeta ||_gamma over the given sites of an interleaved (per-site C^2) vector
double y_norm(const Eigen::VectorXcd& zeta, const LatticeModel& model,
              const std::vector<int>& site_ids, double gamma1, double gamma2);

// w-part norm in w_ids order
double y_norm_w(const Eigen::VectorXcd& w, const LatticeModel& model, double gamma1,
                double gamma2);

// Omega(zeta, zeta') = sum_a p_a q'_a - q_a p'_a  (interleaved vectors, same layout)
cd omega_form(const Eigen::VectorXcd& zeta, const Eigen::VectorXcd& zeta_prime);

// Domain O_gamma(sigma, mu): ||(r/mu, i Im theta / sigma, w/mu)||_gamma < 1.
struct DomainSpec {
    double sigma = 0.5;
    double mu = 0.5;
    WeightParams gamma; // gamma1, gamma2 = m_star, kappa

    void validate() const;
    DomainSpec shrunk(double sigma_p, double mu_p) const {
        DomainSpec d = *this;
        d.sigma = sigma_p;
        d.mu = mu_p;
        return d;
    }
};

// distance-to-origin functional defining O_gamma(sigma, mu)
double domain_norm(const PhasePoint& x, const LatticeModel& model, const DomainSpec& spec);

// Deterministic boundary sample: points with domain_norm ~ fill (real part of
// theta uniform on the torus).
std::vector<PhasePoint> sample_domain(const LatticeModel& model, const DomainSpec& spec,
                                      int count, uint64_t seed, double fill = 0.95);

// real points (Im theta = 0, r, w real), radius fill*min(sigma,mu)-ish
std::vector<PhasePoint> sample_real_domain(const LatticeModel& model, const DomainSpec& spec,
                                           int count, uint64_t seed, double fill = 0.5);

} // namespace kamforge
