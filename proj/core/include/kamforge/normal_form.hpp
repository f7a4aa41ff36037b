#pragma once

#include <Eigen/Dense>
#include <functional>

#include "kamforge/block_matrix.hpp"
#include "kamforge/jet.hpp"

namespace kamforge {

struct NormalFormConstants {
    double c = 1.0;        // A1 asymptotics constant
    double c_prime = 0.4;  // A1 lower bounds
    double delta0 = 0.1;   // A2 transversality margin
    double chi = 1.0;      // C^{s*-1} size of the rho-derivatives
    double beta2 = 2.0;    // beta1 = 2 is fixed
    double beta3 = 2.0;
    int s_star = 2;
    double m_star = 3.0;
    double varkappa = 1.0;
};

// Normal form Hamiltonian h = <omega(rho), r> + (1/2)<w, A(rho) w> with
// A = A_up + A_corr, A_up = diag(lambda_a) on Lambda_inf plus H on F, and the
// accumulated correction A_corr on normal form. The _up parts are evaluable at
// any parameter point; the corrections are data at the current rho.
class NormalFormHamiltonian {
public:
    const LatticeModel* model = nullptr;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> omega_up;
    std::function<double(const Site&, const Eigen::VectorXd&)> lambda_up;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> h_f_up; // 2#F x 2#F symmetric

    Eigen::VectorXd rho;         // current parameter sample (unit ball)
    Eigen::VectorXd omega_shift; // accumulated frequency correction at rho
    BlockMatrix a_corr;          // accumulated normal form correction at rho
    double delta = 0.0;          // hypothesis-B size of a_corr
    NormalFormConstants consts;

    Eigen::VectorXd omega() const;
    Eigen::VectorXd omega_at(const Eigen::VectorXd& rho_pt) const; // _up only
    double lambda(int site_id) const;                              // with diagonal correction

    // full quadratic-part matrix over the transverse sites at the current rho
    BlockMatrix a_matrix() const;
    BlockMatrix a_up_matrix() const;

    // complexified Hermitian block Q_{[a]} (order = block site order)
    Eigen::MatrixXcd hermitian_block(const std::vector<int>& block_sites) const;
    // F part as a dense symmetric matrix, f_ids order, (p,q) interleaved
    Eigen::MatrixXd h_f() const;

    // hypothesis-B check: sup_a <a>^varkappa || (A - A_up)_{[a]} || (operator norm)
    double hypothesis_b_size(const BlockDecomposition& d) const;

    // h as a jet (quadratic Hamiltonian, theta-independent)
    JetFunction as_jet(int n_theta) const;

    // measured chi = |grad_rho omega|_{C^{s*-1}} + sup_a |grad_rho lambda_a|
    //              + |grad_rho H| by central finite differences over samples
    double measure_chi(const std::vector<Eigen::VectorXd>& samples, double fd_step = 1e-4) const;
};

// Unperturbed normal form with constant data (test toys)
NormalFormHamiltonian make_toy_scalar(const LatticeModel& model, int dim_p);

} // namespace kamforge
