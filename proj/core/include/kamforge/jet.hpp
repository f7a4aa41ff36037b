#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "kamforge/block_matrix.hpp"
#include "kamforge/fourier.hpp"
#include "kamforge/phase.hpp"

namespace kamforge {

// Jet function f^T(r,theta,w) = f0(theta) + <fr(theta), r> + <fw(theta), w>
//                               + (1/2) <fww(theta) w, w>,
// stored as Fourier data over a ModeSet. fw and the fww blocks are in the real
// (p,q) coordinates; fww(k) is blockwise symmetric, and reality means
// coefficient(-k) = conj(coefficient(k)) for every part.
class JetFunction {
public:
    JetFunction() = default;
    JetFunction(const LatticeModel& model, ModeSet modes);
    static JetFunction zero(const LatticeModel& model, int n_theta);

    const LatticeModel& model() const { return *model_; }
    const ModeSet& modes() const { return modes_; }
    int n_modes() const { return modes_.size(); }

    cd f0(int mi) const { return f0_(mi); }
    cd& f0(int mi) { return f0_(mi); }
    const Eigen::VectorXcd& fr(int mi) const { return fr_[mi]; }
    Eigen::VectorXcd& fr(int mi) { return fr_[mi]; }
    const Eigen::VectorXcd& fw(int mi) const { return fw_[mi]; }
    Eigen::VectorXcd& fw(int mi) { return fw_[mi]; }
    const BlockMatrix& fww(int mi) const { return fww_[mi]; }
    BlockMatrix& fww(int mi) { return fww_[mi]; }

    JetFunction& operator+=(const JetFunction& o);
    JetFunction& operator*=(cd s);
    JetFunction operator+(const JetFunction& o) const;
    JetFunction operator-(const JetFunction& o) const;
    JetFunction operator*(cd s) const;

    // enforce coefficient(-k) = conj(coefficient(k)) and blockwise symmetry of fww
    void enforce_reality();
    double reality_defect() const;

    cd eval(const PhasePoint& x) const;
    // gradient: (d_r, d_theta, d_w) stacked per PhasePoint layout
    void eval_grad(const PhasePoint& x, Eigen::VectorXcd& dr, Eigen::VectorXcd& dth,
                   Eigen::VectorXcd& dw) const;
    // full second differential at x as a block matrix over all sites; tangential
    // sites carry (r,theta) coordinates, transverse sites (p,q)
    BlockMatrix eval_hess(const PhasePoint& x) const;

    // theta-Fourier data of f at fixed (r=0,w=0) evaluated coefficients
    Eigen::VectorXcd theta_series_f0() const { return f0_; }

    // derivative along omega in theta: every mode scaled by i<k,omega>
    JetFunction d_omega(const Eigen::VectorXd& omega) const;

    double coef_norm() const; // plain l1 of all coefficients, a cheap gauge

    // Projections used by the iteration
    JetFunction mean_part() const;    // k = 0 modes only
    JetFunction nonmean_part() const;

private:
    const LatticeModel* model_ = nullptr;
    ModeSet modes_;
    Eigen::VectorXcd f0_;
    std::vector<Eigen::VectorXcd> fr_, fw_;
    std::vector<BlockMatrix> fww_;
    friend struct JetBracket;
};

struct JetBracketResult {
    JetFunction jet;
    double tail = 0.0; // l1 coefficient mass convolved past the mode cutoff
};

// Poisson bracket of two jets with the sign fixed by {p_a, q_a} = +1 and
// {r_a, theta_a} = +1. Jets are closed under the bracket in the weighted
// grading (deg r = 2, deg w = 1); only Fourier modes can spill, and only when
// a cutoff cap below cutoff(S)+cutoff(G) is requested.
JetBracketResult poisson(const JetFunction& S, const JetFunction& G, int cutoff_cap = -1);

struct TNormReport {
    double sup_f = 0.0;
    double sup_grad = 0.0;
    double sup_hess = 0.0;
    double total = 0.0;
};

struct TNormOptions {
    int samples = 128;
    int hess_samples = 24;
    uint64_t seed = 1234;
    int gamma_grid = 5;
    double m_star = 3.0;
};

// Sup-norms over O_gamma'(sigma,mu) estimated by deterministic boundary
// sampling over a geometric gamma1 grid; callbacks evaluate the function.
struct TNormCallbacks {
    std::function<cd(const PhasePoint&)> eval;
    std::function<void(const PhasePoint&, Eigen::VectorXcd&, Eigen::VectorXcd&,
                       Eigen::VectorXcd&)> grad;
    std::function<BlockMatrix(const PhasePoint&)> hess;
};

TNormReport sampled_tnorm(const TNormCallbacks& cb, const LatticeModel& model,
                          const DomainSpec& spec, const TNormOptions& opt);

TNormReport tnorm(const JetFunction& f, const DomainSpec& spec, const TNormOptions& opt);

} // namespace kamforge
