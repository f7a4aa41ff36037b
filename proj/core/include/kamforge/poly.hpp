#pragma once

#include <Eigen/Dense>
#include <cstring>
#include <string>
#include <vector>

#include "kamforge/jet.hpp"

namespace kamforge {

// Monomial key of a polynomial Hamiltonian term
//   c * prod_a (I_a + r_a)^{m_a/2} * prod_a r_a^{p_a} * e^{i<k,theta>}
//     * prod_j z_{w_j},
// where each w factor z is xi_s = (p_s + i q_s)/sqrt2 or eta_s = (p_s - i q_s)/sqrt2
// at a transverse site slot s (code 2*s for xi, 2*s+1 for eta), sorted ascending.
// The class is closed under Poisson brackets and products, up to the caps.
struct PolyKey {
    int16_t k[4];
    int8_t m[4];
    uint8_t p[4];
    uint8_t wn = 0;
    uint8_t pad[3] = {0, 0, 0};
    uint16_t wf[8];

    PolyKey() {
        std::memset(this, 0, sizeof(PolyKey));
    }
    bool operator==(const PolyKey& o) const { return std::memcmp(this, &o, sizeof(PolyKey)) == 0; }
    bool operator<(const PolyKey& o) const { return std::memcmp(this, &o, sizeof(PolyKey)) < 0; }
};

struct PolyKeyHash {
    size_t operator()(const PolyKey& k) const {
        const unsigned char* b = reinterpret_cast<const unsigned char*>(&k);
        uint64_t h = 0xcbf29ce484222325ull;
        for (size_t i = 0; i < sizeof(PolyKey); ++i) { h ^= b[i]; h *= 0x100000001b3ull; }
        return size_t(h);
    }
};

struct PolyTerm {
    PolyKey key;
    cd c;
};

struct PolyCaps {
    int max_mode = 32;   // per-angle |k_a| cap
    int max_wdeg = 8;    // total transverse degree
    int max_p = 4;       // per-angle plain r power
    int max_m_abs = 12;  // per-angle |m| cap
    size_t max_terms = 4u << 20;
    // products drop pairs whose combined domain gauge falls this far below the
    // leading pair; the skipped mass lands in tail_dropped
    double bracket_prune_rel = 1e-18;
    double gauge_sigma = 0.5; // domain scales used by the gauge
    double gauge_mu = 0.25;
};

// Hamiltonian as an exactly evaluable polynomial over the truncated model.
// Terms are kept sorted and merged; truncation against the caps accumulates
// into tail_dropped (an l1 coefficient gauge, reported by the iteration).
class PolyHamiltonian {
public:
    PolyHamiltonian() = default;
    PolyHamiltonian(const LatticeModel& model, Eigen::VectorXd amplitudes, PolyCaps caps);

    const LatticeModel& model() const { return *model_; }
    const Eigen::VectorXd& amplitudes() const { return I_; }
    const PolyCaps& caps() const { return caps_; }
    const std::vector<PolyTerm>& terms() const { return terms_; }
    size_t n_terms() const { return terms_.size(); }
    double tail_dropped() const { return tail_; }
    void clear_tail() { tail_ = 0.0; }

    void add_term(const PolyKey& key, cd coef); // unmerged; call merge() after a batch
    void merge();

    PolyHamiltonian& operator+=(const PolyHamiltonian& o);
    PolyHamiltonian& operator*=(cd s);
    PolyHamiltonian operator+(const PolyHamiltonian& o) const;
    PolyHamiltonian operator-(const PolyHamiltonian& o) const;
    PolyHamiltonian operator*(cd s) const;

    cd eval(const PhasePoint& x) const;
    void eval_grad(const PhasePoint& x, Eigen::VectorXcd& dr, Eigen::VectorXcd& dth,
                   Eigen::VectorXcd& dw) const;
    BlockMatrix eval_hess(const PhasePoint& x) const;

    // derivative polynomials
    PolyHamiltonian d_r(int a_slot) const;
    PolyHamiltonian d_theta(int a_slot) const;
    PolyHamiltonian d_w(uint16_t code) const; // xi/eta channel

    double reality_defect() const;

    // exact 2-jet at r=0, w=0; modes beyond n_theta are counted into spill
    JetFunction jet(int n_theta, double* spill = nullptr) const;

    // l1 coefficient mass weighted for the domain (sup-norm style gauge)
    double weighted_coef_norm(double sigma, double mu) const;

    // drop terms whose weighted gauge falls below rel times the largest term
    // gauge; the dropped mass accumulates into tail_dropped
    void prune(double sigma, double mu, double rel = 1e-18);

    // absolute-floor variant with a tighter floor for the jet slice
    // (wn <= 2, sum p <= 1), whose coefficients feed the measured jets
    void prune_tiered(double sigma, double mu, double jet_floor_abs, double nonjet_floor_abs);

    // largest single-term domain gauge
    double max_term_gauge(double sigma, double mu) const;

    friend PolyHamiltonian product(const PolyHamiltonian& A, const PolyHamiltonian& B);
    friend PolyHamiltonian poisson(const PolyHamiltonian& F, const PolyHamiltonian& G);

private:
    const LatticeModel* model_ = nullptr;
    Eigen::VectorXd I_;
    PolyCaps caps_;
    std::vector<PolyTerm> terms_; // sorted by key
    double tail_ = 0.0;
};

PolyHamiltonian product(const PolyHamiltonian& A, const PolyHamiltonian& B);

// {F,G} with {p,q} = {r,theta} = +1:
//   sum_a [d_r F d_th G - d_th F d_r G] + i sum_s [d_eta F d_xi G - d_xi F d_eta G]
PolyHamiltonian poisson(const PolyHamiltonian& F, const PolyHamiltonian& G);

PolyHamiltonian jet_to_poly(const JetFunction& jet, const Eigen::VectorXd& amplitudes,
                            const PolyCaps& caps);

TNormReport tnorm(const PolyHamiltonian& f, const DomainSpec& spec, const TNormOptions& opt);

} // namespace kamforge
