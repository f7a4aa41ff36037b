#pragma once

#include <Eigen/Dense>
#include <complex>
#include <map>
#include <vector>

#include "kamforge/lattice.hpp"
#include "kamforge/weights.hpp"

namespace kamforge {

using cd = std::complex<double>;
using Matrix2 = Eigen::Matrix2cd;

// 2x2 symplectic unit J = [[0,-1],[1,0]]
Matrix2 sympJ();
// real -> complex change of variables, xi = (p+iq)/sqrt2, eta = (p-iq)/sqrt2:
// w = U z with U = (1/sqrt2) [[1,1],[-i,i]]
Matrix2 cplxU();

// Matrix over Lambda x Lambda formed by 2x2 blocks, absent pairs meaning zero.
// Ordered storage keyed (row site id, col site id) keeps all reductions
// deterministic.
class BlockMatrix {
public:
    using Map = std::map<std::pair<int, int>, Matrix2>;

    BlockMatrix() = default;
    explicit BlockMatrix(const LatticeModel& model) : model_(&model) {}

    const LatticeModel& model() const { return *model_; }
    bool same_model(const BlockMatrix& o) const { return model_ == o.model_; }
    const Map& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }
    size_t nnz() const { return entries_.size(); }

    const Matrix2* find(int a, int b) const;
    Matrix2 get(int a, int b) const; // zero when absent
    void set(int a, int b, const Matrix2& m);
    void add_to(int a, int b, const Matrix2& m);
    void drop_zeros(double threshold = 1e-300);

    BlockMatrix& operator+=(const BlockMatrix& o);
    BlockMatrix& operator*=(cd s);
    BlockMatrix operator+(const BlockMatrix& o) const;
    BlockMatrix operator-(const BlockMatrix& o) const;
    BlockMatrix operator*(cd s) const;

    BlockMatrix block_transpose() const; // (tA)_a^b = t(A_b^a)
    BlockMatrix conjugate() const;
    BlockMatrix real_part() const;
    double frobenius() const;
    double max_abs() const;

private:
    const LatticeModel* model_ = nullptr;
    Map entries_;
};

BlockMatrix identity_matrix(const LatticeModel& model, const std::vector<int>& site_ids);

// |A|_{gamma,kappa}: max of weighted row sums and weighted column sums of the
// 2x2 block operator norms.
double m_norm(const BlockMatrix& A, const WeightParams& p);

// operator norm of A on Y_gamma (sigma_max of the weight-scaled dense matrix
// on the touched sites)
double op_norm(const BlockMatrix& A, double gamma1, double gamma2);

struct MatrixNormReport {
    double m_norm = 0.0;
    double op_norm = 0.0;
    double mb_norm = 0.0;
};

// ||A||_{gamma,kappa} of M^b: operator norm on Y_gamma plus the companion
// m-norm with gamma2 shifted to gamma2+kappa-m_star.
MatrixNormReport mb_norm(const BlockMatrix& A, const WeightParams& gamma, double m_star);

// (AB)_a^b = sum_c A_a^c B_c^b
BlockMatrix multiply(const BlockMatrix& A, const BlockMatrix& B);

// (A zeta)_a = sum_b A_a^b zeta_b on interleaved (p,q) vectors of length
// 2*n_sites. gamma_tilde must satisfy -gamma <= gamma_tilde <= gamma.
Eigen::VectorXcd apply(const BlockMatrix& A, const Eigen::VectorXcd& zeta,
                       const WeightParams& gamma_tilde, const WeightParams& gamma);
Eigen::VectorXcd apply_unchecked(const BlockMatrix& A, const Eigen::VectorXcd& zeta);

// Hilbert-Schmidt orthogonal projection onto span{I, J}
Matrix2 pi_project(const Matrix2& m);

// Matrix on normal form: real, blockwise symmetric, block diagonal over
// E_Delta, Pi-invariant on the Lambda_inf part.
struct NormalFormMatrix {
    BlockMatrix mat;
    DeltaParam delta;

    // worst violation of the four invariants, exact zero for projected output
    double nf_defect(const BlockDecomposition& d) const;
};

NormalFormMatrix nf_project(const BlockMatrix& A, const BlockDecomposition& d);

// congruence by the per-site U (quadratic-form convention): entry (a,b) ->
// tU_a M U_b with U on Lambda_inf sites and the identity elsewhere
BlockMatrix to_complex_form(const BlockMatrix& A);
BlockMatrix from_complex_form(const BlockMatrix& A);

} // namespace kamforge
