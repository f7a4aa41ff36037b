#include "kamforge/block_matrix.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <set>
#include <stdexcept>

namespace kamforge {

namespace {
const cd I_UNIT(0.0, 1.0);

double block_op_norm(const Matrix2& m) {
    // closed-form largest singular value of a 2x2 block
    const double a2 = std::norm(m(0, 0)) + std::norm(m(0, 1)) + std::norm(m(1, 0)) + std::norm(m(1, 1));
    const cd det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    const double d2 = std::norm(det);
    const double disc = std::max(a2 * a2 - 4.0 * d2, 0.0);
    return std::sqrt(0.5 * (a2 + std::sqrt(disc)));
}
} // namespace

Matrix2 sympJ() {
    Matrix2 j;
    j << 0, -1, 1, 0;
    return j;
}

Matrix2 cplxU() {
    const double s = 1.0 / std::sqrt(2.0);
    Matrix2 u;
    u << cd(s, 0), cd(s, 0), cd(0, -s), cd(0, s);
    return u;
}

const Matrix2* BlockMatrix::find(int a, int b) const {
    auto it = entries_.find({a, b});
    return it == entries_.end() ? nullptr : &it->second;
}

Matrix2 BlockMatrix::get(int a, int b) const {
    const Matrix2* m = find(a, b);
    return m ? *m : Matrix2::Zero();
}

void BlockMatrix::set(int a, int b, const Matrix2& m) { entries_[{a, b}] = m; }

void BlockMatrix::add_to(int a, int b, const Matrix2& m) {
    auto [it, fresh] = entries_.try_emplace({a, b}, m);
    if (!fresh) it->second += m;
}

void BlockMatrix::drop_zeros(double threshold) {
    for (auto it = entries_.begin(); it != entries_.end();) {
        if (it->second.cwiseAbs().maxCoeff() <= threshold)
            it = entries_.erase(it);
        else
            ++it;
    }
}

BlockMatrix& BlockMatrix::operator+=(const BlockMatrix& o) {
    if (!same_model(o)) throw std::invalid_argument("BlockMatrix: model mismatch");
    for (const auto& [k, m] : o.entries_) add_to(k.first, k.second, m);
    return *this;
}

BlockMatrix& BlockMatrix::operator*=(cd s) {
    for (auto& [k, m] : entries_) m *= s;
    return *this;
}

BlockMatrix BlockMatrix::operator+(const BlockMatrix& o) const {
    BlockMatrix r = *this;
    r += o;
    return r;
}

BlockMatrix BlockMatrix::operator-(const BlockMatrix& o) const {
    BlockMatrix r = *this;
    BlockMatrix neg = o;
    neg *= cd(-1.0, 0.0);
    r += neg;
    return r;
}

BlockMatrix BlockMatrix::operator*(cd s) const {
    BlockMatrix r = *this;
    r *= s;
    return r;
}

BlockMatrix BlockMatrix::block_transpose() const {
    BlockMatrix r(*model_);
    for (const auto& [k, m] : entries_) r.set(k.second, k.first, m.transpose());
    return r;
}

BlockMatrix BlockMatrix::conjugate() const {
    BlockMatrix r(*model_);
    for (const auto& [k, m] : entries_) r.set(k.first, k.second, m.conjugate());
    return r;
}

BlockMatrix BlockMatrix::real_part() const {
    BlockMatrix r(*model_);
    for (const auto& [k, m] : entries_) r.set(k.first, k.second, m.real().cast<cd>());
    return r;
}

double BlockMatrix::frobenius() const {
    double s = 0.0;
    for (const auto& [k, m] : entries_) s += m.squaredNorm();
    return std::sqrt(s);
}

double BlockMatrix::max_abs() const {
    double s = 0.0;
    for (const auto& [k, m] : entries_) s = std::max(s, m.cwiseAbs().maxCoeff());
    return s;
}

BlockMatrix identity_matrix(const LatticeModel& model, const std::vector<int>& site_ids) {
    BlockMatrix r(model);
    for (int id : site_ids) r.set(id, id, Matrix2::Identity());
    return r;
}

double m_norm(const BlockMatrix& A, const WeightParams& p) {
    std::map<int, double> row, col;
    const auto& model = A.model();
    for (const auto& [k, m] : A.entries()) {
        const double v = block_op_norm(m) * weight(model.site(k.first), model.site(k.second), p);
        row[k.first] += v;
        col[k.second] += v;
    }
    double worst = 0.0;
    for (const auto& [id, v] : row) worst = std::max(worst, v);
    for (const auto& [id, v] : col) worst = std::max(worst, v);
    return worst;
}

double op_norm(const BlockMatrix& A, double gamma1, double gamma2) {
    if (A.empty()) return 0.0;
    const auto& model = A.model();
    std::set<int> touched;
    for (const auto& [k, m] : A.entries()) {
        touched.insert(k.first);
        touched.insert(k.second);
    }
    std::map<int, int> slot;
    std::vector<double> w;
    for (int id : touched) {
        slot[id] = static_cast<int>(w.size());
        w.push_back(site_weight(model.site(id), gamma1, gamma2));
    }
    const int n = static_cast<int>(w.size());
    Eigen::MatrixXcd dense = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
    for (const auto& [k, m] : A.entries()) {
        const int i = slot[k.first], j = slot[k.second];
        dense.block<2, 2>(2 * i, 2 * j) = m * (w[i] / w[j]);
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(dense);
    return svd.singularValues()(0);
}

MatrixNormReport mb_norm(const BlockMatrix& A, const WeightParams& gamma, double m_star) {
    MatrixNormReport r;
    r.op_norm = op_norm(A, gamma.gamma1, gamma.gamma2);
    WeightParams shifted = gamma;
    shifted.gamma2 = gamma.gamma2 + gamma.kappa - m_star;
    r.m_norm = m_norm(A, shifted);
    r.mb_norm = r.op_norm + r.m_norm;
    return r;
}

BlockMatrix multiply(const BlockMatrix& A, const BlockMatrix& B) {
    if (!A.same_model(B)) throw std::invalid_argument("multiply: model mismatch");
    BlockMatrix r(A.model());
    const auto& bE = B.entries();
    for (const auto& [ka, ma] : A.entries()) {
        const int a = ka.first, c = ka.second;
        for (auto it = bE.lower_bound({c, INT32_MIN}); it != bE.end() && it->first.first == c; ++it)
            r.add_to(a, it->first.second, ma * it->second);
    }
    r.drop_zeros();
    return r;
}

Eigen::VectorXcd apply_unchecked(const BlockMatrix& A, const Eigen::VectorXcd& zeta) {
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(zeta.size());
    for (const auto& [k, m] : A.entries()) {
        out.segment<2>(2 * k.first) += m * zeta.segment<2>(2 * k.second);
    }
    return out;
}

Eigen::VectorXcd apply(const BlockMatrix& A, const Eigen::VectorXcd& zeta,
                       const WeightParams& gamma_tilde, const WeightParams& gamma) {
    if (!(gamma_tilde.gamma1 >= -gamma.gamma1 && gamma_tilde.gamma1 <= gamma.gamma1 &&
          gamma_tilde.gamma2 >= -gamma.gamma2 && gamma_tilde.gamma2 <= gamma.gamma2))
        throw std::invalid_argument("apply: gamma_tilde outside [-gamma, gamma]");
    if (zeta.size() != 2 * A.model().n_sites())
        throw std::invalid_argument("apply: vector length mismatch");
    return apply_unchecked(A, zeta);
}

Matrix2 pi_project(const Matrix2& m) {
    const cd ci = 0.5 * (m(0, 0) + m(1, 1));
    const cd cj = 0.5 * (m(1, 0) - m(0, 1));
    Matrix2 r;
    r << ci, -cj, cj, ci;
    return r;
}

NormalFormMatrix nf_project(const BlockMatrix& A, const BlockDecomposition& d) {
    const auto& model = A.model();
    std::set<std::pair<int, int>> keys;
    for (const auto& [k, m] : A.entries()) {
        keys.insert(k);
        keys.insert({k.second, k.first}); // symmetrization touches the mirror entry
    }
    BlockMatrix out(model);
    for (const auto& [a, b] : keys) {
        const int ba = d.block_of(a), bb = d.block_of(b);
        if (ba < 0 || bb < 0 || ba != bb) continue; // off-block (or tangential) entries vanish
        Matrix2 sym = 0.5 * (A.get(a, b) + A.get(b, a).transpose());
        Matrix2 re = sym.real().cast<cd>();
        if (model.role(a) == SiteRole::Elliptic && model.role(b) == SiteRole::Elliptic)
            re = pi_project(re);
        out.set(a, b, re);
    }
    out.drop_zeros();
    return NormalFormMatrix{std::move(out), d.delta()};
}

double NormalFormMatrix::nf_defect(const BlockDecomposition& d) const {
    const auto& model = mat.model();
    double worst = 0.0;
    for (const auto& [k, m] : mat.entries()) {
        const int a = k.first, b = k.second;
        worst = std::max(worst, m.imag().cwiseAbs().maxCoeff());
        const int ba = d.block_of(a), bb = d.block_of(b);
        if (ba < 0 || bb < 0 || ba != bb) worst = std::max(worst, m.cwiseAbs().maxCoeff());
        worst = std::max(worst, (m - mat.get(b, a).transpose()).cwiseAbs().maxCoeff());
        if (model.role(a) == SiteRole::Elliptic && model.role(b) == SiteRole::Elliptic)
            worst = std::max(worst, (m - pi_project(m)).cwiseAbs().maxCoeff());
    }
    return worst;
}

namespace {

BlockMatrix congruence(const BlockMatrix& A, const Matrix2& u_inf) {
    const auto& model = A.model();
    BlockMatrix r(model);
    const Matrix2 ut = u_inf.transpose();
    for (const auto& [k, m] : A.entries()) {
        const bool la = model.role(k.first) == SiteRole::Elliptic;
        const bool lb = model.role(k.second) == SiteRole::Elliptic;
        Matrix2 v = m;
        if (la) v = ut * v;
        if (lb) v = v * u_inf;
        r.set(k.first, k.second, v);
    }
    return r;
}

} // namespace

BlockMatrix to_complex_form(const BlockMatrix& A) { return congruence(A, cplxU()); }

BlockMatrix from_complex_form(const BlockMatrix& A) {
    return congruence(A, cplxU().inverse().eval());
}

} // namespace kamforge
