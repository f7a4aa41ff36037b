#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "kamforge/block_matrix.hpp"
#include "kamforge/rng.hpp"

using namespace kamforge;

namespace {

Matrix2 rand_block(Rng& rng) {
    Matrix2 m;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) m(i, j) = cd(rng.normal(), rng.normal());
    return m;
}

BlockMatrix rand_sparse(const LatticeModel& model, Rng& rng, int nnz) {
    BlockMatrix A(model);
    for (int i = 0; i < nnz; ++i) {
        const int a = int(rng.uniform_index(model.n_sites()));
        const int b = int(rng.uniform_index(model.n_sites()));
        A.add_to(a, b, rand_block(rng));
    }
    return A;
}

// dense oracle
Eigen::MatrixXcd densify(const BlockMatrix& A) {
    const int n = A.model().n_sites();
    Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
    for (const auto& [k, m] : A.entries()) D.block<2, 2>(2 * k.first, 2 * k.second) = m;
    return D;
}

double y_norm_like(const Eigen::VectorXcd& v, const LatticeModel& m, const WeightParams& g) {
    double s = 0.0;
    for (int id = 0; id < m.n_sites(); ++id) {
        const double w = site_weight(m.site(id), g.gamma1, g.gamma2);
        s += (std::norm(v(2 * id)) + std::norm(v(2 * id + 1))) * w * w;
    }
    return std::sqrt(s);
}

} // namespace

TEST_CASE("m_norm of zero and identity") {
    LatticeModel model(2, 4.0, {}, {});
    WeightParams p{0.2, 1.0, 0.0, 4.0};
    BlockMatrix zero(model);
    CHECK(m_norm(zero, p) == 0.0);

    std::vector<int> all;
    for (int i = 0; i < model.n_sites(); ++i) all.push_back(i);
    BlockMatrix id = identity_matrix(model, all);
    CHECK(m_norm(id, p) == doctest::Approx(4.0)); // |I|_{gamma,0} = C
}

TEST_CASE("single off-diagonal block of unit operator norm") {
    LatticeModel model(2, 4.0, {}, {});
    WeightParams p{0.0, 0.0, 0.0, 1.0};
    BlockMatrix A(model);
    Matrix2 m = Matrix2::Zero();
    m(0, 1) = 1.0;
    A.set(model.id_of(Site{1, 0}), model.id_of(Site{0, 2}), m);
    CHECK(m_norm(A, p) == doctest::Approx(1.0));
}

TEST_CASE("multiply matches the dense oracle and is associative") {
    LatticeModel model(2, 4.0, {}, {});
    Rng rng(5);
    for (int it = 0; it < 10; ++it) {
        BlockMatrix A = rand_sparse(model, rng, 20);
        BlockMatrix B = rand_sparse(model, rng, 20);
        BlockMatrix C = rand_sparse(model, rng, 20);
        const Eigen::MatrixXcd D = densify(multiply(A, B)) - densify(A) * densify(B);
        CHECK(D.cwiseAbs().maxCoeff() < 1e-12);
        const Eigen::MatrixXcd E =
            densify(multiply(multiply(A, B), C)) - densify(multiply(A, multiply(B, C)));
        CHECK(E.cwiseAbs().maxCoeff() < 1e-10);
        // A*I = A
        std::vector<int> all;
        for (int i = 0; i < model.n_sites(); ++i) all.push_back(i);
        BlockMatrix id = identity_matrix(model, all);
        CHECK((multiply(A, id) - A).max_abs() < 1e-14);
    }
}

TEST_CASE("product norm bound |AB| <= |A|_{g,0} |B|_{g,k}") {
    LatticeModel model(2, 5.0, {}, {});
    Rng rng(17);
    WeightParams g{0.25, 2.0, 1.0, 8.0};
    WeightParams g0 = g.with_kappa(0.0);
    for (int it = 0; it < 200; ++it) {
        BlockMatrix A = rand_sparse(model, rng, 15);
        BlockMatrix B = rand_sparse(model, rng, 15);
        const double lhs = m_norm(multiply(A, B), g);
        const double rhs = m_norm(A, g0) * m_norm(B, g);
        CHECK(lhs <= rhs * (1 + 1e-12));
    }
}

TEST_CASE("operator bound ||A zeta||_gt <= |A|_{g,k} ||zeta||_gt") {
    LatticeModel model(2, 5.0, {}, {});
    Rng rng(23);
    WeightParams g{0.3, 2.0, 1.0, 8.0};
    for (int it = 0; it < 100; ++it) {
        BlockMatrix A = rand_sparse(model, rng, 15);
        Eigen::VectorXcd zeta(2 * model.n_sites());
        for (int i = 0; i < zeta.size(); ++i) zeta(i) = cd(rng.normal(), rng.normal());
        for (double t : {-1.0, -0.3, 0.4, 1.0}) {
            WeightParams gt{t * g.gamma1, t * g.gamma2, g.kappa, g.Cw};
            const Eigen::VectorXcd out = apply(A, zeta, gt, g);
            std::vector<int> all;
            for (int i = 0; i < model.n_sites(); ++i) all.push_back(i);
            const double lhs = y_norm_like(out, model, gt);
            const double rhs = m_norm(A, g) * y_norm_like(zeta, model, gt);
            CHECK(lhs <= rhs * (1 + 1e-12));
        }
    }
}

TEST_CASE("transpose and conjugation preserve the m-norm") {
    LatticeModel model(2, 5.0, {}, {});
    Rng rng(31);
    WeightParams g{0.2, 1.5, 0.5, 2.0};
    for (int it = 0; it < 50; ++it) {
        BlockMatrix A = rand_sparse(model, rng, 12);
        CHECK(m_norm(A.block_transpose(), g) == doctest::Approx(m_norm(A, g)).epsilon(1e-14));
        CHECK(m_norm(A.conjugate(), g) == doctest::Approx(m_norm(A, g)).epsilon(1e-14));
    }
}

TEST_CASE("mb norm dominance over the plain operator norm") {
    LatticeModel model(2, 5.0, {}, {});
    Rng rng(37);
    WeightParams g{0.2, 3.0, 1.0, 2.0}; // gamma2 = m_star
    for (int it = 0; it < 20; ++it) {
        BlockMatrix A = rand_sparse(model, rng, 10);
        const auto rep = mb_norm(A, g, 3.0);
        CHECK(rep.op_norm <= rep.mb_norm + 1e-12);
        CHECK(rep.mb_norm == doctest::Approx(rep.op_norm + rep.m_norm));
    }
}

TEST_CASE("Pi projection formula and fixed points") {
    Matrix2 m;
    m << cd(1, 0), cd(2, 0), cd(3, 0), cd(5, 0);
    const Matrix2 pm = pi_project(m);
    // ((a+d)/2) I + ((c-b)/2) J
    CHECK(pm(0, 0) == cd(3, 0));
    CHECK(pm(1, 1) == cd(3, 0));
    CHECK(pm(1, 0) == cd(0.5, 0));
    CHECK(pm(0, 1) == cd(-0.5, 0));
    CHECK((pi_project(sympJ()) - sympJ()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((pi_project(Matrix2::Identity()) - Matrix2::Identity()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((pi_project(pm) - pm).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("nf_project produces normal form, idempotent, block Lipschitz") {
    LatticeModel model(2, 6.0, {}, {Site{7, 0}});
    auto d = decompose(model, DeltaParam::finite(2.0));
    Rng rng(41);
    for (int it = 0; it < 20; ++it) {
        BlockMatrix A = rand_sparse(model, rng, 40);
        auto nf = nf_project(A, d);
        CHECK(nf.nf_defect(d) < 1e-14);
        auto nf2 = nf_project(nf.mat, d);
        CHECK((nf2.mat - nf.mat).max_abs() < 1e-14);
        CHECK(nf.mat.frobenius() <= A.frobenius() * (1 + 1e-12));
    }
}

TEST_CASE("complex transform: identity, NF block image, round trip") {
    LatticeModel model(2, 4.0, {}, {});
    std::vector<int> all;
    for (int i = 0; i < model.n_sites(); ++i) all.push_back(i);
    BlockMatrix id = identity_matrix(model, all);
    // tU I U = [[0,1],[1,0]] on elliptic sites: xi-xi part 0, xi-eta part 1
    const BlockMatrix idc = to_complex_form(id);
    for (const auto& [k, m] : idc.entries()) {
        CHECK(std::abs(m(0, 0)) < 1e-15);
        CHECK(std::abs(m(0, 1) - cd(1, 0)) < 1e-15);
    }
    // NF block c I + s J -> xi-eta entry c - i s
    const double c = 0.7, s = -0.4;
    BlockMatrix nfb(model);
    const int a = model.id_of(Site{2, 1});
    nfb.set(a, a, (c * Matrix2::Identity() + s * sympJ()).eval());
    const BlockMatrix nfc = to_complex_form(nfb);
    CHECK(std::abs(nfc.get(a, a)(0, 0)) < 1e-15);
    CHECK(std::abs(nfc.get(a, a)(0, 1) - cd(c, -s)) < 1e-15);

    Rng rng(43);
    for (int it = 0; it < 50; ++it) {
        BlockMatrix A = rand_sparse(model, rng, 20);
        const BlockMatrix back = from_complex_form(to_complex_form(A));
        CHECK((back - A).max_abs() < 1e-13);
    }
}
