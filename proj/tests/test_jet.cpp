#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kamforge/jet.hpp"
#include "kamforge/rng.hpp"

using namespace kamforge;

namespace {

LatticeModel model_1d() { return LatticeModel(1, 4.0, {Site{1}}, {}); }

// unit jets: the coordinate functions p_s, q_s at w slot s
JetFunction coord_p(const LatticeModel& m, int slot) {
    JetFunction f = JetFunction::zero(m, 2);
    f.fw(f.modes().zero_index())(2 * slot) = 1.0;
    return f;
}
JetFunction coord_q(const LatticeModel& m, int slot) {
    JetFunction f = JetFunction::zero(m, 2);
    f.fw(f.modes().zero_index())(2 * slot + 1) = 1.0;
    return f;
}

JetFunction rand_jet(const LatticeModel& m, Rng& rng, int n_theta, double scale,
                     double decay = 0.7) {
    JetFunction f(m, ModeSet(m.n_tangential(), n_theta));
    const int n = m.n_tangential();
    const int L = int(m.w_ids().size());
    for (int mi = 0; mi < f.modes().size(); ++mi) {
        const double damp = scale * std::pow(decay, mode_l1(f.modes().mode(mi), n));
        f.f0(mi) = damp * cd(rng.normal(), rng.normal());
        for (int a = 0; a < n; ++a) f.fr(mi)(a) = damp * cd(rng.normal(), rng.normal());
        for (int i = 0; i < 2 * L; ++i) f.fw(mi)(i) = damp * cd(rng.normal(), rng.normal());
        for (int t = 0; t < 4; ++t) {
            const int a = m.w_ids()[rng.uniform_index(L)];
            const int b = m.w_ids()[rng.uniform_index(L)];
            Matrix2 blk;
            for (int i = 0; i < 4; ++i) blk(i / 2, i % 2) = damp * cd(rng.normal(), rng.normal());
            f.fww(mi).add_to(a, b, blk);
            f.fww(mi).add_to(b, a, blk.transpose().eval());
        }
    }
    f.enforce_reality();
    return f;
}

PhasePoint rand_point(const LatticeModel& m, Rng& rng, double scale) {
    PhasePoint x = PhasePoint::zero(m);
    for (int a = 0; a < m.n_tangential(); ++a) {
        x.r(a) = scale * cd(rng.normal(), rng.normal());
        x.theta(a) = cd(rng.uniform(0, 2 * M_PI), scale * rng.normal());
    }
    for (int i = 0; i < x.w.size(); ++i) x.w(i) = scale * cd(rng.normal(), rng.normal());
    return x;
}

} // namespace

TEST_CASE("y_norm examples") {
    LatticeModel m(2, 4.0, {}, {});
    Eigen::VectorXcd zeta = Eigen::VectorXcd::Zero(2 * m.n_sites());
    std::vector<int> all;
    for (int i = 0; i < m.n_sites(); ++i) all.push_back(i);
    CHECK(y_norm(zeta, m, all, 1.0, 1.0) == 0.0);

    zeta(2 * m.id_of(Site{0, 0})) = 1.0;
    CHECK(y_norm(zeta, m, all, 2.5, 3.5) == doctest::Approx(1.0));

    zeta.setZero();
    zeta(2 * m.id_of(Site{2, 0}) + 1) = 1.0;
    CHECK(y_norm(zeta, m, all, 1.0, 1.0) == doctest::Approx(std::exp(2.0) * 2.0));
}

TEST_CASE("omega_form antisymmetry and single pair") {
    LatticeModel m = model_1d();
    Rng rng(3);
    Eigen::VectorXcd a(2 * m.n_sites()), b(2 * m.n_sites());
    for (int i = 0; i < a.size(); ++i) {
        a(i) = cd(rng.normal(), rng.normal());
        b(i) = cd(rng.normal(), rng.normal());
    }
    CHECK(std::abs(omega_form(a, a)) < 1e-12);
    CHECK(std::abs(omega_form(a, b) + omega_form(b, a)) < 1e-12);

    Eigen::VectorXcd ep = Eigen::VectorXcd::Zero(2 * m.n_sites());
    Eigen::VectorXcd eq = Eigen::VectorXcd::Zero(2 * m.n_sites());
    ep(2 * 3) = 1.0;
    eq(2 * 3 + 1) = 1.0;
    CHECK(omega_form(ep, eq) == cd(1.0, 0.0));
}

TEST_CASE("poisson pins {p,q} = +1 and the 1-site oscillator bracket") {
    LatticeModel m = model_1d();
    const int slot = 0;
    auto P = coord_p(m, slot), Q = coord_q(m, slot);
    auto pq = poisson(P, Q);
    CHECK(pq.jet.f0(pq.jet.modes().zero_index()) == cd(1.0, 0.0));
    CHECK(pq.tail == 0.0);
    // f = (p^2+q^2)/2, g = p: {f,g} = -q
    JetFunction H = JetFunction::zero(m, 2);
    const int wid = m.w_ids()[slot];
    H.fww(H.modes().zero_index()).set(wid, wid, Matrix2::Identity());
    auto br = poisson(H, P);
    const int z = br.jet.modes().zero_index();
    CHECK(std::abs(br.jet.fw(z)(2 * slot)) < 1e-15);
    CHECK(br.jet.fw(z)(2 * slot + 1) == cd(-1.0, 0.0));
}

TEST_CASE("poisson antisymmetry and evaluation consistency") {
    LatticeModel m = model_1d();
    Rng rng(7);
    for (int it = 0; it < 5; ++it) {
        auto S = rand_jet(m, rng, 3, 0.8);
        auto G = rand_jet(m, rng, 3, 0.8);
        auto sg = poisson(S, G);
        auto gs = poisson(G, S);
        CHECK((sg.jet + gs.jet).coef_norm() < 1e-12 * (1 + sg.jet.coef_norm()));
        CHECK((poisson(S, S).jet).coef_norm() < 1e-12 * (1 + S.coef_norm()));

        // value check against the defining sum of partial products
        PhasePoint x = rand_point(m, rng, 0.3);
        Eigen::VectorXcd dr1, dth1, dw1, dr2, dth2, dw2;
        S.eval_grad(x, dr1, dth1, dw1);
        G.eval_grad(x, dr2, dth2, dw2);
        cd expect = 0.0;
        for (int a = 0; a < m.n_tangential(); ++a)
            expect += dr1(a) * dth2(a) - dth1(a) * dr2(a);
        for (size_t s = 0; s < m.w_ids().size(); ++s)
            expect += dw1(2 * s) * dw2(2 * s + 1) - dw1(2 * s + 1) * dw2(2 * s);
        const cd got = sg.jet.eval(x);
        CHECK(std::abs(got - expect) < 1e-9 * (1.0 + std::abs(expect)));
    }
}

TEST_CASE("Jacobi identity on random jet triples") {
    LatticeModel m = model_1d();
    Rng rng(13);
    for (int it = 0; it < 8; ++it) {
        auto A = rand_jet(m, rng, 2, 0.5);
        auto B = rand_jet(m, rng, 2, 0.5);
        auto C = rand_jet(m, rng, 2, 0.5);
        auto lhs = poisson(A, poisson(B, C).jet).jet + poisson(B, poisson(C, A).jet).jet +
                   poisson(C, poisson(A, B).jet).jet;
        CHECK(lhs.coef_norm() < 1e-9 * (1 + A.coef_norm() * B.coef_norm() * C.coef_norm()));
    }
}

TEST_CASE("gradient and hessian match finite differences") {
    LatticeModel m = model_1d();
    Rng rng(19);
    auto f = rand_jet(m, rng, 3, 1.0);
    PhasePoint x = rand_point(m, rng, 0.2);
    Eigen::VectorXcd dr, dth, dw;
    f.eval_grad(x, dr, dth, dw);
    const double h = 1e-6;
    auto fd = [&](auto set) {
        PhasePoint xp = x, xm = x;
        set(xp, h);
        set(xm, -h);
        return (f.eval(xp) - f.eval(xm)) / (2 * h);
    };
    CHECK(std::abs(fd([&](PhasePoint& y, double e) { y.r(0) += e; }) - dr(0)) < 1e-7);
    CHECK(std::abs(fd([&](PhasePoint& y, double e) { y.theta(0) += e; }) - dth(0)) < 1e-7);
    CHECK(std::abs(fd([&](PhasePoint& y, double e) { y.w(3) += e; }) - dw(3)) < 1e-7);

    const BlockMatrix H = f.eval_hess(x);
    // d2/dtheta0 dw3
    PhasePoint xp = x, xm = x;
    xp.theta(0) += h;
    xm.theta(0) -= h;
    Eigen::VectorXcd drp, dthp, dwp, drm, dthm, dwm;
    f.eval_grad(xp, drp, dthp, dwp);
    f.eval_grad(xm, drm, dthm, dwm);
    const cd fd_mixed = (dwp(3) - dwm(3)) / (2 * h);
    const int aid = m.a_ids()[0];
    const int wid = m.w_ids()[1];
    CHECK(std::abs(H.get(aid, wid)(1, 1) - fd_mixed) < 1e-6);
}

TEST_CASE("tnorm of a constant and monotonicity in gamma") {
    LatticeModel m = model_1d();
    JetFunction f = JetFunction::zero(m, 2);
    f.f0(f.modes().zero_index()) = 2.5;
    DomainSpec spec;
    spec.sigma = 0.4;
    spec.mu = 0.3;
    spec.gamma = WeightParams{0.2, 3.0, 1.0, 2.0};
    TNormOptions opt;
    opt.samples = 32;
    opt.hess_samples = 4;
    auto rep = tnorm(f, spec, opt);
    CHECK(rep.sup_f == doctest::Approx(2.5));
    CHECK(rep.sup_grad == 0.0);
    CHECK(rep.sup_hess == 0.0);
    CHECK(rep.total == doctest::Approx(2.5));
}

TEST_CASE("y_norm monotone in gamma for random vectors") {
    LatticeModel m(2, 5.0, {}, {});
    Rng rng(29);
    std::vector<int> all;
    for (int i = 0; i < m.n_sites(); ++i) all.push_back(i);
    for (int it = 0; it < 20; ++it) {
        Eigen::VectorXcd z(2 * m.n_sites());
        for (int i = 0; i < z.size(); ++i) z(i) = cd(rng.normal(), rng.normal());
        CHECK(y_norm(z, m, all, 0.1, 0.5) <= y_norm(z, m, all, 0.3, 1.5));
    }
}
