#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kamforge/flows.hpp"
#include "kamforge/rng.hpp"

using namespace kamforge;

namespace {

LatticeModel small_model() { return LatticeModel(1, 2.0, {Site{1}}, {}); }

JetFunction rand_small_jet(const LatticeModel& m, Rng& rng, double scale) {
    JetFunction f(m, ModeSet(m.n_tangential(), 2));
    const int L = int(m.w_ids().size());
    for (int mi = 0; mi < f.modes().size(); ++mi) {
        f.f0(mi) = scale * cd(rng.normal(), rng.normal());
        f.fr(mi)(0) = scale * cd(rng.normal(), rng.normal());
        for (int i = 0; i < 2 * L; ++i) f.fw(mi)(i) = scale * cd(rng.normal(), rng.normal());
        for (int t = 0; t < 2; ++t) {
            const int a = m.w_ids()[rng.uniform_index(L)];
            const int b = m.w_ids()[rng.uniform_index(L)];
            Matrix2 blk;
            for (int i = 0; i < 4; ++i) blk(i / 2, i % 2) = scale * cd(rng.normal(), rng.normal());
            f.fww(mi).add_to(a, b, blk);
            f.fww(mi).add_to(b, a, blk.transpose().eval());
        }
    }
    f.enforce_reality();
    return f;
}

PhasePoint rand_real_point(const LatticeModel& m, Rng& rng, double scale) {
    PhasePoint x = PhasePoint::zero(m);
    for (int a = 0; a < m.n_tangential(); ++a) {
        x.r(a) = scale * rng.normal();
        x.theta(a) = rng.uniform(0, 2 * M_PI);
    }
    for (int i = 0; i < x.w.size(); ++i) x.w(i) = scale * rng.normal();
    return x;
}

} // namespace

TEST_CASE("zero generator is the identity") {
    LatticeModel m = small_model();
    JetFunction S = JetFunction::zero(m, 2);
    Rng rng(3);
    PhasePoint x = rand_real_point(m, rng, 0.3);
    PhasePoint y = flow_point(S, 1.0, x);
    CHECK((y.r - x.r).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((y.theta - x.theta).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((y.w - x.w).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("harmonic oscillator flow is the expected rotation") {
    LatticeModel m = small_model();
    // S = (p^2+q^2)/2 at the first transverse slot
    JetFunction S = JetFunction::zero(m, 1);
    const int wid = m.w_ids()[0];
    S.fww(S.modes().zero_index()).set(wid, wid, Matrix2::Identity());
    Rng rng(5);
    PhasePoint x = rand_real_point(m, rng, 0.4);
    const double t = 0.73;
    PhasePoint y = flow_point(S, t, x);
    const cd p = x.w(0), q = x.w(1);
    CHECK(std::abs(y.w(0) - (p * std::cos(t) - q * std::sin(t))) < 1e-10);
    CHECK(std::abs(y.w(1) - (p * std::sin(t) + q * std::cos(t))) < 1e-10);
    // energy conservation along the flow
    CHECK(std::abs(S.eval(y) - S.eval(x)) < 1e-11);
}

TEST_CASE("torus rotation from the r-part") {
    LatticeModel m = small_model();
    // S = omega r: theta flows linearly, r fixed
    JetFunction S = JetFunction::zero(m, 1);
    const double omega = 0.9;
    S.fr(S.modes().zero_index())(0) = omega;
    Rng rng(7);
    PhasePoint x = rand_real_point(m, rng, 0.2);
    PhasePoint y = flow_point(S, 1.0, x);
    CHECK(std::abs(y.theta(0) - (x.theta(0) + omega)) < 1e-12);
    CHECK(std::abs(y.r(0) - x.r(0)) < 1e-12);
}

TEST_CASE("group law and real-to-real") {
    LatticeModel m = small_model();
    Rng rng(11);
    for (int it = 0; it < 4; ++it) {
        JetFunction S = rand_small_jet(m, rng, 5e-3);
        PhasePoint x = rand_real_point(m, rng, 0.3);
        const double s = 0.4, t = 0.35;
        PhasePoint a = flow_point(S, s + t, x);
        PhasePoint b = flow_point(S, t, flow_point(S, s, x));
        CHECK((a.r - b.r).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((a.theta - b.theta).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((a.w - b.w).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(a.is_real(1e-10));
    }
}

TEST_CASE("time-1 flow differential is symplectic (finite differences)") {
    LatticeModel m = small_model();
    Rng rng(13);
    JetFunction S = rand_small_jet(m, rng, 1e-3);
    PhasePoint x = rand_real_point(m, rng, 0.2);

    const int n = int(x.r.size());
    const int N = 2 * n + int(x.w.size());
    auto pack = [&](const PhasePoint& p) {
        Eigen::VectorXcd v(N);
        for (int a = 0; a < n; ++a) {
            v(2 * a) = p.r(a);
            v(2 * a + 1) = p.theta(a);
        }
        v.tail(x.w.size()) = p.w;
        return v;
    };
    auto unpack = [&](const Eigen::VectorXcd& v) {
        PhasePoint p = PhasePoint::zero(m);
        for (int a = 0; a < n; ++a) {
            p.r(a) = v(2 * a);
            p.theta(a) = v(2 * a + 1);
        }
        p.w = v.tail(x.w.size());
        return p;
    };
    const double h = 1e-6;
    Eigen::MatrixXcd Dphi(N, N);
    const Eigen::VectorXcd x0 = pack(x);
    for (int j = 0; j < N; ++j) {
        Eigen::VectorXcd xp = x0, xm = x0;
        xp(j) += h;
        xm(j) -= h;
        const Eigen::VectorXcd yp = pack(flow_point(S, 1.0, unpack(xp)));
        const Eigen::VectorXcd ym = pack(flow_point(S, 1.0, unpack(xm)));
        Dphi.col(j) = (yp - ym) / (2 * h);
    }
    Eigen::MatrixXcd Jinv = Eigen::MatrixXcd::Zero(N, N);
    for (int s = 0; 2 * s + 1 < N; ++s) {
        Jinv(2 * s, 2 * s + 1) = 1.0;  // J^{-1} = -J = [[0,1],[-1,0]] blockwise
        Jinv(2 * s + 1, 2 * s) = -1.0;
    }
    const Eigen::MatrixXcd res = Dphi.transpose() * Jinv * Dphi - Jinv;
    CHECK(res.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("escape guard raises with the exit time") {
    LatticeModel m = small_model();
    // strong drift in one transverse direction
    JetFunction S = JetFunction::zero(m, 1);
    S.fw(S.modes().zero_index())(0) = 5.0;
    DomainSpec guard;
    guard.sigma = 0.3;
    guard.mu = 0.1;
    guard.gamma = WeightParams{0.1, 1.0, 0.0, 1.0};
    FlowOptions opt;
    opt.guard = &guard;
    opt.escape_norm = 1.0;
    PhasePoint x = PhasePoint::zero(m);
    CHECK_THROWS_AS(flow_point(S, 1.0, x, opt), FlowEscapeError);
}
