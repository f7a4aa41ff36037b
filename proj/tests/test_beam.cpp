#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kamforge/beam.hpp"
#include "kamforge/flows.hpp"
#include "kamforge/rng.hpp"

using namespace kamforge;

namespace {

BeamConfig default_cfg(double eps = 1e-6, double r_lat = 4.0) {
    BeamConfig cfg;
    cfg.d_star = 1;
    cfg.r_lat = r_lat;
    cfg.mass = 1.0;
    cfg.set_a = {Site{1}};
    cfg.amplitudes = {0.25};
    cfg.vhat = {1.3};
    cfg.vhat_box = {{0.5, 1.5}};
    cfg.eps = eps;
    cfg.poly_caps.max_mode = 16;
    return cfg;
}

PhasePoint random_real_point(const LatticeModel& m, Rng& rng, double scale) {
    PhasePoint x = PhasePoint::zero(m);
    for (int a = 0; a < m.n_tangential(); ++a) {
        x.r(a) = scale * rng.normal() * 0.05;
        x.theta(a) = rng.uniform(0, 2 * M_PI);
    }
    for (int i = 0; i < x.w.size(); ++i) x.w(i) = scale * rng.normal();
    return x;
}

// quadrature oracle: eps * int_T G(u-hat(x)) dx / (2 pi)^d with G = u^4,
// u-hat evaluated directly from the definition on a trapezoid grid (exact for
// trigonometric polynomials once the grid resolves all modes)
double quadrature_P(const BeamSystem& sys, const PhasePoint& x) {
    const LatticeModel& model = *sys.model;
    const int R = int(sys.cfg.r_lat);
    const int n_grid = 16 * R + 1;
    double acc = 0.0;
    for (int g = 0; g < n_grid; ++g) {
        const double xx = 2.0 * M_PI * g / n_grid;
        cd u = 0.0;
        for (int id = 0; id < model.n_sites(); ++id) {
            const Site& s = model.site(id);
            const double lam = sys.lambda_at(s);
            const double c = 1.0 / std::sqrt(2.0 * lam);
            const cd phi = std::exp(cd(0, 1) * double(s.c[0]) * xx) / std::sqrt(2.0 * M_PI);
            const cd phin = std::exp(-cd(0, 1) * double(s.c[0]) * xx) / std::sqrt(2.0 * M_PI);
            const int a = model.a_slot(id);
            if (a >= 0) {
                const cd amp = std::sqrt(cd(sys.cfg.amplitudes[a]) + x.r(a));
                u += c * amp * (std::exp(cd(0, 1) * x.theta(a)) * phi +
                                std::exp(-cd(0, 1) * x.theta(a)) * phin);
            } else {
                const int w = model.w_slot(id);
                const cd psi = (x.w(2 * w) + cd(0, 1) * x.w(2 * w + 1)) / std::sqrt(2.0);
                const cd psib = (x.w(2 * w) - cd(0, 1) * x.w(2 * w + 1)) / std::sqrt(2.0);
                u += c * (psi * phi + psib * phin);
            }
        }
        acc += std::pow(u.real(), 4) * (2.0 * M_PI / n_grid);
    }
    return sys.cfg.eps * acc;
}

} // namespace

TEST_CASE("frequencies: lambda_2 = sqrt(17) at mass 1 and F detection") {
    auto cfg = default_cfg();
    auto sys = build_beam(cfg);
    CHECK(sys.lambda_at(Site{2}) == doctest::Approx(std::sqrt(17.0)).epsilon(1e-12));
    CHECK(sys.f_sites.empty());

    // a strongly negative override lands the site in F
    auto cfg2 = default_cfg();
    cfg2.vhat_overrides = {{Site{2}, -20.0}};
    auto sys2 = build_beam(cfg2);
    REQUIRE(sys2.f_sites.size() == 1);
    CHECK(sys2.f_sites[0] == Site{2});
    CHECK(sys2.model->f_ids().size() == 1);
    // mu < 0 means lambda = sqrt(|mu|) = 2
    CHECK(sys2.lambda_at(Site{2}) == doctest::Approx(2.0));
}

TEST_CASE("eps = 0 gives an identically zero perturbation") {
    auto cfg = default_cfg(0.0);
    auto sys = build_beam(cfg);
    CHECK(sys.perturbation.n_terms() == 0);
}

TEST_CASE("perturbation matches the quadrature oracle at random points") {
    auto cfg = default_cfg(1.0, 3.0); // eps = 1 exposes the raw integral
    auto sys = build_beam(cfg);
    Rng rng(5);
    for (int it = 0; it < 6; ++it) {
        PhasePoint x = random_real_point(*sys.model, rng, 0.3);
        const double oracle = quadrature_P(sys, x);
        const cd val = sys.perturbation.eval(x);
        CHECK(std::abs(val.imag()) < 1e-12);
        CHECK(val.real() == doctest::Approx(oracle).epsilon(1e-10));
    }
}

TEST_CASE("perturbation reality and jet spill") {
    auto sys = build_beam(default_cfg(1e-3));
    CHECK(sys.perturbation.reality_defect() < 1e-18);
    double spill = 0.0;
    auto jf = sys.perturbation.jet(8, &spill);
    CHECK(spill == 0.0);
    CHECK(jf.reality_defect() < 1e-18);
}

TEST_CASE("energy conservation of h_up along its own flow at eps = 0") {
    auto sys = build_beam(default_cfg(0.0));
    const JetFunction h = sys.h_up.as_jet(2);
    Rng rng(7);
    PhasePoint x = random_real_point(*sys.model, rng, 0.2);
    FlowOptions fo;
    fo.tol = 1e-12;
    const PhasePoint y = flow_point(h, 1.0, x, fo);
    CHECK(std::abs(h.eval(y) - h.eval(x)) < 1e-10 * (1.0 + std::abs(h.eval(x))));
}

TEST_CASE("A1 margins at mass 1/4 via calibration") {
    auto cfg = default_cfg();
    cfg.mass = 0.25;
    cfg.vhat = {0.9};
    auto sys = build_beam(cfg);
    auto rep = beam_frequencies(sys, 40, 11);
    CHECK(rep.calibration.feasible);
    CHECK(rep.a1.ok);
}
