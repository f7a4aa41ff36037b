#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kamforge/beam.hpp"
#include "kamforge/kam.hpp"

using namespace kamforge;

namespace {

BeamConfig beam_cfg(double eps, double r_lat = 6.0) {
    BeamConfig cfg;
    cfg.d_star = 1;
    cfg.r_lat = r_lat;
    cfg.mass = 1.0;
    cfg.set_a = {Site{1}};
    cfg.amplitudes = {0.25};
    cfg.vhat = {1.3};
    cfg.vhat_box = {{0.5, 1.5}};
    cfg.eps = eps;
    cfg.poly_caps.max_mode = 24;
    return cfg;
}

KamConfig kam_cfg() {
    KamConfig cfg;
    cfg.sigma = 0.5;
    cfg.mu = 0.2;
    cfg.gamma1 = 1.0;
    cfg.max_steps = 2;
    cfg.K = 2;
    cfg.n_theta = 24;
    cfg.n_lie = 6;
    cfg.tnorm_samples = 48;
    cfg.tnorm_hess_samples = 8;
    cfg.residual_points = 16;
    cfg.poly_caps.max_mode = 24;
    return cfg;
}

} // namespace

TEST_CASE("schedule: ladders, K powers, kappa fixed point") {
    auto sys = build_beam(beam_cfg(1e-6));
    auto cfg = kam_cfg();
    cfg.max_steps = 4;
    auto sched = make_schedule(cfg, 1e-6, 1e-6, 0.3, 0.0, *sys.model);
    REQUIRE(int(sched.rows.size()) == 4);
    CHECK(sched.rows[0].sigma_j == doctest::Approx(cfg.sigma));
    CHECK(sched.rows[0].K_j == 2);
    CHECK(sched.rows[1].K_j == 4);
    CHECK(sched.rows[2].K_j == 8);
    CHECK(sched.rows[2].Delta_j >= sched.rows[1].Delta_j);
    CHECK(sched.rows[2].gamma_j <= sched.rows[1].gamma_j);
    CHECK(sched.kappa_fixed_point_iters <= 50);
    for (const auto& row : sched.rows) {
        // kappa solves eps_j = kappa/(C X Y) by construction
        const double rhs = row.kappa_j / (cfg.constant_c * row.X_j * row.Y_j);
        CHECK(rhs == doctest::Approx(row.eps_j).epsilon(1e-9));
    }
    CHECK(sched.feasible);
}

TEST_CASE("run_kam with f = 0 converges at step zero") {
    auto sys = build_beam(beam_cfg(0.0));
    auto cfg = kam_cfg();
    auto res = run_kam(sys.h_up, sys.perturbation, cfg);
    CHECK(res.verdict == KamVerdict::Converged);
    CHECK(res.generators.empty());
    CHECK(res.eps_trail.size() == 1);
}

TEST_CASE("basic step contracts the jet on the beam model") {
    auto sys = build_beam(beam_cfg(1e-6));
    NormalFormHamiltonian h = sys.h_up;
    h.consts.chi = 0.3;
    const auto d = decompose(*sys.model, DeltaParam::finite(1.0));
    const auto dp = decompose(*sys.model, DeltaParam::finite(64.0));

    BasicStepParams p;
    p.solve.kappa = 5e-3;
    p.solve.n_cap = 24;
    p.solve.delta_prime = 64.0;
    p.sigma = 0.5;
    p.sigma_p = 0.4;
    p.mu = 0.2;
    p.mu_p = 0.15;
    p.gamma = WeightParams{1.0, 3.0, 1.0, 1.0};
    p.n_theta = 24;
    p.n_lie = 6;
    p.tnorm.samples = 48;
    p.tnorm.hess_samples = 8;
    p.residual_points = 12;

    JetFunction k0 = JetFunction::zero(*sys.model, 24);
    auto step = basic_step(h, k0, sys.perturbation, d, dp, p);
    REQUIRE(step.ok);
    CHECK(step.report.eps_in > 0);
    CHECK(step.report.eps_out < 1e-3 * step.report.eps_in);
    CHECK(step.report.conj_residual < 1e-7);
    CHECK(step.report.solver_residual < 1e-11);
    CHECK(step.report.lie_ratio < 0.5);
}

TEST_CASE("two outer steps contract superlinearly at a nonresonant rho") {
    auto sys = build_beam(beam_cfg(1e-6));
    NormalFormHamiltonian h = sys.h_up;
    {
        auto domain = ParamDomain::monte_carlo(1, 20, 3);
        h.consts.chi = h.measure_chi(domain.samples);
    }
    auto cfg = kam_cfg();
    auto res = run_kam(h, sys.perturbation, cfg);
    REQUIRE((res.verdict == KamVerdict::Converged || res.verdict == KamVerdict::MaxSteps));
    REQUIRE(res.eps_trail.size() >= 3);
    const double e1 = res.eps_trail[0], e2 = res.eps_trail[1], e3 = res.eps_trail[2];
    CHECK(e2 < std::pow(e1, 1.5));
    CHECK(e3 < std::pow(e2, 1.5));
    CHECK(res.worst_conj_residual < 1e-7);
}

TEST_CASE("deliberately resonant rho is excluded with the divisor named") {
    // vhat tuned so that 3 omega = lambda_2: omega = sqrt(17)/3
    auto cfg_b = beam_cfg(1e-6);
    cfg_b.vhat = {17.0 / 9.0 - 1.0};
    auto sys = build_beam(cfg_b);
    auto cfg = kam_cfg();
    cfg.kappa_cap_frac = 0.05;
    auto res = run_kam(sys.h_up, sys.perturbation, cfg);
    CHECK(res.verdict == KamVerdict::Excluded);
    CHECK(res.exclusion_label.find("3") != std::string::npos);
}
