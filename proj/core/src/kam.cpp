#include "kamforge/kam.hpp"

#include <cmath>
#include <stdexcept>

namespace kamforge {

namespace {

double measured_d_delta(const LatticeModel& model, DeltaParam delta) {
    const auto d = decompose(model, delta);
    return std::max(d.diameter(), 1.0);
}

} // namespace

KamSchedule make_schedule(const KamConfig& cfg, double eps1, double xi1, double chi,
                          double delta1, const LatticeModel& model) {
    KamSchedule sched;
    const double log1e = std::log(1.0 / std::max(eps1, 1e-300));
    double Delta_j = std::max(cfg.delta_block, 1.0);
    double d_dj = measured_d_delta(model, DeltaParam::finite(Delta_j));
    double gamma_j = std::min(cfg.gamma1, 1.0 / d_dj);
    double eps_j = eps1, xi_j = xi1, delta_j = delta1;

    for (int j = 1; j <= cfg.max_steps; ++j) {
        ScheduleRow row;
        row.j = j;
        row.sigma_j = (0.5 + std::pow(2.0, -j)) * cfg.sigma;
        row.mu_j = (0.5 + std::pow(2.0, -j)) * cfg.mu;
        const double sigma_next = (0.5 + std::pow(2.0, -(j + 1))) * cfg.sigma;
        const double mu_next = (0.5 + std::pow(2.0, -(j + 1))) * cfg.mu;
        row.K_j = int(std::round(std::pow(double(cfg.K), j)));
        row.Delta_j = Delta_j;
        row.d_delta = d_dj;
        row.gamma_j = gamma_j;
        row.eps_j = eps_j;
        row.xi_j = xi_j;
        row.delta_j = delta_j;
        row.Delta_next = 4.0 * row.K_j * std::max(1.0 / (row.sigma_j - sigma_next), d_dj) * log1e;

        // X_j of the finite induction at N = Delta'
        row.X_j = std::pow(row.Delta_next * std::exp(gamma_j * d_dj) /
                               ((row.sigma_j - sigma_next) * (row.mu_j - mu_next)) *
                               std::log(1.0 / std::max(eps_j, 1e-300)),
                           cfg.exp2);
        // kappa_j implicitly from eps_j = kappa_j / (C X_j Y_j); the fixed point of
        // the log-affine map is solved exactly, then verified by iteration
        const double base = cfg.constant_c * row.X_j *
                            std::pow(chi + delta_j + xi_j, cfg.exp3) * eps_j;
        row.kappa_j = std::pow(base, 1.0 / (1.0 + cfg.exp3));
        {
            double kap = std::max(row.kappa_j * 2.0, 1e-12);
            int it = 0;
            for (; it < 50; ++it) {
                const double y = std::pow((chi + delta_j + xi_j) / kap, cfg.exp3);
                const double next = cfg.constant_c * row.X_j * y * eps_j;
                const double blended = std::exp((std::log(kap) * cfg.exp3 + std::log(next)) /
                                                (1.0 + cfg.exp3));
                if (std::abs(std::log(blended / kap)) < 1e-14) { kap = blended; break; }
                kap = blended;
            }
            sched.kappa_fixed_point_iters = std::max(sched.kappa_fixed_point_iters, it + 1);
        }
        row.Y_j = std::pow((chi + delta_j + xi_j) / row.kappa_j, cfg.exp3);
        sched.rows.push_back(row);

        // predicted recursion for eps, xi, delta
        const double X1 = sched.rows[0].X_j, Y1 = sched.rows[0].Y_j;
        const double eps_next =
            std::pow(eps1, double(row.K_j)) * cfg.constant_c * X1 * Y1 * eps1;
        if (eps_next >= eps_j && sched.feasible) {
            sched.feasible = false;
            sched.infeasible_at = j;
        }
        delta_j = delta_j + cfg.constant_c * row.X_j * row.Y_j * eps_j;
        xi_j = xi_j + cfg.constant_c * row.X_j * row.Y_j * eps_j;
        eps_j = eps_next;
        Delta_j = row.Delta_next;
        d_dj = measured_d_delta(model, DeltaParam::finite(std::max(Delta_j, 1.0)));
        gamma_j = std::min(gamma_j, 1.0 / d_dj);
    }
    if (!sched.feasible && cfg.strict_schedule)
        throw std::runtime_error("make_schedule: predicted non-contracting at step " +
                                 std::to_string(sched.infeasible_at));
    return sched;
}

BasicStepResult basic_step(const NormalFormHamiltonian& h, const JetFunction& k_accum,
                           const PolyHamiltonian& f, const BlockDecomposition& d,
                           const BlockDecomposition& dp, const BasicStepParams& params) {
    BasicStepResult out;
    out.f_plus = f;
    const LatticeModel& model = *h.model;

    NonlinearParams np;
    np.solve = params.solve;
    np.n_theta = params.n_theta;
    np.sigma = params.sigma;
    np.sigma_p = params.sigma_p;
    np.mu = params.mu;
    np.mu_p = params.mu_p;
    np.gamma = params.gamma;
    np.m_star = params.m_star;
    np.chi = params.chi;
    np.delta = params.delta;
    np.constant_c = params.constant_c;
    np.exp2 = params.exp2;
    np.exp3 = params.exp3;
    np.d_delta = params.d_delta;
    np.tnorm = params.tnorm;
    np.residual_samples = params.residual_points;

    auto nl = solve_nonlinear(h, f, d, dp, np);
    out.report.eps_in = nl.eps;
    out.report.xi_in = nl.xi;
    out.report.X = nl.X;
    out.report.Y = nl.Y;
    out.report.kappa = params.solve.kappa;
    out.report.solver_residual = nl.total.worst_residual;
    out.report.equation_residual = nl.residual;
    out.report.min_divisor = nl.total.min_divisor;
    out.report.min_divisor_k0 = nl.total.min_divisor_k0;
    out.report.bracket_tail = nl.bracket_tail;
    DomainSpec spec_in;
    spec_in.sigma = params.sigma;
    spec_in.mu = params.mu;
    spec_in.gamma = params.gamma;
    out.report.eta = tnorm(k_accum, spec_in, params.tnorm).total;
    if (nl.total.exclusion) {
        out.report.excluded = true;
        out.report.divisor_label = nl.total.exclusion->op + " " +
                                   DivisorOperator{DivisorKind::Scalar, nl.total.exclusion->k}
                                       .label();
        return out;
    }

    out.S = nl.total.S;
    out.h_plus = nl.total.h_plus_jet(params.n_theta);

    // Lie transform of h + k + f by the time-1 flow of S, exact in the
    // polynomial class up to the caps
    PolyHamiltonian Sp = jet_to_poly(out.S, f.amplitudes(), f.caps());
    const JetFunction h_jet = h.as_jet(params.n_theta);
    PolyHamiltonian total = jet_to_poly(h_jet + k_accum, f.amplitudes(), f.caps());
    total += f;
    // f_+ = f - h_+ + sum_{m>=1} P_S^m (h+k+f)/m!; keeping the order-one part
    // of h out of the accumulated sum avoids losing the small coefficients to
    // cancellation against the large quadratic entries
    PolyHamiltonian sum = f;
    PolyHamiltonian term = total;
    double prev_gauge = total.weighted_coef_norm(params.sigma_p, params.mu_p);
    double ratio = 0.0, term_gauge = prev_gauge;
    double series_anchor = 0.0; // gauge top of the first bracket term
    for (int m = 1; m <= params.n_lie; ++m) {
        term = poisson(Sp, term);
        term *= cd(1.0 / m, 0.0);
        if (m == 1) series_anchor = term.max_term_gauge(params.sigma_p, params.mu_p);
        // floors anchored at the series head: depth whose whole contribution
        // falls below the floor is truncated, the dropped mass is reported
        term.prune_tiered(params.sigma_p, params.mu_p, series_anchor * params.lie_prune_jet,
                          series_anchor * params.lie_prune_nonjet);
        out.report.bracket_tail += term.tail_dropped();
        term.clear_tail();
        if (term.n_terms() == 0) break;
        sum += term;
        term_gauge = term.weighted_coef_norm(params.sigma_p, params.mu_p);
        if (m >= 2 && prev_gauge > 0) ratio = std::max(ratio, term_gauge / prev_gauge);
        prev_gauge = std::max(term_gauge, 1e-300);
    }
    out.report.lie_ratio = ratio;
    out.report.lie_tail = ratio < 1.0 ? term_gauge * ratio / (1.0 - ratio) : 1e300;
    if (ratio >= 0.5) {
        // Lie series contraction failed: treat as a smallness violation
        out.report.divisor_label = "lie-contraction";
        return out;
    }

    PolyHamiltonian f_plus = sum - jet_to_poly(out.h_plus, f.amplitudes(), f.caps());
    out.f_plus = f_plus;

    DomainSpec spec_out;
    spec_out.sigma = params.sigma_p;
    spec_out.mu = params.mu_p;
    spec_out.gamma = params.gamma;
    double spill = 0.0;
    const JetFunction fT_out = out.f_plus.jet(params.n_theta, &spill);
    out.report.bracket_tail += spill;
    out.report.eps_out = tnorm(fT_out, spec_out, params.tnorm).total;
    out.report.xi_out = tnorm(out.f_plus, spec_out, params.tnorm).total;

    // sampled conjugacy verification against the true flow of S
    {
        const auto pts = sample_real_domain(model, spec_out, params.residual_points,
                                            params.tnorm.seed + 31, 0.5);
        FlowOptions fo;
        fo.tol = params.flow_tol;
        const JetFunction hk = h_jet + k_accum;
        double worst = 0.0;
        for (const auto& x : pts) {
            const PhasePoint y = flow_point(out.S, 1.0, x, fo);
            const cd lhs = hk.eval(y) + f.eval(y);
            const cd rhs = hk.eval(x) + out.h_plus.eval(x) + out.f_plus.eval(x);
            worst = std::max(worst, std::abs(lhs - rhs) / (1.0 + std::abs(lhs)));
        }
        out.report.conj_residual = worst;
    }
    out.ok = true;
    return out;
}

FiniteInductionResult finite_induction(const NormalFormHamiltonian& h, const PolyHamiltonian& f,
                                       int K, const BlockDecomposition& d,
                                       const BlockDecomposition& dp, BasicStepParams params) {
    FiniteInductionResult out;
    out.h_out = h;
    out.f_out = f;
    JetFunction k_accum = JetFunction::zero(*h.model, params.n_theta);

    const double sigma0 = params.sigma, sigma1 = params.sigma_p;
    const double mu0 = params.mu, mu1 = params.mu_p;
    PolyHamiltonian f_cur = f;
    double eps_prev = 1e300;
    for (int i = 0; i < K; ++i) {
        BasicStepParams p = params;
        p.sigma = sigma0 + (sigma1 - sigma0) * double(i) / double(K);
        p.sigma_p = sigma0 + (sigma1 - sigma0) * double(i + 1) / double(K);
        p.mu = mu0 + (mu1 - mu0) * double(i) / double(K);
        p.mu_p = mu0 + (mu1 - mu0) * double(i + 1) / double(K);
        auto step = basic_step(out.h_out, k_accum, f_cur, d, dp, p);
        step.report.inner_i = i + 1;
        out.steps.push_back(step.report);
        out.last = step.report;
        if (step.report.excluded) {
            out.excluded = true;
            return out;
        }
        if (!step.ok) {
            out.stalled = true;
            return out;
        }
        out.generators.push_back(step.S);
        k_accum += step.h_plus;
        f_cur = step.f_plus;
        eps_prev = step.report.eps_out;
        (void)eps_prev;
    }
    // absorb the accumulated increments into the normal form
    const int z = k_accum.modes().zero_index();
    Eigen::VectorXd dshift(out.h_out.omega_shift.size());
    for (int a = 0; a < dshift.size(); ++a) dshift(a) = k_accum.fr(z)(a).real();
    out.h_out.omega_shift += dshift;
    out.h_out.a_corr += k_accum.fww(z);
    out.f_out = f_cur;
    return out;
}

KamResult run_kam(const NormalFormHamiltonian& h0, const PolyHamiltonian& f0,
                  const KamConfig& cfg) {
    KamResult res;
    res.h_final = h0;
    res.f_final = f0;
    const LatticeModel& model = *h0.model;

    DomainSpec spec;
    spec.sigma = cfg.sigma;
    spec.mu = cfg.mu;
    spec.gamma = WeightParams{cfg.gamma1, cfg.m_star, cfg.varkappa, 1.0};
    TNormOptions topt;
    topt.samples = cfg.tnorm_samples;
    topt.hess_samples = cfg.tnorm_hess_samples;
    topt.seed = cfg.seed;
    topt.m_star = cfg.m_star;

    double spill = 0.0;
    const JetFunction f0T = f0.jet(cfg.n_theta, &spill);
    double eps = tnorm(f0T, spec, topt).total;
    double xi = std::max(eps, tnorm(f0, spec, topt).total);
    res.eps_trail.push_back(eps);
    if (eps <= cfg.eps_tol) {
        res.verdict = KamVerdict::Converged;
        res.final_jet_norm = eps;
        return res;
    }

    res.chi = h0.consts.chi;
    res.schedule = make_schedule(cfg, eps, xi, res.chi, h0.delta, model);

    NormalFormHamiltonian h = h0;
    PolyHamiltonian f = f0;
    const auto sphere_decomp = decompose(model, DeltaParam::infinite());

    for (size_t j = 0; j < res.schedule.rows.size(); ++j) {
        const ScheduleRow& row = res.schedule.rows[j];
        const auto d = decompose(model, DeltaParam::finite(std::max(row.Delta_j, 1.0)));
        const auto dp = decompose(model, DeltaParam::finite(std::max(row.Delta_next, 1.0)));

        BasicStepParams p;
        p.solve.kappa = std::min(row.kappa_j, cfg.kappa_cap_frac * h.consts.c_prime);
        p.solve.n_cap = std::min<int>(int(std::ceil(row.Delta_next)), cfg.n_theta);
        p.solve.delta_prime = row.Delta_next;
        p.solve.c_prime = h.consts.c_prime;
        p.sigma = row.sigma_j;
        p.sigma_p = (0.5 + std::pow(2.0, -(row.j + 1))) * cfg.sigma;
        p.mu = row.mu_j;
        p.mu_p = (0.5 + std::pow(2.0, -(row.j + 1))) * cfg.mu;
        p.gamma = WeightParams{row.gamma_j, cfg.m_star, cfg.varkappa, 1.0};
        p.m_star = cfg.m_star;
        p.chi = res.chi;
        p.delta = h.delta;
        p.constant_c = cfg.constant_c;
        p.exp2 = cfg.exp2;
        p.exp3 = cfg.exp3;
        p.d_delta = row.d_delta;
        p.n_theta = cfg.n_theta;
        p.n_lie = cfg.n_lie;
        p.tnorm = topt;
        p.residual_points = cfg.residual_points;

        auto fi = finite_induction(h, f, row.K_j, d, dp, p);
        for (auto& sr : fi.steps) {
            sr.outer_j = row.j;
            res.steps.push_back(sr);
            res.worst_conj_residual = std::max(res.worst_conj_residual, sr.conj_residual);
        }
        for (auto& g : fi.generators) res.generators.push_back(g);
        if (fi.excluded) {
            res.verdict = KamVerdict::Excluded;
            res.exclusion_label = fi.last.divisor_label;
            res.exclusion_step = row.j;
            return res;
        }
        if (fi.stalled) {
            res.verdict = fi.last.divisor_label == "lie-contraction"
                              ? KamVerdict::SmallnessViolation
                              : KamVerdict::Stalled;
            res.exclusion_step = row.j;
            return res;
        }

        h = fi.h_out;
        f = fi.f_out;
        h.delta = h.hypothesis_b_size(sphere_decomp);
        res.h_final = h;
        res.f_final = f;
        res.delta_final = h.delta;

        const double eps_next = fi.last.eps_out;
        res.eps_trail.push_back(eps_next);
        if (eps_next <= cfg.eps_tol) {
            res.verdict = KamVerdict::Converged;
            break;
        }
        if (eps_next >= res.eps_trail[res.eps_trail.size() - 2]) {
            res.verdict = KamVerdict::Stalled;
            res.exclusion_step = row.j;
            return res;
        }
    }
    res.final_jet_norm = res.eps_trail.back();
    if (res.verdict != KamVerdict::Converged && res.final_jet_norm <= cfg.eps_tol)
        res.verdict = KamVerdict::Converged;
    return res;
}

} // namespace kamforge
