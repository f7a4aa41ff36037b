// kamforge command line: block geometry, small-divisor measure scans, the
// homological solver test bench, and KAM runs on the beam model.

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "kamforge/beam.hpp"
#include "kamforge/config.hpp"
#include "kamforge/report.hpp"

namespace fs = std::filesystem;
using namespace kamforge;

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_dir = "out";
    uint64_t seed = 0;
    bool seed_set = false;
    int workers = 1;
};

std::string mode_str(const ModeVec& k, int n) {
    std::string s = "(";
    for (int i = 0; i < n; ++i) s += (i ? "," : "") + std::to_string(int(k[i]));
    return s + ")";
}

BeamConfig beam_from_config(const RunConfig& cfg) {
    BeamConfig bc;
    bc.d_star = cfg.get_int_checked("lattice", "d_star", 1, [](int v) { return v >= 1 && v <= 4; },
                                    "must be between 1 and 4");
    bc.r_lat = cfg.get_double_checked("lattice", "r_lat", 8.0, [](double v) { return v > 0; },
                                      "must be positive");
    bc.mass = cfg.get_double("model", "mass", 1.0);
    bc.set_a = cfg.get_sites("model", "set_a", bc.d_star, {Site{1}});
    if (bc.set_a.size() > 4) cfg.fail("model", "set_a", "at most 4 tangential sites supported");
    auto bcast = [&](const char* key, double dflt) {
        auto v = cfg.get_doubles("model", key, {dflt});
        if (v.size() == 1) v.assign(bc.set_a.size(), v[0]);
        if (v.size() != bc.set_a.size()) cfg.fail("model", key, "length must match set_a");
        return v;
    };
    bc.amplitudes = bcast("amplitudes", 0.25);
    bc.vhat = bcast("vhat", 1.3);
    auto box = cfg.get_doubles("model", "vhat_box", {0.5, 1.5});
    if (box.size() == 2) {
        for (size_t i = 0; i < bc.set_a.size(); ++i) bc.vhat_box.emplace_back(box[0], box[1]);
    } else if (box.size() == 2 * bc.set_a.size()) {
        for (size_t i = 0; i < bc.set_a.size(); ++i)
            bc.vhat_box.emplace_back(box[2 * i], box[2 * i + 1]);
    } else {
        cfg.fail("model", "vhat_box", "need 'lo hi' or one pair per tangential site");
    }
    bc.eps = cfg.get_double("model", "eps", 1e-6);
    if (cfg.has("model", "vhat_override_site")) {
        const auto sites =
            cfg.get_sites("model", "vhat_override_site", bc.d_star, {});
        const auto vals = cfg.get_doubles("model", "vhat_override_value", {});
        if (sites.size() != vals.size())
            cfg.fail("model", "vhat_override_value", "length must match vhat_override_site");
        for (size_t i = 0; i < sites.size(); ++i) bc.vhat_overrides.emplace_back(sites[i], vals[i]);
    }
    bc.poly_caps.max_mode = cfg.get_int("kam", "n_theta", 32);
    return bc;
}

KamConfig kam_from_config(const RunConfig& cfg, uint64_t seed) {
    KamConfig kc;
    kc.sigma = cfg.get_double_checked("kam", "sigma", 0.5,
                                      [](double v) { return v > 0 && v <= 1; },
                                      "must be in (0, 1]");
    kc.mu = cfg.get_double_checked("kam", "mu", 0.2, [](double v) { return v > 0 && v <= 1; },
                                   "must be in (0, 1]");
    kc.gamma1 = cfg.get_double_checked("kam", "gamma1", 1.0, [](double v) { return v > 0; },
                                       "must be positive");
    kc.delta_block = cfg.get_double_checked("kam", "delta", 1.0, [](double v) { return v >= 1; },
                                            "must be >= 1");
    kc.eps_tol = cfg.get_double("kam", "eps_tol", 1e-12);
    kc.max_steps = cfg.get_int_checked("kam", "max_steps", 3, [](int v) { return v >= 1; },
                                       "must be >= 1");
    kc.K = cfg.get_int_checked("kam", "K", 2, [](int v) { return v >= 1; }, "must be >= 1");
    kc.constant_c = cfg.get_double("kam", "C", 10.0);
    kc.exp2 = cfg.get_double("kam", "exp2", 4.0);
    kc.s_star = cfg.get_int("kam", "s_star", 2);
    kc.exp3 = cfg.get_double("kam", "exp3", 4.0 * kc.s_star + 3.0);
    kc.m_star = cfg.get_double("kam", "m_star", 0.0);
    kc.varkappa = cfg.get_double("kam", "varkappa", 1.0);
    kc.n_theta = cfg.get_int("kam", "n_theta", 32);
    kc.n_lie = cfg.get_int("kam", "n_lie", 6);
    kc.kappa_cap_frac = cfg.get_double("kam", "kappa_cap_frac", 0.05);
    kc.tnorm_samples = cfg.get_int("kam", "tnorm_samples", 64);
    kc.tnorm_hess_samples = cfg.get_int("kam", "tnorm_hess_samples", 8);
    kc.residual_points = cfg.get_int("kam", "residual_points", 32);
    kc.seed = seed;
    kc.poly_caps.max_mode = kc.n_theta;
    return kc;
}

int cmd_blocks(const RunConfig& cfg, const CliOptions& cli) {
    const int d_star = cfg.get_int_checked("lattice", "d_star", 2,
                                           [](int v) { return v >= 1 && v <= 4; },
                                           "must be between 1 and 4");
    const double r_lat = cfg.get_double_checked("lattice", "r_lat", 20.0,
                                                [](double v) { return v > 0; },
                                                "must be positive");
    std::vector<double> grid = cfg.get_doubles("blocks", "delta_grid", {1, 2, 3, 4});
    const bool with_inf = cfg.get_bool("blocks", "include_infinite", false);

    TsvWriter blocks_tsv(cli.out_dir + "/blocks.tsv",
                         {"delta", "block", "sphere_norm2", "size", "diameter"});
    TsvWriter dd_tsv(cli.out_dir + "/ddelta.tsv", {"delta", "d_delta", "delta_cubed"});
    std::ofstream summary(cli.out_dir + "/blocks_summary.txt");

    std::unique_ptr<LatticeModel> model;
    try {
        model = std::make_unique<LatticeModel>(d_star, r_lat, std::vector<Site>{},
                                               std::vector<Site>{});
    } catch (const std::invalid_argument&) {
        summary << "empty truncated lattice, nothing to decompose\n";
        return 0;
    }
    double fitted_c = 0.0;
    double prev_dd = -1.0;
    bool monotone = true;
    for (double delta : grid) {
        const auto d = decompose(*model, DeltaParam::finite(delta));
        for (int b = 0; b < d.n_blocks(); ++b)
            blocks_tsv.row({TsvWriter::num(delta), TsvWriter::num(b),
                            TsvWriter::num(double(d.sphere_of(b))),
                            TsvWriter::num(int(d.block(b).size())),
                            TsvWriter::num(d.diameter_of(b))});
        const double dd = d.diameter();
        dd_tsv.row({TsvWriter::num(delta), TsvWriter::num(dd),
                    TsvWriter::num(delta * delta * delta)});
        fitted_c = std::max(fitted_c, dd / (delta * delta * delta));
        if (dd < prev_dd) monotone = false;
        prev_dd = dd;
    }
    if (with_inf) {
        const auto d = decompose(*model, DeltaParam::infinite());
        for (int b = 0; b < d.n_blocks(); ++b)
            blocks_tsv.row({"inf", TsvWriter::num(b), TsvWriter::num(double(d.sphere_of(b))),
                            TsvWriter::num(int(d.block(b).size())),
                            TsvWriter::num(d.diameter_of(b))});
    }
    summary << "d_star\t" << d_star << "\nr_lat\t" << r_lat << "\nfitted_C\t"
            << TsvWriter::num(fitted_c) << "\nmonotone\t" << (monotone ? "yes" : "no")
            << "\nexponent_bound\td_delta <= C delta^3 with C = " << TsvWriter::num(fitted_c)
            << "\n";
    log_info("blocks: fitted C = " + TsvWriter::num(fitted_c));
    return 0;
}

int cmd_measure_scan(const RunConfig& cfg, const CliOptions& cli) {
    const uint64_t seed = cli.seed_set ? cli.seed : cfg.get_u64("scan", "seed", 42);
    const int samples = cfg.get_int_checked("scan", "samples", 10000,
                                            [](int v) { return v >= 100; }, "must be >= 100");
    ScanSpec spec;
    spec.kappas = cfg.get_doubles("scan", "kappa_grid", {1e-3, 3e-3, 1e-2, 3e-2, 1e-1});
    spec.n_modes = cfg.get_int_checked("scan", "n_modes", 1, [](int v) { return v >= 1; },
                                       "must be >= 1");
    spec.include_blocks = cfg.get_bool("scan", "include_blocks", false);
    spec.include_pairs = cfg.get_bool("scan", "include_pairs", false);
    spec.pair_band = cfg.get_double("scan", "pair_band", 2.0);
    spec.max_block_norm = cfg.get_double("scan", "max_block_norm", 1e18);

    const std::string model_kind = cfg.get_string("scan", "model", "beam");
    std::unique_ptr<BeamSystem> sys;
    std::unique_ptr<LatticeModel> toy_model;
    NormalFormHamiltonian h;
    int dim_p = 1;
    if (model_kind == "scalar_toy") {
        const int d_star = cfg.get_int("lattice", "d_star", 1);
        const double r_lat = cfg.get_double("lattice", "r_lat", 3.0);
        std::vector<Site> a = cfg.get_sites("model", "set_a", d_star, {Site{1}});
        toy_model = std::make_unique<LatticeModel>(d_star, r_lat, a, std::vector<Site>{});
        h = make_toy_scalar(*toy_model, int(a.size()));
        dim_p = int(a.size());
    } else if (model_kind == "beam") {
        sys = std::make_unique<BeamSystem>(build_beam(beam_from_config(cfg)));
        h = sys->h_up;
        dim_p = h.model->n_tangential();
    } else {
        cfg.fail("scan", "model", "must be 'beam' or 'scalar_toy'");
    }

    auto domain = ParamDomain::monte_carlo(dim_p, samples, seed);
    std::unique_ptr<BlockDecomposition> dec;
    if (spec.include_blocks || spec.include_pairs)
        dec = std::make_unique<BlockDecomposition>(decompose(*h.model, DeltaParam::infinite()));
    const auto rep = scan_measure(h, spec, domain, dec.get(), cli.workers);

    TsvWriter tsv(cli.out_dir + "/exclusion.tsv",
                  {"kappa", "N", "excluded_fraction", "slope", "worst_margin"});
    for (size_t i = 0; i < rep.kappas.size(); ++i)
        tsv.row({TsvWriter::num(rep.kappas[i]), TsvWriter::num(rep.n_modes),
                 TsvWriter::num(rep.excluded_fraction[i]), TsvWriter::num(rep.slope),
                 TsvWriter::num(rep.worst_inv_norm > 0 ? 1.0 / rep.worst_inv_norm : 1e300)});
    std::ofstream summary(cli.out_dir + "/scan_summary.txt");
    summary << "model\t" << model_kind << "\nsamples\t" << samples << "\nseed\t" << seed
            << "\nslope\t" << TsvWriter::num(rep.slope) << "\n";
    log_info("measure-scan: slope = " + TsvWriter::num(rep.slope));
    return 0;
}

int cmd_homological_test(const RunConfig& cfg, const CliOptions& cli) {
    auto bc = beam_from_config(cfg);
    auto sys = build_beam(bc);
    NormalFormHamiltonian h = sys.h_up;
    const uint64_t seed = cli.seed_set ? cli.seed : cfg.get_u64("scan", "seed", 42);

    const int n_theta = cfg.get_int("homtest", "n_theta", 64);
    const double sigma = cfg.get_double("homtest", "sigma", 0.5);
    const double sigma_p = cfg.get_double("homtest", "sigma_p", 0.25);
    const double scale = cfg.get_double("homtest", "scale", 1e-4);
    NonlinearParams np;
    np.solve.kappa = cfg.get_double("homtest", "kappa", 1e-4);
    np.solve.n_cap = cfg.get_int("homtest", "n_cap", n_theta);
    np.solve.delta_prime = cfg.get_double("homtest", "delta_prime", 1e9);
    np.n_theta = n_theta;
    np.sigma = sigma;
    np.sigma_p = sigma_p;
    np.mu = cfg.get_double("homtest", "mu", 0.25);
    np.mu_p = cfg.get_double("homtest", "mu_p", 0.2);
    np.gamma = WeightParams{cfg.get_double("kam", "gamma1", 1.0), bc.d_star + 2.0, 1.0, 1.0};
    np.tnorm.samples = cfg.get_int("kam", "tnorm_samples", 48);
    np.tnorm.hess_samples = cfg.get_int("kam", "tnorm_hess_samples", 8);
    np.tnorm.seed = seed;

    // seeded random analytic jet + the beam quartic tail as the cubic source
    Rng rng(seed);
    JetFunction fT(*h.model, ModeSet(h.model->n_tangential(), n_theta));
    const int L = int(h.model->w_ids().size());
    for (int mi = 0; mi < fT.modes().size(); ++mi) {
        const double damp =
            scale * std::exp(-sigma * mode_l1(fT.modes().mode(mi), h.model->n_tangential()));
        fT.f0(mi) = damp * cd(rng.normal(), rng.normal());
        fT.fr(mi)(0) = damp * cd(rng.normal(), rng.normal());
        for (int i = 0; i < 2 * L; ++i) fT.fw(mi)(i) = damp * cd(rng.normal(), rng.normal());
        for (int t = 0; t < 4; ++t) {
            const int a = h.model->w_ids()[rng.uniform_index(L)];
            const int b = h.model->w_ids()[rng.uniform_index(L)];
            Matrix2 blk;
            for (int i = 0; i < 4; ++i) blk(i / 2, i % 2) = damp * cd(rng.normal(), rng.normal());
            fT.fww(mi).add_to(a, b, blk);
            fT.fww(mi).add_to(b, a, blk.transpose().eval());
        }
    }
    fT.enforce_reality();
    Eigen::VectorXd I(h.model->n_tangential());
    for (int a = 0; a < I.size(); ++a) I(a) = bc.amplitudes[a];
    PolyCaps caps = bc.poly_caps;
    caps.max_mode = std::max(caps.max_mode, n_theta);
    PolyHamiltonian f = jet_to_poly(fT, I, caps);
    if (sys.perturbation.n_terms()) f += sys.perturbation;

    const auto d = decompose(*h.model, DeltaParam::finite(1.0));
    const auto dp = decompose(*h.model, DeltaParam::infinite());
    auto sol = solve_nonlinear(h, f, d, dp, np);

    TsvWriter div_tsv(cli.out_dir + "/divisors.tsv", {"k", "op", "divisor", "excluded"});
    for (const auto& dg : sol.total.diagnostics)
        div_tsv.row({mode_str(dg.k, h.model->n_tangential()), dg.op, TsvWriter::num(dg.divisor),
                     dg.excluded ? "1" : "0"});

    // truncation decay of R against N
    TsvWriter rn_tsv(cli.out_dir + "/r_vs_n.tsv", {"N", "R_norm_sigma_p"});
    std::vector<double> ns = cfg.get_doubles("homtest", "n_grid", {8, 16, 32, 64});
    std::vector<double> lnR, nn;
    for (double N : ns) {
        SolveParams sp = np.solve;
        sp.n_cap = int(N);
        auto lin = solve_linear(h, fT, d, dp, sp);
        double s = 0.0;
        for (int mi = 0; mi < lin.R.modes().size(); ++mi) {
            const double w =
                std::exp(sigma_p * mode_l1(lin.R.modes().mode(mi), h.model->n_tangential()));
            s += std::abs(lin.R.f0(mi)) * w + lin.R.fr(mi).cwiseAbs().sum() * w +
                 lin.R.fw(mi).cwiseAbs().sum() * w;
        }
        rn_tsv.row({TsvWriter::num(N), TsvWriter::num(s)});
        if (s > 0) {
            nn.push_back(N);
            lnR.push_back(std::log(s));
        }
    }
    double slope = 0.0;
    if (nn.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (size_t i = 0; i < nn.size(); ++i) {
            sx += nn[i];
            sy += lnR[i];
            sxx += nn[i] * nn[i];
            sxy += nn[i] * lnR[i];
        }
        slope = (nn.size() * sxy - sx * sy) / (nn.size() * sxx - sx * sx);
    }

    std::ofstream summary(cli.out_dir + "/homological_summary.txt");
    summary << "excluded\t" << (sol.total.exclusion ? "yes" : "no") << "\n"
            << "modewise_residual\t" << TsvWriter::num(sol.total.worst_residual) << "\n"
            << "equation_residual\t" << TsvWriter::num(sol.residual) << "\n"
            << "eps\t" << TsvWriter::num(sol.eps) << "\nxi\t" << TsvWriter::num(sol.xi) << "\n"
            << "X\t" << TsvWriter::num(sol.X) << "\nY\t" << TsvWriter::num(sol.Y) << "\n"
            << "R_slope\t" << TsvWriter::num(slope) << "\nexpected_slope\t"
            << TsvWriter::num(-(sigma - sigma_p)) << "\n";
    log_info("homological-test: residual = " + TsvWriter::num(sol.residual));
    return sol.total.exclusion ? 2 : 0;
}

int run_and_log_kam(const RunConfig& cfg, const CliOptions& cli, BeamSystem& sys,
                    KamResult& res) {
    const uint64_t seed = cli.seed_set ? cli.seed : cfg.get_u64("scan", "seed", 1234);
    KamConfig kc = kam_from_config(cfg, seed);
    if (kc.m_star == 0.0) kc.m_star = sys.cfg.d_star + 2.0;
    kc.poly_caps = sys.cfg.poly_caps;

    NormalFormHamiltonian h = sys.h_up;
    {
        auto domain = ParamDomain::monte_carlo(h.model->n_tangential(), 16, seed ^ 0x5eed);
        h.consts.chi = h.measure_chi(domain.samples);
        auto cal = calibrate_a1(h, domain);
        h.consts.c = cal.c;
        h.consts.c_prime = cal.c_prime;
        auto a1 = check_A1(h, domain);
        std::ofstream a1f(cli.out_dir + "/a1_report.txt");
        a1f << "feasible\t" << (cal.feasible ? "yes" : "no") << "\nc\t" << cal.c << "\nc_prime\t"
            << cal.c_prime << "\nmargin_asymptotic\t" << a1.margin_asymptotic << "\nmargin_pairs\t"
            << a1.margin_pairs << "\nmargin_lower\t" << a1.margin_lower << "\nmargin_separation\t"
            << a1.margin_separation << "\nchi\t" << h.consts.chi << "\n";
    }

    res = run_kam(h, sys.perturbation, kc);

    TsvWriter log_tsv(cli.out_dir + "/kam_log.tsv",
                      {"outer", "inner", "eps_in", "eps_out", "xi_out", "eta", "kappa", "X", "Y",
                       "solver_residual", "equation_residual", "conj_residual", "min_divisor",
                       "bracket_tail", "lie_ratio", "excluded"});
    for (const auto& st : res.steps)
        log_tsv.row({TsvWriter::num(st.outer_j), TsvWriter::num(st.inner_i),
                     TsvWriter::num(st.eps_in), TsvWriter::num(st.eps_out),
                     TsvWriter::num(st.xi_out), TsvWriter::num(st.eta), TsvWriter::num(st.kappa),
                     TsvWriter::num(st.X), TsvWriter::num(st.Y),
                     TsvWriter::num(st.solver_residual), TsvWriter::num(st.equation_residual),
                     TsvWriter::num(st.conj_residual), TsvWriter::num(st.min_divisor),
                     TsvWriter::num(st.bracket_tail), TsvWriter::num(st.lie_ratio),
                     st.excluded ? "1" : "0"});

    std::ofstream summary(cli.out_dir + "/kam_summary.txt");
    const char* verdict = res.verdict == KamVerdict::Converged   ? "converged"
                          : res.verdict == KamVerdict::Excluded  ? "excluded"
                          : res.verdict == KamVerdict::Stalled   ? "stalled"
                          : res.verdict == KamVerdict::MaxSteps  ? "max-steps"
                                                                 : "smallness-violation";
    summary << "verdict\t" << verdict << "\n";
    summary << "eps_trail";
    for (double e : res.eps_trail) summary << "\t" << TsvWriter::num(e);
    summary << "\nfinal_jet_norm\t" << TsvWriter::num(res.final_jet_norm) << "\n"
            << "delta_final\t" << TsvWriter::num(res.delta_final) << "\n"
            << "worst_conj_residual\t" << TsvWriter::num(res.worst_conj_residual) << "\n"
            << "chi\t" << TsvWriter::num(res.chi) << "\n";
    if (res.verdict == KamVerdict::Excluded)
        summary << "exclusion\t" << res.exclusion_label << "\nexclusion_step\t"
                << res.exclusion_step << "\n";
    log_info(std::string("kam-run: verdict = ") + verdict);
    if (res.verdict == KamVerdict::Converged) return 0;
    if (res.verdict == KamVerdict::Excluded) return 2;
    return 3;
}

int cmd_kam_run(const RunConfig& cfg, const CliOptions& cli) {
    auto sys = build_beam(beam_from_config(cfg));
    KamResult res;
    return run_and_log_kam(cfg, cli, sys, res);
}

int cmd_beam_run(const RunConfig& cfg, const CliOptions& cli) {
    auto sys = build_beam(beam_from_config(cfg));
    KamResult res;
    const int code = run_and_log_kam(cfg, cli, sys, res);
    if (code != 0) return code;

    const int n_t = cfg.get_int("reconstruct", "n_t", 64);
    const int n_x = cfg.get_int("reconstruct", "n_x", 64);
    const double t_max = cfg.get_double("reconstruct", "t_max", 2.0);
    Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(sys.model->n_tangential());
    {
        auto th = cfg.get_doubles("reconstruct", "theta0",
                                  std::vector<double>(sys.model->n_tangential(), 0.0));
        for (int a = 0; a < theta0.size() && a < int(th.size()); ++a) theta0(a) = th[a];
    }
    auto rec = reconstruct_solution(sys, res, theta0, n_t, t_max, n_x);
    TsvWriter sol_tsv(cli.out_dir + "/solution.tsv", {"t", "x", "u"});
    for (int it = 0; it < n_t; ++it)
        for (int ix = 0; ix < n_x; ++ix)
            sol_tsv.row({TsvWriter::num(rec.t_grid[it]), TsvWriter::num(rec.x_grid[ix]),
                         TsvWriter::num(rec.u[it][ix])});
    auto lin = linearization_structure(sys, res);
    std::ofstream summary(cli.out_dir + "/beam_summary.txt");
    summary << "pde_residual\t" << TsvWriter::num(rec.pde_residual) << "\n"
            << "sup_distance_h\t" << TsvWriter::num(rec.sup_distance_h) << "\n"
            << "omega_drift\t" << TsvWriter::num(rec.omega_drift) << "\n"
            << "eps_final\t" << TsvWriter::num(res.final_jet_norm) << "\n"
            << "elliptic_spectrum_real_part\t" << TsvWriter::num(lin.max_real_part_elliptic)
            << "\nstable_directions\t" << lin.n_stable << "\nunstable_directions\t"
            << lin.n_unstable << "\n";
    log_info("beam-run: pde residual = " + TsvWriter::num(rec.pde_residual));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"kamforge: numerical normal forms for lattice Hamiltonians"};
    app.require_subcommand(1);

    CliOptions cli;
    app.add_option("--config", cli.config_path, "configuration file")->required();
    auto* seed_opt = app.add_option("--seed", cli.seed, "override the RNG seed");
    app.add_option("--workers", cli.workers, "worker threads for parameter scans");
    app.add_option("--out", cli.out_dir, "output directory");

    auto* c_blocks = app.add_subcommand("blocks", "block decomposition tables");
    auto* c_scan = app.add_subcommand("measure-scan", "small-divisor exclusion measure scan");
    auto* c_hom = app.add_subcommand("homological-test", "homological solver diagnostics");
    auto* c_kam = app.add_subcommand("kam-run", "KAM iteration on the beam model");
    auto* c_beam = app.add_subcommand("beam-run", "KAM run plus solution reconstruction");

    CLI11_PARSE(app, argc, argv);
    cli.seed_set = seed_opt->count() > 0;

    try {
        const RunConfig cfg = RunConfig::parse_file(cli.config_path);
        fs::create_directories(cli.out_dir);
        if (c_blocks->parsed()) return cmd_blocks(cfg, cli);
        if (c_scan->parsed()) return cmd_measure_scan(cfg, cli);
        if (c_hom->parsed()) return cmd_homological_test(cfg, cli);
        if (c_kam->parsed()) return cmd_kam_run(cfg, cli);
        if (c_beam->parsed()) return cmd_beam_run(cfg, cli);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
