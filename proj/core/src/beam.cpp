#include "kamforge/beam.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace kamforge {

namespace {
const cd IU(0.0, 1.0);

struct Generator {
    // one choice inside a factor C_m of the mode expansion of u-hat
    bool is_a = false;
    int a_slot = -1;    // tangential index
    int theta_sign = 0; // e^{+-i theta}
    uint16_t wcode = 0; // xi/eta code for transverse choices
    double coef = 0.0;  // 1/sqrt(2 lambda)
};

} // namespace

void BeamConfig::validate() const {
    if (set_a.empty()) throw std::invalid_argument("beam: set A must be nonempty");
    if (amplitudes.size() != set_a.size())
        throw std::invalid_argument("beam: amplitudes must match set A");
    if (vhat.size() != set_a.size())
        throw std::invalid_argument("beam: vhat must match set A");
    if (vhat_box.size() != set_a.size())
        throw std::invalid_argument("beam: vhat_box must match set A");
    for (double I : amplitudes)
        if (!(I > 0)) throw std::invalid_argument("beam: amplitudes must be positive");
    for (size_t i = 0; i < set_a.size(); ++i) {
        const double n2 = double(set_a[i].norm2());
        if (!(n2 * n2 + vhat[i] > 0))
            throw std::invalid_argument("beam: mu_a <= 0 at tangential site " + set_a[i].str());
        if (!(vhat_box[i].first < vhat_box[i].second))
            throw std::invalid_argument("beam: empty vhat box at " + set_a[i].str());
        if (vhat[i] < vhat_box[i].first - 1e-12 || vhat[i] > vhat_box[i].second + 1e-12)
            throw std::invalid_argument("beam: vhat outside its box at " + set_a[i].str());
    }
    if (!(mass != 0.0)) throw std::invalid_argument("beam: mass must be nonzero");
}

double BeamSystem::vhat_at(const Site& s) const {
    for (size_t i = 0; i < cfg.set_a.size(); ++i)
        if (cfg.set_a[i] == s) return cfg.vhat[i];
    for (const auto& [site, v] : cfg.vhat_overrides)
        if (site == s) return v;
    return cfg.mass;
}

double BeamSystem::mu_at(const Site& s) const {
    const double n2 = double(s.norm2());
    return n2 * n2 + vhat_at(s);
}

double BeamSystem::lambda_at(const Site& s) const { return std::sqrt(std::abs(mu_at(s))); }

BeamSystem build_beam(const BeamConfig& cfg) {
    cfg.validate();
    BeamSystem sys;
    sys.cfg = cfg;

    // F = { a : mu_a < 0 } within the truncation
    {
        BeamSystem probe;
        probe.cfg = cfg;
        const int r = int(cfg.r_lat);
        std::vector<Site> fs;
        Site s;
        s.dim = cfg.d_star;
        std::array<int, kMaxDim> x{};
        for (int i = 0; i < cfg.d_star; ++i) x[i] = -r;
        while (true) {
            for (int i = 0; i < cfg.d_star; ++i) s.c[i] = x[i];
            bool in_a = false;
            for (const auto& a : cfg.set_a) in_a = in_a || a == s;
            if (!in_a && s.norm2() <= int64_t(cfg.r_lat * cfg.r_lat) && probe.mu_at(s) < 0)
                fs.push_back(s);
            int i = 0;
            for (; i < cfg.d_star; ++i) {
                if (++x[i] <= r) break;
                x[i] = -r;
            }
            if (i == cfg.d_star) break;
        }
        sys.f_sites = fs;
        for (const auto& f : fs)
            if (std::abs(probe.mu_at(f)) == 0.0)
                throw std::invalid_argument("beam: mu vanishes at site " + f.str());
    }
    sys.model = std::make_shared<LatticeModel>(cfg.d_star, cfg.r_lat, cfg.set_a, sys.f_sites);
    const LatticeModel& model = *sys.model;
    const int n = model.n_tangential();

    // unit-cube parameter coordinates of the run point
    sys.rho_unit = Eigen::VectorXd::Zero(n);
    std::vector<double> mid(n), half(n);
    for (int a = 0; a < n; ++a) {
        mid[a] = 0.5 * (cfg.vhat_box[a].first + cfg.vhat_box[a].second);
        half[a] = 0.5 * (cfg.vhat_box[a].second - cfg.vhat_box[a].first);
        sys.rho_unit(a) = (cfg.vhat[a] - mid[a]) / half[a];
    }

    // normal form h_up
    NormalFormHamiltonian& h = sys.h_up;
    h.model = sys.model.get();
    std::vector<double> a_norm2(n);
    for (int a = 0; a < n; ++a) a_norm2[a] = double(cfg.set_a[a].norm2());
    h.omega_up = [n, a_norm2, mid, half](const Eigen::VectorXd& rho) {
        Eigen::VectorXd w(n);
        for (int a = 0; a < n; ++a)
            w(a) = std::sqrt(a_norm2[a] * a_norm2[a] + mid[a] + half[a] * rho(a));
        return w;
    };
    {
        // lambda is parameter independent off the tangential set
        BeamSystem* self = nullptr; // values captured explicitly below
        (void)self;
        const BeamConfig cc = cfg;
        h.lambda_up = [cc](const Site& s, const Eigen::VectorXd&) {
            double v = cc.mass;
            for (const auto& [site, ov] : cc.vhat_overrides)
                if (site == s) v = ov;
            const double n2 = double(s.norm2());
            return std::sqrt(std::abs(n2 * n2 + v));
        };
        std::vector<double> f_lam;
        for (const auto& f : sys.f_sites) f_lam.push_back(sys.lambda_at(f));
        h.h_f_up = [f_lam](const Eigen::VectorXd&) {
            const int m = int(f_lam.size());
            Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2 * m, 2 * m);
            for (int i = 0; i < m; ++i) {
                H(2 * i, 2 * i) = -f_lam[i]; // (lambda/2)(v^2 - u^2) per hyperbolic site
                H(2 * i + 1, 2 * i + 1) = f_lam[i];
            }
            return H;
        };
    }
    h.rho = sys.rho_unit;
    h.omega_shift = Eigen::VectorXd::Zero(n);
    h.a_corr = BlockMatrix(model);
    h.consts.m_star = cfg.d_star + 2.0;
    h.consts.varkappa = 1.0;

    // exact expansion of eps * int u^4 dx over the truncated modes
    Eigen::VectorXd I(n);
    for (int a = 0; a < n; ++a) I(a) = cfg.amplitudes[a];
    PolyCaps caps = cfg.poly_caps;
    sys.perturbation = PolyHamiltonian(model, I, caps);
    if (cfg.eps != 0.0) {
        // generators per mode m: A-part when +-m is tangential, transverse part
        // when +-m carries a w variable
        const int S = model.n_sites();
        std::vector<std::vector<Generator>> gens(S);
        std::vector<int> site_of(S);
        for (int id = 0; id < S; ++id) {
            const Site& s = model.site(id);
            std::vector<Generator>& g = gens[id];
            const double lam = sys.lambda_at(s);
            const double c = 1.0 / std::sqrt(2.0 * lam);
            const int a_here = model.a_slot(id);
            if (a_here >= 0) {
                Generator ga;
                ga.is_a = true;
                ga.a_slot = a_here;
                ga.theta_sign = +1;
                ga.coef = c;
                g.push_back(ga);
            } else {
                Generator gw;
                gw.wcode = uint16_t(2 * model.w_slot(id)); // xi
                gw.coef = c;
                g.push_back(gw);
            }
            const int nid = model.id_of(-s);
            if (nid >= 0 && !(-s == s)) {
                const Site& ns = model.site(nid);
                const double lamn = sys.lambda_at(ns);
                const double cn = 1.0 / std::sqrt(2.0 * lamn);
                const int a_neg = model.a_slot(nid);
                if (a_neg >= 0) {
                    Generator ga;
                    ga.is_a = true;
                    ga.a_slot = a_neg;
                    ga.theta_sign = -1;
                    ga.coef = cn;
                    g.push_back(ga);
                } else {
                    Generator gw;
                    gw.wcode = uint16_t(2 * model.w_slot(nid) + 1); // eta of -m
                    gw.coef = cn;
                    g.push_back(gw);
                }
            } else if (nid >= 0 && -s == s) {
                // m = 0: psi_0 phi_0 + bar psi_0 phi_0 both land on mode 0
                Generator gw;
                gw.wcode = uint16_t(2 * model.w_slot(id) + 1);
                gw.coef = c;
                g.push_back(gw);
            }
        }
        const double norm = cfg.eps / std::pow(2.0 * M_PI, cfg.d_star);
        // ordered quadruples m1+m2+m3+m4 = 0
        for (int i1 = 0; i1 < S; ++i1)
            for (int i2 = 0; i2 < S; ++i2) {
                const Site s12 = model.site(i1) + model.site(i2);
                for (int i3 = 0; i3 < S; ++i3) {
                    const Site m4 = -(s12 + model.site(i3));
                    const int i4 = model.id_of(m4);
                    if (i4 < 0) continue;
                    for (const auto& g1 : gens[i1])
                        for (const auto& g2 : gens[i2])
                            for (const auto& g3 : gens[i3])
                                for (const auto& g4 : gens[i4]) {
                                    PolyKey key;
                                    double coef = norm;
                                    int wn = 0;
                                    uint16_t wf[4];
                                    bool ok = true;
                                    for (const Generator* g : {&g1, &g2, &g3, &g4}) {
                                        coef *= g->coef;
                                        if (g->is_a) {
                                            key.m[g->a_slot] =
                                                int8_t(key.m[g->a_slot] + 1);
                                            key.k[g->a_slot] =
                                                int16_t(key.k[g->a_slot] + g->theta_sign);
                                        } else {
                                            if (wn >= 4) { ok = false; break; }
                                            wf[wn++] = g->wcode;
                                        }
                                    }
                                    if (!ok) continue;
                                    std::sort(wf, wf + wn);
                                    key.wn = uint8_t(wn);
                                    for (int t = 0; t < wn; ++t) key.wf[t] = wf[t];
                                    sys.perturbation.add_term(key, coef);
                                }
                }
            }
        sys.perturbation.merge();
    }
    return sys;
}

BeamFrequencyReport beam_frequencies(const BeamSystem& sys, int n_param_samples, uint64_t seed) {
    BeamFrequencyReport rep;
    for (int id = 0; id < sys.model->n_sites(); ++id)
        rep.lambdas.emplace_back(sys.model->site(id), sys.lambda_at(sys.model->site(id)));
    auto domain = ParamDomain::monte_carlo(sys.model->n_tangential(), n_param_samples, seed);
    rep.calibration = calibrate_a1(sys.h_up, domain);
    NormalFormHamiltonian h = sys.h_up;
    h.consts.c = rep.calibration.c;
    h.consts.c_prime = rep.calibration.c_prime;
    rep.a1 = check_A1(h, domain);
    return rep;
}

namespace {

// u-hat value at a transformed phase point, as Fourier modes over the lattice
Eigen::VectorXcd u_modes(const BeamSystem& sys, const PhasePoint& x) {
    const LatticeModel& model = *sys.model;
    const int S = model.n_sites();
    Eigen::VectorXcd U = Eigen::VectorXcd::Zero(S);
    for (int id = 0; id < S; ++id) {
        const Site& s = model.site(id);
        const double lam = sys.lambda_at(s);
        const double c = 1.0 / std::sqrt(2.0 * lam);
        const int a = model.a_slot(id);
        if (a >= 0) {
            U(id) += c * std::sqrt(cd(sys.cfg.amplitudes[a]) + x.r(a)) *
                     std::exp(IU * x.theta(a));
        } else {
            const int w = model.w_slot(id);
            const cd psi = (x.w(2 * w) + IU * x.w(2 * w + 1)) / std::sqrt(2.0);
            U(id) += c * psi;
        }
        // the phi_{-m} contribution lands on mode -m
        const int nid = model.id_of(-s);
        if (nid >= 0) {
            const int an = model.a_slot(id);
            if (an >= 0) {
                U(nid) += c * std::sqrt(cd(sys.cfg.amplitudes[an]) + x.r(an)) *
                          std::exp(-IU * x.theta(an));
            } else {
                const int w = model.w_slot(id);
                const cd psib = (x.w(2 * w) - IU * x.w(2 * w + 1)) / std::sqrt(2.0);
                U(nid) += c * psib;
            }
        }
    }
    return U * std::pow(2.0 * M_PI, -0.5 * sys.cfg.d_star);
}

} // namespace

ReconstructResult reconstruct_solution(const BeamSystem& sys, const KamResult& run,
                                       const Eigen::VectorXd& theta0, int n_t, double t_max,
                                       int n_x) {
    if (run.verdict != KamVerdict::Converged)
        throw std::runtime_error("reconstruct_solution: run verdict is not converged");
    if (sys.cfg.d_star != 1)
        throw std::runtime_error("reconstruct_solution: implemented for d* = 1");
    const LatticeModel& model = *sys.model;
    ReconstructResult out;
    const Eigen::VectorXd omega_p = run.h_final.omega();
    {
        const Eigen::VectorXd omega0 = sys.h_up.omega();
        out.omega_drift = (omega_p - omega0).cwiseAbs().maxCoeff();
    }

    // composed transform: last generator innermost
    std::vector<JetFunction> gens(run.generators.rbegin(), run.generators.rend());
    FlowOptions fo;
    fo.tol = 1e-12;

    auto torus_modes = [&](const Eigen::VectorXd& th) {
        PhasePoint x = PhasePoint::zero(model);
        for (int a = 0; a < model.n_tangential(); ++a) x.theta(a) = th(a);
        const PhasePoint y = flow_composition(gens, x, fo);
        return u_modes(sys, y);
    };

    // time grid values of the Fourier modes
    const double dt = n_t > 1 ? t_max / (n_t - 1) : 0.0;
    std::vector<Eigen::VectorXcd> modes(n_t);
    for (int it = 0; it < n_t; ++it) {
        Eigen::VectorXd th = theta0 + (it * dt) * omega_p;
        modes[it] = torus_modes(th);
    }

    out.t_grid.resize(n_t);
    out.x_grid.resize(n_x);
    for (int it = 0; it < n_t; ++it) out.t_grid[it] = it * dt;
    for (int ix = 0; ix < n_x; ++ix) out.x_grid[ix] = 2.0 * M_PI * ix / n_x;

    const int S = model.n_sites();
    auto to_grid = [&](const Eigen::VectorXcd& m) {
        std::vector<double> vals(n_x, 0.0);
        for (int ix = 0; ix < n_x; ++ix) {
            cd v = 0.0;
            for (int id = 0; id < S; ++id) {
                const double mm = double(model.site(id).c[0]);
                v += m(id) * std::exp(IU * mm * out.x_grid[ix]);
            }
            vals[ix] = v.real();
        }
        return vals;
    };

    out.u.resize(n_t);
    for (int it = 0; it < n_t; ++it) out.u[it] = to_grid(modes[it]);

    // PDE residual u_tt + Delta^2 u + V*u + eps g(u) with spectral space part
    // and 6th order central differences in time on an auxiliary fine stencil
    const double h = std::max(1e-3, dt * 1e-3);
    double worst = 0.0;
    const int probe_t = std::min(n_t, 8);
    for (int it = 0; it < probe_t; ++it) {
        const int ti = probe_t > 1 ? it * (n_t - 1) / (probe_t - 1) : 0;
        const double t = out.t_grid[ti];
        // 7-point stencil in t
        std::vector<Eigen::VectorXcd> st(7);
        for (int s = -3; s <= 3; ++s) {
            Eigen::VectorXd th = theta0 + (t + s * h) * omega_p;
            st[s + 3] = torus_modes(th);
        }
        const Eigen::VectorXcd utt =
            (2.0 * (st[0] + st[6]) - 27.0 * (st[1] + st[5]) + 270.0 * (st[2] + st[4]) -
             490.0 * st[3]) /
            (180.0 * h * h);
        Eigen::VectorXcd lin = st[3];
        for (int id = 0; id < S; ++id) {
            const double n2 = double(model.site(id).norm2());
            lin(id) = (n2 * n2 + sys.vhat_at(model.site(id))) * st[3](id);
        }
        // g(u) = 4u^3 pointwise on the x grid
        const auto ugrid = to_grid(st[3]);
        const auto uttg = to_grid(utt);
        const auto ling = to_grid(lin);
        for (int ix = 0; ix < n_x; ++ix) {
            const double res = uttg[ix] + ling[ix] +
                               sys.cfg.eps * 4.0 * std::pow(ugrid[ix], 3);
            worst = std::max(worst, std::abs(res));
        }
    }
    out.pde_residual = worst;

    // sup_theta || u1 - u0 ||_{H^{d*}} over a theta grid
    {
        double sup = 0.0;
        const int nth = 16;
        for (int i = 0; i < nth; ++i) {
            Eigen::VectorXd th = theta0;
            th(0) += 2.0 * M_PI * i / nth;
            const Eigen::VectorXcd u1 = torus_modes(th);
            PhasePoint x0 = PhasePoint::zero(model);
            for (int a = 0; a < model.n_tangential(); ++a) x0.theta(a) = th(a);
            const Eigen::VectorXcd u0 = u_modes(sys, x0);
            double s = 0.0;
            for (int id = 0; id < S; ++id) {
                const double w = std::pow(1.0 + double(model.site(id).norm2()),
                                          double(sys.cfg.d_star));
                s += w * std::norm(u1(id) - u0(id));
            }
            sup = std::max(sup, std::sqrt(s));
        }
        out.sup_distance_h = sup;
    }
    return out;
}

LinearizationReport linearization_structure(const BeamSystem& sys, const KamResult& run) {
    LinearizationReport rep;
    const LatticeModel& model = *sys.model;
    const NormalFormHamiltonian& h = run.h_final;
    const BlockMatrix A = h.a_matrix();
    const auto d = decompose(model, DeltaParam::infinite());
    double max_re = 0.0;
    for (int b = 0; b < d.n_blocks(); ++b) {
        if (b == d.f_block()) continue;
        const auto& sites = d.block(b);
        const int m = int(sites.size());
        Eigen::MatrixXcd JA = Eigen::MatrixXcd::Zero(2 * m, 2 * m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                const Matrix2* blk = A.find(sites[i], sites[j]);
                if (blk) JA.block<2, 2>(2 * i, 2 * j) = sympJ() * (*blk);
            }
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(JA);
        for (int i = 0; i < es.eigenvalues().size(); ++i)
            max_re = std::max(max_re, std::abs(es.eigenvalues()(i).real()));
    }
    rep.max_real_part_elliptic = max_re;
    if (!model.f_ids().empty()) {
        const Eigen::MatrixXd H = h.h_f();
        const int m = int(H.rows());
        Eigen::MatrixXcd JH = Eigen::MatrixXcd::Zero(m, m);
        for (int i = 0; 2 * i + 1 < m; ++i) JH.block<2, 2>(2 * i, 2 * i) = sympJ();
        JH = JH * H.cast<cd>();
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(JH);
        for (int i = 0; i < es.eigenvalues().size(); ++i) {
            if (es.eigenvalues()(i).real() > 1e-8) ++rep.n_unstable;
            if (es.eigenvalues()(i).real() < -1e-8) ++rep.n_stable;
        }
    }
    rep.structure_ok = max_re < 1e-8 &&
                       rep.n_stable == int(model.f_ids().size()) &&
                       rep.n_unstable == int(model.f_ids().size());
    return rep;
}

} // namespace kamforge
