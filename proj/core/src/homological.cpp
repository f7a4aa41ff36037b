#include "kamforge/homological.hpp"

#include <Eigen/Eigenvalues>
#include <map>
#include <cmath>

namespace kamforge {

namespace {
const cd IU(0.0, 1.0);
const double ISQ2 = 1.0 / std::sqrt(2.0);

double kdot(const ModeVec& k, const Eigen::VectorXd& omega) {
    double s = 0.0;
    for (int a = 0; a < omega.size(); ++a) s += double(k[a]) * omega(a);
    return s;
}

// prepared per-block spectral data of the current normal form
struct BlockData {
    std::vector<int> sites;
    int64_t sphere = -1;
    bool is_f = false;
    Eigen::MatrixXcd Q;        // Hermitian block (Lambda_inf)
    Eigen::MatrixXcd V;        // Q = V D V^*
    Eigen::VectorXd ev;
    Eigen::MatrixXd H;         // F block data
    Eigen::MatrixXcd HJ, JH;   // dense products with the blockwise J
};

struct SolverContext {
    const NormalFormHamiltonian* h;
    const BlockDecomposition* d;
    const BlockDecomposition* dp;
    std::vector<BlockData> blocks;
    Eigen::VectorXd omega;
    std::vector<int> site_block;     // block id per site
    std::vector<int> site_pos;       // position within the block
    BlockMatrix A;                   // full quadratic-part matrix

    SolverContext(const NormalFormHamiltonian& hh, const BlockDecomposition& dd,
                  const BlockDecomposition& ddp)
        : h(&hh), d(&dd), dp(&ddp) {
        omega = hh.omega();
        A = hh.a_matrix();
        blocks.resize(dd.n_blocks());
        site_block.assign(hh.model->n_sites(), -1);
        site_pos.assign(hh.model->n_sites(), -1);
        for (int b = 0; b < dd.n_blocks(); ++b) {
            BlockData& bd = blocks[b];
            bd.sites = dd.block(b);
            bd.sphere = dd.sphere_of(b);
            bd.is_f = b == dd.f_block();
            for (size_t i = 0; i < bd.sites.size(); ++i) {
                site_block[bd.sites[i]] = b;
                site_pos[bd.sites[i]] = int(i);
            }
            if (bd.is_f) {
                bd.H = hh.h_f();
                const int m = int(bd.H.rows());
                Eigen::MatrixXcd J = Eigen::MatrixXcd::Zero(m, m);
                for (int i = 0; 2 * i + 1 < m; ++i) J.block<2, 2>(2 * i, 2 * i) = sympJ();
                bd.HJ = bd.H.cast<cd>() * J;
                bd.JH = J * bd.H.cast<cd>();
            } else {
                bd.Q = hh.hermitian_block(bd.sites);
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(bd.Q);
                bd.V = es.eigenvectors();
                bd.ev = es.eigenvalues();
            }
        }
    }
};

std::string op_name(const char* fam, int ba, int bb = -1) {
    std::string s = fam;
    s += "[" + std::to_string(ba);
    if (bb >= 0) s += "," + std::to_string(bb);
    s += "]";
    return s;
}

} // namespace

JetFunction HomologicalSolution::h_plus_jet(int n_theta) const {
    JetFunction h = JetFunction::zero(S.model(), n_theta);
    const int z = h.modes().zero_index();
    h.f0(z) = mean_const;
    h.fr(z) = mean_r;
    h.fww(z) += B.mat;
    return h;
}

HomologicalSolution solve_linear(const NormalFormHamiltonian& h, const JetFunction& G,
                                 const BlockDecomposition& d, const BlockDecomposition& dp,
                                 const SolveParams& params) {
    const LatticeModel& model = *h.model;
    SolverContext ctx(h, d, dp);
    const int n = model.n_tangential();
    const int L = int(model.w_ids().size());
    const Matrix2 U = cplxU();
    const Matrix2 Ut = U.transpose();
    const Matrix2 Uti = Ut.inverse();
    const Matrix2 Ui = U.inverse();

    HomologicalSolution sol;
    sol.S = JetFunction(model, G.modes());
    sol.R = JetFunction(model, G.modes());
    sol.mean_r = Eigen::VectorXcd::Zero(n);
    sol.B.mat = BlockMatrix(model);
    sol.B.delta = dp.delta();

    auto note = [&](const ModeVec& k, std::string op, double div, bool small) {
        sol.diagnostics.push_back({k, op, div, small});
        bool k0 = true;
        for (int i = 0; i < 4; ++i) k0 = k0 && k[i] == 0;
        if (k0)
            sol.min_divisor_k0 = std::min(sol.min_divisor_k0, div);
        else
            sol.min_divisor = std::min(sol.min_divisor, div);
        if (small && !sol.exclusion) sol.exclusion = ExclusionSignal{k, std::move(op), div};
    };

    BlockMatrix Bc(model); // complexified B accumulator (k = 0 entries only)

    for (int mi = 0; mi < G.modes().size(); ++mi) {
        const ModeVec& k = G.modes().mode(mi);
        const int l1 = mode_l1(k, n);
        const bool k0 = l1 == 0;
        const double ko = kdot(k, ctx.omega);
        if (l1 > params.n_cap) { // truncated modes go whole into R
            sol.R.f0(mi) = G.f0(mi);
            sol.R.fr(mi) = G.fr(mi);
            sol.R.fw(mi) = G.fw(mi);
            sol.R.fww(mi) = G.fww(mi);
            continue;
        }

        // ---- scalar and r-linear components
        if (k0) {
            sol.mean_const += G.f0(mi);
            sol.mean_r += G.fr(mi);
        } else {
            note(k, "scalar", std::abs(ko), std::abs(ko) <= params.kappa);
            if (std::abs(ko) > params.kappa) {
                sol.S.f0(mi) = -IU * G.f0(mi) / ko;
                sol.S.fr(mi) = -IU * G.fr(mi) / ko;
            }
        }

        // ---- vector component
        if (G.fw(mi).cwiseAbs().maxCoeff() > 0) {
            // complexify per site: (g_xi, g_eta) = tU (g_p, g_q)
            Eigen::VectorXcd gz(2 * L);
            for (int s = 0; s < L; ++s) gz.segment<2>(2 * s) = Ut * G.fw(mi).segment<2>(2 * s);
            Eigen::VectorXcd sz = Eigen::VectorXcd::Zero(2 * L);
            for (int b = 0; b < int(ctx.blocks.size()); ++b) {
                const BlockData& bd = ctx.blocks[b];
                const int m = int(bd.sites.size());
                if (bd.is_f) {
                    // untransformed F part: (i ko - H J) s = g
                    Eigen::VectorXcd g(2 * m);
                    for (int i = 0; i < m; ++i)
                        g.segment<2>(2 * i) = G.fw(mi).segment<2>(2 * model.w_slot(bd.sites[i]));
                    Eigen::MatrixXcd M =
                        IU * ko * Eigen::MatrixXcd::Identity(2 * m, 2 * m) - bd.HJ;
                    const double div = 1.0 / inv_norm(M);
                    note(k, op_name("vecF", b), div, !k0 && div <= params.kappa);
                    if (k0 || div > params.kappa) {
                        Eigen::VectorXcd s_f = M.lu().solve(g);
                        for (int i = 0; i < m; ++i)
                            sz.segment<2>(2 * model.w_slot(bd.sites[i])) =
                                Ut * s_f.segment<2>(2 * i); // re-complexify for uniform handling
                    }
                    continue;
                }
                Eigen::VectorXcd gxi(m), geta(m);
                for (int i = 0; i < m; ++i) {
                    gxi(i) = gz(2 * model.w_slot(bd.sites[i]));
                    geta(i) = gz(2 * model.w_slot(bd.sites[i]) + 1);
                }
                // xi: S = -i (ko + tQ)^{-1} g ; eta: S = -i (ko - Q)^{-1} g
                double div = 1e300;
                for (int i = 0; i < m; ++i)
                    div = std::min({div, std::abs(ko + bd.ev(i)), std::abs(ko - bd.ev(i))});
                note(k, op_name("vec", b), div, !k0 && div <= params.kappa);
                if (!k0 && div <= params.kappa) continue;
                const Eigen::VectorXcd yxi = bd.V.transpose() * gxi;
                const Eigen::VectorXcd yeta = bd.V.adjoint() * geta;
                Eigen::VectorXcd sxi(m), seta(m);
                for (int i = 0; i < m; ++i) {
                    sxi(i) = -IU * yxi(i) / (ko + bd.ev(i));
                    seta(i) = -IU * yeta(i) / (ko - bd.ev(i));
                }
                const Eigen::VectorXcd xxi = bd.V.conjugate() * sxi;
                const Eigen::VectorXcd xeta = bd.V * seta;
                for (int i = 0; i < m; ++i) {
                    sz(2 * model.w_slot(bd.sites[i])) = xxi(i);
                    sz(2 * model.w_slot(bd.sites[i]) + 1) = xeta(i);
                }
            }
            // back to (p,q): s_w = tU^{-1} s_z per site
            for (int s = 0; s < L; ++s) sol.S.fw(mi).segment<2>(2 * s) = Uti * sz.segment<2>(2 * s);
        }

        // ---- matrix component
        if (!G.fww(mi).empty()) {
            const BlockMatrix Gc = to_complex_form(G.fww(mi));
            BlockMatrix Sc(model), Rc(model);
            // group complexified entries by block pair
            std::map<std::pair<int, int>, char> pair_seen;
            for (const auto& [key, blk] : Gc.entries())
                pair_seen[{ctx.site_block[key.first], ctx.site_block[key.second]}] = 1;

            for (const auto& [bp, dummy] : pair_seen) {
                const BlockData& ba = ctx.blocks[bp.first];
                const BlockData& bb = ctx.blocks[bp.second];
                const int ma = ba.is_f ? int(ba.H.rows()) / 2 : int(ba.sites.size());
                const int mb = bb.is_f ? int(bb.H.rows()) / 2 : int(bb.sites.size());
                // band rule on representatives
                if (!ba.is_f && !bb.is_f) {
                    const double rep_dist =
                        pseudo_dist(model.site(ba.sites[0]), model.site(bb.sites[0]));
                    if (rep_dist > params.delta_prime) {
                        for (int i = 0; i < ma; ++i)
                            for (int j = 0; j < mb; ++j) {
                                const Matrix2* e = Gc.find(ba.sites[i], bb.sites[j]);
                                if (e) Rc.add_to(ba.sites[i], bb.sites[j], *e);
                            }
                        continue;
                    }
                }
                // gather the dense complexified pair data: 2ma x 2mb
                Eigen::MatrixXcd Gd = Eigen::MatrixXcd::Zero(2 * ma, 2 * mb);
                for (int i = 0; i < ma; ++i)
                    for (int j = 0; j < mb; ++j) {
                        const Matrix2* e = Gc.find(ba.sites[i], bb.sites[j]);
                        if (e) Gd.block<2, 2>(2 * i, 2 * j) = *e;
                    }
                Eigen::MatrixXcd Sd = Eigen::MatrixXcd::Zero(2 * ma, 2 * mb);
                Eigen::MatrixXcd Rd = Eigen::MatrixXcd::Zero(2 * ma, 2 * mb);
                Eigen::MatrixXcd Bd = Eigen::MatrixXcd::Zero(2 * ma, 2 * mb);

                auto comp = [&](const Eigen::MatrixXcd& M, int x, int y) {
                    Eigen::MatrixXcd c(ma, mb);
                    for (int i = 0; i < ma; ++i)
                        for (int j = 0; j < mb; ++j) c(i, j) = M(2 * i + x, 2 * j + y);
                    return c;
                };
                auto put = [&](Eigen::MatrixXcd& M, const Eigen::MatrixXcd& c, int x, int y) {
                    for (int i = 0; i < ma; ++i)
                        for (int j = 0; j < mb; ++j) M(2 * i + x, 2 * j + y) = c(i, j);
                };

                if (!ba.is_f && !bb.is_f) {
                    const bool same_sphere = ba.sphere == bb.sphere;
                    for (int x = 0; x < 2; ++x)
                        for (int y = 0; y < 2; ++y) {
                            // component operator: ko X + s1 Q_a-side X + s2 X Q_b-side
                            const double s1 = x == 0 ? +1.0 : -1.0; // xi rows: +tQ_a
                            const double s2 = y == 0 ? +1.0 : -1.0; // xi cols: +Q_b
                            const bool diff_case = (s1 > 0) != (s2 > 0);
                            const Eigen::MatrixXcd g = comp(Gd, x, y);
                            if (k0 && diff_case && same_sphere) {
                                // resonant: route by the Delta' blocks
                                Eigen::MatrixXcd bpart = Eigen::MatrixXcd::Zero(ma, mb);
                                Eigen::MatrixXcd rpart = Eigen::MatrixXcd::Zero(ma, mb);
                                for (int i = 0; i < ma; ++i)
                                    for (int j = 0; j < mb; ++j) {
                                        if (dp.block_of(ba.sites[i]) == dp.block_of(bb.sites[j]))
                                            bpart(i, j) = g(i, j);
                                        else
                                            rpart(i, j) = g(i, j);
                                    }
                                Eigen::MatrixXcd bfull = Eigen::MatrixXcd::Zero(2 * ma, 2 * mb);
                                put(bfull, bpart, x, y);
                                for (int i = 0; i < ma; ++i)
                                    for (int j = 0; j < mb; ++j) {
                                        const Matrix2 bb2 = bfull.block<2, 2>(2 * i, 2 * j);
                                        if (bb2.cwiseAbs().maxCoeff() > 0)
                                            Bc.add_to(ba.sites[i], bb.sites[j], bb2);
                                        Matrix2 rr2 = Matrix2::Zero();
                                        rr2(x, y) = rpart(i, j);
                                        if (rr2.cwiseAbs().maxCoeff() > 0)
                                            Rc.add_to(ba.sites[i], bb.sites[j], rr2);
                                    }
                                continue;
                            }
                            // left side: s1>0 -> tQ_a = conj(V) D V^T, else -Q_a = V (-D) V^*
                            const Eigen::MatrixXcd Ul = s1 > 0 ? ba.V.conjugate() : ba.V;
                            const Eigen::MatrixXcd Uli = s1 > 0 ? Eigen::MatrixXcd(ba.V.transpose())
                                                                : Eigen::MatrixXcd(ba.V.adjoint());
                            // right side: s2>0 -> Q_b = V D V^*, else -tQ_b = conj(V)(-D) V^T
                            const Eigen::MatrixXcd Ur = s2 > 0 ? bb.V : bb.V.conjugate();
                            const Eigen::MatrixXcd Uri = s2 > 0 ? Eigen::MatrixXcd(bb.V.adjoint())
                                                                : Eigen::MatrixXcd(bb.V.transpose());
                            double div = 1e300;
                            for (int i = 0; i < ma; ++i)
                                for (int j = 0; j < mb; ++j)
                                    div = std::min(div, std::abs(ko + s1 * ba.ev(i) + s2 * bb.ev(j)));
                            const char* fam = diff_case ? "mat-" : "mat+";
                            note(k, op_name(fam, bp.first, bp.second), div,
                                 !k0 && div <= params.kappa);
                            if (!k0 && div <= params.kappa) continue;
                            const Eigen::MatrixXcd y0 = Uli * g * Ur;
                            Eigen::MatrixXcd ys(ma, mb);
                            for (int i = 0; i < ma; ++i)
                                for (int j = 0; j < mb; ++j)
                                    ys(i, j) = -IU * y0(i, j) / (ko + s1 * ba.ev(i) + s2 * bb.ev(j));
                            put(Sd, Ul * ys * Uri, x, y);
                        }
                } else if (!ba.is_f && bb.is_f) {
                    // rows complexified, columns in F coordinates; mf = 2*#F
                    const int mf = int(bb.H.rows());
                    Eigen::MatrixXcd Gf = Eigen::MatrixXcd::Zero(2 * ma, mf);
                    for (int i = 0; i < ma; ++i)
                        for (size_t j = 0; j < bb.sites.size(); ++j) {
                            const Matrix2* e = Gc.find(ba.sites[i], bb.sites[j]);
                            if (e) Gf.block<2, 2>(2 * i, 2 * j) = *e;
                        }
                    Eigen::MatrixXcd Sf = Eigen::MatrixXcd::Zero(2 * ma, mf);
                    for (int x = 0; x < 2; ++x) {
                        const double s1 = x == 0 ? +1.0 : -1.0;
                        Eigen::MatrixXcd g(ma, mf);
                        for (int i = 0; i < ma; ++i)
                            for (int j = 0; j < mf; ++j) g(i, j) = Gf(2 * i + x, j);
                        const Eigen::MatrixXcd Ul = s1 > 0 ? ba.V.conjugate() : ba.V;
                        const Eigen::MatrixXcd Uli = s1 > 0 ? Eigen::MatrixXcd(ba.V.transpose())
                                                            : Eigen::MatrixXcd(ba.V.adjoint());
                        Eigen::MatrixXcd y0 = Uli * g;
                        Eigen::MatrixXcd ys(ma, mf);
                        double div = 1e300;
                        for (int i = 0; i < ma; ++i) {
                            const Eigen::MatrixXcd M =
                                (ko + s1 * ba.ev(i)) * Eigen::MatrixXcd::Identity(mf, mf) -
                                IU * bb.JH;
                            div = std::min(div, 1.0 / inv_norm(M));
                            ys.row(i) = M.transpose().lu().solve(
                                (-IU * y0.row(i)).transpose()).transpose();
                        }
                        note(k, op_name(x == 0 ? "matxF" : "matenF", bp.first, bp.second), div,
                             !k0 && div <= params.kappa);
                        if (!k0 && div <= params.kappa) continue;
                        Eigen::MatrixXcd xs = Ul * ys;
                        for (int i = 0; i < ma; ++i)
                            for (int j = 0; j < mf; ++j) Sf(2 * i + x, j) = xs(i, j);
                    }
                    for (int i = 0; i < ma; ++i)
                        for (size_t j = 0; j < bb.sites.size(); ++j) {
                            const Matrix2 s2b = Sf.block<2, 2>(2 * i, 2 * j);
                            if (s2b.cwiseAbs().maxCoeff() > 0)
                                Sc.add_to(ba.sites[i], bb.sites[j], s2b);
                        }
                } else if (ba.is_f && !bb.is_f) {
                    const int mf = int(ba.H.rows());
                    Eigen::MatrixXcd Gf = Eigen::MatrixXcd::Zero(mf, 2 * mb);
                    for (size_t i = 0; i < ba.sites.size(); ++i)
                        for (int j = 0; j < mb; ++j) {
                            const Matrix2* e = Gc.find(ba.sites[i], bb.sites[j]);
                            if (e) Gf.block<2, 2>(2 * i, 2 * j) = *e;
                        }
                    Eigen::MatrixXcd Sf = Eigen::MatrixXcd::Zero(mf, 2 * mb);
                    for (int y = 0; y < 2; ++y) {
                        const double s2 = y == 0 ? +1.0 : -1.0;
                        Eigen::MatrixXcd g(mf, mb);
                        for (int i = 0; i < mf; ++i)
                            for (int j = 0; j < mb; ++j) g(i, j) = Gf(i, 2 * j + y);
                        const Eigen::MatrixXcd Ur = s2 > 0 ? bb.V : bb.V.conjugate();
                        const Eigen::MatrixXcd Uri = s2 > 0 ? Eigen::MatrixXcd(bb.V.adjoint())
                                                            : Eigen::MatrixXcd(bb.V.transpose());
                        Eigen::MatrixXcd y0 = g * Ur;
                        Eigen::MatrixXcd ys(mf, mb);
                        double div = 1e300;
                        for (int j = 0; j < mb; ++j) {
                            const Eigen::MatrixXcd M =
                                (ko + s2 * bb.ev(j)) * Eigen::MatrixXcd::Identity(mf, mf) +
                                IU * ba.HJ;
                            div = std::min(div, 1.0 / inv_norm(M));
                            ys.col(j) = M.lu().solve(-IU * y0.col(j));
                        }
                        note(k, op_name(y == 0 ? "matFx" : "matFen", bp.first, bp.second), div,
                             !k0 && div <= params.kappa);
                        if (!k0 && div <= params.kappa) continue;
                        Eigen::MatrixXcd xs = ys * Uri;
                        for (int i = 0; i < mf; ++i)
                            for (int j = 0; j < mb; ++j) Sf(i, 2 * j + y) = xs(i, j);
                    }
                    for (size_t i = 0; i < ba.sites.size(); ++i)
                        for (int j = 0; j < mb; ++j) {
                            const Matrix2 s2b = Sf.block<2, 2>(2 * i, 2 * j);
                            if (s2b.cwiseAbs().maxCoeff() > 0)
                                Sc.add_to(ba.sites[i], bb.sites[j], s2b);
                        }
                } else {
                    // F x F: ko X + i HJ X - i X JH = -iG, k = 0 goes whole to B
                    const int mf = int(ba.H.rows());
                    if (k0) {
                        for (size_t i = 0; i < ba.sites.size(); ++i)
                            for (size_t j = 0; j < bb.sites.size(); ++j) {
                                const Matrix2* e = Gc.find(ba.sites[i], bb.sites[j]);
                                if (e) Bc.add_to(ba.sites[i], bb.sites[j], *e);
                            }
                        continue;
                    }
                    Eigen::MatrixXcd M = ko * Eigen::MatrixXcd::Identity(mf * mf, mf * mf);
                    // materialize the ad operator by action
                    {
                        Eigen::MatrixXcd E = Eigen::MatrixXcd::Zero(mf, mf);
                        int col = 0;
                        for (int j = 0; j < mf; ++j)
                            for (int i = 0; i < mf; ++i) {
                                E(i, j) = 1.0;
                                Eigen::MatrixXcd Y = IU * ba.HJ * E - IU * E * bb.JH;
                                M.col(col) += Eigen::Map<Eigen::VectorXcd>(Y.data(), Y.size());
                                E(i, j) = 0.0;
                                ++col;
                            }
                    }
                    const double div = 1.0 / inv_norm(M);
                    note(k, op_name("matFF", bp.first, bp.second), div, div <= params.kappa);
                    if (div <= params.kappa) continue;
                    Eigen::MatrixXcd g(mf, mf);
                    for (size_t i = 0; i < ba.sites.size(); ++i)
                        for (size_t j = 0; j < bb.sites.size(); ++j) {
                            const Matrix2* e = Gc.find(ba.sites[i], bb.sites[j]);
                            g.block<2, 2>(2 * i, 2 * j) = e ? *e : Matrix2::Zero();
                        }
                    Eigen::MatrixXcd rhs = -IU * g;
                    Eigen::VectorXcd xs =
                        M.lu().solve(Eigen::Map<Eigen::VectorXcd>(rhs.data(), rhs.size()));
                    Eigen::Map<Eigen::MatrixXcd> X(xs.data(), mf, mf);
                    for (size_t i = 0; i < ba.sites.size(); ++i)
                        for (size_t j = 0; j < bb.sites.size(); ++j) {
                            const Matrix2 s2b = X.block<2, 2>(2 * i, 2 * j);
                            if (s2b.cwiseAbs().maxCoeff() > 0)
                                Sc.add_to(ba.sites[i], bb.sites[j], s2b);
                        }
                }
                // scatter the dense Lambda_inf x Lambda_inf solution
                if (!ba.is_f && !bb.is_f)
                    for (int i = 0; i < ma; ++i)
                        for (int j = 0; j < mb; ++j) {
                            const Matrix2 s2b = Sd.block<2, 2>(2 * i, 2 * j);
                            if (s2b.cwiseAbs().maxCoeff() > 0)
                                Sc.add_to(ba.sites[i], bb.sites[j], s2b);
                            const Matrix2 r2b = Rd.block<2, 2>(2 * i, 2 * j);
                            if (r2b.cwiseAbs().maxCoeff() > 0)
                                Rc.add_to(ba.sites[i], bb.sites[j], r2b);
                        }
            }
            sol.S.fww(mi) += from_complex_form(Sc);
            sol.R.fww(mi) += from_complex_form(Rc);
        }
    }

    if (!Bc.empty()) {
        const BlockMatrix Braw = from_complex_form(Bc);
        sol.B = nf_project(Braw, dp);
    }

    sol.S.enforce_reality();
    sol.R.enforce_reality();

    // ---- mode-wise residual verification in the real coordinates
    {
        const BlockMatrix& A = ctx.A;
        auto jmul_left = [&](const BlockMatrix& X) {
            BlockMatrix r(model);
            for (const auto& [key, m2] : X.entries()) r.set(key.first, key.second, sympJ() * m2);
            return r;
        };
        double worst = 0.0;
        for (int mi = 0; mi < G.modes().size(); ++mi) {
            const ModeVec& k = G.modes().mode(mi);
            if (mode_l1(k, n) > params.n_cap) continue;
            if (sol.exclusion) break; // residual claims only hold for non-excluded rho
            const cd iko = IU * kdot(k, ctx.omega);
            const bool k0 = mode_l1(k, n) == 0;
            // scalar
            {
                const cd res = iko * sol.S.f0(mi) -
                               (G.f0(mi) - (k0 ? sol.mean_const : cd(0)) - sol.R.f0(mi));
                const double scale = std::max(1.0, std::abs(G.f0(mi)));
                worst = std::max(worst, std::abs(res) / scale);
                const Eigen::VectorXcd resr =
                    iko * sol.S.fr(mi) -
                    (G.fr(mi) - (k0 ? sol.mean_r : Eigen::VectorXcd::Zero(n)) - sol.R.fr(mi));
                worst = std::max(worst, resr.cwiseAbs().maxCoeff() /
                                            std::max(1.0, G.fr(mi).cwiseAbs().maxCoeff()));
            }
            // vector: i<k,omega> S - A J S - (G - R) = 0
            {
                Eigen::VectorXcd js(sol.S.fw(mi).size());
                for (int s = 0; 2 * s + 1 < js.size(); ++s) {
                    js(2 * s) = -sol.S.fw(mi)(2 * s + 1);
                    js(2 * s + 1) = sol.S.fw(mi)(2 * s);
                }
                Eigen::VectorXcd Ajs = Eigen::VectorXcd::Zero(js.size());
                for (const auto& [key, m2] : A.entries()) {
                    const int sa = model.w_slot(key.first), sb = model.w_slot(key.second);
                    if (sa < 0 || sb < 0) continue;
                    Ajs.segment<2>(2 * sa) += m2 * js.segment<2>(2 * sb);
                }
                const Eigen::VectorXcd res = iko * sol.S.fw(mi) - Ajs - (G.fw(mi) - sol.R.fw(mi));
                worst = std::max(worst, res.cwiseAbs().maxCoeff() /
                                            std::max(1.0, G.fw(mi).cwiseAbs().maxCoeff()));
            }
            // matrix: i<k,omega> S - A J S + S J A - (G - B - R) = 0
            if (!sol.S.fww(mi).empty() || !G.fww(mi).empty()) {
                const BlockMatrix JS = jmul_left(sol.S.fww(mi));
                const BlockMatrix AJS = multiply(A, JS);
                BlockMatrix SJA = multiply(sol.S.fww(mi), jmul_left(A));
                BlockMatrix res = sol.S.fww(mi) * iko - AJS + SJA - G.fww(mi) + sol.R.fww(mi);
                if (k0) res += sol.B.mat;
                worst = std::max(worst, res.max_abs() / std::max(1.0, G.fww(mi).max_abs()));
            }
        }
        sol.worst_residual = worst;
    }
    return sol;
}

NonlinearSolution solve_nonlinear(const NormalFormHamiltonian& h, const PolyHamiltonian& f,
                                  const BlockDecomposition& d, const BlockDecomposition& dp,
                                  const NonlinearParams& params) {
    NonlinearSolution out;
    const LatticeModel& model = *h.model;
    DomainSpec spec;
    spec.sigma = params.sigma;
    spec.mu = params.mu;
    spec.gamma = params.gamma;

    double spill = 0.0;
    const JetFunction fT = f.jet(params.n_theta, &spill);
    out.bracket_tail += spill;
    out.eps = tnorm(fT, spec, params.tnorm).total;
    out.xi = std::max(out.eps, tnorm(f, spec, params.tnorm).total);

    // reported bookkeeping factors
    const double dsig = std::max(params.sigma - params.sigma_p, 1e-6);
    const double dmu = std::max(params.mu - params.mu_p, 1e-6);
    out.X = std::pow(double(params.solve.n_cap) * std::max(params.solve.delta_prime, 1.0) *
                         std::exp(params.gamma.gamma1 * params.d_delta) / (dsig * dmu),
                     params.exp2);
    out.Y = std::pow((params.chi + params.delta + out.xi) / params.solve.kappa, params.exp3);

    const PolyHamiltonian f_rem = f - jet_to_poly(fT, f.amplitudes(), f.caps());

    HomologicalSolution s0 = solve_linear(h, fT, d, dp, params.solve);
    out.stages.push_back(s0.S);
    out.total = std::move(s0);
    if (out.total.exclusion) return out;

    // stage 2: f1 = {S0, f - f^T}
    PolyHamiltonian S0p = jet_to_poly(out.stages[0], f.amplitudes(), f.caps());
    PolyHamiltonian f1 = poisson(S0p, f_rem);
    f1.prune(params.sigma, params.mu);
    out.bracket_tail += f1.tail_dropped();
    const JetFunction f1T = f1.jet(params.n_theta, &spill);
    out.bracket_tail += spill;
    HomologicalSolution s1 = solve_linear(h, f1T, d, dp, params.solve);
    out.stages.push_back(s1.S);
    if (s1.exclusion) {
        out.total.exclusion = s1.exclusion;
        return out;
    }

    // stage 3: f2 = {S1, f - f^T}
    PolyHamiltonian S1p = jet_to_poly(s1.S, f.amplitudes(), f.caps());
    PolyHamiltonian f2 = poisson(S1p, f_rem);
    f2.prune(params.sigma, params.mu);
    out.bracket_tail += f2.tail_dropped();
    const JetFunction f2T = f2.jet(params.n_theta, &spill);
    out.bracket_tail += spill;
    HomologicalSolution s2 = solve_linear(h, f2T, d, dp, params.solve);
    out.stages.push_back(s2.S);
    if (s2.exclusion) {
        out.total.exclusion = s2.exclusion;
        return out;
    }

    // aggregate
    out.total.S = out.stages[0] + s1.S + s2.S;
    out.total.R = out.total.R + s1.R + s2.R;
    out.total.mean_const += s1.mean_const + s2.mean_const;
    out.total.mean_r += s1.mean_r + s2.mean_r;
    BlockMatrix Bsum = out.total.B.mat + s1.B.mat + s2.B.mat;
    out.total.B = nf_project(Bsum, dp);
    out.total.worst_residual =
        std::max({out.total.worst_residual, s1.worst_residual, s2.worst_residual});
    out.total.min_divisor = std::min({out.total.min_divisor, s1.min_divisor, s2.min_divisor});
    out.total.min_divisor_k0 =
        std::min({out.total.min_divisor_k0, s1.min_divisor_k0, s2.min_divisor_k0});
    for (const auto& dg : s1.diagnostics) out.total.diagnostics.push_back(dg);
    for (const auto& dg : s2.diagnostics) out.total.diagnostics.push_back(dg);

    // sampled residual of {S,h} + {S, f-f^T}^T + f^T - h_+ - R
    {
        const JetFunction hj = h.as_jet(params.n_theta);
        const JetFunction sh = poisson(out.total.S, hj).jet;
        PolyHamiltonian Sp = jet_to_poly(out.total.S, f.amplitudes(), f.caps());
        PolyHamiltonian sf = poisson(Sp, f_rem);
        sf.prune(params.sigma, params.mu);
        const JetFunction sfT = sf.jet(2 * params.n_theta, &spill);
        const JetFunction hp = out.total.h_plus_jet(params.n_theta);
        const auto pts = sample_domain(model, spec.shrunk(params.sigma_p, params.mu_p),
                                       params.residual_samples, params.tnorm.seed + 77);
        double worst = 0.0;
        const double scale = std::max(out.eps, 1e-300);
        for (const auto& x : pts) {
            const cd lhs = sh.eval(x) + sfT.eval(x) + fT.eval(x) - hp.eval(x) -
                           out.total.R.eval(x);
            worst = std::max(worst, std::abs(lhs) / scale);
        }
        out.residual = worst;
    }
    return out;
}

} // namespace kamforge
