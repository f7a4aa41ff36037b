#include "kamforge/jet.hpp"

#include <cmath>
#include <stdexcept>

namespace kamforge {

namespace {
const cd IU(0.0, 1.0);

// e^{i k theta} tables per angle, k in [-N, N]
struct PhaseTable {
    int N;
    int n;
    std::vector<std::vector<cd>> t; // t[a][k+N]

    PhaseTable(const Eigen::VectorXcd& theta, int cutoff) : N(cutoff), n(int(theta.size())) {
        t.assign(n, std::vector<cd>(2 * N + 1));
        for (int a = 0; a < n; ++a) {
            const cd e = std::exp(IU * theta(a));
            const cd einv = 1.0 / e;
            t[a][N] = 1.0;
            for (int k = 1; k <= N; ++k) {
                t[a][N + k] = t[a][N + k - 1] * e;
                t[a][N - k] = t[a][N - k + 1] * einv;
            }
        }
    }
    cd phase(const ModeVec& k) const {
        cd p = 1.0;
        for (int a = 0; a < n; ++a) p *= t[a][N + k[a]];
        return p;
    }
};

Eigen::VectorXcd bm_apply_wslots(const BlockMatrix& A, const LatticeModel& model,
                                 const Eigen::VectorXcd& w) {
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(w.size());
    for (const auto& [k, m] : A.entries()) {
        const int sa = model.w_slot(k.first), sb = model.w_slot(k.second);
        if (sa < 0 || sb < 0) continue;
        out.segment<2>(2 * sa) += m * w.segment<2>(2 * sb);
    }
    return out;
}

cd bm_quad_wslots(const BlockMatrix& A, const LatticeModel& model, const Eigen::VectorXcd& w) {
    cd s = 0.0;
    for (const auto& [k, m] : A.entries()) {
        const int sa = model.w_slot(k.first), sb = model.w_slot(k.second);
        if (sa < 0 || sb < 0) continue;
        s += w.segment<2>(2 * sa).cwiseProduct(m * w.segment<2>(2 * sb)).sum();
    }
    return s;
}

// left-multiply every block by J
BlockMatrix j_left(const BlockMatrix& A) {
    BlockMatrix r(A.model());
    const Matrix2 J = sympJ();
    for (const auto& [k, m] : A.entries()) r.set(k.first, k.second, J * m);
    return r;
}

Eigen::VectorXcd j_vec(const Eigen::VectorXcd& v) {
    Eigen::VectorXcd r(v.size());
    for (int i = 0; 2 * i + 1 < v.size(); ++i) {
        r(2 * i) = -v(2 * i + 1);
        r(2 * i + 1) = v(2 * i);
    }
    return r;
}

} // namespace

JetFunction::JetFunction(const LatticeModel& model, ModeSet modes)
    : model_(&model), modes_(std::move(modes)) {
    const int M = modes_.size();
    const int n = model.n_tangential();
    const int L = static_cast<int>(model.w_ids().size());
    f0_ = Eigen::VectorXcd::Zero(M);
    fr_.assign(M, Eigen::VectorXcd::Zero(n));
    fw_.assign(M, Eigen::VectorXcd::Zero(2 * L));
    fww_.assign(M, BlockMatrix(model));
}

JetFunction JetFunction::zero(const LatticeModel& model, int n_theta) {
    return JetFunction(model, ModeSet(model.n_tangential(), n_theta));
}

JetFunction& JetFunction::operator+=(const JetFunction& o) {
    if (model_ != o.model_) throw std::invalid_argument("JetFunction: model mismatch");
    if (o.modes_.cutoff() > modes_.cutoff()) {
        // promote to the larger mode set
        JetFunction bigger(*model_, o.modes_);
        for (int m = 0; m < modes_.size(); ++m) {
            const int j = bigger.modes_.index_of(modes_.mode(m));
            bigger.f0_(j) = f0_(m);
            bigger.fr_[j] = fr_[m];
            bigger.fw_[j] = fw_[m];
            bigger.fww_[j] = fww_[m];
        }
        *this = std::move(bigger);
    }
    for (int m = 0; m < o.modes_.size(); ++m) {
        const int j = modes_.index_of(o.modes_.mode(m));
        f0_(j) += o.f0_(m);
        fr_[j] += o.fr_[m];
        fw_[j] += o.fw_[m];
        fww_[j] += o.fww_[m];
    }
    return *this;
}

JetFunction& JetFunction::operator*=(cd s) {
    f0_ *= s;
    for (auto& v : fr_) v *= s;
    for (auto& v : fw_) v *= s;
    for (auto& m : fww_) m *= s;
    return *this;
}

JetFunction JetFunction::operator+(const JetFunction& o) const {
    JetFunction r = *this;
    r += o;
    return r;
}

JetFunction JetFunction::operator-(const JetFunction& o) const {
    JetFunction r = *this;
    JetFunction neg = o;
    neg *= cd(-1, 0);
    r += neg;
    return r;
}

JetFunction JetFunction::operator*(cd s) const {
    JetFunction r = *this;
    r *= s;
    return r;
}

void JetFunction::enforce_reality() {
    for (int m = 0; m < modes_.size(); ++m) {
        const int c = modes_.conj_of(m);
        if (c < m) continue;
        const cd a0 = 0.5 * (f0_(m) + std::conj(f0_(c)));
        f0_(m) = a0;
        f0_(c) = std::conj(a0);
        Eigen::VectorXcd vr = 0.5 * (fr_[m] + fr_[c].conjugate());
        fr_[m] = vr;
        fr_[c] = vr.conjugate();
        Eigen::VectorXcd vw = 0.5 * (fw_[m] + fw_[c].conjugate());
        fw_[m] = vw;
        fw_[c] = vw.conjugate();
        BlockMatrix sym = (fww_[m] + fww_[m].block_transpose()) * cd(0.5, 0);
        BlockMatrix symc = (fww_[c] + fww_[c].block_transpose()) * cd(0.5, 0);
        BlockMatrix avg = (sym + symc.conjugate()) * cd(0.5, 0);
        fww_[m] = avg;
        fww_[c] = avg.conjugate();
    }
}

double JetFunction::reality_defect() const {
    double worst = 0.0;
    for (int m = 0; m < modes_.size(); ++m) {
        const int c = modes_.conj_of(m);
        worst = std::max(worst, std::abs(f0_(m) - std::conj(f0_(c))));
        worst = std::max(worst, (fr_[m] - fr_[c].conjugate()).cwiseAbs().maxCoeff());
        worst = std::max(worst, (fw_[m] - fw_[c].conjugate()).cwiseAbs().maxCoeff());
        worst = std::max(worst, (fww_[m] - fww_[c].conjugate()).max_abs());
    }
    return worst;
}

cd JetFunction::eval(const PhasePoint& x) const {
    PhaseTable pt(x.theta, modes_.cutoff());
    cd s = 0.0;
    for (int m = 0; m < modes_.size(); ++m) {
        cd v = f0_(m);
        v += fr_[m].cwiseProduct(x.r).sum();
        v += fw_[m].cwiseProduct(x.w).sum();
        v += 0.5 * bm_quad_wslots(fww_[m], *model_, x.w);
        s += pt.phase(modes_.mode(m)) * v;
    }
    return s;
}

void JetFunction::eval_grad(const PhasePoint& x, Eigen::VectorXcd& dr, Eigen::VectorXcd& dth,
                            Eigen::VectorXcd& dw) const {
    PhaseTable pt(x.theta, modes_.cutoff());
    const int n = model_->n_tangential();
    dr = Eigen::VectorXcd::Zero(n);
    dth = Eigen::VectorXcd::Zero(n);
    dw = Eigen::VectorXcd::Zero(x.w.size());
    for (int m = 0; m < modes_.size(); ++m) {
        const cd ph = pt.phase(modes_.mode(m));
        cd v = f0_(m);
        v += fr_[m].cwiseProduct(x.r).sum();
        v += fw_[m].cwiseProduct(x.w).sum();
        v += 0.5 * bm_quad_wslots(fww_[m], *model_, x.w);
        dr += ph * fr_[m];
        for (int a = 0; a < n; ++a) dth(a) += IU * double(modes_.mode(m)[a]) * ph * v;
        dw += ph * (fw_[m] + bm_apply_wslots(fww_[m], *model_, x.w));
    }
}

BlockMatrix JetFunction::eval_hess(const PhasePoint& x) const {
    PhaseTable pt(x.theta, modes_.cutoff());
    const auto& a_ids = model_->a_ids();
    const int n = model_->n_tangential();
    BlockMatrix H(*model_);
    for (int m = 0; m < modes_.size(); ++m) {
        const ModeVec& k = modes_.mode(m);
        const cd ph = pt.phase(k);
        cd v = f0_(m);
        v += fr_[m].cwiseProduct(x.r).sum();
        v += fw_[m].cwiseProduct(x.w).sum();
        v += 0.5 * bm_quad_wslots(fww_[m], *model_, x.w);
        const Eigen::VectorXcd dwm = fw_[m] + bm_apply_wslots(fww_[m], *model_, x.w);
        // tangential x tangential, coordinates (r, theta)
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                Matrix2 blk = Matrix2::Zero();
                blk(0, 1) = IU * double(k[b]) * ph * fr_[m](a);
                blk(1, 0) = IU * double(k[a]) * ph * fr_[m](b);
                blk(1, 1) = -double(k[a]) * double(k[b]) * ph * v;
                if (blk.cwiseAbs().maxCoeff() > 0) H.add_to(a_ids[a], a_ids[b], blk);
            }
        // tangential x transverse (theta row) and mirror
        for (int a = 0; a < n; ++a) {
            if (k[a] == 0) continue;
            const cd fac = IU * double(k[a]) * ph;
            for (size_t s = 0; s < model_->w_ids().size(); ++s) {
                const cd gp = fac * dwm(2 * s), gq = fac * dwm(2 * s + 1);
                if (gp == cd(0, 0) && gq == cd(0, 0)) continue;
                Matrix2 blk = Matrix2::Zero();
                blk(1, 0) = gp;
                blk(1, 1) = gq;
                H.add_to(a_ids[a], model_->w_ids()[s], blk);
                H.add_to(model_->w_ids()[s], a_ids[a], blk.transpose().eval());
            }
        }
        // transverse x transverse
        for (const auto& [key, blk] : fww_[m].entries()) H.add_to(key.first, key.second, ph * blk);
    }
    H.drop_zeros();
    return H;
}

JetFunction JetFunction::d_omega(const Eigen::VectorXd& omega) const {
    JetFunction r = *this;
    for (int m = 0; m < modes_.size(); ++m) {
        const ModeVec& k = modes_.mode(m);
        double ko = 0.0;
        for (int a = 0; a < model_->n_tangential(); ++a) ko += omega(a) * k[a];
        const cd s = IU * ko;
        r.f0_(m) *= s;
        r.fr_[m] *= s;
        r.fw_[m] *= s;
        r.fww_[m] *= s;
    }
    return r;
}

double JetFunction::coef_norm() const {
    double s = 0.0;
    for (int m = 0; m < modes_.size(); ++m) {
        s += std::abs(f0_(m));
        s += fr_[m].cwiseAbs().sum();
        s += fw_[m].cwiseAbs().sum();
        for (const auto& [k, blk] : fww_[m].entries()) s += blk.cwiseAbs().sum();
    }
    return s;
}

JetFunction JetFunction::mean_part() const {
    JetFunction r(*model_, modes_);
    const int z = modes_.zero_index();
    r.f0_(z) = f0_(z);
    r.fr_[z] = fr_[z];
    r.fw_[z] = fw_[z];
    r.fww_[z] = fww_[z];
    return r;
}

JetFunction JetFunction::nonmean_part() const {
    JetFunction r = *this;
    const int z = modes_.zero_index();
    r.f0_(z) = 0;
    r.fr_[z].setZero();
    r.fw_[z].setZero();
    r.fww_[z] = BlockMatrix(*model_);
    return r;
}

JetBracketResult poisson(const JetFunction& S, const JetFunction& G, int cutoff_cap) {
    if (&S.model() != &G.model()) throw std::invalid_argument("poisson: model mismatch");
    const LatticeModel& model = S.model();
    const int n = model.n_tangential();
    int N = S.modes().cutoff() + G.modes().cutoff();
    if (cutoff_cap >= 0) N = std::min(N, cutoff_cap);
    JetBracketResult res;
    res.jet = JetFunction(model, ModeSet(n, N));
    JetFunction& out = res.jet;

    auto nonzero = [](const JetFunction& f, int m) {
        return std::abs(f.f0(m)) > 0 || f.fr(m).cwiseAbs().maxCoeff() > 0 ||
               f.fw(m).cwiseAbs().maxCoeff() > 0 || !f.fww(m).empty();
    };
    std::vector<char> sn(S.modes().size()), gn(G.modes().size());
    for (int m = 0; m < S.modes().size(); ++m) sn[m] = nonzero(S, m);
    for (int m = 0; m < G.modes().size(); ++m) gn[m] = nonzero(G, m);

    for (int m1 = 0; m1 < S.modes().size(); ++m1) {
        if (!sn[m1]) continue;
        const ModeVec& k1 = S.modes().mode(m1);
        for (int m2 = 0; m2 < G.modes().size(); ++m2) {
            if (!gn[m2]) continue;
            const ModeVec& k2 = G.modes().mode(m2);
            ModeVec k{0, 0, 0, 0};
            for (int a = 0; a < n; ++a) k[a] = static_cast<int16_t>(k1[a] + k2[a]);
            const int mo = out.modes().index_of(k);

            // tangential channels: sum_a d_r S d_th G - d_th S d_r G
            cd c0 = 0.0;
            Eigen::VectorXcd cr = Eigen::VectorXcd::Zero(n);
            Eigen::VectorXcd cw = Eigen::VectorXcd::Zero(S.fw(m1).size());
            BlockMatrix cww(model);
            for (int a = 0; a < n; ++a) {
                const cd ika1 = IU * double(k1[a]);
                const cd ika2 = IU * double(k2[a]);
                const cd s1a = S.fr(m1)(a);
                const cd g1a = G.fr(m2)(a);
                // S1_a * d_th_a G - d_th_a S * G1_a, split by jet component
                c0 += s1a * ika2 * G.f0(m2) - ika1 * S.f0(m1) * g1a;
                cr += s1a * ika2 * G.fr(m2) - ika1 * S.fr(m1) * g1a;
                cw += s1a * ika2 * G.fw(m2) - ika1 * S.fw(m1) * g1a;
                if (!G.fww(m2).empty() && s1a != cd(0, 0)) cww += G.fww(m2) * (s1a * ika2);
                if (!S.fww(m1).empty() && g1a != cd(0, 0)) cww += S.fww(m1) * (-ika1 * g1a);
            }
            // transverse channels: -t(grad_w S) J (grad_w G) expanded over jet parts
            const Eigen::VectorXcd JGw = j_vec(G.fw(m2));
            const Eigen::VectorXcd JSw = j_vec(S.fw(m1));
            c0 -= S.fw(m1).cwiseProduct(JGw).sum();
            if (!G.fww(m2).empty())
                cw += bm_apply_wslots(G.fww(m2), model, JSw);
            if (!S.fww(m1).empty())
                cw -= bm_apply_wslots(S.fww(m1), model, JGw);
            if (!S.fww(m1).empty() && !G.fww(m2).empty()) {
                const BlockMatrix SJG = multiply(S.fww(m1), j_left(G.fww(m2)));
                cww += (SJG + SJG.block_transpose()) * cd(-1, 0);
            }

            if (mo < 0) {
                res.tail += std::abs(c0) + cr.cwiseAbs().sum() + cw.cwiseAbs().sum();
                for (const auto& [kk, blk] : cww.entries()) res.tail += blk.cwiseAbs().sum();
                continue;
            }
            out.f0(mo) += c0;
            out.fr(mo) += cr;
            out.fw(mo) += cw;
            out.fww(mo) += cww;
        }
    }
    for (int m = 0; m < out.modes().size(); ++m) out.fww(m).drop_zeros();
    return res;
}

TNormReport sampled_tnorm(const TNormCallbacks& cb, const LatticeModel& model,
                          const DomainSpec& spec, const TNormOptions& opt) {
    TNormReport rep;
    std::vector<double> grid;
    const double g1 = spec.gamma.gamma1;
    grid.push_back(0.0);
    for (int i = opt.gamma_grid - 2; i >= 0; --i) grid.push_back(g1 / double(1 << i));
    if (g1 == 0.0) grid = {0.0};

    for (size_t gi = 0; gi < grid.size(); ++gi) {
        DomainSpec sp = spec;
        sp.gamma.gamma1 = grid[gi];
        const auto pts = sample_domain(model, sp, opt.samples, opt.seed + 1000 * gi);
        Eigen::VectorXcd dr, dth, dw;
        for (int i = 0; i < opt.samples; ++i) {
            const PhasePoint& x = pts[i];
            rep.sup_f = std::max(rep.sup_f, std::abs(cb.eval(x)));
            cb.grad(x, dr, dth, dw);
            double s = 0.0;
            const auto& a_ids = model.a_ids();
            for (size_t a = 0; a < a_ids.size(); ++a) {
                const double wgt = site_weight(model.site(a_ids[a]), sp.gamma.gamma1, sp.gamma.gamma2);
                s += (std::norm(dr(a)) + std::norm(dth(a))) * wgt * wgt;
            }
            const auto& w_ids = model.w_ids();
            for (size_t w = 0; w < w_ids.size(); ++w) {
                const double wgt = site_weight(model.site(w_ids[w]), sp.gamma.gamma1, sp.gamma.gamma2);
                s += (std::norm(dw(2 * w)) + std::norm(dw(2 * w + 1))) * wgt * wgt;
            }
            rep.sup_grad = std::max(rep.sup_grad, std::sqrt(s));
            if (cb.hess && i < opt.hess_samples) {
                const BlockMatrix H = cb.hess(x);
                rep.sup_hess = std::max(rep.sup_hess, mb_norm(H, sp.gamma, opt.m_star).mb_norm);
            }
        }
    }
    rep.total = std::max({rep.sup_f, rep.sup_grad, rep.sup_hess});
    return rep;
}

TNormReport tnorm(const JetFunction& f, const DomainSpec& spec, const TNormOptions& opt) {
    TNormCallbacks cb;
    cb.eval = [&](const PhasePoint& x) { return f.eval(x); };
    cb.grad = [&](const PhasePoint& x, Eigen::VectorXcd& dr, Eigen::VectorXcd& dth,
                  Eigen::VectorXcd& dw) { f.eval_grad(x, dr, dth, dw); };
    cb.hess = [&](const PhasePoint& x) { return f.eval_hess(x); };
    return sampled_tnorm(cb, f.model(), spec, opt);
}

} // namespace kamforge
