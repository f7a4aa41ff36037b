#include "kamforge/poly.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace kamforge {

namespace {
const cd IU(0.0, 1.0);
const double ISQ2 = 1.0 / std::sqrt(2.0);

// per-point evaluation cache
struct EvalCtx {
    const LatticeModel* model;
    const Eigen::VectorXd* I;
    int n;
    std::vector<std::vector<cd>> eik; // e^{i k theta_a}, k in [-K, K]
    int K;
    std::vector<cd> sq;   // sqrt(I_a + r_a)
    std::vector<cd> rr;   // r_a
    std::vector<cd> zw;   // xi/eta by code

    EvalCtx(const LatticeModel& mdl, const Eigen::VectorXd& amps, const PhasePoint& x, int kmax)
        : model(&mdl), I(&amps), n(mdl.n_tangential()), K(kmax) {
        eik.assign(n, std::vector<cd>(2 * K + 1));
        sq.resize(n);
        rr.resize(n);
        for (int a = 0; a < n; ++a) {
            const cd e = std::exp(IU * x.theta(a));
            const cd einv = 1.0 / e;
            eik[a][K] = 1.0;
            for (int k = 1; k <= K; ++k) {
                eik[a][K + k] = eik[a][K + k - 1] * e;
                eik[a][K - k] = eik[a][K - k + 1] * einv;
            }
            rr[a] = x.r(a);
            sq[a] = std::sqrt(cd((*I)(a)) + x.r(a));
        }
        const int L = static_cast<int>(mdl.w_ids().size());
        zw.resize(2 * L);
        for (int s = 0; s < L; ++s) {
            const cd p = x.w(2 * s), q = x.w(2 * s + 1);
            zw[2 * s] = (p + IU * q) * ISQ2;     // xi
            zw[2 * s + 1] = (p - IU * q) * ISQ2; // eta
        }
    }

    cd ipow(cd z, int e) const {
        cd r = 1.0;
        for (int i = 0; i < e; ++i) r *= z;
        return r;
    }
    // (I_a + r_a)^{m/2} via integer powers of the principal sqrt
    cd half_pow(int a, int m) const {
        if (m == 0) return 1.0;
        if (m > 0) return ipow(sq[a], m);
        return 1.0 / ipow(sq[a], -m);
    }
};

struct TermFactors {
    cd phase;            // e^{i<k,theta>}
    cd afac[4];          // per-angle (I+r)^{m/2} r^p
    cd wprod;            // product of w factors
    cd value;            // full product with coefficient
};

} // namespace

PolyHamiltonian::PolyHamiltonian(const LatticeModel& model, Eigen::VectorXd amplitudes,
                                 PolyCaps caps)
    : model_(&model), I_(std::move(amplitudes)), caps_(caps) {
    if (I_.size() != model.n_tangential())
        throw std::invalid_argument("PolyHamiltonian: amplitude vector length mismatch");
}

void PolyHamiltonian::add_term(const PolyKey& key, cd coef) {
    if (coef == cd(0, 0)) return;
    terms_.push_back({key, coef});
}

void PolyHamiltonian::merge() {
    std::sort(terms_.begin(), terms_.end(),
              [](const PolyTerm& a, const PolyTerm& b) { return a.key < b.key; });
    size_t out = 0;
    for (size_t i = 0; i < terms_.size();) {
        PolyTerm t = terms_[i];
        size_t j = i + 1;
        while (j < terms_.size() && terms_[j].key == t.key) t.c += terms_[j++].c;
        if (std::abs(t.c) > 1e-300) terms_[out++] = t;
        i = j;
    }
    terms_.resize(out);
    if (terms_.size() > caps_.max_terms)
        throw std::runtime_error("PolyHamiltonian: term budget exceeded (" +
                                 std::to_string(terms_.size()) + ")");
}

PolyHamiltonian& PolyHamiltonian::operator+=(const PolyHamiltonian& o) {
    if (model_ != o.model_) throw std::invalid_argument("PolyHamiltonian: model mismatch");
    terms_.reserve(terms_.size() + o.terms_.size());
    for (const auto& t : o.terms_) terms_.push_back(t);
    tail_ += o.tail_;
    merge();
    return *this;
}

PolyHamiltonian& PolyHamiltonian::operator*=(cd s) {
    for (auto& t : terms_) t.c *= s;
    return *this;
}

PolyHamiltonian PolyHamiltonian::operator+(const PolyHamiltonian& o) const {
    PolyHamiltonian r = *this;
    r += o;
    return r;
}

PolyHamiltonian PolyHamiltonian::operator-(const PolyHamiltonian& o) const {
    PolyHamiltonian r = *this;
    PolyHamiltonian neg = o;
    neg *= cd(-1, 0);
    r += neg;
    return r;
}

PolyHamiltonian PolyHamiltonian::operator*(cd s) const {
    PolyHamiltonian r = *this;
    r *= s;
    return r;
}

cd PolyHamiltonian::eval(const PhasePoint& x) const {
    EvalCtx ctx(*model_, I_, x, caps_.max_mode);
    const int n = ctx.n;
    cd total = 0.0;
    for (const auto& t : terms_) {
        cd v = t.c;
        for (int a = 0; a < n; ++a) {
            v *= ctx.eik[a][ctx.K + t.key.k[a]];
            if (t.key.m[a]) v *= ctx.half_pow(a, t.key.m[a]);
            if (t.key.p[a]) v *= ctx.ipow(ctx.rr[a], t.key.p[a]);
        }
        for (int j = 0; j < t.key.wn; ++j) v *= ctx.zw[t.key.wf[j]];
        total += v;
    }
    return total;
}

void PolyHamiltonian::eval_grad(const PhasePoint& x, Eigen::VectorXcd& dr, Eigen::VectorXcd& dth,
                                Eigen::VectorXcd& dw) const {
    EvalCtx ctx(*model_, I_, x, caps_.max_mode);
    const int n = ctx.n;
    dr = Eigen::VectorXcd::Zero(n);
    dth = Eigen::VectorXcd::Zero(n);
    Eigen::VectorXcd dz = Eigen::VectorXcd::Zero(x.w.size()); // by xi/eta code
    for (const auto& t : terms_) {
        cd afac[4], dafac[4];
        cd v = t.c;
        for (int a = 0; a < n; ++a) {
            const cd hp = ctx.half_pow(a, t.key.m[a]);
            const cd rp = ctx.ipow(ctx.rr[a], t.key.p[a]);
            afac[a] = hp * rp;
            dafac[a] = 0.5 * double(t.key.m[a]) * ctx.half_pow(a, t.key.m[a] - 2) * rp;
            if (t.key.p[a])
                dafac[a] += double(t.key.p[a]) * hp * ctx.ipow(ctx.rr[a], t.key.p[a] - 1);
            v *= ctx.eik[a][ctx.K + t.key.k[a]] * afac[a];
        }
        // w factor product and removal products per distinct code
        cd wp = 1.0;
        for (int j = 0; j < t.key.wn; ++j) wp *= ctx.zw[t.key.wf[j]];
        const cd base = v * wp;

        for (int a = 0; a < n; ++a) {
            dth(a) += IU * double(t.key.k[a]) * base;
            if (dafac[a] != cd(0, 0) && afac[a] != cd(0, 0))
                dr(a) += base / afac[a] * dafac[a];
            else if (dafac[a] != cd(0, 0)) {
                // afac vanished (r_a = 0 with p>0): rebuild without the a factor
                cd u = t.c;
                for (int b = 0; b < n; ++b)
                    u *= ctx.eik[b][ctx.K + t.key.k[b]] * (b == a ? dafac[a] : afac[b]);
                dr(a) += u * wp;
            }
        }
        for (int j = 0; j < t.key.wn; ++j) {
            const uint16_t code = t.key.wf[j];
            if (j > 0 && code == t.key.wf[j - 1]) continue; // handled with multiplicity
            int mult = 0;
            cd rest = v;
            for (int l = 0; l < t.key.wn; ++l) {
                if (t.key.wf[l] == code) ++mult;
                else rest *= ctx.zw[t.key.wf[l]];
            }
            dz(code) += double(mult) * rest * ctx.ipow(ctx.zw[code], mult - 1);
        }
    }
    // chain to (p,q): xi = (p+iq)/sqrt2, eta = (p-iq)/sqrt2
    dw = Eigen::VectorXcd::Zero(x.w.size());
    for (int s = 0; 2 * s + 1 < dw.size(); ++s) {
        dw(2 * s) = (dz(2 * s) + dz(2 * s + 1)) * ISQ2;
        dw(2 * s + 1) = IU * (dz(2 * s) - dz(2 * s + 1)) * ISQ2;
    }
}

BlockMatrix PolyHamiltonian::eval_hess(const PhasePoint& x) const {
    EvalCtx ctx(*model_, I_, x, caps_.max_mode);
    const int n = ctx.n;
    const auto& a_ids = model_->a_ids();
    const auto& w_ids = model_->w_ids();

    // accumulate in mixed coordinates: tangential (r,theta) directly, transverse
    // in (xi,eta); convert the transverse indices at the end
    const int nv = 2 * n + static_cast<int>(x.w.size());
    auto vr = [&](int a) { return 2 * a; };
    auto vth = [&](int a) { return 2 * a + 1; };
    auto vz = [&](int code) { return 2 * n + code; };
    std::unordered_map<int64_t, cd> H2;
    auto acc = [&](int i, int j, cd v) {
        if (v == cd(0, 0)) return;
        H2[int64_t(i) * nv + j] += v;
        if (i != j) H2[int64_t(j) * nv + i] += v;
    };

    for (const auto& t : terms_) {
        cd afac[4], dafac[4], ddafac[4];
        cd head = t.c;
        for (int a = 0; a < n; ++a) {
            const double m = t.key.m[a];
            const double p = t.key.p[a];
            const cd hp = ctx.half_pow(a, t.key.m[a]);
            const cd hp1 = ctx.half_pow(a, t.key.m[a] - 2);
            const cd hp2 = ctx.half_pow(a, t.key.m[a] - 4);
            const cd rp = ctx.ipow(ctx.rr[a], t.key.p[a]);
            const cd rp1 = p >= 1 ? ctx.ipow(ctx.rr[a], t.key.p[a] - 1) : cd(0, 0);
            const cd rp2 = p >= 2 ? ctx.ipow(ctx.rr[a], t.key.p[a] - 2) : cd(0, 0);
            afac[a] = hp * rp;
            dafac[a] = 0.5 * m * hp1 * rp + p * hp * rp1;
            ddafac[a] = 0.25 * m * (m - 2) * hp2 * rp + m * p * hp1 * rp1 + p * (p - 1) * hp * rp2;
            head *= ctx.eik[a][ctx.K + t.key.k[a]];
        }
        // distinct w codes with multiplicities and removal products
        int codes[8], mult[8], nc = 0;
        for (int j = 0; j < t.key.wn; ++j) {
            if (nc > 0 && codes[nc - 1] == t.key.wf[j]) { ++mult[nc - 1]; continue; }
            codes[nc] = t.key.wf[j];
            mult[nc] = 1;
            ++nc;
        }
        cd wall = 1.0;
        for (int j = 0; j < t.key.wn; ++j) wall *= ctx.zw[t.key.wf[j]];

        auto aprod = [&](int skip1, int skip2) {
            cd v = 1.0;
            for (int a = 0; a < n; ++a) {
                if (a == skip1 || a == skip2) continue;
                v *= afac[a];
            }
            return v;
        };
        auto wprod_red = [&](int ci, int red_i, int cj, int red_j) {
            cd v = 1.0;
            for (int u = 0; u < nc; ++u) {
                int e = mult[u];
                if (u == ci) e -= red_i;
                if (u == cj) e -= red_j;
                v *= ctx.ipow(ctx.zw[codes[u]], e);
            }
            return v;
        };

        const cd full = head * aprod(-1, -1) * wall;

        // theta-theta, theta-r, r-r
        for (int a = 0; a < n; ++a) {
            const cd ika = IU * double(t.key.k[a]);
            if (t.key.k[a]) {
                acc(vth(a), vth(a), ika * ika * full);
                for (int b = a + 1; b < n; ++b)
                    if (t.key.k[b]) acc(vth(a), vth(b), ika * IU * double(t.key.k[b]) * full);
            }
            // r_a r_a
            acc(vr(a), vr(a), head * aprod(a, -1) * ddafac[a] * wall);
            for (int b = a + 1; b < n; ++b)
                acc(vr(a), vr(b), head * aprod(a, b) * dafac[a] * dafac[b] * wall);
            // r_a theta_b
            for (int b = 0; b < n; ++b)
                if (t.key.k[b])
                    acc(vr(a), vth(b), head * aprod(a, -1) * dafac[a] * wall * IU * double(t.key.k[b]));
            // r_a z, theta_a z
            for (int u = 0; u < nc; ++u) {
                const cd wz = double(mult[u]) * wprod_red(u, 1, -1, 0);
                acc(vr(a), vz(codes[u]), head * aprod(a, -1) * dafac[a] * wz);
                if (t.key.k[a]) acc(vth(a), vz(codes[u]), ika * head * aprod(-1, -1) * wz);
            }
        }
        // z-z
        for (int u = 0; u < nc; ++u) {
            if (mult[u] >= 2)
                acc(vz(codes[u]), vz(codes[u]),
                    head * aprod(-1, -1) * double(mult[u]) * double(mult[u] - 1) *
                        wprod_red(u, 2, -1, 0));
            for (int v2 = u + 1; v2 < nc; ++v2)
                acc(vz(codes[u]), vz(codes[v2]),
                    head * aprod(-1, -1) * double(mult[u]) * double(mult[v2]) *
                        wprod_red(u, 1, v2, 1));
        }
    }

    BlockMatrix H(*model_);
    const Matrix2 Uc = cplxU();
    const Matrix2 Uci = Uc.inverse();
    auto fetch = [&](int i, int j) {
        auto it = H2.find(int64_t(i) * nv + j);
        return it == H2.end() ? cd(0, 0) : it->second;
    };
    // tangential-tangential
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            Matrix2 blk;
            blk << fetch(vr(a), vr(b)), fetch(vr(a), vth(b)), fetch(vth(a), vr(b)),
                fetch(vth(a), vth(b));
            if (blk.cwiseAbs().maxCoeff() > 0) H.add_to(a_ids[a], a_ids[b], blk);
        }
    const int L = static_cast<int>(w_ids.size());
    // tangential-transverse: chain (xi,eta) -> (p,q) on the transverse index
    for (int a = 0; a < n; ++a)
        for (int s = 0; s < L; ++s) {
            const cd drxi = fetch(vr(a), vz(2 * s)), dreta = fetch(vr(a), vz(2 * s + 1));
            const cd dtxi = fetch(vth(a), vz(2 * s)), dteta = fetch(vth(a), vz(2 * s + 1));
            if (drxi == cd(0, 0) && dreta == cd(0, 0) && dtxi == cd(0, 0) && dteta == cd(0, 0))
                continue;
            Matrix2 blk;
            blk(0, 0) = (drxi + dreta) * ISQ2;
            blk(0, 1) = IU * (drxi - dreta) * ISQ2;
            blk(1, 0) = (dtxi + dteta) * ISQ2;
            blk(1, 1) = IU * (dtxi - dteta) * ISQ2;
            H.add_to(a_ids[a], w_ids[s], blk);
            H.add_to(w_ids[s], a_ids[a], blk.transpose().eval());
        }
    // transverse-transverse: congruence back to (p,q)
    for (int s1 = 0; s1 < L; ++s1)
        for (int s2 = 0; s2 < L; ++s2) {
            Matrix2 C;
            C << fetch(vz(2 * s1), vz(2 * s2)), fetch(vz(2 * s1), vz(2 * s2 + 1)),
                fetch(vz(2 * s1 + 1), vz(2 * s2)), fetch(vz(2 * s1 + 1), vz(2 * s2 + 1));
            if (C.cwiseAbs().maxCoeff() == 0) continue;
            const Matrix2 blk = Uci.transpose() * C * Uci;
            H.add_to(w_ids[s1], w_ids[s2], blk);
        }
    H.drop_zeros();
    return H;
}

PolyHamiltonian PolyHamiltonian::d_r(int a) const {
    PolyHamiltonian out(*model_, I_, caps_);
    for (const auto& t : terms_) {
        if (t.key.m[a] != 0) {
            PolyKey k = t.key;
            k.m[a] = static_cast<int8_t>(k.m[a] - 2);
            out.add_term(k, t.c * 0.5 * double(t.key.m[a]));
        }
        if (t.key.p[a] > 0) {
            PolyKey k = t.key;
            k.p[a] -= 1;
            out.add_term(k, t.c * double(t.key.p[a]));
        }
    }
    out.merge();
    return out;
}

PolyHamiltonian PolyHamiltonian::d_theta(int a) const {
    PolyHamiltonian out(*model_, I_, caps_);
    for (const auto& t : terms_)
        if (t.key.k[a] != 0) out.add_term(t.key, t.c * IU * double(t.key.k[a]));
    out.merge();
    return out;
}

PolyHamiltonian PolyHamiltonian::d_w(uint16_t code) const {
    PolyHamiltonian out(*model_, I_, caps_);
    for (const auto& t : terms_) {
        int mult = 0;
        for (int j = 0; j < t.key.wn; ++j) mult += t.key.wf[j] == code;
        if (!mult) continue;
        PolyKey k = t.key;
        int w = 0;
        bool removed = false;
        for (int j = 0; j < t.key.wn; ++j) {
            if (!removed && t.key.wf[j] == code) { removed = true; continue; }
            k.wf[w++] = t.key.wf[j];
        }
        k.wf[w] = 0;
        k.wn = static_cast<uint8_t>(w);
        out.add_term(k, t.c * double(mult));
    }
    out.merge();
    return out;
}

double PolyHamiltonian::reality_defect() const {
    // conj mirror: k -> -k, xi <-> eta, coefficient conjugated
    std::unordered_map<PolyKey, cd, PolyKeyHash> map;
    for (const auto& t : terms_) map[t.key] = t.c;
    double worst = 0.0;
    for (const auto& t : terms_) {
        PolyKey mk = t.key;
        for (int a = 0; a < 4; ++a) mk.k[a] = static_cast<int16_t>(-mk.k[a]);
        for (int j = 0; j < mk.wn; ++j) mk.wf[j] = t.key.wf[j] ^ 1;
        std::sort(mk.wf, mk.wf + mk.wn);
        auto it = map.find(mk);
        const cd other = it == map.end() ? cd(0, 0) : it->second;
        worst = std::max(worst, std::abs(t.c - std::conj(other)));
    }
    return worst;
}

JetFunction PolyHamiltonian::jet(int n_theta, double* spill) const {
    JetFunction out = JetFunction::zero(*model_, n_theta);
    const int n = model_->n_tangential();
    double spilled = 0.0;
    // complexified quadratic accumulators per mode
    std::vector<BlockMatrix> cquad(out.modes().size(), BlockMatrix(*model_));
    for (const auto& t : terms_) {
        if (t.key.wn > 2) continue;
        ModeVec k{0, 0, 0, 0};
        for (int a = 0; a < n; ++a) k[a] = t.key.k[a];
        const int mi = out.modes().index_of(k);
        // r-factor value and gradient at r=0
        double R0 = 1.0;
        int psum = 0, psite = -1;
        for (int a = 0; a < n; ++a) {
            R0 *= std::pow(I_(a), 0.5 * t.key.m[a]);
            if (t.key.p[a]) { psum += t.key.p[a]; psite = a; }
        }
        const double val0 = psum == 0 ? R0 : 0.0;
        if (mi < 0) {
            if (psum <= 1 && t.key.wn <= 2) spilled += std::abs(t.c);
            continue;
        }
        if (t.key.wn == 0) {
            if (psum == 0) {
                out.f0(mi) += t.c * R0;
                for (int a = 0; a < n; ++a)
                    if (t.key.m[a]) out.fr(mi)(a) += t.c * 0.5 * double(t.key.m[a]) * R0 / I_(a);
            } else if (psum == 1) {
                out.fr(mi)(psite) += t.c * R0;
            }
            continue;
        }
        if (val0 == 0.0) continue; // r-vanishing factor kills w-carrying jet parts
        if (t.key.wn == 1) {
            const uint16_t code = t.key.wf[0];
            const int s = code / 2;
            const cd c = t.c * val0;
            if ((code & 1) == 0) { // xi = (p+iq)/sqrt2
                out.fw(mi)(2 * s) += c * ISQ2;
                out.fw(mi)(2 * s + 1) += c * IU * ISQ2;
            } else { // eta = (p-iq)/sqrt2
                out.fw(mi)(2 * s) += c * ISQ2;
                out.fw(mi)(2 * s + 1) -= c * IU * ISQ2;
            }
            continue;
        }
        // wn == 2
        const uint16_t u = t.key.wf[0], v = t.key.wf[1];
        const int su = u / 2, sv = v / 2;
        const int idu = model_->w_ids()[su], idv = model_->w_ids()[sv];
        const cd c = t.c * val0;
        Matrix2 add = Matrix2::Zero();
        if (u == v) {
            add((u & 1), (u & 1)) = 2.0 * c;
            cquad[mi].add_to(idu, idu, add);
        } else if (su == sv) {
            add((u & 1), (v & 1)) += c;
            add((v & 1), (u & 1)) += c;
            cquad[mi].add_to(idu, idu, add);
        } else {
            add((u & 1), (v & 1)) = c;
            cquad[mi].add_to(idu, idv, add);
            cquad[mi].add_to(idv, idu, add.transpose().eval());
        }
    }
    for (int mi = 0; mi < out.modes().size(); ++mi)
        if (!cquad[mi].empty()) out.fww(mi) += from_complex_form(cquad[mi]);
    if (spill) *spill = spilled;
    return out;
}

double PolyHamiltonian::weighted_coef_norm(double sigma, double mu) const {
    double s = 0.0;
    const int n = model_->n_tangential();
    for (const auto& t : terms_) {
        double w = std::abs(t.c);
        int l1 = 0;
        for (int a = 0; a < n; ++a) {
            l1 += std::abs(int(t.key.k[a]));
            w *= std::pow(I_(a) + mu * mu, 0.5 * t.key.m[a] >= 0 ? 0.5 * t.key.m[a] : 0.0);
            if (t.key.m[a] < 0) w *= std::pow(std::max(I_(a) - mu * mu, 1e-6), 0.5 * t.key.m[a]);
            w *= std::pow(mu * mu, double(t.key.p[a]));
        }
        w *= std::exp(sigma * l1) * std::pow(mu, double(t.key.wn));
        s += w;
    }
    return s;
}

namespace {

double term_gauge(const PolyTerm& t, const Eigen::VectorXd& I, int n, double sigma, double mu) {
    double w = std::abs(t.c);
    int l1 = 0;
    for (int a = 0; a < n; ++a) {
        l1 += std::abs(int(t.key.k[a]));
        const double base = t.key.m[a] >= 0 ? I(a) + mu * mu : std::max(I(a) - mu * mu, 1e-6);
        w *= std::pow(base, 0.5 * t.key.m[a]);
        w *= std::pow(mu * mu, double(t.key.p[a]));
    }
    return w * std::exp(sigma * l1) * std::pow(mu, double(t.key.wn));
}

} // namespace

double PolyHamiltonian::max_term_gauge(double sigma, double mu) const {
    const int n = model_->n_tangential();
    double top = 0.0;
    for (const auto& t : terms_)
        top = std::max(top, term_gauge(t, I_, n, sigma, mu));
    return top;
}

void PolyHamiltonian::prune_tiered(double sigma, double mu, double jet_floor_abs,
                                   double nonjet_floor_abs) {
    if (terms_.empty()) return;
    const int n = model_->n_tangential();
    size_t out = 0;
    for (size_t t = 0; t < terms_.size(); ++t) {
        const PolyKey& k = terms_[t].key;
        int psum = 0;
        for (int a = 0; a < n; ++a) psum += k.p[a];
        const bool jet_slice = k.wn <= 2 && psum <= 1;
        const double g = term_gauge(terms_[t], I_, n, sigma, mu);
        if (g >= (jet_slice ? jet_floor_abs : nonjet_floor_abs))
            terms_[out++] = terms_[t];
        else
            tail_ += g;
    }
    terms_.resize(out);
}

void PolyHamiltonian::prune(double sigma, double mu, double rel) {
    if (terms_.empty()) return;
    const int n = model_->n_tangential();
    std::vector<double> gauge(terms_.size());
    double top = 0.0;
    for (size_t t = 0; t < terms_.size(); ++t) {
        const PolyKey& k = terms_[t].key;
        double w = std::abs(terms_[t].c);
        int l1 = 0;
        for (int a = 0; a < n; ++a) {
            l1 += std::abs(int(k.k[a]));
            const double base = k.m[a] >= 0 ? I_(a) + mu * mu : std::max(I_(a) - mu * mu, 1e-6);
            w *= std::pow(base, 0.5 * k.m[a]);
            w *= std::pow(mu * mu, double(k.p[a]));
        }
        w *= std::exp(sigma * l1) * std::pow(mu, double(k.wn));
        gauge[t] = w;
        top = std::max(top, w);
    }
    const double floor = top * rel;
    size_t out = 0;
    for (size_t t = 0; t < terms_.size(); ++t) {
        if (gauge[t] >= floor)
            terms_[out++] = terms_[t];
        else
            tail_ += gauge[t];
    }
    terms_.resize(out);
}

PolyHamiltonian product(const PolyHamiltonian& A, const PolyHamiltonian& B) {
    if (A.model_ != B.model_) throw std::invalid_argument("product: model mismatch");
    PolyHamiltonian out(*A.model_, A.I_, A.caps_);
    out.terms_.reserve(std::min(A.terms_.size() * std::max<size_t>(B.terms_.size() / 4, 1),
                                size_t(1) << 22));
    const auto& caps = A.caps_;
    const int n = A.model_->n_tangential();
    // per-term domain gauges: the gauge of a product of keys is bounded by the
    // product of the gauges, so pairs below the floor are dropped safely
    std::vector<double> ga(A.terms_.size()), gb(B.terms_.size());
    double ga_max = 0.0, gb_max = 0.0;
    for (size_t i = 0; i < A.terms_.size(); ++i) {
        ga[i] = term_gauge(A.terms_[i], A.I_, n, caps.gauge_sigma, caps.gauge_mu);
        ga_max = std::max(ga_max, ga[i]);
    }
    for (size_t j = 0; j < B.terms_.size(); ++j) {
        gb[j] = term_gauge(B.terms_[j], A.I_, n, caps.gauge_sigma, caps.gauge_mu);
        gb_max = std::max(gb_max, gb[j]);
    }
    const double floor = caps.bracket_prune_rel * ga_max * gb_max;
    double tail = 0.0;
    for (size_t ia = 0; ia < A.terms_.size(); ++ia) {
        const auto& ta = A.terms_[ia];
        for (size_t ib = 0; ib < B.terms_.size(); ++ib) {
            const auto& tb = B.terms_[ib];
            if (ga[ia] * gb[ib] < floor) { tail += ga[ia] * gb[ib]; continue; }
            if (int(ta.key.wn) + int(tb.key.wn) > caps.max_wdeg) { tail += ga[ia] * gb[ib]; continue; }
            PolyKey k;
            bool ok = true;
            for (int a = 0; a < 4; ++a) {
                const int kk = ta.key.k[a] + tb.key.k[a];
                const int mm = ta.key.m[a] + tb.key.m[a];
                const int pp = ta.key.p[a] + tb.key.p[a];
                if (std::abs(kk) > caps.max_mode || std::abs(mm) > caps.max_m_abs ||
                    pp > caps.max_p) { ok = false; break; }
                k.k[a] = static_cast<int16_t>(kk);
                k.m[a] = static_cast<int8_t>(mm);
                k.p[a] = static_cast<uint8_t>(pp);
            }
            if (!ok) { tail += ga[ia] * gb[ib]; continue; }
            k.wn = static_cast<uint8_t>(ta.key.wn + tb.key.wn);
            std::merge(ta.key.wf, ta.key.wf + ta.key.wn, tb.key.wf, tb.key.wf + tb.key.wn, k.wf);
            out.terms_.push_back({k, ta.c * tb.c});
        }
    }
    out.tail_ = tail;
    out.merge();
    return out;
}

PolyHamiltonian poisson(const PolyHamiltonian& F, const PolyHamiltonian& G) {
    if (F.model_ != G.model_) throw std::invalid_argument("poisson: model mismatch");
    const LatticeModel& model = *F.model_;
    PolyHamiltonian out(model, F.I_, F.caps_);
    for (int a = 0; a < model.n_tangential(); ++a) {
        PolyHamiltonian fa = F.d_r(a), gth = G.d_theta(a);
        if (!fa.terms_.empty() && !gth.terms_.empty()) out += product(fa, gth);
        PolyHamiltonian fth = F.d_theta(a), ga = G.d_r(a);
        if (!fth.terms_.empty() && !ga.terms_.empty()) out += product(fth, ga) * cd(-1, 0);
    }
    // collect the active w codes on the smaller side
    const PolyHamiltonian& small = F.terms_.size() < G.terms_.size() ? F : G;
    std::vector<char> active(2 * model.w_ids().size(), 0);
    for (const auto& t : small.terms_)
        for (int j = 0; j < t.key.wn; ++j) {
            active[t.key.wf[j]] = 1;
            active[t.key.wf[j] ^ 1] = 1;
        }
    for (uint16_t s = 0; 2 * s + 1 < active.size(); ++s) {
        const uint16_t xi = 2 * s, eta = 2 * s + 1;
        if (!active[xi] && !active[eta]) continue;
        PolyHamiltonian feta = F.d_w(eta), gxi = G.d_w(xi);
        if (!feta.terms_.empty() && !gxi.terms_.empty()) out += product(feta, gxi) * IU;
        PolyHamiltonian fxi = F.d_w(xi), geta = G.d_w(eta);
        if (!fxi.terms_.empty() && !geta.terms_.empty()) out += product(fxi, geta) * (-IU);
    }
    return out;
}

PolyHamiltonian jet_to_poly(const JetFunction& jet, const Eigen::VectorXd& amplitudes,
                            const PolyCaps& caps) {
    const LatticeModel& model = jet.model();
    const int n = model.n_tangential();
    PolyHamiltonian out(model, amplitudes, caps);
    for (int mi = 0; mi < jet.modes().size(); ++mi) {
        const ModeVec& kv = jet.modes().mode(mi);
        PolyKey base;
        for (int a = 0; a < n; ++a) base.k[a] = kv[a];
        out.add_term(base, jet.f0(mi));
        for (int a = 0; a < n; ++a) {
            PolyKey k = base;
            k.p[a] = 1;
            out.add_term(k, jet.fr(mi)(a));
        }
        for (size_t s = 0; s < model.w_ids().size(); ++s) {
            const cd cp = jet.fw(mi)(2 * s), cq = jet.fw(mi)(2 * s + 1);
            if (cp == cd(0, 0) && cq == cd(0, 0)) continue;
            PolyKey kx = base;
            kx.wn = 1;
            kx.wf[0] = static_cast<uint16_t>(2 * s);
            out.add_term(kx, (cp - IU * cq) * ISQ2);
            PolyKey ke = base;
            ke.wn = 1;
            ke.wf[0] = static_cast<uint16_t>(2 * s + 1);
            out.add_term(ke, (cp + IU * cq) * ISQ2);
        }
        if (!jet.fww(mi).empty()) {
            const BlockMatrix C = to_complex_form(jet.fww(mi));
            for (const auto& [key, blk] : C.entries()) {
                const int su = model.w_slot(key.first), sv = model.w_slot(key.second);
                for (int c1 = 0; c1 < 2; ++c1)
                    for (int c2 = 0; c2 < 2; ++c2) {
                        const cd v = blk(c1, c2);
                        if (v == cd(0, 0)) continue;
                        PolyKey k = base;
                        k.wn = 2;
                        uint16_t f1 = static_cast<uint16_t>(2 * su + c1);
                        uint16_t f2 = static_cast<uint16_t>(2 * sv + c2);
                        if (f1 > f2) std::swap(f1, f2);
                        k.wf[0] = f1;
                        k.wf[1] = f2;
                        out.add_term(k, 0.5 * v);
                    }
            }
        }
    }
    out.merge();
    return out;
}

TNormReport tnorm(const PolyHamiltonian& f, const DomainSpec& spec, const TNormOptions& opt) {
    TNormCallbacks cb;
    cb.eval = [&](const PhasePoint& x) { return f.eval(x); };
    cb.grad = [&](const PhasePoint& x, Eigen::VectorXcd& dr, Eigen::VectorXcd& dth,
                  Eigen::VectorXcd& dw) { f.eval_grad(x, dr, dth, dw); };
    cb.hess = [&](const PhasePoint& x) { return f.eval_hess(x); };
    return sampled_tnorm(cb, f.model(), spec, opt);
}

} // namespace kamforge
