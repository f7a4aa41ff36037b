#pragma once

#include <cmath>

#include "kamforge/normal_form.hpp"
#include "kamforge/rng.hpp"

namespace kamforge::testing {

// beam-style frequencies lambda_a = sqrt(|a|^4 + mass); tangential frequencies
// follow the same law with a parameter-dependent mass shift
inline NormalFormHamiltonian beam_like(const LatticeModel& model, double mass,
                                       double rho_gain = 0.5) {
    NormalFormHamiltonian h;
    h.model = &model;
    const int n = model.n_tangential();
    h.omega_up = [&model, mass, rho_gain, n](const Eigen::VectorXd& rho) {
        Eigen::VectorXd w(n);
        for (int a = 0; a < n; ++a) {
            const double n2 = double(model.site(model.a_ids()[a]).norm2());
            w(a) = std::sqrt(n2 * n2 + mass + rho_gain * rho(a % rho.size()));
        }
        return w;
    };
    h.lambda_up = [mass](const Site& s, const Eigen::VectorXd&) {
        const double n2 = double(s.norm2());
        return std::sqrt(n2 * n2 + mass);
    };
    h.h_f_up = [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(0, 0); };
    h.rho = Eigen::VectorXd::Zero(1);
    h.omega_shift = Eigen::VectorXd::Zero(n);
    h.a_corr = BlockMatrix(model);
    h.consts.c = mass;
    return h;
}

inline JetFunction random_real_jet(const LatticeModel& m, Rng& rng, int n_theta, double scale,
                                   double decay = 0.6) {
    JetFunction f(m, ModeSet(m.n_tangential(), n_theta));
    const int n = m.n_tangential();
    const int L = int(m.w_ids().size());
    for (int mi = 0; mi < f.modes().size(); ++mi) {
        const double damp = scale * std::pow(decay, mode_l1(f.modes().mode(mi), n));
        f.f0(mi) = damp * cd(rng.normal(), rng.normal());
        for (int a = 0; a < n; ++a) f.fr(mi)(a) = damp * cd(rng.normal(), rng.normal());
        for (int i = 0; i < 2 * L; ++i) f.fw(mi)(i) = damp * cd(rng.normal(), rng.normal());
        for (int t = 0; t < 2 * L; ++t) {
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

} // namespace kamforge::testing
