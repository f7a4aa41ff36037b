#include "kamforge/flows.hpp"

#include <cmath>

namespace kamforge {

namespace {

// state vector: (r, theta, w) stacked
Eigen::VectorXcd pack(const PhasePoint& x) {
    Eigen::VectorXcd v(x.r.size() + x.theta.size() + x.w.size());
    v << x.r, x.theta, x.w;
    return v;
}

PhasePoint unpack(const Eigen::VectorXcd& v, int n, int twoL) {
    PhasePoint x;
    x.r = v.segment(0, n);
    x.theta = v.segment(n, n);
    x.w = v.segment(2 * n, twoL);
    return x;
}

Eigen::VectorXcd field(const JetFunction& S, const Eigen::VectorXcd& v, int n, int twoL) {
    const PhasePoint x = unpack(v, n, twoL);
    Eigen::VectorXcd dr, dth, dw;
    S.eval_grad(x, dr, dth, dw);
    Eigen::VectorXcd out(v.size());
    out.segment(0, n) = -dth;
    out.segment(n, n) = dr;
    for (int s = 0; 2 * s + 1 < twoL; ++s) {
        out(2 * n + 2 * s) = -dw(2 * s + 1);
        out(2 * n + 2 * s + 1) = dw(2 * s);
    }
    return out;
}

} // namespace

PhasePoint flow_point(const JetFunction& S, double t, const PhasePoint& x0,
                      const FlowOptions& opt) {
    const int n = static_cast<int>(x0.r.size());
    const int twoL = static_cast<int>(x0.w.size());
    const double dir = t >= 0 ? 1.0 : -1.0;
    const double T = std::abs(t);
    if (T == 0.0) return x0;

    // Dormand-Prince 5(4) coefficients
    static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static const double a21 = 1.0 / 5;
    static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
    static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static const double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695, e4 = 393.0 / 640,
                        e5 = -92097.0 / 339200, e6 = 187.0 / 2100, e7 = 1.0 / 40;

    Eigen::VectorXcd y = pack(x0);
    double s = 0.0;
    double h = std::min(opt.h_init, T);
    int steps = 0;
    auto f = [&](const Eigen::VectorXcd& v) { return (field(S, v, n, twoL) * dir).eval(); };

    Eigen::VectorXcd k1 = f(y);
    while (s < T) {
        if (++steps > opt.max_steps) throw std::runtime_error("flow_point: step budget exceeded");
        h = std::min(h, T - s);
        const Eigen::VectorXcd k2 = f(y + h * (a21 * k1));
        const Eigen::VectorXcd k3 = f(y + h * (a31 * k1 + a32 * k2));
        const Eigen::VectorXcd k4 = f(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const Eigen::VectorXcd k5 = f(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const Eigen::VectorXcd k6 = f(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const Eigen::VectorXcd y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const Eigen::VectorXcd k7 = f(y5);
        const Eigen::VectorXcd y4 =
            y + h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
        const double err = (y5 - y4).cwiseAbs().maxCoeff() / scale;
        if (err <= opt.tol || h <= opt.h_min) {
            s += h;
            y = y5;
            k1 = k7; // FSAL
            if (opt.guard) {
                const PhasePoint xi = unpack(y, n, twoL);
                if (domain_norm(xi, S.model(), *opt.guard) > opt.escape_norm)
                    throw FlowEscapeError(dir * s);
            }
        }
        const double fac =
            err > 0 ? 0.9 * std::pow(opt.tol / err, 0.2) : 4.0;
        h *= std::min(4.0, std::max(0.2, fac));
        h = std::max(h, opt.h_min);
    }
    (void)c2; (void)c3; (void)c4; (void)c5;
    return unpack(y, n, twoL);
}

PhasePoint flow_composition(const std::vector<JetFunction>& gens, const PhasePoint& x0,
                            const FlowOptions& opt) {
    PhasePoint x = x0;
    for (const auto& S : gens) x = flow_point(S, 1.0, x, opt);
    return x;
}

} // namespace kamforge
