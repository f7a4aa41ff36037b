#include "kamforge/weights.hpp"

#include <cmath>
#include <stdexcept>

#include "kamforge/rng.hpp"

namespace kamforge {

void WeightParams::validate() const {
    if (gamma1 < 0) throw std::invalid_argument("WeightParams: gamma1 must be >= 0");
    if (kappa < 0) throw std::invalid_argument("WeightParams: kappa must be >= 0");
    if (Cw < 1) throw std::invalid_argument("WeightParams: Cw must be >= 1");
}

double weight(const Site& a, const Site& b, const WeightParams& p) {
    const double d = pseudo_dist(a, b);
    const double mab = std::max(d, 1.0);
    const double mn = std::min(bracket_norm(a), bracket_norm(b));
    return p.Cw * std::exp(p.gamma1 * d) * std::pow(mab, p.gamma2) * std::pow(mn, p.kappa);
}

double site_weight(const Site& a, double gamma1, double gamma2) {
    const double n = a.norm();
    return std::exp(gamma1 * n) * std::pow(std::max(n, 1.0), gamma2);
}

namespace {

Site random_site(Rng& rng, int d, double radius) {
    Site s;
    s.dim = d;
    const int r = static_cast<int>(radius);
    while (true) {
        for (int i = 0; i < d; ++i)
            s.c[i] = static_cast<int32_t>(rng.uniform_index(2 * r + 1)) - r;
        if (s.norm2() <= static_cast<int64_t>(radius * radius)) return s;
    }
}

} // namespace

double calibrate_weight_constant(int d_star, double radius, double gamma1, double gamma2,
                                 double kappa, uint64_t seed, int n_samples) {
    double C = std::exp2(std::ceil(gamma2 + kappa + 1.0));
    if (C < 1.0) C = 1.0;

    const Site origin = Site::zero(d_star);
    for (int attempt = 0; attempt < 60; ++attempt) {
        Rng rng(seed);
        WeightParams g{gamma1, gamma2, kappa, C};
        WeightParams g0 = g.with_kappa(0.0);
        bool ok = true;
        for (int i = 0; i < n_samples && ok; ++i) {
            const Site a = random_site(rng, d_star, radius);
            const Site b = random_site(rng, d_star, radius);
            const Site c = random_site(rng, d_star, radius);
            if (gamma2 >= kappa && weight(a, b, g) > weight(a, c, g0) * weight(c, b, g) * (1 + 1e-12))
                ok = false;
            // (ii) on a grid of gt between -gamma and gamma
            for (double t : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
                WeightParams gt{t * gamma1, t * gamma2, kappa, C};
                if (weight(a, origin, gt) > weight(a, b, g) * weight(b, origin, gt) * (1 + 1e-12)) {
                    ok = false;
                    break;
                }
            }
        }
        if (ok) return C;
        C *= 2.0;
    }
    throw std::runtime_error("calibrate_weight_constant: no passing constant found");
}

} // namespace kamforge
