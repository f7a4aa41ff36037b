#include "kamforge/phase.hpp"

#include <cmath>
#include <stdexcept>

namespace kamforge {

ModeSet::ModeSet(int n_angles, int cutoff) : n_(n_angles), cutoff_(cutoff) {
    if (n_angles < 1 || n_angles > 4) throw std::invalid_argument("ModeSet: n_angles out of range");
    ModeVec k{0, 0, 0, 0};
    // odometer over [-N, N]^n filtered by |k|_1 <= N, ascending lexicographic
    std::array<int, 4> x{};
    for (int i = 0; i < n_; ++i) x[i] = -cutoff;
    while (true) {
        int l1 = 0;
        for (int i = 0; i < n_; ++i) l1 += std::abs(x[i]);
        if (l1 <= cutoff) {
            for (int i = 0; i < 4; ++i) k[i] = static_cast<int16_t>(i < n_ ? x[i] : 0);
            lookup_.emplace(k, static_cast<int>(modes_.size()));
            modes_.push_back(k);
        }
        int i = 0;
        for (; i < n_; ++i) {
            if (++x[i] <= cutoff) break;
            x[i] = -cutoff;
        }
        if (i == n_) break;
    }
    conj_index_.resize(modes_.size());
    for (size_t i = 0; i < modes_.size(); ++i) {
        ModeVec mk = modes_[i];
        for (int j = 0; j < n_; ++j) mk[j] = static_cast<int16_t>(-mk[j]);
        conj_index_[i] = lookup_.at(mk);
        bool is_zero = true;
        for (int j = 0; j < n_; ++j) is_zero = is_zero && modes_[i][j] == 0;
        if (is_zero) zero_ = static_cast<int>(i);
    }
}

int ModeSet::index_of(const ModeVec& k) const {
    auto it = lookup_.find(k);
    return it == lookup_.end() ? -1 : it->second;
}

PhasePoint PhasePoint::zero(const LatticeModel& model) {
    PhasePoint x;
    const int n = model.n_tangential();
    x.r = Eigen::VectorXcd::Zero(n);
    x.theta = Eigen::VectorXcd::Zero(n);
    x.w = Eigen::VectorXcd::Zero(2 * static_cast<int>(model.w_ids().size()));
    return x;
}

bool PhasePoint::is_real(double tol) const {
    auto ok = [tol](const Eigen::VectorXcd& v) {
        for (int i = 0; i < v.size(); ++i)
            if (std::abs(v(i).imag()) > tol) return false;
        return true;
    };
    return ok(r) && ok(theta) && ok(w);
}

double y_norm(const Eigen::VectorXcd& zeta, const LatticeModel& model,
              const std::vector<int>& site_ids, double gamma1, double gamma2) {
    double s = 0.0;
    for (size_t i = 0; i < site_ids.size(); ++i) {
        const double w = site_weight(model.site(site_ids[i]), gamma1, gamma2);
        s += (std::norm(zeta(2 * i)) + std::norm(zeta(2 * i + 1))) * w * w;
    }
    return std::sqrt(s);
}

double y_norm_w(const Eigen::VectorXcd& w, const LatticeModel& model, double gamma1,
                double gamma2) {
    return y_norm(w, model, model.w_ids(), gamma1, gamma2);
}

cd omega_form(const Eigen::VectorXcd& zeta, const Eigen::VectorXcd& zeta_prime) {
    if (zeta.size() != zeta_prime.size())
        throw std::invalid_argument("omega_form: layout mismatch");
    cd s = 0.0;
    for (int i = 0; 2 * i + 1 < zeta.size(); ++i)
        s += zeta(2 * i) * zeta_prime(2 * i + 1) - zeta(2 * i + 1) * zeta_prime(2 * i);
    return s;
}

void DomainSpec::validate() const {
    if (!(sigma > 0 && sigma <= 1)) throw std::invalid_argument("DomainSpec: need 0 < sigma <= 1");
    if (!(mu > 0 && mu <= 1)) throw std::invalid_argument("DomainSpec: need 0 < mu <= 1");
    gamma.validate();
}

double domain_norm(const PhasePoint& x, const LatticeModel& model, const DomainSpec& spec) {
    double s = 0.0;
    const auto& a_ids = model.a_ids();
    for (size_t i = 0; i < a_ids.size(); ++i) {
        const double w = site_weight(model.site(a_ids[i]), spec.gamma.gamma1, spec.gamma.gamma2);
        const double im = x.theta(i).imag();
        s += (std::norm(x.r(i)) / (spec.mu * spec.mu) + im * im / (spec.sigma * spec.sigma)) * w * w;
    }
    const auto& w_ids = model.w_ids();
    for (size_t i = 0; i < w_ids.size(); ++i) {
        const double w = site_weight(model.site(w_ids[i]), spec.gamma.gamma1, spec.gamma.gamma2);
        s += (std::norm(x.w(2 * i)) + std::norm(x.w(2 * i + 1))) / (spec.mu * spec.mu) * w * w;
    }
    return std::sqrt(s);
}

std::vector<PhasePoint> sample_domain(const LatticeModel& model, const DomainSpec& spec,
                                      int count, uint64_t seed, double fill) {
    Rng rng(seed);
    const int n = model.n_tangential();
    const int L = static_cast<int>(model.w_ids().size());
    std::vector<PhasePoint> out;
    out.reserve(count);
    for (int s = 0; s < count; ++s) {
        PhasePoint x = PhasePoint::zero(model);
        for (int i = 0; i < n; ++i) {
            x.r(i) = cd(rng.normal(), rng.normal());
            x.theta(i) = cd(rng.uniform(0.0, 2.0 * M_PI), rng.normal());
        }
        for (int i = 0; i < 2 * L; ++i) x.w(i) = cd(rng.normal(), rng.normal());
        const double dn = domain_norm(x, model, spec);
        const double scale = dn > 0 ? fill / dn : 0.0;
        x.r *= scale;
        for (int i = 0; i < n; ++i) x.theta(i) = cd(x.theta(i).real(), x.theta(i).imag() * scale);
        x.w *= scale;
        out.push_back(std::move(x));
    }
    return out;
}

std::vector<PhasePoint> sample_real_domain(const LatticeModel& model, const DomainSpec& spec,
                                           int count, uint64_t seed, double fill) {
    Rng rng(seed);
    const int n = model.n_tangential();
    const int L = static_cast<int>(model.w_ids().size());
    std::vector<PhasePoint> out;
    out.reserve(count);
    for (int s = 0; s < count; ++s) {
        PhasePoint x = PhasePoint::zero(model);
        for (int i = 0; i < n; ++i) {
            x.r(i) = rng.normal();
            x.theta(i) = rng.uniform(0.0, 2.0 * M_PI);
        }
        for (int i = 0; i < 2 * L; ++i) x.w(i) = rng.normal();
        const double dn = domain_norm(x, model, spec);
        const double scale = dn > 0 ? fill / dn : 0.0;
        x.r *= scale;
        x.w *= scale;
        out.push_back(std::move(x));
    }
    return out;
}

} // namespace kamforge
