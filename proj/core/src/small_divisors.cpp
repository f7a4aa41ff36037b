#include "kamforge/small_divisors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "kamforge/rng.hpp"

namespace kamforge {

namespace {
const cd IU(0.0, 1.0);

double kdot(const ModeVec& k, const Eigen::VectorXd& omega) {
    double s = 0.0;
    for (int a = 0; a < omega.size(); ++a) s += double(k[a]) * omega(a);
    return s;
}

bool vec_equal(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return a.size() == b.size() && (a - b).cwiseAbs().maxCoeff() == 0.0;
}

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B) {
    Eigen::MatrixXcd K(A.rows() * B.rows(), A.cols() * B.cols());
    for (int i = 0; i < A.rows(); ++i)
        for (int j = 0; j < A.cols(); ++j)
            K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return K;
}

std::vector<ModeVec> modes_up_to(int n, int N, bool include_zero) {
    ModeSet ms(n, N);
    std::vector<ModeVec> out;
    for (int i = 0; i < ms.size(); ++i) {
        if (!include_zero && i == ms.zero_index()) continue;
        out.push_back(ms.mode(i));
    }
    return out;
}

// dense real-form block of A restricted to given sites, (p,q) interleaved
Eigen::MatrixXcd dense_block(const BlockMatrix& A, const std::vector<int>& sites) {
    const int m = static_cast<int>(sites.size());
    Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(2 * m, 2 * m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const Matrix2* blk = A.find(sites[i], sites[j]);
            if (blk) D.block<2, 2>(2 * i, 2 * j) = *blk;
        }
    return D;
}

Eigen::MatrixXcd blockdiag_j(int m) {
    Eigen::MatrixXcd J = Eigen::MatrixXcd::Zero(2 * m, 2 * m);
    for (int i = 0; i < m; ++i) J.block<2, 2>(2 * i, 2 * i) = sympJ();
    return J;
}

} // namespace

ParamDomain ParamDomain::monte_carlo(int dim_p, int count, uint64_t seed) {
    ParamDomain d;
    d.dim_p = dim_p;
    d.seed = seed;
    Rng rng(seed);
    d.samples.reserve(count);
    for (int i = 0; i < count; ++i) {
        auto v = rng.unit_ball(dim_p);
        d.samples.push_back(Eigen::Map<Eigen::VectorXd>(v.data(), dim_p));
    }
    return d;
}

ParamDomain ParamDomain::grid_1d(int count) {
    ParamDomain d;
    d.dim_p = 1;
    d.samples.reserve(count);
    for (int i = 0; i < count; ++i) {
        Eigen::VectorXd v(1);
        v(0) = -1.0 + 2.0 * (i + 0.5) / count;
        d.samples.push_back(v);
    }
    return d;
}

std::string DivisorOperator::label() const {
    std::ostringstream os;
    switch (kind) {
        case DivisorKind::Scalar: os << "scalar"; break;
        case DivisorKind::Block: os << "block[" << block_a << "]"; break;
        case DivisorKind::PairSum: os << "pair+[" << block_a << "," << block_b << "]"; break;
        case DivisorKind::PairDiff: os << "pair-[" << block_a << "," << block_b << "]"; break;
    }
    os << " k=(";
    for (int i = 0; i < 4; ++i) {
        if (k[i] || i == 0) os << (i ? "," : "") << k[i];
    }
    os << ")";
    return os.str();
}

double inv_norm(const Eigen::MatrixXcd& m) {
    if (m.size() == 0) return 0.0;
    if (m.rows() == 1 && m.cols() == 1) {
        const double v = std::abs(m(0, 0));
        return v < 1e-300 ? std::numeric_limits<double>::infinity() : 1.0 / v;
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    return smin < 1e-300 ? std::numeric_limits<double>::infinity() : 1.0 / smin;
}

double inv_norm(const DivisorOperator& L) { return inv_norm(L.mat); }

DivisorOperator build_scalar(const ModeVec& k, const NormalFormHamiltonian& h,
                             const Eigen::VectorXd& rho) {
    bool zero = true;
    for (int i = 0; i < 4; ++i) zero = zero && k[i] == 0;
    if (zero) throw std::invalid_argument("build_scalar: k = 0");
    Eigen::VectorXd omega = h.omega_at(rho);
    if (h.omega_shift.size() && vec_equal(rho, h.rho)) omega += h.omega_shift;
    DivisorOperator L;
    L.kind = DivisorKind::Scalar;
    L.k = k;
    L.mat = Eigen::MatrixXcd::Constant(1, 1, kdot(k, omega));
    return L;
}

DivisorOperator build_block(const ModeVec& k, int block_id, const NormalFormHamiltonian& h,
                            const BlockDecomposition& d, const Eigen::VectorXd& rho) {
    if (block_id < 0 || block_id >= d.n_blocks())
        throw std::invalid_argument("build_block: unknown block");
    NormalFormHamiltonian at = h;
    if (!vec_equal(rho, h.rho)) {
        at.rho = rho;
        at.a_corr = BlockMatrix(*h.model); // corrections are data at h.rho only
        at.omega_shift = Eigen::VectorXd::Zero(h.omega_shift.size());
    }
    const auto& sites = d.block(block_id);
    const Eigen::MatrixXcd A = dense_block(at.a_matrix(), sites);
    const Eigen::MatrixXcd J = blockdiag_j(static_cast<int>(sites.size()));
    DivisorOperator L;
    L.kind = DivisorKind::Block;
    L.k = k;
    L.block_a = block_id;
    L.mat = kdot(k, at.omega()) * Eigen::MatrixXcd::Identity(A.rows(), A.cols()) + IU * (A * J);
    return L;
}

DivisorOperator build_pair(const ModeVec& k, int block_a, int block_b,
                           const NormalFormHamiltonian& h, const BlockDecomposition& d,
                           const Eigen::VectorXd& rho, bool sum_case) {
    NormalFormHamiltonian at = h;
    if (!vec_equal(rho, h.rho)) {
        at.rho = rho;
        at.a_corr = BlockMatrix(*h.model);
        at.omega_shift = Eigen::VectorXd::Zero(h.omega_shift.size());
    }
    const double ko = kdot(k, at.omega());
    const bool a_is_f = block_a == d.f_block();
    const bool b_is_f = block_b == d.f_block();

    // operator applied column-by-column to basis matrices
    auto materialize = [&](int rows, int cols, auto&& action) {
        Eigen::MatrixXcd M(rows * cols, rows * cols);
        Eigen::MatrixXcd E = Eigen::MatrixXcd::Zero(rows, cols);
        int col = 0;
        for (int j = 0; j < cols; ++j)
            for (int i = 0; i < rows; ++i) {
                E(i, j) = 1.0;
                Eigen::MatrixXcd Y = action(E);
                M.col(col++) = Eigen::Map<Eigen::VectorXcd>(Y.data(), Y.size());
                E(i, j) = 0.0;
            }
        return M;
    };

    DivisorOperator L;
    L.kind = sum_case ? DivisorKind::PairSum : DivisorKind::PairDiff;
    L.k = k;
    L.block_a = block_a;
    L.block_b = block_b;

    if (!a_is_f && !b_is_f) {
        const Eigen::MatrixXcd Qa = at.hermitian_block(d.block(block_a));
        const Eigen::MatrixXcd Qb = at.hermitian_block(d.block(block_b));
        const Eigen::MatrixXcd QaT = Qa.transpose();
        const Eigen::MatrixXcd QbT = Qb.transpose();
        L.mat = materialize(int(Qa.rows()), int(Qb.rows()), [&](const Eigen::MatrixXcd& X) {
            return sum_case ? (ko * X + QaT * X + X * Qb).eval()
                            : (ko * X + QaT * X - X * QbT).eval();
        });
        return L;
    }
    if (!a_is_f && b_is_f) {
        const Eigen::MatrixXcd Qa = at.hermitian_block(d.block(block_a)).transpose();
        const Eigen::MatrixXd H = at.h_f();
        const Eigen::MatrixXd JH = blockdiag_j(int(H.rows() / 2)).real() * H;
        L.mat = materialize(int(Qa.rows()), int(H.rows()), [&](const Eigen::MatrixXcd& X) {
            return (ko * X + Qa * X - IU * X * JH).eval();
        });
        return L;
    }
    if (a_is_f && !b_is_f) {
        const Eigen::MatrixXcd Qb = at.hermitian_block(d.block(block_b));
        const Eigen::MatrixXd H = at.h_f();
        const Eigen::MatrixXd HJ = H * blockdiag_j(int(H.rows() / 2)).real();
        L.mat = materialize(int(H.rows()), int(Qb.rows()), [&](const Eigen::MatrixXcd& X) {
            return (ko * X + IU * HJ * X + X * Qb).eval();
        });
        return L;
    }
    const Eigen::MatrixXd H = at.h_f();
    const Eigen::MatrixXd JH = blockdiag_j(int(H.rows() / 2)).real() * H;
    const Eigen::MatrixXd HJ = H * blockdiag_j(int(H.rows() / 2)).real();
    L.mat = materialize(int(H.rows()), int(H.rows()), [&](const Eigen::MatrixXcd& X) {
        return (ko * X + IU * HJ * X - IU * X * JH).eval();
    });
    return L;
}

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        if (x[i] <= 0 || y[i] <= 0) continue;
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 2) return 0.0;
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ExclusionReport scan_measure(const NormalFormHamiltonian& h, const ScanSpec& spec,
                             const ParamDomain& domain, const BlockDecomposition* d,
                             int workers) {
    if (domain.samples.size() < 100)
        throw std::invalid_argument("scan_measure: need at least 100 samples");
    const int n = h.model->n_tangential();
    const auto modes = modes_up_to(n, spec.n_modes, false);

    std::vector<int> blocks;
    std::vector<std::pair<int, int>> pairs;
    if ((spec.include_blocks || spec.include_pairs) && d) {
        for (int b = 0; b < d->n_blocks(); ++b) {
            const auto& sites = d->block(b);
            if (b != d->f_block() && h.model->site(sites[0]).norm() > spec.max_block_norm)
                continue;
            blocks.push_back(b);
        }
        if (spec.include_pairs) {
            for (size_t i = 0; i < blocks.size(); ++i)
                for (size_t j = i; j < blocks.size(); ++j) {
                    const int ba = blocks[i], bb = blocks[j];
                    const int ra = d->block(ba)[0], rb = d->block(bb)[0];
                    if (ba != d->f_block() && bb != d->f_block() &&
                        pseudo_dist(h.model->site(ra), h.model->site(rb)) > spec.pair_band)
                        continue;
                    pairs.emplace_back(ba, bb);
                }
        }
    }

    const size_t S = domain.samples.size();
    std::vector<double> worst(S, 0.0);
    auto work = [&](size_t lo, size_t hi) {
        for (size_t s = lo; s < hi; ++s) {
            const Eigen::VectorXd& rho = domain.samples[s];
            double w = 0.0;
            for (const auto& k : modes) {
                w = std::max(w, inv_norm(build_scalar(k, h, rho)));
                if (spec.include_blocks && d)
                    for (int b : blocks) w = std::max(w, inv_norm(build_block(k, b, h, *d, rho)));
                if (spec.include_pairs && d)
                    for (const auto& [ba, bb] : pairs) {
                        w = std::max(w, inv_norm(build_pair(k, ba, bb, h, *d, rho, false)));
                        w = std::max(w, inv_norm(build_pair(k, ba, bb, h, *d, rho, true)));
                    }
            }
            worst[s] = w;
        }
    };
    if (workers <= 1) {
        work(0, S);
    } else {
        std::vector<std::thread> pool;
        const size_t chunk = (S + workers - 1) / workers;
        for (int t = 0; t < workers; ++t) {
            const size_t lo = t * chunk, hi = std::min(S, lo + chunk);
            if (lo < hi) pool.emplace_back(work, lo, hi);
        }
        for (auto& th : pool) th.join();
    }

    ExclusionReport rep;
    rep.kappas = spec.kappas;
    rep.n_modes = spec.n_modes;
    rep.per_sample_worst = worst;
    for (double w : worst) rep.worst_inv_norm = std::max(rep.worst_inv_norm, w);
    for (double kappa : spec.kappas) {
        int excluded = 0;
        for (double w : worst)
            if (kappa > 0 && w > 1.0 / kappa) ++excluded;
        rep.excluded_fraction.push_back(double(excluded) / double(S));
    }
    rep.slope = fit_loglog_slope(rep.kappas, rep.excluded_fraction);
    return rep;
}

double cutoff(double t, double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("cutoff: need lo < hi");
    if (t <= lo) return 0.0;
    if (t >= hi) return 1.0;
    const double s = (t - lo) / (hi - lo);
    const double a = std::exp(-1.0 / s);
    const double b = std::exp(-1.0 / (1.0 - s));
    return a / (a + b);
}

A1Report check_A1(const NormalFormHamiltonian& h, const ParamDomain& domain) {
    A1Report rep;
    const auto& c = h.consts;
    double m_ter = 1e300, m_pairs = 1e300, m_lower = 1e300, m_sep = 1e300;
    double min_lambda = 1e300, min_sep_attained = 1e300;
    const auto& inf = h.model->inf_ids();
    for (const auto& rho : domain.samples) {
        std::vector<double> lam(inf.size());
        for (size_t i = 0; i < inf.size(); ++i)
            lam[i] = h.lambda_up(h.model->site(inf[i]), rho);
        for (size_t i = 0; i < inf.size(); ++i) {
            const Site& a = h.model->site(inf[i]);
            const double an2 = double(a.norm2());
            m_ter = std::min(m_ter,
                             c.c / std::pow(bracket_norm(a), c.beta2) - std::abs(lam[i] - an2));
            m_lower = std::min(m_lower, lam[i] - c.c_prime);
            min_lambda = std::min(min_lambda, lam[i]);
            for (size_t j = i + 1; j < inf.size(); ++j) {
                const Site& b = h.model->site(inf[j]);
                const double bn2 = double(b.norm2());
                const double lhs = std::abs((lam[i] - lam[j]) - (an2 - bn2));
                const double rhs = c.c_prime * c.c *
                                   std::max(1.0 / std::pow(bracket_norm(a), c.beta3),
                                            1.0 / std::pow(bracket_norm(b), c.beta3));
                m_pairs = std::min(m_pairs, rhs - lhs);
                if (a.norm2() != b.norm2()) {
                    const double sep = std::abs(lam[i] - lam[j]);
                    m_sep = std::min(m_sep, sep - c.c_prime);
                    min_sep_attained = std::min(min_sep_attained, sep);
                }
            }
        }
        if (!h.model->f_ids().empty()) {
            const Eigen::MatrixXd H = h.h_f_up(rho);
            const int m = int(H.rows() / 2);
            const Eigen::MatrixXcd JH = blockdiag_j(m) * H.cast<cd>();
            m_lower = std::min(m_lower, 1.0 / inv_norm(JH) - c.c_prime);
            for (size_t i = 0; i < inf.size(); ++i) {
                const Eigen::MatrixXcd M =
                    lam[i] * Eigen::MatrixXcd::Identity(2 * m, 2 * m) - IU * JH;
                m_sep = std::min(m_sep, 1.0 / inv_norm(M) - c.c_prime);
            }
        }
    }
    rep.margin_asymptotic = m_ter;
    rep.margin_pairs = m_pairs;
    rep.margin_lower = m_lower;
    rep.margin_separation = m_sep;
    rep.c_prime_measured = std::min(min_lambda, min_sep_attained);
    rep.ok = m_ter >= 0 && m_pairs >= 0 && m_lower >= 0 && m_sep >= 0;
    return rep;
}

A1Calibration calibrate_a1(const NormalFormHamiltonian& h, const ParamDomain& domain) {
    A1Calibration cal;
    const auto& c = h.consts;
    const auto& inf = h.model->inf_ids();
    double sup_ter = 0.0, sup_pairs = 0.0, min_lower = 1e300;
    for (const auto& rho : domain.samples) {
        std::vector<double> lam(inf.size());
        for (size_t i = 0; i < inf.size(); ++i)
            lam[i] = h.lambda_up(h.model->site(inf[i]), rho);
        for (size_t i = 0; i < inf.size(); ++i) {
            const Site& a = h.model->site(inf[i]);
            sup_ter = std::max(sup_ter, std::abs(lam[i] - double(a.norm2())) *
                                            std::pow(bracket_norm(a), c.beta2));
            min_lower = std::min(min_lower, lam[i]);
            for (size_t j = i + 1; j < inf.size(); ++j) {
                const Site& b = h.model->site(inf[j]);
                const double lhs =
                    std::abs((lam[i] - lam[j]) - double(a.norm2() - b.norm2()));
                const double wgt = std::max(1.0 / std::pow(bracket_norm(a), c.beta3),
                                            1.0 / std::pow(bracket_norm(b), c.beta3));
                sup_pairs = std::max(sup_pairs, lhs / wgt);
                if (a.norm2() != b.norm2())
                    min_lower = std::min(min_lower, std::abs(lam[i] - lam[j]));
            }
        }
        if (!h.model->f_ids().empty()) {
            const Eigen::MatrixXd H = h.h_f_up(rho);
            const int m = int(H.rows() / 2);
            const Eigen::MatrixXcd JH = blockdiag_j(m) * H.cast<cd>();
            min_lower = std::min(min_lower, 1.0 / inv_norm(JH));
            for (size_t i = 0; i < inf.size(); ++i) {
                const Eigen::MatrixXcd M =
                    lam[i] * Eigen::MatrixXcd::Identity(2 * m, 2 * m) - IU * JH;
                min_lower = std::min(min_lower, 1.0 / inv_norm(M));
            }
        }
    }
    cal.c = 1.0; // the largest admissible c relaxes both the ter and pair margins
    cal.sup_pairs = sup_pairs;
    cal.min_lower = min_lower;
    const double lo = sup_pairs / cal.c;
    cal.feasible = lo < min_lower && sup_ter <= 1.0;
    cal.c_prime = cal.feasible ? 0.5 * (lo + min_lower) : 0.99 * min_lower;
    cal.c_prime = std::min(cal.c_prime, 1.0);
    return cal;
}

namespace {

// eigenvalues of a Hermitian family matched across a parameter step by
// maximal eigenvector overlap
std::vector<double> matched_eigen_shift(const Eigen::MatrixXcd& M0, const Eigen::MatrixXcd& M1) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> e0(M0), e1(M1);
    const int m = int(M0.rows());
    std::vector<double> shift(m);
    for (int i = 0; i < m; ++i) {
        int best = 0;
        double ov = -1.0;
        for (int j = 0; j < m; ++j) {
            const double o = std::abs(e0.eigenvectors().col(i).dot(e1.eigenvectors().col(j)));
            if (o > ov) { ov = o; best = j; }
        }
        shift[i] = e1.eigenvalues()(best) - e0.eigenvalues()(i);
    }
    return shift;
}

} // namespace

A2Report check_A2_sampled(const NormalFormHamiltonian& h, const ParamDomain& domain,
                          double delta0, int n_modes, const BlockDecomposition& d,
                          double fd_step, double max_block_norm) {
    A2Report rep;
    const int n = h.model->n_tangential();
    const int P = h.rho.size() ? int(h.rho.size()) : domain.dim_p;
    const auto modes = modes_up_to(n, n_modes, false);

    std::vector<int> blocks; // Lambda_inf blocks within the norm window, plus -1 for "empty"
    blocks.push_back(-1);
    for (int b = 0; b < d.n_blocks(); ++b) {
        if (b == d.f_block()) continue;
        if (h.model->site(d.block(b)[0]).norm() <= max_block_norm) blocks.push_back(b);
    }

    auto pair_op = [&](const ModeVec& k, int ba, int bb, bool sum_case,
                       const Eigen::VectorXd& rho) -> Eigen::MatrixXcd {
        NormalFormHamiltonian at = h;
        at.rho = rho;
        at.a_corr = BlockMatrix(*h.model);
        at.omega_shift = Eigen::VectorXd::Zero(h.omega_shift.size());
        const double ko = kdot(k, at.omega());
        if (ba < 0 && bb < 0) return Eigen::MatrixXcd::Constant(1, 1, ko);
        Eigen::MatrixXcd Qa = ba >= 0 ? at.hermitian_block(d.block(ba))
                                      : Eigen::MatrixXcd::Zero(0, 0);
        Eigen::MatrixXcd Qb = bb >= 0 ? at.hermitian_block(d.block(bb))
                                      : Eigen::MatrixXcd::Zero(0, 0);
        if (ba < 0) return (ko * Eigen::MatrixXcd::Identity(Qb.rows(), Qb.cols()) +
                            (sum_case ? 1.0 : -1.0) * Qb).eval();
        if (bb < 0) return (ko * Eigen::MatrixXcd::Identity(Qa.rows(), Qa.cols()) + Qa).eval();
        // Hermitian representative of the Sylvester spectrum: kron structure
        const int ma = int(Qa.rows()), mb = int(Qb.rows());
        Eigen::MatrixXcd M = ko * Eigen::MatrixXcd::Identity(ma * mb, ma * mb);
        M += kron(Eigen::MatrixXcd::Identity(mb, mb), Qa);
        M += (sum_case ? 1.0 : -1.0) *
             kron(Qb.transpose(), Eigen::MatrixXcd::Identity(ma, ma));
        return M;
    };

    auto run_case_i = [&](const ModeVec& k, int ba, int bb, bool sum_case) {
        A2CaseReport cr;
        cr.k = k;
        cr.case_id = 1;
        cr.blocks = std::to_string(ba) + "," + std::to_string(bb) + (sum_case ? "+" : "-");
        // branch 1: delta0-invertibility at every sample
        double worst_inv = 0.0;
        for (const auto& rho : domain.samples)
            worst_inv = std::max(worst_inv, inv_norm(pair_op(k, ba, bb, sum_case, rho)));
        if (worst_inv <= 1.0 / delta0) {
            cr.branch = A2Branch::Invertible;
            cr.margin = 1.0 / std::max(worst_inv, 1e-300);
            return cr;
        }
        // branch 2: a coordinate direction with eigenvalue-derivative margin
        for (int z = 0; z < P; ++z) {
            double worst = 1e300;
            for (const auto& rho : domain.samples) {
                Eigen::VectorXd e = Eigen::VectorXd::Zero(P);
                e(z) = fd_step;
                const auto shifts = matched_eigen_shift(pair_op(k, ba, bb, sum_case, rho - e),
                                                        pair_op(k, ba, bb, sum_case, rho + e));
                for (double s : shifts) worst = std::min(worst, std::abs(s) / (2 * fd_step));
            }
            if (worst >= delta0) {
                cr.branch = A2Branch::Transverse;
                cr.direction = z;
                cr.margin = worst;
                return cr;
            }
        }
        cr.branch = A2Branch::Failed;
        cr.margin = 0.0;
        return cr;
    };

    for (const auto& k : modes) {
        // case (i): a, b in Lambda_inf or empty
        for (size_t i = 0; i < blocks.size(); ++i)
            for (size_t j = i; j < blocks.size(); ++j)
                for (bool sum_case : {false, true}) {
                    if (blocks[i] < 0 && blocks[j] < 0 && sum_case) continue;
                    rep.cases.push_back(run_case_i(k, blocks[i], blocks[j], sum_case));
                }
        // cases (ii) and (iii) involve the finite block
        if (!h.model->f_ids().empty()) {
            auto op_iii = [&](const ModeVec& kk, int side, const Eigen::VectorXd& rho) {
                NormalFormHamiltonian at = h;
                at.rho = rho;
                at.a_corr = BlockMatrix(*h.model);
                at.omega_shift = Eigen::VectorXd::Zero(h.omega_shift.size());
                const double ko = kdot(kk, at.omega());
                const Eigen::MatrixXd H = at.h_f();
                const int m = int(H.rows());
                const Eigen::MatrixXcd JH = blockdiag_j(m / 2) * H.cast<cd>();
                if (side == 0) return (ko * Eigen::MatrixXcd::Identity(m, m) - IU * JH).eval();
                // ad-type on F x F matrices
                Eigen::MatrixXcd M = ko * Eigen::MatrixXcd::Identity(m * m, m * m);
                M -= IU * kron(Eigen::MatrixXcd::Identity(m, m), JH);
                M += IU * kron(JH.transpose(), Eigen::MatrixXcd::Identity(m, m));
                return M;
            };
            for (int side : {0, 1}) {
                A2CaseReport cr;
                cr.k = k;
                cr.case_id = side == 0 ? 2 : 3;
                cr.blocks = side == 0 ? "F" : "F,F";
                double worst_inv = 0.0;
                for (const auto& rho : domain.samples)
                    worst_inv = std::max(worst_inv, inv_norm(op_iii(k, side, rho)));
                if (worst_inv <= 1.0 / delta0) {
                    cr.branch = A2Branch::Invertible;
                    cr.margin = 1.0 / std::max(worst_inv, 1e-300);
                } else {
                    // determinant-derivative transversality along coordinate directions
                    cr.branch = A2Branch::Failed;
                    for (int z = 0; z < P && cr.branch != A2Branch::Transverse; ++z) {
                        for (int jorder = 1; jorder <= h.consts.s_star; ++jorder) {
                            double worst = 1e300;
                            for (const auto& rho : domain.samples) {
                                Eigen::VectorXd e = Eigen::VectorXd::Zero(P);
                                e(z) = fd_step;
                                const Eigen::MatrixXcd Lm = op_iii(k, side, rho - e);
                                const Eigen::MatrixXcd L0 = op_iii(k, side, rho);
                                const Eigen::MatrixXcd Lp = op_iii(k, side, rho + e);
                                const cd dm = Lm.determinant(), d0 = L0.determinant(),
                                         dp = Lp.determinant();
                                const double dj =
                                    jorder == 1
                                        ? std::abs(dp - dm) / (2 * fd_step)
                                        : std::abs(dp - 2.0 * d0 + dm) / (fd_step * fd_step);
                                const double scale = std::pow(
                                    std::max({Lm.cwiseAbs().maxCoeff(), L0.cwiseAbs().maxCoeff(),
                                              1.0}),
                                    double(L0.rows() - 1));
                                worst = std::min(worst, dj / scale);
                            }
                            if (worst >= delta0) {
                                cr.branch = A2Branch::Transverse;
                                cr.direction = z;
                                cr.margin = worst;
                                break;
                            }
                        }
                    }
                }
                rep.cases.push_back(cr);
            }
        }
    }
    for (const auto& cr : rep.cases) {
        if (cr.branch == A2Branch::Failed) rep.all_certified = false;
        if (cr.branch != A2Branch::Empty) rep.worst_margin = std::min(rep.worst_margin, cr.margin);
    }
    return rep;
}

} // namespace kamforge
