#include "kamforge/normal_form.hpp"

#include <cmath>
#include <stdexcept>

namespace kamforge {

Eigen::VectorXd NormalFormHamiltonian::omega() const {
    Eigen::VectorXd w = omega_up(rho);
    if (omega_shift.size()) w += omega_shift;
    return w;
}

Eigen::VectorXd NormalFormHamiltonian::omega_at(const Eigen::VectorXd& rho_pt) const {
    return omega_up(rho_pt);
}

double NormalFormHamiltonian::lambda(int site_id) const {
    double l = lambda_up(model->site(site_id), rho);
    const Matrix2* corr = a_corr.find(site_id, site_id);
    if (corr) l += 0.5 * (corr->operator()(0, 0).real() + corr->operator()(1, 1).real());
    return l;
}

BlockMatrix NormalFormHamiltonian::a_up_matrix() const {
    BlockMatrix A(*model);
    for (int id : model->inf_ids())
        A.set(id, id, (lambda_up(model->site(id), rho) * Matrix2::Identity()).eval());
    const auto& f_ids = model->f_ids();
    if (!f_ids.empty()) {
        const Eigen::MatrixXd H = h_f_up(rho);
        for (size_t i = 0; i < f_ids.size(); ++i)
            for (size_t j = 0; j < f_ids.size(); ++j) {
                Matrix2 blk = H.block<2, 2>(2 * i, 2 * j).cast<cd>();
                if (blk.cwiseAbs().maxCoeff() > 0) A.set(f_ids[i], f_ids[j], blk);
            }
    }
    return A;
}

BlockMatrix NormalFormHamiltonian::a_matrix() const {
    BlockMatrix A = a_up_matrix();
    if (!a_corr.empty()) A += a_corr;
    return A;
}

Eigen::MatrixXcd NormalFormHamiltonian::hermitian_block(const std::vector<int>& sites) const {
    const int m = static_cast<int>(sites.size());
    Eigen::MatrixXcd Q = Eigen::MatrixXcd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        Q(i, i) = lambda_up(model->site(sites[i]), rho);
        for (int j = 0; j < m; ++j) {
            const Matrix2* corr = a_corr.find(sites[i], sites[j]);
            if (!corr) continue;
            // normal form block c I + s J -> Q entry c + i s
            const double c = 0.5 * ((*corr)(0, 0).real() + (*corr)(1, 1).real());
            const double s = 0.5 * ((*corr)(1, 0).real() - (*corr)(0, 1).real());
            Q(i, j) += cd(c, s);
        }
    }
    return Q;
}

Eigen::MatrixXd NormalFormHamiltonian::h_f() const {
    const auto& f_ids = model->f_ids();
    const int m = 2 * static_cast<int>(f_ids.size());
    Eigen::MatrixXd H = m ? h_f_up(rho) : Eigen::MatrixXd::Zero(0, 0);
    for (size_t i = 0; i < f_ids.size(); ++i)
        for (size_t j = 0; j < f_ids.size(); ++j) {
            const Matrix2* corr = a_corr.find(f_ids[i], f_ids[j]);
            if (corr) H.block<2, 2>(2 * i, 2 * j) += corr->real();
        }
    return H;
}

double NormalFormHamiltonian::hypothesis_b_size(const BlockDecomposition& d) const {
    double worst = 0.0;
    for (int b = 0; b < d.n_blocks(); ++b) {
        const auto& sites = d.block(b);
        const int m = static_cast<int>(sites.size());
        Eigen::MatrixXcd blk = Eigen::MatrixXcd::Zero(2 * m, 2 * m);
        bool any = false;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                const Matrix2* corr = a_corr.find(sites[i], sites[j]);
                if (!corr) continue;
                blk.block<2, 2>(2 * i, 2 * j) = *corr;
                any = true;
            }
        if (!any) continue;
        double min_bracket = 1e300;
        for (int i = 0; i < m; ++i)
            min_bracket = std::min(min_bracket, bracket_norm(model->site(sites[i])));
        const double op = blk.jacobiSvd().singularValues()(0);
        worst = std::max(worst, op * std::pow(min_bracket, consts.varkappa));
    }
    return worst;
}

JetFunction NormalFormHamiltonian::as_jet(int n_theta) const {
    JetFunction h = JetFunction::zero(*model, n_theta);
    const int z = h.modes().zero_index();
    const Eigen::VectorXd w = omega();
    for (int a = 0; a < model->n_tangential(); ++a) h.fr(z)(a) = w(a);
    h.fww(z) += a_matrix();
    return h;
}

double NormalFormHamiltonian::measure_chi(const std::vector<Eigen::VectorXd>& samples,
                                          double fd_step) const {
    const int P = static_cast<int>(rho.size());
    double worst = 0.0;
    auto probe = [&](const Eigen::VectorXd& pt) {
        double g1 = 0.0;
        for (int z = 0; z < P; ++z) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(P);
            e(z) = fd_step;
            // first derivatives of omega, lambda, H along z
            const Eigen::VectorXd dw = (omega_up(pt + e) - omega_up(pt - e)) / (2 * fd_step);
            g1 = std::max(g1, dw.cwiseAbs().maxCoeff());
            for (int id : model->inf_ids()) {
                const double dl = (lambda_up(model->site(id), pt + e) -
                                   lambda_up(model->site(id), pt - e)) /
                                  (2 * fd_step);
                g1 = std::max(g1, std::abs(dl));
            }
            if (!model->f_ids().empty()) {
                const Eigen::MatrixXd dH = (h_f_up(pt + e) - h_f_up(pt - e)) / (2 * fd_step);
                g1 = std::max(g1, dH.cwiseAbs().maxCoeff());
            }
            // second derivative contribution (s* = 2: C^{s*-1} norm of the gradient)
            const Eigen::VectorXd d2w =
                (omega_up(pt + e) - 2 * omega_up(pt) + omega_up(pt - e)) / (fd_step * fd_step);
            g1 = std::max(g1, d2w.cwiseAbs().maxCoeff());
        }
        return g1;
    };
    for (const auto& pt : samples) worst = std::max(worst, probe(pt));
    return worst;
}

NormalFormHamiltonian make_toy_scalar(const LatticeModel& model, int dim_p) {
    NormalFormHamiltonian h;
    h.model = &model;
    const int n = model.n_tangential();
    h.omega_up = [n](const Eigen::VectorXd& rho) {
        Eigen::VectorXd w(n);
        for (int a = 0; a < n; ++a) w(a) = rho(a % rho.size());
        return w;
    };
    h.lambda_up = [](const Site& s, const Eigen::VectorXd&) { return s.norm2() + 1.0; };
    h.h_f_up = [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(0, 0); };
    h.rho = Eigen::VectorXd::Zero(dim_p);
    h.omega_shift = Eigen::VectorXd::Zero(n);
    h.a_corr = BlockMatrix(model);
    return h;
}

} // namespace kamforge
