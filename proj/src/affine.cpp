#include "vmk/affine.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "vmk/errors.hpp"
#include "vmk/markowitz.hpp"

namespace vmk {

std::vector<std::string> AffineModel::validate() const
{
    std::vector<std::string> warnings;
    auto need = [&](bool ok, const std::string& msg) {
        if (!ok) throw std::invalid_argument("affine model: " + msg);
    };
    need(d >= 1, "d must be positive");
    need(static_cast<int>(kernels.size()) == d, "one kernel per asset is required");
    need(D.rows() == d && D.cols() == d, "D must be d x d");
    need(nu.size() == d && rho.size() == d && theta.size() == d, "nu, rho, theta must have d entries");
    need(static_cast<bool>(g0), "g0 is missing");
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j)
            if (i != j) need(D(i, j) >= 0.0, "off-diagonal entries of D must be nonnegative");
        need(std::abs(rho(i)) <= 1.0, "|rho_i| must not exceed 1");
        need(nu(i) >= 0.0, "nu_i must be nonnegative");
        need(theta(i) >= 0.0, "theta_i must be nonnegative");
        if (d > 1 && 2.0 * rho(i) * rho(i) > 1.0)
            warnings.push_back("|rho_" + std::to_string(i + 1) + "| > 1/sqrt(2): existence of psi is only known for d = 1");
    }
    Eigen::VectorXd v = g0(0.0);
    need(v.size() == d && (v.array() >= 0.0).all(), "g0 must be a nonnegative d-vector");
    return warnings;
}

Eigen::VectorXd riccati_F(const AffineModel& m, const Eigen::VectorXd& psi)
{
    Eigen::VectorXd dpsi = m.D.transpose() * psi;
    Eigen::VectorXd out(m.d);
    for (int i = 0; i < m.d; ++i) {
        const double th = m.theta(i), rh = m.rho(i), nv = m.nu(i), p = psi(i);
        out(i) = -th * th - 2.0 * th * rh * nv * p + dpsi(i) + 0.5 * nv * nv * (1.0 - 2.0 * rh * rh) * p * p;
    }
    return out;
}

ConvolutionWeights convolution_weights(const AffineModel& m, const TimeGrid& g)
{
    ConvolutionWeights w{g, Eigen::MatrixXd::Zero(m.d, g.n + 1), Eigen::MatrixXd::Zero(m.d, g.n + 1)};
    for (int i = 0; i < m.d; ++i) {
        const auto& k = m.kernels[static_cast<std::size_t>(i)];
        for (int lag = 1; lag <= g.n; ++lag) {
            const double u0 = (lag - 1) * g.dt, u1 = lag * g.dt;
            const double I = k.integral(u0, u1);
            w.integral(i, lag) = I;
            // s - t_j = lag dt - u over the cell
            w.moment(i, lag) = (u1 * I - k.moment(u0, u1)) / g.dt;
        }
    }
    return w;
}

RiccatiVolterraSolution solve_riccati_volterra(const AffineModel& m, const TimeGrid& g, VolterraScheme scheme, double cap)
{
    m.validate();
    const int n = g.n, d = m.d;
    const auto w = convolution_weights(m, g);
    RiccatiVolterraSolution sol{g, Eigen::MatrixXd::Zero(n + 1, d), Eigen::MatrixXd::Zero(n + 1, d)};
    sol.F.row(0) = riccati_F(m, sol.psi.row(0).transpose()).transpose();

    for (int k = 1; k <= n; ++k) {
        Eigen::VectorXd pred = Eigen::VectorXd::Zero(d);
        for (int j = 0; j < k; ++j) pred += w.integral.col(k - j).cwiseProduct(sol.F.row(j).transpose());
        Eigen::VectorXd psi = pred;
        if (scheme == VolterraScheme::Adams) {
            Eigen::VectorXd Fk = riccati_F(m, pred);
            psi.setZero();
            for (int j = 0; j < k; ++j) {
                Eigen::VectorXd right = (j + 1 == k) ? Fk : Eigen::VectorXd(sol.F.row(j + 1).transpose());
                Eigen::VectorXd w1 = w.moment.col(k - j);
                Eigen::VectorXd w0 = w.integral.col(k - j) - w1;
                psi += w0.cwiseProduct(sol.F.row(j).transpose()) + w1.cwiseProduct(right);
            }
        }
        if (!psi.allFinite() || psi.cwiseAbs().maxCoeff() > cap)
            throw RiccatiBlowUp("Riccati-Volterra solution exceeds the cap at t = " + std::to_string(g.node(k)), g.node(k));
        sol.psi.row(k) = psi.transpose();
        sol.F.row(k) = riccati_F(m, psi).transpose();
    }
    return sol;
}

Eigen::MatrixXd simulate_V(const AffineModel& m, const ConvolutionWeights& w, const Eigen::MatrixXd& dW)
{
    const int n = w.grid.n, d = m.d;
    const double dt = w.grid.dt;
    if (dW.rows() != d || dW.cols() != n) throw std::invalid_argument("simulate_V: dW must be d x n");
    Eigen::MatrixXd V(d, n + 1);
    Eigen::MatrixXd incr(d, n);  // D V+ + nu sqrt(V+) dW / dt per cell
    for (int k = 0; k <= n; ++k) {
        Eigen::VectorXd v = m.g0(w.grid.node(k));
        for (int j = 0; j < k; ++j) v += w.integral.col(k - j).cwiseProduct(incr.col(j));
        V.col(k) = v.cwiseMax(0.0);
        if (k < n) {
            incr.col(k) = m.D * V.col(k);
            for (int i = 0; i < d; ++i) incr(i, k) += m.nu(i) * std::sqrt(V(i, k)) * dW(i, k) / dt;
        }
    }
    return V;
}

Eigen::MatrixXd forward_g_affine(const AffineModel& m, const ConvolutionWeights& w, const Eigen::MatrixXd& V,
                                 const Eigen::MatrixXd& dW, int k)
{
    const int n = w.grid.n, d = m.d;
    const double dt = w.grid.dt;
    if (k < 0 || k > n) throw std::invalid_argument("forward_g_affine: node out of range");
    Eigen::MatrixXd incr(d, k);
    for (int j = 0; j < k; ++j) {
        incr.col(j) = m.D * V.col(j);
        for (int i = 0; i < d; ++i) incr(i, j) += m.nu(i) * std::sqrt(V(i, j)) * dW(i, j) / dt;
    }
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(d, n + 1);
    for (int i = k; i <= n; ++i) {
        Eigen::VectorXd v = m.g0(w.grid.node(i));
        for (int j = 0; j < k; ++j) v += w.integral.col(i - j).cwiseProduct(incr.col(j));
        // conditional expectations of a nonnegative process, truncated like V
        g.col(i) = v.cwiseMax(0.0);
    }
    return g;
}

double gamma_affine(const AffineModel& m, const RiccatiVolterraSolution& sol, int k, const Eigen::MatrixXd& gk)
{
    const auto& g = sol.grid;
    const auto tail = tail_integrals(g, m.r);
    double expo = 2.0 * tail[static_cast<std::size_t>(k)];
    for (int j = k; j < g.n; ++j) expo += g.dt * sol.F.row(g.n - j).dot(gk.col(j));
    const double gamma = std::exp(expo);
    const double cap = std::exp(2.0 * tail[static_cast<std::size_t>(k)]);
    if (!(gamma > 0.0) || gamma > cap * (1.0 + 1e-12))
        throw InternalConsistency("gamma_affine: Gamma = " + std::to_string(gamma) + " outside (0, exp(2 int r)]");
    return gamma;
}

Eigen::VectorXd affine_price_of_risk(const AffineModel& m, const RiccatiVolterraSolution& sol, int k,
                                     const Eigen::VectorXd& Vk)
{
    const int n = sol.grid.n;
    Eigen::VectorXd a(m.d);
    for (int i = 0; i < m.d; ++i)
        a(i) = (m.theta(i) + m.rho(i) * m.nu(i) * sol.psi(n - k, i)) * std::sqrt(std::max(Vk(i), 0.0));
    return a;
}

Eigen::VectorXd optimal_control_affine(const AffineModel& m, const RiccatiVolterraSolution& sol, int k,
                                       const Eigen::VectorXd& Vk, double X, double xi, double int_r_tail)
{
    if ((Vk.array() < 0.0).any()) throw std::invalid_argument("optimal_control_affine: V must be nonnegative");
    return -affine_price_of_risk(m, sol, k, Vk) * (X - xi * std::exp(-int_r_tail));
}

ThetaCondition theta_condition_check_affine(const AffineModel& m, const RiccatiVolterraSolution& sol, double a, double p)
{
    Eigen::MatrixXd corr = m.rho.asDiagonal();
    ThetaCondition out;
    out.bound = a / a_of_p(p, corr);
    for (int k = 0; k < sol.psi.rows(); ++k)
        for (int i = 0; i < m.d; ++i)
            out.lhs = std::max(out.lhs, m.theta(i) * m.theta(i) + m.nu(i) * m.nu(i) * sol.psi(k, i) * sol.psi(k, i));
    out.pass = out.lhs <= out.bound;
    return out;
}

bool heston_moment_condition(double a, double kappa, double nu)
{
    if (nu == 0.0) return true;
    return a < kappa * kappa / (2.0 * nu * nu);
}

}  // namespace vmk
