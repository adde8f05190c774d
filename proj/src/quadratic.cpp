#include "vmk/quadratic.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "vmk/errors.hpp"

namespace vmk {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void need(bool ok, const std::string& msg)
{
    if (!ok) throw std::invalid_argument("quadratic model: " + msg);
}

MatrixXd stacked_identity(int m, int N)
{
    MatrixXd out(m * N, N);
    for (int i = 0; i < m; ++i) out.middleRows(i * N, N).setIdentity();
    return out;
}

}  // namespace

QuadraticModel QuadraticModel::build(QuadraticParams p)
{
    const int N = p.N, d = p.d;
    need(N >= 1 && d >= 1, "N and d must be positive");
    need(p.K.dim() == N, "kernel dimension " + std::to_string(p.K.dim()) + " differs from N = " + std::to_string(N));
    need(p.K.volterra(), "the kernel must be of Volterra type");
    need(p.D.rows() == N && p.D.cols() == N, "D must be N x N");
    need(p.eta.rows() == N && p.eta.cols() == N, "eta must be N x N");
    need(p.C.rows() == N && p.C.cols() == d, "C must be N x d (row k = C_k)");
    need(p.Theta.rows() == d && p.Theta.cols() == N, "Theta must be d x N");
    need(static_cast<bool>(p.g0), "g0 is missing");
    need(p.g0(0.0).size() == N, "g0 must be an N-vector");
    need(p.loadings.empty() || static_cast<int>(p.loadings.size()) == N, "one d x d loading matrix per factor");
    for (const auto& L : p.loadings) need(L.rows() == d && L.cols() == d, "loadings must be d x d");

    QuadraticModel m;
    for (int k = 0; k < N; ++k) {
        const double c2 = p.C.row(k).squaredNorm();
        if (c2 > 1.0 + 1e-12)
            throw ModelAssumption("C_" + std::to_string(k + 1) + "^T C_" + std::to_string(k + 1) + " = " + std::to_string(c2) +
                                      " exceeds 1",
                                  c2);
    }
    m.G_ = p.C * p.C.transpose();
    m.U_ = m.G_;
    m.U_.diagonal().setOnes();
    MatrixXd A = m.U_ - 2.0 * m.G_;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(A, Eigen::EigenvaluesOnly);
    m.min_eig_ = es.eigenvalues().minCoeff();
    if (m.min_eig_ < -1e-10) {
        const std::string msg = "U - 2 C C^T is not positive semidefinite (smallest eigenvalue " + std::to_string(m.min_eig_) + ")";
        if (!p.allow_indefinite) throw ModelAssumption(msg + "; reduce the leverage |c| or set allow_indefinite", m.min_eig_);
        m.warnings_.push_back(msg);
    }
    m.M_ = p.eta * A * p.eta.transpose();
    m.MU_ = p.eta * m.U_ * p.eta.transpose();
    m.F_ = p.D - 2.0 * p.eta * p.C * p.Theta;
    m.p_ = std::move(p);
    return m;
}

MatrixXd QuadraticModel::sigma(const VectorXd& Y) const
{
    if (p_.loadings.empty()) throw std::invalid_argument("quadratic model: no stock loadings configured");
    MatrixXd s = MatrixXd::Zero(p_.d, p_.d);
    for (int k = 0; k < p_.N; ++k) s += Y(k) * p_.loadings[static_cast<std::size_t>(k)];
    return s;
}

QuadraticSolution::QuadraticSolution(const QuadraticModel& m, const TimeGrid& g) : model_(m), grid_(g)
{
    const int n = g.n, N = m.N(), d = m.d();
    const double dt = g.dt;
    const auto& p = m.params();

    A_ = discretize(p.K, g);
    Khat_ = right_multiply(A_, m.f());
    const int sz = n * N;
    MatrixXd IK = MatrixXd::Identity(sz, sz) - Khat_.kernel_matrix();
    Linv_ = IK.triangularView<Eigen::UnitLower>().solve(MatrixXd::Identity(sz, sz));
    g0_ = sample(g, p.g0, N);
    r_tail_ = tail_integrals(g, p.r);

    MatrixXd Q(n * d, sz);  // blockdiag(Theta) Linv
    for (int i = 0; i < n; ++i) Q.middleRows(i * d, d) = p.Theta * Linv_.middleRows(i * N, N);

    phi_.assign(static_cast<std::size_t>(n) + 1, 0.0);
    qf0_.assign(static_cast<std::size_t>(n) + 1, 0.0);
    P_.assign(static_cast<std::size_t>(n) + 1, MatrixXd::Zero(N, N));
    z2_.assign(static_cast<std::size_t>(n) + 1, MatrixXd::Zero(N, 0));

    MatrixXd S = MatrixXd::Zero(n * d, n * d);  // Theta Sigma_tilde Theta^T, accumulated backwards
    double f_next = -2.0 * p.r(g.T);
    for (int k = n - 1; k >= 0; --k) {
        const int m_ = n - k;
        const auto Qkk = Q.block(k * d, k * N, m_ * d, m_ * N);
        MatrixXd Ak = A_.kernel_matrix().block(k * N, k * N, m_ * N, N);
        MatrixXd u = Qkk * Ak;
        S.block(k * d, k * d, m_ * d, m_ * d).noalias() += u * m.M() * u.transpose();

        MatrixXd inner = MatrixXd::Identity(m_ * d, m_ * d) + 2.0 * S.block(k * d, k * d, m_ * d, m_ * d);
        Eigen::LLT<MatrixXd> llt(inner);
        if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-13))
            throw RiccatiBlowUp("operator Riccati solution blows up: Id + 2 Theta Sigma_tilde Theta^T is not positive definite at t = " +
                                    std::to_string(g.node(k)),
                                g.node(k));

        MatrixXd Y = llt.solve(u);
        const double fk = (u.transpose() * Y * m.MU()).trace() / dt - 2.0 * p.r(g.node(k));
        phi_[static_cast<std::size_t>(k)] = phi_[static_cast<std::size_t>(k) + 1] - 0.5 * dt * (fk + f_next);
        f_next = fk;

        MatrixXd psiA = -Qkk.transpose() * Y;
        z2_[static_cast<std::size_t>(k)] = 2.0 * p.eta.transpose() * psiA.transpose();

        MatrixXd v = Qkk * stacked_identity(m_, N);
        MatrixXd psi1 = -Qkk.transpose() * llt.solve(v);
        MatrixXd Pk = MatrixXd::Zero(N, N);
        for (int i = 0; i < m_; ++i) Pk += psi1.middleRows(i * N, N);
        P_[static_cast<std::size_t>(k)] = dt * Pk;

        VectorXd y = Qkk * g0_.tail(m_ * N);
        qf0_[static_cast<std::size_t>(k)] = -dt * y.dot(llt.solve(y));
    }
}

double QuadraticSolution::gamma0() const
{
    const double gamma = std::exp(phi_[0] + qf0_[0]);
    const double cap = std::exp(2.0 * r_tail_[0]);
    if (!(gamma > 0.0) || gamma > cap * (1.0 + 1e-10))
        throw InternalConsistency("Gamma_0 = " + std::to_string(gamma) + " outside (0, exp(2 int r)]");
    return gamma;
}

VectorXd QuadraticSolution::z2(int k, const VectorXd& g) const
{
    const int N = model_.N();
    return z2_[static_cast<std::size_t>(k)] * g.tail((grid_.n - k) * N);
}

VectorXd QuadraticSolution::price_of_risk(int k, const VectorXd& g) const
{
    const int N = model_.N();
    const auto& p = model_.params();
    VectorXd Y = g.segment(k * N, N);
    return p.Theta * Y + p.C.transpose() * z2(k, g);
}

double QuadraticSolution::quad_form(int k, const VectorXd& g) const
{
    const int N = model_.N();
    VectorXd gk = g;
    gk.head(k * N).setZero();
    return grid_inner(gk, psi_op(*this, k).apply(gk), grid_.dt);
}

double QuadraticSolution::gamma(int k, const VectorXd& g) const
{
    const double gamma = std::exp(phi_[static_cast<std::size_t>(k)] + quad_form(k, g));
    const double cap = std::exp(2.0 * r_tail_[static_cast<std::size_t>(k)]);
    if (!(gamma > 0.0) || gamma > cap * (1.0 + 1e-10))
        throw InternalConsistency("Gamma_t = " + std::to_string(gamma) + " outside (0, exp(2 int r)]");
    return gamma;
}

namespace {

MatrixXd sigma_matrix(const QuadraticSolution& s, int k, const MatrixXd& weight)
{
    const int n = s.grid().n, N = s.model().N();
    const MatrixXd& A = s.K().kernel_matrix();
    MatrixXd out = MatrixXd::Zero(n * N, n * N);
    for (int j = k; j < n; ++j) {
        auto col = A.middleCols(j * N, N);
        out.noalias() += col * weight * col.transpose();
    }
    return out;
}

}  // namespace

Operator sigma_op(const QuadraticSolution& s, int k)
{
    const auto& g = s.grid();
    return Operator::kernel(g.n, s.model().N(), g.T, sigma_matrix(s, k, s.model().M()));
}

Operator sigma_tilde_op(const QuadraticSolution& s, int k)
{
    const auto& g = s.grid();
    MatrixXd st = s.Linv() * sigma_matrix(s, k, s.model().M()) * s.Linv().transpose();
    return Operator::kernel(g.n, s.model().N(), g.T, std::move(st));
}

Operator psi_op(const QuadraticSolution& s, int k)
{
    const auto& g = s.grid();
    const int n = g.n, N = s.model().N(), d = s.model().d();
    const auto& Theta = s.model().params().Theta;
    MatrixXd Q(n * d, n * N);
    for (int i = 0; i < n; ++i) Q.middleRows(i * d, d) = Theta * s.Linv().middleRows(i * N, N);
    MatrixXd inner = MatrixXd::Identity(n * d, n * d) + 2.0 * Q * sigma_matrix(s, k, s.model().M()) * Q.transpose();
    Eigen::LLT<MatrixXd> llt(inner);
    if (llt.info() != Eigen::Success)
        throw RiccatiBlowUp("operator Riccati solution blows up at t = " + std::to_string(g.node(k)), g.node(k));
    MatrixXd dense = -Q.transpose() * llt.solve(Q);
    dense = 0.5 * (dense + dense.transpose());
    MatrixXd J = -Theta.transpose() * Theta;
    for (int i = 0; i < n; ++i) dense.block(i * N, i * N, N, N) -= J;
    return Operator(n, N, g.T, std::move(dense), std::move(J));
}

Operator sigma_dot_op(const QuadraticSolution& s, int k)
{
    const auto& g = s.grid();
    const int N = s.model().N();
    auto col = s.K().kernel_matrix().middleCols(k * N, N);
    return Operator::kernel(g.n, N, g.T, -(col * s.model().M() * col.transpose()) / g.dt);
}

Operator lambda_dot_op(const QuadraticSolution& s, int k)
{
    const auto& g = s.grid();
    const int N = s.model().N();
    auto col = s.K().kernel_matrix().middleCols(k * N, N);
    return Operator::kernel(g.n, N, g.T, -(col * s.model().MU() * col.transpose()) / g.dt);
}

double riccati_derivative_residual(const QuadraticSolution& s, int k, int h_cells, ResidualNorm norm)
{
    const auto& g = s.grid();
    if (h_cells < 1 || k + h_cells > g.n) throw std::invalid_argument("riccati_derivative_residual: need t + h <= T");
    const double h = h_cells * g.dt;
    Operator psi_t = psi_op(s, k);
    Operator psi_h = psi_op(s, k + h_cells);
    Operator lhs = (1.0 / h) * (psi_h - psi_t);
    Operator rhs = 2.0 * star(psi_t, star(sigma_dot_op(s, k), psi_t));
    Operator res = lhs - rhs;
    if (norm == ResidualNorm::Operator) return op_norm(res);
    // fixed smooth directions cos(m pi s / T) e_c
    const int N = s.model().N();
    std::vector<VectorXd> dirs;
    for (int m = 0; m < 4; ++m)
        for (int c = 0; c < N; ++c) {
            VectorXd f = VectorXd::Zero(g.n * N);
            for (int i = 0; i < g.n; ++i) f(i * N + c) = std::cos(m * M_PI * g.node(i) / g.T);
            dirs.push_back(f / std::sqrt(grid_inner(f, f, g.dt)));
        }
    double worst = 0.0;
    for (const auto& f : dirs) {
        const VectorXd r = res.apply(f);
        if (norm == ResidualNorm::Strong) {
            worst = std::max(worst, std::sqrt(grid_inner(r, r, g.dt)));
        } else {
            for (const auto& e : dirs) worst = std::max(worst, std::abs(grid_inner(e, r, g.dt)));
        }
    }
    return worst;
}

double boundary_residual(const QuadraticSolution& s, int k, const VectorXd& f)
{
    const int N = s.model().N();
    VectorXd fk = f;
    fk.head(k * N).setZero();
    Operator psi = psi_op(s, k);
    VectorXd lhs = psi.apply(fk);
    const auto& Theta = s.model().params().Theta;
    VectorXd rhs = star(adjoint(s.Khat()), psi).apply(fk);
    rhs.segment(k * N, N) -= Theta.transpose() * Theta * fk.segment(k * N, N);
    return (lhs.segment(k * N, N) - rhs.segment(k * N, N)).cwiseAbs().maxCoeff();
}

VectorXd optimal_control_quadratic(const QuadraticSolution& s, int k, const VectorXd& g, double X, double xi)
{
    return -s.price_of_risk(k, g) * (X - xi * std::exp(-s.r_tail()[static_cast<std::size_t>(k)]));
}

VectorXd amounts_from_control(const QuadraticModel& m, const VectorXd& Y, const VectorXd& alpha)
{
    MatrixXd sig = m.sigma(Y);
    Eigen::FullPivLU<MatrixXd> lu(sig.transpose());
    if (!lu.isInvertible() || lu.rcond() < 1e-12) throw SingularVolatility("volatility matrix sigma_t is singular");
    return lu.solve(alpha);
}

StrategyProfile deterministic_profile(const QuadraticSolution& s, double xi)
{
    const auto& g = s.grid();
    const int n = g.n, N = s.model().N(), d = s.model().d();
    StrategyProfile out{std::vector<double>(g.nodes.begin(), g.nodes.end() - 1), MatrixXd(d, n), MatrixXd(d, n)};
    for (int k = 0; k < n; ++k) {
        VectorXd a = s.price_of_risk(k, s.g0()) * xi * std::exp(-s.r_tail()[static_cast<std::size_t>(k)]);
        out.alpha.col(k) = a;
        if (!s.model().params().loadings.empty())
            out.pi.col(k) = amounts_from_control(s.model(), s.g0().segment(k * N, N), a);
        else
            out.pi.col(k) = a;
    }
    return out;
}

MarkovianRiccati markovian_riccati_ode(const QuadraticModel& m, double T, int steps, double cap)
{
    if (!(T > 0.0) || steps < 1) throw std::invalid_argument("markovian_riccati_ode: need T > 0 and steps >= 1");
    const auto& p = m.params();
    const MatrixXd TT = p.Theta.transpose() * p.Theta;
    const MatrixXd B = 2.0 * p.eta * p.C * p.Theta - p.D;
    auto rhs = [&](const MatrixXd& P) -> MatrixXd { return TT + P * B + B.transpose() * P - 2.0 * P * m.M() * P; };
    auto phirhs = [&](const MatrixXd& P, double t) { return -2.0 * p.r(t) - (P * m.MU()).trace(); };

    MarkovianRiccati out;
    out.t.resize(static_cast<std::size_t>(steps) + 1);
    out.P.assign(static_cast<std::size_t>(steps) + 1, MatrixXd::Zero(m.N(), m.N()));
    out.phi.assign(static_cast<std::size_t>(steps) + 1, 0.0);
    const double h = T / steps;
    for (int i = 0; i <= steps; ++i) out.t[static_cast<std::size_t>(i)] = T * i / steps;
    MatrixXd P = MatrixXd::Zero(m.N(), m.N());
    double phi = 0.0;
    for (int i = steps; i > 0; --i) {
        const double t = out.t[static_cast<std::size_t>(i)];
        // integrate backwards: dP/d(-t) = -rhs
        MatrixXd k1 = rhs(P);
        MatrixXd k2 = rhs(P - 0.5 * h * k1);
        MatrixXd k3 = rhs(P - 0.5 * h * k2);
        MatrixXd k4 = rhs(P - h * k3);
        const double l1 = phirhs(P, t);
        const double l2 = phirhs(P - 0.5 * h * k1, t - 0.5 * h);
        const double l3 = phirhs(P - 0.5 * h * k2, t - 0.5 * h);
        const double l4 = phirhs(P - h * k3, t - h);
        P -= h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        phi -= h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
        if (!P.allFinite() || P.cwiseAbs().maxCoeff() > cap)
            throw RiccatiBlowUp("matrix Riccati solution exceeds the cap at t = " + std::to_string(t - h), t - h);
        out.P[static_cast<std::size_t>(i) - 1] = P;
        out.phi[static_cast<std::size_t>(i) - 1] = phi;
    }
    return out;
}

KappaHat kappa_hat(const QuadraticModel& m, const TimeGrid& g)
{
    KappaHat out;
    out.x = m.f().norm() * kernel_l2_norm_sq(m.params().K, g);
    if (out.x >= 1.0) {
        out.feasible = false;
        out.kappa_hat = INFINITY;
        return out;
    }
    out.kappa_hat = std::pow(out.x / (1.0 - out.x), 4);
    return out;
}

double kappa_theta(const QuadraticModel& m, const TimeGrid& g, double c)
{
    const double th = m.params().Theta.squaredNorm();
    return c * th * (1.0 + th * th * kappa_hat(m, g).kappa_hat);
}

CovarianceBound lambda_max_covariance(const QuadraticModel& m, const TimeGrid& g, double a, int max_dim)
{
    const int n = g.n, N = m.N();
    const double dt = g.dt;
    if (n * n * 2 * N > max_dim * max_dim)
        throw std::invalid_argument("lambda_max_covariance: grid too fine for the covariance assembly (memory guard)");
    const auto& p = m.params();
    MatrixXd A = discretize(p.K, g).kernel_matrix();
    if (!p.D.isZero(0)) {
        // Y = (Id - K D)^{-1}(g0 + K eta dW): replace K by (Id + R_D) K
        MatrixXd KD = detail::right_blocks(A, MatrixXd(p.D), n);
        MatrixXd IKD = MatrixXd::Identity(n * N, n * N) - KD;
        A = IKD.triangularView<Eigen::UnitLower>().solve(A);
    }
    Eigen::LLT<MatrixXd> lu(m.U() + 1e-14 * MatrixXd::Identity(N, N));
    MatrixXd noise = p.eta * MatrixXd(lu.matrixL()) / std::sqrt(dt);

    // Rows: Z(i,j) in R^{2N}; columns: standard normals eps_z in R^N.
    MatrixXd Phi = MatrixXd::Zero(static_cast<Eigen::Index>(n) * n * 2 * N, n * N);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const Eigen::Index row = (static_cast<Eigen::Index>(i) * n + j) * 2 * N;
            for (int z = 0; z < i; ++z) {
                Phi.block(row, z * N, N, N) = A.block(i * N, z * N, N, N) * noise / g.T;
                if (i <= j) Phi.block(row + N, z * N, N, N) = A.block(j * N, z * N, N, N) * noise;
            }
        }
    MatrixXd small = dt * dt * Phi.transpose() * Phi;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(small, Eigen::EigenvaluesOnly);
    CovarianceBound out;
    out.lambda1 = std::max(0.0, es.eigenvalues().maxCoeff());
    out.trace = small.trace();
    out.lambda_condition = 2.0 * a * out.lambda1 < 1.0;
    out.trace_condition = 2.0 * a * out.trace < 1.0;
    return out;
}

}  // namespace vmk
