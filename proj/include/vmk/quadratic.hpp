#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "vmk/kernel.hpp"
#include "vmk/operator.hpp"
#include "vmk/timegrid.hpp"

namespace vmk {

// Parameters of the quadratic (Stein-Stein type) Volterra model with N factors and d assets.
// Row k of C is the correlation vector C_k of W^k with B.
struct QuadraticParams {
    int N = 1;
    int d = 1;
    Kernel K;
    Eigen::MatrixXd D;      // N x N
    Eigen::MatrixXd eta;    // N x N
    Eigen::MatrixXd C;      // N x d
    Eigen::MatrixXd Theta;  // d x N
    VectorCurve g0;
    Curve r = constant_curve(0.0);
    // sigma(Y) = sum_k Y_k loadings[k], each d x d
    std::vector<Eigen::MatrixXd> loadings;
    // Downgrade a non-PSD U - 2 C C^T from an error to a warning.
    bool allow_indefinite = false;
};

class QuadraticModel {
public:
    static QuadraticModel build(QuadraticParams p);

    const QuadraticParams& params() const { return p_; }
    int N() const { return p_.N; }
    int d() const { return p_.d; }
    const Eigen::MatrixXd& U() const { return U_; }
    const Eigen::MatrixXd& gram() const { return G_; }
    // eta (U - 2 C C^T) eta^T
    const Eigen::MatrixXd& M() const { return M_; }
    // eta U eta^T
    const Eigen::MatrixXd& MU() const { return MU_; }
    // D - 2 eta C Theta, so that Khat = K f
    const Eigen::MatrixXd& f() const { return F_; }
    double min_eig_assumption() const { return min_eig_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

    Eigen::MatrixXd sigma(const Eigen::VectorXd& Y) const;

private:
    QuadraticParams p_;
    Eigen::MatrixXd U_, G_, M_, MU_, F_;
    double min_eig_ = 0.0;
    std::vector<std::string> warnings_;
};

// Psi_t, phi_t and the data needed to evaluate Z^2 along paths, on one grid.
class QuadraticSolution {
public:
    QuadraticSolution(const QuadraticModel& m, const TimeGrid& g);

    const QuadraticModel& model() const { return model_; }
    const TimeGrid& grid() const { return grid_; }
    const Operator& K() const { return A_; }
    const Operator& Khat() const { return Khat_; }
    const Eigen::MatrixXd& Linv() const { return Linv_; }
    const Eigen::VectorXd& g0() const { return g0_; }
    const std::vector<double>& r_tail() const { return r_tail_; }

    double phi(int k) const { return phi_[static_cast<std::size_t>(k)]; }
    const std::vector<double>& phi() const { return phi_; }
    // P_t = int_t^T (Psi_t 1)(s) ds, N x N
    const Eigen::MatrixXd& P(int k) const { return P_[static_cast<std::size_t>(k)]; }
    // 2 eta^T (Psi_t K(., t))^T restricted to [t_k, T]: N x (n-k) N
    const Eigen::MatrixXd& z2_row(int k) const { return z2_[static_cast<std::size_t>(k)]; }
    // <g0, Psi_t g0> on [t_k, T]
    double quad_form_g0(int k) const { return qf0_[static_cast<std::size_t>(k)]; }

    double gamma0() const;
    // Z^2 at t_k for a forward curve stacked as an (n N) vector (entries before t_k ignored).
    Eigen::VectorXd z2(int k, const Eigen::VectorXd& g) const;
    // lambda + C^T Z^2 at t_k
    Eigen::VectorXd price_of_risk(int k, const Eigen::VectorXd& g) const;
    // <g, Psi_t g> with g restricted to [t_k, T]; dense, O((nN)^3).
    double quad_form(int k, const Eigen::VectorXd& g) const;
    double gamma(int k, const Eigen::VectorXd& g) const;

private:
    QuadraticModel model_;
    TimeGrid grid_;
    Operator A_, Khat_;
    Eigen::MatrixXd Linv_;
    Eigen::VectorXd g0_;
    std::vector<double> r_tail_;
    std::vector<double> phi_;
    std::vector<Eigen::MatrixXd> P_;
    std::vector<Eigen::MatrixXd> z2_;
    std::vector<double> qf0_;
};

// Dense operators at node k.
Operator sigma_op(const QuadraticSolution& s, int k);
Operator sigma_tilde_op(const QuadraticSolution& s, int k);
Operator psi_op(const QuadraticSolution& s, int k);
// Time derivative of Sigma_t: kernel -K(s,t) M K(u,t)^T.
Operator sigma_dot_op(const QuadraticSolution& s, int k);
// Time derivative of Lambda_t: kernel -K(s,t) eta U eta^T K(u,t)^T.
Operator lambda_dot_op(const QuadraticSolution& s, int k);

// Weak: max |<e, R f>| over a fixed set of smooth unit directions e, f. Strong: max |R f|. Operator: |R|.
enum class ResidualNorm { Weak, Strong, Operator };

// Size of R = (Psi_{t+h} - Psi_t)/h - 2 Psi_t Sigma_dot_t Psi_t with h = h_cells * dt.
double riccati_derivative_residual(const QuadraticSolution& s, int k, int h_cells, ResidualNorm norm = ResidualNorm::Weak);

// (Psi_t f 1_t)(t) - ((-Theta^T Theta Id + Khat^* Psi_t)(f 1_t))(t), max norm.
double boundary_residual(const QuadraticSolution& s, int k, const Eigen::VectorXd& f);

// alpha* = -(lambda + C^T Z^2)(X - xi e^{-int_t^T r})
Eigen::VectorXd optimal_control_quadratic(const QuadraticSolution& s, int k, const Eigen::VectorXd& g, double X,
                                          double xi);

// Amounts pi with sigma^T pi = alpha.
Eigen::VectorXd amounts_from_control(const QuadraticModel& m, const Eigen::VectorXd& Y, const Eigen::VectorXd& alpha);

struct StrategyProfile {
    std::vector<double> t;
    Eigen::MatrixXd alpha;  // d x n
    Eigen::MatrixXd pi;     // d x n
};

// Deterministic profile ((Theta + 2C[Psi K eta]^*) g0)(t) xi e^{-int_t^T r}.
StrategyProfile deterministic_profile(const QuadraticSolution& s, double xi);

struct MarkovianRiccati {
    std::vector<double> t;
    std::vector<Eigen::MatrixXd> P;
    std::vector<double> phi;
};

// Backward RK4 for dP/dt = Theta^T Theta + P B + B^T P - 2 P M P, B = 2 eta C Theta - D, P_T = 0,
// and dphi/dt = -2r - tr(P eta U eta^T).
MarkovianRiccati markovian_riccati_ode(const QuadraticModel& m, double T, int steps, double cap = 1e6);

struct KappaHat {
    double x = 0.0;
    double kappa_hat = 0.0;
    bool feasible = true;
};

KappaHat kappa_hat(const QuadraticModel& m, const TimeGrid& g);
// c |Theta|^2 (1 + |Theta|^4 kappa_hat)
double kappa_theta(const QuadraticModel& m, const TimeGrid& g, double c = 1.0);

struct CovarianceBound {
    double lambda1 = 0.0;
    double trace = 0.0;
    bool lambda_condition = false;  // 2a < 1/lambda1
    bool trace_condition = false;   // 2a < 1/trace
};

// Largest eigenvalue and trace of the covariance operator of (g_s(s)/T, g_s(u)) on a coarse grid.
CovarianceBound lambda_max_covariance(const QuadraticModel& m, const TimeGrid& g, double a, int max_dim = 4000);

}  // namespace vmk
