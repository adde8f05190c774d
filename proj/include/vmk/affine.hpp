#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "vmk/kernel.hpp"
#include "vmk/timegrid.hpp"

namespace vmk {

// Multivariate Volterra Heston model with diagonal kernel diag(K_1..K_d).
struct AffineModel {
    int d = 1;
    std::vector<ScalarKernel> kernels;
    Eigen::MatrixXd D;
    Eigen::VectorXd nu;
    Eigen::VectorXd rho;
    Eigen::VectorXd theta;
    VectorCurve g0;
    Curve r = constant_curve(0.0);

    // Throws std::invalid_argument on violated invariants; returns warnings.
    std::vector<std::string> validate() const;
    Kernel kernel() const { return Kernel::diagonal(kernels); }
};

Eigen::VectorXd riccati_F(const AffineModel& m, const Eigen::VectorXd& psi);

enum class VolterraScheme { Euler, Adams };

// Lag weights of the diagonal kernel: integral(i, m) = int over the cell m cells back.
struct ConvolutionWeights {
    TimeGrid grid;
    Eigen::MatrixXd integral;  // d x (n+1), column m = int_{(m-1)dt}^{m dt} K_i(u) du
    Eigen::MatrixXd moment;    // d x (n+1), right-node weight of the product trapezoid rule
};

ConvolutionWeights convolution_weights(const AffineModel& m, const TimeGrid& g);

struct RiccatiVolterraSolution {
    TimeGrid grid;
    Eigen::MatrixXd psi;  // (n+1) x d, row k = psi(t_k)
    Eigen::MatrixXd F;    // (n+1) x d, row k = F(psi(t_k))
};

RiccatiVolterraSolution solve_riccati_volterra(const AffineModel& m, const TimeGrid& g,
                                               VolterraScheme scheme = VolterraScheme::Adams, double cap = 1e6);

// Full-truncation Euler for V on the grid given Brownian increments dW (d x n).
// Returns d x (n+1), clamped at zero.
Eigen::MatrixXd simulate_V(const AffineModel& m, const ConvolutionWeights& w, const Eigen::MatrixXd& dW);

// g_t(t_i) for t = t_k, i = k..n (columns < k are zero), truncated at zero; d x (n+1).
Eigen::MatrixXd forward_g_affine(const AffineModel& m, const ConvolutionWeights& w, const Eigen::MatrixXd& V,
                                 const Eigen::MatrixXd& dW, int k);

// Gamma at t_k from a forward curve g_k (d x (n+1)).
double gamma_affine(const AffineModel& m, const RiccatiVolterraSolution& sol, int k, const Eigen::MatrixXd& gk);

// lambda + C Z^2 at t_k for the variance V_k: (theta_i + rho_i nu_i psi_i(T - t_k)) sqrt(V_k^i).
Eigen::VectorXd affine_price_of_risk(const AffineModel& m, const RiccatiVolterraSolution& sol, int k,
                                     const Eigen::VectorXd& Vk);

// alpha* = -(lambda + C Z^2)(X - xi e^{-int_t^T r}); int_r_tail = int_{t_k}^T r.
Eigen::VectorXd optimal_control_affine(const AffineModel& m, const RiccatiVolterraSolution& sol, int k,
                                       const Eigen::VectorXd& Vk, double X, double xi, double int_r_tail);

struct ThetaCondition {
    double lhs = 0.0;    // max_i max_t theta_i^2 + nu_i^2 psi_i(t)^2
    double bound = 0.0;  // a / a(p)
    bool pass = false;
};

ThetaCondition theta_condition_check_affine(const AffineModel& m, const RiccatiVolterraSolution& sol, double a, double p);

// d = 1 sufficient condition for the exponential moment: a < kappa^2 / (2 nu^2).
bool heston_moment_condition(double a, double kappa, double nu);

}  // namespace vmk
