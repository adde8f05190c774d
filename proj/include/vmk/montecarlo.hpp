#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "vmk/affine.hpp"
#include "vmk/quadratic.hpp"
#include "vmk/timegrid.hpp"

namespace vmk {

// Gaussian stream keyed by (seed, path). With antithetic pairing paths 2j and 2j+1 share
// their draws up to sign.
class PathRng {
public:
    PathRng(std::uint64_t seed, std::uint64_t path, bool antithetic = false);
    double normal();

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> dist_;
    double sign_ = 1.0;
};

struct Drivers {
    Eigen::MatrixXd dB;      // d x n
    Eigen::MatrixXd dBperp;  // N x n
    Eigen::MatrixXd dW;      // N x n, dW^k = C_k^T dB + sqrt(1 - |C_k|^2) dB^{perp,k}
};

// C is N x d with row k = C_k.
Drivers simulate_drivers(const Eigen::MatrixXd& C, const TimeGrid& g, std::uint64_t seed, std::uint64_t path,
                         bool antithetic = false);

struct WealthStats {
    double mean = 0.0;
    double variance = 0.0;  // unbiased
    double standard_error = 0.0;
    double variance_se = 0.0;  // standard error of the variance estimator
    long paths = 0;
};

WealthStats mc_stats(const std::vector<double>& samples);

struct WealthPath {
    Eigen::VectorXd X;      // n+1
    Eigen::MatrixXd alpha;  // d x n
};

// Exact exponential stepping of X - xi e^{-int_t^T r} for piecewise constant controls;
// a = lambda + C Z^2 at the nodes (d x n).
WealthPath simulate_wealth(const Eigen::MatrixXd& lambda, const Eigen::MatrixXd& a, const Eigen::MatrixXd& dB,
                           const TimeGrid& g, const std::vector<double>& r_tail, double x0, double xi);

struct ModelPath {
    Eigen::MatrixXd state;   // Y (N x n) or V (d x n) at the nodes
    Eigen::MatrixXd lambda;  // d x n
    Eigen::MatrixXd a;       // d x n
};

// Forward process advanced by rank-N updates; on_node(k, g_k) is called before each update.
ModelPath quadratic_path(const QuadraticSolution& s, const Drivers& drv,
                         const std::function<void(int, const Eigen::VectorXd&)>& on_node = {});

ModelPath affine_path(const AffineModel& m, const RiccatiVolterraSolution& sol, const ConvolutionWeights& w,
                      const Drivers& drv);

struct McConfig {
    long paths = 10000;
    std::uint64_t seed = 1;
    bool antithetic = false;
    long dump_paths = 0;
};

struct GammaEstimate {
    double estimate = 0.0;
    double standard_error = 0.0;
};

GammaEstimate gamma_mc(const QuadraticSolution& s, const McConfig& cfg);
GammaEstimate gamma_mc(const AffineModel& m, const RiccatiVolterraSolution& sol, const McConfig& cfg);

struct PathRecord {
    long id = 0;
    WealthPath wealth;
    Eigen::MatrixXd pi;     // d x n
    Eigen::MatrixXd state;  // N x n
};

struct MarkowitzRun {
    WealthStats stats;
    double m = 0.0;
    double target_variance = 0.0;
    double xi = 0.0;
    double gamma0 = 0.0;
    std::vector<PathRecord> dumped;
};

MarkowitzRun markowitz_mc(const QuadraticSolution& s, double x0, double m, const McConfig& cfg);
MarkowitzRun markowitz_mc(const AffineModel& model, const RiccatiVolterraSolution& sol, double gamma0, double x0,
                          double m, const McConfig& cfg);

// Gamma_0 from the Riccati-Volterra solution with V replaced by g0.
double affine_gamma0(const AffineModel& m, const RiccatiVolterraSolution& sol);

}  // namespace vmk
