#pragma once

#include <Eigen/Dense>
#include <vector>

namespace vmk {

enum class NormReading { Frobenius, SquaredFrobenius };

double matrix_norm(const Eigen::MatrixXd& c, NormReading reading = NormReading::Frobenius);

// a(p) = max[p(3+|C|), 3(8p^2-2p)(1+|C|^2)], p > 2
double a_of_p(double p, const Eigen::MatrixXd& c, NormReading reading = NormReading::Frobenius);

// Lagrange multiplier of the mean constraint; int_r = int_0^T r.
double xi_star(double m, double gamma0, double x0, double int_r);

// Minimal variance for target mean m.
double value_v(double m, double gamma0, double x0, double int_r);

struct FrontierPoint {
    double m = 0.0;
    double variance = 0.0;
    double xi_star = 0.0;
    double gamma0 = 0.0;
};

std::vector<FrontierPoint> frontier(double gamma0, double x0, double int_r, const std::vector<double>& targets);

}  // namespace vmk
