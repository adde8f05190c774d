#include "vmk/markowitz.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "vmk/errors.hpp"

namespace vmk {

namespace {

double denominator(double gamma0, double int_r)
{
    if (!(gamma0 > 0.0)) throw DegenerateMarket("Gamma_0 must be positive, got " + std::to_string(gamma0));
    const double den = 1.0 - gamma0 * std::exp(-2.0 * int_r);
    if (den < 1e-12)
        throw DegenerateMarket("Gamma_0 = " + std::to_string(gamma0) + " reaches exp(2 int r): no risky gain is available");
    return den;
}

}  // namespace

double matrix_norm(const Eigen::MatrixXd& c, NormReading reading)
{
    return reading == NormReading::Frobenius ? c.norm() : c.squaredNorm();
}

double a_of_p(double p, const Eigen::MatrixXd& c, NormReading reading)
{
    if (!(p > 2.0)) throw std::invalid_argument("a_of_p: p must exceed 2, got " + std::to_string(p));
    const double nc = matrix_norm(c, reading);
    return std::max(p * (3.0 + nc), 3.0 * (8.0 * p * p - 2.0 * p) * (1.0 + nc * nc));
}

double xi_star(double m, double gamma0, double x0, double int_r)
{
    const double den = denominator(gamma0, int_r);
    return (m - gamma0 * std::exp(-int_r) * x0) / den;
}

double value_v(double m, double gamma0, double x0, double int_r)
{
    const double den = denominator(gamma0, int_r);
    const double gap = x0 - m * std::exp(-int_r);
    return gamma0 * gap * gap / den;
}

std::vector<FrontierPoint> frontier(double gamma0, double x0, double int_r, const std::vector<double>& targets)
{
    std::vector<FrontierPoint> out;
    out.reserve(targets.size());
    for (double m : targets) out.push_back({m, value_v(m, gamma0, x0, int_r), xi_star(m, gamma0, x0, int_r), gamma0});
    return out;
}

}  // namespace vmk
