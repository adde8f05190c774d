#pragma once

#include <Eigen/Dense>
#include <vector>

#include "vmk/timegrid.hpp"

namespace vmk {

// Scalar convolution profile k(u) of the lag u = t - s.
struct ScalarKernel {
    enum class Kind { Zero, Constant, Fractional, Exponential, Table };

    Kind kind = Kind::Zero;
    double H = 0.5;
    double beta = 0.0;
    double scale = 1.0;
    double table_dt = 0.0;
    std::vector<double> table;

    static ScalarKernel zero();
    static ScalarKernel constant(double c);
    // scale * u^{H-1/2} / Gamma(H+1/2)
    static ScalarKernel fractional(double H, double scale = 1.0);
    // scale * exp(-beta u)
    static ScalarKernel exponential(double beta, double scale = 1.0);
    // piecewise constant: value[m] on [m dt, (m+1) dt), last value held beyond
    static ScalarKernel tabulated(double dt, std::vector<double> values);

    double eval(double u) const;
    // int_{u0}^{u1} k(u) du, 0 <= u0 <= u1
    double integral(double u0, double u1) const;
    // int_{u0}^{u1} u k(u) du
    double moment(double u0, double u1) const;
    // int_{u0}^{u1} k(u)^2 du
    double square_integral(double u0, double u1) const;
    bool lag_invariant_everywhere() const { return kind == Kind::Zero || kind == Kind::Constant; }
};

// N x N matrix-valued kernel K(t,s) = [k_ij(t-s)].
class Kernel {
public:
    Kernel() = default;
    Kernel(int N, std::vector<ScalarKernel> entries, bool volterra = true);

    static Kernel scalar(const ScalarKernel& k, bool volterra = true);
    static Kernel constant(const Eigen::MatrixXd& m, bool volterra = true);
    static Kernel fractional(double H, double scale = 1.0);
    static Kernel exponential(double beta, double scale = 1.0);
    static Kernel diagonal(const std::vector<ScalarKernel>& diag);

    int dim() const { return N_; }
    bool volterra() const { return volterra_; }
    const ScalarKernel& entry(int i, int j) const { return entries_[static_cast<std::size_t>(i * N_ + j)]; }

    Eigen::MatrixXd eval(double t, double s) const;
    // int_a^b K(t,s) ds
    Eigen::MatrixXd cell_integral(double t, double a, double b) const;
    // int_a^b K(t,s) (s-a)/(b-a) ds, the weight of the right node in a product trapezoid rule
    Eigen::MatrixXd cell_moment(double t, double a, double b) const;

    // Smallest regularity exponent min(1, H+1/2) over the entries.
    double regularity() const;

private:
    int N_ = 0;
    std::vector<ScalarKernel> entries_;
    bool volterra_ = true;
};

// Grid approximation of int_0^T int_0^T |K(t,s)|^2 ds dt (Frobenius norm).
double kernel_l2_norm_sq(const Kernel& k, const TimeGrid& g);

// Closed form of the same quantity for the fractional profile on [0,T].
double fractional_l2_norm_sq(double H, double scale, double T);

// sup_t int_0^T |K(t,s)|^2 ds over the grid nodes.
double kernel_row_bound(const Kernel& k, const TimeGrid& g);

}  // namespace vmk
