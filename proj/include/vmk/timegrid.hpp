#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace vmk {

// Uniform partition of [0,T] into n cells, left-endpoint quadrature.
struct TimeGrid {
    double T = 0.0;
    int n = 0;
    double dt = 0.0;
    std::vector<double> nodes;    // n+1 nodes, t_0 = 0, t_n = T
    std::vector<double> weights;  // one weight per cell

    double node(int k) const { return nodes[static_cast<std::size_t>(k)]; }
    double cell_left(int j) const { return nodes[static_cast<std::size_t>(j)]; }
    double cell_right(int j) const { return nodes[static_cast<std::size_t>(j) + 1]; }
};

TimeGrid make_grid(double T, int n);

// Default resolution used by the experiments: 200 cells per unit time, at least 200.
int default_cells(double T);

using Curve = std::function<double(double)>;
using VectorCurve = std::function<Eigen::VectorXd(double)>;

Curve constant_curve(double c);
VectorCurve constant_curve(const Eigen::VectorXd& v);

// int_{t_k}^T r(s) ds for k = 0..n by the trapezoid rule on the grid.
std::vector<double> tail_integrals(const TimeGrid& g, const Curve& r);

// Samples f(t_k), k = 0..n-1, stacked into an (n N) vector.
Eigen::VectorXd sample(const TimeGrid& g, const VectorCurve& f, int N);

}  // namespace vmk
