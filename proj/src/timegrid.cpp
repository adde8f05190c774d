#include "vmk/timegrid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace vmk {

TimeGrid make_grid(double T, int n)
{
    if (!(T > 0.0) || !std::isfinite(T))
        throw std::invalid_argument("make_grid: horizon must be positive, got " + std::to_string(T));
    if (n < 2)
        throw std::invalid_argument("make_grid: need at least 2 cells, got " + std::to_string(n));

    TimeGrid g;
    g.T = T;
    g.n = n;
    g.dt = T / n;
    g.nodes.resize(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) g.nodes[static_cast<std::size_t>(k)] = T * k / n;
    g.nodes.back() = T;
    g.weights.assign(static_cast<std::size_t>(n), g.dt);
    return g;
}

int default_cells(double T)
{
    return std::max(200, static_cast<int>(std::lround(200.0 * T)));
}

Curve constant_curve(double c)
{
    return [c](double) { return c; };
}

VectorCurve constant_curve(const Eigen::VectorXd& v)
{
    return [v](double) { return v; };
}

std::vector<double> tail_integrals(const TimeGrid& g, const Curve& r)
{
    std::vector<double> out(static_cast<std::size_t>(g.n) + 1, 0.0);
    for (int k = g.n - 1; k >= 0; --k)
        out[static_cast<std::size_t>(k)] = out[static_cast<std::size_t>(k) + 1] + 0.5 * g.dt * (r(g.node(k)) + r(g.node(k + 1)));
    return out;
}

Eigen::VectorXd sample(const TimeGrid& g, const VectorCurve& f, int N)
{
    Eigen::VectorXd out(g.n * N);
    for (int k = 0; k < g.n; ++k) {
        Eigen::VectorXd v = f(g.node(k));
        if (v.size() != N) throw std::invalid_argument("sample: curve has dimension " + std::to_string(v.size()) + ", expected " + std::to_string(N));
        out.segment(k * N, N) = v;
    }
    return out;
}

}  // namespace vmk
