#include "vmk/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "vmk/errors.hpp"

namespace vmk {

namespace {

// int_{u0}^{u1} u^p du for p > -1
double power_integral(double p, double u0, double u1)
{
    return (std::pow(u1, p + 1.0) - std::pow(u0, p + 1.0)) / (p + 1.0);
}

// Apply f(u0', u1', value) over the pieces of a tabulated profile.
template <class F>
double table_sum(const ScalarKernel& k, double u0, double u1, F&& f)
{
    const auto m = static_cast<long>(k.table.size());
    double acc = 0.0;
    long first = static_cast<long>(std::floor(u0 / k.table_dt));
    for (long i = std::max(0L, first); u0 < u1; ++i) {
        const double right = (i + 1 < m) ? (i + 1) * k.table_dt : u1;
        const double hi = std::min(right, u1);
        if (hi > u0) acc += f(u0, hi, k.table[static_cast<std::size_t>(std::min(i, m - 1))]);
        u0 = hi;
    }
    return acc;
}

}  // namespace

ScalarKernel ScalarKernel::zero() { return {}; }

ScalarKernel ScalarKernel::constant(double c)
{
    ScalarKernel k;
    k.kind = Kind::Constant;
    k.scale = c;
    return k;
}

ScalarKernel ScalarKernel::fractional(double H, double scale)
{
    if (!(H > 0.0 && H <= 1.0)) throw std::invalid_argument("fractional kernel: H must lie in (0,1], got " + std::to_string(H));
    ScalarKernel k;
    k.kind = Kind::Fractional;
    k.H = H;
    k.scale = scale;
    return k;
}

ScalarKernel ScalarKernel::exponential(double beta, double scale)
{
    if (!std::isfinite(beta)) throw std::invalid_argument("exponential kernel: beta must be finite");
    ScalarKernel k;
    k.kind = Kind::Exponential;
    k.beta = beta;
    k.scale = scale;
    return k;
}

ScalarKernel ScalarKernel::tabulated(double dt, std::vector<double> values)
{
    if (!(dt > 0.0) || values.empty()) throw std::invalid_argument("table kernel: need dt > 0 and at least one value");
    ScalarKernel k;
    k.kind = Kind::Table;
    k.table_dt = dt;
    k.table = std::move(values);
    return k;
}

double ScalarKernel::eval(double u) const
{
    switch (kind) {
    case Kind::Zero: return 0.0;
    case Kind::Constant: return scale;
    case Kind::Fractional: {
        const double p = H - 0.5;
        if (u <= 0.0) {
            if (p < 0.0) throw SingularPoint("fractional kernel is singular on the diagonal for H < 1/2");
            return p == 0.0 ? scale / std::tgamma(H + 0.5) : 0.0;
        }
        return scale * std::pow(u, p) / std::tgamma(H + 0.5);
    }
    case Kind::Exponential: return scale * std::exp(-beta * u);
    case Kind::Table: {
        auto i = static_cast<std::size_t>(std::max(0.0, std::floor(u / table_dt)));
        return table[std::min(i, table.size() - 1)];
    }
    }
    return 0.0;
}

double ScalarKernel::integral(double u0, double u1) const
{
    if (u1 <= u0) return 0.0;
    switch (kind) {
    case Kind::Zero: return 0.0;
    case Kind::Constant: return scale * (u1 - u0);
    case Kind::Fractional: return scale * power_integral(H - 0.5, u0, u1) / std::tgamma(H + 0.5);
    case Kind::Exponential:
        if (beta == 0.0) return scale * (u1 - u0);
        return scale * (std::exp(-beta * u0) - std::exp(-beta * u1)) / beta;
    case Kind::Table:
        return table_sum(*this, u0, u1, [](double a, double b, double v) { return v * (b - a); });
    }
    return 0.0;
}

double ScalarKernel::moment(double u0, double u1) const
{
    if (u1 <= u0) return 0.0;
    switch (kind) {
    case Kind::Zero: return 0.0;
    case Kind::Constant: return scale * 0.5 * (u1 * u1 - u0 * u0);
    case Kind::Fractional: return scale * power_integral(H + 0.5, u0, u1) / std::tgamma(H + 0.5);
    case Kind::Exponential: {
        if (beta == 0.0) return scale * 0.5 * (u1 * u1 - u0 * u0);
        auto prim = [this](double u) { return -std::exp(-beta * u) * (beta * u + 1.0) / (beta * beta); };
        return scale * (prim(u1) - prim(u0));
    }
    case Kind::Table:
        return table_sum(*this, u0, u1, [](double a, double b, double v) { return v * 0.5 * (b * b - a * a); });
    }
    return 0.0;
}

double ScalarKernel::square_integral(double u0, double u1) const
{
    if (u1 <= u0) return 0.0;
    switch (kind) {
    case Kind::Zero: return 0.0;
    case Kind::Constant: return scale * scale * (u1 - u0);
    case Kind::Fractional: {
        const double g = std::tgamma(H + 0.5);
        return scale * scale * power_integral(2.0 * H - 1.0, u0, u1) / (g * g);
    }
    case Kind::Exponential:
        if (beta == 0.0) return scale * scale * (u1 - u0);
        return scale * scale * (std::exp(-2.0 * beta * u0) - std::exp(-2.0 * beta * u1)) / (2.0 * beta);
    case Kind::Table:
        return table_sum(*this, u0, u1, [](double a, double b, double v) { return v * v * (b - a); });
    }
    return 0.0;
}

Kernel::Kernel(int N, std::vector<ScalarKernel> entries, bool volterra)
    : N_(N), entries_(std::move(entries)), volterra_(volterra)
{
    if (N < 1 || entries_.size() != static_cast<std::size_t>(N * N))
        throw std::invalid_argument("Kernel: expected N*N entries");
    if (!volterra_)
        for (const auto& e : entries_)
            if (!e.lag_invariant_everywhere())
                throw std::invalid_argument("Kernel: only constant entries may be used without the Volterra flag");
}

Kernel Kernel::scalar(const ScalarKernel& k, bool volterra) { return Kernel(1, {k}, volterra); }

Kernel Kernel::constant(const Eigen::MatrixXd& m, bool volterra)
{
    if (m.rows() != m.cols()) throw std::invalid_argument("Kernel::constant: matrix must be square");
    const int N = static_cast<int>(m.rows());
    std::vector<ScalarKernel> e;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) e.push_back(m(i, j) == 0.0 ? ScalarKernel::zero() : ScalarKernel::constant(m(i, j)));
    return Kernel(N, std::move(e), volterra);
}

Kernel Kernel::fractional(double H, double scale) { return scalar(ScalarKernel::fractional(H, scale)); }

Kernel Kernel::exponential(double beta, double scale) { return scalar(ScalarKernel::exponential(beta, scale)); }

Kernel Kernel::diagonal(const std::vector<ScalarKernel>& diag)
{
    const int N = static_cast<int>(diag.size());
    std::vector<ScalarKernel> e(static_cast<std::size_t>(N * N));
    for (int i = 0; i < N; ++i) e[static_cast<std::size_t>(i * N + i)] = diag[static_cast<std::size_t>(i)];
    return Kernel(N, std::move(e), true);
}

Eigen::MatrixXd Kernel::eval(double t, double s) const
{
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(N_, N_);
    if (volterra_ && s > t) return out;
    for (int i = 0; i < N_; ++i)
        for (int j = 0; j < N_; ++j) out(i, j) = entry(i, j).eval(t - s);
    return out;
}

Eigen::MatrixXd Kernel::cell_integral(double t, double a, double b) const
{
    if (!(a < b)) throw std::invalid_argument("cell_integral: need a < b");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(N_, N_);
    if (!volterra_) {
        for (int i = 0; i < N_; ++i)
            for (int j = 0; j < N_; ++j) out(i, j) = entry(i, j).scale * (b - a) * (entry(i, j).kind != ScalarKernel::Kind::Zero);
        return out;
    }
    if (a >= t) return out;
    const double hi = std::min(b, t);
    for (int i = 0; i < N_; ++i)
        for (int j = 0; j < N_; ++j) out(i, j) = entry(i, j).integral(t - hi, t - a);
    return out;
}

Eigen::MatrixXd Kernel::cell_moment(double t, double a, double b) const
{
    if (!(a < b)) throw std::invalid_argument("cell_moment: need a < b");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(N_, N_);
    if (!volterra_) return 0.5 * cell_integral(t, a, b);
    if (a >= t) return out;
    const double hi = std::min(b, t);
    // s - a = (t - a) - u with u = t - s
    for (int i = 0; i < N_; ++i)
        for (int j = 0; j < N_; ++j) {
            const auto& k = entry(i, j);
            out(i, j) = ((t - a) * k.integral(t - hi, t - a) - k.moment(t - hi, t - a)) / (b - a);
        }
    return out;
}

double Kernel::regularity() const
{
    double r = 1.0;
    for (const auto& e : entries_)
        if (e.kind == ScalarKernel::Kind::Fractional) r = std::min(r, e.H + 0.5);
    return r;
}

namespace {

double row_square_integral(const Kernel& k, double t, double T)
{
    double acc = 0.0;
    for (int i = 0; i < k.dim(); ++i)
        for (int j = 0; j < k.dim(); ++j) {
            const auto& e = k.entry(i, j);
            if (k.volterra())
                acc += e.square_integral(0.0, t);
            else
                acc += e.scale * e.scale * T * (e.kind != ScalarKernel::Kind::Zero);
        }
    return acc;
}

}  // namespace

double kernel_l2_norm_sq(const Kernel& k, const TimeGrid& g)
{
    double acc = 0.0;
    for (int i = 0; i < g.n; ++i) acc += g.dt * row_square_integral(k, 0.5 * (g.cell_left(i) + g.cell_right(i)), g.T);
    return acc;
}

double fractional_l2_norm_sq(double H, double scale, double T)
{
    const double gm = std::tgamma(H + 0.5);
    return scale * scale * std::pow(T, 2.0 * H + 1.0) / (2.0 * H * (2.0 * H + 1.0) * gm * gm);
}

double kernel_row_bound(const Kernel& k, const TimeGrid& g)
{
    double sup = 0.0;
    for (int i = 0; i <= g.n; ++i) sup = std::max(sup, row_square_integral(k, g.node(i), g.T));
    return sup;
}

}  // namespace vmk
