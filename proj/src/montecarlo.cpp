#include "vmk/montecarlo.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "vmk/markowitz.hpp"

namespace vmk {

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

struct Kahan {
    double sum = 0.0, c = 0.0;
    void add(double x)
    {
        const double y = x - c;
        const double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
};

}  // namespace

PathRng::PathRng(std::uint64_t seed, std::uint64_t path, bool antithetic)
{
    const std::uint64_t stream = antithetic ? path / 2 : path;
    sign_ = (antithetic && (path % 2 == 1)) ? -1.0 : 1.0;
    const std::uint64_t key = splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)};
    engine_.seed(seq);
}

double PathRng::normal() { return sign_ * dist_(engine_); }

Drivers simulate_drivers(const Eigen::MatrixXd& C, const TimeGrid& g, std::uint64_t seed, std::uint64_t path,
                         bool antithetic)
{
    const int N = static_cast<int>(C.rows()), d = static_cast<int>(C.cols()), n = g.n;
    PathRng rng(seed, path, antithetic);
    const double sq = std::sqrt(g.dt);
    Drivers out{Eigen::MatrixXd(d, n), Eigen::MatrixXd(N, n), Eigen::MatrixXd(N, n)};
    Eigen::VectorXd perp(N);
    for (int k = 0; k < N; ++k) perp(k) = std::sqrt(std::max(0.0, 1.0 - C.row(k).squaredNorm()));
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < d; ++i) out.dB(i, j) = sq * rng.normal();
        for (int k = 0; k < N; ++k) out.dBperp(k, j) = sq * rng.normal();
        out.dW.col(j) = C * out.dB.col(j) + perp.cwiseProduct(out.dBperp.col(j));
    }
    return out;
}

WealthStats mc_stats(const std::vector<double>& x)
{
    if (x.size() < 2) throw std::invalid_argument("mc_stats: need at least 2 samples");
    const double n = static_cast<double>(x.size());
    Kahan s;
    for (double v : x) s.add(v);
    const double mean = s.sum / n;
    Kahan s2, s4;
    for (double v : x) {
        const double c = (v - mean) * (v - mean);
        s2.add(c);
        s4.add(c * c);
    }
    WealthStats out;
    out.paths = static_cast<long>(x.size());
    out.mean = mean;
    out.variance = s2.sum / (n - 1.0);
    out.standard_error = std::sqrt(out.variance / n);
    const double m2 = s2.sum / n, m4 = s4.sum / n;
    out.variance_se = std::sqrt(std::max(0.0, m4 - m2 * m2) / n);
    return out;
}

WealthPath simulate_wealth(const Eigen::MatrixXd& lambda, const Eigen::MatrixXd& a, const Eigen::MatrixXd& dB,
                           const TimeGrid& g, const std::vector<double>& r_tail, double x0, double xi)
{
    const int n = g.n;
    WealthPath out{Eigen::VectorXd(n + 1), Eigen::MatrixXd(a.rows(), n)};
    double tilde = x0 - xi * std::exp(-r_tail[0]);
    out.X(0) = x0;
    for (int k = 0; k < n; ++k) {
        const auto ak = a.col(k);
        out.alpha.col(k) = -ak * tilde;
        const double rk = r_tail[static_cast<std::size_t>(k)] - r_tail[static_cast<std::size_t>(k) + 1];
        const double expo = rk - (lambda.col(k).dot(ak) + 0.5 * ak.squaredNorm()) * g.dt - ak.dot(dB.col(k));
        tilde *= std::exp(expo);
        out.X(k + 1) = tilde + xi * std::exp(-r_tail[static_cast<std::size_t>(k) + 1]);
    }
    return out;
}

ModelPath quadratic_path(const QuadraticSolution& s, const Drivers& drv,
                         const std::function<void(int, const Eigen::VectorXd&)>& on_node)
{
    const auto& g = s.grid();
    const auto& p = s.model().params();
    const int n = g.n, N = s.model().N(), d = s.model().d();
    const Eigen::MatrixXd& A = s.K().kernel_matrix();
    ModelPath out{Eigen::MatrixXd(N, n), Eigen::MatrixXd(d, n), Eigen::MatrixXd(d, n)};
    Eigen::VectorXd G = s.g0();
    for (int k = 0; k < n; ++k) {
        if (on_node) on_node(k, G);
        Eigen::VectorXd Y = G.segment(k * N, N);
        out.state.col(k) = Y;
        out.lambda.col(k) = p.Theta * Y;
        out.a.col(k) = out.lambda.col(k) + p.C.transpose() * s.z2(k, G);
        Eigen::VectorXd incr = p.D * Y + p.eta * drv.dW.col(k) / g.dt;
        const int rows = (n - k - 1) * N;
        if (rows > 0) G.tail(rows).noalias() += A.block((k + 1) * N, k * N, rows, N) * incr;
    }
    return out;
}

ModelPath affine_path(const AffineModel& m, const RiccatiVolterraSolution& sol, const ConvolutionWeights& w,
                      const Drivers& drv)
{
    const int n = w.grid.n;
    Eigen::MatrixXd V = simulate_V(m, w, drv.dW);
    ModelPath out{V.leftCols(n), Eigen::MatrixXd(m.d, n), Eigen::MatrixXd(m.d, n)};
    for (int k = 0; k < n; ++k) {
        out.lambda.col(k) = m.theta.cwiseProduct(V.col(k).cwiseSqrt());
        out.a.col(k) = affine_price_of_risk(m, sol, k, V.col(k));
    }
    return out;
}

namespace {

double laplace_sample(const ModelPath& mp, const TimeGrid& g, const std::vector<double>& r_tail)
{
    double expo = 2.0 * r_tail[0];
    for (int k = 0; k < g.n; ++k) expo -= mp.a.col(k).squaredNorm() * g.dt;
    return std::exp(expo);
}

GammaEstimate summarize(const std::vector<double>& samples)
{
    auto st = mc_stats(samples);
    return {st.mean, st.standard_error};
}

}  // namespace

GammaEstimate gamma_mc(const QuadraticSolution& s, const McConfig& cfg)
{
    std::vector<double> samples;
    samples.reserve(static_cast<std::size_t>(cfg.paths));
    for (long i = 0; i < cfg.paths; ++i) {
        auto drv = simulate_drivers(s.model().params().C, s.grid(), cfg.seed, static_cast<std::uint64_t>(i), cfg.antithetic);
        samples.push_back(laplace_sample(quadratic_path(s, drv), s.grid(), s.r_tail()));
    }
    return summarize(samples);
}

GammaEstimate gamma_mc(const AffineModel& m, const RiccatiVolterraSolution& sol, const McConfig& cfg)
{
    const auto w = convolution_weights(m, sol.grid);
    const auto r_tail = tail_integrals(sol.grid, m.r);
    Eigen::MatrixXd C = m.rho.asDiagonal();
    std::vector<double> samples;
    samples.reserve(static_cast<std::size_t>(cfg.paths));
    for (long i = 0; i < cfg.paths; ++i) {
        auto drv = simulate_drivers(C, sol.grid, cfg.seed, static_cast<std::uint64_t>(i), cfg.antithetic);
        samples.push_back(laplace_sample(affine_path(m, sol, w, drv), sol.grid, r_tail));
    }
    return summarize(samples);
}

MarkowitzRun markowitz_mc(const QuadraticSolution& s, double x0, double m, const McConfig& cfg)
{
    MarkowitzRun run;
    run.m = m;
    run.gamma0 = s.gamma0();
    run.xi = xi_star(m, run.gamma0, x0, s.r_tail()[0]);
    run.target_variance = value_v(m, run.gamma0, x0, s.r_tail()[0]);
    const auto& g = s.grid();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> terminal;
    terminal.reserve(static_cast<std::size_t>(cfg.paths));
    for (long i = 0; i < cfg.paths; ++i) {
        auto drv = simulate_drivers(s.model().params().C, g, cfg.seed, static_cast<std::uint64_t>(i), cfg.antithetic);
        auto mp = quadratic_path(s, drv);
        auto wp = simulate_wealth(mp.lambda, mp.a, drv.dB, g, s.r_tail(), x0, run.xi);
        terminal.push_back(wp.X(g.n));
        if (i < cfg.dump_paths) {
            Eigen::MatrixXd pi(s.model().d(), g.n);
            for (int k = 0; k < g.n; ++k) {
                try {
                    pi.col(k) = s.model().params().loadings.empty() ? Eigen::VectorXd(wp.alpha.col(k))
                                                                    : amounts_from_control(s.model(), mp.state.col(k), wp.alpha.col(k));
                } catch (const std::exception&) {
                    pi.col(k).setConstant(nan);
                }
            }
            run.dumped.push_back({i, std::move(wp), std::move(pi), std::move(mp.state)});
        }
    }
    run.stats = mc_stats(terminal);
    return run;
}

double affine_gamma0(const AffineModel& m, const RiccatiVolterraSolution& sol)
{
    const auto& g = sol.grid;
    Eigen::MatrixXd g0(m.d, g.n + 1);
    for (int i = 0; i <= g.n; ++i) g0.col(i) = m.g0(g.node(i));
    return gamma_affine(m, sol, 0, g0);
}

MarkowitzRun markowitz_mc(const AffineModel& model, const RiccatiVolterraSolution& sol, double gamma0, double x0,
                          double m, const McConfig& cfg)
{
    const auto& g = sol.grid;
    const auto w = convolution_weights(model, g);
    const auto r_tail = tail_integrals(g, model.r);
    Eigen::MatrixXd C = model.rho.asDiagonal();
    MarkowitzRun run;
    run.m = m;
    run.gamma0 = gamma0;
    run.xi = xi_star(m, gamma0, x0, r_tail[0]);
    run.target_variance = value_v(m, gamma0, x0, r_tail[0]);
    std::vector<double> terminal;
    terminal.reserve(static_cast<std::size_t>(cfg.paths));
    for (long i = 0; i < cfg.paths; ++i) {
        auto drv = simulate_drivers(C, g, cfg.seed, static_cast<std::uint64_t>(i), cfg.antithetic);
        auto mp = affine_path(model, sol, w, drv);
        auto wp = simulate_wealth(mp.lambda, mp.a, drv.dB, g, r_tail, x0, run.xi);
        terminal.push_back(wp.X(g.n));
        if (i < cfg.dump_paths) {
            Eigen::MatrixXd pi = wp.alpha.cwiseQuotient(mp.state.cwiseSqrt());
            run.dumped.push_back({i, std::move(wp), std::move(pi), std::move(mp.state)});
        }
    }
    run.stats = mc_stats(terminal);
    return run;
}

}  // namespace vmk
