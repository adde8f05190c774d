#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "vmk/affine.hpp"
#include "vmk/errors.hpp"
#include "vmk/montecarlo.hpp"
#include "vmk/operator.hpp"

using namespace vmk;

namespace {

AffineModel scalar_model(ScalarKernel k, double D, double nu, double rho, double theta, double g0, double r = 0.0)
{
    AffineModel m;
    m.d = 1;
    m.kernels = {k};
    m.D = Eigen::MatrixXd::Constant(1, 1, D);
    m.nu = Eigen::VectorXd::Constant(1, nu);
    m.rho = Eigen::VectorXd::Constant(1, rho);
    m.theta = Eigen::VectorXd::Constant(1, theta);
    m.g0 = constant_curve(Eigen::VectorXd::Constant(1, g0));
    m.r = constant_curve(r);
    return m;
}

AffineModel tanh_model() { return scalar_model(ScalarKernel::constant(1.0), 0.0, std::sqrt(2.0), 0.0, 1.0, 1.0); }

// psi' = -1 + psi^2, psi(0) = 0
double rk4_tanh(double T, int steps)
{
    auto f = [](double p) { return -1.0 + p * p; };
    double p = 0.0, h = T / steps;
    for (int i = 0; i < steps; ++i) {
        const double k1 = f(p), k2 = f(p + h / 2 * k1), k3 = f(p + h / 2 * k2), k4 = f(p + h * k3);
        p += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return p;
}

}  // namespace

TEST_CASE("riccati nonlinearity")
{
    auto m = scalar_model(ScalarKernel::constant(1.0), 0.0, 0.0, 0.0, 0.0, 1.0);
    CHECK(riccati_F(m, Eigen::VectorXd::Zero(1))(0) == 0.0);
    auto m1 = scalar_model(ScalarKernel::constant(1.0), 0.0, std::sqrt(2.0), 0.0, 1.0, 1.0);
    CHECK(riccati_F(m1, Eigen::VectorXd::Constant(1, -0.5))(0) == doctest::Approx(-0.75));

    AffineModel m2;
    m2.d = 2;
    m2.kernels = {ScalarKernel::constant(1.0), ScalarKernel::constant(1.0)};
    m2.D.resize(2, 2);
    m2.D << 0, 1, 1, 0;
    m2.nu = m2.rho = m2.theta = Eigen::VectorXd::Zero(2);
    m2.g0 = constant_curve(Eigen::VectorXd::Ones(2));
    auto F = riccati_F(m2, Eigen::Vector2d(1.0, 2.0));
    CHECK(F(0) == doctest::Approx(2.0));
    CHECK(F(1) == doctest::Approx(1.0));
}

TEST_CASE("validation")
{
    auto m = tanh_model();
    m.nu = Eigen::VectorXd::Constant(1, -1.0);
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
    m = tanh_model();
    m.rho(0) = 1.5;
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);

    AffineModel m2;
    m2.d = 2;
    m2.kernels = {ScalarKernel::fractional(0.3), ScalarKernel::fractional(0.3)};
    m2.D = Eigen::MatrixXd::Zero(2, 2);
    m2.nu = Eigen::VectorXd::Constant(2, 0.3);
    m2.rho = Eigen::Vector2d(-0.8, 0.1);
    m2.theta = Eigen::VectorXd::Constant(2, 0.2);
    m2.g0 = constant_curve(Eigen::VectorXd::Constant(2, 0.04));
    CHECK(m2.validate().size() == 1);
}

TEST_CASE("theta = 0 gives psi = 0")
{
    auto m = scalar_model(ScalarKernel::fractional(0.2), -0.5, 0.4, -0.6, 0.0, 0.04);
    auto sol = solve_riccati_volterra(m, make_grid(1.0, 100));
    CHECK(sol.psi.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("constant kernel reduces to tanh")
{
    const double oracle = rk4_tanh(1.0, 4000);
    CHECK(oracle == doctest::Approx(-std::tanh(1.0)).epsilon(1e-12));
    auto sol = solve_riccati_volterra(tanh_model(), make_grid(1.0, 1000));
    CHECK(sol.psi(0, 0) == 0.0);
    CHECK(std::abs(sol.psi(1000, 0) - oracle) < 1e-4);
    CHECK(sol.psi(1000, 0) == doctest::Approx(-0.76159).epsilon(1e-4));
    CHECK((sol.psi.array() <= 0.0).all());
}

TEST_CASE("grid doubling")
{
    for (auto k : {ScalarKernel::constant(1.0), ScalarKernel::fractional(0.3)}) {
        auto m = tanh_model();
        m.kernels = {k};
        auto ref = solve_riccati_volterra(m, make_grid(1.0, 3200));
        double prev = INFINITY;
        for (int n : {50, 100, 200, 400, 800}) {
            auto sol = solve_riccati_volterra(m, make_grid(1.0, n));
            double err = 0.0;
            for (int k2 = 0; k2 <= n; ++k2) err = std::max(err, std::abs(sol.psi(k2, 0) - ref.psi(k2 * (3200 / n), 0)));
            CHECK(err < prev);
            prev = err;
        }
        CHECK((ref.psi.array() <= 0.0).all());
    }
}

TEST_CASE("euler scheme is first order on the tanh case")
{
    auto m = tanh_model();
    const double e1 = std::abs(solve_riccati_volterra(m, make_grid(1.0, 200), VolterraScheme::Euler).psi(200, 0) + std::tanh(1.0));
    const double e2 = std::abs(solve_riccati_volterra(m, make_grid(1.0, 400), VolterraScheme::Euler).psi(400, 0) + std::tanh(1.0));
    CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("blow-up is reported")
{
    // psi' = -1 + 0 psi - psi^2 / 2 has no equilibrium and reaches -infinity in finite time
    auto m = scalar_model(ScalarKernel::constant(1.0), 2.0, 1.0, 1.0, 1.0, 1.0);
    try {
        solve_riccati_volterra(m, make_grid(6.0, 3000));
        FAIL("expected blow-up");
    } catch (const RiccatiBlowUp& e) {
        // exact blow-up time of psi' = -(1 + psi^2/2): pi / sqrt(2)
        CHECK(e.time() == doctest::Approx(M_PI / std::sqrt(2.0)).epsilon(0.02));
    }
}

TEST_CASE("deterministic variance")
{
    auto m = scalar_model(ScalarKernel::fractional(0.3), 0.0, 0.0, 0.0, 1.0, 0.7);
    auto g = make_grid(1.0, 50);
    auto w = convolution_weights(m, g);
    Eigen::MatrixXd dW = Eigen::MatrixXd::Random(1, 50);
    auto V = simulate_V(m, w, dW);
    CHECK((V.array() - 0.7).abs().maxCoeff() < 1e-15);
    for (int k : {0, 10, 50}) {
        auto gk = forward_g_affine(m, w, V, dW, k);
        for (int i = k; i <= 50; ++i) CHECK(gk(0, i) == doctest::Approx(0.7));
    }
}

TEST_CASE("linear Volterra drift")
{
    const double kappa = 1.3, V0 = 0.5;
    auto m = scalar_model(ScalarKernel::constant(1.0), -kappa, 0.0, 0.0, 0.5, V0);
    auto g = make_grid(1.0, 2000);
    auto V = simulate_V(m, convolution_weights(m, g), Eigen::MatrixXd::Zero(1, 2000));
    CHECK(V(0, 2000) == doctest::Approx(V0 * std::exp(-kappa)).epsilon(1e-3));
}

TEST_CASE("forward curve consistency")
{
    auto m = scalar_model(ScalarKernel::fractional(0.4), -0.5, 0.4, -0.7, 0.4, 0.04);
    auto g = make_grid(1.0, 80);
    auto w = convolution_weights(m, g);
    auto drv = simulate_drivers(Eigen::MatrixXd::Zero(1, 1), g, 5, 0);
    auto V = simulate_V(m, w, drv.dW);
    auto g0 = forward_g_affine(m, w, V, drv.dW, 0);
    CHECK(g0.row(0).array().isApproxToConstant(0.04));
    for (int k : {1, 20, 79}) {
        auto gk = forward_g_affine(m, w, V, drv.dW, k);
        if (V(0, k) > 0.0) CHECK(gk(0, k) == doctest::Approx(V(0, k)).epsilon(1e-14));
    }
}

TEST_CASE("mean of V matches the resolvent expectation")
{
    auto m = scalar_model(ScalarKernel::fractional(0.4), -1.0, 0.3, 0.0, 0.0, 0.5);
    const int n = 50;
    auto g = make_grid(1.0, n);
    auto w = convolution_weights(m, g);
    // E[V] on the left nodes solves (Id - K D) E[V] = g0
    auto A = discretize(m.kernel(), g);
    auto inv = invert_id_minus(right_multiply(A, m.D));
    Eigen::VectorXd mean = inv.apply(Eigen::VectorXd::Constant(n, 0.5));
    std::vector<double> samples;
    for (int p = 0; p < 10000; ++p) {
        auto drv = simulate_drivers(Eigen::MatrixXd::Zero(1, 1), g, 17, static_cast<std::uint64_t>(p));
        samples.push_back(simulate_V(m, w, drv.dW)(0, n - 1));
    }
    auto st = mc_stats(samples);
    CHECK(std::abs(st.mean - mean(n - 1)) <= 3 * st.standard_error);
}

TEST_CASE("gamma")
{
    auto g = make_grid(1.0, 400);
    auto m0 = scalar_model(ScalarKernel::fractional(0.3), -0.3, 0.3, -0.5, 0.0, 0.04);
    auto sol0 = solve_riccati_volterra(m0, g);
    auto w0 = convolution_weights(m0, g);
    Eigen::MatrixXd gk = Eigen::MatrixXd::Constant(1, 401, 0.04);
    CHECK(gamma_affine(m0, sol0, 0, gk) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(gamma_affine(m0, sol0, 200, gk) == doctest::Approx(1.0).epsilon(1e-14));

    auto m1 = scalar_model(ScalarKernel::constant(1.0), 0.0, 0.0, 0.0, 1.0, 1.0);
    auto sol1 = solve_riccati_volterra(m1, g);
    CHECK(affine_gamma0(m1, sol1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-10));
    CHECK(affine_gamma0(m1, sol1) == doctest::Approx(0.3679).epsilon(1e-4));

    // Gamma stays in (0, exp(2 int r)] along simulated paths
    auto m2 = scalar_model(ScalarKernel::fractional(0.3), -0.3, 0.5, -0.7, 0.5, 0.04, 0.03);
    auto sol2 = solve_riccati_volterra(m2, make_grid(1.0, 100));
    auto w2 = convolution_weights(m2, sol2.grid);
    auto tail = tail_integrals(sol2.grid, m2.r);
    for (int p = 0; p < 20; ++p) {
        auto drv = simulate_drivers(Eigen::MatrixXd::Constant(1, 1, -0.7), sol2.grid, 3, static_cast<std::uint64_t>(p));
        auto V = simulate_V(m2, w2, drv.dW);
        for (int k = 0; k <= 100; k += 10) {
            const double G = gamma_affine(m2, sol2, k, forward_g_affine(m2, w2, V, drv.dW, k));
            CHECK(G > 0.0);
            CHECK(G <= std::exp(2 * tail[static_cast<std::size_t>(k)]) * (1 + 1e-12));
        }
    }
}

TEST_CASE("optimal control")
{
    auto m = scalar_model(ScalarKernel::constant(1.0), 0.0, 0.3, 0.0, 1.0, 1.0);
    auto sol = solve_riccati_volterra(m, make_grid(1.0, 100));
    const Eigen::VectorXd V = Eigen::VectorXd::Ones(1);
    const double xi = 1.2, tail = 0.1;
    CHECK(optimal_control_affine(m, sol, 10, V, xi * std::exp(-tail), xi, tail).norm() == doctest::Approx(0.0));
    CHECK(optimal_control_affine(m, sol, 10, V, xi * std::exp(-tail) - 1.0, xi, tail)(0) == doctest::Approx(1.0));

    auto z = scalar_model(ScalarKernel::constant(1.0), 0.0, 0.3, -0.5, 0.0, 1.0);
    auto solz = solve_riccati_volterra(z, make_grid(1.0, 100));
    CHECK(optimal_control_affine(z, solz, 10, V, 0.3, xi, tail).norm() == 0.0);
}

TEST_CASE("theta condition")
{
    auto z = scalar_model(ScalarKernel::fractional(0.3), 0.0, 0.3, -0.5, 0.0, 1.0);
    auto solz = solve_riccati_volterra(z, make_grid(1.0, 100));
    CHECK(theta_condition_check_affine(z, solz, 1e-6, 3.0).lhs == 0.0);
    CHECK(theta_condition_check_affine(z, solz, 1e-6, 3.0).pass);

    auto sol = solve_riccati_volterra(tanh_model(), make_grid(1.0, 1000));
    const auto tc = theta_condition_check_affine(tanh_model(), sol, 1.0, 3.0);
    CHECK(tc.lhs == doctest::Approx(1.0 + 2.0 * std::pow(std::tanh(1.0), 2)).epsilon(1e-4));
    CHECK(tc.bound == doctest::Approx(1.0 / 198.0));
    CHECK_FALSE(tc.pass);
    CHECK_THROWS_AS(theta_condition_check_affine(z, solz, 1.0, 2.0), std::invalid_argument);

    CHECK(heston_moment_condition(0.1, 1.0, 1.0));
    CHECK_FALSE(heston_moment_condition(0.6, 1.0, 1.0));
}
