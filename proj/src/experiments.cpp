#include "vmk/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "vmk/errors.hpp"

namespace vmk {

using nlohmann::json;

namespace {

std::string fmt(double v)
{
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

const json& at(const json& j, const std::string& key, const std::string& where)
{
    if (!j.is_object() || !j.contains(key)) throw ConfigError("config: missing key '" + where + "." + key + "'");
    return j.at(key);
}

double num(const json& j, const std::string& where)
{
    if (!j.is_number()) throw ConfigError("config: '" + where + "' must be a number");
    return j.get<double>();
}

double num_or(const json& j, const std::string& key, double dflt, const std::string& where)
{
    return j.contains(key) ? num(j.at(key), where + "." + key) : dflt;
}

Eigen::VectorXd vec(const json& j, int size, const std::string& where)
{
    Eigen::VectorXd v(size);
    if (j.is_number()) {
        v.setConstant(j.get<double>());
        return v;
    }
    if (!j.is_array() || static_cast<int>(j.size()) != size)
        throw ConfigError("config: '" + where + "' must be a number or an array of " + std::to_string(size) + " numbers");
    for (int i = 0; i < size; ++i) v(i) = num(j[static_cast<std::size_t>(i)], where + "[" + std::to_string(i) + "]");
    return v;
}

Eigen::MatrixXd mat(const json& j, int rows, int cols, const std::string& where)
{
    if (j.is_number()) {
        if (rows != cols) throw ConfigError("config: '" + where + "' must be a " + std::to_string(rows) + "x" + std::to_string(cols) + " matrix");
        return j.get<double>() * Eigen::MatrixXd::Identity(rows, cols);
    }
    if (!j.is_array() || static_cast<int>(j.size()) != rows)
        throw ConfigError("config: '" + where + "' must have " + std::to_string(rows) + " rows");
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) m.row(i) = vec(j[static_cast<std::size_t>(i)], cols, where + "[" + std::to_string(i) + "]").transpose();
    return m;
}

ScalarKernel parse_scalar_kernel(const json& spec, const std::string& where)
{
    if (!spec.is_object()) throw ConfigError("config: '" + where + "' must be a kernel object");
    const std::string type = at(spec, "type", where).get<std::string>();
    try {
        if (type == "fractional") return ScalarKernel::fractional(num(at(spec, "H", where), where + ".H"), num_or(spec, "scale", 1.0, where));
        if (type == "exponential")
            return ScalarKernel::exponential(num(at(spec, "beta", where), where + ".beta"), num_or(spec, "scale", 1.0, where));
        if (type == "constant" || type == "unit") return ScalarKernel::constant(num_or(spec, "value", 1.0, where));
        if (type == "table") {
            std::vector<double> values;
            for (const auto& v : at(spec, "values", where)) values.push_back(num(v, where + ".values"));
            return ScalarKernel::tabulated(num(at(spec, "dt", where), where + ".dt"), std::move(values));
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError("config: '" + where + "': " + e.what());
    }
    throw ConfigError("config: '" + where + ".type' has unknown kernel type '" + type + "'");
}

Kernel parse_kernel_at(const json& spec, int N, const std::string& where)
{
    if (spec.is_array()) {
        if (static_cast<int>(spec.size()) != N) throw ConfigError("config: '" + where + "' must list " + std::to_string(N) + " kernels");
        std::vector<ScalarKernel> diag;
        for (int i = 0; i < N; ++i) diag.push_back(parse_scalar_kernel(spec[static_cast<std::size_t>(i)], where + "[" + std::to_string(i) + "]"));
        return Kernel::diagonal(diag);
    }
    const std::string type = at(spec, "type", where).get<std::string>();
    if (type == "diagonal") return parse_kernel_at(at(spec, "entries", where), N, where + ".entries");
    if (type == "constant" && spec.contains("matrix"))
        return Kernel::constant(mat(spec.at("matrix"), N, N, where + ".matrix"), spec.value("volterra", true));
    const ScalarKernel k = parse_scalar_kernel(spec, where);
    return Kernel::diagonal(std::vector<ScalarKernel>(static_cast<std::size_t>(N), k));
}

Curve rate_curve(const json& j, const std::string& where)
{
    if (!j.contains("r")) return constant_curve(0.0);
    return constant_curve(num(j.at("r"), where + ".r"));
}

VectorCurve g0_curve(const json& j, int N, const std::string& where)
{
    const json& g = at(j, "g0", where);
    if (g.is_object()) {
        // piecewise constant samples on a uniform grid of [0,T]
        const double T = num(at(g, "T", where + ".g0"), where + ".g0.T");
        std::vector<Eigen::VectorXd> samples;
        for (const auto& s : at(g, "samples", where + ".g0")) samples.push_back(vec(s, N, where + ".g0.samples"));
        if (samples.empty()) throw ConfigError("config: '" + where + ".g0.samples' is empty");
        return [samples, T](double t) {
            auto i = static_cast<std::size_t>(std::floor(t / T * static_cast<double>(samples.size())));
            return samples[std::min(i, samples.size() - 1)];
        };
    }
    return constant_curve(vec(g, N, where + ".g0"));
}

SteinStein parse_stein_stein(const json& q)
{
    SteinStein s;
    const std::string w = "quadratic";
    if (q.contains("H")) {
        auto h = vec(q.at("H"), 2, w + ".H");
        s.H1 = h(0);
        s.H2 = h(1);
    }
    s.rho = num_or(q, "rho", s.rho, w);
    s.eta = num_or(q, "eta", s.eta, w);
    if (q.contains("c")) {
        auto c = vec(q.at("c"), 2, w + ".c");
        s.c1 = c(0);
        s.c2 = c(1);
    }
    if (q.contains("theta")) {
        auto t = vec(q.at("theta"), 2, w + ".theta");
        s.theta1 = t(0);
        s.theta2 = t(1);
    }
    if (q.contains("Y0")) {
        auto y = vec(q.at("Y0"), 2, w + ".Y0");
        s.Y1 = y(0);
        s.Y2 = y(1);
    }
    s.r = num_or(q, "r", s.r, w);
    return s;
}

std::string join_header(const std::string& prefix, int count)
{
    std::string out;
    for (int i = 1; i <= count; ++i) out += "," + prefix + std::to_string(i);
    return out;
}

}  // namespace

QuadraticParams stein_stein_params(const SteinStein& s)
{
    if (!(std::abs(s.rho) < 1.0)) throw std::invalid_argument("stein_stein: |rho| must be below 1");
    Eigen::Matrix2d beta;
    beta << 1.0, 0.0, s.rho, std::sqrt(1.0 - s.rho * s.rho);
    QuadraticParams p;
    p.N = 2;
    p.d = 2;
    p.K = Kernel::diagonal({ScalarKernel::fractional(s.H1), ScalarKernel::fractional(s.H2)});
    p.D = Eigen::MatrixXd::Zero(2, 2);
    p.eta = s.eta * Eigen::MatrixXd::Identity(2, 2);
    p.C = Eigen::Vector2d(s.c1, s.c2).asDiagonal() * beta;
    p.Theta = beta.inverse() * Eigen::Vector2d(s.theta1, s.theta2).asDiagonal();
    p.g0 = constant_curve(Eigen::VectorXd(Eigen::Vector2d(s.Y1, s.Y2)));
    p.r = constant_curve(s.r);
    for (int k = 0; k < 2; ++k) {
        Eigen::MatrixXd L = Eigen::MatrixXd::Zero(2, 2);
        L.row(k) = beta.row(k);
        p.loadings.push_back(L);
    }
    p.allow_indefinite = true;
    return p;
}

Kernel parse_kernel(const json& spec, int N) { return parse_kernel_at(spec, N, "kernel"); }

QuadraticParams parse_quadratic(const json& q)
{
    const std::string w = "quadratic";
    if (!q.is_object()) throw ConfigError("config: 'quadratic' must be an object");
    if (q.value("preset", std::string()) == "stein_stein") {
        auto p = stein_stein_params(parse_stein_stein(q));
        p.allow_indefinite = q.value("allow_indefinite", true);
        return p;
    }
    QuadraticParams p;
    p.N = static_cast<int>(num(at(q, "N", w), w + ".N"));
    p.d = static_cast<int>(num(at(q, "d", w), w + ".d"));
    p.K = parse_kernel_at(at(q, "kernel", w), p.N, w + ".kernel");
    p.D = q.contains("D") ? mat(q.at("D"), p.N, p.N, w + ".D") : Eigen::MatrixXd::Zero(p.N, p.N);
    p.eta = mat(at(q, "eta", w), p.N, p.N, w + ".eta");
    p.C = q.contains("C") ? mat(q.at("C"), p.N, p.d, w + ".C") : Eigen::MatrixXd::Zero(p.N, p.d);
    p.Theta = mat(at(q, "Theta", w), p.d, p.N, w + ".Theta");
    p.g0 = g0_curve(q, p.N, w);
    p.r = rate_curve(q, w);
    if (q.contains("loadings")) {
        const auto& L = q.at("loadings");
        if (!L.is_array() || static_cast<int>(L.size()) != p.N) throw ConfigError("config: 'quadratic.loadings' must list N matrices");
        for (int k = 0; k < p.N; ++k) p.loadings.push_back(mat(L[static_cast<std::size_t>(k)], p.d, p.d, w + ".loadings"));
    }
    p.allow_indefinite = q.value("allow_indefinite", false);
    return p;
}

AffineModel parse_affine(const json& a)
{
    const std::string w = "affine";
    if (!a.is_object()) throw ConfigError("config: 'affine' must be an object");
    AffineModel m;
    m.d = static_cast<int>(num(at(a, "d", w), w + ".d"));
    const json& ks = at(a, "kernel", w);
    if (ks.is_array()) {
        for (std::size_t i = 0; i < ks.size(); ++i) m.kernels.push_back(parse_scalar_kernel(ks[i], w + ".kernel[" + std::to_string(i) + "]"));
    } else {
        m.kernels.assign(static_cast<std::size_t>(m.d), parse_scalar_kernel(ks, w + ".kernel"));
    }
    m.D = a.contains("D") ? mat(a.at("D"), m.d, m.d, w + ".D") : Eigen::MatrixXd::Zero(m.d, m.d);
    m.nu = vec(at(a, "nu", w), m.d, w + ".nu");
    m.rho = a.contains("rho") ? vec(a.at("rho"), m.d, w + ".rho") : Eigen::VectorXd::Zero(m.d);
    m.theta = vec(at(a, "theta", w), m.d, w + ".theta");
    m.g0 = g0_curve(a, m.d, w);
    m.r = rate_curve(a, w);
    try {
        m.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return m;
}

Experiment Experiment::load(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    json cfg;
    try {
        cfg = json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t pos = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n');
        throw ConfigError("config: " + path + ":" + std::to_string(line) + ": " + e.what());
    }
    return from_json(std::move(cfg));
}

Experiment Experiment::from_json(json cfg)
{
    if (!cfg.is_object()) throw ConfigError("config: top level must be an object");
    const int sections = static_cast<int>(cfg.contains("quadratic")) + static_cast<int>(cfg.contains("affine"));
    if (sections != 1) throw ConfigError("config: exactly one of 'quadratic' or 'affine' is required");
    if (!cfg.contains("grid")) throw ConfigError("config: missing key 'grid'");
    Experiment e;
    e.cfg_ = std::move(cfg);
    return e;
}

TimeGrid Experiment::grid(std::optional<int> n_override) const
{
    const json& g = cfg_.at("grid");
    const double T = num(at(g, "T", "grid"), "grid.T");
    int n = n_override ? *n_override : (g.contains("n") ? static_cast<int>(num(g.at("n"), "grid.n")) : default_cells(T));
    try {
        return make_grid(T, n);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: grid: ") + e.what());
    }
}

QuadraticModel Experiment::quadratic_model() const { return QuadraticModel::build(parse_quadratic(cfg_.at("quadratic"))); }

AffineModel Experiment::affine_model() const { return parse_affine(cfg_.at("affine")); }

double Experiment::x0() const
{
    if (cfg_.contains("markowitz") && cfg_.at("markowitz").contains("x0")) return num(cfg_.at("markowitz").at("x0"), "markowitz.x0");
    const json& model = cfg_.at(is_quadratic() ? "quadratic" : "affine");
    return num_or(model, "x0", 1.0, is_quadratic() ? "quadratic" : "affine");
}

std::vector<double> Experiment::targets() const
{
    std::vector<double> out;
    if (cfg_.contains("markowitz") && cfg_.at("markowitz").contains("m")) {
        const json& m = cfg_.at("markowitz").at("m");
        if (m.is_array())
            for (const auto& v : m) out.push_back(num(v, "markowitz.m"));
        else
            out.push_back(num(m, "markowitz.m"));
        if (out.empty()) throw ConfigError("config: 'markowitz.m' is empty");
        return out;
    }
    for (int i = 0; i <= 10; ++i) out.push_back(x0() * (1.0 + 0.02 * i));
    return out;
}

McConfig Experiment::mc(const RunOptions& opt) const
{
    McConfig c;
    if (cfg_.contains("mc")) {
        const json& m = cfg_.at("mc");
        c.paths = static_cast<long>(num_or(m, "paths", static_cast<double>(c.paths), "mc"));
        c.seed = m.contains("seed") ? m.at("seed").get<std::uint64_t>() : c.seed;
        c.antithetic = m.value("antithetic", false);
        c.dump_paths = static_cast<long>(num_or(m, "dump_paths", 10.0, "mc"));
    } else {
        c.dump_paths = 10;
    }
    if (opt.seed) c.seed = *opt.seed;
    if (opt.paths) c.paths = *opt.paths;
    if (c.paths < 2) throw ConfigError("config: 'mc.paths' must be at least 2");
    return c;
}

void OutputSet::commit() const
{
    namespace fs = std::filesystem;
    fs::create_directories(dir_);
    std::vector<std::pair<fs::path, fs::path>> staged;
    try {
        for (const auto& [name, content] : files_) {
            fs::path final_path = fs::path(dir_) / name;
            fs::path tmp = final_path;
            tmp += ".partial";
            std::ofstream out(tmp, std::ios::binary);
            out << content;
            out.close();
            if (!out) throw std::runtime_error("cannot write " + tmp.string());
            staged.emplace_back(tmp, final_path);
        }
    } catch (...) {
        for (const auto& s : staged) fs::remove(s.first);
        throw;
    }
    for (const auto& [tmp, final_path] : staged) fs::rename(tmp, final_path);
}

std::string strategy_csv(const StrategyProfile& p)
{
    const int d = static_cast<int>(p.alpha.rows());
    std::ostringstream os;
    os << "t" << join_header("alpha_", d) << join_header("pi_", d) << "\n";
    for (std::size_t k = 0; k < p.t.size(); ++k) {
        os << fmt(p.t[k]);
        for (int i = 0; i < d; ++i) os << "," << fmt(p.alpha(i, static_cast<Eigen::Index>(k)));
        for (int i = 0; i < d; ++i) os << "," << fmt(p.pi(i, static_cast<Eigen::Index>(k)));
        os << "\n";
    }
    return os.str();
}

std::string frontier_csv(const std::vector<FrontierPoint>& pts)
{
    std::ostringstream os;
    os << "m,std,variance,xi_star,gamma0\n";
    for (const auto& p : pts)
        os << fmt(p.m) << "," << fmt(std::sqrt(p.variance)) << "," << fmt(p.variance) << "," << fmt(p.xi_star) << ","
           << fmt(p.gamma0) << "\n";
    return os.str();
}

namespace {

struct Solved {
    TimeGrid grid;
    double gamma0 = 0.0;
    double int_r = 0.0;
    StrategyProfile profile;
    std::optional<QuadraticSolution> quad;
    std::optional<RiccatiVolterraSolution> aff;
};

StrategyProfile affine_profile(const AffineModel& m, const RiccatiVolterraSolution& sol, double xi)
{
    const auto& g = sol.grid;
    const auto tail = tail_integrals(g, m.r);
    StrategyProfile p{std::vector<double>(g.nodes.begin(), g.nodes.end() - 1), Eigen::MatrixXd(m.d, g.n), Eigen::MatrixXd(m.d, g.n)};
    for (int k = 0; k < g.n; ++k) {
        Eigen::VectorXd V = m.g0(g.node(k));
        Eigen::VectorXd a = affine_price_of_risk(m, sol, k, V) * xi * std::exp(-tail[static_cast<std::size_t>(k)]);
        p.alpha.col(k) = a;
        p.pi.col(k) = a.cwiseQuotient(V.cwiseSqrt());
    }
    return p;
}

Solved solve(const Experiment& e, const RunOptions& opt, std::ostream& log)
{
    Solved s;
    s.grid = e.grid(opt.grid_n);
    const double m0 = e.targets().front();
    if (e.is_quadratic()) {
        auto model = e.quadratic_model();
        for (const auto& w : model.warnings()) log << "warning: " << w << "\n";
        s.quad.emplace(model, s.grid);
        s.gamma0 = s.quad->gamma0();
        s.int_r = s.quad->r_tail()[0];
        s.profile = deterministic_profile(*s.quad, xi_star(m0, s.gamma0, e.x0(), s.int_r));
    } else {
        auto model = e.affine_model();
        for (const auto& w : model.validate()) log << "warning: " << w << "\n";
        const std::string scheme = e.config().at("affine").value("scheme", std::string("adams"));
        s.aff = solve_riccati_volterra(model, s.grid, scheme == "euler" ? VolterraScheme::Euler : VolterraScheme::Adams);
        s.gamma0 = affine_gamma0(model, *s.aff);
        s.int_r = tail_integrals(s.grid, model.r)[0];
        s.profile = affine_profile(model, *s.aff, xi_star(m0, s.gamma0, e.x0(), s.int_r));
    }
    return s;
}

std::string riccati_csv(const QuadraticSolution& q, const json& qcfg)
{
    const int N = q.model().N();
    const auto& g = q.grid();
    std::optional<MarkovianRiccati> ode;
    if (qcfg.value("markovian_oracle", false)) ode = markovian_riccati_ode(q.model(), g.T, g.n);
    std::ostringstream os;
    os << "t,phi,gamma_g0";
    for (int i = 1; i <= N; ++i)
        for (int j = 1; j <= N; ++j) os << ",P_" << i << j;
    if (ode) {
        os << ",phi_ode";
        for (int i = 1; i <= N; ++i)
            for (int j = 1; j <= N; ++j) os << ",P_ode_" << i << j;
    }
    os << "\n";
    for (int k = 0; k <= g.n; ++k) {
        os << fmt(g.node(k)) << "," << fmt(q.phi(k)) << "," << fmt(std::exp(q.phi(k) + q.quad_form_g0(k)));
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) os << "," << fmt(q.P(k)(i, j));
        if (ode) {
            os << "," << fmt(ode->phi[static_cast<std::size_t>(k)]);
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < N; ++j) os << "," << fmt(ode->P[static_cast<std::size_t>(k)](i, j));
        }
        os << "\n";
    }
    return os.str();
}

std::string psi_csv(const RiccatiVolterraSolution& sol)
{
    const int d = static_cast<int>(sol.psi.cols());
    std::ostringstream os;
    os << "t" << join_header("psi_", d) << join_header("F_", d) << "\n";
    for (int k = 0; k <= sol.grid.n; ++k) {
        os << fmt(sol.grid.node(k));
        for (int i = 0; i < d; ++i) os << "," << fmt(sol.psi(k, i));
        for (int i = 0; i < d; ++i) os << "," << fmt(sol.F(k, i));
        os << "\n";
    }
    return os.str();
}

std::string paths_csv(const MarkowitzRun& run, const TimeGrid& g, const std::string& state_prefix)
{
    if (run.dumped.empty()) return {};
    const int d = static_cast<int>(run.dumped.front().pi.rows());
    const int S = static_cast<int>(run.dumped.front().state.rows());
    std::ostringstream os;
    os << "path_id,t,X" << join_header("alpha_", d) << join_header("pi_", d) << join_header(state_prefix, S) << "\n";
    for (const auto& rec : run.dumped)
        for (int k = 0; k < g.n; ++k) {
            os << rec.id << "," << fmt(g.node(k)) << "," << fmt(rec.wealth.X(k));
            for (int i = 0; i < d; ++i) os << "," << fmt(rec.wealth.alpha(i, k));
            for (int i = 0; i < d; ++i) os << "," << fmt(rec.pi(i, k));
            for (int i = 0; i < S; ++i) os << "," << fmt(rec.state(i, k));
            os << "\n";
        }
    return os.str();
}

void print_row(std::ostream& log, const std::string& name, const std::string& value, const std::string& status = "")
{
    log << std::left << std::setw(34) << name << std::setw(18) << value << status << "\n";
}

void run_check(const Experiment& e, const RunOptions& opt, std::ostream& log)
{
    const json chk = e.config().value("check", json::object());
    const double p = num_or(chk, "p", 3.0, "check");
    const double c = num_or(chk, "c", 1.0, "check");
    const TimeGrid g = e.grid(opt.grid_n);
    log << "admissibility diagnostics\n";
    if (e.is_quadratic()) {
        auto model = e.quadratic_model();
        const auto& prm = model.params();
        QuadraticSolution q(model, g);
        const double gamma0 = q.gamma0();
        const double cap = std::exp(2.0 * q.r_tail()[0]);
        const double ap = a_of_p(p, prm.C);
        const auto kh = kappa_hat(model, g);
        const double kt = kh.feasible ? kappa_theta(model, g, c) : INFINITY;
        const int cov_n = static_cast<int>(num_or(chk, "cov_cells", 16.0, "check"));
        const auto cov = lambda_max_covariance(model, make_grid(g.T, cov_n), ap * kt);
        print_row(log, "U - 2CC^T min eigenvalue", fmt(model.min_eig_assumption()), model.min_eig_assumption() >= -1e-10 ? "PASS" : "FAIL");
        print_row(log, "H1: 0 < Gamma_0 < exp(2 int r)", fmt(gamma0), (gamma0 > 0 && gamma0 < cap * (1 - 1e-12)) ? "PASS" : "FAIL (degenerate market)");
        print_row(log, "a(p)", fmt(ap));
        print_row(log, "a(p) squared-norm reading", fmt(a_of_p(p, prm.C, NormReading::SquaredFrobenius)));
        print_row(log, "|Theta|", fmt(prm.Theta.norm()));
        print_row(log, "x = |D - 2 eta C Theta| ||K||^2", fmt(kh.x), kh.feasible ? "PASS" : "FAIL (x >= 1)");
        print_row(log, "kappa_hat", fmt(kh.kappa_hat));
        print_row(log, "kappa(Theta) (c = " + fmt(c) + ")", fmt(kt));
        print_row(log, "lambda_1", fmt(cov.lambda1));
        print_row(log, "trace Sigma_bar", fmt(cov.trace));
        print_row(log, "H2: 2 a(p) kappa < 1/lambda_1", fmt(2.0 * ap * kt * cov.lambda1), cov.lambda_condition ? "PASS" : "FAIL");
        print_row(log, "H2 via trace: 2 a(p) kappa < 1/tr", fmt(2.0 * ap * kt * cov.trace), cov.trace_condition ? "PASS" : "FAIL");
    } else {
        auto model = e.affine_model();
        auto sol = solve_riccati_volterra(model, g);
        const double a = num_or(chk, "a", 0.1, "check");
        const auto tc = theta_condition_check_affine(model, sol, a, p);
        const double gamma0 = affine_gamma0(model, sol);
        const double cap = std::exp(2.0 * tail_integrals(g, model.r)[0]);
        print_row(log, "H1: 0 < Gamma_0 < exp(2 int r)", fmt(gamma0), (gamma0 > 0 && gamma0 < cap * (1 - 1e-12)) ? "PASS" : "FAIL (degenerate market)");
        print_row(log, "a / a(p)", fmt(tc.bound));
        print_row(log, "max theta^2 + nu^2 psi^2 <= a/a(p)", fmt(tc.lhs), tc.pass ? "PASS" : "FAIL");
        if (model.d == 1)
            print_row(log, "a < kappa^2/(2 nu^2)", fmt(a), heston_moment_condition(a, -model.D(0, 0), model.nu(0)) ? "PASS" : "FAIL");
    }
}

void run_sweep(const Experiment& e, const RunOptions& opt, OutputSet& out, std::ostream& log)
{
    const json& sw = at(e.config(), "sweep", "");
    const std::string param = at(sw, "param", "sweep").get<std::string>();
    std::string ptr = "/" + param;
    std::replace(ptr.begin(), ptr.end(), '.', '/');
    const json::json_pointer jp(ptr);
    if (!e.config().contains(jp)) throw ConfigError("config: sweep parameter '" + param + "' does not name an existing key");
    const json& values = at(sw, "values", "sweep");
    if (!values.is_array() || values.empty()) throw ConfigError("config: 'sweep.values' must be a non-empty array");
    const double ap_p = num_or(e.config().value("check", json::object()), "p", 3.0, "check");

    std::ostringstream rows, summary;
    rows << "param,value,asset,t,alpha,pi\n";
    summary << "value,gamma0,xi_star,blowup_time,lambda1,trace\n";
    for (const auto& v : values) {
        json cfg = e.config();
        cfg[jp] = v;
        auto ex = Experiment::from_json(cfg);
        const std::string vs = v.dump();
        const TimeGrid g = ex.grid(opt.grid_n);
        double blow = NAN, gamma0 = NAN, xi = NAN, lam = NAN, tr = NAN;
        StrategyProfile prof;
        try {
            std::ostringstream quiet;
            auto s = solve(ex, opt, quiet);
            gamma0 = s.gamma0;
            xi = xi_star(ex.targets().front(), gamma0, ex.x0(), s.int_r);
            prof = s.profile;
            if (ex.is_quadratic()) {
                auto model = ex.quadratic_model();
                auto cov = lambda_max_covariance(model, make_grid(g.T, 12), a_of_p(ap_p, model.params().C));
                lam = cov.lambda1;
                tr = cov.trace;
            }
        } catch (const RiccatiBlowUp& b) {
            blow = b.time();
            log << "sweep " << param << " = " << vs << ": blow-up at t = " << fmt(blow) << "\n";
        }
        const int d = ex.is_quadratic() ? ex.quadratic_model().d() : ex.affine_model().d;
        for (int i = 0; i < d; ++i)
            for (int k = 0; k < g.n; ++k) {
                const bool ok = std::isnan(blow);
                rows << param << "," << vs << "," << (i + 1) << "," << fmt(g.node(k)) << "," << (ok ? fmt(prof.alpha(i, k)) : "nan")
                     << "," << (ok ? fmt(prof.pi(i, k)) : "nan") << "\n";
            }
        summary << vs << "," << fmt(gamma0) << "," << fmt(xi) << "," << fmt(blow) << "," << fmt(lam) << "," << fmt(tr) << "\n";
    }
    out.add("sweep.csv", rows.str());
    out.add("sweep_summary.csv", summary.str());
}

}  // namespace

OutputSet run_subcommand(const std::string& name, const RunOptions& opt, std::ostream& log)
{
    const auto e = Experiment::load(opt.config_path);
    std::string dir = opt.out_dir ? *opt.out_dir : std::string("out");
    if (!opt.out_dir && e.config().contains("outputs")) dir = e.config().at("outputs").value("dir", dir);
    OutputSet out(dir);

    if (name == "check") {
        run_check(e, opt, log);
        return out;
    }
    if (name == "sweep") {
        run_sweep(e, opt, out, log);
        out.commit();
        return out;
    }
    if (name == "affine-solve" && e.is_quadratic()) throw ConfigError("config: affine-solve needs an 'affine' section");
    if (name == "quadratic-solve" && !e.is_quadratic()) throw ConfigError("config: quadratic-solve needs a 'quadratic' section");

    auto s = solve(e, opt, log);
    log << "Gamma_0 = " << fmt(s.gamma0) << "\n";
    if (name == "affine-solve") {
        out.add("psi.csv", psi_csv(*s.aff));
        out.add("strategy.csv", strategy_csv(s.profile));
    } else if (name == "quadratic-solve") {
        log << "phi_0 = " << fmt(s.quad->phi(0)) << "\n";
        out.add("riccati.csv", riccati_csv(*s.quad, e.config().at("quadratic")));
        out.add("strategy.csv", strategy_csv(s.profile));
    } else if (name == "frontier") {
        auto pts = frontier(s.gamma0, e.x0(), s.int_r, e.targets());
        for (const auto& p : pts) log << "m = " << fmt(p.m) << "  V(m) = " << fmt(p.variance) << "\n";
        out.add("frontier.csv", frontier_csv(pts));
        out.add("strategy.csv", strategy_csv(s.profile));
    } else if (name == "simulate") {
        const auto cfg = e.mc(opt);
        const double m = e.targets().front();
        MarkowitzRun run = s.quad ? markowitz_mc(*s.quad, e.x0(), m, cfg)
                                  : markowitz_mc(e.affine_model(), *s.aff, s.gamma0, e.x0(), m, cfg);
        std::ostringstream os;
        os << "m,target_variance,mean,variance,standard_error,variance_se,paths,xi_star,gamma0\n";
        os << fmt(run.m) << "," << fmt(run.target_variance) << "," << fmt(run.stats.mean) << "," << fmt(run.stats.variance) << ","
           << fmt(run.stats.standard_error) << "," << fmt(run.stats.variance_se) << "," << run.stats.paths << "," << fmt(run.xi)
           << "," << fmt(run.gamma0) << "\n";
        log << "E[X_T] = " << fmt(run.stats.mean) << " +- " << fmt(run.stats.standard_error) << " (target " << fmt(m) << ")\n";
        log << "Var(X_T) = " << fmt(run.stats.variance) << " +- " << fmt(run.stats.variance_se) << " (V(m) = " << fmt(run.target_variance)
            << ")\n";
        out.add("wealth.csv", os.str());
        if (!run.dumped.empty()) out.add("paths.csv", paths_csv(run, s.grid, s.quad ? "Y_" : "V_"));
    } else {
        throw ConfigError("unknown subcommand '" + name + "'");
    }
    out.commit();
    return out;
}

}  // namespace vmk
