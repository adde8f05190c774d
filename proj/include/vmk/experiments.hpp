#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "vmk/affine.hpp"
#include "vmk/markowitz.hpp"
#include "vmk/montecarlo.hpp"
#include "vmk/quadratic.hpp"

namespace vmk {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Two-asset Stein-Stein shorthand: loadings beta = [[1,0],[rho,sqrt(1-rho^2)]],
// Theta = beta^{-1} diag(theta), C_k = c_k beta_k, K = diag of fractional kernels.
struct SteinStein {
    double H1 = 0.08;
    double H2 = 0.4;
    double rho = 0.0;
    double eta = 1.0;
    double c1 = -0.7;
    double c2 = -0.7;
    double theta1 = 0.5;
    double theta2 = 0.5;
    double Y1 = 1.0;
    double Y2 = 1.0;
    double r = 0.0;
};

QuadraticParams stein_stein_params(const SteinStein& s);

Kernel parse_kernel(const nlohmann::json& spec, int N);
QuadraticParams parse_quadratic(const nlohmann::json& q);
AffineModel parse_affine(const nlohmann::json& a);

struct RunOptions {
    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<long> paths;
    std::optional<int> grid_n;
};

class Experiment {
public:
    static Experiment load(const std::string& path);
    static Experiment from_json(nlohmann::json cfg);

    const nlohmann::json& config() const { return cfg_; }
    bool is_quadratic() const { return cfg_.contains("quadratic"); }

    TimeGrid grid(std::optional<int> n_override = std::nullopt) const;
    QuadraticModel quadratic_model() const;
    AffineModel affine_model() const;
    double x0() const;
    std::vector<double> targets() const;
    McConfig mc(const RunOptions& opt) const;

private:
    nlohmann::json cfg_;
};

// Files are staged in memory and written only if the whole run succeeds.
class OutputSet {
public:
    explicit OutputSet(std::string dir) : dir_(std::move(dir)) {}
    void add(const std::string& name, std::string content) { files_[name] = std::move(content); }
    void commit() const;
    const std::map<std::string, std::string>& files() const { return files_; }

private:
    std::string dir_;
    std::map<std::string, std::string> files_;
};

// Runs one subcommand; returns the staged outputs (already committed) and writes a summary to log.
OutputSet run_subcommand(const std::string& name, const RunOptions& opt, std::ostream& log);

std::string strategy_csv(const StrategyProfile& p);
std::string frontier_csv(const std::vector<FrontierPoint>& pts);

}  // namespace vmk
