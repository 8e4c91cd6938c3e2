#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <nlohmann/json.hpp>

#include "cheborbit/io.hpp"

namespace fs = std::filesystem;
using namespace cheborbit;

namespace {

int log_level = 1; // 0 quiet, 1 info, 2 debug

void info(const std::string& msg) {
    if (log_level >= 1) std::cout << msg << "\n";
}

io::RunConfig load_config(const std::string& path, const std::string& out_dir) {
    auto config = io::RunConfig::load(path);
    if (!out_dir.empty()) config.out_dir = out_dir;
    return config;
}

std::string artifact_path(const io::RunConfig& config, const std::string& name) {
    fs::create_directories(config.out_dir);
    return (fs::path(config.out_dir) / (name + ".json")).string();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Chebyshev-Taylor parameterization of stable/unstable manifolds of periodic "
                 "orbits: orbits, Floquet bundles, manifolds and connecting orbits"};
    app.require_subcommand(1);

    std::string config_path, out_dir, log_name = "info";
    int threads = 1;
    long rng_seed = 0;
    app.add_option("--config", config_path, "JSON run configuration")->required();
    app.add_option("--out", out_dir, "output directory (overrides config)");
    app.add_option("--threads", threads, "solver threads (dense kernels are single-threaded)");
    app.add_option("--seed", rng_seed, "RNG seed for sampling-based checks");
    app.add_option("--log-level", log_name, "quiet | info | debug");

    auto* c_orbit = app.add_subcommand("orbit", "seed and solve a periodic orbit");
    auto* c_bundle = app.add_subcommand("bundle", "solve the Floquet normal bundle");
    std::string orbit_artifact;
    c_bundle->add_option("--orbit", orbit_artifact, "orbit artifact path")->required();
    auto* c_manifold = app.add_subcommand("manifold", "run the Taylor recursion to order N");
    c_manifold->add_option("--orbit", orbit_artifact, "orbit artifact path")->required();
    auto* c_export = app.add_subcommand("export", "sample a manifold onto a plot-ready grid");
    std::string manifold_artifact, export_path = "manifold_grid.csv";
    std::size_t n_t = 256, n_sigma = 33;
    c_export->add_option("--manifold", manifold_artifact, "manifold artifact path")->required();
    c_export->add_option("--grid-t", n_t, "time samples");
    c_export->add_option("--grid-sigma", n_sigma, "sigma samples");
    c_export->add_option("--output", export_path, "CSV output path");
    auto* c_connect = app.add_subcommand("connect", "find a connecting orbit between charts");
    std::string unstable_path, stable_path, connect_kind = "bvp";
    double sigma_u = 1.0, max_time = 10.0, connect_tol = 1e-8;
    c_connect->add_option("--unstable", unstable_path, "unstable manifold artifact")->required();
    c_connect->add_option("--stable", stable_path, "stable manifold artifact")->required();
    c_connect->add_option("--kind", connect_kind, "short | bvp");
    c_connect->add_option("--sigma-u", sigma_u, "unstable boundary circle (+1 or -1)");
    c_connect->add_option("--max-time", max_time, "seeding integration horizon");
    c_connect->add_option("--tol", connect_tol, "Newton residual tolerance");
    auto* c_validate = app.add_subcommand("validate", "a-posteriori checks on an artifact");
    std::string validate_path;
    std::vector<double> t0_values{1e-5, 1.0};
    std::size_t n_samples = 200;
    double err_tol = 1e-5;
    c_validate->add_option("--artifact", validate_path, "artifact to check")->required();
    c_validate->add_option("--t0", t0_values, "conjugacy test times");
    c_validate->add_option("--samples", n_samples, "starting points per test");
    c_validate->add_option("--err-tol", err_tol, "pass/fail threshold for Err(t0)");

    CLI11_PARSE(app, argc, argv);
    if (log_name == "quiet") log_level = 0;
    if (log_name == "debug") log_level = 2;

    io::RunConfig config;
    try {
        config = load_config(config_path, out_dir);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (*c_orbit) {
            auto artifact = io::cmd_orbit(config);
            const auto path = artifact_path(config, "orbit");
            artifact.save(path);
            std::printf("orbit: L = %.10g, residual = %.3e, defect = %.3e, beta = %.3e\n",
                        artifact.half_period, artifact.residual_norm, artifact.defect,
                        artifact.beta);
            info("saved " + path);
        } else if (*c_bundle) {
            auto orbit = io::Artifact::load(orbit_artifact);
            auto artifact = io::cmd_bundle(config, orbit);
            const auto path = artifact_path(config, "bundle");
            artifact.save(path);
            std::printf("bundle: lambda = %.10g (%s), residual = %.3e\n", artifact.lambda,
                        artifact.stable ? "stable" : "unstable", artifact.residual_norm);
            info("saved " + path);
        } else if (*c_manifold) {
            auto orbit = io::Artifact::load(orbit_artifact);
            auto artifact = io::cmd_manifold(config, orbit);
            const auto path = artifact_path(config, "manifold");
            artifact.save(path);
            const double tail = tail_norm_max(artifact.orders.back());
            std::printf("manifold: N = %zu, lambda = %.10g, K = %.6g, |a_N| = %.3e\n",
                        artifact.orders.size() - 1, artifact.lambda, artifact.K, tail);
            info("saved " + path);
        } else if (*c_export) {
            auto man = io::Artifact::load(manifold_artifact);
            io::cmd_export(man, n_t, n_sigma, export_path);
            std::printf("export: %zu x %zu grid -> %s\n", n_t, n_sigma, export_path.c_str());
        } else if (*c_connect) {
            auto unstable = io::Artifact::load(unstable_path);
            auto stable = io::Artifact::load(stable_path);
            io::ConnectOptions opts;
            opts.kind = connect_kind;
            opts.sigma_u = sigma_u;
            opts.max_time = max_time;
            opts.tol = connect_tol;
            auto artifact = io::cmd_connect(config, unstable, stable, opts);
            const auto path = artifact_path(config, "connection");
            artifact.save(path);
            const auto& c = *artifact.connection;
            std::printf("connection: theta_u = %.8g, theta_s = %.8g, sigma_s = %.8g, T = %.8g, "
                        "residual = %.3e\n",
                        c.theta_u, c.theta_s, c.sigma_s, c.time_of_flight, c.residual);
            info("saved " + path);
        } else if (*c_validate) {
            auto artifact = io::Artifact::load(validate_path);
            auto report = io::cmd_validate(artifact, t0_values, n_samples, err_tol);
            for (std::size_t q = 0; q < report.checks.size(); ++q)
                std::printf("%-38s %12.5e  %s\n", report.checks[q].first.c_str(),
                            report.checks[q].second, report.passed[q] ? "pass" : "FAIL");
            if (!report.all_passed()) return 4;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
