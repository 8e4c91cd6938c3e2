#pragma once

#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>

#include "cheborbit/connections.hpp"
#include "cheborbit/orbit.hpp"

namespace cheborbit::io {

using nlohmann::json;

struct ModelSpec {
    std::string name; // lorenz | crtbp | crfbp | kepler
    std::map<std::string, double> params;
};

struct SeedSpec {
    std::string kind;         // lorenz_symbols | libration | warm_start
    std::string symbols;      // lorenz_symbols
    int libration = 1;        // collinear index (crtbp) or equilibrium index (crfbp)
    double lambda_target = 0.0538; // crfbp family selector when L is free
    double gap_accept = 5e-2; // close-return acceptance
    double time_budget = 20000.0;
    std::string warm_start;   // artifact path
};

/// One solve's complete configuration.  Mirrors the JSON config schema; the
/// squareness of the row/unknown ledger is validated before any solve by
/// constructing the residual system.
struct RunConfig {
    ModelSpec model;
    std::string formulation = "autonomous_poincare";
    std::size_t domains = 10;
    std::vector<double> proportions; // empty = uniform
    double L = 1.0;
    bool L_known = false; // "unknown": L solved (or taken from the seed)
    std::size_t m = 50;
    std::size_t N = 10;
    std::size_t k0 = 10;
    double K = 1.0;
    bool K_auto = false;
    double K_target = 1e-16;
    std::string stability = "stable";
    double energy = 0.0;
    double newton_tol = 1e-11;
    std::size_t newton_max_iter = 30;
    double flow_abs = 1e-12;
    double flow_rel = 1e-10;
    SeedSpec seed;
    std::string out_dir = ".";

    static RunConfig from_json(const json& j);
    json to_json() const;
    static RunConfig load(const std::string& path);
};

/// Model instantiation from a config spec.
struct ModelInstance {
    PolyField field;
    std::optional<LiftMap> lift;
    std::array<std::array<double, 3>, 3> primaries{};
};
ModelInstance make_model(const ModelSpec& spec);

Formulation parse_formulation(const std::string& name);

/// Versioned artifact container: JSON metadata plus a size-prefixed binary
/// blob of little-endian doubles laid out (alpha, domain, component,
/// coefficient) row-major.  Round trips are bit exact.
struct Artifact {
    std::string kind; // orbit | bundle | manifold | connection
    RunConfig config;
    std::string config_hash;
    std::string created;
    Mesh mesh{{1.0}, 1.0};
    std::size_t M = 0, m = 0;
    std::vector<PeriodicPiecewise> orders; // 1 for orbit, 2.. for manifold
    double lambda = 0.0, K = 1.0;
    std::size_t k0 = 10;
    bool stable = true;
    double half_period = 0.0, beta = 0.0;
    double residual_norm = 0.0, defect = 0.0;
    std::vector<double> anchor;
    std::optional<ConnectionResult> connection;

    void save(const std::string& path) const; // path.json + path.bin
    static Artifact load(const std::string& path);

    ManifoldParam to_manifold() const;
};

std::string config_hash(const RunConfig& config);
std::string timestamp_utc();

/// RFC-4180 CSV with a header row; numbers at 17 significant digits.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

// ---- command drivers (the CLI is a thin wrapper over these) ----

/// seed + solve + validate an orbit; saves <out>/orbit.json|bin.
Artifact cmd_orbit(const RunConfig& config);
/// solve the Floquet bundle on top of an orbit artifact.
Artifact cmd_bundle(const RunConfig& config, const Artifact& orbit);
/// bundle + homological recursion to order N; writes the decay-profile CSV.
Artifact cmd_manifold(const RunConfig& config, const Artifact& orbit);
/// evaluate P on an n_t x n_sigma grid; writes CSV + JSON sidecar.
void cmd_export(const Artifact& manifold, std::size_t n_t, std::size_t n_sigma,
                const std::string& path);
struct ConnectOptions {
    std::string kind = "bvp"; // short | bvp
    double sigma_u = 1.0;
    double max_time = 10.0;
    double tol = 1e-8;
};
Artifact cmd_connect(const RunConfig& config, const Artifact& unstable_manifold,
                     const Artifact& stable_manifold, const ConnectOptions& opts);
struct ValidationReport {
    std::vector<std::pair<std::string, double>> checks;
    std::vector<bool> passed;
    bool all_passed() const;
};
ValidationReport cmd_validate(const Artifact& artifact, const std::vector<double>& t0_values,
                              std::size_t n_samples, double err_tolerance);

} // namespace cheborbit::io
