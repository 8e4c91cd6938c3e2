#include "cheborbit/io.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace cheborbit::io {

namespace fs = std::filesystem;

RunConfig RunConfig::from_json(const json& j) {
    RunConfig c;
    c.model.name = j.at("model").at("name").get<std::string>();
    if (j.at("model").contains("params"))
        for (auto& [k, v] : j.at("model").at("params").items())
            c.model.params[k] = v.get<double>();
    c.formulation = j.value("formulation", c.formulation);
    const auto& mesh = j.at("mesh");
    c.domains = mesh.value("domains", c.domains);
    if (mesh.contains("proportions") && mesh.at("proportions").is_array())
        c.proportions = mesh.at("proportions").get<std::vector<double>>();
    if (mesh.contains("L") && mesh.at("L").is_number()) {
        c.L = mesh.at("L").get<double>();
        c.L_known = true;
    } else {
        c.L_known = false;
    }
    c.m = j.value("m", c.m);
    c.N = j.value("N", c.N);
    c.k0 = j.value("k0", c.k0);
    if (j.contains("K")) {
        if (j.at("K").is_number()) {
            c.K = j.at("K").get<double>();
        } else {
            c.K_auto = true;
            c.K_target = j.at("K").value("auto", 1e-16);
        }
    }
    c.stability = j.value("stability", c.stability);
    c.energy = j.value("energy", c.energy);
    if (j.contains("tolerances")) {
        const auto& t = j.at("tolerances");
        c.newton_tol = t.value("newton", c.newton_tol);
        c.newton_max_iter = t.value("newton_max_iter", c.newton_max_iter);
        c.flow_abs = t.value("flow_abs", c.flow_abs);
        c.flow_rel = t.value("flow_rel", c.flow_rel);
    }
    if (j.contains("seed")) {
        const auto& s = j.at("seed");
        c.seed.kind = s.value("kind", c.seed.kind);
        c.seed.symbols = s.value("symbols", c.seed.symbols);
        c.seed.libration = s.value("libration", c.seed.libration);
        c.seed.lambda_target = s.value("lambda_target", c.seed.lambda_target);
        c.seed.gap_accept = s.value("gap_accept", c.seed.gap_accept);
        c.seed.time_budget = s.value("time_budget", c.seed.time_budget);
        c.seed.warm_start = s.value("warm_start", c.seed.warm_start);
    }
    c.out_dir = j.value("out", c.out_dir);
    return c;
}

json RunConfig::to_json() const {
    json j;
    j["model"] = {{"name", model.name}, {"params", model.params}};
    j["formulation"] = formulation;
    j["mesh"]["domains"] = domains;
    if (!proportions.empty()) j["mesh"]["proportions"] = proportions;
    else j["mesh"]["proportions"] = "uniform";
    if (L_known) j["mesh"]["L"] = L;
    else j["mesh"]["L"] = "unknown";
    j["m"] = m;
    j["N"] = N;
    j["k0"] = k0;
    if (K_auto) j["K"] = {{"auto", K_target}};
    else j["K"] = K;
    j["stability"] = stability;
    j["energy"] = energy;
    j["tolerances"] = {{"newton", newton_tol},
                       {"newton_max_iter", newton_max_iter},
                       {"flow_abs", flow_abs},
                       {"flow_rel", flow_rel}};
    j["seed"] = {{"kind", seed.kind},          {"symbols", seed.symbols},
                 {"libration", seed.libration}, {"lambda_target", seed.lambda_target},
                 {"gap_accept", seed.gap_accept},
                 {"time_budget", seed.time_budget}, {"warm_start", seed.warm_start}};
    j["out"] = out_dir;
    return j;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config not found: " + path);
    json j;
    in >> j;
    return from_json(j);
}

ModelInstance make_model(const ModelSpec& spec) {
    ModelInstance out;
    auto param = [&spec](const std::string& key, double fallback) {
        auto it = spec.params.find(key);
        return it == spec.params.end() ? fallback : it->second;
    };
    if (spec.name == "lorenz") {
        out.field = lorenz(param("sigma", 10.0), param("rho", 27.0), param("beta", 8.0 / 3.0));
    } else if (spec.name == "crtbp") {
        auto m = crtbp(param("mu", 0.0123));
        out.field = std::move(m.field);
        out.lift = std::move(m.lift);
    } else if (spec.name == "crfbp") {
        auto m = crfbp(param("m1", kCrfbpM1), param("m2", kCrfbpM2), param("m3", kCrfbpM3),
                       param("beta", 0.0), param("alpha1", 0.0), param("alpha2", 0.0),
                       param("alpha3", 0.0));
        out.field = std::move(m.field);
        out.lift = std::move(m.lift);
        out.primaries = m.primaries;
    } else if (spec.name == "kepler") {
        auto m = kepler(param("M", 1.0));
        out.field = std::move(m.field);
        out.lift = std::move(m.lift);
    } else {
        throw std::invalid_argument("unknown model: " + spec.name);
    }
    return out;
}

Formulation parse_formulation(const std::string& name) {
    if (name == "autonomous_poincare") return Formulation::autonomous_poincare;
    if (name == "symmetric_fixed_L") return Formulation::symmetric_fixed_L;
    if (name == "symmetric_fixed_energy") return Formulation::symmetric_fixed_energy;
    if (name == "multiplier_poincare") return Formulation::multiplier_poincare;
    throw std::invalid_argument("unknown formulation: " + name);
}

std::string config_hash(const RunConfig& config) {
    const std::string s = config.to_json().dump();
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string timestamp_utc() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

namespace {

void write_atomic(const std::string& path, const std::string& data) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        out.write(data.data(), static_cast<std::streamsize>(data.size()));
        if (!out) throw std::runtime_error("write failed: " + tmp);
    }
    fs::rename(tmp, path);
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

void Artifact::save(const std::string& path) const {
    json j;
    j["version"] = 1;
    j["kind"] = kind;
    j["config"] = config.to_json();
    j["config_hash"] = cheborbit::io::config_hash(config);
    j["created"] = created.empty() ? timestamp_utc() : created;
    j["mesh"] = {{"proportions", mesh.proportions}, {"half_period", mesh.half_period}};
    j["M"] = M;
    j["m"] = m;
    j["counts"] = {{"alpha", orders.size()},
                   {"D", mesh.domains()},
                   {"M", M},
                   {"m", m}};
    j["lambda"] = lambda;
    j["K"] = K;
    j["k0"] = k0;
    j["stable"] = stable;
    j["half_period"] = half_period;
    j["beta"] = beta;
    j["residual_norm"] = residual_norm;
    j["defect"] = defect;
    j["anchor"] = anchor;
    if (connection) {
        j["connection"] = {{"theta_u", connection->theta_u}, {"sigma_u", connection->sigma_u},
                           {"theta_s", connection->theta_s}, {"sigma_s", connection->sigma_s},
                           {"T", connection->time_of_flight},
                           {"kind", static_cast<int>(connection->kind)},
                           {"residual", connection->residual},
                           {"point_u", connection->point_u},
                           {"point_s", connection->point_s}};
    }
    const std::string blob_name = fs::path(path).filename().string() + ".bin";
    j["blob"] = blob_name;
    j["blob_layout"] = "uint64 count, then float64 little-endian in (alpha, domain, component, "
                       "coefficient) row-major order";

    std::string blob;
    const std::uint64_t count = orders.size() * mesh.domains() * M * m;
    blob.append(reinterpret_cast<const char*>(&count), 8);
    for (const auto& grid : orders)
        for (std::size_t i = 0; i < mesh.domains(); ++i)
            for (std::size_t jj = 0; jj < M; ++jj)
                for (std::size_t k = 0; k < m; ++k) {
                    const double v = grid.piece(i, jj)[k];
                    blob.append(reinterpret_cast<const char*>(&v), 8);
                }
    write_atomic(fs::path(path).parent_path() / blob_name, blob);
    write_atomic(path, j.dump(2) + "\n");
}

Artifact Artifact::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("artifact not found: " + path);
    json j;
    in >> j;
    Artifact a;
    a.kind = j.at("kind").get<std::string>();
    a.config = RunConfig::from_json(j.at("config"));
    a.config_hash = j.at("config_hash").get<std::string>();
    if (a.config_hash != cheborbit::io::config_hash(a.config))
        throw std::runtime_error("artifact config hash mismatch: " + path);
    a.created = j.at("created").get<std::string>();
    a.mesh = Mesh(j.at("mesh").at("proportions").get<std::vector<double>>(),
                  j.at("mesh").at("half_period").get<double>());
    a.M = j.at("M").get<std::size_t>();
    a.m = j.at("m").get<std::size_t>();
    a.lambda = j.at("lambda").get<double>();
    a.K = j.at("K").get<double>();
    a.k0 = j.at("k0").get<std::size_t>();
    a.stable = j.at("stable").get<bool>();
    a.half_period = j.at("half_period").get<double>();
    a.beta = j.at("beta").get<double>();
    a.residual_norm = j.at("residual_norm").get<double>();
    a.defect = j.at("defect").get<double>();
    a.anchor = j.at("anchor").get<std::vector<double>>();
    if (j.contains("connection")) {
        ConnectionResult c;
        const auto& jc = j.at("connection");
        c.theta_u = jc.at("theta_u").get<double>();
        c.sigma_u = jc.at("sigma_u").get<double>();
        c.theta_s = jc.at("theta_s").get<double>();
        c.sigma_s = jc.at("sigma_s").get<double>();
        c.time_of_flight = jc.at("T").get<double>();
        c.kind = static_cast<ConnectionResult::Kind>(jc.at("kind").get<int>());
        c.residual = jc.at("residual").get<double>();
        c.point_u = jc.at("point_u").get<std::vector<double>>();
        c.point_s = jc.at("point_s").get<std::vector<double>>();
        a.connection = c;
    }
    const std::size_t n_alpha = j.at("counts").at("alpha").get<std::size_t>();
    const std::string blob_path =
        (fs::path(path).parent_path() / j.at("blob").get<std::string>()).string();
    std::ifstream blob(blob_path, std::ios::binary);
    if (!blob) throw std::runtime_error("artifact blob not found: " + blob_path);
    std::uint64_t count = 0;
    blob.read(reinterpret_cast<char*>(&count), 8);
    if (count != n_alpha * a.mesh.domains() * a.M * a.m)
        throw std::runtime_error("artifact blob size mismatch: " + blob_path);
    a.orders.reserve(n_alpha);
    for (std::size_t q = 0; q < n_alpha; ++q) {
        PeriodicPiecewise grid(a.mesh, a.M, a.m);
        for (std::size_t i = 0; i < a.mesh.domains(); ++i)
            for (std::size_t jj = 0; jj < a.M; ++jj)
                for (std::size_t k = 0; k < a.m; ++k) {
                    double v = 0.0;
                    blob.read(reinterpret_cast<char*>(&v), 8);
                    grid.piece(i, jj)[k] = v;
                }
        a.orders.push_back(std::move(grid));
    }
    if (!blob) throw std::runtime_error("artifact blob truncated: " + blob_path);
    return a;
}

ManifoldParam Artifact::to_manifold() const {
    if (orders.size() < 2)
        throw std::runtime_error("artifact does not hold a manifold (need orders >= 2)");
    ManifoldParam man;
    man.field = make_model(config.model).field;
    man.mesh = mesh;
    man.m = m;
    man.lambda = lambda;
    man.K = K;
    man.k0 = k0;
    man.stable = stable;
    man.orders = orders;
    return man;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::string data;
    for (std::size_t c = 0; c < header.size(); ++c)
        data += (c ? "," : "") + header[c];
    data += "\r\n";
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c)
            data += (c ? "," : "") + format_double(row[c]);
        data += "\r\n";
    }
    write_atomic(path, data);
}

namespace {

Mesh config_mesh(const RunConfig& config, double L) {
    if (config.proportions.empty()) return Mesh::uniform(config.domains, L);
    return Mesh(config.proportions, L);
}

FlowSettings config_flow(const RunConfig& config) {
    FlowSettings fs;
    fs.abs_tol = config.flow_abs;
    fs.rel_tol = config.flow_rel;
    return fs;
}

NewtonSettings config_newton(const RunConfig& config) {
    NewtonSettings ns;
    ns.tolerance = config.newton_tol;
    ns.max_iterations = config.newton_max_iter;
    return ns;
}

// CRFBP: planar Lyapunov loop seed from the linearization about an
// equilibrium, handed to the BVP at a slightly detuned half-period, then
// continued in L to the requested value.
OrbitSolution crfbp_orbit_by_continuation(const RunConfig& config, const ModelInstance& model) {
    CrfbpModel full{model.field, *model.lift, model.primaries};
    auto equilibria = crfbp_equilibria(full);
    if (equilibria.empty()) throw std::runtime_error("crfbp: no equilibria found");
    const std::size_t pick = static_cast<std::size_t>(config.seed.libration);
    if (pick >= equilibria.size())
        throw std::invalid_argument("crfbp: equilibrium index out of range");
    const double xe = equilibria[pick][0], ye = equilibria[pick][1];
    auto H = crfbp_potential_hessian(full, xe, ye);

    Eigen::Matrix4d A4;
    A4 << 0, 1, 0, 0, H.xx, 0, H.xy, 2, 0, 0, 0, 1, H.xy, -2, H.yy, 0;
    Eigen::EigenSolver<Eigen::Matrix4d> es(A4);
    long center = -1;
    double om = 0.0;
    for (long q = 0; q < 4; ++q) {
        const auto ev = es.eigenvalues()[q];
        if (std::abs(ev.real()) < 1e-9 && ev.imag() > 1e-9) {
            center = q;
            om = ev.imag();
        }
    }
    if (center < 0) throw std::runtime_error("crfbp: equilibrium has no planar center direction");
    Eigen::Vector4cd w = es.eigenvectors().col(center);
    const double pos_scale = std::hypot(std::abs(w[0]), std::abs(w[2]));
    w /= pos_scale;

    OrbitProblem problem;
    problem.field = model.field;
    problem.formulation = Formulation::multiplier_poincare;
    problem.m = config.m;
    problem.primaries = model.primaries;
    problem.newton = config_newton(config);

    const double L_target = config.L;
    const double L0 = M_PI / om;
    Flow flow(model.field, config_flow(config));

    // the unfolded system also admits a spurious constant branch (the
    // equilibrium with beta absorbing the phase row), so reject collapses
    auto genuine = [](const OrbitSolution& s) {
        double wiggle = 0.0;
        for (const auto& piece : s.orbit.pieces)
            for (std::size_t k = 1; k < piece.size(); ++k) wiggle += std::abs(piece[k]);
        return wiggle > 1e-3 && std::abs(s.beta) < 1e-6;
    };

    OrbitSolution sol;
    bool have = false;
    double L_here = 0.0;
    for (double detune : {1.01, 0.99, 1.03, 0.97}) {
        L_here = L0 * detune;
        for (double amp : {0.05, 0.1, 0.02, 0.2}) {
            Mesh mesh = config_mesh(config, L_here);
            PeriodicPiecewise seed(mesh, 9, config.m);
            auto nodes = cgl_nodes(config.m - 1);
            for (std::size_t i = 0; i < mesh.domains(); ++i) {
                const double start = mesh.domain_start(i);
                const double Li = mesh.domain_half_width(i);
                std::vector<std::vector<double>> samples(config.m);
                for (std::size_t q = 0; q < config.m; ++q) {
                    const double t = start + (nodes[q] + 1.0) * Li;
                    const std::complex<double> ph(std::cos(om * t), std::sin(om * t));
                    std::array<double, 4> planar{};
                    for (int cc = 0; cc < 4; ++cc)
                        planar[static_cast<std::size_t>(cc)] = (w[cc] * ph).real() * amp;
                    std::vector<double> u{xe + planar[0], planar[1], ye + planar[2],
                                          planar[3], 0.0, 0.0};
                    samples[q] = model.lift->lift(u);
                }
                for (std::size_t j = 0; j < 9; ++j) {
                    std::vector<double> vals(config.m);
                    for (std::size_t q = 0; q < config.m; ++q) vals[q] = samples[q][j];
                    seed.piece(i, j) = interpolate_cgl(vals);
                }
            }
            problem.mesh = mesh;
            try {
                sol = solve_orbit(problem, seed);
            } catch (const std::runtime_error&) {
                continue;
            }
            if (genuine(sol)) {
                have = true;
                break;
            }
        }
        if (have) break;
    }
    if (!have) throw std::runtime_error("crfbp: seeding collapsed to the equilibrium branch");

    // continuation in L toward the requested value
    double dL = 0.01 * L0 * (L_target > L_here ? 1.0 : -1.0);
    int failures = 0;
    while (std::abs(L_target - L_here) > 1e-13) {
        double L_next = L_here + dL;
        if ((dL > 0) == (L_next > L_target)) L_next = L_target;
        Mesh mesh = config_mesh(config, L_next);
        PeriodicPiecewise seed = sol.orbit;
        seed.mesh = mesh; // same coefficients, reinterpreted on the new mesh
        problem.mesh = mesh;
        try {
            OrbitSolution next = solve_orbit(problem, seed);
            if (!genuine(next)) throw std::runtime_error("collapsed");
            sol = std::move(next);
            L_here = L_next;
            dL *= 1.5;
            failures = 0;
        } catch (const std::runtime_error&) {
            dL *= 0.4;
            if (++failures > 25)
                throw std::runtime_error("crfbp: continuation in L stalled at L = " +
                                         std::to_string(L_here));
        }
    }
    return sol;
}

} // namespace

Artifact cmd_orbit(const RunConfig& config) {
    auto model = make_model(config.model);
    const Formulation formulation = parse_formulation(config.formulation);

    OrbitSolution sol;
    if (config.seed.kind == "warm_start") {
        Artifact prev = Artifact::load(config.seed.warm_start);
        OrbitProblem problem;
        problem.field = model.field;
        problem.formulation = formulation;
        problem.mesh = prev.orders.at(0).mesh;
        problem.m = config.m;
        problem.energy = config.energy;
        problem.primaries = model.primaries;
        problem.newton = config_newton(config);
        sol = solve_orbit(problem, prev.orders.at(0));
    } else if (config.model.name == "lorenz") {
        auto cr = lorenz_close_return(model.field, config.seed.symbols, config.seed.time_budget,
                                      config.seed.gap_accept);
        cr = refine_close_return(model.field, cr);
        cr = lorenz_section_anchor(model.field, cr);
        Mesh mesh = config_mesh(config, cr.period / 2.0);
        Flow flow(model.field, config_flow(config));
        PeriodicPiecewise seed = sample_trajectory(flow, cr.state, mesh, config.m);
        OrbitProblem problem;
        problem.field = model.field;
        problem.formulation = formulation;
        problem.mesh = mesh;
        problem.m = config.m;
        problem.newton = config_newton(config);
        sol = solve_orbit(problem, seed);
    } else if (config.model.name == "crtbp") {
        const double mu = model.field.params.at("mu");
        SymmetricLoop loop =
            formulation == Formulation::symmetric_fixed_energy
                ? crtbp_loop_at_energy(mu, config.seed.libration, config.energy)
                : crtbp_loop_at_half_period(mu, config.seed.libration, config.L);
        Mesh mesh = config_mesh(config, loop.half_period);
        Flow flow(model.field, config_flow(config));
        std::vector<double> u0{loop.x0, 0.0, 0.0, loop.vy0};
        auto lifted = model.lift->lift(u0);
        PeriodicPiecewise seed = sample_trajectory(flow, lifted, mesh, config.m);
        OrbitProblem problem;
        problem.field = model.field;
        problem.formulation = formulation;
        problem.mesh = mesh;
        problem.m = config.m;
        problem.energy = config.energy;
        problem.newton = config_newton(config);
        sol = solve_orbit(problem, seed);
    } else if (config.model.name == "crfbp") {
        sol = crfbp_orbit_by_continuation(config, model);
    } else {
        throw std::invalid_argument("cmd_orbit: no seeding path for model " + config.model.name);
    }

    Artifact a;
    a.kind = "orbit";
    a.config = config;
    a.created = timestamp_utc();
    a.mesh = sol.orbit.mesh;
    a.M = sol.orbit.components;
    a.m = config.m;
    a.orders = {sol.orbit};
    a.half_period = sol.half_period;
    a.beta = sol.beta;
    a.residual_norm = sol.report.residual_norm;
    a.anchor = sol.anchor;
    a.defect = validate_orbit(sol.orbit, model.field, 100, config_flow(config));
    return a;
}

Artifact cmd_bundle(const RunConfig& config, const Artifact& orbit) {
    auto model = make_model(config.model);
    auto bundle = solve_bundle(orbit.orders.at(0), model.field, config.stability == "stable",
                               config.K, config.k0, config_newton(config));
    Artifact a;
    a.kind = "bundle";
    a.config = config;
    a.created = timestamp_utc();
    a.mesh = orbit.mesh;
    a.M = orbit.M;
    a.m = orbit.m;
    a.orders = {orbit.orders.at(0), bundle.v};
    a.lambda = bundle.lambda;
    a.K = bundle.K;
    a.k0 = bundle.k0;
    a.stable = bundle.stable;
    a.half_period = orbit.half_period;
    a.residual_norm = bundle.report.residual_norm;
    a.anchor = orbit.anchor;
    return a;
}

Artifact cmd_manifold(const RunConfig& config, const Artifact& orbit) {
    auto model = make_model(config.model);
    const bool stable = config.stability == "stable";
    ManifoldParam man;
    double K = config.K;
    if (config.K_auto) {
        K = choose_scale(orbit.orders.at(0), model.field, stable, config.k0, config.N,
                         config.K_target, man, config_newton(config));
    } else {
        auto bundle = solve_bundle(orbit.orders.at(0), model.field, stable, K, config.k0,
                                   config_newton(config));
        man = build_manifold(orbit.orders.at(0), bundle, model.field, config.N);
    }

    Artifact a;
    a.kind = "manifold";
    a.config = config;
    a.created = timestamp_utc();
    a.mesh = man.mesh;
    a.M = man.field.dim;
    a.m = man.m;
    a.orders = man.orders;
    a.lambda = man.lambda;
    a.K = K;
    a.k0 = man.k0;
    a.stable = man.stable;
    a.half_period = orbit.half_period;
    a.anchor = orbit.anchor;

    auto profile = decay_profile(man);
    std::vector<std::vector<double>> rows;
    for (std::size_t al = 0; al < profile.size(); ++al)
        for (std::size_t i = 0; i < profile[al].size(); ++i)
            rows.push_back({static_cast<double>(al), static_cast<double>(i + 1), profile[al][i]});
    fs::create_directories(config.out_dir);
    write_csv(fs::path(config.out_dir) / "decay_profile.csv", {"alpha", "domain", "tail_norm"},
              rows);
    return a;
}

void cmd_export(const Artifact& manifold, std::size_t n_t, std::size_t n_sigma,
                const std::string& path) {
    ManifoldParam man = manifold.to_manifold();
    const double tau = man.period();
    std::vector<std::string> header{"t", "sigma", "domain"};
    for (std::size_t j = 0; j < man.field.dim; ++j) header.push_back("x" + std::to_string(j + 1));
    std::vector<std::vector<double>> rows;
    rows.reserve(n_t * n_sigma);
    for (std::size_t it = 0; it < n_t; ++it) {
        const double t = tau * static_cast<double>(it) / static_cast<double>(n_t);
        const auto [dom, local] = man.mesh.locate(t);
        (void)local;
        for (std::size_t is = 0; is < n_sigma; ++is) {
            const double sg =
                n_sigma == 1 ? 0.0
                             : -1.0 + 2.0 * static_cast<double>(is) / static_cast<double>(n_sigma - 1);
            auto x = man.eval_P(t, sg);
            std::vector<double> row{t, sg, static_cast<double>(dom + 1)};
            row.insert(row.end(), x.begin(), x.end());
            rows.push_back(std::move(row));
        }
    }
    write_csv(path, header, rows);

    json side;
    side["model"] = manifold.config.model.name;
    side["params"] = manifold.config.model.params;
    side["lambda"] = man.lambda;
    side["stable"] = man.stable;
    side["mesh"] = {{"proportions", man.mesh.proportions}, {"half_period", man.mesh.half_period}};
    side["grid"] = {{"n_t", n_t}, {"n_sigma", n_sigma}};
    side["taylor_order"] = man.taylor_order();
    write_atomic(path + ".json", side.dump(2) + "\n");
}

Artifact cmd_connect(const RunConfig& config, const Artifact& unstable_manifold,
                     const Artifact& stable_manifold, const ConnectOptions& opts) {
    // connections only make sense on one energy level for CRTBP charts
    if (config.model.name == "crtbp") {
        auto model = make_model(config.model);
        const double mu = model.field.params.at("mu");
        auto eu = crtbp_energy(unstable_manifold.orders.at(0).eval_state(0.0), mu);
        auto es = crtbp_energy(stable_manifold.orders.at(0).eval_state(0.0), mu);
        if (std::abs(eu - es) > 1e-6)
            throw std::invalid_argument(
                "cmd_connect: manifolds sit on different Jacobi-energy levels (" +
                std::to_string(eu) + " vs " + std::to_string(es) + "): no connection can exist");
    }
    ManifoldParam unstable = unstable_manifold.to_manifold();
    ManifoldParam stable = stable_manifold.to_manifold();

    ConnectionResult result;
    if (opts.kind == "short") {
        result = short_connection(stable, unstable, opts.sigma_u);
    } else {
        FlowSettings fsettings;
        fsettings.abs_tol = config.flow_abs;
        fsettings.rel_tol = config.flow_rel;
        result = bvp_connection(unstable, stable, opts.sigma_u, opts.max_time, fsettings, 40,
                                opts.tol);
    }

    Artifact a;
    a.kind = "connection";
    a.config = config;
    a.created = timestamp_utc();
    a.mesh = unstable_manifold.mesh;
    a.M = unstable_manifold.M;
    a.m = unstable_manifold.m;
    a.lambda = unstable_manifold.lambda;
    a.stable = false;
    a.half_period = unstable_manifold.half_period;
    a.connection = result;

    // assembled trajectory: conjugacy-extended unstable tail, integrated
    // middle (bvp only), conjugacy-extended stable tail
    std::vector<std::vector<double>> rows;
    auto push_path = [&rows](const ConjugacyPath& p, double t_offset) {
        for (std::size_t q = 0; q < p.phase_path.size(); ++q) {
            const double t = t_offset + p.time * static_cast<double>(q) /
                                            static_cast<double>(p.phase_path.size() - 1);
            std::vector<double> row{t};
            row.insert(row.end(), p.phase_path[q].begin(), p.phase_path[q].end());
            rows.push_back(std::move(row));
        }
    };
    const double sigma_tail = 1e-15;
    auto tail_u = extend_by_conjugacy(unstable, result.theta_u,
                                      std::copysign(sigma_tail, result.sigma_u), result.sigma_u);
    push_path(tail_u, -std::abs(tail_u.time));
    if (result.time_of_flight > 0.0) {
        FlowSettings fsettings;
        fsettings.abs_tol = config.flow_abs;
        fsettings.rel_tol = config.flow_rel;
        Flow flow(unstable.field, fsettings);
        std::vector<double> state = result.point_u;
        const std::size_t nmid = 200;
        for (std::size_t q = 0; q <= nmid; ++q) {
            std::vector<double> row{result.time_of_flight * static_cast<double>(q) /
                                    static_cast<double>(nmid)};
            row.insert(row.end(), state.begin(), state.end());
            rows.push_back(std::move(row));
            if (q < nmid)
                state = flow(state, result.time_of_flight / static_cast<double>(nmid));
        }
    }
    if (std::abs(result.sigma_s) > sigma_tail) {
        auto tail_s = extend_by_conjugacy(stable, result.theta_s, result.sigma_s,
                                          std::copysign(sigma_tail, result.sigma_s));
        push_path(tail_s, result.time_of_flight);
    }
    fs::create_directories(config.out_dir);
    std::vector<std::string> header{"t"};
    for (std::size_t j = 0; j < a.M; ++j) header.push_back("x" + std::to_string(j + 1));
    write_csv(fs::path(config.out_dir) / "connection_trajectory.csv", header, rows);
    return a;
}

bool ValidationReport::all_passed() const {
    for (bool p : passed)
        if (!p) return false;
    return true;
}

ValidationReport cmd_validate(const Artifact& artifact, const std::vector<double>& t0_values,
                              std::size_t n_samples, double err_tolerance) {
    ValidationReport report;
    auto model = make_model(artifact.config.model);
    FlowSettings fsettings;
    fsettings.abs_tol = artifact.config.flow_abs;
    fsettings.rel_tol = artifact.config.flow_rel;

    if (artifact.orders.size() >= 2) {
        ManifoldParam man = artifact.to_manifold();
        for (double t0 : t0_values) {
            auto err = conjugacy_error(man, t0, n_samples, fsettings);
            report.checks.emplace_back("conjugacy_err_max(t0=" + std::to_string(t0) + ")",
                                       err.max);
            report.passed.push_back(err.max <= err_tolerance);
            report.checks.emplace_back("conjugacy_err_mean(t0=" + std::to_string(t0) + ")",
                                       err.mean);
            report.passed.push_back(err.mean <= err_tolerance);
        }
    }
    const auto& orbit = artifact.orders.at(0);
    const double defect = validate_orbit(orbit, model.field, 64, fsettings);
    report.checks.emplace_back("orbit_defect", defect);
    report.passed.push_back(defect <= 1e-6);

    if (model.lift) {
        // lifted-coordinate consistency along the orbit
        double worst = 0.0;
        const std::size_t d = model.lift->dim_orig;
        for (std::size_t q = 0; q < 64; ++q) {
            auto state = orbit.eval_state(orbit.mesh.period() * static_cast<double>(q) / 64.0);
            std::vector<double> base(state.begin(), state.begin() + static_cast<long>(d));
            auto lifted = model.lift->lift(base);
            for (std::size_t j = d; j < lifted.size(); ++j)
                worst = std::max(worst, std::abs(lifted[j] - state[j]));
        }
        report.checks.emplace_back("lift_consistency", worst);
        report.passed.push_back(worst <= 1e-8);
    }
    if (artifact.config.model.name == "crtbp") {
        const double mu = model.field.params.at("mu");
        double emin = 1e300, emax = -1e300;
        for (std::size_t q = 0; q < 200; ++q) {
            auto state = orbit.eval_state(orbit.mesh.period() * static_cast<double>(q) / 200.0);
            const double e = crtbp_energy(state, mu);
            emin = std::min(emin, e);
            emax = std::max(emax, e);
        }
        report.checks.emplace_back("energy_spread", emax - emin);
        report.passed.push_back(emax - emin <= 1e-8);
    }
    return report;
}

} // namespace cheborbit::io
