#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>

#include "cheborbit/io.hpp"

using namespace cheborbit;
namespace fs = std::filesystem;

namespace {

io::RunConfig small_lorenz_config(const std::string& out) {
    io::RunConfig c;
    c.model.name = "lorenz";
    c.model.params = {{"sigma", 10.0}, {"rho", 28.0}, {"beta", 8.0 / 3.0}};
    c.formulation = "autonomous_poincare";
    c.domains = 6;
    c.m = 24;
    c.N = 5;
    c.K = 10.0;
    c.k0 = 10;
    c.seed.kind = "lorenz_symbols";
    c.seed.symbols = "AB";
    c.seed.time_budget = 30000.0;
    c.out_dir = out;
    return c;
}

} // namespace

TEST_CASE("config json round trip and hash stability") {
    auto c = small_lorenz_config("/tmp/cheborbit_test");
    auto j = c.to_json();
    auto c2 = io::RunConfig::from_json(j);
    CHECK(io::config_hash(c) == io::config_hash(c2));
    CHECK(c2.model.params.at("rho") == 28.0);
    CHECK(c2.seed.symbols == "AB");
    c2.m = 21;
    CHECK(io::config_hash(c) != io::config_hash(c2));
}

TEST_CASE("config validation: bad mesh proportions rejected before solving") {
    auto c = small_lorenz_config("/tmp/cheborbit_test");
    c.proportions = {0.5, 0.6}; // sums to 1.1
    CHECK_THROWS_AS(io::cmd_orbit(c), std::invalid_argument);
}

TEST_CASE("orbit artifact: solve, save, load bit-exactly, warm start") {
    const std::string dir = "/tmp/cheborbit_test_artifacts";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto c = small_lorenz_config(dir);

    auto artifact = io::cmd_orbit(c);
    CHECK(artifact.half_period == doctest::Approx(0.779326).epsilon(1e-5));
    CHECK(artifact.defect < 1e-7);
    const std::string path = dir + "/orbit.json";
    artifact.save(path);

    auto loaded = io::Artifact::load(path);
    CHECK(loaded.kind == "orbit");
    CHECK(loaded.half_period == artifact.half_period); // bit exact
    REQUIRE(loaded.orders.size() == 1);
    for (std::size_t i = 0; i < artifact.mesh.domains(); ++i)
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t k = 0; k < artifact.m; ++k)
                CHECK(loaded.orders[0].piece(i, j)[k] == artifact.orders[0].piece(i, j)[k]);

    // warm start converges immediately
    auto cw = c;
    cw.seed.kind = "warm_start";
    cw.seed.warm_start = path;
    auto again = io::cmd_orbit(cw);
    CHECK(again.residual_norm <= 1e-11);
    CHECK(again.half_period == doctest::Approx(artifact.half_period).epsilon(1e-12));

    // a truncated blob is caught
    fs::resize_file(dir + "/orbit.json.bin", fs::file_size(dir + "/orbit.json.bin") - 8);
    CHECK_THROWS(io::Artifact::load(path));
}

TEST_CASE("manifold artifact + export + validate") {
    const std::string dir = "/tmp/cheborbit_test_manifold";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto c = small_lorenz_config(dir);
    c.stability = "stable";

    auto orbit = io::cmd_orbit(c);
    orbit.save(dir + "/orbit.json");
    auto man = io::cmd_manifold(c, orbit);
    CHECK(man.orders.size() == 6);
    CHECK(fs::exists(dir + "/decay_profile.csv"));
    man.save(dir + "/manifold.json");

    auto loaded = io::Artifact::load(dir + "/manifold.json");
    auto m2 = loaded.to_manifold();
    // sigma = 0 column of the export equals the orbit
    io::cmd_export(loaded, 16, 5, dir + "/grid.csv");
    std::ifstream in(dir + "/grid.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header.substr(0, 16) == "t,sigma,domain,x");
    std::size_t rows = 0;
    std::string line;
    std::vector<std::array<double, 5>> sigma0_rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++rows;
        std::array<double, 6> vals{};
        std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf", &vals[0], &vals[1], &vals[2],
                    &vals[3], &vals[4], &vals[5]);
        if (vals[1] == 0.0)
            sigma0_rows.push_back({vals[0], vals[2], vals[3], vals[4], vals[5]});
    }
    CHECK(rows == 16 * 5);
    CHECK(sigma0_rows.size() == 16);
    for (const auto& r : sigma0_rows) {
        auto g = orbit.orders[0].eval_state(r[0]);
        CHECK(r[2] == doctest::Approx(g[0]).epsilon(1e-12));
        CHECK(r[3] == doctest::Approx(g[1]).epsilon(1e-12));
    }

    auto report = io::cmd_validate(loaded, {0.0, 1e-3}, 40, 1e-4);
    CHECK(report.all_passed());

    // a perturbed artifact fails validation with margin
    auto bad = loaded;
    bad.orders[1].piece(2, 1)[0] += 1e-2;
    auto bad_report = io::cmd_validate(bad, {1e-3}, 40, 1e-4);
    CHECK_FALSE(bad_report.all_passed());
}

TEST_CASE("csv writer: rfc-4180 shape and 17 significant digits") {
    const std::string path = "/tmp/cheborbit_csv_test.csv";
    io::write_csv(path, {"a", "b"}, {{1.0 / 3.0, 2.0}, {-1e-30, 3.5}});
    std::ifstream in(path, std::ios::binary);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(data.find("a,b\r\n") == 0);
    CHECK(data.find("0.33333333333333331") != std::string::npos);
    double back = 0.0;
    std::sscanf(data.substr(data.find("\r\n") + 2).c_str(), "%lf", &back);
    CHECK(back == 1.0 / 3.0);
}

#ifdef CLI_PATH
TEST_CASE("cli: end-to-end orbit subcommand") {
    const std::string dir = "/tmp/cheborbit_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto c = small_lorenz_config(dir);
    {
        std::ofstream out(dir + "/config.json");
        out << c.to_json().dump(2);
    }
    const std::string cmd = std::string(CLI_PATH) + " --config " + dir +
                            "/config.json --out " + dir + " orbit > " + dir + "/stdout.txt";
    CHECK(std::system(cmd.c_str()) == 0);
    CHECK(fs::exists(dir + "/orbit.json"));
    std::ifstream out(dir + "/stdout.txt");
    std::string line;
    std::getline(out, line);
    CHECK(line.find("orbit: L = 0.779") != std::string::npos);

    // config errors exit with code 2
    {
        std::ofstream bad(dir + "/bad.json");
        bad << "{\"model\": {\"name\": \"nope\"}, \"mesh\": {\"domains\": 4}}";
    }
    const std::string badcmd = std::string(CLI_PATH) + " --config " + dir +
                               "/bad.json orbit 2> /dev/null";
    CHECK(WEXITSTATUS(std::system(badcmd.c_str())) == 2);
}
#endif
