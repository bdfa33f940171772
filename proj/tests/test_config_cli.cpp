#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "jobswitch/commands.hpp"
#include "jobswitch/config.hpp"
#include "jobswitch/errors.hpp"
#include "jobswitch/manifest.hpp"

using namespace jobswitch;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string error_of(const json& j) {
    try {
        config_from_json(j);
    } catch (const ValidationError& e) {
        return e.what();
    }
    return "";
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("jobswitch-test-" + name);
    fs::remove_all(p);
    return p;
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    return json::parse(in);
}

json full_model() {
    return {{"beta", 0.02}, {"r", 0.01},  {"mu", 0.07},    {"sigma", 0.2},  {"eps0", 0.3}, {"eps1", 1.0},
            {"L0", 0.5},    {"L1", 1.0}, {"zeta0", 3.0}, {"zeta1", 1.0}, {"T", 30.0},   {"gamma", 3.0}};
}

}  // namespace

TEST_CASE("config diagnostics name the offending field") {
    CHECK(error_of(json::object()).empty());
    CHECK(error_of({{"bogus", 1}}).find("unknown field 'bogus'") != std::string::npos);
    CHECK(error_of({{"beta", 0.02}}).find("missing field") != std::string::npos);
    auto j = full_model();
    j.erase("sigma");
    CHECK(error_of(j).find("missing field 'sigma'") != std::string::npos);
    j = full_model();
    j["gamma"] = "three";
    CHECK(error_of(j).find("'gamma' must be a number") != std::string::npos);
    CHECK(error_of({{"pde", {{"nx", 2.5}}}}).find("integer") != std::string::npos);
    CHECK(error_of({{"simulate", {{"boundaries", "mc"}}}}).find("simulate.boundaries") != std::string::npos);
    CHECK(error_of({{"pde", {{"method", "sor2"}}}}).find("unknown method") != std::string::npos);
}

TEST_CASE("T_death defaults to T + 20 and explicit values are kept") {
    auto j = full_model();
    j["T"] = 25.0;
    j["zeta0"] = 2.0;
    auto c = config_from_json(j);
    CHECK(c.model.T_death == 45.0);
    CHECK(c.grid.T == 25.0);
    j["T_death"] = 70.0;
    CHECK(config_from_json(j).model.T_death == 70.0);
}

TEST_CASE("config round trip through JSON") {
    auto c = default_config();
    c.grid.nx = 801;
    c.sim.n_paths = 1234;
    c.sim.seed = 99;
    c.pde.method = obstacle::Method::penalty;
    c.sim_boundaries = "pde";
    const auto back = config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
}

TEST_CASE("grid flag") {
    auto c = default_config();
    apply_grid_flag(c, "401,600,10");
    CHECK(c.grid.nx == 401);
    CHECK(c.grid.nt == 600);
    CHECK(c.grid.n_trunc == 10.0);
    CHECK_THROWS_AS(apply_grid_flag(c, "401,600"), ValidationError);
    CHECK_THROWS_AS(apply_grid_flag(c, "a,b,c"), ValidationError);
}

TEST_CASE("sha256 and manifest hashes") {
    const auto dir = scratch("manifest");
    RunManifest m("demo", dir);
    {
        std::ofstream f(m.path("abc.txt"), std::ios::binary);
        f << "abc";
    }
    m.add_file("abc.txt");
    m.add_stage("s", 0.1, {{"tol", 1e-9}});
    m.write();
    CHECK(sha256_file(dir / "abc.txt") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    const auto j = read_json(dir / "manifest.json");
    CHECK(j["files"][0]["sha256"] == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(j["files"][0]["bytes"] == 3);
    CHECK(j["stages"][0]["tol"] == 1e-9);
    fs::remove_all(dir);
}

TEST_CASE("solve-ie command writes boundaries and a manifest") {
    cli::CommandOptions o;
    o.out_dir = scratch("ie").string();
    o.quiet = true;
    std::ostringstream log;
    const auto r = cli::cmd_solve_ie(o, log);
    CHECK(r.exit_code == cli::kExitOk);
    const auto man = read_json(r.out_dir / "manifest.json");
    CHECK(man["status"] == "ok");
    CHECK(man["derived"]["T1"].get<double>() == doctest::Approx(4.3802622658));
    for (const auto& f : man["files"]) CHECK(sha256_file(r.out_dir / f["name"].get<std::string>()) == f["sha256"]);
    std::ifstream csv(r.out_dir / "ie_boundaries.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "t,lambda0,lambda1,flag0,flag1");
    fs::remove_all(r.out_dir);
}

TEST_CASE("invalid parameters exit with the validation code and still write a manifest") {
    cli::CommandOptions o;
    o.cfg.model.gamma = 1.0;
    o.out_dir = scratch("bad").string();
    o.quiet = true;
    std::ostringstream log;
    const auto r = cli::cmd_strategy(o, log);
    CHECK(r.exit_code == cli::kExitValidation);
    const auto man = read_json(r.out_dir / "manifest.json");
    CHECK(man["status"] == "failed");
    CHECK(man["exit_code"] == 2);
    CHECK(man["failure"]["message"].get<std::string>().find("gamma") != std::string::npos);
    CHECK(log.str().find("gamma") != std::string::npos);
    fs::remove_all(r.out_dir);
}

TEST_CASE("unknown acceptance criterion is a validation error") {
    cli::CommandOptions o;
    o.out_dir = scratch("verify").string();
    o.quiet = true;
    o.criteria = {9};
    std::ostringstream log;
    CHECK(cli::cmd_verify(o, log).exit_code == cli::kExitValidation);
    fs::remove_all(o.out_dir);
}

TEST_CASE("simulate reports are byte-identical across runs and thread counts") {
    std::string h[2];
    for (int k = 0; k < 2; ++k) {
        cli::CommandOptions o;
        o.cfg.sim.n_paths = 2000;
        o.cfg.sim.n_steps = 300;
        o.cfg.sim.threads = k ? 3 : 1;
        o.out_dir = scratch("sim" + std::to_string(k)).string();
        o.quiet = true;
        o.per_path = true;
        std::ostringstream log;
        const auto r = cli::cmd_simulate(o, log);
        REQUIRE(r.exit_code == cli::kExitOk);
        CHECK(fs::exists(r.out_dir / "per_path.csv"));
        h[k] = sha256_file(r.out_dir / "sim_report.json");
        fs::remove_all(r.out_dir);
    }
    CHECK(h[0] == h[1]);
}
