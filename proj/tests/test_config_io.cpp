#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "pfsi/runner.hpp"
#include "pfsi/snapshot.hpp"

using namespace pfsi;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path temp_dir(const std::string& tag) {
    auto p = fs::temp_directory_path() / ("pfsi_test_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

} // namespace

TEST_CASE("config parsing") {
    SECTION("minimal rest config uses documented defaults") {
        auto cfg = parse_config("scenario = rest\n");
        CHECK(cfg.scenario == "rest");
        CHECK(cfg.dimension == 2);
        CHECK(cfg.structure_points == 32);
        CHECK(cfg.rho0.kind == "zero");
    }

    SECTION("sections and overrides") {
        auto cfg = parse_config(
            "scenario = coupled-small-data\n"
            "[geometry]\n"
            "nx = 16 16\n"
            "tube_halfwidth = 0.3\n"
            "structure_points = 16\n"
            "[time]\n"
            "dt = 1e-3   # comment\n"
            "[physics]\n"
            "eta0 = single-mode 0.02 1\n");
        CHECK(cfg.nx[0] == 16);
        CHECK(cfg.tube_halfwidth == 0.3);
        CHECK(cfg.dt == 1e-3);
        CHECK(cfg.eta0.kind == "single-mode");
        REQUIRE(cfg.eta0.params.size() == 2);
        CHECK(cfg.eta0.params[0] == 0.02);
        // scenario defaults still present where not overridden
        CHECK(cfg.forcing_g == 0.01);
    }

    SECTION("negative dt is a validation error naming the field") {
        try {
            parse_config("scenario = rest\n[time]\ndt = -0.1\n");
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            CHECK(e.field == "time.dt");
        }
    }

    SECTION("unknown key is a parse error with its location") {
        try {
            parse_config("scenario = rest\n[physics]\nviscocity = 1.0\n");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line == 3);
            CHECK(std::string(e.what()).find("viscocity") != std::string::npos);
        }
    }

    SECTION("displacement beyond the margin is rejected") {
        CHECK_THROWS_AS(parse_config("scenario = rest\n[physics]\neta0 = uniform 0.39\n"),
                        ValidationError);
    }

    SECTION("structure mesh must be a power of two") {
        CHECK_THROWS_AS(parse_config("scenario = rest\n[geometry]\nstructure_points = 24\n"),
                        ValidationError);
    }
}

TEST_CASE("snapshot round trip") {
    auto dir = temp_dir("snap");

    FieldSnapshot snap;
    snap.name = "rho";
    snap.dims = 2;
    snap.components = 1;
    snap.time = 0.375;
    snap.shape = {8, 4};
    snap.data.resize(32);
    for (size_t i = 0; i < snap.data.size(); ++i)
        snap.data[i] = std::sin(double(i)) * 1e-3 + double(i);

    auto path = (dir / "field.pfsi").string();
    write_snapshot(path, snap);
    auto back = read_snapshot(path);

    CHECK(back.name == "rho");
    CHECK(back.dims == 2);
    CHECK(back.time == snap.time);
    REQUIRE(back.shape == snap.shape);
    REQUIRE(back.data.size() == snap.data.size());
    for (size_t i = 0; i < snap.data.size(); ++i) CHECK(back.data[i] == snap.data[i]); // bit exact

    SECTION("truncated file is corrupt") {
        auto bytes = slurp(path);
        std::ofstream out(dir / "trunc.pfsi", std::ios::binary);
        out.write(bytes.data(), std::streamsize(bytes.size() - 16));
        out.close();
        CHECK_THROWS_AS(read_snapshot((dir / "trunc.pfsi").string()), CorruptSnapshot);
    }

    SECTION("bad magic is corrupt") {
        auto bytes = slurp(path);
        bytes[0] = 'X';
        std::ofstream out(dir / "magic.pfsi", std::ios::binary);
        out.write(bytes.data(), std::streamsize(bytes.size()));
        out.close();
        CHECK_THROWS_AS(read_snapshot((dir / "magic.pfsi").string()), CorruptSnapshot);
    }

    SECTION("future version is a version mismatch") {
        auto bytes = slurp(path);
        bytes[4] = 9; // bump the little-endian version word
        std::ofstream out(dir / "vers.pfsi", std::ios::binary);
        out.write(bytes.data(), std::streamsize(bytes.size()));
        out.close();
        CHECK_THROWS_AS(read_snapshot((dir / "vers.pfsi").string()), VersionMismatch);
    }
}

TEST_CASE("rest scenario run writes artifacts and exits clean") {
    auto dir = temp_dir("rest");
    auto cfg = parse_config("scenario = rest\n[geometry]\nnx = 8 8\nstructure_points = 8\n"
                            "[time]\ndt = 5e-3\nhorizon = 0.05\nwindow = 0.02\n");
    cfg.output_dir = dir.string();
    std::ostringstream log;
    int code = run_simulation(cfg, log, true);
    CHECK(code == kExitOk);
    CHECK(fs::exists(dir / "energy.csv"));
    CHECK(fs::exists(dir / "windows.jsonl"));
    CHECK(fs::exists(dir / "summary.json"));
    CHECK(fs::exists(dir / "u_final.pfsi"));

    // ledgers of the rest run are identically zero
    auto j = Json::parse(slurp(dir / "summary.json"));
    CHECK(j["exit_code"] == 0);
    CHECK(j["energy_lhs"].get<double>() == 0.0);

    // energy csv header starts with '#'
    std::ifstream csv(dir / "energy.csv");
    std::string first;
    std::getline(csv, first);
    CHECK(first.rfind("#", 0) == 0);
}

TEST_CASE("determinism: same config and seed give identical ledgers") {
    auto dirA = temp_dir("detA"), dirB = temp_dir("detB");
    std::string base = "scenario = coupled-small-data\n[geometry]\nnx = 12 12\n"
                       "structure_points = 16\n[time]\ndt = 2.5e-3\nhorizon = 0.03\n"
                       "window = 0.01\n[physics]\nrho0 = random-squared 0.4 2\n"
                       "[run]\nseed = 77\n";
    auto cfgA = parse_config(base);
    cfgA.output_dir = dirA.string();
    auto cfgB = parse_config(base);
    cfgB.output_dir = dirB.string();
    std::ostringstream log;
    REQUIRE(run_simulation(cfgA, log, true) == kExitOk);
    REQUIRE(run_simulation(cfgB, log, true) == kExitOk);
    CHECK(slurp(dirA / "energy.csv") == slurp(dirB / "energy.csv"));
    CHECK(slurp(dirA / "mass.csv") == slurp(dirB / "mass.csv"));
}

TEST_CASE("tube breach scenario exits with the breach code and dumps the state") {
    auto dir = temp_dir("breach");
    auto cfg = parse_config("scenario = tube-breach\n[time]\nhorizon = 0.5\n");
    cfg.output_dir = dir.string();
    std::ostringstream log;
    int code = run_simulation(cfg, log, true);
    CHECK(code == kExitTubeBreach);
    CHECK(fs::exists(dir / "eta_final.pfsi"));
    auto snap = read_snapshot((dir / "eta_final.pfsi").string());
    CHECK(snap.name == "eta");
}

TEST_CASE("shear-solute scenario stays positive definite") {
    auto dir = temp_dir("shear");
    auto cfg = parse_config("scenario = shear-solute\n[time]\nhorizon = 0.4\n");
    cfg.output_dir = dir.string();
    std::ostringstream log;
    CHECK(run_simulation(cfg, log, true) == kExitOk);
    auto j = Json::parse(slurp(dir / "summary.json"));
    CHECK(j["min_stress_eigenvalue"].get<double>() > 0.0);
    CHECK(j["min_density"].get<double>() > 0.0);
}

TEST_CASE("closure-verify scenario reports a small residual") {
    auto dir = temp_dir("closure");
    auto cfg = parse_config("scenario = closure-verify\n[kinetic]\npoints = 32\nsteps = 200\n");
    cfg.output_dir = dir.string();
    std::ostringstream log;
    CHECK(run_simulation(cfg, log, true) == kExitOk);
    auto j = Json::parse(slurp(dir / "summary.json"));
    CHECK(j["kappa_calibrated"].get<double>() == Catch::Approx(2.0).epsilon(0.05));
    CHECK(j["equilibrium_drift"].get<double>() < 1e-12);
    CHECK(j["mass_drift"].get<double>() < 1e-10);
}
