#include <doctest.h>

#include "fsmhd/errors.hpp"
#include "fsmhd/io.hpp"
#include "fsmhd/mms.hpp"
#include "fsmhd/run.hpp"
#include "support.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

using namespace fsmhd;
using namespace fsmhd::testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("fsmhd_cli_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    return p;
}

RunConfig config(json j, const fs::path& out) {
    j["schema_version"] = 1;
    j["output"]["directory"] = out.string();
    return RunConfig::from_json(j);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ErrorCode config_error_of(const json& j) {
    try {
        RunConfig::from_json(j);
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::ShapeMismatch;  // no error
}

fs::path write_config(const json& j, const std::string& name) {
    fs::path p = scratch(name + "_cfg") / "config.json";
    fs::create_directories(p.parent_path());
    std::ofstream(p) << j.dump();
    return p;
}

}  // namespace

TEST_CASE("config parsing and validation") {
    const json base{{"schema_version", 1}};
    RunConfig c = RunConfig::from_json(base);
    CHECK(c.grid.Ny == 32);
    CHECK(c.stepper.scheme == "imex2");
    CHECK(RunConfig::from_json(c.to_json()).to_json() == c.to_json());

    json auto_a = base;
    auto_a["physics"]["A"] = "auto";
    CHECK(RunConfig::from_json(auto_a).physics.A <= 0.0);

    CHECK(config_error_of(json{{"grid", {{"Ny", 32}}}}) == ErrorCode::ConfigError);  // schema version missing
    CHECK(config_error_of(json{{"schema_version", 2}}) == ErrorCode::ConfigError);
    json unknown = base;
    unknown["grid"]["Nx"] = 8;
    CHECK(config_error_of(unknown) == ErrorCode::ConfigError);
    json ladder = base;
    ladder["physics"]["ladder"] = {1e-3, 1e-2};
    CHECK(config_error_of(ladder) == ErrorCode::ConfigError);
    json ny = base;
    ny["grid"]["Ny"] = 48;
    CHECK(config_error_of(ny) == ErrorCode::ConfigError);
    json dz = base;
    dz["analysis"]["delta_z"] = -0.1;
    CHECK(config_error_of(dz) == ErrorCode::ConfigError);
    json type = base;
    type["stepper"]["dt"] = "small";
    CHECK(config_error_of(type) == ErrorCode::ConfigError);
    json norm = base;
    norm["analysis"]["norms"] = {"v:Z:0:0"};
    CHECK(config_error_of(norm) == ErrorCode::ConfigError);
    json fam = base;
    fam["data"]["family"] = "vortex";
    CHECK(config_error_of(fam) == ErrorCode::ConfigError);
}

TEST_CASE("environment overrides") {
    RunConfig c = RunConfig::from_json(json{{"schema_version", 1}});
    ::setenv("FSMHD_OUTPUT_DIR", "/tmp/elsewhere", 1);
    ::setenv("FSMHD_WORKERS", "3", 1);
    apply_env_overrides(c);
    CHECK(c.output.directory == "/tmp/elsewhere");
    CHECK(c.workers == 3);
    ::setenv("FSMHD_WORKERS", "many", 1);
    CHECK_THROWS_AS(apply_env_overrides(c), Error);
    ::unsetenv("FSMHD_OUTPUT_DIR");
    ::unsetenv("FSMHD_WORKERS");
}

TEST_CASE("checkpoint round trip is bitwise") {
    const fs::path dir = scratch("ckpt");
    RunConfig c = config({{"grid", {{"Ny", 16}, {"Nz", 33}}}, {"data", {{"family", "swirl"}, {"h_amp", 0.05}}}}, dir);
    auto g = make_grid(c.grid);
    MhdState st = simulation_initial(c, g);
    st.t = 0.125;
    st.eps = 1e-3;
    const std::string bin = write_checkpoint((dir / "state").string(), st, 42, 7);
    MhdState back = read_checkpoint(bin);
    CHECK(back.t == st.t);
    CHECK(back.eps == st.eps);
    CHECK(back.grid().Nz() == 33);
    CHECK((back.S.h == st.S.h).all());
    CHECK((back.S.eta == st.S.eta).all());
    for (int i = 0; i < 3; ++i) {
        CHECK((back.v[i] == st.v[i]).all());
        CHECK((back.b[i] == st.b[i]).all());
    }
    CHECK((back.q == st.q).all());
    json side = json::parse(slurp(dir / "state.json"));
    CHECK(side["seed"] == 42);
    CHECK(side["step"] == 7);
    CHECK_THROWS_AS(read_checkpoint((dir / "state.json").string()), Error);
}

TEST_CASE("number formatting round trips") {
    for (double x : {0.1, 1.0 / 3.0, 1e-300, -2.5e17}) CHECK(std::stod(format_double(x)) == x);
    CHECK(format_double(NAN) == "nan");
}

TEST_CASE("simulate: rest state") {
    const fs::path dir = scratch("rest");
    RunConfig c = config({{"grid", {{"Ny", 16}, {"Nz", 33}}}, {"physics", {{"eps", 0.01}}}, {"stepper", {{"dt", 0.01}, {"T", 0.03}}}}, dir);
    CommandResult r = cmd_simulate(c);
    CHECK(r.exit_code == exit_ok);
    const json s = json::parse(slurp(dir / "summary.json"));
    CHECK(s["status"] == "ok");
    CHECK(s["steps"] == 3);
    CHECK(s["energies"]["final"]["total"] == 0.0);
    CHECK(s["energies"]["initial"]["kinetic"] == 0.0);
    CHECK(s["seed"] == 0);
    CHECK(fs::exists(dir / "steps.csv"));
    CHECK(fs::exists(dir / "checkpoints" / "final.bin"));
}

TEST_CASE("simulate: dt too large aborts with CflViolation") {
    const fs::path dir = scratch("cfl");
    RunConfig c = config({{"data", {{"family", "swirl"}, {"U", 0.05}, {"h_amp", 0.05}}}, {"stepper", {{"dt", 2.0}, {"T", 4.0}}}}, dir);
    CommandResult r = cmd_simulate(c);
    CHECK(r.exit_code == exit_abort);
    const json s = json::parse(slurp(dir / "summary.json"));
    CHECK(s["status"] == "aborted");
    CHECK(s["abort"]["reason"] == "CflViolation");
    // the CLI path maps the same abort to exit 3
    json j = c.to_json();
    std::ostringstream err;
    CHECK(run_verb("simulate", write_config(j, "cfl").string(), err) == exit_abort);
    CHECK(err.str().find("CflViolation") != std::string::npos);
}

TEST_CASE("simulate: Taylor margin is logged each step") {
    const fs::path dir = scratch("swirl");
    RunConfig c = config({{"grid", {{"Ny", 16}, {"Nz", 33}}},
                          {"data", {{"family", "swirl"}, {"h_amp", 0.05}}},
                          {"stepper", {{"dt", 0.01}, {"T", 0.05}}}},
                         dir);
    REQUIRE(cmd_simulate(c).exit_code == exit_ok);
    std::ifstream in(dir / "steps.csv");
    std::string line;
    int rows = 0;
    std::getline(in, line);
    CHECK(line.rfind("# seed=", 0) == 0);
    std::getline(in, line);
    CHECK(line.find("taylor_margin") != std::string::npos);
    while (std::getline(in, line)) {
        ++rows;
        std::vector<std::string> cols;
        std::stringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) cols.push_back(cell);
        REQUIRE(cols.size() == 9);
        CHECK(std::stod(cols[5]) > 0.5);
    }
    CHECK(rows == 6);
}

TEST_CASE("simulate: manufactured solution reports the observed order") {
    const fs::path dir = scratch("mms");
    RunConfig c = config({{"grid", {{"Ny", 16}, {"Nz", 129}, {"L", 3.0}}},
                          {"physics", {{"eps", 0.02}}},
                          {"data", {{"family", "mms"}}},
                          {"stepper", {{"dt", 0.025}, {"T", 0.1}}}},
                         dir);
    CommandResult r = cmd_simulate(c);
    REQUIRE(r.exit_code == exit_ok);
    const json& o = r.summary["observed_order"];
    CHECK(o["min_order"].get<double>() >= 1.8);
    // rerun of the manufactured oracle at the finest level
    Mms m;
    auto g = make_grid(c.grid);
    const Forcing f = m.forcing();
    MhdState st = m.initial(g);
    StepConfig sc;
    sc.dt = 0.00625;
    for (int n = 0; n < 16; ++n) st = step_viscous(st, sc, &f);
    CHECK(o["errors"][2]["v"].get<double>() == doctest::Approx(m.errors(st).v).epsilon(1e-12));
    CHECK(o["errors"][2]["b"].get<double>() == doctest::Approx(m.errors(st).b).epsilon(1e-12));
    // mms needs viscosity
    json j = c.to_json();
    j["physics"]["eps"] = 0.0;
    std::ostringstream err;
    CHECK(run_verb("simulate", write_config(j, "mms0").string(), err) == exit_config);
}

TEST_CASE("sweep: synthetic mode, empty ladder and a real sweep") {
    SUBCASE("synthetic") {
        const fs::path dir = scratch("syn");
        RunConfig c = config({{"physics", {{"ladder", {1e-2, 1e-3, 1e-4, 1e-5}}}}, {"analysis", {{"synthetic", {{1.0, 0.25}}}}}}, dir);
        CommandResult r = cmd_sweep(c);
        REQUIRE(r.exit_code == exit_ok);
        CHECK(r.summary["report"]["norms"][0]["fit"]["slope"].get<double>() == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(fs::exists(dir / "rates.csv"));
        CHECK(fs::exists(dir / "members" / "member_03" / "member.json"));
    }
    SUBCASE("empty ladder") {
        json j{{"schema_version", 1}, {"physics", {{"ladder", json::array()}}}, {"output", {{"directory", scratch("empty").string()}}}};
        std::ostringstream err;
        CHECK(run_verb("sweep", write_config(j, "empty").string(), err) == exit_config);
    }
    SUBCASE("real sweep at desk resolution, twice") {
        json j{{"grid", {{"Ny", 16}, {"Nz", 49}, {"L", 1.0}}},
               {"physics", {{"ladder", {1e-2, 5e-3, 2.5e-3, 1.25e-3}}}},
               {"data", {{"family", "strain-nonzero"}, {"seed", 3}}},
               {"stepper", {{"dt", 0.01}, {"T", 0.04}}},
               {"analysis", {{"norms", {"v:X_tan:0:0", "b:X:0:0", "omega_v:X_tan:0:0"}}, {"checkpoints", 1}}}};
        const fs::path d1 = scratch("real1"), d2 = scratch("real2");
        CommandResult r = cmd_sweep(config(j, d1));
        REQUIRE(r.exit_code == exit_ok);
        const json& rep = r.summary["report"];
        CHECK(rep["members"].size() == 4);
        CHECK(rep["norms"].size() == 3);
        for (const auto& n : rep["norms"]) {
            CHECK(n["errors"].size() == 4);
            CHECK(!n["band"].get<std::string>().empty());
        }
        CHECK(rep["verdict"] == "StrongBoundary");
        CHECK(r.summary["seed"] == 3);
        REQUIRE(cmd_sweep(config(j, d2)).exit_code == exit_ok);
        CHECK(slurp(d1 / "report.json") == slurp(d2 / "report.json"));
        CHECK(slurp(d1 / "rates.csv") == slurp(d2 / "rates.csv"));
    }
}

TEST_CASE("layer: closed form, scan table and bad delta_z") {
    SUBCASE("constant coefficients") {
        const fs::path dir = scratch("layer1");
        RunConfig c = config({{"physics", {{"eps", 1e-3}}}, {"analysis", {{"tau", {0.0, 2.0}}, {"layer", {{"xi", {0.0, 1.0}}}}}}}, dir);
        CommandResult r = cmd_layer(c);
        REQUIRE(r.exit_code == exit_ok);
        REQUIRE(r.summary["cases"].size() == 4);
        for (const auto& k : r.summary["cases"]) {
            CHECK(k["closed_form_deviation"].get<double>() < 1e-8);
            CHECK(k["ratio_at_width"]["computed"].get<double>() ==
                  doctest::Approx(k["ratio_at_width"]["closed_form"].get<double>()).epsilon(1e-8));
        }
        // xi = 0, tau = 0, gamma = 1: unit decay rate, W(-sqrt eps) / W(0) = 1/e
        CHECK(r.summary["cases"][0]["ratio_at_width"]["computed"].get<double>() == doctest::Approx(std::exp(-1.0)).epsilon(1e-8));
        CHECK(r.summary["scans"].empty());
    }
    SUBCASE("two-eps scan") {
        const fs::path dir = scratch("layer2");
        RunConfig c = config({{"physics", {{"ladder", {1e-2, 1e-4}}}}, {"analysis", {{"layer", {{"xi", {0.0}}}}}}}, dir);
        CommandResult r = cmd_layer(c);
        REQUIRE(r.exit_code == exit_ok);
        const json& t = r.summary["scans"][0]["table"];
        REQUIRE(t["rows"].size() == 2);
        for (const auto& row : t["rows"]) {
            const double e = row["eps"];
            CHECK(row["inner_plus"].get<double>() == doctest::Approx(std::exp(-std::pow(e, 0.1))).epsilon(1e-8));
            CHECK(row["outer_plus"].get<double>() == doctest::Approx(std::exp(-std::pow(e, -0.1))).epsilon(1e-7));
        }
        CHECK(t["inner_increasing"] == true);
        CHECK(t["outer_decreasing"] == true);
    }
    SUBCASE("negative delta_z") {
        json j{{"schema_version", 1}, {"physics", {{"eps", 1e-3}}}, {"analysis", {{"delta_z", -0.2}}}};
        std::ostringstream err;
        CHECK(run_verb("layer", write_config(j, "baddz").string(), err) == exit_config);
    }
}

TEST_CASE("check-algebra on a curved surface") {
    const fs::path dir = scratch("alg");
    RunConfig c = config({{"grid", {{"Ny", 32}, {"Nz", 64}, {"L", 4.0}}}, {"data", {{"h_amp", 0.1}, {"seed", 1}}}, {"analysis", {{"states", 5}}}}, dir);
    CommandResult r = cmd_check_algebra(c);
    CHECK(r.exit_code == exit_ok);
    CHECK(r.summary["status"] == "pass");
    CHECK(r.summary["grad_h_sup"].get<double>() <= 0.3);
    CHECK(fs::exists(dir / "algebra_check.json"));
}

TEST_CASE("unknown verbs and missing configs are config errors") {
    std::ostringstream err;
    CHECK(run_verb("simulate", "/nonexistent/config.json", err) == exit_config);
    CHECK(run_verb("dance", write_config(json{{"schema_version", 1}}, "verb").string(), err) == exit_config);
}
