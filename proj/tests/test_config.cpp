#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "lbs/config.hpp"

using namespace lbs;

namespace {

json minimal() {
    return json::parse(R"({
        "levy": {"drift": 0.0, "sigma": 1.0, "atoms": [{"y": 1.0, "lambda": 0.5}]},
        "domain": {"l": 0.0, "r": 1.0},
        "horizon": 0.2,
        "u0": {"name": "polynomial", "params": {"var": "x", "coeffs": [0.0, 1.0]}},
        "solver": {"dt": 0.05, "n_paths": 500, "teugels_K": 2},
        "seeds": {"master": 3, "brownian": 4}
    })");
}

std::string error_of(const json& j) {
    try {
        (void)parse_config(j);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("lbs_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(LBS_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, ParsesMinimalConfig) {
    const RunConfig c = parse_config(minimal());
    EXPECT_EQ(c.spec.triplet.atoms.size(), 1u);
    EXPECT_EQ(c.setup.n_paths, 500u);
    EXPECT_EQ(c.setup.seed, 3u);
    EXPECT_EQ(c.brownian_seed, 4u);
    EXPECT_DOUBLE_EQ(c.spec.u0(0.25), 0.25);
    EXPECT_TRUE(c.spec.g.is_zero());
    EXPECT_EQ(c.hash.size(), 16u);
}

TEST(Config, NegativeIntensityNamesThePath) {
    json j = minimal();
    j["levy"]["atoms"][0]["lambda"] = -0.5;
    EXPECT_NE(error_of(j).find("levy.atoms[0].lambda"), std::string::npos);
}

TEST(Config, UnknownKeysAreListed) {
    json j = minimal();
    j["solver"]["n_path"] = 10;
    j["extra"] = true;
    const std::string e = error_of(j);
    EXPECT_NE(e.find("solver.n_path: unknown key"), std::string::npos);
    EXPECT_NE(e.find("extra: unknown key"), std::string::npos);
}

TEST(Config, SeedsAreMandatory) {
    json j = minimal();
    j.erase("seeds");
    EXPECT_NE(error_of(j).find("seeds"), std::string::npos);
}

TEST(Config, TypeErrorsCarryPaths) {
    json j = minimal();
    j["horizon"] = "long";
    EXPECT_NE(error_of(j).find("horizon"), std::string::npos);
    j = minimal();
    j["u0"] = {{"name", "cubic"}, {"params", json::object()}};
    EXPECT_NE(error_of(j).find("u0"), std::string::npos);
}

TEST(Config, HashIgnoresKeyOrderButNotValues) {
    const json a = minimal();
    const json b = json::parse(a.dump());
    EXPECT_EQ(config_hash(a), config_hash(b));
    json c = a;
    c["seeds"]["master"] = 5;
    EXPECT_NE(config_hash(a), config_hash(c));
}

TEST(Config, AtomicWrite) {
    const auto dir = scratch("atomic");
    const auto file = dir / "sub" / "out.txt";
    write_atomic(file.string(), "abc\n");
    EXPECT_EQ(slurp(file), "abc\n");
    EXPECT_FALSE(std::filesystem::exists(file.string() + ".tmp"));
}

TEST(Cli, ExitCodes) {
    const auto dir = scratch("exit");
    json bad = minimal();
    bad["levy"]["atoms"][0]["lambda"] = -1.0;
    std::ofstream(dir / "bad.json") << bad.dump();
    std::ofstream(dir / "good.json") << minimal().dump();
    EXPECT_EQ(run_cli("basis --config " + (dir / "bad.json").string()), 1);
    EXPECT_EQ(run_cli("basis --config " + (dir / "missing.json").string()), 1);
    EXPECT_EQ(run_cli("basis --config " + (dir / "good.json").string()), 0);
    EXPECT_EQ(run_cli("frobnicate"), 1);
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
    const auto dir = scratch("repeat");
    json j = minimal();
    j["grids"] = {{"t", {0.0, 0.1}}, {"x", {0.0, 0.5, 1.0}}};
    std::ofstream(dir / "cfg.json") << j.dump();
    for (const char* out : {"a", "b"}) {
        ASSERT_EQ(run_cli("field --oracle --config " + (dir / "cfg.json").string() + " --out " + (dir / out).string()), 0);
        ASSERT_EQ(run_cli("solve --config " + (dir / "cfg.json").string() + " --out " + (dir / out).string()), 0);
    }
    for (const char* f : {"field.csv", "solve.csv"}) {
        const std::string a = slurp(dir / "a" / f);
        EXPECT_FALSE(a.empty());
        EXPECT_EQ(a, slurp(dir / "b" / f));
        EXPECT_EQ(a.rfind("# config_hash=" + parse_config(j).hash, 0), 0u);
    }
    const json manifest = json::parse(slurp(dir / "a" / "manifest.json"));
    EXPECT_EQ(manifest["config_hash"], parse_config(j).hash);
}

TEST(Cli, SeedOverrideChangesHash) {
    const auto dir = scratch("override");
    std::ofstream(dir / "cfg.json") << minimal().dump();
    ASSERT_EQ(run_cli("solve --config " + (dir / "cfg.json").string() + " --seed-override 99 --out " + (dir / "o").string()), 0);
    const std::string s = slurp(dir / "o" / "solve.csv");
    EXPECT_EQ(s.find(parse_config(minimal()).hash), std::string::npos);
    EXPECT_NE(s.find("seed=99"), std::string::npos);
}
