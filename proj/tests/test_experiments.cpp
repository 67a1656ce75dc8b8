/**
 * @file test_experiments.cpp
 * @brief Config parsing, presets, the runner's artifacts and manifests, and
 *        the command-line tool's exit codes.
 */
#include "orbitlab/experiments.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace orbitlab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("orbitlab_test_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string usage_message(const std::string& text, const ConfigOverrides& o = {}) {
    try {
        parse_config(text, o);
    } catch (const UsageError& e) {
        return e.what();
    }
    return "";
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(ORBITLAB_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(ParseConfig, EmptyFileWithExperimentFlagGivesDefaults) {
    ConfigOverrides o;
    o.experiment = "stab-volume";
    const auto cfg = parse_config("", o);
    EXPECT_EQ(cfg.experiment, "stab-volume");
    EXPECT_EQ(cfg.seed, 0u);
    EXPECT_EQ(cfg.workers, 1u);
    EXPECT_EQ(cfg.text("figure"), "edge");
    EXPECT_EQ(cfg.integer("count"), 1000000);
    EXPECT_EQ(cfg.reals("eps"), (std::vector<double>{0.2, 0.1, 0.05, 0.025}));
}

TEST(ParseConfig, NumericOverridesAndComments) {
    const auto cfg = parse_config("# a comment\nexperiment = feature-compare\neps = 0.05   # inline\ncount = 1000000\n\n");
    EXPECT_DOUBLE_EQ(cfg.real("eps"), 0.05);
    EXPECT_EQ(cfg.integer("count"), 1000000);
    EXPECT_EQ(parse_config("experiment = stab-volume\ncount = 1e5").integer("count"), 100000);
}

TEST(ParseConfig, UnknownKeyNamesLineAndKey) {
    const std::string msg = usage_message("epz = 0.05");
    EXPECT_NE(msg.find("line 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("epz"), std::string::npos) << msg;
}

TEST(ParseConfig, Errors) {
    EXPECT_NE(usage_message("experiment = stab-volume\neps = 0.1\neps = 0.2").find("line 3: duplicate key 'eps'"), std::string::npos);
    EXPECT_NE(usage_message("experiment = stab-volume\ncount = many").find("line 2"), std::string::npos);
    EXPECT_NE(usage_message("experiment = stab-volume\ncount").find("line 2"), std::string::npos);
    EXPECT_NE(usage_message("experiment = stab-volume\ngroup = D4").find("does not apply"), std::string::npos);
    EXPECT_NE(usage_message("experiment = fly").find("unknown experiment"), std::string::npos);
    EXPECT_NE(usage_message("seed = 3").find("no experiment"), std::string::npos);
    EXPECT_NE(usage_message("experiment = stab-volume\nseed = -1").find("seed"), std::string::npos);
    EXPECT_NE(usage_message("experiment = stab-volume\nworkers = 0").find("workers"), std::string::npos);
    ConfigOverrides bad_set;
    bad_set.sets = {"epz=1"};
    EXPECT_NE(usage_message("experiment = stab-volume", bad_set).find("epz"), std::string::npos);
}

TEST(ParseConfig, FlagsOverrideFile) {
    ConfigOverrides o;
    o.sets = {"eps=0.3,0.2"};
    o.seed = 9;
    o.workers = 4;
    o.out_dir = "elsewhere";
    const auto cfg = parse_config("experiment = stab-volume\neps = 0.1,0.05\nseed = 1\nout_dir = here", o);
    EXPECT_EQ(cfg.reals("eps"), (std::vector<double>{0.3, 0.2}));
    EXPECT_EQ(cfg.seed, 9u);
    EXPECT_EQ(cfg.workers, 4u);
    EXPECT_EQ(cfg.out_dir, fs::path("elsewhere"));
}

TEST(ParseConfig, RenderedConfigParsesBackIdentically) {
    for (const auto& p : presets()) {
        const auto cfg = parse_config(preset_config_text(p));
        const auto again = parse_config(render_config(cfg));
        EXPECT_EQ(again.parameters, cfg.parameters) << p.name;
        EXPECT_EQ(again.experiment, cfg.experiment);
        EXPECT_EQ(render_config(again), render_config(cfg));
    }
}

TEST(Presets, CoverEveryExperiment) {
    std::set<std::string> covered;
    for (const auto& p : presets()) covered.insert(p.experiment);
    for (const auto& e : experiment_catalog()) EXPECT_TRUE(covered.count(e.name)) << e.name;
    EXPECT_THROW(find_preset("nope"), UsageError);
}

TEST(Run, OrbitCheckWritesRowsAndManifest) {
    ConfigOverrides o;
    o.out_dir = scratch("orbit");
    const auto res = run_experiment(parse_config(preset_config_text(find_preset("orbit-d4")), o));
    const std::string csv = slurp(*o.out_dir / "orbit_stabilizer.csv");
    EXPECT_EQ(csv.rfind("group,element,orbit_size,stabilizer_size,group_order,identity_holds\n", 0), 0u);
    EXPECT_NE(csv.find("D4,0,4,2,8,1\n"), std::string::npos);
    const std::string manifest = slurp(res.manifest);
    EXPECT_NE(manifest.find("group = D4"), std::string::npos);
    EXPECT_NE(manifest.find("# sha256 orbit_stabilizer.csv " + sha256_file(*o.out_dir / "orbit_stabilizer.csv")),
              std::string::npos);
    EXPECT_NE(manifest.find("# tool_version"), std::string::npos);
}

TEST(Run, ManifestReplayIsByteIdenticalAcrossWorkers) {
    const fs::path a = scratch("replay_a"), b = scratch("replay_b");
    ConfigOverrides o;
    o.out_dir = a;
    o.sets = {"count=20000", "figures=edge,circle,butterfly"};
    const auto first = run_experiment(parse_config("experiment = feature-compare", o));
    ConfigOverrides replay;
    replay.out_dir = b;
    replay.workers = 3;
    run_experiment(parse_config(slurp(first.manifest), replay));
    for (const auto& name : {"features.csv", "feature_separation.csv"}) EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
}

TEST(Run, SweepWritesPgmWithHeaderAndSegments) {
    ConfigOverrides o;
    o.out_dir = scratch("sweep");
    o.sets = {"side=64"};
    run_experiment(parse_config("experiment = moduli-sweep\npreset = butterfly", o));
    std::ifstream pgm(*o.out_dir / "sweep.pgm", std::ios::binary);
    const auto img = read_pgm(pgm);
    EXPECT_EQ(img.side, 64);
    EXPECT_GT(img.count(), 0u);
    EXPECT_NE(slurp(*o.out_dir / "sweep.pgm").find("# extent"), std::string::npos);
    EXPECT_EQ(slurp(*o.out_dir / "segments.csv").rfind("t,x1,y1,x2,y2\n", 0), 0u);
}

TEST(Run, NumericalFailureSurfaces) {
    ConfigOverrides o;
    o.out_dir = scratch("numfail");
    o.sets = {"count=10000", "eps=0.001,0.0005"};
    EXPECT_THROW(run_experiment(parse_config("experiment = stab-volume", o)), NumericalError);
}

TEST(Run, UnknownFigureIsUsageError) {
    ConfigOverrides o;
    o.out_dir = scratch("badfig");
    o.sets = {"figure=hexagram", "count=10000"};
    EXPECT_THROW(run_experiment(parse_config("experiment = stab-volume", o)), UsageError);
}

TEST(Csv, QuotingAndNumbers) {
    EXPECT_EQ(csv_field("plain"), "plain");
    EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(std::stod(format_number(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Sha256, KnownDigest) {
    const fs::path p = scratch("sha") / "abc.txt";
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << "abc";
    EXPECT_EQ(sha256_file(p), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Cli, ExitCodes) {
    const fs::path dir = scratch("cli");
    fs::create_directories(dir);
    EXPECT_EQ(run_cli("presets"), 0);
    EXPECT_EQ(run_cli("run --preset orbit-s3 --out " + (dir / "ok").string()), 0);
    std::ofstream(dir / "bad.cfg") << "epz = 0.05\n";
    EXPECT_EQ(run_cli("run --config " + (dir / "bad.cfg").string()), 2);
    EXPECT_EQ(run_cli("run --preset stab-edge --set count=10000 --set eps=0.001,0.0005 --out " + (dir / "n").string()), 3);
    EXPECT_EQ(run_cli("frobnicate"), 2);
    // The manifest written by a run is itself a valid config.
    EXPECT_EQ(run_cli("run --config " + (dir / "ok" / "manifest.cfg").string() + " --out " + (dir / "again").string()), 0);
    EXPECT_EQ(slurp(dir / "ok" / "orbit_stabilizer.csv"), slurp(dir / "again" / "orbit_stabilizer.csv"));
}

TEST(Cli, EnvironmentSetsDefaultOutDir) {
    const fs::path dir = scratch("env");
    ::setenv("ORBITLAB_OUT", dir.c_str(), 1);
    const auto cfg = parse_config("experiment = orbit-check");
    ::unsetenv("ORBITLAB_OUT");
    EXPECT_EQ(cfg.out_dir, dir);
    EXPECT_EQ(parse_config("experiment = orbit-check").out_dir, fs::path("out"));
}
