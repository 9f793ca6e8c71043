#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <nlohmann/json.hpp>

#include "doctest.h"

#include "cli.hpp"
#include "copsl/io.hpp"
#include "copsl/metrics.hpp"
#include "copsl/problems.hpp"

using namespace copsl;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result call(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
    auto d = fs::temp_directory_path() / ("copsl_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::size_t count_files(const fs::path& dir) {
    if (!fs::exists(dir)) return 0;
    return static_cast<std::size_t>(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}));
}

fs::path write_config(const fs::path& dir, const std::string& body) {
    const auto path = dir / "config.json";
    write_file_atomic(path, body);
    return path;
}

const char* kSmall = R"({"format_version": 1, "suite": ["zdt1", "zdt2"], "hidden_sizes": [8, 8],
                         "iterations": 20, "batch_size": 4, "eval_grid_size": 10})";

} // namespace

TEST_CASE("defaults prints a loadable config") {
    auto r = call({"defaults"});
    CHECK(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["format_version"] == 1);
    CHECK(j["iterations"] == 500);
}

TEST_CASE("run writes record, series and checkpoint per seed") {
    const auto dir = fresh_dir("run");
    const auto cfg = write_config(dir, kSmall);
    const auto out = dir / "out";
    auto r = call({"run", "--config", cfg.string(), "--seed", "1", "--out", out.string()});
    CHECK(r.code == 0);
    CHECK(fs::exists(out / "record_seed1.json"));
    CHECK(fs::exists(out / "losses_seed1.csv"));
    CHECK(fs::exists(out / "eval_seed1.csv"));
    CHECK(fs::exists(out / "checkpoint_seed1.ckpt"));
    CHECK(count_files(out) == 4);

    auto two = call({"run", "--config", cfg.string(), "--seed", "1", "--seed", "2", "--out", (dir / "two").string()});
    CHECK(two.code == 0);
    CHECK(fs::exists(dir / "two" / "record_seed1.json"));
    CHECK(fs::exists(dir / "two" / "record_seed2.json"));
    CHECK(read_file(dir / "two" / "eval_seed1.csv") == read_file(out / "eval_seed1.csv"));

    SUBCASE("front export from the checkpoint") {
        const auto front = dir / "front.csv";
        auto f = call({"front", "--checkpoint", (out / "checkpoint_seed1.ckpt").string(), "--grid", "10", "--out",
                       front.string()});
        CHECK(f.code == 0);
        REQUIRE(fs::exists(dir / "front_1.csv"));
        REQUIRE(fs::exists(dir / "front_2.csv"));
        const auto pts = read_front_csv(dir / "front_1.csv");
        CHECK(pts.points.size() <= 10);
        CHECK(pts.reference_point == std::vector<double>{1.1, 1.1});

        auto hv = call({"hv", "--front", (dir / "front_1.csv").string()});
        CHECK(hv.code == 0);
        CHECK(std::stod(hv.out) == doctest::Approx(hv_2d(pts.points, pts.reference_point)).epsilon(1e-10));
    }
}

TEST_CASE("output directory falls back to the environment variable") {
    const auto dir = fresh_dir("env");
    const auto cfg = write_config(dir, kSmall);
    ::setenv(cli::kOutDirEnv, (dir / "from_env").string().c_str(), 1);
    auto r = call({"run", "--config", cfg.string()});
    ::unsetenv(cli::kOutDirEnv);
    CHECK(r.code == 0);
    CHECK(fs::exists(dir / "from_env" / "record_seed0.json"));
}

TEST_CASE("config errors exit 2 and write nothing") {
    const auto dir = fresh_dir("bad");
    const auto out = dir / "out";
    auto cfg = write_config(dir, R"({"format_version": 1, "iteratons": 3})");
    CHECK(call({"run", "--config", cfg.string(), "--out", out.string()}).code == 2);
    cfg = write_config(dir, "{ broken");
    CHECK(call({"run", "--config", cfg.string(), "--out", out.string()}).code == 2);
    cfg = write_config(dir, R"({"format_version": 1, "suite": ["zdt1", "dtlz2"]})");
    CHECK(call({"run", "--config", cfg.string(), "--out", out.string()}).code == 2);
    CHECK(call({"run", "--config", (dir / "missing.json").string(), "--out", out.string()}).code == 2);
    CHECK(call({"ablate", "--config", cfg.string(), "--out", out.string()}).code == 2);
    CHECK_FALSE(fs::exists(out));
    CHECK(call({"frobnicate"}).code == 2);
    CHECK(call({}).code == 2);
}

TEST_CASE("a failing run exits 1 and still records it") {
    const auto dir = fresh_dir("fail");
    const auto cfg = write_config(dir, R"({"format_version": 1, "suite": "engineering-3d-stub",
                                          "hidden_sizes": [4], "iterations": 2})");
    auto r = call({"run", "--config", cfg.string(), "--out", (dir / "out").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("placeholder") != std::string::npos);
    const auto rec = nlohmann::json::parse(read_file(dir / "out" / "record_seed0.json"));
    CHECK(rec["status"] == "failed");
    CHECK_FALSE(fs::exists(dir / "out" / "checkpoint_seed0.ckpt"));
}

TEST_CASE("ablate emits one row per variant, seed and problem") {
    const auto dir = fresh_dir("ablate");
    const auto cfg = write_config(dir, R"({"format_version": 1, "suite": ["zdt1", "zdt2"], "hidden_sizes": [6, 6, 6],
                                          "iterations": 5, "batch_size": 3, "eval_grid_size": 8})");
    auto r = call({"ablate", "--config", cfg.string(), "--seed", "0", "--seed", "1", "--out", (dir / "a").string()});
    CHECK(r.code == 0);
    const auto text = read_file(dir / "a" / "ablation.csv");
    CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 4 * 2 * 2);
    call({"ablate", "--config", cfg.string(), "--seed", "0", "--seed", "1", "--out", (dir / "b").string()});
    CHECK(read_file(dir / "b" / "ablation.csv") == text);
}

TEST_CASE("hv command") {
    const auto dir = fresh_dir("hv");
    const auto single = dir / "single.csv";
    write_file_atomic(single, "f1,f2\n0,0\n");
    auto r = call({"hv", "--front", single.string(), "--ref", "1.1,1.1"});
    CHECK(r.code == 0);
    CHECK(r.out == "1.21\n");
    CHECK(call({"hv", "--front", single.string(), "--ref", "1.1,1.1,1.1"}).code == 2);
    CHECK(call({"hv", "--front", single.string(), "--ref", "1.1,abc"}).code == 2);
    CHECK(call({"hv", "--front", single.string()}).code == 2);  // no reference anywhere
    CHECK(call({"hv", "--front", (dir / "nope.csv").string(), "--ref", "1,1"}).code == 2);

    // Dense ZDT1 front.
    FrontApproximation dense{{}, {1.1, 1.1}};
    auto zdt1 = make_zdt1();
    for (int k = 0; k <= 10000; ++k) {
        const std::vector<double> t{k / 10000.0};
        dense.points.push_back(zdt1.true_front(t));
    }
    write_front_csv(dir / "dense.csv", dense);
    auto d = call({"hv", "--front", (dir / "dense.csv").string(), "--ref", "1.1,1.1"});
    CHECK(std::stod(d.out) == doctest::Approx(0.8766666).epsilon(1e-4));
}

TEST_CASE("front reports missing or corrupt checkpoints with exit 2") {
    const auto dir = fresh_dir("front");
    CHECK(call({"front", "--checkpoint", (dir / "none.ckpt").string(), "--out", (dir / "f.csv").string()}).code == 2);
    write_file_atomic(dir / "junk.ckpt", "COPSLCKP garbage");
    CHECK(call({"front", "--checkpoint", (dir / "junk.ckpt").string(), "--out", (dir / "f.csv").string()}).code == 2);
}

TEST_CASE("the installed executable runs") {
    const std::string cmd = std::string(COPSL_CLI_PATH) + " defaults > /dev/null";
    CHECK(std::system(cmd.c_str()) == 0);
}
