#include "helpers.hpp"

#include "mvd/mesh_io.hpp"

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace mvd;
namespace fs = std::filesystem;

namespace {

// Runs the CLI, returns its exit code; stdout and stderr go to `log`.
int run(const std::string& args, const fs::path& log)
{
    const std::string cmd = std::string("\"") + MVD_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const char* kFast = " --set eval_samples=2000 --set eval_views=6 --resolution 64";

} // namespace

TEST_SUITE("cli") {

TEST_CASE("generate-scenario")
{
    const fs::path dir = test::temp_dir("cli_gen");
    const fs::path log = dir / "log.txt";
    REQUIRE(run("generate-scenario sphere --seed 3 --subdivisions 2 --resolution 64 --out " + (dir / "a").string(), log) == 0);
    REQUIRE(run("generate-scenario sphere --seed 3 --subdivisions 2 --resolution 64 --out " + (dir / "b").string(), log) == 0);
    int png = 0;
    for (const auto& e : fs::directory_iterator(dir / "a")) {
        png += e.path().extension() == ".png";
        CHECK(slurp(e.path()) == slurp(dir / "b" / e.path().filename()));
    }
    CHECK(png >= 6);
    CHECK(fs::exists(dir / "a" / "manifest.json"));
    CHECK(fs::exists(dir / "a" / "initial_mesh.ply"));

    CHECK(run("generate-scenario teapot --out " + (dir / "c").string(), log) != 0);
    const std::string msg = slurp(log);
    CHECK(msg.find("teapot") != std::string::npos);
    CHECK(std::count(msg.begin(), msg.end(), '\n') == 1);
    CHECK(run("frobnicate", log) != 0);
}

TEST_CASE("evaluate")
{
    const fs::path dir = test::temp_dir("cli_eval");
    const fs::path log = dir / "log.txt";
    REQUIRE(run("generate-scenario torus --subdivisions 2 --resolution 64 --out " + (dir / "s").string(), log) == 0);
    const fs::path gt = dir / "s" / "gt_mesh.ply";
    REQUIRE(run("evaluate --mesh " + gt.string() + " --gt " + gt.string() + kFast + " --out " +
                    (dir / "r.json").string(), log) == 0);
    const std::string report = slurp(dir / "r.json");
    for (const char* key : {"\"chamfer\"", "\"fscore\"", "\"psnr\"", "\"ssim\""})
        CHECK(report.find(key) != std::string::npos);
    const std::string text = slurp(log);
    const auto pos = text.find("fscore = ");
    REQUIRE(pos != std::string::npos);
    CHECK(std::stod(text.substr(pos + 9)) >= 0.999);

    CHECK(run("evaluate --mesh " + gt.string() + " --gt " + gt.string() + " --views " + (dir / "s").string() +
                  " --resolution 128 --set eval_samples=2000",
              log) != 0);
    CHECK(slurp(log).find("resolution") != std::string::npos);
}

TEST_CASE("pipeline")
{
    const fs::path dir = test::temp_dir("cli_pipeline");
    const fs::path log = dir / "log.txt";
    REQUIRE(run("generate-scenario blob --subdivisions 2 --resolution 64 --out " + (dir / "s").string(), log) == 0);
    const std::string base = "pipeline --scenario " + (dir / "s").string() + kFast +
                             " --iterations-refine 3 --iterations-appearance 3 --iterations-camera 3";

    REQUIRE(run(base + " --iterations-fidelity 0 --out " + (dir / "p").string(), log) == 0);
    for (const char* f : {"M_0.ply", "M_c.ply", "M_d.ply", "M_out.ply", "report.json", "loss_fidelity.csv"})
        CHECK(fs::exists(dir / "p" / f));
    CHECK(read_mesh(dir / "p" / "M_d.ply").vertices == read_mesh(dir / "p" / "M_c.ply").vertices);

    REQUIRE(run(base + " --skip-fidelity --out " + (dir / "q").string(), log) == 0);
    CHECK(fs::exists(dir / "q" / "M_c.ply"));
    CHECK_FALSE(fs::exists(dir / "q" / "M_d.ply"));

    fs::remove(dir / "s" / "normal_1.png");
    CHECK(run(base + " --out " + (dir / "x").string(), log) != 0);
    CHECK(slurp(log).find("normal_1.png") != std::string::npos);
}

} // TEST_SUITE
