#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "screenbem/experiments.hpp"

using namespace screenbem;
namespace fs = std::filesystem;

namespace {

std::string sandbox(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / "screenbem_exp_test" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

std::string slurp(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("solve: bow-tie demo field")
{
    ExperimentConfig cfg;
    cfg.geometry = "bowtie";
    cfg.levels = 2;
    cfg.g_field = Vec3(1, 0.5, 0.25);
    cfg.out_dir = sandbox("bowtie_demo");
    const SolveResult r = cmd_solve(cfg);
    CHECK(r.report.converged);
    CHECK(r.density.cwiseAbs().maxCoeff() > 0);
    CHECK(fs::exists(cfg.out_dir + "/density.csv"));
    CHECK(fs::exists(cfg.out_dir + "/report.json"));
}

TEST_CASE("solve: plus with g = (1,2) is 4-valued at the center")
{
    ExperimentConfig cfg;
    cfg.geometry = "plus:2";
    cfg.levels = 1;
    cfg.g_field = Vec3(1, 2, 0);
    cfg.out_dir = sandbox("plus_12");
    const SolveResult r = cmd_solve(cfg);
    const TraceField tf = expand(r.density, r.inflated);
    REQUIRE(r.inflated.q[0] == 4);
    std::vector<double> limits;
    for (int j = 0; j < 4; ++j) limits.push_back(tf.coeff[r.inflated.gv_index(0, j)]);
    for (int a = 0; a < 4; ++a)
        for (int b = a + 1; b < 4; ++b)
            CHECK(std::abs(limits[a] - limits[b]) > 1e-6);
}

TEST_CASE("solve: zero data gives the zero density and field")
{
    ExperimentConfig cfg;
    cfg.geometry = "threefold:2";
    cfg.levels = 1;
    cfg.g_field = Vec3::Zero();
    cfg.grid_n = 0;
    cfg.out_dir = sandbox("zero");
    const SolveResult r = cmd_solve(cfg);
    CHECK(r.density.norm() == 0.0);
    CHECK(r.report.iterations == 0);
}

TEST_CASE("outputs embed the config and reruns are byte-identical")
{
    ExperimentConfig cfg;
    cfg.geometry = "plus";
    cfg.levels = 1;
    cfg.grid_n = 20;
    cfg.out_dir = sandbox("rerun_a");
    cmd_experiment1(cfg);
    const std::string a = slurp(cfg.out_dir + "/exp1.csv");
    cfg.out_dir = sandbox("rerun_b");
    cmd_experiment1(cfg);
    const std::string b = slurp(cfg.out_dir + "/exp1.csv");
    CHECK(a == b);
    CHECK(a.rfind("# {", 0) == 0);  // config header comment
    CHECK(a.find("\"levels\":1") != std::string::npos);
}

TEST_CASE("condition sweep CSV schema")
{
    ExperimentConfig cfg;
    cfg.geometry = "threefold";
    cfg.levels = 2;
    cfg.coarse_levels = 1;
    cfg.out_dir = sandbox("cond");
    const CondResult r = run_cond_sweep(cfg, "cond.csv");
    REQUIRE(r.rows.size() == 3);  // offsets 0..2
    CHECK(r.rows[0].H == r.rows[0].h);  // degenerate row included
    for (const auto& row : r.rows) {
        CHECK(row.kappa_prec >= 1.0 - 1e-9);
        CHECK(row.kappa_unprec >= row.kappa_prec * 0.99);
        CHECK(row.lambda_max >= row.lambda_min);
    }
    const std::string csv = slurp(r.csv_path);
    CHECK(csv.find("H,h,dofs,kappa_unprec,kappa_prec,lambda_min,lambda_max") !=
          std::string::npos);
}

TEST_CASE("emit_plot")
{
    const std::string dir = sandbox("plot");
    SUBCASE("two-column CSV becomes a single polyline")
    {
        const std::string csv = dir + "/two.csv";
        {
            std::ofstream os(csv);
            os << "h,err\n0.2,1.0\n0.1,0.5\n0.05,0.25\n";
        }
        emit_plot(csv, dir + "/two.svg");
        const std::string svg = slurp(dir + "/two.svg");
        CHECK(svg.find("<svg") == 0);
        int polylines = 0;
        for (size_t p = svg.find("<polyline"); p != std::string::npos;
             p = svg.find("<polyline", p + 1))
            ++polylines;
        CHECK(polylines == 1);
    }
    SUBCASE("kappa CSV gets two series and a legend")
    {
        const std::string csv = dir + "/kappa.csv";
        {
            std::ofstream os(csv);
            os << "h,kappa_unprec,kappa_prec\n0.2,10,2\n0.1,20,2.5\n";
        }
        emit_plot(csv, dir + "/kappa.svg");
        const std::string svg = slurp(dir + "/kappa.svg");
        int polylines = 0;
        for (size_t p = svg.find("<polyline"); p != std::string::npos;
             p = svg.find("<polyline", p + 1))
            ++polylines;
        CHECK(polylines == 2);
        CHECK(svg.find(">kappa_unprec<") != std::string::npos);
        CHECK(svg.find(">kappa_prec<") != std::string::npos);
    }
    SUBCASE("empty CSV is an error and writes no file")
    {
        const std::string csv = dir + "/empty.csv";
        {
            std::ofstream os(csv);
            os << "h,err\n";
        }
        CHECK_THROWS_AS(emit_plot(csv, dir + "/empty.svg"), ValidationError);
        CHECK(!fs::exists(dir + "/empty.svg"));
    }
    SUBCASE("deterministic bytes for fixed input")
    {
        const std::string csv = dir + "/det.csv";
        {
            std::ofstream os(csv);
            os << "h,err\n0.2,1.0\n0.1,0.5\n";
        }
        emit_plot(csv, dir + "/det1.svg");
        emit_plot(csv, dir + "/det2.svg");
        CHECK(slurp(dir + "/det1.svg") == slurp(dir + "/det2.svg"));
    }
}

#ifdef SCREENBEM_CLI_PATH
TEST_CASE("CLI exit codes")
{
    const std::string cli = SCREENBEM_CLI_PATH;
    const std::string dir = sandbox("cli");
    auto run = [&](const std::string& args) {
        const std::string cmd = cli + " " + args + " >/dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        return WEXITSTATUS(status);
    };
    CHECK(run("inflate plus") == 0);
    CHECK(run("inflate hexagon") == 2);                    // unknown builtin
    CHECK(run("inflate " + dir + "/nope.mesh --mesh-file") == 2);
    CHECK(run("plot " + dir + "/missing.csv " + dir + "/o.svg") == 2);
    CHECK(run("exp1 --levels 0 --grid-n 10 --out " + dir) == 0);
    CHECK(run("definitely-not-a-command") == 2);
}
#endif
