#include <CLI11.hpp>
#include <iostream>

#include "screenbem/experiments.hpp"
#include "screenbem/volume_oracle.hpp"

using namespace screenbem;

namespace {

void add_common(CLI::App* cmd, ExperimentConfig& cfg, std::string& gcsv)
{
    cmd->add_option("--geometry", cfg.geometry,
                    "builtin spec (plus[:n] | threefold[:n] | bowtie[:k]) or mesh file");
    cmd->add_flag("--mesh-file", cfg.geometry_is_file, "treat --geometry as a file path");
    cmd->add_option("--levels", cfg.levels, "refinement levels / sweep depth");
    cmd->add_option("--start-level", cfg.start_level, "first level of a sweep");
    cmd->add_option("--coarse-levels", cfg.coarse_levels, "number of coarse levels swept");
    cmd->add_option("--graded", cfg.graded_exponent, "grading exponent toward boundary corners");
    cmd->add_option("--g", gcsv, "constant Neumann vector field, comma separated");
    cmd->add_option("--tol", cfg.tol, "solver tolerance");
    cmd->add_option("--out", cfg.out_dir, "output directory");
    cmd->add_option("--threads", cfg.threads, "worker threads for assembly/evaluation");
    cmd->add_option("--quad-far", cfg.quad.far_order, "Gauss order for disjoint pairs");
    cmd->add_option("--quad-sing", cfg.quad.singular_order, "order of the singular rules");
    cmd->add_option("--grid-n", cfg.grid_n, "grid resolution per axis (0 disables)");
    cmd->add_option("--seed", cfg.seed, "seed for randomized probes");
}

Vec3 parse_g(const std::string& s)
{
    Vec3 g = Vec3::Zero();
    std::stringstream ss(s);
    std::string cell;
    int k = 0;
    while (std::getline(ss, cell, ',') && k < 3) g[k++] = std::stod(cell);
    return g;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Galerkin boundary elements for screen problems with a substructuring "
                 "preconditioner"};
    app.require_subcommand(1);

    ExperimentConfig cfg;
    std::string gcsv;
    bool exact_neumann = false;

    auto* solve = app.add_subcommand("solve", "solve the Neumann problem end to end");
    add_common(solve, cfg, gcsv);
    solve->add_flag("--exact-neumann", exact_neumann,
                    "use the analytic reference Neumann data (plus screen only)");
    bool dump_matrix = false;
    solve->add_flag("--dump-matrix", dump_matrix,
                    "also write the Galerkin matrix (binary + MatrixMarket text)");

    auto* inflate_cmd = app.add_subcommand("inflate", "inflate a mesh and report branches");
    std::string inflate_target;
    bool inflate_is_file = false;
    inflate_cmd->add_option("mesh", inflate_target, "builtin spec or mesh file")->required();
    inflate_cmd->add_flag("--mesh-file", inflate_is_file, "treat the argument as a file path");

    auto* cond = app.add_subcommand("cond", "condition-number sweep on any geometry");
    add_common(cond, cfg, gcsv);

    auto* exp1 = app.add_subcommand("exp1", "plus-screen convergence study");
    add_common(exp1, cfg, gcsv);

    auto* exp2 = app.add_subcommand("exp2", "threefold-junction condition numbers");
    add_common(exp2, cfg, gcsv);

    auto* exp3 = app.add_subcommand("exp3", "bow-tie condition numbers");
    add_common(exp3, cfg, gcsv);

    auto* eval = app.add_subcommand("eval", "solve and evaluate the potential on a grid");
    add_common(eval, cfg, gcsv);
    bool eval_exact = false;
    eval->add_flag("--exact", eval_exact,
                   "add exact/error columns (plus screen with analytic Neumann data)");

    auto* plot = app.add_subcommand("plot", "render a CSV as a log-log SVG plot");
    std::string plot_csv, plot_svg;
    plot->add_option("csv", plot_csv, "input CSV")->required();
    plot->add_option("svg", plot_svg, "output SVG")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        if (!gcsv.empty()) cfg.g_field = parse_g(gcsv);

        if (solve->parsed()) {
            cfg.dump_matrix = dump_matrix;
            const SolveResult r =
                exact_neumann
                    ? cmd_solve(cfg, [](const Vec3& x) { return exact_plus_gradient(x); })
                    : cmd_solve(cfg);
            json out{{"dofs", r.inflated.num_jump_dofs()},
                     {"iterations", r.report.iterations},
                     {"kappa_estimate_lanczos", r.report.kappa_estimate},
                     {"outputs", r.outputs}};
            std::cout << out.dump(2) << "\n";
        } else if (inflate_cmd->parsed()) {
            const SurfaceMesh m = inflate_is_file
                                      ? load_mesh(inflate_target)
                                      : make_builtin(inflate_target);
            std::cout << inflate_summary(inflate(m)).dump(2) << "\n";
        } else if (cond->parsed()) {
            const CondResult r = run_cond_sweep(cfg, "cond.csv");
            std::cout << json{{"rows", r.rows.size()}, {"csv", r.csv_path}}.dump(2) << "\n";
        } else if (exp1->parsed()) {
            const Experiment1Result r = cmd_experiment1(cfg);
            std::cout << json{{"eoc_uniform", r.eoc_uniform},
                              {"eoc_graded", r.eoc_graded},
                              {"csv", r.csv_path}}
                             .dump(2)
                      << "\n";
        } else if (exp2->parsed()) {
            const CondResult r = cmd_experiment2(cfg);
            std::cout << json{{"rows", r.rows.size()}, {"csv", r.csv_path}}.dump(2) << "\n";
        } else if (exp3->parsed()) {
            const CondResult r = cmd_experiment3(cfg);
            std::cout << json{{"rows", r.rows.size()}, {"csv", r.csv_path}}.dump(2) << "\n";
        } else if (eval->parsed()) {
            ExperimentConfig ecfg = cfg;
            ecfg.grid_n = 0;  // grid written below with optional extra columns
            const SolveResult r =
                eval_exact
                    ? cmd_solve(ecfg, [](const Vec3& x) { return exact_plus_gradient(x); })
                    : cmd_solve(ecfg);
            const SurfaceMesh& mesh = r.inflated.base;
            if (mesh.dim != 2)
                throw ValidationError("eval grids are 2D; use a 2D geometry");
            const EvaluationGrid grid =
                make_cartesian_grid(mesh, cfg.grid_lo, cfg.grid_hi, cfg.grid_n, cfg.grid_n,
                                    0.5 * mesh.max_facet_diameter());
            const Eigen::VectorXd u = eval_DL(r.density, r.inflated, grid, cfg.quad, cfg.threads);
            std::vector<std::string> cols = {"x", "y", "value"};
            std::vector<std::vector<double>> rows;
            Eigen::VectorXd ue;
            if (eval_exact) {
                cols.push_back("exact");
                cols.push_back("error");
                ue = exact_plus_solution(grid);
            }
            for (size_t i = 0; i < grid.points.size(); ++i) {
                std::vector<double> row = {grid.points[i].x(), grid.points[i].y(), u[i]};
                if (eval_exact) {
                    row.push_back(ue[i]);
                    row.push_back(u[i] - ue[i]);
                }
                rows.push_back(row);
            }
            std::ofstream os = detail::open_output(cfg.out_dir, "eval.csv");
            detail::write_csv(os, cfg, cols, rows);
            std::cout << json{{"points", rows.size()},
                              {"csv", detail::output_path(cfg.out_dir, "eval.csv")}}
                             .dump(2)
                      << "\n";
        } else if (plot->parsed()) {
            emit_plot(plot_csv, plot_svg);
            std::cout << json{{"svg", plot_svg}}.dump(2) << "\n";
        }
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
