#pragma once

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "screenbem/pcg.hpp"
#include "screenbem/potential.hpp"

namespace screenbem {

using nlohmann::json;

struct ExperimentConfig {
    std::string geometry = "plus";   // builtin spec string, or a mesh file path
    bool geometry_is_file = false;
    int levels = 4;                  // refinement sweep depth (or offsets for sweeps)
    int start_level = 0;             // first refinement level of a sweep
    int coarse_levels = 1;           // number of coarse levels swept by cond
    double graded_exponent = 0.0;    // 0 = uniform
    Vec3 g_field = Vec3::Zero();
    double grid_lo = -2.0, grid_hi = 2.0;
    int grid_n = 100;
    double tol = 1e-8;
    QuadratureConfig quad;
    int threads = 1;
    unsigned seed = 0;
    bool dump_matrix = false;
    std::string out_dir = ".";

    json to_json() const
    {
        return json{{"geometry", geometry},
                    {"geometry_is_file", geometry_is_file},
                    {"levels", levels},
                    {"start_level", start_level},
                    {"coarse_levels", coarse_levels},
                    {"graded_exponent", graded_exponent},
                    {"g", {g_field.x(), g_field.y(), g_field.z()}},
                    {"grid", {{"lo", grid_lo}, {"hi", grid_hi}, {"n", grid_n}}},
                    {"tol", tol},
                    {"quad",
                     {{"far_order", quad.far_order},
                      {"singular_order", quad.singular_order},
                      {"near_threshold", quad.near_threshold}}},
                    {"threads", threads},
                    {"seed", seed},
                    {"dump_matrix", dump_matrix}};
    }
};

namespace detail {

inline std::ofstream open_output(const std::string& dir, const std::string& name)
{
    std::filesystem::create_directories(dir);
    const std::string path = (std::filesystem::path(dir) / name).string();
    std::ofstream os(path);
    if (!os) throw ValidationError("cannot open output file: " + path);
    return os;
}

inline std::string output_path(const std::string& dir, const std::string& name)
{
    return (std::filesystem::path(dir) / name).string();
}

inline void write_csv(std::ofstream& os, const ExperimentConfig& cfg,
                      const std::vector<std::string>& columns,
                      const std::vector<std::vector<double>>& rows)
{
    os << "# " << cfg.to_json().dump() << "\n";
    for (size_t c = 0; c < columns.size(); ++c)
        os << columns[c] << (c + 1 < columns.size() ? "," : "\n");
    for (const auto& row : rows) {
        for (size_t c = 0; c < row.size(); ++c)
            os << format_sci(row[c]) << (c + 1 < row.size() ? "," : "\n");
    }
}

inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const int n = static_cast<int>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline SurfaceMesh config_mesh(const ExperimentConfig& cfg)
{
    return cfg.geometry_is_file ? load_mesh(cfg.geometry) : make_builtin(cfg.geometry);
}

inline std::vector<Vec3> boundary_corner_points(const SurfaceMesh& m)
{
    std::vector<Vec3> corners;
    for (const auto& b : boundary(m)) corners.push_back(m.vertices[b[0]]);
    return corners;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// solve: full pipeline on one mesh, density + optional potential grid + report

struct SolveResult {
    InflatedMesh inflated;
    JumpVector density;
    PcgReport report;
    double kappa_prec = 0;  // dense value when a preconditioner was built
    std::vector<std::string> outputs;
};

inline SolveResult cmd_solve(const ExperimentConfig& cfg,
                             const std::function<Vec3(const Vec3&)>& neumann_override = nullptr)
{
    SolveResult res;
    const SurfaceMesh base = detail::config_mesh(cfg);
    const MeshLevelPair pair = refine_uniform_times(base, cfg.levels);
    SurfaceMesh mesh = pair.fine;
    if (cfg.graded_exponent > 0)
        mesh = refine_graded(mesh, detail::boundary_corner_points(base), cfg.graded_exponent);

    res.inflated = inflate(mesh);
    const GalerkinMatrix W = assemble_W(res.inflated, cfg.quad, cfg.threads);
    const auto field = neumann_override
                           ? neumann_override
                           : std::function<Vec3(const Vec3&)>(
                                 [&cfg](const Vec3&) { return cfg.g_field; });
    const RhsVector L = assemble_rhs(res.inflated, field, cfg.quad);

    std::optional<SchwarzPreconditioner> prec;
    if (cfg.levels >= 1 && cfg.graded_exponent <= 0) {
        const InflatedMesh coarse = inflate(pair.coarse);
        const Prolongation P = build_prolongation(pair, coarse, res.inflated);
        prec = build_preconditioner(W, partition_dofs(pair, res.inflated), P);
    }
    res.report = pcg(W, prec ? &*prec : nullptr, L, cfg.tol);
    if (!res.report.converged) throw NumericalError("solver did not converge");
    res.density = res.report.solution;

    if (cfg.dump_matrix) {
        std::filesystem::create_directories(cfg.out_dir);
        dump_matrix_binary(W, detail::output_path(cfg.out_dir, "w.bin"));
        dump_matrix_text(W, detail::output_path(cfg.out_dir, "w.mm"));
        res.outputs.push_back(detail::output_path(cfg.out_dir, "w.bin"));
        res.outputs.push_back(detail::output_path(cfg.out_dir, "w.mm"));
    }

    // density CSV: vertex coordinates, branch index, coefficient
    {
        std::ofstream os = detail::open_output(cfg.out_dir, "density.csv");
        std::vector<std::vector<double>> rows;
        for (int d = 0; d < res.inflated.num_jump_dofs(); ++d) {
            const auto [v, j] = res.inflated.jump_dofs[d];
            const Vec3 p = mesh.vertices[v];
            rows.push_back({p.x(), p.y(), p.z(), static_cast<double>(j), res.density[d]});
        }
        detail::write_csv(os, cfg, {"x", "y", "z", "branch", "value"}, rows);
        res.outputs.push_back(detail::output_path(cfg.out_dir, "density.csv"));
    }

    if (cfg.grid_n > 0 && mesh.dim == 2) {
        const EvaluationGrid grid = make_cartesian_grid(
            mesh, cfg.grid_lo, cfg.grid_hi, cfg.grid_n, cfg.grid_n,
            0.5 * mesh.max_facet_diameter());
        const Eigen::VectorXd u = eval_DL(res.density, res.inflated, grid, cfg.quad, cfg.threads);
        std::ofstream os = detail::open_output(cfg.out_dir, "potential.csv");
        std::vector<std::vector<double>> rows;
        for (size_t i = 0; i < grid.points.size(); ++i)
            rows.push_back({grid.points[i].x(), grid.points[i].y(), u[i]});
        detail::write_csv(os, cfg, {"x", "y", "value"}, rows);
        res.outputs.push_back(detail::output_path(cfg.out_dir, "potential.csv"));
    }

    {
        json rep{{"config", cfg.to_json()},
                 {"dofs", res.inflated.num_jump_dofs()},
                 {"iterations", res.report.iterations},
                 {"converged", res.report.converged},
                 {"kappa_estimate_lanczos", res.report.kappa_estimate},
                 {"kappa_estimate_note", "approximate"},
                 {"residual_history", res.report.residual_history},
                 {"outputs", res.outputs}};
        std::ofstream os = detail::open_output(cfg.out_dir, "report.json");
        os << rep.dump(2) << "\n";
        res.outputs.push_back(detail::output_path(cfg.out_dir, "report.json"));
    }
    return res;
}

// ---------------------------------------------------------------------------
// Experiment 1: plus-screen convergence with the conformal-map solution

struct Experiment1Result {
    std::vector<double> h, error_uniform, error_graded;
    double eoc_uniform = 0;
    double eoc_graded = 0;
    std::string csv_path;
};

inline Experiment1Result cmd_experiment1(const ExperimentConfig& cfg)
{
    Experiment1Result res;
    const double exponent = cfg.graded_exponent > 0 ? cfg.graded_exponent : 2.0;
    const std::vector<Vec3> corners = {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(-1, 0, 0),
                                       Vec3(0, -1, 0)};
    const auto neumann = [](const Vec3& x) { return exact_plus_gradient(x); };

    for (int lvl = 0; lvl < cfg.levels + 1; ++lvl) {
        const int n = 5 << (cfg.start_level + lvl);
        const double h = 1.0 / n;
        res.h.push_back(h);
        for (int graded = 0; graded <= 1; ++graded) {
            SurfaceMesh m = make_plus(n);
            if (graded) m = refine_graded(m, corners, exponent);
            const InflatedMesh im = inflate(m);
            const GalerkinMatrix W = assemble_W(im, cfg.quad, cfg.threads);
            const RhsVector L = assemble_rhs(im, neumann, cfg.quad);
            const JumpVector phi = direct_solve(W, L);
            const EvaluationGrid grid = make_cartesian_grid(m, cfg.grid_lo, cfg.grid_hi,
                                                            cfg.grid_n, cfg.grid_n, h / 2);
            const Eigen::VectorXd uh = eval_DL(phi, im, grid, cfg.quad, cfg.threads);
            const double err = grid_error(uh, exact_plus_solution(grid));
            (graded ? res.error_graded : res.error_uniform).push_back(err);
        }
    }

    std::vector<double> lh, lu, lg;
    for (size_t i = 0; i < res.h.size(); ++i) {
        lh.push_back(std::log(res.h[i]));
        lu.push_back(std::log(res.error_uniform[i]));
        lg.push_back(std::log(res.error_graded[i]));
    }
    res.eoc_uniform = detail::fit_slope(lh, lu);
    res.eoc_graded = detail::fit_slope(lh, lg);

    std::vector<std::vector<double>> rows;
    for (size_t i = 0; i < res.h.size(); ++i)
        rows.push_back({res.h[i], res.error_uniform[i], res.error_graded[i]});
    std::ofstream os = detail::open_output(cfg.out_dir, "exp1.csv");
    detail::write_csv(os, cfg, {"h", "error_uniform", "error_graded"}, rows);
    os << "# eoc_uniform=" << format_sci(res.eoc_uniform)
       << " eoc_graded=" << format_sci(res.eoc_graded) << "\n";
    res.csv_path = detail::output_path(cfg.out_dir, "exp1.csv");
    return res;
}

// ---------------------------------------------------------------------------
// Condition-number sweeps (experiments 2 and 3 and the generic cond command)

struct CondRow {
    double H, h;
    int dofs;
    double kappa_unprec, kappa_prec, lambda_min, lambda_max;
};

struct CondResult {
    std::vector<CondRow> rows;
    std::string csv_path;
};

// For each coarse level, sweeps fine offsets 0..levels (offset 0 is the
// degenerate H = h configuration).
inline CondResult run_cond_sweep(const ExperimentConfig& cfg, const std::string& csv_name)
{
    CondResult res;
    const SurfaceMesh base = detail::config_mesh(cfg);
    for (int c = 0; c < cfg.coarse_levels; ++c) {
        const SurfaceMesh coarse_mesh =
            refine_uniform_times(base, cfg.start_level + c).fine;
        for (int off = 0; off <= cfg.levels; ++off) {
            const MeshLevelPair pair = refine_uniform_times(coarse_mesh, off);
            const InflatedMesh imc = inflate(pair.coarse);
            const InflatedMesh imf = inflate(pair.fine);
            if (imf.num_jump_dofs() == 0) continue;  // no jump space at this level yet
            const GalerkinMatrix W = assemble_W(imf, cfg.quad, cfg.threads);
            const SpectrumResult raw = condition_number(W);
            const Prolongation P = build_prolongation(pair, imc, imf);
            const SchwarzPreconditioner prec =
                build_preconditioner(W, partition_dofs(pair, imf), P);
            const SpectrumResult sp = condition_number(W, prec);
            res.rows.push_back({pair.H, pair.h, imf.num_jump_dofs(), raw.kappa, sp.kappa,
                                sp.lambda_min, sp.lambda_max});
        }
    }
    std::vector<std::vector<double>> rows;
    for (const auto& r : res.rows)
        rows.push_back({r.H, r.h, static_cast<double>(r.dofs), r.kappa_unprec, r.kappa_prec,
                        r.lambda_min, r.lambda_max});
    std::ofstream os = detail::open_output(cfg.out_dir, csv_name);
    detail::write_csv(os, cfg,
                      {"H", "h", "dofs", "kappa_unprec", "kappa_prec", "lambda_min",
                       "lambda_max"},
                      rows);
    res.csv_path = detail::output_path(cfg.out_dir, csv_name);
    return res;
}

inline CondResult cmd_experiment2(ExperimentConfig cfg)
{
    cfg.geometry = "threefold";
    cfg.geometry_is_file = false;
    if (cfg.start_level == 0) cfg.start_level = 2;
    return run_cond_sweep(cfg, "exp2.csv");
}

inline CondResult cmd_experiment3(ExperimentConfig cfg)
{
    cfg.geometry = "bowtie";
    cfg.geometry_is_file = false;
    return run_cond_sweep(cfg, "exp3.csv");
}

// ---------------------------------------------------------------------------
// SVG line plots of CSV columns (log-log), byte-deterministic.

inline void emit_plot(const std::string& csv_path, const std::string& svg_path)
{
    std::ifstream is(csv_path);
    if (!is) throw ValidationError("cannot open CSV: " + csv_path);
    std::string line;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string cell;
        if (columns.empty()) {
            while (std::getline(ss, cell, ',')) columns.push_back(cell);
            continue;
        }
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() == columns.size()) rows.push_back(row);
    }
    if (columns.size() < 2 || rows.empty())
        throw ValidationError("CSV has no plottable columns/rows: " + csv_path);

    const int W = 640, H = 480, ML = 70, MR = 150, MT = 20, MB = 50;
    double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
    for (const auto& r : rows) {
        if (r[0] <= 0) throw ValidationError("log plot needs positive abscissae");
        xlo = std::min(xlo, r[0]);
        xhi = std::max(xhi, r[0]);
        for (size_t c = 1; c < r.size(); ++c) {
            if (r[c] <= 0) continue;
            ylo = std::min(ylo, r[c]);
            yhi = std::max(yhi, r[c]);
        }
    }
    if (xlo == xhi) xhi = xlo * 2;
    if (ylo > yhi) throw ValidationError("no positive data to plot");
    if (ylo == yhi) yhi = ylo * 2;

    auto px = [&](double x) {
        return ML + (std::log(x) - std::log(xlo)) / (std::log(xhi) - std::log(xlo)) *
                        (W - ML - MR);
    };
    auto py = [&](double y) {
        return H - MB -
               (std::log(y) - std::log(ylo)) / (std::log(yhi) - std::log(ylo)) *
                   (H - MT - MB);
    };
    const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\">\n";
    svg << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"none\" "
                  "stroke=\"black\"/>\n",
                  ML, MT, W - ML - MR, H - MT - MB);
    svg << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%d\" y=\"%d\" font-size=\"12\">%s (log)</text>\n", ML,
                  H - MB + 35, columns[0].c_str());
    svg << buf;
    // axis extent labels
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%d\" y=\"%d\" font-size=\"10\">%.3e</text>\n", ML - 8,
                  H - MB + 14, xlo);
    svg << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%d\" y=\"%d\" font-size=\"10\">%.3e</text>\n", W - MR - 30,
                  H - MB + 14, xhi);
    svg << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%d\" y=\"%d\" font-size=\"10\">%.3e</text>\n", 4, H - MB, ylo);
    svg << buf;
    std::snprintf(buf, sizeof(buf), "<text x=\"%d\" y=\"%d\" font-size=\"10\">%.3e</text>\n",
                  4, MT + 12, yhi);
    svg << buf;

    for (size_t c = 1; c < columns.size(); ++c) {
        svg << "<polyline fill=\"none\" stroke=\"" << palette[(c - 1) % 6]
            << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& r : rows) {
            if (r[c] <= 0) continue;
            std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px(r[0]), py(r[c]));
            svg << buf;
        }
        svg << "\"/>\n";
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%d\" y=\"%zu\" font-size=\"12\" fill=\"%s\">%s</text>\n",
                      W - MR + 10, MT + 20 * c, palette[(c - 1) % 6], columns[c].c_str());
        svg << buf;
    }
    svg << "</svg>\n";

    std::ofstream os(svg_path);
    if (!os) throw ValidationError("cannot open SVG output: " + svg_path);
    os << svg.str();
}

// JSON summary of an inflated mesh for the `inflate` subcommand.
inline json inflate_summary(const InflatedMesh& im)
{
    std::map<int, int> histogram;
    for (int v = 0; v < im.base.num_vertices(); ++v) ++histogram[im.q[v]];
    json h = json::object();
    for (const auto& [q, count] : histogram) h[std::to_string(q)] = count;
    return json{{"vertices", im.base.num_vertices()},
                {"facets", im.base.num_facets()},
                {"oriented_facets", im.num_oriented()},
                {"q_histogram", h},
                {"jump_dofs", im.num_jump_dofs()}};
}

}  // namespace screenbem
