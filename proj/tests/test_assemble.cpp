#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "screenbem/assemble.hpp"
#include "screenbem/quad_oracle.hpp"

using namespace screenbem;

namespace {

SurfaceMesh folded_two_triangle_screen()
{
    // two triangles sharing an edge at a right dihedral angle
    SurfaceMesh m;
    m.dim = 3;
    m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0.5, 1, 0), Vec3(0.5, 0, 1)};
    m.facets = {{0, 1, 2}, {0, 3, 1}};
    return m;
}

// ten facets of the once-refined bow-tie: the eight children along the median
// plus two fin middles
SurfaceMesh bowtie_patch()
{
    const SurfaceMesh full = make_builtin("bowtie:1");
    SurfaceMesh m;
    m.dim = 3;
    m.vertices = full.vertices;
    // the median is edge (t0,t2) of bases 0 and 2 but (t0,t1) of bases 1 and 3
    for (int b : {0, 2}) {
        m.facets.push_back(full.facets[4 * b + 0]);
        m.facets.push_back(full.facets[4 * b + 2]);
    }
    for (int b : {1, 3}) {
        m.facets.push_back(full.facets[4 * b + 0]);
        m.facets.push_back(full.facets[4 * b + 1]);
    }
    m.facets.push_back(full.facets[3]);
    m.facets.push_back(full.facets[2 * 4 + 3]);
    // drop unused vertices
    std::vector<int> remap(full.num_vertices(), -1);
    SurfaceMesh out;
    out.dim = 3;
    for (auto& f : m.facets)
        for (int k = 0; k < 3; ++k) {
            if (remap[f[k]] < 0) {
                remap[f[k]] = out.num_vertices();
                out.vertices.push_back(full.vertices[f[k]]);
            }
            f[k] = remap[f[k]];
        }
    out.facets = m.facets;
    return out;
}

GalerkinMatrix oracle_assemble(const InflatedMesh& im, double rel_tol = 1e-9)
{
    const int n = im.num_jump_dofs();
    const int nf = im.base.num_facets();
    std::vector<std::vector<double>> I(nf, std::vector<double>(nf));
    for (int f = 0; f < nf; ++f)
        for (int g = f; g < nf; ++g) I[f][g] = I[g][f] = quad_oracle::pair_integral(im.base, f, g, rel_tol);

    std::vector<TraceField> basis;
    for (int d = 0; d < n; ++d) basis.push_back(basis_trace(im.jump_dofs[d], im));

    GalerkinMatrix W = GalerkinMatrix::Zero(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int t = 0; t < im.num_oriented(); ++t) {
                const Vec3 ca = surface_curl(im, t, basis[a]);
                if (ca.squaredNorm() == 0) continue;
                for (int u = 0; u < im.num_oriented(); ++u) {
                    const Vec3 cb = surface_curl(im, u, basis[b]);
                    W(a, b) += ca.dot(cb) * I[t / 2][u / 2];
                }
            }
    return W;
}

}  // namespace

TEST_CASE("surface curl")
{
    SUBCASE("right-angle reference triangle, hat at the origin")
    {
        SurfaceMesh m;
        m.dim = 3;
        m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
        m.facets = {{0, 1, 2}};
        const InflatedMesh im = inflate(m);
        TraceField tf;
        tf.coeff = Eigen::VectorXd::Zero(im.num_gvertices());
        // hat peaking at vertex 0 on the side-0 copy's branch
        tf.coeff[im.gv_index(0, im.branch_at(0, 0))] = 1.0;
        const int side0 = (im.oriented_facets[0].normal.z() > 0) ? 0 : 1;
        const Vec3 c = surface_curl(im, side0, tf);
        CHECK((c - Vec3(1, -1, 0)).norm() < 1e-14);
    }
    SUBCASE("constant trace has zero curl")
    {
        const InflatedMesh im = inflate(make_builtin("bowtie"));
        TraceField tf;
        tf.coeff = Eigen::VectorXd::Ones(im.num_gvertices());
        for (int o = 0; o < im.num_oriented(); ++o)
            CHECK(surface_curl(im, o, tf).norm() < 1e-13);
    }
    SUBCASE("flipping the side negates the curl")
    {
        const InflatedMesh im = inflate(make_builtin("bowtie:1"));
        std::mt19937 rng(3);
        std::normal_distribution<double> dist;
        JumpVector v(im.num_jump_dofs());
        for (int i = 0; i < v.size(); ++i) v[i] = dist(rng);
        const TraceField tf = expand(v, im);
        for (int f = 0; f < im.base.num_facets(); ++f) {
            // same nodal data on both sides: curl flips with the normal
            TraceField sym = tf;
            for (int k = 0; k < 3; ++k) {
                const int vtx = im.base.facets[f][k];
                sym.coeff[im.gv_index(vtx, im.branch_at(2 * f + 1, k))] =
                    sym.coeff[im.gv_index(vtx, im.branch_at(2 * f, k))];
            }
            const Vec3 c0 = surface_curl(im, 2 * f, sym);
            const Vec3 c1 = surface_curl(im, 2 * f + 1, sym);
            CHECK((c0 + c1).norm() < 1e-12 * (1.0 + c0.norm()));
        }
    }
}

TEST_CASE("closed-form triangle potential integral agrees with brute force")
{
    const std::array<Vec3, 3> tri = {Vec3(0, 0, 0), Vec3(1.2, 0.1, 0), Vec3(0.3, 0.9, 0)};
    const TriangleRule r = triangle_rule(16);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> uni(-2, 2);
    for (int trial = 0; trial < 20; ++trial) {
        const Vec3 x(uni(rng), uni(rng), uni(rng) + ((trial % 2) ? 2.5 : -2.5));
        double gauss = 0;
        for (int i = 0; i < r.size(); ++i) {
            const Vec3 y = tri[0] + r.u[i] * (tri[1] - tri[0]) + r.v[i] * (tri[2] - tri[0]);
            gauss += r.w[i] / (x - y).norm();
        }
        gauss *= 2.0 * detail::triangle_area(tri);
        const double closed = quad_oracle::triangle_inverse_distance_integral(tri, x);
        CHECK(closed == doctest::Approx(gauss).epsilon(1e-10));
    }
    // in-plane and on-facet points: compare against subdivided quadrature
    for (const Vec3& x : {Vec3(0.4, 0.3, 0), Vec3(-0.5, -0.5, 0), Vec3(0.4, 0.3, 0.05)}) {
        double ref = 0;
        std::function<void(std::array<Vec3, 3>, int)> rec = [&](std::array<Vec3, 3> t, int depth) {
            const double dist = detail::point_triangle_distance(x, t[0], t[1], t[2]);
            if (dist >= 2.0 * detail::triangle_diameter(t) || depth >= 24) {
                for (int i = 0; i < r.size(); ++i) {
                    const Vec3 y = t[0] + r.u[i] * (t[1] - t[0]) + r.v[i] * (t[2] - t[0]);
                    ref += 2.0 * detail::triangle_area(t) * r.w[i] / (x - y).norm();
                }
                return;
            }
            std::array<Vec3, 3> kids[4];
            detail::split4(t, kids);
            for (int k = 0; k < 4; ++k) rec(kids[k], depth + 1);
        };
        rec(tri, 0);
        CHECK(quad_oracle::triangle_inverse_distance_integral(tri, x) ==
              doctest::Approx(ref).epsilon(1e-6));
    }
}

TEST_CASE("production pair integrals match the adaptive oracle")
{
    QuadratureConfig cfg;
    const QuadratureEngine eng(cfg);

    SUBCASE("2D classes")
    {
        const SurfaceMesh m = make_builtin("plus:2");
        for (int f = 0; f < m.num_facets(); ++f)
            for (int g = f; g < m.num_facets(); ++g) {
                const double prod = pair_integral(m, f, g, eng);
                const double ref = quad_oracle::pair_integral(m, f, g, 1e-10);
                CHECK(prod == doctest::Approx(ref).epsilon(1e-8));
            }
    }
    SUBCASE("3D classes on the folded screen")
    {
        const SurfaceMesh m = refine_uniform(folded_two_triangle_screen()).fine;
        for (int f = 0; f < m.num_facets(); ++f)
            for (int g = f; g < m.num_facets(); ++g) {
                const double prod = pair_integral(m, f, g, eng);
                const double ref = quad_oracle::pair_integral(m, f, g, 1e-9);
                CHECK(prod == doctest::Approx(ref).epsilon(1e-6));
            }
    }
}

TEST_CASE("assembled matrix properties")
{
    QuadratureConfig cfg;

    SUBCASE("exact symmetry and positive definiteness on the builtins")
    {
        for (const char* spec : {"plus:2", "threefold:2", "bowtie:1"}) {
            const InflatedMesh im = inflate(make_builtin(spec));
            const GalerkinMatrix W = assemble_W(im, cfg);
            CHECK((W - W.transpose()).cwiseAbs().maxCoeff() == 0.0);
            Eigen::SelfAdjointEigenSolver<GalerkinMatrix> es(W);
            CHECK(es.eigenvalues().minCoeff() > 0);
        }
    }

    SUBCASE("single-trace rows annihilate")
    {
        const InflatedMesh im = inflate(make_builtin("threefold:2"));
        const QuadratureEngine eng(cfg);
        std::vector<TraceField> basis;
        for (int d = 0; d < im.num_jump_dofs(); ++d)
            basis.push_back(basis_trace(im.jump_dofs[d], im));
        for (int v = 0; v < im.base.num_vertices(); ++v) {
            TraceField single;
            single.coeff = Eigen::VectorXd::Zero(im.num_gvertices());
            for (int j = 0; j < im.q[v]; ++j) single.coeff[im.gv_index(v, j)] = 1.0;
            double maxrow = 0, scale = 0;
            for (int d = 0; d < im.num_jump_dofs(); ++d) {
                double entry = 0;
                for (int t = 0; t < im.num_oriented(); ++t) {
                    const Vec3 cs = surface_curl(im, t, single);
                    if (cs.squaredNorm() == 0) continue;
                    for (int u = 0; u < im.num_oriented(); ++u) {
                        const Vec3 cb = surface_curl(im, u, basis[d]);
                        if (cb.squaredNorm() == 0) continue;
                        const double I = pair_integral(im.base, t / 2, u / 2, eng);
                        entry += cs.dot(cb) * I;
                        scale += std::abs(cs.dot(cb) * I);
                    }
                }
                maxrow = std::max(maxrow, std::abs(entry));
            }
            CHECK(maxrow <= 1e-6 * std::max(scale, 1e-30));
        }
    }

    SUBCASE("entries match the oracle on the designated patches")
    {
        for (const SurfaceMesh& m :
             {refine_uniform(folded_two_triangle_screen()).fine, bowtie_patch()}) {
            const InflatedMesh im = inflate(m);
            REQUIRE(im.num_jump_dofs() > 0);
            const GalerkinMatrix W = assemble_W(im, cfg);
            const GalerkinMatrix Wo = oracle_assemble(im);
            for (int i = 0; i < W.rows(); ++i)
                for (int j = 0; j < W.cols(); ++j)
                    CHECK(W(i, j) == doctest::Approx(Wo(i, j)).epsilon(1e-6));
        }
    }

    SUBCASE("raising the singular order by two moves entries by < 1e-8 relative")
    {
        const InflatedMesh im = inflate(make_builtin("bowtie:1"));
        const GalerkinMatrix W1 = assemble_W(im, cfg);
        QuadratureConfig hi = cfg;
        hi.singular_order += 2;
        const GalerkinMatrix W2 = assemble_W(im, hi);
        const double scale = W1.cwiseAbs().maxCoeff();
        CHECK((W1 - W2).cwiseAbs().maxCoeff() < 1e-8 * scale);
    }

    SUBCASE("bit-stable across runs at a fixed worker count")
    {
        const InflatedMesh im = inflate(make_builtin("threefold:3"));
        const GalerkinMatrix W3a = assemble_W(im, cfg, 3);
        const GalerkinMatrix W3b = assemble_W(im, cfg, 3);
        CHECK((W3a - W3b).cwiseAbs().maxCoeff() == 0.0);
        const GalerkinMatrix W1 = assemble_W(im, cfg, 1);
        CHECK((W1 - W3a).cwiseAbs().maxCoeff() < 1e-13 * W1.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("load vector")
{
    QuadratureConfig cfg;

    SUBCASE("tangential field gives a zero load")
    {
        SurfaceMesh m;
        m.dim = 3;
        m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0), Vec3(0, 1, 0)};
        m.facets = {{0, 1, 2}, {0, 2, 3}};
        const InflatedMesh im = inflate(refine_uniform_times(m, 2).fine);
        const RhsVector L =
            assemble_rhs(im, [](const Vec3& x) { return Vec3(x.y(), 1.0, 0.0); }, cfg);
        CHECK(L.cwiseAbs().maxCoeff() < 1e-14);
    }

    SUBCASE("flat screen with unit normal field: twice the hat integral")
    {
        SurfaceMesh m;
        m.dim = 3;
        m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0), Vec3(0, 1, 0)};
        m.facets = {{0, 1, 2}, {0, 2, 3}};
        const SurfaceMesh fine = refine_uniform_times(m, 2).fine;
        const InflatedMesh im = inflate(fine);
        const RhsVector L = assemble_rhs(im, [](const Vec3&) { return Vec3(0, 0, 1); }, cfg);
        for (int d = 0; d < im.num_jump_dofs(); ++d) {
            const auto [v, j] = im.jump_dofs[d];
            // direct two-sided integration of the hat at v
            double hat_integral = 0;
            for (int f = 0; f < fine.num_facets(); ++f)
                for (int k = 0; k < 3; ++k)
                    if (fine.facets[f][k] == v) hat_integral += fine.facet_measure(f) / 3.0;
            CHECK(std::abs(L[d]) == doctest::Approx(2.0 * hat_integral).epsilon(1e-12));
        }
    }

    SUBCASE("non-finite field is rejected")
    {
        const InflatedMesh im = inflate(make_builtin("plus"));
        CHECK_THROWS_AS(
            assemble_rhs(im, [](const Vec3&) { return Vec3(std::nan(""), 0, 0); }, cfg),
            NumericalError);
    }
}

TEST_CASE("matrix dumps round trip")
{
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "screenbem_dump_test";
    fs::create_directories(dir);

    const InflatedMesh im = inflate(make_builtin("plus:2"));
    const GalerkinMatrix W = assemble_W(im, QuadratureConfig{});

    const std::string bin = (dir / "w.bin").string();
    dump_matrix_binary(W, bin);
    const GalerkinMatrix R = load_matrix_binary(bin);
    CHECK((W - R).cwiseAbs().maxCoeff() == 0.0);

    // binary header: magic + size
    std::ifstream is(bin, std::ios::binary);
    char head[16];
    is.read(head, 16);
    CHECK(std::memcmp(head, "SBEMW\0", 6) == 0);
    std::uint32_t n = 0;
    std::memcpy(&n, head + 8, 4);
    CHECK(n == static_cast<std::uint32_t>(W.rows()));

    const std::string txt = (dir / "w.mm").string();
    dump_matrix_text(W, txt);
    std::ifstream ts(txt);
    std::string line;
    std::getline(ts, line);
    CHECK(line == "%%MatrixMarket matrix array real general");
}
