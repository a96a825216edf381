#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "screenbem/potential.hpp"

using namespace screenbem;

namespace {

EvaluationGrid point(const Vec3& p)
{
    EvaluationGrid g;
    g.points = {p};
    return g;
}

JumpVector random_density(const InflatedMesh& im, unsigned seed)
{
    std::mt19937 rng(seed);
    std::normal_distribution<double> dist;
    JumpVector v(im.num_jump_dofs());
    for (int i = 0; i < v.size(); ++i) v[i] = dist(rng);
    return v;
}

}  // namespace

TEST_CASE("conformal-map reference solution")
{
    SUBCASE("z = 2 maps to w = 2 + sqrt(3)")
    {
        const std::complex<double> w = detail::plus_map_w({2.0, 0.0});
        CHECK(std::abs(w - std::complex<double>(2.0 + std::sqrt(3.0), 0.0)) < 1e-14);
        CHECK(std::abs(0.5 * (w + 1.0 / w) - std::complex<double>(2.0, 0.0)) < 1e-14);
    }
    SUBCASE("|w| > 1 off the slit")
    {
        std::mt19937 rng(1);
        std::uniform_real_distribution<double> uni(-3, 3);
        for (int i = 0; i < 200; ++i) {
            const std::complex<double> z(uni(rng), uni(rng));
            if (std::abs(z.imag()) < 1e-3 && std::abs(z.real()) < 1.1) continue;
            CHECK(std::abs(detail::plus_map_w(z)) > 1.0);
        }
    }
    SUBCASE("jump across the slit is sqrt(1-x^2)")
    {
        for (double x : {0.0, 0.3, -0.62}) {
            const double eps = 1e-9;
            const double above = exact_plus_solution(Vec3(x, eps, 0));
            const double below = exact_plus_solution(Vec3(x, -eps, 0));
            CHECK(above - below == doctest::Approx(std::sqrt(1.0 - x * x)).epsilon(1e-6));
        }
        // at x = 0 the jump is exactly 1
        CHECK(exact_plus_solution(Vec3(0, 1e-10, 0)) - exact_plus_solution(Vec3(0, -1e-10, 0)) ==
              doctest::Approx(1.0).epsilon(1e-7));
    }
    SUBCASE("decay: U ~ Re(-1/(4iz)) for large z")
    {
        for (double r : {50.0, 100.0}) {
            const Vec3 p(r * 0.6, r * 0.8, 0);
            const std::complex<double> z(p.x(), p.y());
            const double asym = std::real(std::complex<double>(0, -1) / (4.0 * z) *
                                          std::complex<double>(0, 0) +
                                          std::complex<double>(0, 1) / (4.0 * z));
            // Re(-1/(4iz)) = Re(i/(4z))
            CHECK(exact_plus_solution(p) == doctest::Approx(asym).epsilon(1e-3));
        }
    }
    SUBCASE("on-slit evaluation is rejected")
    {
        CHECK_THROWS_AS(exact_plus_solution(Vec3(0.5, 0.0, 0)), ValidationError);
    }
    SUBCASE("gradient matches finite differences off the slit")
    {
        std::mt19937 rng(2);
        std::uniform_real_distribution<double> uni(-2, 2);
        int tested = 0;
        while (tested < 50) {
            const Vec3 p(uni(rng), uni(rng), 0);
            if (std::abs(p.y()) < 0.05 && std::abs(p.x()) < 1.2) continue;
            if (p.norm() < 0.05) continue;
            const double d = 1e-6;
            const Vec3 g = exact_plus_gradient(p);
            const double gx = (exact_plus_solution(p + Vec3(d, 0, 0)) -
                               exact_plus_solution(p - Vec3(d, 0, 0))) /
                              (2 * d);
            const double gy = (exact_plus_solution(p + Vec3(0, d, 0)) -
                               exact_plus_solution(p - Vec3(0, d, 0))) /
                              (2 * d);
            CHECK(g.x() == doctest::Approx(gx).epsilon(1e-5));
            CHECK(g.y() == doctest::Approx(gy).epsilon(1e-5));
            ++tested;
        }
    }
    SUBCASE("normal trace is continuous across the vertical arm")
    {
        for (double y : {0.3, -0.7}) {
            const Vec3 gl = exact_plus_gradient(Vec3(-1e-9, y, 0));
            const Vec3 gr = exact_plus_gradient(Vec3(1e-9, y, 0));
            CHECK(gl.x() == doctest::Approx(gr.x()).epsilon(1e-5));  // n = (1,0)
        }
    }
}

TEST_CASE("double-layer potential")
{
    QuadratureConfig cfg;

    SUBCASE("zero density gives the zero field")
    {
        const InflatedMesh im = inflate(make_builtin("plus:2"));
        const EvaluationGrid g = make_cartesian_grid(im.base, -2, 2, 7, 7, 0.05);
        const Eigen::VectorXd u =
            eval_DL(JumpVector::Zero(im.num_jump_dofs()), im, g, cfg);
        CHECK(u.cwiseAbs().maxCoeff() == 0.0);
    }

    SUBCASE("single-trace densities are annihilated exactly")
    {
        const InflatedMesh im = inflate(make_builtin("bowtie:1"));
        // hand-build single-trace nodal data and push through the facet sum
        // via the jump vector of the difference: jump coordinates are zero,
        // so eval_DL sees a zero density; verify on top of that with a direct
        // two-copy difference at machine precision
        TraceField tf;
        tf.coeff = Eigen::VectorXd::Zero(im.num_gvertices());
        for (int v = 0; v < im.base.num_vertices(); ++v)
            for (int j = 0; j < im.q[v]; ++j) tf.coeff[im.gv_index(v, j)] = std::cos(0.7 * v);
        const JumpVector coords = jump_coordinates(tf, im);
        CHECK(coords.cwiseAbs().maxCoeff() < 1e-14);
        const EvaluationGrid g = point(Vec3(0.4, 0.4, 0.9));
        const Eigen::VectorXd u = eval_DL(coords, im, g, cfg);
        CHECK(std::abs(u[0]) < 1e-8);
    }

    SUBCASE("linearity in the density")
    {
        const InflatedMesh im = inflate(make_builtin("threefold:2"));
        const EvaluationGrid g = make_cartesian_grid(im.base, -2, 2, 5, 5, 0.07);
        const JumpVector a = random_density(im, 3), b = random_density(im, 4);
        const Eigen::VectorXd ua = eval_DL(a, im, g, cfg);
        const Eigen::VectorXd ub = eval_DL(b, im, g, cfg);
        const Eigen::VectorXd uab = eval_DL(2.0 * a - 0.5 * b, im, g, cfg);
        CHECK((uab - (2.0 * ua - 0.5 * ub)).cwiseAbs().maxCoeff() <
              1e-12 * (1.0 + ua.cwiseAbs().maxCoeff()));
    }

    SUBCASE("jump relation at facet barycenters (2D and 3D)")
    {
        int geom_idx = 0;
        for (const char* spec : {"plus:4", "bowtie:1"}) {
            const InflatedMesh im = inflate(make_builtin(spec));
            const JumpVector v = random_density(im, 17 + geom_idx++);
            const TraceField tf = expand(v, im);
            const double h = im.base.max_facet_diameter();
            const double eps = 1e-3 * h;
            std::mt19937 rng(23);
            std::uniform_int_distribution<int> pick(0, im.base.num_facets() - 1);
            for (int trial = 0; trial < 10; ++trial) {
                const int f = pick(rng);
                const Vec3 x0 = im.base.facet_centroid(f);
                const Vec3 n0 = im.oriented_facets[2 * f].normal;
                const double bary = (im.base.dim == 2) ? 0.5 : 1.0 / 3.0;
                const double jump = tf.eval(im, 2 * f + 1, bary, bary) -
                                    tf.eval(im, 2 * f, bary, bary);
                const Eigen::VectorXd up = eval_DL(v, im, point(x0 + eps * n0), cfg);
                const Eigen::VectorXd um = eval_DL(v, im, point(x0 - eps * n0), cfg);
                CHECK(up[0] - um[0] == doctest::Approx(jump).epsilon(0.01));
            }
        }
    }

    SUBCASE("far-field decay along a ray")
    {
        const InflatedMesh im = inflate(make_builtin("bowtie:1"));
        const JumpVector v = random_density(im, 5);
        const Vec3 dir = Vec3(1, 2, 0.5).normalized();
        double prev = 1e300;
        for (double r : {10.0, 20.0, 40.0}) {
            const Eigen::VectorXd u = eval_DL(v, im, point(r * dir), cfg);
            const double bound = std::abs(u[0]) * r;
            CHECK(bound < 10.0 * std::abs(v.sum() + 1.0));  // |U| * r stays bounded
            CHECK(bound < prev * 2.5);
            prev = bound;
        }
    }

    SUBCASE("harmonicity probe: 5-point Laplacian is O(spacing^2)")
    {
        const InflatedMesh im = inflate(make_builtin("plus:2"));
        const JumpVector v = random_density(im, 8);
        const Vec3 c(0.8, 0.9, 0);
        double prev_ratio = 0;
        for (double sp : {0.02, 0.01}) {
            EvaluationGrid g;
            g.points = {c, c + Vec3(sp, 0, 0), c - Vec3(sp, 0, 0), c + Vec3(0, sp, 0),
                        c - Vec3(0, sp, 0)};
            const Eigen::VectorXd u = eval_DL(v, im, g, cfg);
            const double lap = (u[1] + u[2] + u[3] + u[4] - 4 * u[0]) / (sp * sp);
            // the discrete Laplacian of a harmonic field vanishes to O(sp^2)
            CHECK(std::abs(lap) < 1.0);
            if (prev_ratio != 0) CHECK(std::abs(lap) < prev_ratio);
            prev_ratio = std::abs(lap);
        }
    }

    SUBCASE("symmetric geometry and density give a symmetric field")
    {
        const InflatedMesh im = inflate(make_builtin("plus:2"));
        // excite only the center vertical-vs-horizontal jumps symmetrically:
        // a density even under (x,y) -> (-x,y) produces an even field
        JumpVector v = JumpVector::Zero(im.num_jump_dofs());
        // use the first interior vertex on the +x arm and its mirror on -x
        int vp = -1, vm = -1;
        for (int vi = 0; vi < im.base.num_vertices(); ++vi) {
            if ((im.base.vertices[vi] - Vec3(0.5, 0, 0)).norm() < 1e-12) vp = vi;
            if ((im.base.vertices[vi] - Vec3(-0.5, 0, 0)).norm() < 1e-12) vm = vi;
        }
        REQUIRE(vp >= 0);
        REQUIRE(vm >= 0);
        // the stored arm directions run outward, so the side-0 normals of the
        // two arms are mirror images with opposite y: equal coefficients give
        // a mirror-odd density and hence a mirror-odd field
        v[im.dof_index(vp, 0)] = 1.0;
        v[im.dof_index(vm, 0)] = 1.0;
        const Eigen::VectorXd u =
            eval_DL(v, im, {{Vec3(0.7, 0.43, 0), Vec3(-0.7, 0.43, 0)}}, QuadratureConfig{});
        CHECK(u[0] == doctest::Approx(-u[1]).epsilon(1e-8));
    }

    SUBCASE("on-screen evaluation point is rejected")
    {
        const InflatedMesh im = inflate(make_builtin("plus"));
        CHECK_THROWS_AS(eval_DL(JumpVector::Zero(im.num_jump_dofs()), im,
                                point(Vec3(0.25, 0, 0)), cfg),
                        ValidationError);
    }
}

TEST_CASE("grid error")
{
    Eigen::VectorXd a(4), b(4);
    a << 1, 2, 3, 4;
    b = a;
    CHECK(grid_error(a, b) == 0.0);
    b.array() += 0.5;  // constant offset c on n points -> |c|
    CHECK(grid_error(a, b) == doctest::Approx(0.5));
    Eigen::VectorXd c(3);
    CHECK_THROWS_AS(grid_error(a, c), ValidationError);
}
