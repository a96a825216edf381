#pragma once

#include <cmath>
#include <vector>

#include "screenbem/common.hpp"

namespace screenbem {

struct Rule1d {
    std::vector<double> x;  // nodes on [0,1]
    std::vector<double> w;  // weights summing to 1
};

// Gauss-Legendre rule on [0,1], nodes by Newton iteration on P_n.
inline Rule1d gauss_legendre(int n)
{
    Rule1d r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double p0 = 0, p1 = 0;
        for (int it = 0; it < 100; ++it) {
            p0 = 1.0;
            p1 = 0.0;
            for (int k = 0; k < n; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k + 1.0) * t * p1 - k * p2) / (k + 1.0);
            }
            const double dp = n * (t * p0 - p1) / (t * t - 1.0);
            const double dt = p0 / dp;
            t -= dt;
            if (std::abs(dt) < 1e-15) break;
        }
        p0 = 1.0;
        p1 = 0.0;
        for (int k = 0; k < n; ++k) {
            const double p2 = p1;
            p1 = p0;
            p0 = ((2.0 * k + 1.0) * t * p1 - k * p2) / (k + 1.0);
        }
        const double dp = n * (t * p0 - p1) / (t * t - 1.0);
        const double w = 2.0 / ((1.0 - t * t) * dp * dp);
        r.x[i] = 0.5 * (1.0 - t);  // descending t -> ascending x
        r.w[i] = 0.5 * w;
        r.x[n - 1 - i] = 0.5 * (1.0 + t);
        r.w[n - 1 - i] = 0.5 * w;
    }
    return r;
}

// Quadrature on the reference triangle {(u,v): u,v >= 0, u+v <= 1},
// collapsed tensor rule; weights sum to 1/2 (the reference area).
struct TriangleRule {
    std::vector<double> u, v, w;
    int size() const { return static_cast<int>(w.size()); }
};

inline TriangleRule triangle_rule(int order)
{
    const Rule1d g = gauss_legendre(order);
    TriangleRule r;
    r.u.reserve(order * order);
    r.v.reserve(order * order);
    r.w.reserve(order * order);
    for (int i = 0; i < order; ++i) {
        for (int j = 0; j < order; ++j) {
            r.u.push_back(g.x[i]);
            r.v.push_back(g.x[j] * (1.0 - g.x[i]));
            r.w.push_back(g.w[i] * g.w[j] * (1.0 - g.x[i]));
        }
    }
    return r;
}

}  // namespace screenbem
