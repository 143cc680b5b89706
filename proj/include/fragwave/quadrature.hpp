// Gauss-Legendre quadrature with cached nodes.

#ifndef FRAGWAVE_QUADRATURE_HPP
#define FRAGWAVE_QUADRATURE_HPP

#include <cmath>
#include <cstddef>
#include <map>
#include <vector>

namespace fragwave {

struct GaussLegendre {
    std::vector<double> nodes;   // on (-1,1)
    std::vector<double> weights;
};

// Newton iteration on the Legendre recurrence (Numerical Recipes style).
inline GaussLegendre gauss_legendre_rule(int n) {
    GaussLegendre rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) * z * p2 - j * p3) / (j + 1);
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) < 1e-15) break;
        }
        rule.nodes[i] = -z;
        rule.nodes[n - 1 - i] = z;
        rule.weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        rule.weights[n - 1 - i] = rule.weights[i];
    }
    return rule;
}

inline const GaussLegendre& cached_gauss_legendre(int n) {
    static std::map<int, GaussLegendre> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, gauss_legendre_rule(n)).first;
    return it->second;
}

// fixed-node integral of f over [a,b]
template <typename F>
double gl_integrate(F&& f, double a, double b, int n) {
    const GaussLegendre& rule = cached_gauss_legendre(n);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
    return sum * half;
}

// panel-composite rule for long intervals
template <typename F>
double gl_integrate_panels(F&& f, double a, double b, int panels, int n) {
    double sum = 0.0;
    const double step = (b - a) / panels;
    for (int k = 0; k < panels; ++k)
        sum += gl_integrate(f, a + k * step, a + (k + 1) * step, n);
    return sum;
}

} // namespace fragwave

#endif
