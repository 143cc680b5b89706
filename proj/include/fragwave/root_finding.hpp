// Bracketed scalar root finding (bisection with secant acceleration).

#ifndef FRAGWAVE_ROOT_FINDING_HPP
#define FRAGWAVE_ROOT_FINDING_HPP

#include <cmath>
#include <stdexcept>
#include <string>

namespace fragwave {

// Root of f on [a,b]; requires a sign change. Secant steps are tried on
// alternate iterations only, so the bracket provably halves and extreme
// endpoint values (poles nearby) cannot stall the search.
template <typename F>
double find_root_bracketed(F&& f, double a, double b, double tol, int max_iter = 400) {
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0) == (fb > 0))
        throw std::domain_error("find_root_bracketed: no sign change on [" +
                                std::to_string(a) + ", " + std::to_string(b) + "]");
    for (int it = 0; it < max_iter; ++it) {
        if (std::abs(b - a) < tol) break;
        double mid = a + 0.5 * (b - a);
        if (it % 2 == 0 && fb != fa) {
            const double s = b - fb * (b - a) / (fb - fa);
            if (s > a + 0.01 * (b - a) && s < b - 0.01 * (b - a)) mid = s;
        }
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0) == (fa > 0)) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
            fb = fm;
        }
    }
    return a + 0.5 * (b - a);
}

} // namespace fragwave

#endif
