#include "fragwave/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "fragwave/dislocation.hpp"

namespace fragwave {

TestFunctional TestFunctional::identity() {
    TestFunctional t;
    t.name = "identity";
    t.f = [](double x) { return x; };
    t.F = [](double x) { return 0.5 * x * x; };
    t.envelope = Envelope::AnyEps;
    return t;
}

TestFunctional TestFunctional::indicator() {
    TestFunctional t;
    t.name = "indicator";
    t.f = [](double x) { return x > 0.0 ? 1.0 : 0.0; };
    t.F = [](double x) { return std::max(x, 0.0); };
    t.envelope = Envelope::Bounded;
    return t;
}

TestFunctional TestFunctional::exp_eps(double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("exp_eps: eps must be positive");
    TestFunctional t;
    t.name = "exp_eps";
    t.f = [eps](double x) { return std::expm1(eps * x); };
    t.F = [eps](double x) { return (std::expm1(eps * x) - eps * x) / eps; };
    t.envelope = Envelope::ExpGrowth;
    t.envelope_eps = eps;
    return t;
}

TestFunctional TestFunctional::zero() {
    TestFunctional t;
    t.name = "zero";
    t.f = [](double) { return 0.0; };
    t.F = [](double) { return 0.0; };
    t.envelope = Envelope::Bounded;
    t.envelope_c = 0.0;
    return t;
}

TestFunctional TestFunctional::bounded_custom_grid(std::vector<double> xs,
                                                   std::vector<double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("bounded_custom_grid: need >= 2 paired points");
    if (xs.front() != 0.0 || ys.front() != 0.0)
        throw std::invalid_argument("bounded_custom_grid: grid must start at (0, 0)");
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (!(xs[i] > xs[i - 1]))
            throw std::invalid_argument("bounded_custom_grid: x values must ascend");

    // piecewise-linear f, constant beyond the last knot; F by exact
    // trapezoid accumulation
    auto cumulative = std::make_shared<std::vector<double>>(xs.size(), 0.0);
    for (std::size_t i = 1; i < xs.size(); ++i)
        (*cumulative)[i] = (*cumulative)[i - 1] +
                           0.5 * (ys[i] + ys[i - 1]) * (xs[i] - xs[i - 1]);
    auto gx = std::make_shared<std::vector<double>>(std::move(xs));
    auto gy = std::make_shared<std::vector<double>>(std::move(ys));

    auto eval = [gx, gy](double x) {
        if (x <= 0.0) return 0.0;
        if (x >= gx->back()) return gy->back();
        const std::size_t i =
            std::upper_bound(gx->begin(), gx->end(), x) - gx->begin();
        const double t = (x - (*gx)[i - 1]) / ((*gx)[i] - (*gx)[i - 1]);
        return (*gy)[i - 1] + t * ((*gy)[i] - (*gy)[i - 1]);
    };
    double max_abs = 0.0;
    for (double v : *gy) max_abs = std::max(max_abs, std::abs(v));
    TestFunctional t;
    t.name = "bounded_custom_grid";
    t.envelope_c = max_abs;
    t.f = eval;
    t.F = [gx, gy, cumulative, eval](double x) {
        if (x <= 0.0) return 0.0;
        if (x >= gx->back())
            return cumulative->back() + gy->back() * (x - gx->back());
        const std::size_t i =
            std::upper_bound(gx->begin(), gx->end(), x) - gx->begin();
        const double fl = (*gy)[i - 1], fx = eval(x);
        return (*cumulative)[i - 1] + 0.5 * (fl + fx) * (x - (*gx)[i - 1]);
    };
    t.envelope = Envelope::Bounded;
    return t;
}

TestFunctional TestFunctional::by_name(const std::string& name, double param) {
    if (name == "identity") return identity();
    if (name == "indicator") return indicator();
    if (name == "exp_eps") return exp_eps(param);
    if (name == "zero") return zero();
    throw std::invalid_argument("TestFunctional: unknown functional '" + name + "'");
}

bool envelope_admissible(const TestFunctional& f, const SpectralProfile& profile,
                         double p) {
    switch (f.envelope) {
        case TestFunctional::Envelope::Bounded:
            return true;
        case TestFunctional::Envelope::AnyEps:
            return p > profile.p_lower();
        case TestFunctional::Envelope::ExpGrowth:
            return p - f.envelope_eps > profile.p_lower();
    }
    return false;
}

void require_admissible(const TestFunctional& f, const SpectralProfile& profile,
                        double p) {
    if (!envelope_admissible(f, profile, p))
        throw std::domain_error("functional '" + f.name +
                                "' has inadmissible growth envelope at p = " +
                                std::to_string(p) + " (needs |phi(p - eps)| < inf)");
}

} // namespace fragwave
