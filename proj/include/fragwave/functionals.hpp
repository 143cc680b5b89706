// Test functionals for the laws of large numbers. The growth envelope is
// declared, not inferred: the theorem hypotheses cannot be checked from a
// black-box function.

#ifndef FRAGWAVE_FUNCTIONALS_HPP
#define FRAGWAVE_FUNCTIONALS_HPP

#include <functional>
#include <string>
#include <vector>

namespace fragwave {

class SpectralProfile;

struct TestFunctional {
    // Bounded: |f| <= c. AnyEps: |f(x)| <= c_eps e^{eps x} for every eps > 0
    // (polynomial growth). ExpGrowth: |f(x)| <= c e^{eps x} for a fixed eps.
    enum class Envelope { Bounded, AnyEps, ExpGrowth };

    std::string name;
    std::function<double(double)> f;  // f(0) == 0
    std::function<double(double)> F;  // antiderivative, F(x) = int_0^x f
    Envelope envelope = Envelope::Bounded;
    double envelope_eps = 0.0;
    double envelope_c = 1.0;

    static TestFunctional identity();
    static TestFunctional indicator();            // of (0, inf)
    static TestFunctional exp_eps(double eps);    // f(x) = e^{eps x} - 1
    static TestFunctional zero();
    static TestFunctional bounded_custom_grid(std::vector<double> xs,
                                              std::vector<double> ys);
    // lookup used by the experiment config; param feeds exp_eps
    static TestFunctional by_name(const std::string& name, double param = 0.0);
};

// envelope admissibility for tilt p: requires |phi(p - eps)| < inf
bool envelope_admissible(const TestFunctional& f, const SpectralProfile& profile, double p);
void require_admissible(const TestFunctional& f, const SpectralProfile& profile, double p);

} // namespace fragwave

#endif
