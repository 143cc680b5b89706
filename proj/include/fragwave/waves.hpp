// Travelling-wave candidates built from martingale-limit samples, their
// L-transform, the travelling-wave residual operator, and wave-speed
// classification.

#ifndef FRAGWAVE_WAVES_HPP
#define FRAGWAVE_WAVES_HPP

#include <functional>
#include <vector>

#include "fragwave/dislocation.hpp"

namespace fragwave {

// Tabulated monotone wave with pointwise standard errors. Off-grid
// evaluation: monotone piecewise-linear inside; constant-L continuation on
// the left; 1 - k e^{-(p+1)x} tail on the right.
struct WaveFunction {
    double p = 0.0;
    std::vector<double> grid;    // ascending, uniform step
    std::vector<double> values;  // psi in (0,1], nondecreasing
    std::vector<double> se;      // zero for exact waves

    double eval(double x) const;
    double grid_step() const { return grid[1] - grid[0]; }
};

std::vector<double> default_wave_grid(double p);

// psi_hat(x) = mean over samples of exp(-e^{-(p+1)x} Delta); requires
// >= 1000 samples, all nonnegative, and a grid covering the transition.
WaveFunction estimate_wave(const std::vector<double>& delta_samples, double p,
                           const std::vector<double>& grid);

// exact wave for degenerate Delta == 1 (and the p = 0 conservative wave)
WaveFunction gumbel_wave(double p, const std::vector<double>& grid);

enum class WaveRegime { SubCritical, Critical };

struct LTransform {
    double p = 0.0;
    std::vector<double> grid, values, se;
    double k_estimate = 0.0;
    WaveRegime regime = WaveRegime::SubCritical;
};

// L_p(x) = e^{(p+1)x} (1 - psi(x)); throws on monotonicity violations
// beyond twice the pointwise noise. k from the tail (sub-critical) or the
// slope of L against x (critical).
LTransform l_transform(const WaveFunction& wave,
                       WaveRegime regime = WaveRegime::SubCritical);

struct FkppResidual {
    double value = 0.0;
    double neglected_bound = 0.0;  // parts below the ratio floor, skipped
};

// A_p psi(x) = -c psi'(x) + int { prod_i psi(x - log s_i) - psi(x) } nu(ds),
// psi' by central difference with the grid step; x must sit two grid steps
// inside the tabulation.
FkppResidual fkpp_residual(const WaveFunction& wave, const SpectralProfile& profile,
                           double x, double c);

// same operator on an arbitrary evaluator (used for exact waves)
FkppResidual fkpp_residual_eval(const std::function<double(double)>& psi, double fd_step,
                                const SpectralProfile& profile, double x, double c);

struct ResidualWithSE {
    double value = 0.0;
    double std_error = 0.0;
    double neglected_bound = 0.0;
};

// residual of the estimated wave evaluated directly from the delta samples,
// with a delta-method standard error propagated through the product
ResidualWithSE fkpp_residual_se(const std::vector<double>& delta_samples, double p,
                                const SpectralProfile& profile, double x, double c,
                                double fd_step);

enum class SpeedLabel { SubCritical, Critical, SuperCritical };

struct SpeedClass {
    SpeedLabel label = SpeedLabel::SubCritical;
    double c_critical = 0.0;  // c_{p_bar}
    bool has_p = false;
    double p_solved = 0.0;  // the p with c_p = c, when sub-critical
};

SpeedClass classify_speed(const SpectralProfile& profile, double c);

} // namespace fragwave

#endif
