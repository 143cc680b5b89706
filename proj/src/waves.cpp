#include "fragwave/waves.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fragwave/quadrature.hpp"
#include "fragwave/root_finding.hpp"
#include "fragwave/stats.hpp"

namespace fragwave {

namespace {

constexpr double kPartFloor = 1e-14;  // ratios below this skip the product
constexpr double kPsiFloor = 1e-300;

void validate_wave(const WaveFunction& w) {
    if (w.grid.size() < 8 || w.grid.size() != w.values.size())
        throw std::invalid_argument("WaveFunction: bad tabulation");
    for (std::size_t i = 1; i < w.grid.size(); ++i)
        if (!(w.grid[i] > w.grid[i - 1]))
            throw std::invalid_argument("WaveFunction: grid must ascend");
    for (std::size_t i = 0; i < w.values.size(); ++i) {
        if (!(w.values[i] > 0.0) || w.values[i] > 1.0)
            throw std::invalid_argument("WaveFunction: psi values must lie in (0,1]");
        if (i > 0 && w.values[i] < w.values[i - 1] - 1e-15)
            throw std::invalid_argument("WaveFunction: psi values must be nondecreasing");
    }
    if (w.values.back() < 0.999)
        throw std::domain_error("WaveFunction: psi(x_n) < 0.999, grid too short on the right");
    if (w.values.front() > 0.05)
        throw std::domain_error("WaveFunction: psi(x_0) > 0.05, grid too short on the left");
}

} // namespace

double WaveFunction::eval(double x) const {
    if (x <= grid.front()) {
        // constant-L continuation: psi = 1 - L(x_0) e^{-(p+1)x}
        const double l0 = std::exp((p + 1.0) * grid.front()) * (1.0 - values.front());
        return std::max(1.0 - l0 * std::exp(-(p + 1.0) * x), kPsiFloor);
    }
    if (x >= grid.back()) {
        // tail 1 - k e^{-(p+1)x} with k matched at the last grid point
        return 1.0 - (1.0 - values.back()) * std::exp(-(p + 1.0) * (x - grid.back()));
    }
    const std::size_t i =
        std::upper_bound(grid.begin(), grid.end(), x) - grid.begin();
    const double t = (x - grid[i - 1]) / (grid[i] - grid[i - 1]);
    return values[i - 1] + t * (values[i] - values[i - 1]);
}

std::vector<double> default_wave_grid(double p) {
    // transition width scales like 1/(p+1)
    std::vector<double> grid;
    grid.reserve(161);
    for (int j = 0; j <= 160; ++j) grid.push_back((-4.0 + 0.1 * j) / (p + 1.0));
    return grid;
}

WaveFunction estimate_wave(const std::vector<double>& delta_samples, double p,
                           const std::vector<double>& grid) {
    if (delta_samples.size() < 1000)
        throw std::invalid_argument("estimate_wave: needs >= 1000 delta samples");
    for (double d : delta_samples)
        if (!(d >= 0.0))
            throw std::invalid_argument("estimate_wave: negative delta sample");

    WaveFunction w;
    w.p = p;
    w.grid = grid;
    w.values.resize(grid.size());
    w.se.resize(grid.size());
    const double n = static_cast<double>(delta_samples.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double decay = std::exp(-(p + 1.0) * grid[j]);
        double sum = 0.0, sum2 = 0.0;
        for (double d : delta_samples) {
            const double v = std::exp(-decay * d);
            sum += v;
            sum2 += v * v;
        }
        const double mean = sum / n;
        const double var = std::max(0.0, (sum2 - n * mean * mean) / (n - 1.0));
        w.values[j] = std::min(mean, 1.0);
        w.se[j] = std::sqrt(var / n);
    }
    validate_wave(w);
    return w;
}

WaveFunction gumbel_wave(double p, const std::vector<double>& grid) {
    WaveFunction w;
    w.p = p;
    w.grid = grid;
    w.values.resize(grid.size());
    w.se.assign(grid.size(), 0.0);
    for (std::size_t j = 0; j < grid.size(); ++j)
        w.values[j] = std::exp(-std::exp(-(p + 1.0) * grid[j]));
    validate_wave(w);
    return w;
}

LTransform l_transform(const WaveFunction& wave, WaveRegime regime) {
    validate_wave(wave);
    LTransform lt;
    lt.p = wave.p;
    lt.regime = regime;
    lt.grid = wave.grid;
    const double pp1 = wave.p + 1.0;
    lt.values.resize(wave.grid.size());
    lt.se.resize(wave.grid.size());
    for (std::size_t j = 0; j < wave.grid.size(); ++j) {
        const double scale = std::exp(pp1 * wave.grid[j]);
        lt.values[j] = scale * (1.0 - wave.values[j]);
        lt.se[j] = scale * wave.se[j];
    }
    for (std::size_t j = 1; j < lt.values.size(); ++j) {
        const double slack = 2.0 * (lt.se[j] + lt.se[j - 1]);
        if (lt.values[j] < lt.values[j - 1] - slack)
            throw std::domain_error(
                "l_transform: L decreases beyond noise at x = " +
                std::to_string(lt.grid[j]) + " (not in class T2)");
    }

    if (regime == WaveRegime::SubCritical) {
        // last grid point whose relative MC noise is below 10%
        std::size_t pick = lt.values.size();
        for (std::size_t j = lt.values.size(); j-- > 0;) {
            if (lt.values[j] > 0.0 && 2.0 * lt.se[j] / lt.values[j] < 0.10) {
                pick = j;
                break;
            }
        }
        if (pick == lt.values.size())
            throw std::runtime_error("l_transform: no grid point with noise below 10%");
        lt.k_estimate = lt.values[pick];
    } else {
        // critical: L(x)/x stabilizes; fit L = k x through the top quarter
        double sxx = 0.0, sxy = 0.0;
        const std::size_t start = lt.grid.size() - lt.grid.size() / 4;
        for (std::size_t j = start; j < lt.grid.size(); ++j) {
            sxx += lt.grid[j] * lt.grid[j];
            sxy += lt.grid[j] * lt.values[j];
        }
        lt.k_estimate = sxy / sxx;
    }
    return lt;
}

namespace {

// the nu-integral of the product term, shared by the residual variants
double product_integral(const std::function<double(double)>& psi,
                        const SpectralProfile& profile, double x,
                        double* neglected_bound) {
    const DislocationMeasure& m = profile.measure();
    if (m.kind() == DislocationMeasure::Kind::UniformBinary) {
        const double psix = psi(x);
        return gl_integrate(
            [&](double s) {
                return 2.0 * (psi(x - std::log(s)) * psi(x - std::log(1.0 - s)) - psix);
            },
            0.5, 1.0, profile.quadrature_nodes());
    }
    double sum = 0.0;
    const double psix = psi(x);
    for (const auto& atom : m.atoms()) {
        double prod = 1.0;
        for (double s : atom.ratios) {
            if (s < kPartFloor) {
                // factor is 1 - O(s^{p+1}); skip it, report the log bound
                if (neglected_bound)
                    *neglected_bound += atom.weight * (1.0 - psi(x - std::log(s)));
                continue;
            }
            prod *= psi(x - std::log(s));
        }
        sum += atom.weight * (prod - psix);
    }
    return sum;
}

} // namespace

FkppResidual fkpp_residual_eval(const std::function<double(double)>& psi, double fd_step,
                                const SpectralProfile& profile, double x, double c) {
    if (!(fd_step > 0.0)) throw std::invalid_argument("fkpp_residual: bad fd step");
    FkppResidual out;
    const double dpsi = (psi(x + fd_step) - psi(x - fd_step)) / (2.0 * fd_step);
    out.value = -c * dpsi + product_integral(psi, profile, x, &out.neglected_bound);
    return out;
}

FkppResidual fkpp_residual(const WaveFunction& wave, const SpectralProfile& profile,
                           double x, double c) {
    const double h = wave.grid_step();
    if (x < wave.grid.front() + 2.0 * h || x > wave.grid.back() - 2.0 * h)
        throw std::invalid_argument(
            "fkpp_residual: x must lie two grid steps inside the tabulation");
    return fkpp_residual_eval([&wave](double u) { return wave.eval(u); }, h, profile, x, c);
}

ResidualWithSE fkpp_residual_se(const std::vector<double>& delta_samples, double p,
                                const SpectralProfile& profile, double x, double c,
                                double fd_step) {
    if (delta_samples.size() < 2)
        throw std::invalid_argument("fkpp_residual_se: needs samples");
    const double pp1 = p + 1.0;
    const std::size_t n = delta_samples.size();

    // evaluation points: FD pair, the centre, then the quadrature images
    std::vector<double> points = {x + fd_step, x - fd_step, x};
    std::vector<double> coeff_a, coeff_b;  // paired points for the product
    const DislocationMeasure& m = profile.measure();
    std::vector<double> weights;
    if (m.kind() == DislocationMeasure::Kind::UniformBinary) {
        const GaussLegendre& rule = cached_gauss_legendre(profile.quadrature_nodes());
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const double s = 0.75 + 0.25 * rule.nodes[i];
            points.push_back(x - std::log(s));
            points.push_back(x - std::log(1.0 - s));
            weights.push_back(0.25 * rule.weights[i] * 2.0);
        }
    } else {
        for (const auto& atom : m.atoms()) {
            for (double s : atom.ratios)
                if (s >= kPartFloor) points.push_back(x - std::log(s));
        }
    }

    // psi-hat and the per-sample values at every evaluation point
    std::vector<double> decay(points.size());
    for (std::size_t j = 0; j < points.size(); ++j)
        decay[j] = std::exp(-pp1 * points[j]);
    std::vector<double> mean(points.size(), 0.0);
    std::vector<double> phi(n * points.size());
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t j = 0; j < points.size(); ++j) {
            const double v = std::exp(-decay[j] * delta_samples[k]);
            phi[k * points.size() + j] = v;
            mean[j] += v;
        }
    }
    for (double& v : mean) v /= static_cast<double>(n);

    // residual value at the sample means
    auto product_value = [&](const double* vals) {
        double sum = 0.0;
        if (m.kind() == DislocationMeasure::Kind::UniformBinary) {
            for (std::size_t i = 0; i < weights.size(); ++i)
                sum += weights[i] * (vals[3 + 2 * i] * vals[3 + 2 * i + 1] - vals[2]);
        } else {
            std::size_t idx = 3;
            for (const auto& atom : m.atoms()) {
                double prod = 1.0;
                for (double s : atom.ratios)
                    if (s >= kPartFloor) prod *= vals[idx++];
                sum += atom.weight * (prod - vals[2]);
            }
        }
        return sum;
    };
    ResidualWithSE out;
    out.value = -c * (mean[0] - mean[1]) / (2.0 * fd_step) + product_value(mean.data());

    // delta method: influence of sample k through every evaluation point
    std::vector<double> infl(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double* v = &phi[k * points.size()];
        double s = -c * (v[0] - v[1]) / (2.0 * fd_step);
        if (m.kind() == DislocationMeasure::Kind::UniformBinary) {
            for (std::size_t i = 0; i < weights.size(); ++i) {
                const std::size_t a = 3 + 2 * i, b = a + 1;
                s += weights[i] * (v[a] * mean[b] + mean[a] * v[b] - v[2]);
            }
        } else {
            std::size_t idx = 3;
            for (const auto& atom : m.atoms()) {
                double prod_mean = 1.0;
                std::size_t first = idx;
                std::size_t cnt = 0;
                for (double r : atom.ratios)
                    if (r >= kPartFloor) {
                        prod_mean *= mean[idx++];
                        ++cnt;
                    }
                double term = 0.0;
                for (std::size_t j = 0; j < cnt; ++j)
                    term += v[first + j] * (prod_mean / mean[first + j]);
                s += atom.weight * (term - v[2]);
            }
        }
        infl[k] = s;
    }
    const Summary si = summarize(infl);
    out.std_error = si.std_error;
    return out;
}

SpeedClass classify_speed(const SpectralProfile& profile, double c) {
    SpeedClass out;
    out.c_critical = profile.wave_speed(profile.p_bar());
    const double tol = 1e-8 * std::max(1.0, std::abs(out.c_critical));
    if (std::abs(c - out.c_critical) <= tol) {
        out.label = SpeedLabel::Critical;
        out.has_p = true;
        out.p_solved = profile.p_bar();
        return out;
    }
    if (c > out.c_critical) {
        out.label = SpeedLabel::SuperCritical;
        return out;
    }
    out.label = SpeedLabel::SubCritical;
    // c_p is increasing on (max(p_lower,-1), p_bar]; solve c_p = c there
    const double lo = std::max(profile.p_lower(), -1.0) + 1e-9;
    if (profile.wave_speed(lo) < c) {
        out.has_p = true;
        out.p_solved = find_root_bracketed(
            [&](double p) { return profile.wave_speed(p) - c; }, lo, profile.p_bar(),
            1e-12);
    }
    return out;
}

} // namespace fragwave
