#include "fragwave/dislocation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fragwave/quadrature.hpp"
#include "fragwave/root_finding.hpp"

namespace fragwave {

namespace {

constexpr double kConservationTol = 1e-12;

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(12);
    os << x;
    return os.str();
}

} // namespace

DislocationMeasure DislocationMeasure::discrete_atoms(std::vector<DiscreteAtom> atoms) {
    if (atoms.empty())
        throw std::invalid_argument("DislocationMeasure: needs at least one atom");
    double gamma = 0.0;
    for (std::size_t a = 0; a < atoms.size(); ++a) {
        DiscreteAtom& atom = atoms[a];
        if (!(atom.weight > 0.0) || !std::isfinite(atom.weight))
            throw std::invalid_argument("DislocationMeasure: atom " + std::to_string(a) +
                                        " has non-positive weight");
        if (atom.ratios.size() < 2)
            throw std::invalid_argument("DislocationMeasure: atom " + std::to_string(a) +
                                        " must split into >= 2 parts");
        double sum = 0.0;
        for (std::size_t i = 0; i < atom.ratios.size(); ++i) {
            const double s = atom.ratios[i];
            if (!(s > 0.0) || s > 1.0)
                throw std::invalid_argument("DislocationMeasure: atom " + std::to_string(a) +
                                            " ratio outside (0,1]");
            if (i > 0 && s > atom.ratios[i - 1] + kConservationTol)
                throw std::invalid_argument("DislocationMeasure: atom " + std::to_string(a) +
                                            " ratios not sorted descending");
            sum += s;
        }
        if (std::abs(sum - 1.0) > kConservationTol)
            throw std::invalid_argument("DislocationMeasure: atom " + std::to_string(a) +
                                        " ratios sum to " + fmt(sum) +
                                        ", not conservative");
        for (double& s : atom.ratios) s /= sum;  // scrub sub-tolerance drift
        gamma += atom.weight;
    }
    if (!std::isfinite(gamma))
        throw std::invalid_argument("DislocationMeasure: total mass not finite");

    DislocationMeasure m;
    m.kind_ = Kind::DiscreteAtoms;
    m.total_mass_ = gamma;
    m.atoms_ = std::move(atoms);
    m.cum_weights_.reserve(m.atoms_.size());
    double cum = 0.0;
    for (const auto& atom : m.atoms_) {
        cum += atom.weight;
        m.cum_weights_.push_back(cum);
    }
    m.cum_weights_.back() = gamma;
    return m;
}

DislocationMeasure DislocationMeasure::uniform_binary() {
    DislocationMeasure m;
    m.kind_ = Kind::UniformBinary;
    m.total_mass_ = 1.0;
    return m;
}

void DislocationMeasure::sample_ratios(Rng& rng, std::vector<double>& out) const {
    out.clear();
    if (kind_ == Kind::UniformBinary) {
        const double s = 0.5 + 0.5 * rng.uniform01();
        out.push_back(s);
        out.push_back(1.0 - s);
        return;
    }
    const double u = rng.uniform01() * total_mass_;
    std::size_t idx = std::lower_bound(cum_weights_.begin(), cum_weights_.end(), u) -
                      cum_weights_.begin();
    if (idx >= atoms_.size()) idx = atoms_.size() - 1;
    out.assign(atoms_[idx].ratios.begin(), atoms_[idx].ratios.end());
}

double JumpLaw::sample(Rng& rng) const {
    if (is_density) return rng.exponential(density_decay);
    const double u = rng.uniform01() * total_rate;
    std::size_t idx = std::lower_bound(cum_rates_.begin(), cum_rates_.end(), u) -
                      cum_rates_.begin();
    if (idx >= atoms.size()) idx = atoms.size() - 1;
    return atoms[idx].first;
}

double JumpLaw::mean_jump() const {
    if (is_density) return 1.0 / density_decay;
    double sum = 0.0;
    for (const auto& [x, r] : atoms) sum += x * r;
    return sum / total_rate;
}

double JumpLaw::tail_rate(double x) const {
    if (is_density) return total_rate * std::exp(-density_decay * std::max(x, 0.0));
    double sum = 0.0;
    for (const auto& [xi, r] : atoms)
        if (xi > x) sum += r;
    return sum;
}

double JumpLaw::max_jump() const {
    if (is_density) return std::numeric_limits<double>::infinity();
    return atoms.empty() ? 0.0 : atoms.back().first;
}

SpectralProfile::SpectralProfile(DislocationMeasure measure, int quadrature_nodes)
    : measure_(std::move(measure)), nodes_(quadrature_nodes) {
    if (nodes_ < 8) throw std::invalid_argument("SpectralProfile: quadrature_nodes < 8");

    // p_lower analytically per variant: probing the pole numerically is
    // unreliable. Finite ratio lists give a finite sum for every p, so -inf;
    // uniform-binary has integrable (1-s)^{p+1} exactly when p > -2.
    p_lower_ = measure_.kind() == DislocationMeasure::Kind::UniformBinary
                   ? -2.0
                   : -std::numeric_limits<double>::infinity();

    // unique root of (p+1) phi'(p) - phi(p) on the default search window
    const double lo = 1e-6, hi = 50.0;
    auto h = [this](double p) { return (p + 1.0) * phi_prime(p) - phi(p); };
    if (!(h(lo) > 0.0) || !(h(hi) < 0.0))
        throw std::domain_error("SpectralProfile: p_bar bracket not found in (" +
                                fmt(lo) + ", " + fmt(hi) + ")");
    p_bar_ = find_root_bracketed(h, lo, hi, 1e-12);

    if (std::abs(phi(0.0)) > 1e-12)
        throw std::logic_error("SpectralProfile: phi(0) != 0");
    if (std::abs((p_bar_ + 1.0) * phi_prime(p_bar_) - phi(p_bar_)) > 1e-9)
        throw std::logic_error("SpectralProfile: p_bar residual too large");

    // sampled shape checks: increasing, concave, and (p+1)phi'-phi > 0 below
    // p_bar. The latter two hold on p > -1 (the wave-relevant range); below
    // -1 the chord geometry of c_p degenerates even for valid measures.
    const double grid_lo = std::max(p_lower_ + 0.25, -0.99);
    double prev_phi = phi(grid_lo), prev_slope = 0.0;
    bool have_slope = false;
    const int n_grid = 24;
    for (int i = 1; i <= n_grid; ++i) {
        const double q0 = grid_lo + (i - 1) * (p_bar_ + 2.0 - grid_lo) / n_grid;
        const double q1 = grid_lo + i * (p_bar_ + 2.0 - grid_lo) / n_grid;
        const double f1 = phi(q1);
        const double slope = (f1 - prev_phi) / (q1 - q0);
        if (!(slope > 0.0))
            throw std::logic_error("SpectralProfile: phi not increasing near q=" + fmt(q1));
        if (have_slope && slope > prev_slope + 1e-9)
            throw std::logic_error("SpectralProfile: phi not concave near q=" + fmt(q1));
        prev_phi = f1;
        prev_slope = slope;
        have_slope = true;
        if (q1 > grid_lo && q1 < p_bar_ - 1e-6) {
            if (!((q1 + 1.0) * phi_prime(q1) - phi(q1) > 0.0))
                throw std::logic_error(
                    "SpectralProfile: (p+1)phi'(p)-phi(p) not positive at p=" + fmt(q1));
        }
    }
}

double SpectralProfile::require_line_tilt(double p) const {
    const double lo = std::max(p_lower_, -1.0);
    if (!(p > lo) || p > p_bar_ + 1e-12)
        throw std::domain_error("tilt p = " + fmt(p) + " outside (" + fmt(lo) +
                                ", p_bar = " + fmt(p_bar_) + "]");
    return wave_speed(p);
}

void SpectralProfile::require_domain(double q) const {
    if (!(q > p_lower_))
        throw std::domain_error("SpectralProfile: q = " + fmt(q) +
                                " is not above p_lower = " + fmt(p_lower_));
}

// Uniform-binary integrals. The (1-s)^{q+1} part has an endpoint singularity
// for q < -1, so it is integrated as int_0^{1/2} u^{q+1} du under u = v^8,
// which keeps the integrand Gauss-Legendre-friendly down to q near -1.9.
double SpectralProfile::phi_uniform_binary(double q, bool derivative) const {
    const double vmax = std::pow(0.5, 1.0 / 8.0);
    if (!derivative) {
        const double a = gl_integrate(
            [q](double s) { return std::pow(s, q + 1.0); }, 0.5, 1.0, nodes_);
        const double b = gl_integrate(
            [q](double v) { return 8.0 * std::pow(v, 8.0 * q + 15.0); }, 0.0, vmax, nodes_);
        return 1.0 - 2.0 * (a + b);
    }
    const double a = gl_integrate(
        [q](double s) { return std::pow(s, q + 1.0) * (-std::log(s)); }, 0.5, 1.0, nodes_);
    const double b = gl_integrate(
        [q](double v) { return 8.0 * std::pow(v, 8.0 * q + 15.0) * (-8.0 * std::log(v)); },
        0.0, vmax, nodes_);
    return 2.0 * (a + b);
}

double SpectralProfile::phi(double q) const {
    require_domain(q);
    if (q == 0.0) return 0.0;  // conservation makes this exact
    if (measure_.kind() == DislocationMeasure::Kind::UniformBinary)
        return phi_uniform_binary(q, false);
    double sum = 0.0;
    for (const auto& atom : measure_.atoms()) {
        double inner = 1.0;
        for (double s : atom.ratios) inner -= std::pow(s, q + 1.0);
        sum += atom.weight * inner;
    }
    return sum;
}

double SpectralProfile::phi_prime(double q) const {
    require_domain(q);
    if (measure_.kind() == DislocationMeasure::Kind::UniformBinary)
        return phi_uniform_binary(q, true);
    double sum = 0.0;
    for (const auto& atom : measure_.atoms()) {
        double inner = 0.0;
        for (double s : atom.ratios) inner += std::pow(s, q + 1.0) * (-std::log(s));
        sum += atom.weight * inner;
    }
    return sum;
}

double SpectralProfile::wave_speed(double p) const {
    require_domain(p);
    if (std::abs(p + 1.0) < 1e-12)
        throw std::domain_error("wave_speed: undefined at p = -1");
    return phi(p) / (p + 1.0);
}

double SpectralProfile::eta_root(double p) const {
    if (!(p > 0.0) || p > p_bar_ + 1e-12)
        throw std::domain_error("eta_root: p = " + fmt(p) + " outside (0, p_bar = " +
                                fmt(p_bar_) + "]");
    const double cp = wave_speed(p);
    auto g = [this, p, cp](double theta) { return cp * theta - phi(theta + p) + phi(p); };
    // g is convex with g(0) = 0; a positive root exists iff g'(0) < 0
    if (cp - phi_prime(p) >= -1e-14) return 0.0;
    double theta = 1e-3;
    double last_neg = 0.0;
    while (g(theta) <= 0.0) {
        last_neg = theta;
        theta *= 2.0;
        if (theta > 1e6)
            throw std::runtime_error("eta_root: no sign change found up to theta = 1e6");
    }
    if (last_neg == 0.0) last_neg = 1e-9;  // root below the first probe
    const double root = find_root_bracketed(g, last_neg, theta, 1e-12);
    return root;
}

JumpLaw SpectralProfile::jump_law(double p) const {
    require_domain(p);
    JumpLaw law;
    law.tilt_p = p;
    if (measure_.kind() == DislocationMeasure::Kind::UniformBinary) {
        // m(dx) = 2 e^{-2x} dx by change of variables from the uniform
        // density on both parts; tilting multiplies by e^{-px}
        law.is_density = true;
        law.density_decay = p + 2.0;
        law.total_rate = 2.0 / (p + 2.0);
        return law;
    }
    std::vector<std::pair<double, double>> raw;
    for (const auto& atom : measure_.atoms())
        for (double s : atom.ratios)
            raw.emplace_back(-std::log(s), atom.weight * std::pow(s, p + 1.0));
    std::sort(raw.begin(), raw.end());
    for (const auto& [x, r] : raw) {
        if (!law.atoms.empty() && std::abs(law.atoms.back().first - x) < 1e-12)
            law.atoms.back().second += r;
        else
            law.atoms.emplace_back(x, r);
    }
    double cum = 0.0;
    for (const auto& [x, r] : law.atoms) {
        cum += r;
        law.cum_rates_.push_back(cum);
    }
    law.total_rate = cum;
    return law;
}

} // namespace fragwave
